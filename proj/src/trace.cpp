#include "btblab/trace.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

namespace btblab {

namespace {

void put_le(std::uint8_t* dst, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_le(const std::uint8_t* src, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{src[i]} << (8 * i);
  return v;
}

// Reads up to n bytes; returns how many arrived.
std::size_t read_some(std::istream& in, std::uint8_t* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

void check_record(const BranchRecord& r, const IsaProfile& isa, std::int64_t index) {
  if (auto problem = record_problem(r, isa); !problem.empty()) {
    throw TraceError(TraceErrorCode::bad_record, index, fmt::format("record {}: {}", index, problem));
  }
}

std::string hex(Addr a) { return fmt::format("{:#x}", a); }

Addr parse_hex(const nlohmann::json& v, std::int64_t index, const char* key) {
  if (!v.is_string()) {
    throw TraceError(TraceErrorCode::bad_record, index, fmt::format("record {}: {} must be a hex string", index, key));
  }
  const auto s = v.get<std::string>();
  std::size_t used = 0;
  Addr a = 0;
  try {
    a = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw TraceError(TraceErrorCode::bad_record, index, fmt::format("record {}: bad {} '{}'", index, key, s));
  }
  return a;
}

void write_binary(std::ostream& out, const TraceFile& trace) {
  std::array<std::uint8_t, kTraceHeaderBytes> header{};
  std::memcpy(header.data(), kTraceMagic, 4);
  header[4] = kTraceVersion;
  header[5] = isa_mode_code(trace.isa);
  put_le(header.data() + 8, trace.records.size(), 8);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  std::array<std::uint8_t, kTraceRecordBytes> rec{};
  for (const auto& r : trace.records) {
    rec.fill(0);
    put_le(rec.data(), r.pc, 8);
    put_le(rec.data() + 8, r.target, 8);
    rec[16] = static_cast<std::uint8_t>(r.kind);
    rec[17] = r.taken ? 1 : 0;
    put_le(rec.data() + 18, r.gap, 2);
    out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
}

void write_jsonl(std::ostream& out, const TraceFile& trace) {
  nlohmann::ordered_json header;
  header["format"] = "btbt-jsonl";
  header["version"] = kTraceVersion;
  header["isa_mode"] = isa_mode_code(trace.isa);
  header["record_count"] = trace.records.size();
  out << header.dump() << '\n';
  for (const auto& r : trace.records) {
    nlohmann::ordered_json j;
    j["pc"] = hex(r.pc);
    j["target"] = hex(r.target);
    j["kind"] = kind_name(r.kind);
    j["taken"] = r.taken;
    j["gap"] = r.gap;
    out << j.dump() << '\n';
  }
}

TraceFile read_binary(std::istream& in) {
  std::array<std::uint8_t, kTraceHeaderBytes> header{};
  if (read_some(in, header.data(), header.size()) != header.size()) {
    throw TraceError(TraceErrorCode::truncated, -1, "trace header truncated");
  }
  if (std::memcmp(header.data(), kTraceMagic, 4) != 0) {
    throw TraceError(TraceErrorCode::bad_magic, -1, "not a BTBT trace (bad magic)");
  }
  if (header[4] != kTraceVersion) {
    throw TraceError(TraceErrorCode::bad_version, -1, fmt::format("unsupported trace version {}", header[4]));
  }
  TraceFile trace;
  try {
    trace.isa = isa_from_mode_code(header[5]);
  } catch (const std::invalid_argument& e) {
    throw TraceError(TraceErrorCode::bad_header, -1, e.what());
  }
  if (get_le(header.data() + 6, 2) != 0) {
    throw TraceError(TraceErrorCode::bad_header, -1, "reserved header bytes are not zero");
  }
  const std::uint64_t count = get_le(header.data() + 8, 8);

  std::array<std::uint8_t, kTraceRecordBytes> rec{};
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto index = static_cast<std::int64_t>(i);
    if (read_some(in, rec.data(), rec.size()) != rec.size()) {
      throw TraceError(TraceErrorCode::truncated, index,
                       fmt::format("record {} truncated (header promises {})", i, count));
    }
    if (rec[16] >= kNumBranchKinds || rec[17] > 1) {
      throw TraceError(TraceErrorCode::bad_record, index, fmt::format("record {}: bad kind/taken byte", i));
    }
    BranchRecord r;
    r.pc = get_le(rec.data(), 8);
    r.target = get_le(rec.data() + 8, 8);
    r.kind = static_cast<BranchKind>(rec[16]);
    r.taken = rec[17] != 0;
    r.gap = static_cast<std::uint16_t>(get_le(rec.data() + 18, 2));
    check_record(r, trace.isa, index);
    trace.records.push_back(r);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw TraceError(TraceErrorCode::trailing_data, static_cast<std::int64_t>(count),
                     "data after the last record");
  }
  return trace;
}

TraceFile read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceError(TraceErrorCode::truncated, -1, "empty trace");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw TraceError(TraceErrorCode::bad_header, -1, fmt::format("bad header line: {}", e.what()));
  }
  if (!header.is_object() || header.value("format", "") != "btbt-jsonl") {
    throw TraceError(TraceErrorCode::bad_magic, -1, "not a BTBT JSON-lines trace");
  }
  if (header.value("version", 0) != kTraceVersion) {
    throw TraceError(TraceErrorCode::bad_version, -1, "unsupported trace version");
  }
  TraceFile trace;
  std::uint64_t count = 0;
  try {
    trace.isa = isa_from_mode_code(header.at("isa_mode").get<std::uint8_t>());
    count = header.at("record_count").get<std::uint64_t>();
  } catch (const std::exception& e) {
    throw TraceError(TraceErrorCode::bad_header, -1, fmt::format("bad header: {}", e.what()));
  }

  std::int64_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (static_cast<std::uint64_t>(index) >= count) {
      throw TraceError(TraceErrorCode::trailing_data, index, "more records than the header declares");
    }
    BranchRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      r.pc = parse_hex(j.at("pc"), index, "pc");
      r.target = parse_hex(j.at("target"), index, "target");
      const auto kind = parse_kind(j.at("kind").get<std::string>());
      if (!kind) throw TraceError(TraceErrorCode::bad_record, index, fmt::format("record {}: unknown kind", index));
      r.kind = *kind;
      r.taken = j.at("taken").get<bool>();
      r.gap = j.at("gap").get<std::uint16_t>();
    } catch (const nlohmann::json::exception& e) {
      throw TraceError(TraceErrorCode::bad_record, index, fmt::format("record {}: {}", index, e.what()));
    }
    check_record(r, trace.isa, index);
    trace.records.push_back(r);
    ++index;
  }
  if (static_cast<std::uint64_t>(index) != count) {
    throw TraceError(TraceErrorCode::truncated, index,
                     fmt::format("trace ends after {} of {} records", index, count));
  }
  return trace;
}

}  // namespace

TraceError::TraceError(TraceErrorCode code, std::int64_t record_index, const std::string& what)
    : std::runtime_error(what), code_(code), record_index_(record_index) {}

std::uint8_t isa_mode_code(const IsaProfile& isa) {
  if (isa == IsaProfile::arm64()) return 0;
  if (isa == IsaProfile::x86()) return 1;
  throw std::invalid_argument("trace files only carry the arm64 and x86 profiles");
}

IsaProfile isa_from_mode_code(std::uint8_t code) {
  switch (code) {
    case 0: return IsaProfile::arm64();
    case 1: return IsaProfile::x86();
    default: throw std::invalid_argument(fmt::format("unknown isa_mode {}", code));
  }
}

void write_trace(std::ostream& out, const TraceFile& trace, TraceFormat format) {
  if (format == TraceFormat::binary) {
    write_binary(out, trace);
  } else {
    write_jsonl(out, trace);
  }
}

TraceFile read_trace(std::istream& in) {
  const int first = in.peek();
  if (first == '{') return read_jsonl(in);
  return read_binary(in);
}

TraceFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension();
  return ext == ".jsonl" || ext == ".json" ? TraceFormat::jsonl : TraceFormat::binary;
}

void write_trace(const std::filesystem::path& path, const TraceFile& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceError(TraceErrorCode::io, -1, fmt::format("cannot write {}", path.string()));
  write_trace(out, trace, format_for_path(path));
  if (!out) throw TraceError(TraceErrorCode::io, -1, fmt::format("write to {} failed", path.string()));
}

TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError(TraceErrorCode::io, -1, fmt::format("cannot open {}", path.string()));
  return read_trace(in);
}

}  // namespace btblab
