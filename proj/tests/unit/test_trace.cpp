#include <doctest.h>

#include <sstream>

#include "btblab/generator.hpp"
#include "btblab/trace.hpp"

using namespace btblab;

namespace {

TraceFile sample_trace(std::int64_t records, std::uint64_t seed = 5) {
  GeneratorSpec spec;
  spec.static_branches = 500;
  spec.records = records;
  spec.seed = seed;
  spec.taken_rate = 0.7;
  spec.pattern = AccessPattern::uniform;
  return generate(spec);
}

std::string to_bytes(const TraceFile& t, TraceFormat f = TraceFormat::binary) {
  std::ostringstream out(std::ios::binary);
  write_trace(out, t, f);
  return out.str();
}

TraceFile from_bytes(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_trace(in);
}

TraceErrorCode error_code(const std::string& bytes, std::int64_t* index = nullptr) {
  try {
    from_bytes(bytes);
  } catch (const TraceError& e) {
    if (index) *index = e.record_index();
    return e.code();
  }
  FAIL("expected a TraceError");
  return TraceErrorCode::io;
}

}  // namespace

TEST_CASE("binary round trip") {
  const auto t = sample_trace(2000);
  const auto bytes = to_bytes(t);
  CHECK(bytes.size() == kTraceHeaderBytes + 2000 * kTraceRecordBytes);
  CHECK(bytes.substr(0, 4) == "BTBT");
  const auto back = from_bytes(bytes);
  CHECK(back.isa == t.isa);
  CHECK(back.records == t.records);
  CHECK(to_bytes(back) == bytes);
}

TEST_CASE("json lines round trip") {
  const auto t = sample_trace(300);
  const auto text = to_bytes(t, TraceFormat::jsonl);
  CHECK(text.find("\"kind\":\"") != std::string::npos);
  const auto back = from_bytes(text);
  CHECK(back.records == t.records);
}

TEST_CASE("x86 traces keep byte addresses") {
  GeneratorSpec spec;
  spec.isa = IsaProfile::x86();
  spec.static_branches = 100;
  spec.records = 1000;
  const auto t = generate(spec);
  const auto back = from_bytes(to_bytes(t));
  CHECK(back.isa == IsaProfile::x86());
  CHECK(back.records == t.records);
}

TEST_CASE("one million records") {
  TraceFile t;
  t.records.reserve(1'000'000);
  for (Addr i = 0; i < 1'000'000; ++i) {
    t.records.push_back({0x400000 + 4 * (i % 4096), 0x500000 + 8 * (i % 333), BranchKind::conditional, (i % 3) != 0,
                         static_cast<std::uint16_t>(i % 17)});
  }
  const auto back = from_bytes(to_bytes(t));
  CHECK(back.records.size() == 1'000'000);
  CHECK(back.records == t.records);
}

TEST_CASE("parse errors") {
  const auto bytes = to_bytes(sample_trace(10));
  std::int64_t index = 0;

  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    CHECK(error_code(b, &index) == TraceErrorCode::bad_magic);
    CHECK(index == -1);
  }
  SUBCASE("bad version") {
    auto b = bytes;
    b[4] = 9;
    CHECK(error_code(b) == TraceErrorCode::bad_version);
  }
  SUBCASE("unknown isa mode") {
    auto b = bytes;
    b[5] = 7;
    CHECK(error_code(b) == TraceErrorCode::bad_header);
  }
  SUBCASE("truncated record") {
    const auto b = bytes.substr(0, bytes.size() - 5);
    CHECK(error_code(b, &index) == TraceErrorCode::truncated);
    CHECK(index == 9);
  }
  SUBCASE("misaligned pc in aligned mode") {
    auto b = bytes;
    b[kTraceHeaderBytes + 3 * kTraceRecordBytes] |= 0x2;
    CHECK(error_code(b, &index) == TraceErrorCode::bad_record);
    CHECK(index == 3);
  }
  SUBCASE("always-taken kind marked not taken") {
    TraceFile t;
    t.records.push_back({0x1000, 0x2000, BranchKind::call, true, 0});
    auto b = to_bytes(t);
    b[kTraceHeaderBytes + 17] = 0;
    CHECK(error_code(b, &index) == TraceErrorCode::bad_record);
    CHECK(index == 0);
  }
  SUBCASE("trailing bytes") {
    CHECK(error_code(bytes + "zz") == TraceErrorCode::trailing_data);
  }
  SUBCASE("json line with a bad address") {
    auto text = to_bytes(sample_trace(3), TraceFormat::jsonl);
    const auto pos = text.find("\"pc\":\"0x", text.find('\n'));
    text.replace(pos + 6, 2, "zz");
    CHECK(error_code(text, &index) == TraceErrorCode::bad_record);
    CHECK(index == 0);
  }
  SUBCASE("json with fewer records than declared") {
    auto text = to_bytes(sample_trace(3), TraceFormat::jsonl);
    text = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    CHECK(error_code(text, &index) == TraceErrorCode::truncated);
    CHECK(index == 2);
  }
}

TEST_CASE("generator determinism") {
  const auto a = to_bytes(sample_trace(5000, 42));
  const auto b = to_bytes(sample_trace(5000, 42));
  const auto c = to_bytes(sample_trace(5000, 43));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("generator width buckets") {
  GeneratorSpec spec;
  spec.static_branches = 100000;
  spec.records = 1;
  spec.widths = parse_width_buckets("0-6:0.54,7-10:0.22,11-25:0.23,26-46:0.01");
  spec.seed = 9;
  const auto statics = generate_static(spec);
  double buckets[4] = {};
  for (const auto& s : statics) {
    const int w = s.stored_width;
    buckets[w <= 6 ? 0 : w <= 10 ? 1 : w <= 25 ? 2 : 3] += 1.0 / static_cast<double>(statics.size());
    if (!s.targets.empty()) REQUIRE(required_offset_width(s.pc, s.targets[0], spec.isa) == w);
  }
  CHECK(std::abs(buckets[0] - 0.54) <= 0.015);
  CHECK(std::abs(buckets[1] - 0.22) <= 0.015);
  CHECK(std::abs(buckets[2] - 0.23) <= 0.015);
  CHECK(std::abs(buckets[3] - 0.01) <= 0.015);
}

TEST_CASE("all-return spec") {
  GeneratorSpec spec;
  spec.static_branches = 50;
  spec.records = 1000;
  spec.widths = parse_width_buckets("0:1");
  spec.kind_mix = parse_kind_mix("ret:1");
  const auto t = generate(spec);
  CHECK(t.records.size() == 1000);
  for (const auto& r : t.records) {
    REQUIRE(r.kind == BranchKind::ret);
    REQUIRE(stored_width_for(r, t.isa) == 0);
  }
}

TEST_CASE("generated records are valid and calls precede returns") {
  for (auto pattern : {AccessPattern::round_robin, AccessPattern::uniform, AccessPattern::zipf}) {
    for (const auto& isa : {IsaProfile::arm64(), IsaProfile::x86()}) {
      GeneratorSpec spec;
      spec.static_branches = 800;
      spec.records = 20000;
      spec.pattern = pattern;
      spec.isa = isa;
      spec.taken_rate = 0.6;
      spec.kind_mix = parse_kind_mix("cond:0.4,uncond:0.1,call:0.15,ret:0.25,ind:0.05,ind_call:0.05");
      spec.widths = parse_width_buckets("0-3:0.5,4-20:0.45,21-40:0.05");
      const auto t = generate(spec);
      REQUIRE(static_cast<std::int64_t>(t.records.size()) == spec.records);
      std::int64_t calls = 0, returns = 0;
      for (const auto& r : t.records) {
        REQUIRE(record_problem(r, isa).empty());
        calls += is_call(r.kind);
        returns += r.kind == BranchKind::ret;
        REQUIRE(returns <= calls);
      }
      CHECK(returns > 0);
    }
  }
}

TEST_CASE("generator spec validation") {
  GeneratorSpec spec;
  spec.widths = parse_width_buckets("0-30:0.5,31-47:0.5");
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.isa = IsaProfile::x86();
  CHECK_NOTHROW(spec.validate());
  spec.widths = parse_width_buckets("0-6:0.5,7-10:0.4");
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.widths = parse_width_buckets("0-6:0.5,6-10:0.5");
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = GeneratorSpec{};
  spec.static_branches = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = GeneratorSpec{};
  spec.kind_mix = parse_kind_mix("cond:0.5");
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_kind_mix("jump:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_width_buckets("0-6"), std::invalid_argument);
  CHECK_THROWS_AS(parse_width_buckets("a-6:1"), std::invalid_argument);
  CHECK(format_width_buckets(parse_width_buckets("0-6:0.54,7:0.46")) == "0-6:0.54,7:0.46");
}
