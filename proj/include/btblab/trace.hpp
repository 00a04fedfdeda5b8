#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "btblab/core.hpp"

namespace btblab {

// Binary layout (little-endian):
//   header (16 bytes): "BTBT", version u8 = 1, isa_mode u8 (0 aligned-4,
//                      1 byte), reserved u16 = 0, record_count u64
//   record (32 bytes): pc u64, target u64, kind u8, taken u8, gap u16,
//                      pad u32 = 0, reserved u64 = 0
// Text layout: JSON lines; a header object followed by one object per record
// with keys pc, target (hex strings), kind, taken, gap.
inline constexpr char kTraceMagic[4] = {'B', 'T', 'B', 'T'};
inline constexpr std::uint8_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 16;
inline constexpr std::size_t kTraceRecordBytes = 32;

enum class TraceFormat { binary, jsonl };

struct TraceFile {
  IsaProfile isa = IsaProfile::arm64();
  std::vector<BranchRecord> records;
};

std::uint8_t isa_mode_code(const IsaProfile& isa);
IsaProfile isa_from_mode_code(std::uint8_t code);

enum class TraceErrorCode {
  io,
  bad_magic,
  bad_version,
  bad_header,
  truncated,
  bad_record,
  trailing_data,
};

// Parse failure. record_index is -1 for header-level problems.
class TraceError : public std::runtime_error {
 public:
  TraceError(TraceErrorCode code, std::int64_t record_index, const std::string& what);
  TraceErrorCode code() const { return code_; }
  std::int64_t record_index() const { return record_index_; }

 private:
  TraceErrorCode code_;
  std::int64_t record_index_;
};

void write_trace(std::ostream& out, const TraceFile& trace, TraceFormat format = TraceFormat::binary);
TraceFile read_trace(std::istream& in);  // format detected from the first bytes

// Format chosen from the extension (.jsonl / .json → text, otherwise binary).
TraceFormat format_for_path(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const TraceFile& trace);
TraceFile read_trace(const std::filesystem::path& path);

}  // namespace btblab
