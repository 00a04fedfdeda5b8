#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace btblab {

using Addr = std::uint64_t;

// Address-space shape of the modelled ISA. Aligned mode drops the low
// align_shift bits of every instruction address.
struct IsaProfile {
  int va_bits = 48;
  int align_shift = 2;

  static IsaProfile arm64() { return {48, 2}; }
  static IsaProfile x86() { return {48, 0}; }

  int max_stored_target_bits() const { return va_bits - align_shift; }
  bool aligned() const { return align_shift > 0; }
  // Size in bytes of the instruction following a call.
  Addr call_size() const { return aligned() ? Addr{1} << align_shift : 5; }

  void validate() const;
  bool valid_address(Addr a) const;

  bool operator==(const IsaProfile&) const = default;
};

std::string_view isa_name(const IsaProfile& isa);
IsaProfile parse_isa(std::string_view name);

enum class BranchKind : std::uint8_t {
  conditional = 0,
  unconditional_direct = 1,
  call = 2,
  ret = 3,
  indirect = 4,
  indirect_call = 5,
};

inline constexpr int kNumBranchKinds = 6;

std::string_view kind_name(BranchKind k);
std::optional<BranchKind> parse_kind(std::string_view name);

inline bool always_taken(BranchKind k) { return k != BranchKind::conditional; }
inline bool is_call(BranchKind k) {
  return k == BranchKind::call || k == BranchKind::indirect_call;
}

struct BranchRecord {
  Addr pc = 0;
  Addr target = 0;
  BranchKind kind = BranchKind::conditional;
  bool taken = false;
  std::uint16_t gap = 0;

  bool operator==(const BranchRecord&) const = default;
};

// Empty string when the record is well formed under isa.
std::string record_problem(const BranchRecord& r, const IsaProfile& isa);

struct OffsetEncoding {
  int stored_width = 0;
  std::uint64_t bits = 0;

  bool operator==(const OffsetEncoding&) const = default;
};

// Smallest stored width w such that the low w bits of (target >> align_shift),
// concatenated under the high bits of pc, rebuild target.
int required_offset_width(Addr pc, Addr target, const IsaProfile& isa);

OffsetEncoding encode_offset(Addr pc, Addr target, const IsaProfile& isa);

// Encoding of target truncated/extended to exactly `width` stored bits.
OffsetEncoding encode_offset_at_width(Addr target, int width, const IsaProfile& isa);

Addr decode_target(Addr pc, const OffsetEncoding& enc, const IsaProfile& isa);

// Width a BTB entry needs for this record. Returns take their target from the
// return address stack, so they never need offset bits.
int stored_width_for(const BranchRecord& r, const IsaProfile& isa);

// Fixed-capacity LIFO of return addresses. Pushing onto a full stack
// overwrites the oldest entry.
class ReturnAddressStack {
 public:
  static constexpr std::size_t kDefaultCapacity = 64;

  explicit ReturnAddressStack(std::size_t capacity = kDefaultCapacity);

  void push(Addr return_address);
  std::optional<Addr> pop();

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return size_ == 0; }
  std::uint64_t underflows() const { return underflows_; }
  std::uint64_t overflows() const { return overflows_; }
  void clear();

 private:
  std::vector<Addr> slots_;
  std::size_t top_ = 0;  // next slot to write
  std::size_t size_ = 0;
  std::uint64_t underflows_ = 0;
  std::uint64_t overflows_ = 0;
};

// XOR-fold value into `bits` bits. Used for partial tags.
std::uint64_t fold_xor(std::uint64_t value, int bits);

inline std::uint64_t low_mask(int bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace btblab
