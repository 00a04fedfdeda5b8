#include "btblab/core.hpp"

#include <algorithm>
#include <array>
#include <bit>

#include <fmt/core.h>

namespace btblab {

void IsaProfile::validate() const {
  if (va_bits < 32 || va_bits > 64) {
    throw std::invalid_argument(fmt::format("va_bits {} outside [32, 64]", va_bits));
  }
  if (align_shift < 0 || align_shift > 2) {
    throw std::invalid_argument(fmt::format("align_shift {} outside [0, 2]", align_shift));
  }
}

bool IsaProfile::valid_address(Addr a) const {
  if (va_bits < 64 && (a >> va_bits) != 0) return false;
  return (a & low_mask(align_shift)) == 0;
}

std::string_view isa_name(const IsaProfile& isa) {
  if (isa == IsaProfile::arm64()) return "arm64";
  if (isa == IsaProfile::x86()) return "x86";
  return "custom";
}

IsaProfile parse_isa(std::string_view name) {
  if (name == "arm64" || name == "aligned" || name == "aligned-4") return IsaProfile::arm64();
  if (name == "x86" || name == "byte") return IsaProfile::x86();
  throw std::invalid_argument(fmt::format("unknown isa '{}' (expected arm64 or x86)", name));
}

namespace {
constexpr std::array<std::string_view, kNumBranchKinds> kKindNames = {
    "cond", "uncond", "call", "ret", "ind", "ind_call"};
}

std::string_view kind_name(BranchKind k) {
  return kKindNames.at(static_cast<std::size_t>(k));
}

std::optional<BranchKind> parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<BranchKind>(i);
  }
  if (name == "conditional") return BranchKind::conditional;
  if (name == "unconditional" || name == "unconditional_direct") return BranchKind::unconditional_direct;
  if (name == "return") return BranchKind::ret;
  if (name == "indirect") return BranchKind::indirect;
  if (name == "indirect_call") return BranchKind::indirect_call;
  return std::nullopt;
}

std::string record_problem(const BranchRecord& r, const IsaProfile& isa) {
  if (static_cast<int>(r.kind) >= kNumBranchKinds) return "invalid branch kind";
  if (always_taken(r.kind) && !r.taken) {
    return fmt::format("{} branch marked not taken", kind_name(r.kind));
  }
  if (!isa.valid_address(r.pc)) return fmt::format("invalid pc {:#x}", r.pc);
  if (!isa.valid_address(r.target)) return fmt::format("invalid target {:#x}", r.target);
  return {};
}

int required_offset_width(Addr pc, Addr target, const IsaProfile& isa) {
  const Addr diff = pc ^ target;
  if (diff == 0) return 0;
  const int n = std::bit_width(diff);  // 1-based position of the highest differing bit
  return std::max(n - isa.align_shift, 0);
}

OffsetEncoding encode_offset_at_width(Addr target, int width, const IsaProfile& isa) {
  return {width, (target >> isa.align_shift) & low_mask(width)};
}

OffsetEncoding encode_offset(Addr pc, Addr target, const IsaProfile& isa) {
  return encode_offset_at_width(target, required_offset_width(pc, target, isa), isa);
}

Addr decode_target(Addr pc, const OffsetEncoding& enc, const IsaProfile& isa) {
  const int n = enc.stored_width + isa.align_shift;
  const Addr mask = low_mask(n);
  return (pc & ~mask) | ((enc.bits << isa.align_shift) & mask);
}

int stored_width_for(const BranchRecord& r, const IsaProfile& isa) {
  if (r.kind == BranchKind::ret) return 0;
  return required_offset_width(r.pc, r.target, isa);
}

ReturnAddressStack::ReturnAddressStack(std::size_t capacity) : slots_(capacity, 0) {
  if (capacity == 0) throw std::invalid_argument("return address stack capacity must be positive");
}

void ReturnAddressStack::push(Addr return_address) {
  slots_[top_] = return_address;
  top_ = (top_ + 1) % slots_.size();
  if (size_ == slots_.size()) {
    ++overflows_;
  } else {
    ++size_;
  }
}

std::optional<Addr> ReturnAddressStack::pop() {
  if (size_ == 0) {
    ++underflows_;
    return std::nullopt;
  }
  top_ = (top_ + slots_.size() - 1) % slots_.size();
  --size_;
  return slots_[top_];
}

void ReturnAddressStack::clear() {
  std::fill(slots_.begin(), slots_.end(), 0);
  top_ = size_ = 0;
  underflows_ = overflows_ = 0;
}

std::uint64_t fold_xor(std::uint64_t value, int bits) {
  if (bits <= 0) return 0;
  if (bits >= 64) return value;
  std::uint64_t out = 0;
  while (value != 0) {
    out ^= value & low_mask(bits);
    value >>= bits;
  }
  return out;
}

}  // namespace btblab
