#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kprof {

enum class AlignmentPolicy {
  Aligned32,    ///< logical element 0 sits on a 32-byte boundary
  Misaligned8,  ///< logical element 0 sits at 8 (mod 32) bytes
};

/// Residue (in bytes, mod 32) that a policy imposes on the first logical element.
constexpr std::size_t alignment_residue(AlignmentPolicy policy) noexcept {
  return policy == AlignmentPolicy::Aligned32 ? 0 : 8;
}

/// Contiguous double storage whose logical array starts at a base offset
/// chosen to realize an alignment policy.
///
/// The raw region is over-allocated by kSlack elements. Any 8-byte aligned
/// address can be moved to any residue mod 32 by skipping at most three
/// elements, so both policies are realizable from the same allocation.
/// Moving a Buffer keeps its storage in place; copying is explicit (clone).
class Buffer {
 public:
  static constexpr std::size_t kSlack = 4;

  Buffer() = default;
  Buffer(std::size_t size, AlignmentPolicy policy);

  static Buffer from_values(std::span<const double> values, AlignmentPolicy policy);

  Buffer(Buffer&&) noexcept = default;
  Buffer& operator=(Buffer&&) noexcept = default;
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;

  Buffer clone() const;

  /// Shifts the logical array inside the same storage to satisfy `policy`.
  void realign(AlignmentPolicy policy);

  double* data() noexcept { return storage_.data() + offset_; }
  const double* data() const noexcept { return storage_.data() + offset_; }
  std::span<double> values() noexcept { return {data(), size_}; }
  std::span<const double> values() const noexcept { return {data(), size_}; }

  std::size_t size() const noexcept { return size_; }
  std::size_t bytes() const noexcept { return size_ * sizeof(double); }
  std::size_t base_offset() const noexcept { return offset_; }
  std::size_t capacity() const noexcept { return storage_.size(); }
  AlignmentPolicy policy() const noexcept { return policy_; }

  /// Byte address of the first logical element modulo 32.
  std::size_t address_residue() const noexcept;

 private:
  static std::size_t offset_for(const double* raw, AlignmentPolicy policy);

  std::vector<double> storage_;
  std::size_t size_ = 0;
  std::size_t offset_ = 0;
  AlignmentPolicy policy_ = AlignmentPolicy::Aligned32;
};

}  // namespace kprof
