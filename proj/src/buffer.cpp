#include "kernelprof/buffer.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <new>

#include "kernelprof/error.hpp"

namespace kprof {

std::size_t Buffer::offset_for(const double* raw, AlignmentPolicy policy) {
  const auto address = reinterpret_cast<std::uintptr_t>(raw);
  assert(address % sizeof(double) == 0);
  const std::size_t residue = address % 32;
  const std::size_t target = alignment_residue(policy);
  return ((target + 32 - residue) % 32) / sizeof(double);
}

Buffer::Buffer(std::size_t size, AlignmentPolicy policy) : size_(size), policy_(policy) {
  try {
    storage_.assign(size + kSlack, 0.0);
  } catch (const std::bad_alloc&) {
    throw Error(ErrorCode::AllocationFailure,
                "cannot allocate buffer of " + std::to_string(size) + " doubles");
  }
  offset_ = offset_for(storage_.data(), policy);
}

Buffer Buffer::from_values(std::span<const double> values, AlignmentPolicy policy) {
  Buffer buffer(values.size(), policy);
  std::copy(values.begin(), values.end(), buffer.data());
  return buffer;
}

Buffer Buffer::clone() const {
  Buffer copy(size_, policy_);
  std::copy_n(data(), size_, copy.data());
  return copy;
}

void Buffer::realign(AlignmentPolicy policy) {
  const std::size_t offset = offset_for(storage_.data(), policy);
  if (offset != offset_ && size_ > 0) {
    std::memmove(storage_.data() + offset, storage_.data() + offset_, size_ * sizeof(double));
  }
  offset_ = offset;
  policy_ = policy;
}

std::size_t Buffer::address_residue() const noexcept {
  return reinterpret_cast<std::uintptr_t>(data()) % 32;
}

}  // namespace kprof
