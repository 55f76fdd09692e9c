#include "kernelprof/boundary.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>

#include "kernelprof/detail/kernel_impl.hpp"
#include "kernelprof/error.hpp"

namespace kprof {

// ---------------------------------------------------------------------------
// Regions

NativeRegion::NativeRegion(std::size_t capacity_bytes) {
  if (capacity_bytes == 0) return;
  const std::size_t rounded = (capacity_bytes + 31) / 32 * 32;
  base_ = static_cast<std::byte*>(std::aligned_alloc(32, rounded));
  if (base_ == nullptr) {
    throw Error(ErrorCode::AllocationFailure,
                "cannot allocate native region of " + std::to_string(rounded) + " bytes");
  }
  capacity_ = rounded;
}

NativeRegion::~NativeRegion() { free(); }

NativeRegion::NativeRegion(NativeRegion&& other) noexcept
    : base_(std::exchange(other.base_, nullptr)), capacity_(std::exchange(other.capacity_, 0)) {}

NativeRegion& NativeRegion::operator=(NativeRegion&& other) noexcept {
  if (this != &other) {
    free();
    base_ = std::exchange(other.base_, nullptr);
    capacity_ = std::exchange(other.capacity_, 0);
  }
  return *this;
}

void NativeRegion::free() noexcept {
  std::free(base_);
  base_ = nullptr;
  capacity_ = 0;
}

std::size_t RegionArena::bytes_for(std::span<const std::size_t> element_counts) {
  std::size_t total = 0;
  for (std::size_t count : element_counts) total += count * sizeof(double) + 64;
  return total;
}

double* RegionArena::place(std::size_t count, AlignmentPolicy policy) {
  const std::size_t start = (used_ + 31) / 32 * 32 + alignment_residue(policy);
  const std::size_t end = start + count * sizeof(double);
  if (end > region_->capacity()) {
    throw Error(ErrorCode::ScratchExhausted, "scratch region exhausted: need " + std::to_string(end) +
                                                 " bytes, have " + std::to_string(region_->capacity()));
  }
  used_ = end;
  return reinterpret_cast<double*>(region_->base() + start);
}

// ---------------------------------------------------------------------------
// Function table

const FunctionTable::Callback FunctionTable::kArrayCallbacks[kSlotCount] = {
    &FunctionTable::pin_callback, &FunctionTable::release_callback, &FunctionTable::query_callback};

FunctionTable::FunctionTable(PinMode mode, std::size_t scratch_bytes)
    : mode_(mode), scratch_(mode == PinMode::Copy ? scratch_bytes : 0), arena_(scratch_) {
  outstanding_.reserve(4);
}

__attribute__((noinline)) void FunctionTable::dispatch(std::size_t table, Slot slot, Frame& frame) {
  const Callback* entries = tables_[table];
  asm volatile("" : "+r"(entries));
  const Callback callback = entries[slot];
  counters_.callbacks += 1;
  counters_.indirections += 2;
  callback(*this, frame);
}

void FunctionTable::pin_callback(FunctionTable& self, Frame& frame) {
  Buffer* buffer = frame.buffer;
  for (const auto& entry : self.outstanding_) {
    if (entry.buffer == buffer) {
      throw Error(ErrorCode::DoublePin, "buffer is already pinned (descriptor " + std::to_string(entry.id) + ")");
    }
  }
  double* address = buffer->data();
  if (self.mode_ == PinMode::Copy) {
    address = self.arena_.place(buffer->size(), buffer->policy());
    std::memcpy(address, buffer->data(), buffer->bytes());
    self.counters_.bytes_moved += buffer->bytes();
  }
  const std::uint64_t id = self.next_id_++;
  self.outstanding_.push_back({id, buffer, address});
  frame.descriptor = {address, buffer->size(), id};
}

void FunctionTable::release_callback(FunctionTable& self, Frame& frame) {
  const auto& descriptor = frame.descriptor;
  auto it = std::find_if(self.outstanding_.begin(), self.outstanding_.end(), [&](const Outstanding& entry) {
    return entry.id == descriptor.id && entry.address == descriptor.address;
  });
  if (it == self.outstanding_.end()) {
    throw Error(ErrorCode::UnknownDescriptor,
                "release of unknown descriptor " + std::to_string(descriptor.id));
  }
  if (self.mode_ == PinMode::Copy) {
    std::memcpy(it->buffer->data(), it->address, it->buffer->bytes());
    self.counters_.bytes_moved += it->buffer->bytes();
  }
  *it = self.outstanding_.back();
  self.outstanding_.pop_back();
  if (self.outstanding_.empty()) self.arena_.reset();
}

void FunctionTable::query_callback(FunctionTable&, Frame& frame) { frame.length = frame.buffer->size(); }

PinnedDescriptor pin(FunctionTable& table, Buffer& buffer) {
  FunctionTable::Frame frame;
  frame.buffer = &buffer;
  table.dispatch(FunctionTable::kArrayTable, FunctionTable::kPin, frame);
  return frame.descriptor;
}

void release(FunctionTable& table, const PinnedDescriptor& descriptor) {
  FunctionTable::Frame frame;
  frame.descriptor = descriptor;
  table.dispatch(FunctionTable::kArrayTable, FunctionTable::kRelease, frame);
}

std::size_t query_length(FunctionTable& table, Buffer& buffer) {
  FunctionTable::Frame frame;
  frame.buffer = &buffer;
  table.dispatch(FunctionTable::kArrayTable, FunctionTable::kQuery, frame);
  return frame.length;
}

// ---------------------------------------------------------------------------
// Measurement loops, one instantiation per (kernel, variant, path family)

struct LoopContext {
  detail::KernelArgs args;
  FunctionTable* table = nullptr;
  std::array<Buffer*, 3> arrays{};
  void* symbol = nullptr;
  double result = 0.0;
  std::uint64_t hops = 0;
};

namespace {

using LoopFn = void (*)(LoopContext&, std::uint64_t);

template <KernelId K>
constexpr std::size_t kArrayCount = K == KernelId::ArrayAddition ? 2 : K == KernelId::HorizontalSum ? 1 : 3;

// Same argument order as KernelBuffers::arrays().
template <KernelId K>
KPROF_INLINE void bind_pinned(detail::KernelArgs& args, const PinnedDescriptor* d) {
  if constexpr (K == KernelId::ArrayAddition) {
    args.a = d[0].address;
    args.b = d[1].address;
  } else if constexpr (K == KernelId::HorizontalSum) {
    args.a = d[0].address;
  } else {
    args.coeffs = d[0].address;
    args.a = d[1].address;
    args.y = d[2].address;
  }
}

template <KernelId K, VariantId V>
void scalar_inlined_loop(LoopContext& ctx, std::uint64_t iterations) {
  const detail::KernelArgs args = ctx.args;
  double last = 0.0;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    last = detail::apply_scalar<K, V>(args);
    detail::keep(last);
  }
  ctx.result = last;
}

#if KPROF_HAVE_VECTOR
template <KernelId K, VariantId V>
KPROF_AVX void vector_inlined_loop(LoopContext& ctx, std::uint64_t iterations) {
  const detail::KernelArgs args = ctx.args;
  double last = 0.0;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    last = detail::apply_vector<K, V>(args);
    detail::keep(last);
  }
  ctx.result = last;
}
#endif

template <KernelId K, VariantId V>
void outlined_loop(LoopContext& ctx, std::uint64_t iterations) {
  constexpr detail::KernelEntry entry = detail::entry_for<K, V>();
  detail::KernelArgs args = ctx.args;
  double last = 0.0;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    detail::escape(&args);
    last = entry(args);
  }
  ctx.result = last;
}

template <KernelId K, VariantId V>
void callback_loop(LoopContext& ctx, std::uint64_t iterations) {
  constexpr detail::KernelEntry entry = detail::entry_for<K, V>();
  constexpr std::size_t count = kArrayCount<K>;
  FunctionTable& table = *ctx.table;
  detail::KernelArgs args = ctx.args;
  double last = 0.0;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    PinnedDescriptor pinned[count];
    for (std::size_t a = 0; a < count; ++a) pinned[a] = pin(table, *ctx.arrays[a]);
    bind_pinned<K>(args, pinned);
    detail::escape(&args);
    last = entry(args);
    for (std::size_t a = count; a-- > 0;) release(table, pinned[a]);
  }
  ctx.result = last;
}

using ArrayAddAbi = void (*)(double*, const double*, std::uint64_t);
using ReduceAbi = double (*)(const double*, std::uint64_t);
using HornerAbi = void (*)(const double*, const double*, double*, std::uint64_t);

// The wrapper half of a two-call native invocation.
template <KernelId K>
KPROF_NOIPA double dynamic_hop(void* symbol, const detail::KernelArgs& args) {
  if constexpr (K == KernelId::ArrayAddition) {
    reinterpret_cast<ArrayAddAbi>(symbol)(args.a, args.b, args.n);
    return 0.0;
  } else if constexpr (K == KernelId::HorizontalSum) {
    return reinterpret_cast<ReduceAbi>(symbol)(args.a, args.n);
  } else {
    reinterpret_cast<HornerAbi>(symbol)(args.coeffs, args.a, args.y, args.n);
    return 0.0;
  }
}

template <KernelId K>
void dynamic_loop(LoopContext& ctx, std::uint64_t iterations) {
  detail::KernelArgs args = ctx.args;
  void* symbol = ctx.symbol;
  double last = 0.0;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    detail::escape(&args);
    last = dynamic_hop<K>(symbol, args);
  }
  ctx.hops += iterations;
  ctx.result = last;
}

template <KernelId K, VariantId V>
LoopFn select_loop(CallPathId path) {
  if constexpr (detail::entry_for<K, V>() == nullptr) {
    return nullptr;
  } else {
    switch (path) {
      case CallPathId::Inlined:
        if constexpr (is_vector(V)) {
#if KPROF_HAVE_VECTOR
          return &vector_inlined_loop<K, V>;
#else
          return nullptr;
#endif
        } else {
          return &scalar_inlined_loop<K, V>;
        }
      case CallPathId::Outlined:
      case CallPathId::NativeMemoryDirect:
        return &outlined_loop<K, V>;
      case CallPathId::CallbackPinned:
      case CallPathId::CallbackCopy:
        return &callback_loop<K, V>;
      case CallPathId::DynamicSymbol:
        return &dynamic_loop<K>;
    }
    return nullptr;
  }
}

std::vector<std::size_t> array_sizes(KernelBuffers& buffers) {
  std::vector<std::size_t> sizes;
  for (const Buffer* buffer : buffers.arrays()) sizes.push_back(buffer->size());
  return sizes;
}

}  // namespace

// ---------------------------------------------------------------------------
// Call sites

std::optional<std::string> path_unavailable_reason(CallPathId path, KernelId kernel, VariantId variant,
                                                   const NativeLibrary* library) {
  if (path != CallPathId::DynamicSymbol) return std::nullopt;
  if (library == nullptr) return std::string("native library not loaded");
  if (is_vector(variant) && !library->has_vect()) return std::string("native library reports no vector support");
  if (library->symbol(kernel, variant) == nullptr) {
    return "native library does not export " + native_symbol_name(kernel, variant);
  }
  return std::nullopt;
}

std::vector<PathAvailability> list_call_paths(const NativeLibrary* library, std::string_view missing_reason) {
  std::vector<PathAvailability> out;
  for (CallPathId path : kAllCallPaths) {
    if (path == CallPathId::DynamicSymbol && library == nullptr) {
      out.push_back({path, false, std::string(missing_reason)});
    } else {
      out.push_back({path, true, {}});
    }
  }
  return out;
}

CallSite::CallSite(CallPathId path, VariantId variant, KernelBuffers& buffers, const NativeLibrary* library)
    : path_(path), variant_(variant), buffers_(&buffers), ctx_(std::make_unique<LoopContext>()) {
  check_runnable(variant, buffers);
  if (auto reason = path_unavailable_reason(path, buffers.kernel, variant, library)) {
    throw Error(ErrorCode::PathUnavailable, std::string(to_string(path)) + ": " + *reason);
  }
  if (path == CallPathId::DynamicSymbol && is_horner(buffers.kernel) && buffers.degree() != kHornerDegree) {
    throw Error(ErrorCode::InvalidArgument, "the native Horner ABI fixes the degree at 64");
  }

  ctx_->args = detail::bind_args(buffers);
  auto arrays = buffers.arrays();
  std::copy(arrays.begin(), arrays.end(), ctx_->arrays.begin());

  switch (path) {
    case CallPathId::CallbackPinned:
      table_ = std::make_unique<FunctionTable>(PinMode::Pinned);
      ctx_->table = table_.get();
      break;
    case CallPathId::CallbackCopy: {
      const auto sizes = array_sizes(buffers);
      table_ = std::make_unique<FunctionTable>(PinMode::Copy, RegionArena::bytes_for(sizes));
      ctx_->table = table_.get();
      break;
    }
    case CallPathId::NativeMemoryDirect: {
      const auto sizes = array_sizes(buffers);
      native_ = NativeRegion(RegionArena::bytes_for(sizes));
      RegionArena arena(native_);
      PinnedDescriptor placed[3];
      for (std::size_t i = 0; i < arrays.size(); ++i) {
        Buffer* buffer = arrays[i];
        double* address = arena.place(buffer->size(), buffer->policy());
        std::memcpy(address, buffer->data(), buffer->bytes());
        native_copies_.emplace_back(address, buffer);
        placed[i] = {address, buffer->size(), 0};
      }
      switch (buffers.kernel) {
        case KernelId::ArrayAddition: bind_pinned<KernelId::ArrayAddition>(ctx_->args, placed); break;
        case KernelId::HorizontalSum: bind_pinned<KernelId::HorizontalSum>(ctx_->args, placed); break;
        default: bind_pinned<KernelId::HornerData1st>(ctx_->args, placed); break;
      }
      break;
    }
    case CallPathId::DynamicSymbol:
      ctx_->symbol = library->symbol(buffers.kernel, variant);
      break;
    default:
      break;
  }

  loop_ = detail::with_kernel_variant(buffers.kernel, variant,
                                      [&]<KernelId K, VariantId V>() { return select_loop<K, V>(path); });
  if (loop_ == nullptr) {
    throw Error(ErrorCode::VariantUnavailable,
                std::string(to_string(variant)) + " is not compiled into this build");
  }
}

CallSite::~CallSite() = default;

void CallSite::run(std::uint64_t iterations) { loop_(*ctx_, iterations); }

KernelOutput CallSite::output() {
  for (auto& [address, buffer] : native_copies_) std::memcpy(buffer->data(), address, buffer->bytes());
  return collect_output(*buffers_, buffers_->kernel == KernelId::HorizontalSum ? std::optional(ctx_->result)
                                                                                : std::nullopt);
}

BoundaryCounters CallSite::counters() const {
  BoundaryCounters counters = table_ ? table_->counters() : BoundaryCounters{};
  counters.hops = ctx_->hops;
  return counters;
}

void CallSite::reset_counters() {
  if (table_) table_->reset_counters();
  ctx_->hops = 0;
}

std::vector<const double*> CallSite::data_addresses() const {
  std::vector<const double*> out;
  for (const double* p : {static_cast<const double*>(ctx_->args.a), ctx_->args.b, ctx_->args.coeffs,
                          static_cast<const double*>(ctx_->args.y)}) {
    if (p != nullptr) out.push_back(p);
  }
  return out;
}

KernelOutput invoke(CallPathId path, VariantId variant, KernelBuffers& buffers, const NativeLibrary* library,
                    BoundaryCounters* counters) {
  CallSite site(path, variant, buffers, library);
  site.run(1);
  if (counters != nullptr) *counters = site.counters();
  return site.output();
}

}  // namespace kprof
