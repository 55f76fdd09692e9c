#pragma once

// Invocation regimes around a kernel variant.
//
//   Inlined            kernel body fused into the caller's loop
//   Outlined           one real, non-inlinable call per invocation
//   DynamicSymbol      wrapper hop into a function resolved from a shared library
//   CallbackPinned     pin/release callbacks through a two-level function table
//   CallbackCopy       as above, but pin copies into a scratch region and release copies back
//   NativeMemoryDirect outlined call on a region allocated outside the buffer pool
//
// All paths run the same kernel code (or, for DynamicSymbol, the library's
// implementation of the same symbol), so outputs are identical; only the cost
// around the call differs.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kernelprof/buffer.hpp"
#include "kernelprof/kernels.hpp"

namespace kprof {

enum class CallPathId { Inlined, Outlined, DynamicSymbol, CallbackPinned, CallbackCopy, NativeMemoryDirect };

inline constexpr std::array kAllCallPaths{CallPathId::Inlined,        CallPathId::Outlined,
                                          CallPathId::DynamicSymbol,  CallPathId::CallbackPinned,
                                          CallPathId::CallbackCopy,   CallPathId::NativeMemoryDirect};

/// Paths that run entirely in-process (no shared library needed).
inline constexpr std::array kInProcessCallPaths{CallPathId::Inlined, CallPathId::Outlined,
                                                CallPathId::CallbackPinned, CallPathId::CallbackCopy,
                                                CallPathId::NativeMemoryDirect};

std::string_view to_string(CallPathId path) noexcept;
std::optional<CallPathId> parse_call_path(std::string_view text);

/// Allocation outside the harness's buffers. 32-byte aligned, never moves,
/// released by free() or on destruction.
class NativeRegion {
 public:
  NativeRegion() = default;
  explicit NativeRegion(std::size_t capacity_bytes);
  ~NativeRegion();

  NativeRegion(NativeRegion&& other) noexcept;
  NativeRegion& operator=(NativeRegion&& other) noexcept;
  NativeRegion(const NativeRegion&) = delete;
  NativeRegion& operator=(const NativeRegion&) = delete;

  void free() noexcept;

  std::byte* base() const noexcept { return base_; }
  std::size_t capacity() const noexcept { return capacity_; }
  bool aligned32() const noexcept { return reinterpret_cast<std::uintptr_t>(base_) % 32 == 0; }

 private:
  std::byte* base_ = nullptr;
  std::size_t capacity_ = 0;
};

/// Bump placement of double arrays inside a NativeRegion, preserving each
/// array's alignment residue.
class RegionArena {
 public:
  explicit RegionArena(NativeRegion& region) : region_(&region) {}

  /// Bytes needed to place arrays of the given sizes (slack included).
  static std::size_t bytes_for(std::span<const std::size_t> element_counts);

  double* place(std::size_t count, AlignmentPolicy policy);
  void reset() noexcept { used_ = 0; }
  std::size_t used() const noexcept { return used_; }

 private:
  NativeRegion* region_;
  std::size_t used_ = 0;
};

struct PinnedDescriptor {
  double* address = nullptr;
  std::size_t length = 0;
  std::uint64_t id = 0;
};

enum class PinMode { Pinned, Copy };

struct BoundaryCounters {
  std::uint64_t callbacks = 0;
  std::uint64_t indirections = 0;  ///< dependent loads performed to reach callbacks
  std::uint64_t bytes_moved = 0;   ///< copy-mode traffic, both directions
  std::uint64_t hops = 0;          ///< wrapper-to-library calls (DynamicSymbol)
};

/// Callback environment modelled on a managed runtime's native interface:
/// callbacks live in a table of tables, and every dispatch loads the table
/// pointer, then the function pointer, then calls it. Nothing is cached at
/// call sites.
///
/// One outstanding invocation per table; not thread-safe.
class FunctionTable {
 public:
  enum Slot : std::size_t { kPin = 0, kRelease = 1, kQuery = 2, kSlotCount = 3 };
  static constexpr std::size_t kArrayTable = 0;
  static constexpr std::size_t kTableCount = 1;

  struct Frame {
    Buffer* buffer = nullptr;
    PinnedDescriptor descriptor;
    std::size_t length = 0;
  };
  using Callback = void (*)(FunctionTable&, Frame&);

  explicit FunctionTable(PinMode mode = PinMode::Pinned, std::size_t scratch_bytes = 0);

  FunctionTable(const FunctionTable&) = delete;
  FunctionTable& operator=(const FunctionTable&) = delete;

  /// Two dependent loads, then an indirect call. Counted.
  void dispatch(std::size_t table, Slot slot, Frame& frame);

  PinMode mode() const noexcept { return mode_; }
  const BoundaryCounters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = {}; }
  std::size_t outstanding() const noexcept { return outstanding_.size(); }
  std::size_t scratch_capacity() const noexcept { return scratch_.capacity(); }

 private:
  struct Outstanding {
    std::uint64_t id;
    Buffer* buffer;
    double* address;
  };

  static void pin_callback(FunctionTable& self, Frame& frame);
  static void release_callback(FunctionTable& self, Frame& frame);
  static void query_callback(FunctionTable& self, Frame& frame);
  static const Callback kArrayCallbacks[kSlotCount];

  // Table of tables, held in the object like a runtime environment's
  // function-table pointer: tables_[t] is load one, tables_[t][slot] load two.
  std::array<const Callback*, kTableCount> tables_{kArrayCallbacks};
  PinMode mode_;
  NativeRegion scratch_;
  RegionArena arena_;
  std::vector<Outstanding> outstanding_;
  std::uint64_t next_id_ = 1;
  BoundaryCounters counters_;
};

/// Obtains a direct address for `buffer` (copy mode: a scratch copy).
PinnedDescriptor pin(FunctionTable& table, Buffer& buffer);
/// Invalidates `descriptor`; copy mode writes scratch contents back first.
void release(FunctionTable& table, const PinnedDescriptor& descriptor);
/// Element count of `buffer`, via the query callback.
std::size_t query_length(FunctionTable& table, Buffer& buffer);

/// C ABI symbol of a kernel variant, e.g. "kp_hsum_vect_ooo".
std::string native_symbol_name(KernelId kernel, VariantId variant);

/// A shared library exporting the kp_* kernel ABI, with every symbol resolved
/// up front. Copies share the underlying handle.
class NativeLibrary {
 public:
  static constexpr std::size_t kSymbolCount = kAllKernels.size() * kAllVariants.size();

  void* symbol(KernelId kernel, VariantId variant) const noexcept;
  /// Result of the library's kp_has_vect(), or false if it does not export one.
  bool has_vect() const noexcept { return has_vect_; }
  std::size_t resolved_count() const noexcept;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  friend NativeLibrary load_native_library(const std::filesystem::path& path);

  std::shared_ptr<void> handle_;
  std::array<void*, kSymbolCount> symbols_{};
  bool has_vect_ = false;
  std::filesystem::path path_;
};

/// Throws LibraryLoad if dlopen fails, MissingSymbolError listing every
/// unresolved kernel symbol otherwise.
NativeLibrary load_native_library(const std::filesystem::path& path);

/// $KERNELPROF_NATIVE_LIB if set, else "libkp_native.so" (dynamic loader search path).
std::filesystem::path default_native_library_path();

struct NativeLibraryProbe {
  std::optional<NativeLibrary> library;
  std::string reason;  ///< why loading failed, empty on success
};
NativeLibraryProbe try_load_native_library(const std::filesystem::path& path = default_native_library_path());

struct PathAvailability {
  CallPathId path;
  bool available;
  std::string reason;
};
std::vector<PathAvailability> list_call_paths(const NativeLibrary* library,
                                              std::string_view missing_reason = "native library not loaded");

/// Why `variant` cannot run through `path`, or nullopt if it can.
std::optional<std::string> path_unavailable_reason(CallPathId path, KernelId kernel, VariantId variant,
                                                   const NativeLibrary* library);

struct LoopContext;

/// A prepared invocation: path-specific state (function table, scratch or
/// native region, resolved symbol) is set up once, then run() executes the
/// kernel `iterations` times back to back over the same data.
class CallSite {
 public:
  CallSite(CallPathId path, VariantId variant, KernelBuffers& buffers,
           const NativeLibrary* library = nullptr);
  ~CallSite();

  CallSite(const CallSite&) = delete;
  CallSite& operator=(const CallSite&) = delete;

  void run(std::uint64_t iterations);

  /// Output of the latest invocation. For NativeMemoryDirect the native copy is
  /// written back into the buffers first.
  KernelOutput output();

  BoundaryCounters counters() const;
  void reset_counters();

  /// Addresses the kernel reads and writes on a direct path (stable across runs).
  std::vector<const double*> data_addresses() const;

  CallPathId path() const noexcept { return path_; }
  VariantId variant() const noexcept { return variant_; }
  KernelId kernel() const noexcept { return buffers_->kernel; }

 private:
  CallPathId path_;
  VariantId variant_;
  KernelBuffers* buffers_;
  std::unique_ptr<FunctionTable> table_;
  NativeRegion native_;
  std::unique_ptr<LoopContext> ctx_;
  std::vector<std::pair<double*, Buffer*>> native_copies_;
  void (*loop_)(LoopContext&, std::uint64_t) = nullptr;
};

/// One invocation through `path`; buffers reflect the kernel's writes afterwards.
KernelOutput invoke(CallPathId path, VariantId variant, KernelBuffers& buffers,
                    const NativeLibrary* library = nullptr, BoundaryCounters* counters = nullptr);

}  // namespace kprof
