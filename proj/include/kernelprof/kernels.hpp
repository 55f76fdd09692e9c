#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kernelprof/buffer.hpp"

namespace kprof {

enum class KernelId { ArrayAddition, HorizontalSum, HornerCoeff1st, HornerData1st };

enum class VariantId { Scalar, ScalarOoo, Vect, VectOoo, VectUnaligned };

inline constexpr std::array kAllKernels{KernelId::ArrayAddition, KernelId::HorizontalSum,
                                        KernelId::HornerCoeff1st, KernelId::HornerData1st};

inline constexpr std::array kAllVariants{VariantId::Scalar, VariantId::ScalarOoo, VariantId::Vect,
                                         VariantId::VectOoo, VariantId::VectUnaligned};

/// Polynomial degree used by both Horner kernels.
inline constexpr std::size_t kHornerDegree = 64;

/// Sweeps use element counts that are multiples of this quantum so that every
/// variant's vector-by-accumulator stride divides n.
inline constexpr std::size_t kSizeQuantum = 16;

struct WorkloadSize {
  std::size_t n = kSizeQuantum;
  std::size_t degree = kHornerDegree;

  friend bool operator==(const WorkloadSize&, const WorkloadSize&) = default;
};

constexpr bool is_horner(KernelId kernel) noexcept {
  return kernel == KernelId::HornerCoeff1st || kernel == KernelId::HornerData1st;
}

constexpr bool is_vector(VariantId variant) noexcept {
  return variant == VariantId::Vect || variant == VariantId::VectOoo ||
         variant == VariantId::VectUnaligned;
}

/// Alignment a variant insists on, or nullopt when any policy works.
constexpr std::optional<AlignmentPolicy> required_alignment(VariantId variant) noexcept {
  switch (variant) {
    case VariantId::Vect:
    case VariantId::VectOoo:
      return AlignmentPolicy::Aligned32;
    case VariantId::VectUnaligned:
      return AlignmentPolicy::Misaligned8;
    default:
      return std::nullopt;
  }
}

/// Policy a variant is measured with when the caller does not choose one.
constexpr AlignmentPolicy natural_alignment(VariantId variant) noexcept {
  return required_alignment(variant).value_or(AlignmentPolicy::Aligned32);
}

/// Element stride of a variant's main loop; n must be a multiple of it.
std::size_t variant_stride(KernelId kernel, VariantId variant) noexcept;

// Flop and byte accounting: n flops for each of the two streaming kernels,
// 192n for Horner. Bytes count each distinct input or output array once, so
// the in-place output of ArrayAddition is not counted twice.
std::uint64_t flop_per_invocation(KernelId kernel, WorkloadSize size);
std::uint64_t memory_per_invocation(KernelId kernel, WorkloadSize size);

/// Inverse of memory_per_invocation for a given kernel, as a real number of elements.
double elements_for_memory(KernelId kernel, double bytes, std::size_t degree = kHornerDegree);

/// Relative tolerance that covers reassociation in reduction variants.
double reassociation_rtol(std::size_t n) noexcept;

/// Arrays a kernel works on.
///
///   ArrayAddition: a (in/out), b
///   HorizontalSum: a
///   Horner*:       coeffs (degree + 1, lowest order first), a = x, b = y (out)
struct KernelBuffers {
  KernelId kernel = KernelId::ArrayAddition;
  Buffer a;
  Buffer b;
  Buffer coeffs;

  static KernelBuffers array_addition(std::span<const double> a, std::span<const double> b,
                                      AlignmentPolicy policy = AlignmentPolicy::Aligned32);
  static KernelBuffers horizontal_sum(std::span<const double> a,
                                      AlignmentPolicy policy = AlignmentPolicy::Aligned32);
  static KernelBuffers horner(KernelId kernel, std::span<const double> coeffs,
                              std::span<const double> x,
                              AlignmentPolicy policy = AlignmentPolicy::Aligned32);

  KernelBuffers clone() const;

  std::size_t n() const noexcept { return a.size(); }
  std::size_t degree() const noexcept { return coeffs.size() == 0 ? 0 : coeffs.size() - 1; }
  WorkloadSize size() const noexcept { return {n(), is_horner(kernel) ? degree() : kHornerDegree}; }

  /// The arrays a boundary has to hand over, in call-argument order.
  std::vector<Buffer*> arrays();
  std::vector<const Buffer*> arrays() const;

  /// Throws SizeMismatch if the arrays do not fit the kernel's contract.
  void validate() const;
};

struct KernelOutput {
  std::optional<double> sum;   ///< HorizontalSum
  std::vector<double> values;  ///< ArrayAddition: a after the call; Horner: y

  friend bool operator==(const KernelOutput&, const KernelOutput&) = default;
};

/// Left-to-right scalar evaluation; the correctness oracle for every variant.
KernelOutput run_reference(KernelBuffers& buffers);

/// Runs one optimized variant in place. Checks availability and alignment first.
KernelOutput run_variant(VariantId variant, KernelBuffers& buffers);

/// Reads the current kernel output from the buffers without running anything.
KernelOutput collect_output(const KernelBuffers& buffers, std::optional<double> sum);

/// Pseudo-random inputs, uniform in [0,1), reproducible for a given seed.
KernelBuffers make_buffers(KernelId kernel, WorkloadSize size, AlignmentPolicy policy,
                           std::uint64_t seed);

struct HostCapabilities {
  bool vector256 = false;  ///< 256-bit double-precision vector arithmetic usable

  static HostCapabilities detect();
  /// Detected once per process.
  static const HostCapabilities& host();
};

struct VariantAvailability {
  VariantId variant;
  bool available;
  std::string reason;  ///< empty when available
};

std::vector<VariantAvailability> list_variants(KernelId kernel,
                                               const HostCapabilities& caps = HostCapabilities::host());

bool variant_available(KernelId kernel, VariantId variant,
                       const HostCapabilities& caps = HostCapabilities::host());

/// Throws VariantUnavailable / AlignmentMismatch / InvalidArgument when
/// `variant` cannot run on `buffers`.
void check_runnable(VariantId variant, const KernelBuffers& buffers,
                    const HostCapabilities& caps = HostCapabilities::host());

std::string_view to_string(KernelId kernel) noexcept;
std::string_view to_string(VariantId variant) noexcept;
std::string_view to_string(AlignmentPolicy policy) noexcept;
std::string_view describe(KernelId kernel) noexcept;
std::optional<KernelId> parse_kernel(std::string_view text);
std::optional<VariantId> parse_variant(std::string_view text);
std::optional<AlignmentPolicy> parse_alignment(std::string_view text);

namespace debug {

/// When enabled, kernels record how many partial accumulators their last run used.
void set_instrumentation(bool enabled) noexcept;
bool instrumentation_enabled() noexcept;
/// Partial accumulators used by the last instrumented kernel run on this thread
/// (0 for kernels without a loop-carried chain).
int last_partial_accumulators() noexcept;

}  // namespace debug

}  // namespace kprof
