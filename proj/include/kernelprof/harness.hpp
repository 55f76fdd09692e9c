#pragma once

// Measurement: warm up, time a block of back-to-back invocations over the
// same data, keep the best mean over several repetitions.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "kernelprof/boundary.hpp"
#include "kernelprof/kernels.hpp"
#include "kernelprof/machine.hpp"
#include "kernelprof/profile.hpp"

namespace kprof {

enum class TimerId { Steady };

struct MeasurementConfig {
  int warmup_passes = 2;
  std::chrono::duration<double> min_inner_time{0.020};
  int outer_reps = 5;
  TimerId timer = TimerId::Steady;
  std::uint64_t max_inner_iters = std::uint64_t{1} << 34;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument if a field is out of range.
  void validate() const;
};

/// Everything that identifies one measured implementation.
struct Implementation {
  KernelId kernel = KernelId::ArrayAddition;
  VariantId variant = VariantId::Scalar;
  CallPathId path = CallPathId::Inlined;
  AlignmentPolicy alignment = AlignmentPolicy::Aligned32;
};

/// Implementation with the variant's natural alignment.
Implementation implementation(KernelId kernel, VariantId variant, CallPathId path);

SamplePoint measure_point(const Implementation& impl, WorkloadSize size, const MeasurementConfig& config,
                          const NativeLibrary* library = nullptr);

/// Measures each size in order. A failing point stops the sweep; the points
/// gathered so far are kept and the profile is marked incomplete.
Profile sweep(const Implementation& impl, const std::vector<WorkloadSize>& sizes,
              const MeasurementConfig& config, const NativeLibrary* library = nullptr,
              std::shared_ptr<const MachineProfile> machine = nullptr);

/// Sizes whose memory-per-invocation steps geometrically from min_bytes to
/// max_bytes, with n rounded to a multiple of kSizeQuantum.
std::vector<WorkloadSize> geometric_sizes(KernelId kernel, double min_bytes, double max_bytes, double factor);

inline constexpr double kDefaultMinBytes = 256;
inline constexpr double kDefaultMaxBytes = 64.0 * 1024 * 1024;
inline constexpr double kDefaultFactor = 2;

namespace debug {

/// Receives the iteration count and elapsed seconds of every timed repetition.
using TimingObserver = std::function<void(std::uint64_t iterations, double seconds)>;
void set_timing_observer(TimingObserver observer);

}  // namespace debug

}  // namespace kprof
