#include "kernelprof/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "kernelprof/error.hpp"

namespace kprof {

namespace {

std::atomic<bool> g_measuring{false};

std::mutex g_observer_mutex;
debug::TimingObserver g_observer;

class MeasurementGuard {
 public:
  MeasurementGuard() {
    if (g_measuring.exchange(true, std::memory_order_acquire)) {
      throw Error(ErrorCode::MeasurementBusy, "another measurement is already running in this process");
    }
  }
  ~MeasurementGuard() { g_measuring.store(false, std::memory_order_release); }

  MeasurementGuard(const MeasurementGuard&) = delete;
  MeasurementGuard& operator=(const MeasurementGuard&) = delete;
};

double time_block(CallSite& site, std::uint64_t iterations) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  site.run(iterations);
  const auto stop = clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

// Grows the inner iteration count until one block spans min_inner_time.
std::uint64_t calibrate(CallSite& site, const MeasurementConfig& config) {
  const double target = config.min_inner_time.count();
  std::uint64_t iterations = 1;
  for (;;) {
    const double elapsed = time_block(site, iterations);
    if (elapsed >= target) return iterations;
    if (iterations >= config.max_inner_iters) {
      throw Error(ErrorCode::TimerResolution,
                  "timer cannot resolve " + std::to_string(target) + " s even at " +
                      std::to_string(iterations) + " inner iterations");
    }
    double scale = elapsed > 0 ? 1.25 * target / elapsed : 100.0;
    scale = std::clamp(scale, 2.0, 100.0);
    const double next = std::ceil(static_cast<double>(iterations) * scale);
    iterations = next >= static_cast<double>(config.max_inner_iters)
                     ? config.max_inner_iters
                     : static_cast<std::uint64_t>(next);
  }
}

SamplePoint measure_unlocked(const Implementation& impl, WorkloadSize size, const MeasurementConfig& config,
                             const NativeLibrary* library) {
  KernelBuffers buffers = make_buffers(impl.kernel, size, impl.alignment, config.seed);
  CallSite site(impl.path, impl.variant, buffers, library);

  SamplePoint point;
  point.n = size.n;
  point.memory_per_invocation = memory_per_invocation(impl.kernel, size);
  point.flop_per_invocation = flop_per_invocation(impl.kernel, size);

  const std::uint64_t iterations = calibrate(site, config);
  for (int i = 0; i < config.warmup_passes; ++i) site.run(iterations);

  debug::TimingObserver observer;
  {
    std::lock_guard lock(g_observer_mutex);
    observer = g_observer;
  }

  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.outer_reps; ++r) {
    const double elapsed = time_block(site, iterations);
    if (observer) observer(iterations, elapsed);
    const double mean = elapsed / static_cast<double>(iterations);
    point.rep_means.push_back(mean);
    best = std::min(best, mean);
  }
  point.inner_iters_used = iterations;
  point.best_mean_seconds = best;
  point.performance = static_cast<double>(point.flop_per_invocation) / best;
  point.rep_variance = sample_variance(point.rep_means);
  return point;
}

}  // namespace

void MeasurementConfig::validate() const {
  if (warmup_passes < 1) throw Error(ErrorCode::InvalidArgument, "warmup_passes must be at least 1");
  if (outer_reps < 3) throw Error(ErrorCode::InvalidArgument, "outer_reps must be at least 3");
  if (min_inner_time.count() < 1e-3) throw Error(ErrorCode::InvalidArgument, "min_inner_time must be at least 1 ms");
  if (max_inner_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_inner_iters must be positive");
}

Implementation implementation(KernelId kernel, VariantId variant, CallPathId path) {
  return {kernel, variant, path, natural_alignment(variant)};
}

SamplePoint measure_point(const Implementation& impl, WorkloadSize size, const MeasurementConfig& config,
                          const NativeLibrary* library) {
  config.validate();
  MeasurementGuard guard;
  return measure_unlocked(impl, size, config, library);
}

Profile sweep(const Implementation& impl, const std::vector<WorkloadSize>& sizes, const MeasurementConfig& config,
              const NativeLibrary* library, std::shared_ptr<const MachineProfile> machine) {
  config.validate();
  if (sizes.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (memory_per_invocation(impl.kernel, sizes[i]) <= memory_per_invocation(impl.kernel, sizes[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "sweep sizes must be strictly ascending");
    }
  }
  if (auto reason = path_unavailable_reason(impl.path, impl.kernel, impl.variant, library)) {
    throw Error(ErrorCode::PathUnavailable, *reason);
  }
  {
    // Reject variant/alignment/stride problems before any timing starts.
    KernelBuffers probe = make_buffers(impl.kernel, sizes.front(), impl.alignment, config.seed);
    check_runnable(impl.variant, probe);
  }

  MeasurementGuard guard;
  Profile profile;
  profile.kernel = impl.kernel;
  profile.variant = impl.variant;
  profile.path = impl.path;
  profile.alignment = impl.alignment;
  profile.machine = std::move(machine);
  profile.label = make_label(impl.path, impl.variant, impl.alignment);
  for (const WorkloadSize& size : sizes) {
    try {
      profile.points.push_back(measure_unlocked(impl, size, config, library));
    } catch (const std::exception& e) {
      profile.complete = false;
      profile.failure = "n=" + std::to_string(size.n) + ": " + e.what();
      break;
    }
  }
  return profile;
}

std::vector<WorkloadSize> geometric_sizes(KernelId kernel, double min_bytes, double max_bytes, double factor) {
  if (!(min_bytes > 0) || !(max_bytes >= min_bytes)) {
    throw Error(ErrorCode::InvalidArgument, "geometric_sizes needs 0 < min_bytes <= max_bytes");
  }
  if (!(factor > 1)) throw Error(ErrorCode::InvalidArgument, "geometric_sizes needs factor > 1");

  const double half_step = std::sqrt(factor);
  const double lo = min_bytes / half_step;
  const double hi = max_bytes * half_step;
  std::vector<WorkloadSize> sizes;
  std::uint64_t last_memory = 0;
  for (int k = 0;; ++k) {
    const double target = min_bytes * std::pow(factor, k);
    if (target > max_bytes * (1 + 1e-12)) break;
    const double quanta = std::round(elements_for_memory(kernel, target) / kSizeQuantum);
    WorkloadSize size;
    size.n = static_cast<std::size_t>(std::max(1.0, quanta)) * kSizeQuantum;
    const std::uint64_t memory = memory_per_invocation(kernel, size);
    const double m = static_cast<double>(memory);
    if (m < lo || m > hi || memory <= last_memory) continue;
    sizes.push_back(size);
    last_memory = memory;
  }
  return sizes;
}

namespace debug {

void set_timing_observer(TimingObserver observer) {
  std::lock_guard lock(g_observer_mutex);
  g_observer = std::move(observer);
}

}  // namespace debug

}  // namespace kprof
