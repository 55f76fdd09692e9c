#pragma once

// Analytical models over measured profiles: arithmetic intensity and the
// roofline test, the invocation-cost model P = Pmax * F / (I + F) and its
// decrease factor, plus fitting, crossover detection and selection.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kernelprof/machine.hpp"
#include "kernelprof/profile.hpp"

namespace kprof {

/// Non-negative exact fraction, always in lowest terms with den > 0.
class Rational {
 public:
  Rational() = default;
  /// Throws InvalidArgument if den == 0.
  Rational(std::uint64_t num, std::uint64_t den);

  std::uint64_t num() const noexcept { return num_; }
  std::uint64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// this * m, or nullopt if the product is not an integer.
  std::optional<std::uint64_t> times(std::uint64_t m) const;

  std::string str() const;

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

/// F / M as an exact fraction. Throws InvalidArgument when M == 0.
Rational arithmetic_intensity(std::uint64_t flops, std::uint64_t bytes);

/// Exact arithmetic intensity of a kernel at a given size.
Rational arithmetic_intensity(KernelId kernel, WorkloadSize size);

enum class Bound { MemoryBound, CpuBound };

std::string_view to_string(Bound bound) noexcept;

/// MemoryBound iff peak performance exceeds AI times peak bandwidth (strictly).
Bound classify(const Rational& ai, const MachineProfile& machine);

/// Pmax * F / (I + F). Throws InvalidArgument for negative inputs or F = I = 0.
double predicted_performance(double p_max, double invocation_cost, double flops);

/// F / (I + F). Throws InvalidArgument unless F > 0 and I >= 0.
double decrease_factor(double flops, double invocation_cost);

struct FitSample {
  double flops = 0;        ///< F
  double performance = 0;  ///< P, flop/s
};

struct FitResult {
  double p_max = 0;
  double invocation_cost = 0;
  double rms_relative_residual = 0;
  std::size_t points_used = 0;
  int iterations = 0;
};

/// Inclusive range of memory-per-invocation, bytes.
struct MemoryRange {
  double lo = 0;
  double hi = 0;
};

/// Least-squares fit of (Pmax, I) minimising relative residuals, by
/// Gauss-Newton with step halving.
///
/// Throws InsufficientPoints for fewer than 4 samples and DegenerateFit when
/// every sample has the same F.
FitResult fit_invocation_cost(std::span<const FitSample> samples);
FitResult fit_invocation_cost(const Profile& profile, std::optional<MemoryRange> region = std::nullopt);

struct Crossover {
  double memory_at_crossover = 0;  ///< bytes
  std::string winner_below;
  std::string winner_above;
};

/// Sign changes of a - b between the two profiles' piecewise-linear
/// interpolants in (log2 memory, performance), ordered by memory. Throws
/// NoOverlap when the memory ranges do not overlap.
std::vector<Crossover> find_crossovers(const Profile& a, const Profile& b);

/// Performance of a profile at `memory` bytes by interpolation in
/// (log2 memory, performance); nullopt outside the profile's range.
std::optional<double> interpolate(const Profile& profile, double memory);

struct SelectionSegment {
  MemoryRange range;
  std::string label;
  double margin = 0;  ///< smallest lead over the runner-up inside the segment, flop/s
};

struct SelectionReport {
  std::vector<SelectionSegment> segments;
};

/// Best implementation per memory range. Profiles whose label matches
/// `exclude` (regex search) are ignored. Ties go to the lexicographically
/// smallest label. Throws UncoveredRange if part of `range` has no candidate.
SelectionReport best_implementation(const std::vector<Profile>& profiles, MemoryRange range,
                                    std::string_view exclude = {});

}  // namespace kprof
