#include "kernelprof/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <regex>

#include "kernelprof/error.hpp"

namespace kprof {

std::uint64_t MachineProfile::cache_bytes(int level) const noexcept {
  for (const CacheLevel& cache : caches) {
    if (cache.level == level) return cache.bytes;
  }
  return 0;
}

void MachineProfile::validate() const {
  if (!(peak_gflops > 0) || !std::isfinite(peak_gflops)) {
    throw Error(ErrorCode::InvalidArgument, "peak performance must be positive");
  }
  if (!(peak_bandwidth_gbs > 0) || !std::isfinite(peak_bandwidth_gbs)) {
    throw Error(ErrorCode::InvalidArgument, "peak bandwidth must be positive");
  }
  for (std::size_t i = 1; i < caches.size(); ++i) {
    if (caches[i].level <= caches[i - 1].level || caches[i].bytes <= caches[i - 1].bytes) {
      throw Error(ErrorCode::InvalidArgument, "cache sizes must strictly increase with level");
    }
  }
}

MachineProfile reference_machine() {
  MachineProfile machine;
  machine.peak_gflops = 41.6;
  machine.peak_bandwidth_gbs = 40;
  machine.caches = {{1, 32 * 1024, "L1 data, per core"},
                    {2, 256 * 1024, "L2, per core"},
                    {3, 6 * 1024 * 1024, "L3, shared"}};
  machine.description = "Intel Core i5-2500 (Sandy Bridge), 3.3 GHz, 4 cores, AVX";
  return machine;
}

Rational::Rational(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

std::optional<std::uint64_t> Rational::times(std::uint64_t m) const {
  const unsigned __int128 product = static_cast<unsigned __int128>(num_) * m;
  if (product % den_ != 0) return std::nullopt;
  const unsigned __int128 result = product / den_;
  if (result > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  return static_cast<std::uint64_t>(result);
}

std::string Rational::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

Rational arithmetic_intensity(std::uint64_t flops, std::uint64_t bytes) {
  if (bytes == 0) throw Error(ErrorCode::InvalidArgument, "arithmetic intensity needs M > 0");
  return Rational(flops, bytes);
}

Rational arithmetic_intensity(KernelId kernel, WorkloadSize size) {
  return arithmetic_intensity(flop_per_invocation(kernel, size), memory_per_invocation(kernel, size));
}

std::string_view to_string(Bound bound) noexcept {
  return bound == Bound::MemoryBound ? "memory-bound" : "cpu-bound";
}

Bound classify(const Rational& ai, const MachineProfile& machine) {
  // Pi > (num/den) * beta, cross-multiplied so that exact boundaries stay exact.
  const long double pi = static_cast<long double>(machine.peak_performance());
  const long double beta = static_cast<long double>(machine.peak_bandwidth());
  return pi * ai.den() > beta * ai.num() ? Bound::MemoryBound : Bound::CpuBound;
}

double predicted_performance(double p_max, double invocation_cost, double flops) {
  if (flops < 0 || invocation_cost < 0) {
    throw Error(ErrorCode::InvalidArgument, "F and I must be non-negative");
  }
  if (flops == 0 && invocation_cost == 0) throw Error(ErrorCode::InvalidArgument, "F and I are both zero");
  return p_max * flops / (invocation_cost + flops);
}

double decrease_factor(double flops, double invocation_cost) {
  if (!(flops > 0)) throw Error(ErrorCode::InvalidArgument, "decrease factor needs F > 0");
  if (invocation_cost < 0) throw Error(ErrorCode::InvalidArgument, "decrease factor needs I >= 0");
  return flops / (invocation_cost + flops);
}

namespace {

constexpr int kMaxFitIterations = 50;
constexpr double kStepTolerance = 1e-12;

double sum_squared_relative(std::span<const FitSample> samples, double p, double cost) {
  double sum = 0;
  for (const FitSample& s : samples) {
    const double r = (p * s.flops / (cost + s.flops) - s.performance) / s.performance;
    sum += r * r;
  }
  return sum;
}

}  // namespace

FitResult fit_invocation_cost(std::span<const FitSample> samples) {
  if (samples.size() < 4) {
    throw Error(ErrorCode::InsufficientPoints,
                "fit needs at least 4 points, got " + std::to_string(samples.size()));
  }
  for (const FitSample& s : samples) {
    if (!(s.flops > 0) || !(s.performance > 0) || !std::isfinite(s.flops) || !std::isfinite(s.performance)) {
      throw Error(ErrorCode::InvalidArgument, "fit samples need positive, finite F and P");
    }
  }
  const auto [fmin, fmax] = std::minmax_element(samples.begin(), samples.end(),
                                                [](const FitSample& x, const FitSample& y) { return x.flops < y.flops; });
  if (fmin->flops == fmax->flops) throw Error(ErrorCode::DegenerateFit, "all points have the same F");

  double p = 0;
  for (const FitSample& s : samples) p = std::max(p, s.performance);
  double cost = samples.front().flops;
  double nearest = std::numeric_limits<double>::infinity();
  for (const FitSample& s : samples) {
    const double d = std::abs(s.performance - p / 2);
    if (d < nearest) {
      nearest = d;
      cost = s.flops;
    }
  }

  // Columns are scaled by the initial guesses so the normal equations stay
  // well conditioned whatever the units.
  const double sp = p;
  const double sc = std::max(cost, fmin->flops);

  FitResult result;
  double ssr = sum_squared_relative(samples, p, cost);
  for (int it = 0; it < kMaxFitIterations; ++it) {
    result.iterations = it + 1;
    double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
    for (const FitSample& s : samples) {
      const double denom = cost + s.flops;
      const double r = (p * s.flops / denom - s.performance) / s.performance;
      const double jp = sp * s.flops / denom / s.performance;
      const double jc = -sc * p * s.flops / (denom * denom) / s.performance;
      a11 += jp * jp;
      a12 += jp * jc;
      a22 += jc * jc;
      g1 += jp * r;
      g2 += jc * r;
    }
    const double det = a11 * a22 - a12 * a12;
    if (!(std::abs(det) > 1e-300)) break;
    const double du = -(a22 * g1 - a12 * g2) / det;
    const double dv = -(a11 * g2 - a12 * g1) / det;

    bool accepted = false;
    double next_p = p, next_cost = cost, next_ssr = ssr;
    for (double t = 1; t > 1e-12; t /= 2) {
      next_p = p + t * sp * du;
      next_cost = std::max(0.0, cost + t * sc * dv);
      if (!(next_p > 0)) continue;
      next_ssr = sum_squared_relative(samples, next_p, next_cost);
      if (next_ssr <= ssr) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double step = std::abs(next_p - p) / p + std::abs(next_cost - cost) / std::max(cost, sc);
    p = next_p;
    cost = next_cost;
    ssr = next_ssr;
    if (step < kStepTolerance) break;
  }

  result.p_max = p;
  result.invocation_cost = cost;
  result.rms_relative_residual = std::sqrt(ssr / static_cast<double>(samples.size()));
  result.points_used = samples.size();
  return result;
}

FitResult fit_invocation_cost(const Profile& profile, std::optional<MemoryRange> region) {
  std::vector<FitSample> samples;
  for (const SamplePoint& point : profile.points) {
    const double m = static_cast<double>(point.memory_per_invocation);
    if (region && (m < region->lo || m > region->hi)) continue;
    samples.push_back({static_cast<double>(point.flop_per_invocation), point.performance});
  }
  return fit_invocation_cost(samples);
}

namespace {

struct Knot {
  double x;       // log2 memory
  double memory;  // bytes
};

double eval_segment(const Profile& profile, double x) {
  const auto& pts = profile.points;
  if (pts.size() == 1) return pts.front().performance;
  std::size_t hi = 1;
  while (hi + 1 < pts.size() && std::log2(static_cast<double>(pts[hi].memory_per_invocation)) < x) ++hi;
  const double x0 = std::log2(static_cast<double>(pts[hi - 1].memory_per_invocation));
  const double x1 = std::log2(static_cast<double>(pts[hi].memory_per_invocation));
  const double y0 = pts[hi - 1].performance;
  const double y1 = pts[hi].performance;
  if (x <= x0) return y0;
  if (x >= x1) return y1;
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

void require_points(const Profile& profile, std::size_t minimum) {
  if (profile.points.size() < minimum) {
    throw Error(ErrorCode::InvalidArgument, "profile '" + profile.label + "' needs at least " +
                                                std::to_string(minimum) + " points");
  }
}

bool covers(const Profile& profile, double memory) {
  return !profile.points.empty() && memory >= profile.min_memory() && memory <= profile.max_memory();
}

}  // namespace

std::optional<double> interpolate(const Profile& profile, double memory) {
  if (!covers(profile, memory)) return std::nullopt;
  for (const SamplePoint& point : profile.points) {
    if (static_cast<double>(point.memory_per_invocation) == memory) return point.performance;
  }
  return eval_segment(profile, std::log2(memory));
}

std::vector<Crossover> find_crossovers(const Profile& a, const Profile& b) {
  require_points(a, 2);
  require_points(b, 2);
  const double lo = std::max(a.min_memory(), b.min_memory());
  const double hi = std::min(a.max_memory(), b.max_memory());
  if (!(lo < hi)) {
    throw Error(ErrorCode::NoOverlap, "profiles '" + a.label + "' and '" + b.label + "' do not overlap");
  }

  std::vector<double> grid;
  for (const Profile* profile : {&a, &b}) {
    for (const SamplePoint& point : profile->points) {
      const double m = static_cast<double>(point.memory_per_invocation);
      if (m >= lo && m <= hi) grid.push_back(m);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<Knot> knots;
  std::vector<double> diff;
  for (double m : grid) {
    knots.push_back({std::log2(m), m});
    diff.push_back(*interpolate(a, m) - *interpolate(b, m));
  }
  auto sign = [](double d) { return (d > 0) - (d < 0); };

  std::vector<Crossover> out;
  std::size_t prev = diff.size();  // last grid index with a non-zero difference
  for (std::size_t k = 0; k < diff.size(); ++k) {
    if (sign(diff[k]) == 0) continue;
    if (prev != diff.size() && sign(diff[prev]) != sign(diff[k])) {
      Crossover c;
      if (k == prev + 1) {
        const double t = diff[prev] / (diff[prev] - diff[k]);
        c.memory_at_crossover = std::exp2(knots[prev].x + t * (knots[k].x - knots[prev].x));
      } else if (k == prev + 2) {
        c.memory_at_crossover = knots[prev + 1].memory;
      } else {
        c.memory_at_crossover = std::exp2((knots[prev + 1].x + knots[k - 1].x) / 2);
      }
      const bool a_first = diff[prev] > 0;
      c.winner_below = a_first ? a.label : b.label;
      c.winner_above = a_first ? b.label : a.label;
      out.push_back(std::move(c));
    }
    prev = k;
  }
  return out;
}

SelectionReport best_implementation(const std::vector<Profile>& profiles, MemoryRange range,
                                    std::string_view exclude) {
  if (!(range.lo > 0) || !(range.hi >= range.lo)) {
    throw Error(ErrorCode::InvalidArgument, "selection range needs 0 < lo <= hi");
  }
  std::vector<const Profile*> candidates;
  std::optional<std::regex> filter;
  if (!exclude.empty()) filter.emplace(std::string(exclude));
  for (const Profile& profile : profiles) {
    if (profile.points.empty()) continue;
    if (filter && std::regex_search(profile.label, *filter)) continue;
    candidates.push_back(&profile);
  }

  // Coverage: the union of candidate ranges must contain [lo, hi].
  std::vector<MemoryRange> spans;
  for (const Profile* p : candidates) spans.push_back({p->min_memory(), p->max_memory()});
  std::sort(spans.begin(), spans.end(), [](const MemoryRange& x, const MemoryRange& y) { return x.lo < y.lo; });
  double reach = range.lo;
  bool started = false;
  for (const MemoryRange& s : spans) {
    if (s.lo > reach) break;
    if (s.hi >= reach) {
      reach = s.hi;
      started = true;
    }
    if (started && reach >= range.hi) break;
  }
  if (!started || reach < range.hi) {
    throw Error(ErrorCode::UncoveredRange,
                "no eligible profile covers memory " + std::to_string(started ? reach : range.lo) + " B");
  }

  std::vector<double> breaks{range.lo, range.hi};
  auto add_break = [&](double m) {
    if (m > range.lo && m < range.hi) breaks.push_back(m);
  };
  for (const Profile* p : candidates) {
    for (const SamplePoint& point : p->points) add_break(static_cast<double>(point.memory_per_invocation));
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const Profile& a = *candidates[i];
      const Profile& b = *candidates[j];
      if (a.points.size() < 2 || b.points.size() < 2) continue;
      if (!(std::max(a.min_memory(), b.min_memory()) < std::min(a.max_memory(), b.max_memory()))) continue;
      for (const Crossover& c : find_crossovers(a, b)) add_break(c.memory_at_crossover);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto winner_at = [&](double m) {
    const Profile* best = nullptr;
    double best_perf = 0, second = -std::numeric_limits<double>::infinity();
    for (const Profile* p : candidates) {
      const auto perf = interpolate(*p, m);
      if (!perf) continue;
      if (!best || *perf > best_perf || (*perf == best_perf && p->label < best->label)) {
        if (best) second = std::max(second, best_perf);
        best = p;
        best_perf = *perf;
      } else {
        second = std::max(second, *perf);
      }
    }
    const double margin = std::isfinite(second) ? best_perf - second : best_perf;
    return std::pair{best, margin};
  };

  SelectionReport report;
  if (breaks.size() == 1) {
    const auto [best, margin] = winner_at(range.lo);
    report.segments.push_back({range, best->label, margin});
    return report;
  }
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double mid = std::sqrt(breaks[i] * breaks[i + 1]);
    const auto [best, margin] = winner_at(mid);
    if (!report.segments.empty() && report.segments.back().label == best->label) {
      auto& last = report.segments.back();
      last.range.hi = breaks[i + 1];
      last.margin = std::min(last.margin, margin);
    } else {
      report.segments.push_back({{breaks[i], breaks[i + 1]}, best->label, margin});
    }
  }
  return report;
}

}  // namespace kprof
