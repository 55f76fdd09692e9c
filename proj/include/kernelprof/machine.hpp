#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kprof {

struct CacheLevel {
  int level = 1;
  std::uint64_t bytes = 0;
  std::string note;

  friend bool operator==(const CacheLevel&, const CacheLevel&) = default;
};

/// Peak compute throughput, peak bandwidth and cache geometry of a host.
///
/// Peaks are kept in the units of the machine-profile file (Gflop/s, GB/s,
/// decimal giga) so that reading and writing a profile is lossless.
struct MachineProfile {
  double peak_gflops = 0.0;
  double peak_bandwidth_gbs = 0.0;
  std::vector<CacheLevel> caches;
  std::string description;

  double peak_performance() const noexcept { return peak_gflops * 1e9; }          ///< flop/s
  double peak_bandwidth() const noexcept { return peak_bandwidth_gbs * 1e9; }     ///< byte/s
  std::uint64_t cache_bytes(int level) const noexcept;

  /// Throws InvalidArgument unless both peaks are positive and cache sizes
  /// strictly increase with level.
  void validate() const;

  friend bool operator==(const MachineProfile&, const MachineProfile&) = default;
};

/// Intel Core i5-2500 desktop used as the default roofline for reports.
MachineProfile reference_machine();

}  // namespace kprof
