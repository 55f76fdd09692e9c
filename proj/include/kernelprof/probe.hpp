#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "kernelprof/machine.hpp"

namespace kprof {

struct ProbeOptions {
  std::chrono::duration<double> min_time{0.25};  ///< per measurement, best of 3
};

struct ProbeResult {
  MachineProfile machine;             ///< peak_gflops is the FMA peak
  double fma_gflops = 0;
  double plain_gflops = 0;            ///< separate multiply and add, no FMA
  int lanes = 1;                      ///< doubles per vector operation used
  std::uint64_t triad_bytes = 0;      ///< total size of the triad arrays
  std::string timestamp;              ///< UTC, ISO 8601
  std::vector<std::string> comments;  ///< for the machine profile file
};

/// Cache sizes of this host (sysconf, then sysfs), or the reference machine's
/// sizes when neither reports a usable hierarchy.
std::vector<CacheLevel> host_caches();

/// Single-core estimates: bandwidth from a streaming triad over arrays more
/// than four times the largest cache; peak from eight independent
/// multiply-add chains at the widest vector width available.
ProbeResult probe_machine(const ProbeOptions& options = {});

}  // namespace kprof
