#include "kernelprof/probe.hpp"

#include <unistd.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <immintrin.h>
#include <string>

#include "kernelprof/buffer.hpp"
#include "kernelprof/detail/kernel_impl.hpp"

namespace kprof {

namespace {

using clock = std::chrono::steady_clock;

std::uint64_t sysfs_cache_bytes(int level) {
  for (int index = 0; index < 8; ++index) {
    const std::string dir = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(index) + "/";
    std::ifstream level_file(dir + "level");
    std::ifstream type_file(dir + "type");
    std::ifstream size_file(dir + "size");
    int l = 0;
    std::string type, size;
    if (!(level_file >> l) || !(type_file >> type) || !(size_file >> size)) continue;
    if (l != level || type == "Instruction") continue;
    std::uint64_t value = std::stoull(size);
    if (size.back() == 'K') value *= 1024;
    if (size.back() == 'M') value *= 1024 * 1024;
    return value;
  }
  return 0;
}

// Times `body(reps)` until one call spans min_time, then keeps the best of 3.
template <typename Body>
double best_rate(double work_per_rep, double min_time, Body body) {
  std::uint64_t reps = 1;
  for (;;) {
    const auto t0 = clock::now();
    body(reps);
    const double s = std::chrono::duration<double>(clock::now() - t0).count();
    if (s >= min_time) break;
    reps *= s > 0 ? std::clamp<std::uint64_t>(static_cast<std::uint64_t>(1.2 * min_time / s) + 1, 2, 100) : 100;
  }
  double best = 0;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = clock::now();
    body(reps);
    const double s = std::chrono::duration<double>(clock::now() - t0).count();
    best = std::max(best, work_per_rep * static_cast<double>(reps) / s);
  }
  return best;
}

void triad(double* a, const double* b, const double* c, std::size_t n, std::uint64_t reps) {
  for (std::uint64_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < n; ++i) a[i] = b[i] + 3.0 * c[i];
    detail::escape(a);
  }
}

double scalar_chains(std::uint64_t reps) {
  double x[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  const double m = 0.999999, k = 1e-6;
  for (std::uint64_t r = 0; r < reps; ++r) {
    for (double& v : x) v = v * m + k;
  }
  double s = 0;
  for (double v : x) s += v;
  return s;
}

#if KPROF_HAVE_VECTOR
__attribute__((target("avx2,fma"))) double avx_fma_chains(std::uint64_t reps) {
  __m256d x0 = _mm256_set1_pd(1), x1 = _mm256_set1_pd(2), x2 = _mm256_set1_pd(3), x3 = _mm256_set1_pd(4);
  __m256d x4 = _mm256_set1_pd(5), x5 = _mm256_set1_pd(6), x6 = _mm256_set1_pd(7), x7 = _mm256_set1_pd(8);
  const __m256d m = _mm256_set1_pd(0.999999), k = _mm256_set1_pd(1e-6);
  for (std::uint64_t r = 0; r < reps; ++r) {
    x0 = _mm256_fmadd_pd(x0, m, k); x1 = _mm256_fmadd_pd(x1, m, k);
    x2 = _mm256_fmadd_pd(x2, m, k); x3 = _mm256_fmadd_pd(x3, m, k);
    x4 = _mm256_fmadd_pd(x4, m, k); x5 = _mm256_fmadd_pd(x5, m, k);
    x6 = _mm256_fmadd_pd(x6, m, k); x7 = _mm256_fmadd_pd(x7, m, k);
  }
  const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(x0, x1), _mm256_add_pd(x2, x3)),
                                  _mm256_add_pd(_mm256_add_pd(x4, x5), _mm256_add_pd(x6, x7)));
  return s[0] + s[1] + s[2] + s[3];
}

__attribute__((target("avx512f"))) double avx512_fma_chains(std::uint64_t reps) {
  __m512d x0 = _mm512_set1_pd(1), x1 = _mm512_set1_pd(2), x2 = _mm512_set1_pd(3), x3 = _mm512_set1_pd(4);
  __m512d x4 = _mm512_set1_pd(5), x5 = _mm512_set1_pd(6), x6 = _mm512_set1_pd(7), x7 = _mm512_set1_pd(8);
  const __m512d m = _mm512_set1_pd(0.999999), k = _mm512_set1_pd(1e-6);
  for (std::uint64_t r = 0; r < reps; ++r) {
    x0 = _mm512_fmadd_pd(x0, m, k); x1 = _mm512_fmadd_pd(x1, m, k);
    x2 = _mm512_fmadd_pd(x2, m, k); x3 = _mm512_fmadd_pd(x3, m, k);
    x4 = _mm512_fmadd_pd(x4, m, k); x5 = _mm512_fmadd_pd(x5, m, k);
    x6 = _mm512_fmadd_pd(x6, m, k); x7 = _mm512_fmadd_pd(x7, m, k);
  }
  const __m512d s = _mm512_add_pd(_mm512_add_pd(_mm512_add_pd(x0, x1), _mm512_add_pd(x2, x3)),
                                  _mm512_add_pd(_mm512_add_pd(x4, x5), _mm512_add_pd(x6, x7)));
  return _mm512_reduce_add_pd(s);
}

// Multiplies and adds on separate chains so both ports stay busy without FMA.
KPROF_AVX double avx_plain_chains(std::uint64_t reps) {
  __m256d p0 = _mm256_set1_pd(1), p1 = _mm256_set1_pd(2), p2 = _mm256_set1_pd(3), p3 = _mm256_set1_pd(4);
  __m256d a0 = _mm256_set1_pd(5), a1 = _mm256_set1_pd(6), a2 = _mm256_set1_pd(7), a3 = _mm256_set1_pd(8);
  const __m256d m = _mm256_set1_pd(0.999999), k = _mm256_set1_pd(1e-6);
  for (std::uint64_t r = 0; r < reps; ++r) {
    p0 = _mm256_mul_pd(p0, m); p1 = _mm256_mul_pd(p1, m);
    p2 = _mm256_mul_pd(p2, m); p3 = _mm256_mul_pd(p3, m);
    a0 = _mm256_add_pd(a0, k); a1 = _mm256_add_pd(a1, k);
    a2 = _mm256_add_pd(a2, k); a3 = _mm256_add_pd(a3, k);
  }
  const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(p0, p1), _mm256_add_pd(p2, p3)),
                                  _mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  return s[0] + s[1] + s[2] + s[3];
}
#endif

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<CacheLevel> host_caches() {
  std::uint64_t sizes[3] = {};
  const int names[3] = {_SC_LEVEL1_DCACHE_SIZE, _SC_LEVEL2_CACHE_SIZE, _SC_LEVEL3_CACHE_SIZE};
  for (int i = 0; i < 3; ++i) {
    const long value = sysconf(names[i]);
    sizes[i] = value > 0 ? static_cast<std::uint64_t>(value) : sysfs_cache_bytes(i + 1);
  }
  if (sizes[0] == 0 || sizes[1] <= sizes[0] || sizes[2] <= sizes[1]) return reference_machine().caches;
  return {{1, sizes[0], "L1 data"}, {2, sizes[1], "L2"}, {3, sizes[2], "L3"}};
}

ProbeResult probe_machine(const ProbeOptions& options) {
  ProbeResult result;
  result.timestamp = utc_timestamp();
  result.machine.caches = host_caches();
  const double min_time = options.min_time.count();

  const std::uint64_t largest = result.machine.caches.back().bytes;
  const std::size_t n = static_cast<std::size_t>(4 * largest / (3 * sizeof(double))) + 1024;
  Buffer a(n, AlignmentPolicy::Aligned32), b(n, AlignmentPolicy::Aligned32), c(n, AlignmentPolicy::Aligned32);
  for (std::size_t i = 0; i < n; ++i) {
    b.data()[i] = 1.0;
    c.data()[i] = 2.0;
  }
  result.triad_bytes = 3 * n * sizeof(double);
  const double bandwidth = best_rate(static_cast<double>(result.triad_bytes), min_time, [&](std::uint64_t reps) {
    triad(a.data(), b.data(), c.data(), n, reps);
  });

  double fma_rate = 0, plain_rate = 0;
  int lanes = 1;
#if KPROF_HAVE_VECTOR
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f")) {
    lanes = 8;
    fma_rate = best_rate(8 * 8 * 2, min_time, [](std::uint64_t reps) { detail::keep(avx512_fma_chains(reps)); });
  } else if (__builtin_cpu_supports("fma") && __builtin_cpu_supports("avx2")) {
    lanes = 4;
    fma_rate = best_rate(8 * 4 * 2, min_time, [](std::uint64_t reps) { detail::keep(avx_fma_chains(reps)); });
  }
  if (__builtin_cpu_supports("avx")) {
    plain_rate = best_rate(8 * 4, min_time, [](std::uint64_t reps) { detail::keep(avx_plain_chains(reps)); });
    if (fma_rate == 0) lanes = 4;
  }
#endif
  if (plain_rate == 0) {
    plain_rate = best_rate(8 * 2, min_time, [](std::uint64_t reps) { detail::keep(scalar_chains(reps)); });
  }
  if (fma_rate == 0) fma_rate = plain_rate;

  result.lanes = lanes;
  result.fma_gflops = fma_rate / 1e9;
  result.plain_gflops = plain_rate / 1e9;
  result.machine.peak_gflops = result.fma_gflops;
  result.machine.peak_bandwidth_gbs = bandwidth / 1e9;
  result.machine.description = "measured single-core probe, " + result.timestamp;
  result.comments = {
      "measured " + result.timestamp,
      "bandwidth: streaming triad over " + std::to_string(result.triad_bytes) + " bytes, best of 3",
      "peak: 8 independent multiply-add chains, " + std::to_string(lanes) + " lanes, 2 flops per fused lane-op",
      "peak without fma: " + std::to_string(result.plain_gflops) + " Gflop/s",
      "single core; frequency scaling was not controlled",
  };
  return result;
}

}  // namespace kprof
