#pragma once

// Kernel bodies. Everything here is force-inlined so that the inlined call
// path really fuses the kernel into the measurement loop. Vector bodies carry
// a target attribute and may only be inlined into functions with the same
// attribute; see boundary.cpp for the loops that do so.

#include <atomic>
#include <cstddef>

#include "kernelprof/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define KPROF_HAVE_VECTOR 1
#define KPROF_AVX __attribute__((target("avx")))
#else
#define KPROF_HAVE_VECTOR 0
#define KPROF_AVX
#endif

#define KPROF_INLINE inline __attribute__((always_inline))

#if defined(__clang__)
#define KPROF_NOIPA __attribute__((noinline))
#else
#define KPROF_NOIPA __attribute__((noipa))
#endif

namespace kprof::detail {

struct KernelArgs {
  double* a = nullptr;              // ArrayAddition dst, HorizontalSum input, Horner x
  const double* b = nullptr;        // ArrayAddition addend
  const double* coeffs = nullptr;   // Horner coefficients, lowest order first
  double* y = nullptr;              // Horner output
  std::size_t n = 0;
  std::size_t degree = 0;
};

extern std::atomic<bool> g_instrumentation;
extern thread_local int t_partial_accumulators;

KPROF_INLINE void note_accumulators(int count) noexcept {
  if (g_instrumentation.load(std::memory_order_relaxed)) t_partial_accumulators = count;
}

/// Keeps `value` alive and orders it against surrounding memory traffic.
template <class T>
KPROF_INLINE void keep(T const& value) noexcept {
  asm volatile("" : : "r,m"(value) : "memory");
}

/// Hides a pointer's provenance from the optimizer.
template <class T>
KPROF_INLINE void escape(T* ptr) noexcept {
  asm volatile("" : : "g"(ptr) : "memory");
}

// ---------------------------------------------------------------------------
// Scalar bodies

KPROF_INLINE double arradd_scalar(const KernelArgs& k) noexcept {
  double* __restrict a = k.a;
  const double* __restrict b = k.b;
  for (std::size_t i = 0; i < k.n; ++i) a[i] += b[i];
  note_accumulators(0);
  return 0.0;
}

KPROF_INLINE double arradd_scalar_ooo(const KernelArgs& k) noexcept {
  double* __restrict a = k.a;
  const double* __restrict b = k.b;
  for (std::size_t i = 0; i < k.n; i += 4) {
    const double s0 = a[i] + b[i];
    const double s1 = a[i + 1] + b[i + 1];
    const double s2 = a[i + 2] + b[i + 2];
    const double s3 = a[i + 3] + b[i + 3];
    a[i] = s0;
    a[i + 1] = s1;
    a[i + 2] = s2;
    a[i + 3] = s3;
  }
  note_accumulators(0);
  return 0.0;
}

KPROF_INLINE double hsum_scalar(const KernelArgs& k) noexcept {
  const double* a = k.a;
  double sum = 0.0;
  for (std::size_t i = 0; i < k.n; ++i) sum += a[i];
  note_accumulators(1);
  return sum;
}

KPROF_INLINE double hsum_scalar_ooo(const KernelArgs& k) noexcept {
  const double* a = k.a;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < k.n; i += 4) {
    s0 += a[i];
    s1 += a[i + 1];
    s2 += a[i + 2];
    s3 += a[i + 3];
  }
  note_accumulators(4);
  return (s0 + s1) + (s2 + s3);
}

KPROF_INLINE double horner_c1_scalar(const KernelArgs& k) noexcept {
  const double* __restrict x = k.a;
  double* __restrict y = k.y;
  const double* c = k.coeffs;
  for (std::size_t j = 0; j < k.n; ++j) y[j] = c[k.degree];
  for (std::size_t step = k.degree; step-- > 0;) {
    const double ck = c[step];
    for (std::size_t j = 0; j < k.n; ++j) y[j] = y[j] * x[j] + ck;
  }
  note_accumulators(0);
  return 0.0;
}

KPROF_INLINE double horner_c1_scalar_ooo(const KernelArgs& k) noexcept {
  const double* __restrict x = k.a;
  double* __restrict y = k.y;
  const double* c = k.coeffs;
  for (std::size_t j = 0; j < k.n; ++j) y[j] = c[k.degree];
  for (std::size_t step = k.degree; step-- > 0;) {
    const double ck = c[step];
    for (std::size_t j = 0; j < k.n; j += 4) {
      const double y0 = y[j] * x[j] + ck;
      const double y1 = y[j + 1] * x[j + 1] + ck;
      const double y2 = y[j + 2] * x[j + 2] + ck;
      const double y3 = y[j + 3] * x[j + 3] + ck;
      y[j] = y0;
      y[j + 1] = y1;
      y[j + 2] = y2;
      y[j + 3] = y3;
    }
  }
  note_accumulators(0);
  return 0.0;
}

KPROF_INLINE double horner_d1_scalar(const KernelArgs& k) noexcept {
  const double* __restrict x = k.a;
  double* __restrict y = k.y;
  const double* c = k.coeffs;
  for (std::size_t j = 0; j < k.n; ++j) {
    const double xj = x[j];
    double acc = c[k.degree];
    for (std::size_t step = k.degree; step-- > 0;) acc = acc * xj + c[step];
    y[j] = acc;
  }
  note_accumulators(1);
  return 0.0;
}

KPROF_INLINE double horner_d1_scalar_ooo(const KernelArgs& k) noexcept {
  const double* __restrict x = k.a;
  double* __restrict y = k.y;
  const double* c = k.coeffs;
  for (std::size_t j = 0; j < k.n; j += 8) {
    double acc[8];
    double xs[8];
    for (int l = 0; l < 8; ++l) {
      xs[l] = x[j + l];
      acc[l] = c[k.degree];
    }
    for (std::size_t step = k.degree; step-- > 0;) {
      const double ck = c[step];
      for (int l = 0; l < 8; ++l) acc[l] = acc[l] * xs[l] + ck;
    }
    for (int l = 0; l < 8; ++l) y[j + l] = acc[l];
  }
  note_accumulators(8);
  return 0.0;
}

template <KernelId K, VariantId V>
KPROF_INLINE double apply_scalar(const KernelArgs& k) noexcept {
  static_assert(!is_vector(V));
  constexpr bool ooo = V == VariantId::ScalarOoo;
  if constexpr (K == KernelId::ArrayAddition) {
    return ooo ? arradd_scalar_ooo(k) : arradd_scalar(k);
  } else if constexpr (K == KernelId::HorizontalSum) {
    return ooo ? hsum_scalar_ooo(k) : hsum_scalar(k);
  } else if constexpr (K == KernelId::HornerCoeff1st) {
    return ooo ? horner_c1_scalar_ooo(k) : horner_c1_scalar(k);
  } else {
    return ooo ? horner_d1_scalar_ooo(k) : horner_d1_scalar(k);
  }
}

// ---------------------------------------------------------------------------
// 4-double packet bodies

#if KPROF_HAVE_VECTOR

template <bool Aligned>
KPROF_INLINE KPROF_AVX __m256d load4(const double* p) noexcept {
  if constexpr (Aligned) return _mm256_load_pd(p);
  else return _mm256_loadu_pd(p);
}

template <bool Aligned>
KPROF_INLINE KPROF_AVX void store4(double* p, __m256d v) noexcept {
  if constexpr (Aligned) _mm256_store_pd(p, v);
  else _mm256_storeu_pd(p, v);
}

KPROF_INLINE KPROF_AVX double reduce_lanes(__m256d v) noexcept {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

template <bool Aligned>
KPROF_INLINE KPROF_AVX double arradd_vect(const KernelArgs& k) noexcept {
  double* a = k.a;
  const double* b = k.b;
  for (std::size_t i = 0; i < k.n; i += 4) {
    store4<Aligned>(a + i, _mm256_add_pd(load4<Aligned>(a + i), load4<Aligned>(b + i)));
  }
  note_accumulators(0);
  return 0.0;
}

KPROF_INLINE KPROF_AVX double arradd_vect_ooo(const KernelArgs& k) noexcept {
  double* a = k.a;
  const double* b = k.b;
  for (std::size_t i = 0; i < k.n; i += 16) {
    const __m256d a0 = _mm256_load_pd(a + i);
    const __m256d a1 = _mm256_load_pd(a + i + 4);
    const __m256d a2 = _mm256_load_pd(a + i + 8);
    const __m256d a3 = _mm256_load_pd(a + i + 12);
    const __m256d s0 = _mm256_add_pd(a0, _mm256_load_pd(b + i));
    const __m256d s1 = _mm256_add_pd(a1, _mm256_load_pd(b + i + 4));
    const __m256d s2 = _mm256_add_pd(a2, _mm256_load_pd(b + i + 8));
    const __m256d s3 = _mm256_add_pd(a3, _mm256_load_pd(b + i + 12));
    _mm256_store_pd(a + i, s0);
    _mm256_store_pd(a + i + 4, s1);
    _mm256_store_pd(a + i + 8, s2);
    _mm256_store_pd(a + i + 12, s3);
  }
  note_accumulators(0);
  return 0.0;
}

template <bool Aligned>
KPROF_INLINE KPROF_AVX double hsum_vect(const KernelArgs& k) noexcept {
  const double* a = k.a;
  __m256d sum = _mm256_setzero_pd();
  for (std::size_t i = 0; i < k.n; i += 4) sum = _mm256_add_pd(sum, load4<Aligned>(a + i));
  note_accumulators(1);
  return reduce_lanes(sum);
}

KPROF_INLINE KPROF_AVX double hsum_vect_ooo(const KernelArgs& k) noexcept {
  const double* a = k.a;
  __m256d sum0 = _mm256_setzero_pd();
  __m256d sum1 = _mm256_setzero_pd();
  __m256d sum2 = _mm256_setzero_pd();
  __m256d sum3 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < k.n; i += 16) {
    const __m256d p0 = _mm256_load_pd(a + i);
    const __m256d p1 = _mm256_load_pd(a + i + 4);
    const __m256d p2 = _mm256_load_pd(a + i + 8);
    const __m256d p3 = _mm256_load_pd(a + i + 12);
    sum0 = _mm256_add_pd(sum0, p0);
    sum1 = _mm256_add_pd(sum1, p1);
    sum2 = _mm256_add_pd(sum2, p2);
    sum3 = _mm256_add_pd(sum3, p3);
  }
  note_accumulators(4);
  return reduce_lanes(_mm256_add_pd(_mm256_add_pd(sum0, sum1), _mm256_add_pd(sum2, sum3)));
}

template <bool Aligned>
KPROF_INLINE KPROF_AVX double horner_c1_vect(const KernelArgs& k) noexcept {
  const double* x = k.a;
  double* y = k.y;
  const double* c = k.coeffs;
  const __m256d top = _mm256_set1_pd(c[k.degree]);
  for (std::size_t j = 0; j < k.n; j += 4) store4<Aligned>(y + j, top);
  for (std::size_t step = k.degree; step-- > 0;) {
    const __m256d ck = _mm256_set1_pd(c[step]);
    for (std::size_t j = 0; j < k.n; j += 4) {
      store4<Aligned>(y + j,
                      _mm256_add_pd(_mm256_mul_pd(load4<Aligned>(y + j), load4<Aligned>(x + j)), ck));
    }
  }
  note_accumulators(0);
  return 0.0;
}

KPROF_INLINE KPROF_AVX double horner_c1_vect_ooo(const KernelArgs& k) noexcept {
  const double* x = k.a;
  double* y = k.y;
  const double* c = k.coeffs;
  const __m256d top = _mm256_set1_pd(c[k.degree]);
  for (std::size_t j = 0; j < k.n; j += 4) _mm256_store_pd(y + j, top);
  for (std::size_t step = k.degree; step-- > 0;) {
    const __m256d ck = _mm256_set1_pd(c[step]);
    for (std::size_t j = 0; j < k.n; j += 16) {
      const __m256d y0 = _mm256_add_pd(_mm256_mul_pd(_mm256_load_pd(y + j), _mm256_load_pd(x + j)), ck);
      const __m256d y1 = _mm256_add_pd(_mm256_mul_pd(_mm256_load_pd(y + j + 4), _mm256_load_pd(x + j + 4)), ck);
      const __m256d y2 = _mm256_add_pd(_mm256_mul_pd(_mm256_load_pd(y + j + 8), _mm256_load_pd(x + j + 8)), ck);
      const __m256d y3 = _mm256_add_pd(_mm256_mul_pd(_mm256_load_pd(y + j + 12), _mm256_load_pd(x + j + 12)), ck);
      _mm256_store_pd(y + j, y0);
      _mm256_store_pd(y + j + 4, y1);
      _mm256_store_pd(y + j + 8, y2);
      _mm256_store_pd(y + j + 12, y3);
    }
  }
  note_accumulators(0);
  return 0.0;
}

template <bool Aligned>
KPROF_INLINE KPROF_AVX double horner_d1_vect(const KernelArgs& k) noexcept {
  const double* x = k.a;
  double* y = k.y;
  const double* c = k.coeffs;
  for (std::size_t j = 0; j < k.n; j += 4) {
    const __m256d xv = load4<Aligned>(x + j);
    __m256d acc = _mm256_set1_pd(c[k.degree]);
    for (std::size_t step = k.degree; step-- > 0;) {
      acc = _mm256_add_pd(_mm256_mul_pd(acc, xv), _mm256_set1_pd(c[step]));
    }
    store4<Aligned>(y + j, acc);
  }
  note_accumulators(1);
  return 0.0;
}

// Eight chains over 16 points: each of the four packets is split into its
// even- and odd-coefficient halves, p(x) = E(x^2) + x * O(x^2), which halves
// every chain's length and keeps eight independent recurrences in flight.
KPROF_INLINE KPROF_AVX double horner_d1_vect_ooo(const KernelArgs& k) noexcept {
  const double* x = k.a;
  double* y = k.y;
  const double* c = k.coeffs;
  const std::size_t d = k.degree;
  const std::size_t top_even = d & ~std::size_t{1};
  const bool has_odd = d >= 1;
  const std::size_t top_odd = (d & 1) ? d : d - 1;
  const std::size_t even_steps = top_even / 2;
  const std::size_t odd_steps = has_odd ? (top_odd - 1) / 2 : 0;
  const std::size_t common = even_steps < odd_steps ? even_steps : odd_steps;

  for (std::size_t j = 0; j < k.n; j += 16) {
    __m256d xv[4], zv[4], ev[4], ov[4];
    for (int l = 0; l < 4; ++l) {
      xv[l] = _mm256_load_pd(x + j + 4 * l);
      zv[l] = _mm256_mul_pd(xv[l], xv[l]);
      ev[l] = _mm256_set1_pd(c[top_even]);
      ov[l] = has_odd ? _mm256_set1_pd(c[top_odd]) : _mm256_setzero_pd();
    }
    std::size_t s = 0;
    for (; s < common; ++s) {
      const __m256d ce = _mm256_set1_pd(c[top_even - 2 * (s + 1)]);
      const __m256d co = _mm256_set1_pd(c[top_odd - 2 * (s + 1)]);
      ev[0] = _mm256_add_pd(_mm256_mul_pd(ev[0], zv[0]), ce);
      ov[0] = _mm256_add_pd(_mm256_mul_pd(ov[0], zv[0]), co);
      ev[1] = _mm256_add_pd(_mm256_mul_pd(ev[1], zv[1]), ce);
      ov[1] = _mm256_add_pd(_mm256_mul_pd(ov[1], zv[1]), co);
      ev[2] = _mm256_add_pd(_mm256_mul_pd(ev[2], zv[2]), ce);
      ov[2] = _mm256_add_pd(_mm256_mul_pd(ov[2], zv[2]), co);
      ev[3] = _mm256_add_pd(_mm256_mul_pd(ev[3], zv[3]), ce);
      ov[3] = _mm256_add_pd(_mm256_mul_pd(ov[3], zv[3]), co);
    }
    for (std::size_t t = s; t < even_steps; ++t) {
      const __m256d ce = _mm256_set1_pd(c[top_even - 2 * (t + 1)]);
      for (int l = 0; l < 4; ++l) ev[l] = _mm256_add_pd(_mm256_mul_pd(ev[l], zv[l]), ce);
    }
    for (std::size_t t = s; t < odd_steps; ++t) {
      const __m256d co = _mm256_set1_pd(c[top_odd - 2 * (t + 1)]);
      for (int l = 0; l < 4; ++l) ov[l] = _mm256_add_pd(_mm256_mul_pd(ov[l], zv[l]), co);
    }
    for (int l = 0; l < 4; ++l) {
      _mm256_store_pd(y + j + 4 * l, _mm256_add_pd(ev[l], _mm256_mul_pd(xv[l], ov[l])));
    }
  }
  note_accumulators(8);
  return 0.0;
}

template <KernelId K, VariantId V>
KPROF_INLINE KPROF_AVX double apply_vector(const KernelArgs& k) noexcept {
  static_assert(is_vector(V));
  constexpr bool aligned = V != VariantId::VectUnaligned;
  constexpr bool ooo = V == VariantId::VectOoo;
  if constexpr (K == KernelId::ArrayAddition) {
    if constexpr (ooo) return arradd_vect_ooo(k);
    else return arradd_vect<aligned>(k);
  } else if constexpr (K == KernelId::HorizontalSum) {
    if constexpr (ooo) return hsum_vect_ooo(k);
    else return hsum_vect<aligned>(k);
  } else if constexpr (K == KernelId::HornerCoeff1st) {
    if constexpr (ooo) return horner_c1_vect_ooo(k);
    else return horner_c1_vect<aligned>(k);
  } else {
    if constexpr (ooo) return horner_d1_vect_ooo(k);
    else return horner_d1_vect<aligned>(k);
  }
}

#endif  // KPROF_HAVE_VECTOR

// ---------------------------------------------------------------------------
// Out-of-line entry points: one real call per invocation, opaque to
// interprocedural constant propagation.

using KernelEntry = double (*)(const KernelArgs&);

template <KernelId K, VariantId V>
KPROF_NOIPA double scalar_entry(const KernelArgs& k) noexcept {
  return apply_scalar<K, V>(k);
}

#if KPROF_HAVE_VECTOR
template <KernelId K, VariantId V>
KPROF_NOIPA KPROF_AVX double vector_entry(const KernelArgs& k) noexcept {
  return apply_vector<K, V>(k);
}
#endif

template <KernelId K, VariantId V>
constexpr KernelEntry entry_for() noexcept {
  if constexpr (is_vector(V)) {
#if KPROF_HAVE_VECTOR
    return &vector_entry<K, V>;
#else
    return nullptr;
#endif
  } else {
    return &scalar_entry<K, V>;
  }
}

/// Calls `fn.template operator()<K, V>()` for the runtime pair (kernel, variant).
template <class Fn>
decltype(auto) with_kernel_variant(KernelId kernel, VariantId variant, Fn&& fn) {
  auto on_variant = [&]<KernelId K>() -> decltype(auto) {
    switch (variant) {
      case VariantId::Scalar: return fn.template operator()<K, VariantId::Scalar>();
      case VariantId::ScalarOoo: return fn.template operator()<K, VariantId::ScalarOoo>();
      case VariantId::Vect: return fn.template operator()<K, VariantId::Vect>();
      case VariantId::VectOoo: return fn.template operator()<K, VariantId::VectOoo>();
      case VariantId::VectUnaligned: break;
    }
    return fn.template operator()<K, VariantId::VectUnaligned>();
  };
  switch (kernel) {
    case KernelId::ArrayAddition: return on_variant.template operator()<KernelId::ArrayAddition>();
    case KernelId::HorizontalSum: return on_variant.template operator()<KernelId::HorizontalSum>();
    case KernelId::HornerCoeff1st: return on_variant.template operator()<KernelId::HornerCoeff1st>();
    case KernelId::HornerData1st: break;
  }
  return on_variant.template operator()<KernelId::HornerData1st>();
}

/// Out-of-line entry for (kernel, variant); nullptr if not compiled in.
KernelEntry kernel_entry(KernelId kernel, VariantId variant) noexcept;

KernelArgs bind_args(KernelBuffers& buffers) noexcept;

}  // namespace kprof::detail
