// Stand-in for the native kernel library: exports the kp_* C ABI by
// forwarding to the in-process kernel bodies.

#include <cstdint>

#include "kernelprof/detail/kernel_impl.hpp"

namespace {

using kprof::KernelId;
using kprof::VariantId;
using kprof::detail::KernelArgs;

bool host_has_vect() {
#if KPROF_HAVE_VECTOR
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx");
#else
  return false;
#endif
}

template <KernelId K, VariantId V>
double call(const KernelArgs& args) {
  if constexpr (kprof::is_vector(V)) {
    if (!host_has_vect()) return kprof::detail::scalar_entry<K, VariantId::Scalar>(args);
  }
  return kprof::detail::entry_for<K, V>()(args);
}

}  // namespace

#define KP_ARRADD(suffix, V)                                                     \
  extern "C" void kp_arradd_##suffix(double* a, const double* b, std::uint64_t n) { \
    KernelArgs args;                                                             \
    args.a = a;                                                                  \
    args.b = b;                                                                  \
    args.n = n;                                                                  \
    call<KernelId::ArrayAddition, V>(args);                                      \
  }

#define KP_HSUM(suffix, V)                                                    \
  extern "C" double kp_hsum_##suffix(const double* a, std::uint64_t n) {      \
    KernelArgs args;                                                          \
    args.a = const_cast<double*>(a);                                          \
    args.n = n;                                                               \
    return call<KernelId::HorizontalSum, V>(args);                            \
  }

#define KP_HORNER(name, K, suffix, V)                                                                \
  extern "C" void kp_##name##_##suffix(const double* c, const double* x, double* y, std::uint64_t n) { \
    KernelArgs args;                                                                                 \
    args.coeffs = c;                                                                                 \
    args.a = const_cast<double*>(x);                                                                 \
    args.y = y;                                                                                      \
    args.n = n;                                                                                      \
    args.degree = kprof::kHornerDegree;                                                              \
    call<K, V>(args);                                                                                \
  }

#define KP_ALL(MACRO, ...)                              \
  MACRO(__VA_ARGS__ scalar, VariantId::Scalar)           \
  MACRO(__VA_ARGS__ scalar_ooo, VariantId::ScalarOoo)    \
  MACRO(__VA_ARGS__ vect, VariantId::Vect)               \
  MACRO(__VA_ARGS__ vect_unalign, VariantId::VectUnaligned)

KP_ALL(KP_ARRADD)
KP_ARRADD(vect_ooo, VariantId::VectOoo)
KP_ALL(KP_HSUM)
#ifndef KP_OMIT_HSUM_VECT_OOO
KP_HSUM(vect_ooo, VariantId::VectOoo)
#endif
KP_ALL(KP_HORNER, horner_c1, KernelId::HornerCoeff1st,)
KP_HORNER(horner_c1, KernelId::HornerCoeff1st, vect_ooo, VariantId::VectOoo)
KP_ALL(KP_HORNER, horner_d1, KernelId::HornerData1st,)
KP_HORNER(horner_d1, KernelId::HornerData1st, vect_ooo, VariantId::VectOoo)

extern "C" int kp_has_vect() { return host_has_vect() ? 1 : 0; }
