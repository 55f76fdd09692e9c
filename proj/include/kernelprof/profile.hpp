#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kernelprof/boundary.hpp"
#include "kernelprof/buffer.hpp"
#include "kernelprof/kernels.hpp"
#include "kernelprof/machine.hpp"

namespace kprof {

struct SamplePoint {
  std::size_t n = 0;
  std::uint64_t memory_per_invocation = 0;  ///< bytes
  std::uint64_t flop_per_invocation = 0;
  double best_mean_seconds = 0.0;
  double performance = 0.0;                 ///< flop/s, = flops / best_mean_seconds
  std::uint64_t inner_iters_used = 0;
  std::vector<double> rep_means;            ///< per-repetition mean seconds
  double rep_variance = 0.0;                ///< sample variance of rep_means
};

/// A performance profile: one implementation measured across working-set sizes.
struct Profile {
  KernelId kernel = KernelId::ArrayAddition;
  VariantId variant = VariantId::Scalar;
  CallPathId path = CallPathId::Inlined;
  AlignmentPolicy alignment = AlignmentPolicy::Aligned32;
  std::vector<SamplePoint> points;  ///< strictly increasing memory_per_invocation
  std::shared_ptr<const MachineProfile> machine;
  std::string label;
  bool complete = true;             ///< false when a sweep aborted part way
  std::string failure;

  double min_memory() const { return static_cast<double>(points.front().memory_per_invocation); }
  double max_memory() const { return static_cast<double>(points.back().memory_per_invocation); }
};

// Implementation labels: Type_InvocationOpt_AsymptoticOpts.
//
//   Inlined            java_inline      Outlined       java
//   CallbackPinned     jni              NativeMemory   jni_native
//   CallbackCopy       jni_copy         DynamicSymbol  jni_dyn
//
// followed by _vect / _vect_unalign and/or _ooo. Vect on Misaligned8 buffers
// is labelled vect_unalign.
std::string make_label(CallPathId path, VariantId variant, AlignmentPolicy alignment);
bool is_valid_label(std::string_view label);

/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(const std::vector<double>& values);

}  // namespace kprof
