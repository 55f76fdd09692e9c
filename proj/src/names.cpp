#include <regex>

#include "kernelprof/boundary.hpp"
#include "kernelprof/kernels.hpp"
#include "kernelprof/profile.hpp"

namespace kprof {

std::string_view to_string(KernelId kernel) noexcept {
  switch (kernel) {
    case KernelId::ArrayAddition: return "arradd";
    case KernelId::HorizontalSum: return "hsum";
    case KernelId::HornerCoeff1st: return "horner_c1";
    case KernelId::HornerData1st: return "horner_d1";
  }
  return "?";
}

std::string_view describe(KernelId kernel) noexcept {
  switch (kernel) {
    case KernelId::ArrayAddition: return "Array addition: adds one array into the other";
    case KernelId::HorizontalSum: return "Horizontal sum: sums the values of an array";
    case KernelId::HornerCoeff1st: return "Horner coefficient-1st: degree-64 polynomial, coefficient loop outermost";
    case KernelId::HornerData1st: return "Horner data-1st: degree-64 polynomial, data loop outermost";
  }
  return "?";
}

std::string_view to_string(VariantId variant) noexcept {
  switch (variant) {
    case VariantId::Scalar: return "scalar";
    case VariantId::ScalarOoo: return "scalar_ooo";
    case VariantId::Vect: return "vect";
    case VariantId::VectOoo: return "vect_ooo";
    case VariantId::VectUnaligned: return "vect_unalign";
  }
  return "?";
}

std::string_view to_string(AlignmentPolicy policy) noexcept {
  return policy == AlignmentPolicy::Aligned32 ? "aligned32" : "mis8";
}

std::string_view to_string(CallPathId path) noexcept {
  switch (path) {
    case CallPathId::Inlined: return "inlined";
    case CallPathId::Outlined: return "outlined";
    case CallPathId::DynamicSymbol: return "dynamic_symbol";
    case CallPathId::CallbackPinned: return "callback_pinned";
    case CallPathId::CallbackCopy: return "callback_copy";
    case CallPathId::NativeMemoryDirect: return "native_memory";
  }
  return "?";
}

std::optional<KernelId> parse_kernel(std::string_view text) {
  for (KernelId kernel : kAllKernels) {
    if (to_string(kernel) == text) return kernel;
  }
  return std::nullopt;
}

std::optional<VariantId> parse_variant(std::string_view text) {
  for (VariantId variant : kAllVariants) {
    if (to_string(variant) == text) return variant;
  }
  return std::nullopt;
}

std::optional<AlignmentPolicy> parse_alignment(std::string_view text) {
  if (text == "aligned32") return AlignmentPolicy::Aligned32;
  if (text == "mis8") return AlignmentPolicy::Misaligned8;
  return std::nullopt;
}

std::optional<CallPathId> parse_call_path(std::string_view text) {
  for (CallPathId path : kAllCallPaths) {
    if (to_string(path) == text) return path;
  }
  return std::nullopt;
}

std::string make_label(CallPathId path, VariantId variant, AlignmentPolicy alignment) {
  std::string label;
  switch (path) {
    case CallPathId::Inlined: label = "java_inline"; break;
    case CallPathId::Outlined: label = "java"; break;
    case CallPathId::CallbackPinned: label = "jni"; break;
    case CallPathId::NativeMemoryDirect: label = "jni_native"; break;
    case CallPathId::CallbackCopy: label = "jni_copy"; break;
    case CallPathId::DynamicSymbol: label = "jni_dyn"; break;
  }
  switch (variant) {
    case VariantId::Scalar: break;
    case VariantId::ScalarOoo: label += "_ooo"; break;
    case VariantId::Vect:
      label += alignment == AlignmentPolicy::Aligned32 ? "_vect" : "_vect_unalign";
      break;
    case VariantId::VectOoo: label += "_vect_ooo"; break;
    case VariantId::VectUnaligned: label += "_vect_unalign"; break;
  }
  return label;
}

bool is_valid_label(std::string_view label) {
  static const std::regex grammar(
      "^(java(_inline)?|jni(_(native|copy|dyn))?)(_(vect|vect_unalign))?(_ooo)?$");
  return std::regex_match(label.begin(), label.end(), grammar);
}

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(values.size() - 1);
}

}  // namespace kprof
