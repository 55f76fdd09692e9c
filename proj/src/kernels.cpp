#include "kernelprof/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <string>

#include "kernelprof/detail/kernel_impl.hpp"
#include "kernelprof/error.hpp"

namespace kprof {

namespace detail {

std::atomic<bool> g_instrumentation{false};
thread_local int t_partial_accumulators = 0;

KernelEntry kernel_entry(KernelId kernel, VariantId variant) noexcept {
  return with_kernel_variant(kernel, variant,
                             []<KernelId K, VariantId V>() { return entry_for<K, V>(); });
}

KernelArgs bind_args(KernelBuffers& buffers) noexcept {
  KernelArgs args;
  args.n = buffers.n();
  args.a = buffers.a.data();
  switch (buffers.kernel) {
    case KernelId::ArrayAddition:
      args.b = buffers.b.data();
      break;
    case KernelId::HorizontalSum:
      break;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      args.coeffs = buffers.coeffs.data();
      args.y = buffers.b.data();
      args.degree = buffers.degree();
      break;
  }
  return args;
}

}  // namespace detail

std::size_t variant_stride(KernelId kernel, VariantId variant) noexcept {
  switch (variant) {
    case VariantId::Scalar:
      return 1;
    case VariantId::ScalarOoo:
      return kernel == KernelId::HornerData1st ? 8 : 4;
    case VariantId::Vect:
    case VariantId::VectUnaligned:
      return 4;
    case VariantId::VectOoo:
      return 16;
  }
  return 1;
}

std::uint64_t flop_per_invocation(KernelId kernel, WorkloadSize size) {
  switch (kernel) {
    case KernelId::ArrayAddition:
    case KernelId::HorizontalSum:
      return size.n;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      // 3 flops per coefficient per point: 192n at degree 64.
      return 3ull * size.degree * size.n;
  }
  return 0;
}

std::uint64_t memory_per_invocation(KernelId kernel, WorkloadSize size) {
  constexpr std::uint64_t w = sizeof(double);
  switch (kernel) {
    case KernelId::ArrayAddition:
      return 2 * w * size.n;
    case KernelId::HorizontalSum:
      return w * size.n;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      return w * (size.degree + 2 * size.n + 1);
  }
  return 0;
}

double elements_for_memory(KernelId kernel, double bytes, std::size_t degree) {
  constexpr double w = sizeof(double);
  switch (kernel) {
    case KernelId::ArrayAddition:
      return bytes / (2 * w);
    case KernelId::HorizontalSum:
      return bytes / w;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      return (bytes / w - static_cast<double>(degree) - 1.0) / 2.0;
  }
  return 0.0;
}

double reassociation_rtol(std::size_t n) noexcept {
  return std::max(1e-12, static_cast<double>(n) * 0x1.0p-50);
}

KernelBuffers KernelBuffers::array_addition(std::span<const double> a, std::span<const double> b,
                                            AlignmentPolicy policy) {
  KernelBuffers buffers;
  buffers.kernel = KernelId::ArrayAddition;
  buffers.a = Buffer::from_values(a, policy);
  buffers.b = Buffer::from_values(b, policy);
  buffers.validate();
  return buffers;
}

KernelBuffers KernelBuffers::horizontal_sum(std::span<const double> a, AlignmentPolicy policy) {
  KernelBuffers buffers;
  buffers.kernel = KernelId::HorizontalSum;
  buffers.a = Buffer::from_values(a, policy);
  return buffers;
}

KernelBuffers KernelBuffers::horner(KernelId kernel, std::span<const double> coeffs,
                                    std::span<const double> x, AlignmentPolicy policy) {
  if (!is_horner(kernel)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(kernel)) + " is not a Horner kernel");
  }
  KernelBuffers buffers;
  buffers.kernel = kernel;
  buffers.coeffs = Buffer::from_values(coeffs, policy);
  buffers.a = Buffer::from_values(x, policy);
  buffers.b = Buffer(x.size(), policy);
  buffers.validate();
  return buffers;
}

KernelBuffers KernelBuffers::clone() const {
  KernelBuffers copy;
  copy.kernel = kernel;
  copy.a = a.clone();
  copy.b = b.clone();
  copy.coeffs = coeffs.clone();
  return copy;
}

std::vector<Buffer*> KernelBuffers::arrays() {
  switch (kernel) {
    case KernelId::ArrayAddition:
      return {&a, &b};
    case KernelId::HorizontalSum:
      return {&a};
    default:
      return {&coeffs, &a, &b};
  }
}

std::vector<const Buffer*> KernelBuffers::arrays() const {
  auto mutable_arrays = const_cast<KernelBuffers*>(this)->arrays();
  return {mutable_arrays.begin(), mutable_arrays.end()};
}

void KernelBuffers::validate() const {
  switch (kernel) {
    case KernelId::ArrayAddition:
      if (a.size() != b.size()) {
        throw Error(ErrorCode::SizeMismatch, "arradd: a has " + std::to_string(a.size()) +
                                                 " elements but b has " + std::to_string(b.size()));
      }
      break;
    case KernelId::HorizontalSum:
      break;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      if (coeffs.size() == 0) throw Error(ErrorCode::SizeMismatch, "horner: empty coefficient array");
      if (a.size() != b.size()) {
        throw Error(ErrorCode::SizeMismatch, "horner: x has " + std::to_string(a.size()) +
                                                 " elements but y has " + std::to_string(b.size()));
      }
      break;
  }
}

KernelOutput collect_output(const KernelBuffers& buffers, std::optional<double> sum) {
  KernelOutput out;
  switch (buffers.kernel) {
    case KernelId::ArrayAddition:
      out.values.assign(buffers.a.values().begin(), buffers.a.values().end());
      break;
    case KernelId::HorizontalSum:
      out.sum = sum;
      break;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      out.values.assign(buffers.b.values().begin(), buffers.b.values().end());
      break;
  }
  return out;
}

KernelOutput run_reference(KernelBuffers& buffers) {
  buffers.validate();
  const std::size_t n = buffers.n();
  switch (buffers.kernel) {
    case KernelId::ArrayAddition: {
      auto a = buffers.a.values();
      auto b = buffers.b.values();
      for (std::size_t i = 0; i < n; ++i) a[i] = a[i] + b[i];
      return collect_output(buffers, std::nullopt);
    }
    case KernelId::HorizontalSum: {
      double sum = 0.0;
      for (double v : buffers.a.values()) sum = sum + v;
      return collect_output(buffers, sum);
    }
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st: {
      auto c = buffers.coeffs.values();
      auto x = buffers.a.values();
      auto y = buffers.b.values();
      for (std::size_t j = 0; j < n; ++j) {
        double acc = c.back();
        for (std::size_t k = c.size() - 1; k-- > 0;) acc = acc * x[j] + c[k];
        y[j] = acc;
      }
      return collect_output(buffers, std::nullopt);
    }
  }
  return {};
}

void check_runnable(VariantId variant, const KernelBuffers& buffers, const HostCapabilities& caps) {
  buffers.validate();
  for (const auto& entry : list_variants(buffers.kernel, caps)) {
    if (entry.variant == variant && !entry.available) {
      throw Error(ErrorCode::VariantUnavailable, std::string(to_string(buffers.kernel)) + "/" +
                                                     std::string(to_string(variant)) + ": " + entry.reason);
    }
  }
  const std::size_t stride = variant_stride(buffers.kernel, variant);
  if (buffers.n() % stride != 0) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(variant)) + " needs n to be a multiple of " +
                                                std::to_string(stride) + ", got " +
                                                std::to_string(buffers.n()));
  }
  if (const auto required = required_alignment(variant)) {
    // Coefficients are broadcast one scalar at a time; only streamed arrays matter.
    const Buffer* streamed[] = {&buffers.a, &buffers.b};
    const std::size_t count = buffers.kernel == KernelId::HorizontalSum ? 1 : 2;
    for (std::size_t i = 0; i < count; ++i) {
      if (streamed[i]->policy() != *required) {
        throw Error(ErrorCode::AlignmentMismatch,
                    std::string(to_string(variant)) + " requires " + std::string(to_string(*required)) +
                        " buffers, got " + std::string(to_string(streamed[i]->policy())));
      }
    }
  }
}

KernelOutput run_variant(VariantId variant, KernelBuffers& buffers) {
  check_runnable(variant, buffers);
  const auto entry = detail::kernel_entry(buffers.kernel, variant);
  const auto args = detail::bind_args(buffers);
  const double result = entry(args);
  return collect_output(buffers, buffers.kernel == KernelId::HorizontalSum ? std::optional(result)
                                                                            : std::nullopt);
}

namespace {

void fill_uniform(Buffer& buffer, std::mt19937_64& rng) {
  // 53 random mantissa bits scaled into [0,1); identical on every platform.
  for (double& v : buffer.values()) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

KernelBuffers make_buffers(KernelId kernel, WorkloadSize size, AlignmentPolicy policy,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KernelBuffers buffers;
  buffers.kernel = kernel;
  buffers.a = Buffer(size.n, policy);
  fill_uniform(buffers.a, rng);
  switch (kernel) {
    case KernelId::ArrayAddition:
      buffers.b = Buffer(size.n, policy);
      fill_uniform(buffers.b, rng);
      break;
    case KernelId::HorizontalSum:
      break;
    case KernelId::HornerCoeff1st:
    case KernelId::HornerData1st:
      buffers.coeffs = Buffer(size.degree + 1, policy);
      fill_uniform(buffers.coeffs, rng);
      buffers.b = Buffer(size.n, policy);
      break;
  }
  return buffers;
}

HostCapabilities HostCapabilities::detect() {
  HostCapabilities caps;
#if KPROF_HAVE_VECTOR
  __builtin_cpu_init();
  caps.vector256 = __builtin_cpu_supports("avx");
#endif
  if (const char* off = std::getenv("KERNELPROF_NO_VECTOR"); off && *off && std::string(off) != "0") {
    caps.vector256 = false;
  }
  return caps;
}

const HostCapabilities& HostCapabilities::host() {
  static const HostCapabilities caps = detect();
  return caps;
}

std::vector<VariantAvailability> list_variants(KernelId, const HostCapabilities& caps) {
  std::vector<VariantAvailability> out;
  for (VariantId variant : kAllVariants) {
    if (!is_vector(variant)) {
      out.push_back({variant, true, {}});
    } else if (!KPROF_HAVE_VECTOR || !caps.vector256) {
      out.push_back({variant, false, "no 256-bit vector support"});
    } else {
      out.push_back({variant, true, {}});
    }
  }
  return out;
}

bool variant_available(KernelId kernel, VariantId variant, const HostCapabilities& caps) {
  for (const auto& entry : list_variants(kernel, caps)) {
    if (entry.variant == variant) return entry.available;
  }
  return false;
}

namespace debug {

void set_instrumentation(bool enabled) noexcept {
  detail::g_instrumentation.store(enabled, std::memory_order_relaxed);
}

bool instrumentation_enabled() noexcept {
  return detail::g_instrumentation.load(std::memory_order_relaxed);
}

int last_partial_accumulators() noexcept { return detail::t_partial_accumulators; }

}  // namespace debug

}  // namespace kprof
