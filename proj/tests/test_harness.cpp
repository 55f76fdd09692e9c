#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kernelprof/error.hpp"
#include "kernelprof/harness.hpp"

using namespace kprof;

namespace {

MeasurementConfig quick() {
  MeasurementConfig config;
  config.min_inner_time = std::chrono::duration<double>(0.001);
  config.outer_reps = 3;
  config.warmup_passes = 1;
  return config;
}

}  // namespace

TEST_CASE("measurement config limits") {
  MeasurementConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.warmup_passes == 2);
  CHECK(config.min_inner_time.count() == doctest::Approx(0.020));

  auto bad = config;
  bad.warmup_passes = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.outer_reps = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.min_inner_time = std::chrono::duration<double>(0.0005);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("measure_point arithmetic") {
  const auto impl = implementation(KernelId::HorizontalSum, VariantId::Scalar, CallPathId::Inlined);
  const SamplePoint p = measure_point(impl, {4096}, quick());
  CHECK(p.n == 4096);
  CHECK(p.memory_per_invocation == 32768);
  CHECK(p.flop_per_invocation == 4096);
  CHECK(p.performance > 0);
  CHECK(p.performance == static_cast<double>(p.flop_per_invocation) / p.best_mean_seconds);
  CHECK(p.performance * p.best_mean_seconds == doctest::Approx(4096.0).epsilon(1e-15));
  REQUIRE(p.rep_means.size() == 3);
  for (double mean : p.rep_means) CHECK(p.best_mean_seconds <= mean);
  CHECK(p.best_mean_seconds == *std::min_element(p.rep_means.begin(), p.rep_means.end()));
  CHECK(p.inner_iters_used >= 1);
  CHECK(p.best_mean_seconds * static_cast<double>(p.inner_iters_used) >= 0.001 * 0.5);
  CHECK(p.rep_variance == doctest::Approx(sample_variance(p.rep_means)));
}

TEST_CASE("inner iterations span the minimum time") {
  std::vector<std::pair<std::uint64_t, double>> blocks;
  debug::set_timing_observer([&](std::uint64_t iterations, double seconds) { blocks.emplace_back(iterations, seconds); });
  const auto impl = implementation(KernelId::ArrayAddition, VariantId::ScalarOoo, CallPathId::Outlined);
  const SamplePoint p = measure_point(impl, {256}, quick());
  debug::set_timing_observer(nullptr);
  REQUIRE(blocks.size() == 3);
  for (const auto& [iterations, seconds] : blocks) {
    CHECK(iterations == p.inner_iters_used);
    CHECK(seconds > 0);
  }
}

TEST_CASE("measurements are exclusive within a process") {
  bool refused = false;
  debug::set_timing_observer([&](std::uint64_t, double) {
    if (refused) return;
    try {
      measure_point(implementation(KernelId::HorizontalSum, VariantId::Scalar, CallPathId::Inlined), {16}, quick());
    } catch (const Error& e) {
      refused = e.code() == ErrorCode::MeasurementBusy;
    }
  });
  measure_point(implementation(KernelId::HorizontalSum, VariantId::Scalar, CallPathId::Inlined), {16}, quick());
  debug::set_timing_observer(nullptr);
  CHECK(refused);
  CHECK_NOTHROW(
      measure_point(implementation(KernelId::HorizontalSum, VariantId::Scalar, CallPathId::Inlined), {16}, quick()));
}

TEST_CASE("geometric sizes") {
  SUBCASE("small horizontal-sum range") {
    const auto sizes = geometric_sizes(KernelId::HorizontalSum, 256, 1024, 2);
    REQUIRE(sizes.size() == 3);
    CHECK(memory_per_invocation(KernelId::HorizontalSum, sizes[0]) == 256);
    CHECK(memory_per_invocation(KernelId::HorizontalSum, sizes[1]) == 512);
    CHECK(memory_per_invocation(KernelId::HorizontalSum, sizes[2]) == 1024);
  }
  SUBCASE("default range has one size per doubling") {
    // log2(64 MiB / 256 B) + 1
    const int expected = static_cast<int>(std::log2(64.0 * 1024 * 1024 / 256)) + 1;
    for (KernelId kernel : {KernelId::ArrayAddition, KernelId::HorizontalSum}) {
      const auto sizes = geometric_sizes(kernel, 256, 64.0 * 1024 * 1024, 2);
      CHECK(static_cast<int>(sizes.size()) == expected);
      CHECK(memory_per_invocation(kernel, sizes.front()) == 256);
      CHECK(memory_per_invocation(kernel, sizes.back()) == 64ull * 1024 * 1024);
    }
  }
  SUBCASE("min equals max") {
    CHECK(geometric_sizes(KernelId::ArrayAddition, 4096, 4096, 2).size() == 1);
  }
  SUBCASE("every size is a multiple of 16 and strictly increasing") {
    for (KernelId kernel : kAllKernels) {
      const auto sizes = geometric_sizes(kernel, 256, 1 << 24, 1.5);
      REQUIRE_FALSE(sizes.empty());
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        CHECK(sizes[i].n % kSizeQuantum == 0);
        if (i > 0) CHECK(memory_per_invocation(kernel, sizes[i]) > memory_per_invocation(kernel, sizes[i - 1]));
      }
    }
  }
  SUBCASE("unsatisfiable") {
    CHECK(geometric_sizes(KernelId::HornerCoeff1st, 8, 16, 2).empty());
    CHECK_THROWS_AS(geometric_sizes(KernelId::HorizontalSum, 1024, 256, 2), Error);
    CHECK_THROWS_AS(geometric_sizes(KernelId::HorizontalSum, 256, 1024, 1), Error);
  }
}

TEST_CASE("sweeps") {
  const auto impl = implementation(KernelId::HorizontalSum, VariantId::Scalar, CallPathId::Outlined);
  SUBCASE("one point per size") {
    const auto sizes = geometric_sizes(KernelId::HorizontalSum, 256, 2048, 2);
    const Profile profile = sweep(impl, sizes, quick());
    CHECK(profile.points.size() == sizes.size());
    CHECK(profile.complete);
    CHECK(profile.label == "java");
    for (std::size_t i = 1; i < profile.points.size(); ++i) {
      CHECK(profile.points[i].memory_per_invocation > profile.points[i - 1].memory_per_invocation);
    }
    CHECK(is_valid_label(profile.label));
  }
  SUBCASE("single size") {
    const Profile profile = sweep(impl, {{64}}, quick());
    REQUIRE(profile.points.size() == 1);
    CHECK(profile.points[0].n == 64);
    CHECK(profile.points[0].performance ==
          static_cast<double>(profile.points[0].flop_per_invocation) / profile.points[0].best_mean_seconds);
  }
  SUBCASE("rejects unordered sizes") {
    CHECK_THROWS_AS(sweep(impl, {{64}, {32}}, quick()), Error);
    CHECK_THROWS_AS(sweep(impl, {}, quick()), Error);
  }
  SUBCASE("a failing point keeps earlier points") {
    MeasurementConfig config = quick();
    config.max_inner_iters = 1;
    config.min_inner_time = std::chrono::duration<double>(0.05);
    // One invocation of the small size cannot fill 50 ms, so the sweep stops at once.
    const Profile profile = sweep(impl, {{16}, {32}}, config);
    CHECK_FALSE(profile.complete);
    CHECK(profile.points.empty());
    CHECK(profile.failure.find("n=16") != std::string::npos);
  }
  SUBCASE("rejects impossible combinations before measuring") {
    auto mis = impl;
    mis.variant = VariantId::Vect;
    mis.alignment = AlignmentPolicy::Misaligned8;
    if (HostCapabilities::host().vector256) CHECK_THROWS_AS(sweep(mis, {{64}}, quick()), Error);
    auto dynamic = impl;
    dynamic.path = CallPathId::DynamicSymbol;
    CHECK_THROWS_AS(sweep(dynamic, {{64}}, quick()), Error);
  }
}

TEST_CASE("labels") {
  CHECK(make_label(CallPathId::Inlined, VariantId::Scalar, AlignmentPolicy::Aligned32) == "java_inline");
  CHECK(make_label(CallPathId::Outlined, VariantId::ScalarOoo, AlignmentPolicy::Aligned32) == "java_ooo");
  CHECK(make_label(CallPathId::CallbackPinned, VariantId::VectOoo, AlignmentPolicy::Aligned32) == "jni_vect_ooo");
  CHECK(make_label(CallPathId::NativeMemoryDirect, VariantId::Vect, AlignmentPolicy::Aligned32) == "jni_native_vect");
  CHECK(make_label(CallPathId::Inlined, VariantId::VectUnaligned, AlignmentPolicy::Misaligned8) ==
        "java_inline_vect_unalign");
  CHECK(make_label(CallPathId::Outlined, VariantId::Vect, AlignmentPolicy::Misaligned8) == "java_vect_unalign");
  CHECK(make_label(CallPathId::DynamicSymbol, VariantId::Scalar, AlignmentPolicy::Aligned32) == "jni_dyn");
  CHECK(make_label(CallPathId::CallbackCopy, VariantId::Scalar, AlignmentPolicy::Aligned32) == "jni_copy");

  for (CallPathId path : kAllCallPaths) {
    for (VariantId variant : kAllVariants) {
      for (AlignmentPolicy policy : {AlignmentPolicy::Aligned32, AlignmentPolicy::Misaligned8}) {
        CHECK(is_valid_label(make_label(path, variant, policy)));
      }
    }
  }
  CHECK_FALSE(is_valid_label("java_native"));
  CHECK_FALSE(is_valid_label("jni_ooo_vect"));
  CHECK_FALSE(is_valid_label("c_inline"));
  CHECK_FALSE(is_valid_label(""));
}

TEST_CASE("sample variance") {
  CHECK(sample_variance({}) == 0);
  CHECK(sample_variance({3.0}) == 0);
  CHECK(sample_variance({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(5.0 / 3.0));
}
