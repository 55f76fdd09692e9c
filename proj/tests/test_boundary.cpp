#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <numeric>
#include <random>

#include "kernelprof/boundary.hpp"
#include "kernelprof/error.hpp"

using namespace kprof;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

const NativeLibrary& fixture_library() {
  static const NativeLibrary library = load_native_library(KPROF_FIXTURE_LIB);
  return library;
}

std::vector<CallPathId> in_process_paths() { return {kInProcessCallPaths.begin(), kInProcessCallPaths.end()}; }

}  // namespace

TEST_CASE("call paths preserve semantics on hand cases") {
  SUBCASE("native memory sum") {
    auto buffers = KernelBuffers::horizontal_sum(std::vector{1.0, 2.0, 3.0, 4.0});
    CHECK(*invoke(CallPathId::NativeMemoryDirect, VariantId::Scalar, buffers).sum == 10.0);
  }
  SUBCASE("copy mode round trip") {
    auto buffers = KernelBuffers::array_addition(std::vector{1.0, 2.0}, std::vector{3.0, 4.0});
    const auto out = invoke(CallPathId::CallbackCopy, VariantId::Scalar, buffers);
    CHECK(out.values == std::vector{4.0, 6.0});
    CHECK(buffers.a.values()[0] == 4.0);
    CHECK(buffers.a.values()[1] == 6.0);
  }
  SUBCASE("pinned vector ooo sum of 0..15") {
    if (!variant_available(KernelId::HorizontalSum, VariantId::VectOoo)) return;
    std::vector<double> values(16);
    std::iota(values.begin(), values.end(), 0.0);
    double brute = 0;
    for (double v : values) brute += v;
    auto buffers = KernelBuffers::horizontal_sum(values);
    CHECK(*invoke(CallPathId::CallbackPinned, VariantId::VectOoo, buffers).sum == brute);
  }
}

TEST_CASE("every in-process path is bit-identical for a fixed variant") {
  std::mt19937_64 rng(99);
  for (KernelId kernel : kAllKernels) {
    for (const auto& v : list_variants(kernel)) {
      if (!v.available) continue;
      for (std::size_t n : {16u, 160u}) {
        const auto base = make_buffers(kernel, {n}, natural_alignment(v.variant), rng());
        auto direct = base.clone();
        const KernelOutput want = run_variant(v.variant, direct);
        for (CallPathId path : in_process_paths()) {
          auto buffers = base.clone();
          CAPTURE(to_string(kernel));
          CAPTURE(to_string(v.variant));
          CAPTURE(to_string(path));
          CHECK(invoke(path, v.variant, buffers) == want);
        }
      }
    }
  }
}

TEST_CASE("repeated runs through a call site keep working on the same data") {
  auto buffers = KernelBuffers::array_addition(std::vector<double>(16, 1.0), std::vector<double>(16, 0.5));
  for (CallPathId path : in_process_paths()) {
    auto copy = buffers.clone();
    CallSite site(path, VariantId::ScalarOoo, copy);
    const auto addresses = site.data_addresses();
    site.run(10);
    CHECK(site.data_addresses() == addresses);
    const auto out = site.output();
    for (double v : out.values) CHECK(v == 6.0);
  }
}

TEST_CASE("pin and release") {
  FunctionTable table;
  Buffer buffer = Buffer::from_values(std::vector{1.0, 2.0, 3.0}, AlignmentPolicy::Aligned32);

  SUBCASE("pinned address aliases the buffer") {
    const auto d = pin(table, buffer);
    CHECK(d.length == 3);
    CHECK(d.address[0] == 1.0);
    CHECK(d.address[2] == 3.0);
    d.address[1] = 42.0;
    CHECK(buffer.values()[1] == 42.0);
    release(table, d);
    CHECK(table.outstanding() == 0);
  }
  SUBCASE("double pin") {
    const auto d = pin(table, buffer);
    CHECK(code_of([&] { pin(table, buffer); }) == ErrorCode::DoublePin);
    release(table, d);
    CHECK_NOTHROW(release(table, pin(table, buffer)));
  }
  SUBCASE("release is single use") {
    const auto d = pin(table, buffer);
    release(table, d);
    CHECK(code_of([&] { release(table, d); }) == ErrorCode::UnknownDescriptor);
  }
  SUBCASE("query callback") {
    CHECK(query_length(table, buffer) == 3);
    CHECK(table.counters().indirections == 2);
  }
  SUBCASE("1000 pin/release pairs cost 4000 indirections") {
    for (int i = 0; i < 1000; ++i) release(table, pin(table, buffer));
    CHECK(table.counters().indirections == 4000);
    CHECK(table.counters().callbacks == 2000);
    CHECK(table.counters().bytes_moved == 0);
  }
}

TEST_CASE("copy mode pins a scratch copy") {
  Buffer buffer = Buffer::from_values(std::vector{1.0, 2.0, 3.0, 4.0}, AlignmentPolicy::Misaligned8);
  const std::size_t counts[] = {buffer.size()};
  FunctionTable table(PinMode::Copy, RegionArena::bytes_for(counts));
  const auto d = pin(table, buffer);
  CHECK(d.address != buffer.data());
  CHECK(reinterpret_cast<std::uintptr_t>(d.address) % 32 == 8);
  CHECK(std::memcmp(d.address, buffer.data(), buffer.bytes()) == 0);
  d.address[0] = -5.0;
  CHECK(buffer.values()[0] == 1.0);
  release(table, d);
  CHECK(buffer.values()[0] == -5.0);
  CHECK(table.counters().bytes_moved == 2 * buffer.bytes());

  Buffer big(64, AlignmentPolicy::Aligned32);
  CHECK(code_of([&] { pin(table, big); }) == ErrorCode::ScratchExhausted);
}

TEST_CASE("per-invocation boundary accounting") {
  const VariantId variant = HostCapabilities::host().vector256 ? VariantId::VectOoo : VariantId::ScalarOoo;
  SUBCASE("callback pinned horizontal sum") {
    auto buffers = make_buffers(KernelId::HorizontalSum, {256}, natural_alignment(variant), 1);
    CallSite site(CallPathId::CallbackPinned, variant, buffers);
    site.run(25);
    CHECK(site.counters().indirections == 25 * 4);
    CHECK(site.counters().callbacks == 25 * 2);
  }
  SUBCASE("native memory has no callbacks") {
    auto buffers = make_buffers(KernelId::HorizontalSum, {256}, natural_alignment(variant), 1);
    CallSite site(CallPathId::NativeMemoryDirect, variant, buffers);
    site.run(25);
    CHECK(site.counters().indirections == 0);
    CHECK(site.counters().callbacks == 0);
  }
  SUBCASE("copy mode moves every array in and back") {
    for (KernelId kernel : kAllKernels) {
      auto buffers = make_buffers(kernel, {128}, AlignmentPolicy::Aligned32, 1);
      std::uint64_t bytes = 0;
      for (const Buffer* b : buffers.arrays()) bytes += b->bytes();
      CallSite site(CallPathId::CallbackCopy, VariantId::Scalar, buffers);
      site.run(7);
      CHECK(site.counters().bytes_moved == 7 * 2 * bytes);
    }
  }
}

TEST_CASE("native region") {
  NativeRegion region(1024);
  CHECK(region.aligned32());
  CHECK(region.capacity() == 1024);
  RegionArena arena(region);
  double* a = arena.place(8, AlignmentPolicy::Aligned32);
  double* b = arena.place(8, AlignmentPolicy::Misaligned8);
  CHECK(reinterpret_cast<std::uintptr_t>(a) % 32 == 0);
  CHECK(reinterpret_cast<std::uintptr_t>(b) % 32 == 8);
  CHECK(b >= a + 8);
  region.free();
  CHECK(region.base() == nullptr);
}

TEST_CASE("native library loading") {
  SUBCASE("complete library") {
    const NativeLibrary& library = fixture_library();
    CHECK(library.resolved_count() == NativeLibrary::kSymbolCount);
    CHECK(library.resolved_count() >= 4);
    CHECK(library.symbol(KernelId::HorizontalSum, VariantId::VectOoo) != nullptr);
    CHECK(library.has_vect() == HostCapabilities::host().vector256);
  }
  SUBCASE("nonexistent path") {
    CHECK(code_of([] { load_native_library("/nonexistent/libkp_native.so"); }) == ErrorCode::LibraryLoad);
    const auto probe = try_load_native_library("/nonexistent/libkp_native.so");
    CHECK_FALSE(probe.library.has_value());
    CHECK_FALSE(probe.reason.empty());
  }
  SUBCASE("missing symbol is named") {
    try {
      load_native_library(KPROF_PARTIAL_FIXTURE_LIB);
      FAIL("expected MissingSymbolError");
    } catch (const MissingSymbolError& e) {
      CHECK(e.code() == ErrorCode::MissingSymbol);
      CHECK(e.missing_symbols() == std::vector<std::string>{"kp_hsum_vect_ooo"});
      CHECK(std::string(e.what()).find("kp_hsum_vect_ooo") != std::string::npos);
    }
  }
  SUBCASE("symbol names") {
    CHECK(native_symbol_name(KernelId::HorizontalSum, VariantId::VectOoo) == "kp_hsum_vect_ooo");
    CHECK(native_symbol_name(KernelId::HornerCoeff1st, VariantId::VectUnaligned) == "kp_horner_c1_vect_unalign");
    CHECK(native_symbol_name(KernelId::ArrayAddition, VariantId::Scalar) == "kp_arradd_scalar");
  }
  SUBCASE("environment override") {
    setenv("KERNELPROF_NATIVE_LIB", KPROF_FIXTURE_LIB, 1);
    CHECK(default_native_library_path() == KPROF_FIXTURE_LIB);
    CHECK(try_load_native_library().library.has_value());
    unsetenv("KERNELPROF_NATIVE_LIB");
    CHECK(default_native_library_path() == "libkp_native.so");
  }
}

TEST_CASE("dynamic symbol path") {
  const NativeLibrary& library = fixture_library();
  std::mt19937_64 rng(5);
  for (KernelId kernel : kAllKernels) {
    for (const auto& v : list_variants(kernel)) {
      if (!v.available) continue;
      const auto base = make_buffers(kernel, {64}, natural_alignment(v.variant), rng());
      auto in_process = base.clone();
      auto through_library = base.clone();
      BoundaryCounters counters;
      CAPTURE(to_string(kernel));
      CAPTURE(to_string(v.variant));
      CHECK(invoke(CallPathId::DynamicSymbol, v.variant, through_library, &library, &counters) ==
            run_variant(v.variant, in_process));
      CHECK(counters.hops == 1);
      CHECK(counters.indirections == 0);
    }
  }

  auto buffers = make_buffers(KernelId::HorizontalSum, {16}, AlignmentPolicy::Aligned32, 1);
  CHECK(code_of([&] { invoke(CallPathId::DynamicSymbol, VariantId::Scalar, buffers); }) ==
        ErrorCode::PathUnavailable);

  auto horner = KernelBuffers::horner(KernelId::HornerCoeff1st, std::vector{1.0, 1.0, 1.0}, std::vector<double>(16, 2.0));
  CHECK(code_of([&] { invoke(CallPathId::DynamicSymbol, VariantId::Scalar, horner, &library); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("zero-padded polynomial through the library") {
  std::vector<double> coeffs(65, 0.0);
  coeffs[0] = coeffs[1] = coeffs[2] = 1.0;
  auto buffers = KernelBuffers::horner(KernelId::HornerData1st, coeffs, std::vector<double>(16, 2.0));
  const auto out = invoke(CallPathId::DynamicSymbol, VariantId::Scalar, buffers, &fixture_library());
  for (double y : out.values) CHECK(y == 7.0);
}

TEST_CASE("path listing") {
  const auto without = list_call_paths(nullptr);
  REQUIRE(without.size() == 6);
  for (const auto& p : without) CHECK(p.available == (p.path != CallPathId::DynamicSymbol));
  const auto with = list_call_paths(&fixture_library());
  for (const auto& p : with) CHECK(p.available);
  for (CallPathId path : kAllCallPaths) CHECK(parse_call_path(to_string(path)) == path);
}
