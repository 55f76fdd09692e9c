#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "kernelprof/error.hpp"
#include "kernelprof/model.hpp"
#include "kernelprof/report.hpp"
#include "support/synthetic.hpp"

using namespace kprof;
using namespace kprof::testing;

namespace {

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++count;
  return count;
}

std::string schema_message(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_csv(in);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
    return e.what();
  }
  FAIL("expected a schema error");
  return {};
}

Profile labelled(CallPathId path, VariantId variant, AlignmentPolicy alignment,
                 const std::vector<std::pair<std::uint64_t, double>>& points) {
  Profile p = make_profile(make_label(path, variant, alignment), points);
  p.path = path;
  p.variant = variant;
  p.alignment = alignment;
  return p;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("kernelprof_test_report_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("csv of no profiles is just the header") {
  std::ostringstream out;
  write_csv({}, out);
  CHECK(out.str() == std::string(kCsvHeader) + "\n");
}

TEST_CASE("csv has one row per point") {
  Profile p = make_profile("java", {{64, 1e9}, {128, 2e9}, {256, 3e9}});
  p.path = CallPathId::Outlined;
  p.points[1].rep_variance = 1.5e-18;
  std::ostringstream out;
  write_csv({p}, out);
  const std::string text = out.str();
  CHECK(count_lines(text) == 4);
  CHECK(text.find("java,hsum,scalar,outlined,aligned32,16,128,128,") != std::string::npos);

  std::istringstream in(text);
  const auto back = read_csv(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].label == "java");
  CHECK(back[0].path == CallPathId::Outlined);
  REQUIRE(back[0].points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[0].points[i].memory_per_invocation == p.points[i].memory_per_invocation);
    CHECK(back[0].points[i].best_mean_seconds == p.points[i].best_mean_seconds);
    CHECK(back[0].points[i].performance == p.points[i].performance);
    CHECK(back[0].points[i].rep_variance == p.points[i].rep_variance);
  }
  std::ostringstream again;
  write_csv(back, again);
  CHECK(again.str() == text);
}

TEST_CASE("csv round-trips random profiles through a file") {
  std::mt19937_64 rng(3);
  std::vector<Profile> profiles;
  for (const char* label : {"java", "jni_vect_ooo", "jni_native_vect_unalign", "java_inline_ooo"}) {
    profiles.push_back(random_profile(label, rng, 10));
    profiles.back().points[3].rep_variance = 0.1 + 1.0 / 3;
  }
  const auto dir = temp_dir("roundtrip");
  write_csv(profiles, dir / "p.csv");
  const auto back = read_csv(dir / "p.csv");
  REQUIRE(back.size() == profiles.size());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    CHECK(back[k].label == profiles[k].label);
    REQUIRE(back[k].points.size() == profiles[k].points.size());
    for (std::size_t i = 0; i < back[k].points.size(); ++i) {
      CHECK(back[k].points[i].best_mean_seconds == profiles[k].points[i].best_mean_seconds);
      CHECK(back[k].points[i].flop_per_invocation == profiles[k].points[i].flop_per_invocation);
      CHECK(back[k].points[i].rep_variance == profiles[k].points[i].rep_variance);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv schema errors name the line and column") {
  const std::string header = kCsvHeader;
  const std::string row = "java,hsum,scalar,outlined,aligned32,16,128,16,1e-08,0.0016,1000,0";
  const std::string row2 = "java,hsum,scalar,outlined,aligned32,8,64,8,1e-08,0.0008,1000,0";

  std::string short_header = header.substr(0, header.rfind(','));
  CHECK(schema_message(short_header + "\n").find("column 'rep_variance'") != std::string::npos);

  const std::string missing = schema_message(header + "\n" + row.substr(0, row.rfind(',')) + "\n");
  CHECK(missing.find("line 2") != std::string::npos);
  CHECK(missing.find("column 'rep_variance'") != std::string::npos);

  const std::string order = schema_message(header + "\n" + row + "\n" + row2 + "\n");
  CHECK(order.find("line 3") != std::string::npos);
  CHECK(order.find("column 'mem_bytes'") != std::string::npos);

  std::string bad_label = row;
  bad_label.replace(0, 4, "jvm");
  CHECK(schema_message(header + "\n" + bad_label + "\n").find("column 'label'") != std::string::npos);

  std::string bad_kernel = row;
  bad_kernel.replace(5, 4, "fft");
  CHECK(schema_message(header + "\n" + bad_kernel + "\n").find("column 'kernel'") != std::string::npos);

  std::string other = row;
  other.replace(0, 4, "jni");
  const std::string row3 = "java,hsum,scalar,outlined,aligned32,32,256,32,1e-08,0.0032,1000,0";
  CHECK(schema_message(header + "\n" + row + "\n" + other + "\n" + row3 + "\n").find("reappears") !=
        std::string::npos);
}

TEST_CASE("machine profile round-trip") {
  const MachineProfile machine = reference_machine();
  std::ostringstream out;
  write_machine_profile(machine, out, {"written by a test"});
  CHECK(out.str().rfind("# written by a test\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(read_machine_profile(in) == machine);

  MachineProfile odd;
  odd.peak_gflops = 0.1 + 0.2;
  odd.peak_bandwidth_gbs = 12.345678901234567;
  odd.caches = {{1, 48 * 1024, ""}, {2, 1280 * 1024, ""}, {3, 30 * 1024 * 1024, ""}};
  odd.description = "host with = in its name";
  std::ostringstream out2;
  write_machine_profile(odd, out2);
  std::istringstream in2(out2.str());
  CHECK(read_machine_profile(in2) == odd);
}

TEST_CASE("shipped reference machine file") {
  const auto path = std::filesystem::path(KPROF_SOURCE_DIR) / "machines" / "sandybridge-i5-2500.profile";
  const MachineProfile machine = read_machine_profile(path);
  CHECK(machine == reference_machine());
  CHECK(machine.peak_performance() == 41.6e9);
  CHECK(machine.peak_bandwidth() == 40e9);
}

TEST_CASE("machine profile keys are checked") {
  auto error_of = [](const std::string& text) -> std::string {
    std::istringstream in(text);
    try {
      read_machine_profile(in);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Schema);
      return e.what();
    }
    FAIL("expected a schema error");
    return {};
  };
  const std::string base =
      "peak_gflops = 41.6\npeak_bandwidth_gbs = 40\nl1_bytes = 32768\nl2_bytes = 262144\nl3_bytes = 6291456\n";
  CHECK(error_of(base + "turbo = yes\n").find("turbo") != std::string::npos);
  CHECK(error_of(base + "l1_bytes = 1\n").find("l1_bytes") != std::string::npos);
  CHECK(error_of("peak_gflops = 41.6\npeak_bandwidth_gbs = 40\nl1_bytes = 32768\nl2_bytes = 262144\n")
            .find("l3_bytes") != std::string::npos);
  CHECK(error_of("peak_gflops = fast\n").find("peak_gflops") != std::string::npos);
  std::istringstream ok(base);
  CHECK(read_machine_profile(ok).caches.size() == 3);
}

TEST_CASE("profile chart") {
  const MachineProfile machine = reference_machine();
  Profile p = labelled(CallPathId::CallbackPinned, VariantId::VectOoo, AlignmentPolicy::Aligned32,
                       {{256, 1e9}, {4096, 5e9}, {1 << 20, 8e9}});
  const std::string svg = render_profile_chart({p}, machine, "hsum <test>");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_of(svg, "<polyline") == 1);
  CHECK(count_of(svg, "class=\"cache-marker\"") == 3);
  CHECK(svg.find(">jni_vect_ooo<") != std::string::npos);
  CHECK(svg.find("hsum &lt;test&gt;") != std::string::npos);
  CHECK(render_profile_chart({p}, machine, "hsum <test>") == svg);

  Profile q = p;
  q.label = "jni_native_vect_ooo";
  const std::string two = render_profile_chart({p, q}, machine);
  CHECK(count_of(two, "<polyline") == 2);

  const auto dir = temp_dir("chart");
  write_profile_chart({p}, machine, dir / "c.svg");
  std::ifstream in(dir / "c.svg");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == render_profile_chart({p}, machine));
  std::filesystem::remove_all(dir);
}

TEST_CASE("penalty") {
  CHECK(penalty(2e9, 2e9) == 0);
  CHECK(penalty(2e9, 1e9) == 0.5);
  CHECK(penalty(1e9, 2e9) == -1);
  CHECK_THROWS_AS(penalty(0, 1), Error);
}

TEST_CASE("comparison summary") {
  const MachineProfile machine = reference_machine();
  const std::vector<std::pair<std::uint64_t, double>> pts{{64, 2e9}, {128, 3e9}, {256, 4e9}, {512, 5e9}};
  std::vector<std::pair<std::uint64_t, double>> half;
  for (auto [m, p] : pts) half.emplace_back(m, p / 2);

  SUBCASE("identical pair reports zero") {
    const Profile fast = labelled(CallPathId::Inlined, VariantId::Scalar, AlignmentPolicy::Aligned32, pts);
    const Profile slow = labelled(CallPathId::Outlined, VariantId::Scalar, AlignmentPolicy::Aligned32, pts);
    const std::string text = summarize_comparison({fast, slow}, machine);
    CHECK(text.find("inlining benefit: java_inline vs java") != std::string::npos);
    CHECK(text.find("mean penalty 0.0% over 4 points") != std::string::npos);
    CHECK(text.find("callback penalty: absent") != std::string::npos);
    CHECK(text.find("alignment penalty: absent") != std::string::npos);
  }
  SUBCASE("half speed reports fifty percent") {
    const Profile fast = labelled(CallPathId::NativeMemoryDirect, VariantId::VectOoo, AlignmentPolicy::Aligned32, pts);
    const Profile slow = labelled(CallPathId::CallbackPinned, VariantId::VectOoo, AlignmentPolicy::Aligned32, half);
    const std::string text = summarize_comparison({fast, slow}, machine);
    CHECK(text.find("callback penalty: jni_native_vect_ooo vs jni_vect_ooo") != std::string::npos);
    CHECK(text.find("mean penalty 50.0% over 4 points") != std::string::npos);
  }
  SUBCASE("alignment pair") {
    const Profile fast = labelled(CallPathId::Outlined, VariantId::Vect, AlignmentPolicy::Aligned32, pts);
    const Profile slow = labelled(CallPathId::Outlined, VariantId::VectUnaligned, AlignmentPolicy::Misaligned8, half);
    const std::string text = summarize_comparison({fast, slow}, machine);
    CHECK(text.find("alignment penalty: java_vect vs java_vect_unalign") != std::string::npos);
    CHECK(text.find("mean penalty 50.0%") != std::string::npos);
  }
  SUBCASE("header and classification") {
    const Profile p = labelled(CallPathId::Outlined, VariantId::Scalar, AlignmentPolicy::Aligned32, pts);
    const std::string text = summarize_comparison({p}, machine);
    CHECK(text.find("41.6 Gflop/s") != std::string::npos);
    CHECK(text.find("40 GB/s") != std::string::npos);
    CHECK(text.find("memory-bound") != std::string::npos);
    CHECK(text.find("p_max = ") != std::string::npos);
  }
  SUBCASE("horner note") {
    Profile p = labelled(CallPathId::Outlined, VariantId::Scalar, AlignmentPolicy::Aligned32, pts);
    p.kernel = KernelId::HornerCoeff1st;
    const std::string text = summarize_comparison({p}, machine);
    CHECK(text.find("192 per point") != std::string::npos);
  }
}
