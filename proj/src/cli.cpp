#include "kernelprof/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <regex>
#include <ostream>
#include <sstream>

#include "kernelprof/error.hpp"
#include "kernelprof/harness.hpp"
#include "kernelprof/model.hpp"
#include "kernelprof/probe.hpp"
#include "kernelprof/report.hpp"

namespace kprof {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::TimerResolution:
    case ErrorCode::MeasurementBusy:
    case ErrorCode::AllocationFailure:
    case ErrorCode::LibraryLoad:
    case ErrorCode::MissingSymbol:
    case ErrorCode::PathUnavailable:
    case ErrorCode::VariantUnavailable:
    case ErrorCode::Io:
      return kExitEnvironment;
    default:
      return kExitUsage;
  }
}

// Accepts plain bytes or a K/M/G suffix (powers of 1024), e.g. "256", "16K", "64MiB".
double parse_bytes(const std::string& text) {
  double value = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr == begin) throw UsageError("invalid byte count '" + text + "'");
  std::string suffix(ptr, end);
  std::transform(suffix.begin(), suffix.end(), suffix.begin(), [](unsigned char c) { return std::tolower(c); });
  if (suffix.empty() || suffix == "b") return value;
  if (suffix == "k" || suffix == "kb" || suffix == "kib") return value * 1024;
  if (suffix == "m" || suffix == "mb" || suffix == "mib") return value * 1024 * 1024;
  if (suffix == "g" || suffix == "gb" || suffix == "gib") return value * 1024 * 1024 * 1024;
  throw UsageError("invalid byte suffix in '" + text + "'");
}

MemoryRange parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("range must look like LO:HI, got '" + text + "'");
  return {parse_bytes(text.substr(0, colon)), parse_bytes(text.substr(colon + 1))};
}

std::string shortest(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T, typename Parse>
T parse_choice(const std::string& text, std::string_view what, Parse parse) {
  if (auto value = parse(text)) return *value;
  throw UsageError("unknown " + std::string(what) + " '" + text + "'");
}

struct MeasureOptions {
  double min_inner_time_ms = 20;
  int reps = 5;
  int warmup = 2;
  std::uint64_t seed = 1;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--min-inner-time", min_inner_time_ms, "Minimum span of one timed repetition, ms")
        ->capture_default_str();
    cmd.add_option("--reps", reps, "Outer repetitions (best mean is kept)")->capture_default_str();
    cmd.add_option("--warmup", warmup, "Warm-up passes before timing")->capture_default_str();
    cmd.add_option("--seed", seed, "Seed for input data")->capture_default_str();
  }

  MeasurementConfig config() const {
    MeasurementConfig c;
    c.min_inner_time = std::chrono::duration<double>(min_inner_time_ms / 1e3);
    c.outer_reps = reps;
    c.warmup_passes = warmup;
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct ImplOptions {
  std::string kernel;
  std::string variant = "scalar";
  std::string path = "inlined";
  std::string align;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--kernel", kernel, "arradd, hsum, horner_c1 or horner_d1")->required();
    cmd.add_option("--variant", variant, "scalar, scalar_ooo, vect, vect_ooo or vect_unalign")->capture_default_str();
    cmd.add_option("--path", path,
                   "inlined, outlined, dynamic_symbol, callback_pinned, callback_copy or native_memory")
        ->capture_default_str();
    cmd.add_option("--align", align, "aligned32 or mis8 (default: what the variant needs)");
  }

  Implementation resolve() const {
    Implementation impl;
    impl.kernel = parse_choice<KernelId>(kernel, "kernel", parse_kernel);
    impl.variant = parse_choice<VariantId>(variant, "variant", parse_variant);
    impl.path = parse_choice<CallPathId>(path, "call path", parse_call_path);
    impl.alignment = align.empty() ? natural_alignment(impl.variant)
                                   : parse_choice<AlignmentPolicy>(align, "alignment", parse_alignment);
    return impl;
  }
};

json config_json(const MeasurementConfig& c) {
  return {{"warmup_passes", c.warmup_passes},
          {"min_inner_time_s", c.min_inner_time.count()},
          {"outer_reps", c.outer_reps},
          {"max_inner_iters", c.max_inner_iters},
          {"timer", "steady_clock"},
          {"seed", c.seed}};
}

json impl_json(const Implementation& impl) {
  return {{"kernel", to_string(impl.kernel)},
          {"variant", to_string(impl.variant)},
          {"callpath", to_string(impl.path)},
          {"alignment", to_string(impl.alignment)},
          {"label", make_label(impl.path, impl.variant, impl.alignment)}};
}

json base_metadata(const std::string& command, const std::vector<std::string>& args) {
  return {{"command", command},
          {"arguments", args},
          {"started_utc", utc_now()},
          {"host_vector256", HostCapabilities::host().vector256},
          {"native_library", default_native_library_path().string()}};
}

void write_json(const json& document, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << document.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::shared_ptr<const MachineProfile> load_machine(const std::string& path) {
  if (path.empty()) return std::make_shared<const MachineProfile>(reference_machine());
  return std::make_shared<const MachineProfile>(read_machine_profile(fs::path(path)));
}

std::vector<Profile> load_profiles(const std::vector<std::string>& files) {
  std::vector<Profile> all;
  for (const std::string& file : files) {
    for (Profile& p : read_csv(fs::path(file))) {
      for (const Profile& q : all) {
        if (q.label == p.label) throw UsageError("label '" + p.label + "' appears in more than one CSV");
      }
      all.push_back(std::move(p));
    }
  }
  return all;
}

// ---------------------------------------------------------------------------

int cmd_list(std::ostream& out) {
  const auto probe = try_load_native_library();
  const NativeLibrary* library = probe.library ? &*probe.library : nullptr;

  out << "kernels\n";
  for (KernelId kernel : kAllKernels) out << "  " << to_string(kernel) << "  " << describe(kernel) << "\n";

  out << "\nvariants\n";
  for (KernelId kernel : kAllKernels) {
    out << "  " << to_string(kernel) << "\n";
    for (const auto& v : list_variants(kernel)) {
      out << "    " << to_string(v.variant) << (v.available ? "" : "  unavailable: " + v.reason) << "\n";
    }
  }

  out << "\ncall paths\n";
  for (const auto& p : list_call_paths(library, probe.reason)) {
    out << "  " << to_string(p.path) << (p.available ? "" : "  unavailable: " + p.reason) << "\n";
  }

  out << "\nnative library\n  " << default_native_library_path().string() << ": ";
  if (library) {
    out << "loaded, " << library->resolved_count() << " symbols, vector "
        << (library->has_vect() ? "yes" : "no") << "\n";
  } else {
    out << "not loadable (" << probe.reason << ")\n";
  }
  return kExitOk;
}

std::optional<NativeLibrary> library_for(CallPathId path) {
  if (path != CallPathId::DynamicSymbol) return std::nullopt;
  return load_native_library(default_native_library_path());
}

int cmd_bench(const ImplOptions& io, const MeasureOptions& mo, const std::string& n_text,
              const std::string& bytes_text, const std::vector<std::string>& args, std::ostream& out) {
  const Implementation impl = io.resolve();
  const MeasurementConfig config = mo.config();
  WorkloadSize size;
  if (!n_text.empty()) {
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(n_text.data(), n_text.data() + n_text.size(), n);
    if (ec != std::errc() || ptr != n_text.data() + n_text.size() || n == 0) {
      throw UsageError("invalid --n '" + n_text + "'");
    }
    size.n = n;
  } else {
    const auto sizes = geometric_sizes(impl.kernel, parse_bytes(bytes_text), parse_bytes(bytes_text), 2);
    if (sizes.empty()) throw UsageError("no valid size near " + bytes_text);
    size = sizes.front();
  }
  const auto library = library_for(impl.path);
  const SamplePoint p = measure_point(impl, size, config, library ? &*library : nullptr);

  json meta = base_metadata("bench", args);
  meta["implementation"] = impl_json(impl);
  meta["config"] = config_json(config);
  out << "# config " << meta.dump() << "\n";
  out << "label=" << make_label(impl.path, impl.variant, impl.alignment) << "\n"
      << "kernel=" << to_string(impl.kernel) << "\n"
      << "variant=" << to_string(impl.variant) << "\n"
      << "callpath=" << to_string(impl.path) << "\n"
      << "alignment=" << to_string(impl.alignment) << "\n"
      << "n=" << p.n << "\n"
      << "mem_bytes=" << p.memory_per_invocation << "\n"
      << "flops=" << p.flop_per_invocation << "\n"
      << "best_mean_seconds=" << shortest(p.best_mean_seconds) << "\n"
      << "gflops=" << shortest(p.performance / 1e9) << "\n"
      << "inner_iters=" << p.inner_iters_used << "\n"
      << "rep_variance=" << shortest(p.rep_variance) << "\n";
  return kExitOk;
}

struct SweepRange {
  std::string min_bytes = "256";
  std::string max_bytes = "64M";
  double factor = kDefaultFactor;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--min-bytes", min_bytes, "Smallest memory per invocation")->capture_default_str();
    cmd.add_option("--max-bytes", max_bytes, "Largest memory per invocation")->capture_default_str();
    cmd.add_option("--factor", factor, "Geometric step between sizes")->capture_default_str();
  }

  std::vector<WorkloadSize> sizes(KernelId kernel) const {
    auto out = geometric_sizes(kernel, parse_bytes(min_bytes), parse_bytes(max_bytes), factor);
    if (out.empty()) throw UsageError("no valid sizes in the requested range");
    return out;
  }
};

int cmd_sweep(const ImplOptions& io, const MeasureOptions& mo, const SweepRange& range,
              const std::string& machine_path, const std::string& out_dir, const std::vector<std::string>& args,
              std::ostream& out, std::ostream& err) {
  const Implementation impl = io.resolve();
  const MeasurementConfig config = mo.config();
  const auto machine = load_machine(machine_path);
  const auto sizes = range.sizes(impl.kernel);
  const auto library = library_for(impl.path);

  Profile profile = sweep(impl, sizes, config, library ? &*library : nullptr, machine);

  ensure_dir(out_dir);
  const std::string stem = std::string(to_string(impl.kernel)) + "_" + profile.label;
  const fs::path csv = fs::path(out_dir) / (stem + ".csv");
  const fs::path svg = fs::path(out_dir) / (stem + ".svg");
  write_csv({profile}, csv);
  if (!profile.points.empty()) {
    write_profile_chart({profile}, *machine, svg, std::string(to_string(impl.kernel)) + ": " + profile.label);
  }

  json meta = base_metadata("sweep", args);
  meta["implementation"] = impl_json(impl);
  meta["config"] = config_json(config);
  meta["sizes"] = {{"min_bytes", parse_bytes(range.min_bytes)},
                   {"max_bytes", parse_bytes(range.max_bytes)},
                   {"factor", range.factor},
                   {"count", sizes.size()}};
  meta["machine"] = machine_path.empty() ? "built-in reference" : machine_path;
  meta["complete"] = profile.complete;
  if (!profile.complete) meta["failure"] = profile.failure;
  write_json(meta, fs::path(out_dir) / (stem + ".meta.json"));

  out << "wrote " << csv.string() << " (" << profile.points.size() << " points)\n";
  if (!profile.complete) {
    err << "sweep stopped early: " << profile.failure << "\n";
    return kExitEnvironment;
  }
  return kExitOk;
}

int cmd_fit(const std::string& csv, const std::string& label, const std::string& region, std::ostream& out) {
  const auto profiles = read_csv(fs::path(csv));
  const auto it = std::find_if(profiles.begin(), profiles.end(), [&](const Profile& p) { return p.label == label; });
  if (it == profiles.end()) throw UsageError("label '" + label + "' not found in " + csv);
  std::optional<MemoryRange> range;
  if (!region.empty()) range = parse_range(region);
  const FitResult fit = fit_invocation_cost(*it, range);
  out << "label=" << label << "\n"
      << "p_max=" << shortest(fit.p_max) << "\n"
      << "p_max_gflops=" << shortest(fit.p_max / 1e9) << "\n"
      << "invocation_cost=" << shortest(fit.invocation_cost) << "\n"
      << "rms_relative_residual=" << shortest(fit.rms_relative_residual) << "\n"
      << "points_used=" << fit.points_used << "\n"
      << "iterations=" << fit.iterations << "\n"
      << "note=invocation cost includes the constant cost of the measurement loop\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& csvs, const std::string& range_text, const std::string& exclude,
                std::ostream& out) {
  const auto profiles = load_profiles(csvs);
  if (profiles.size() < 2) throw UsageError("compare needs at least two profiles");

  std::vector<Profile> eligible;
  {
    std::optional<std::regex> filter;
    if (!exclude.empty()) filter.emplace(exclude);
    for (const Profile& p : profiles) {
      if (filter && std::regex_search(p.label, *filter)) continue;
      if (!p.points.empty()) eligible.push_back(p);
    }
  }
  if (eligible.empty()) throw Error(ErrorCode::UncoveredRange, "every profile is excluded");

  MemoryRange range;
  if (!range_text.empty()) {
    range = parse_range(range_text);
  } else {
    range.lo = eligible.front().min_memory();
    range.hi = eligible.front().max_memory();
    for (const Profile& p : eligible) {
      range.lo = std::min(range.lo, p.min_memory());
      range.hi = std::max(range.hi, p.max_memory());
    }
  }

  const SelectionReport report = best_implementation(eligible, range);
  out << "best implementation per range\n";
  for (const SelectionSegment& s : report.segments) {
    out << "  " << shortest(s.range.lo) << " B .. " << shortest(s.range.hi) << " B  " << s.label
        << "  margin " << shortest(s.margin / 1e9) << " Gflop/s\n";
  }

  std::vector<std::pair<const Profile*, const Profile*>> pairs;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    for (std::size_t j = i + 1; j < eligible.size(); ++j) pairs.emplace_back(&eligible[i], &eligible[j]);
  }
  out << "crossovers\n";
  std::size_t overlapping = 0;
  for (const auto& [a, b] : pairs) {
    if (a->points.size() < 2 || b->points.size() < 2) continue;
    if (!(std::max(a->min_memory(), b->min_memory()) < std::min(a->max_memory(), b->max_memory()))) continue;
    ++overlapping;
    for (const Crossover& c : find_crossovers(*a, *b)) {
      out << "  " << shortest(c.memory_at_crossover) << " B  " << c.winner_below << " -> " << c.winner_above << "\n";
    }
  }
  if (!pairs.empty() && overlapping == 0 && eligible.size() >= 2) {
    throw Error(ErrorCode::NoOverlap, "no two profiles overlap in memory range");
  }
  return kExitOk;
}

int cmd_probe(const std::string& machine_out, double min_time_ms, std::ostream& out) {
  ProbeOptions options;
  options.min_time = std::chrono::duration<double>(min_time_ms / 1e3);
  const ProbeResult result = probe_machine(options);
  std::vector<std::string> comments = result.comments;
  comments.push_back("probe config: min_time_ms=" + shortest(min_time_ms));
  if (machine_out.empty()) {
    write_machine_profile(result.machine, out, comments);
  } else {
    write_machine_profile(result.machine, fs::path(machine_out), comments);
    out << "peak_gflops=" << shortest(result.machine.peak_gflops) << "\n"
        << "peak_gflops_no_fma=" << shortest(result.plain_gflops) << "\n"
        << "peak_bandwidth_gbs=" << shortest(result.machine.peak_bandwidth_gbs) << "\n"
        << "wrote " << machine_out << "\n";
  }
  return kExitOk;
}

int cmd_reproduce(const MeasureOptions& mo, const SweepRange& range, const std::string& machine_path,
                  const std::string& out_dir, const std::vector<std::string>& kernel_names,
                  const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const MeasurementConfig config = mo.config();
  const auto machine = load_machine(machine_path);
  std::vector<KernelId> kernels;
  for (const std::string& name : kernel_names) kernels.push_back(parse_choice<KernelId>(name, "kernel", parse_kernel));
  if (kernels.empty()) kernels.assign(kAllKernels.begin(), kAllKernels.end());

  const auto probe = try_load_native_library();
  const NativeLibrary* library = probe.library ? &*probe.library : nullptr;
  if (!library) {
    err << "notice: native library unavailable (" << probe.reason << "); skipping "
        << to_string(CallPathId::DynamicSymbol) << " profiles\n";
  }

  ensure_dir(out_dir);
  json meta = base_metadata("reproduce", args);
  meta["config"] = config_json(config);
  meta["sizes"] = {{"min_bytes", parse_bytes(range.min_bytes)},
                   {"max_bytes", parse_bytes(range.max_bytes)},
                   {"factor", range.factor}};
  meta["machine"] = machine_path.empty() ? "built-in reference" : machine_path;
  meta["native_library_loaded"] = library != nullptr;
  json skipped = json::array();
  json produced = json::array();
  bool complete = true;

  for (KernelId kernel : kernels) {
    const auto sizes = range.sizes(kernel);
    std::vector<Profile> profiles;
    for (CallPathId path : kAllCallPaths) {
      if (path == CallPathId::DynamicSymbol && !library) continue;
      for (const auto& v : list_variants(kernel)) {
        const std::string label = make_label(path, v.variant, natural_alignment(v.variant));
        if (!v.available) {
          skipped.push_back({{"kernel", to_string(kernel)}, {"label", label}, {"reason", v.reason}});
          continue;
        }
        const Implementation impl = implementation(kernel, v.variant, path);
        try {
          Profile profile = sweep(impl, sizes, config, library, machine);
          if (!profile.complete) {
            complete = false;
            err << "warning: " << to_string(kernel) << " " << profile.label << " incomplete: " << profile.failure
                << "\n";
          }
          if (!profile.points.empty()) profiles.push_back(std::move(profile));
        } catch (const Error& e) {
          complete = false;
          skipped.push_back({{"kernel", to_string(kernel)}, {"label", label}, {"reason", e.what()}});
          err << "warning: " << to_string(kernel) << " " << label << ": " << e.what() << "\n";
        }
      }
    }

    const std::string stem(to_string(kernel));
    const fs::path dir(out_dir);
    write_csv(profiles, dir / (stem + ".csv"));
    if (!profiles.empty()) {
      write_profile_chart(profiles, *machine, dir / (stem + ".svg"),
                           std::string(stem) + ": " + std::string(describe(kernel)));
    }
    {
      std::ofstream summary(dir / (stem + "_summary.txt"));
      summary << summarize_comparison(profiles, *machine);
      if (!summary) throw Error(ErrorCode::Io, "cannot write summary for " + stem);
    }
    {
      std::ofstream fits(dir / (stem + "_fits.txt"));
      for (const Profile& p : profiles) {
        try {
          const FitResult fit = fit_invocation_cost(p);
          fits << p.label << " p_max=" << shortest(fit.p_max) << " invocation_cost=" << shortest(fit.invocation_cost)
               << " rms_relative_residual=" << shortest(fit.rms_relative_residual)
               << " points_used=" << fit.points_used << "\n";
        } catch (const Error& e) {
          fits << p.label << " no fit: " << e.what() << "\n";
        }
      }
    }
    produced.push_back({{"kernel", stem}, {"profiles", profiles.size()}});
    out << stem << ": " << profiles.size() << " profiles\n";
  }

  meta["produced"] = produced;
  meta["skipped"] = skipped;
  meta["complete"] = complete;
  write_json(meta, fs::path(out_dir) / "metadata.json");
  return complete ? kExitOk : kExitEnvironment;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Micro-kernel performance profiling"};
  app.name("kernelprof");
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "Kernels, variants, call paths and native library status");

  ImplOptions bench_impl;
  MeasureOptions bench_measure;
  std::string bench_n, bench_bytes = "16K";
  auto* bench = app.add_subcommand("bench", "Measure one implementation at one size");
  bench_impl.add_to(*bench);
  bench_measure.add_to(*bench);
  auto* bench_n_opt = bench->add_option("--n", bench_n, "Element count");
  bench->add_option("--bytes", bench_bytes, "Memory per invocation (ignored with --n)")->excludes(bench_n_opt)
      ->capture_default_str();

  ImplOptions sweep_impl;
  MeasureOptions sweep_measure;
  SweepRange sweep_range;
  std::string sweep_machine, sweep_out = "kernelprof-out";
  auto* sweep_cmd = app.add_subcommand("sweep", "Measure a performance profile over a range of sizes");
  sweep_impl.add_to(*sweep_cmd);
  sweep_measure.add_to(*sweep_cmd);
  sweep_range.add_to(*sweep_cmd);
  sweep_cmd->add_option("--machine", sweep_machine, "Machine profile file for the chart");
  sweep_cmd->add_option("--out", sweep_out, "Output directory")->capture_default_str();

  std::string fit_csv, fit_label, fit_region;
  auto* fit = app.add_subcommand("fit", "Fit the invocation-cost model to a profile");
  fit->add_option("--csv", fit_csv, "Profile CSV")->required();
  fit->add_option("--label", fit_label, "Profile label")->required();
  fit->add_option("--region", fit_region, "Memory range LO:HI to fit over");

  std::vector<std::string> compare_csvs;
  std::string compare_range, compare_exclude;
  auto* compare = app.add_subcommand("compare", "Best implementation per range and crossovers");
  compare->add_option("--csv", compare_csvs, "Profile CSVs")->required();
  compare->add_option("--range", compare_range, "Memory range LO:HI (default: all profiles)");
  compare->add_option("--exclude", compare_exclude, "Ignore profiles whose label matches this regex");

  std::string probe_out;
  double probe_ms = 250;
  auto* probe = app.add_subcommand("probe", "Estimate peak performance and bandwidth of this host");
  probe->add_option("--machine-out", probe_out, "Write a machine profile file here (default: stdout)");
  probe->add_option("--min-time", probe_ms, "Minimum span of one probe measurement, ms")->capture_default_str();

  MeasureOptions repro_measure;
  SweepRange repro_range;
  std::string repro_machine, repro_out = "kernelprof-reproduce";
  std::vector<std::string> repro_kernels;
  auto* reproduce = app.add_subcommand("reproduce", "Run the full experiment matrix");
  repro_measure.add_to(*reproduce);
  repro_range.add_to(*reproduce);
  reproduce->add_option("--machine", repro_machine, "Machine profile file");
  reproduce->add_option("--out-dir", repro_out, "Output directory")->capture_default_str();
  reproduce->add_option("--kernel", repro_kernels, "Restrict to these kernels");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  try {
    if (list->parsed()) return cmd_list(out);
    if (bench->parsed()) return cmd_bench(bench_impl, bench_measure, bench_n, bench_bytes, args, out);
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_impl, sweep_measure, sweep_range, sweep_machine, sweep_out, args, out, err);
    }
    if (fit->parsed()) return cmd_fit(fit_csv, fit_label, fit_region, out);
    if (compare->parsed()) return cmd_compare(compare_csvs, compare_range, compare_exclude, out);
    if (probe->parsed()) return cmd_probe(probe_out, probe_ms, out);
    if (reproduce->parsed()) {
      return cmd_reproduce(repro_measure, repro_range, repro_machine, repro_out, repro_kernels, args, out, err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::regex_error& e) {
    err << "error: invalid regular expression: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace kprof
