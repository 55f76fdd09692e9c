#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "kernelprof/error.hpp"
#include "kernelprof/report.hpp"

namespace kprof {

namespace {

constexpr std::array<std::string_view, 12> kColumns{
    "label", "kernel", "variant", "callpath", "alignment", "n", "mem_bytes",
    "flops", "best_mean_seconds", "gflops", "inner_iters", "rep_variance"};

enum Column : std::size_t {
  kLabel, kKernel, kVariant, kCallPath, kAlignment, kN, kMemBytes,
  kFlops, kSeconds, kGflops, kInnerIters, kRepVariance
};

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void schema_error(std::size_t line, std::string_view column, const std::string& what) {
  std::string message = "line " + std::to_string(line);
  if (!column.empty()) message += ", column '" + std::string(column) + "'";
  throw Error(ErrorCode::Schema, message + ": " + what);
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, Column column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    schema_error(line, kColumns[column], "cannot parse '" + std::string(text) + "'");
  }
  return value;
}

template <typename T, typename Parse>
T parse_enum(std::string_view text, std::size_t line, Column column, Parse parse) {
  if (auto value = parse(text)) return *value;
  schema_error(line, kColumns[column], "unknown value '" + std::string(text) + "'");
}

}  // namespace

void write_csv(const std::vector<Profile>& profiles, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const Profile& profile : profiles) {
    for (const SamplePoint& p : profile.points) {
      out << profile.label << ',' << to_string(profile.kernel) << ',' << to_string(profile.variant) << ','
          << to_string(profile.path) << ',' << to_string(profile.alignment) << ',' << p.n << ','
          << p.memory_per_invocation << ',' << p.flop_per_invocation << ',' << format_double(p.best_mean_seconds)
          << ',' << format_double(p.performance / 1e9) << ',' << p.inner_iters_used << ','
          << format_double(p.rep_variance) << '\n';
    }
  }
}

void write_csv(const std::vector<Profile>& profiles, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_csv(profiles, out);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "error writing " + path.string());
}

std::vector<Profile> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) schema_error(1, {}, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto header = split(line);
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
      if (i >= header.size()) schema_error(line_no, kColumns[i], "missing column");
      if (header[i] != kColumns[i]) {
        schema_error(line_no, kColumns[i], "expected column '" + std::string(kColumns[i]) + "', found '" +
                                               std::string(header[i]) + "'");
      }
    }
    if (header.size() > kColumns.size()) schema_error(line_no, header[kColumns.size()], "unexpected column");
  }

  std::vector<Profile> profiles;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() < kColumns.size()) schema_error(line_no, kColumns[f.size()], "missing column");
    if (f.size() > kColumns.size()) schema_error(line_no, {}, "too many fields");

    const std::string label(f[kLabel]);
    if (!is_valid_label(label)) schema_error(line_no, kColumns[kLabel], "invalid label '" + label + "'");

    if (profiles.empty() || profiles.back().label != label) {
      for (const Profile& earlier : profiles) {
        if (earlier.label == label) schema_error(line_no, kColumns[kLabel], "label '" + label + "' reappears");
      }
      Profile profile;
      profile.label = label;
      profile.kernel = parse_enum<KernelId>(f[kKernel], line_no, kKernel, parse_kernel);
      profile.variant = parse_enum<VariantId>(f[kVariant], line_no, kVariant, parse_variant);
      profile.path = parse_enum<CallPathId>(f[kCallPath], line_no, kCallPath, parse_call_path);
      profile.alignment = parse_enum<AlignmentPolicy>(f[kAlignment], line_no, kAlignment, parse_alignment);
      profiles.push_back(std::move(profile));
    }
    Profile& profile = profiles.back();

    SamplePoint p;
    p.n = parse_number<std::size_t>(f[kN], line_no, kN);
    p.memory_per_invocation = parse_number<std::uint64_t>(f[kMemBytes], line_no, kMemBytes);
    p.flop_per_invocation = parse_number<std::uint64_t>(f[kFlops], line_no, kFlops);
    p.best_mean_seconds = parse_number<double>(f[kSeconds], line_no, kSeconds);
    parse_number<double>(f[kGflops], line_no, kGflops);
    p.inner_iters_used = parse_number<std::uint64_t>(f[kInnerIters], line_no, kInnerIters);
    p.rep_variance = parse_number<double>(f[kRepVariance], line_no, kRepVariance);
    if (!(p.best_mean_seconds > 0)) schema_error(line_no, kColumns[kSeconds], "must be positive");
    p.performance = static_cast<double>(p.flop_per_invocation) / p.best_mean_seconds;

    if (!profile.points.empty() && p.memory_per_invocation <= profile.points.back().memory_per_invocation) {
      schema_error(line_no, kColumns[kMemBytes], "not increasing within label '" + label + "'");
    }
    profile.points.push_back(std::move(p));
  }
  return profiles;
}

std::vector<Profile> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return read_csv(in);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Schema) throw;
    throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
  }
}

}  // namespace kprof
