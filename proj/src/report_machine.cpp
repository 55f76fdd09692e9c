#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <system_error>

#include "kernelprof/error.hpp"
#include "kernelprof/report.hpp"

namespace kprof {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Schema, "machine profile line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    bad_line(line, "invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

}  // namespace

MachineProfile read_machine_profile(std::istream& in) {
  static const char* const kCacheKeys[] = {"l1_bytes", "l2_bytes", "l3_bytes"};

  MachineProfile machine;
  machine.caches.resize(3);
  std::map<std::string, std::size_t, std::less<>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad_line(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      bad_line(line_no, "duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")");
    }

    if (key == "description") {
      machine.description = std::string(value);
      continue;
    }
    // Numeric values may carry a trailing '# note'.
    std::string_view note;
    if (const auto hash = value.find('#'); hash != std::string_view::npos) {
      note = trim(value.substr(hash + 1));
      value = trim(value.substr(0, hash));
    }
    if (key == "peak_gflops") {
      machine.peak_gflops = parse_value<double>(key, value, line_no);
    } else if (key == "peak_bandwidth_gbs") {
      machine.peak_bandwidth_gbs = parse_value<double>(key, value, line_no);
    } else {
      bool known = false;
      for (int level = 1; level <= 3; ++level) {
        if (key == kCacheKeys[level - 1]) {
          machine.caches[level - 1] = {level, parse_value<std::uint64_t>(key, value, line_no), std::string(note)};
          known = true;
        }
      }
      if (!known) bad_line(line_no, "unknown key '" + key + "'");
    }
  }

  for (const char* key : {"peak_gflops", "peak_bandwidth_gbs", "l1_bytes", "l2_bytes", "l3_bytes"}) {
    if (!seen.contains(key)) throw Error(ErrorCode::Schema, std::string("machine profile is missing ") + key);
  }
  try {
    machine.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Schema, std::string("machine profile: ") + e.what());
  }
  return machine;
}

MachineProfile read_machine_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read machine profile " + path.string());
  return read_machine_profile(in);
}

void write_machine_profile(const MachineProfile& machine, std::ostream& out,
                           const std::vector<std::string>& comments) {
  for (const std::string& comment : comments) out << "# " << comment << '\n';
  out << "peak_gflops = " << format_double(machine.peak_gflops) << '\n';
  out << "peak_bandwidth_gbs = " << format_double(machine.peak_bandwidth_gbs) << '\n';
  for (int level = 1; level <= 3; ++level) {
    out << 'l' << level << "_bytes = " << machine.cache_bytes(level);
    for (const CacheLevel& cache : machine.caches) {
      if (cache.level == level && !cache.note.empty()) out << "  # " << cache.note;
    }
    out << '\n';
  }
  if (!machine.description.empty()) out << "description = " << machine.description << '\n';
}

void write_machine_profile(const MachineProfile& machine, const std::filesystem::path& path,
                           const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write machine profile " + path.string());
  write_machine_profile(machine, out, comments);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "error writing " + path.string());
}

}  // namespace kprof
