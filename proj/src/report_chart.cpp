#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "kernelprof/error.hpp"
#include "kernelprof/report.hpp"

namespace kprof {

namespace {

constexpr double kWidth = 960;
constexpr double kHeight = 560;
constexpr double kLeft = 70;
constexpr double kRight = 220;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string byte_label(int log2_bytes) {
  static const char* const kUnits[] = {"B", "KiB", "MiB", "GiB", "TiB"};
  const int unit = std::clamp(log2_bytes / 10, 0, 4);
  return std::to_string(1ull << (log2_bytes - 10 * unit)) + " " + kUnits[unit];
}

// Smallest 1, 2 or 5 times a power of ten that is >= v.
double nice_ceiling(double v) {
  if (!(v > 0)) return 1;
  const double base = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 5.0, 10.0}) {
    if (step * base >= v) return step * base;
  }
  return 10 * base;
}

}  // namespace

std::string render_profile_chart(const std::vector<Profile>& profiles, const MachineProfile& machine,
                                 const std::string& title) {
  if (profiles.empty()) throw Error(ErrorCode::InvalidArgument, "chart needs at least one profile");

  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymax = 0;
  auto extend = [&](double bytes) {
    xmin = std::min(xmin, std::log2(bytes));
    xmax = std::max(xmax, std::log2(bytes));
  };
  for (const Profile& profile : profiles) {
    for (const SamplePoint& p : profile.points) {
      extend(static_cast<double>(p.memory_per_invocation));
      ymax = std::max(ymax, p.performance / 1e9);
    }
  }
  for (int level = 1; level <= 3; ++level) {
    if (const auto bytes = machine.cache_bytes(level)) extend(static_cast<double>(bytes));
  }
  if (!std::isfinite(xmin)) xmin = xmax = 10;
  const int x0 = static_cast<int>(std::floor(xmin));
  const int x1 = std::max(x0 + 1, static_cast<int>(std::ceil(xmax)));
  ymax = nice_ceiling(ymax);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double log2_bytes) { return kLeft + (log2_bytes - x0) / (x1 - x0) * plot_w; };
  auto py = [&](double gflops) { return kTop + plot_h - gflops / ymax * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + fmt(kLeft) + "\" y=\"24\" font-size=\"15\">" + escape(title) + "</text>\n";
  }

  svg += "<g class=\"axes\" stroke=\"black\">\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" + fmt(kLeft + plot_w) +
         "\" y2=\"" + fmt(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";

  const int x_step = (x1 - x0) > 16 ? 2 : 1;
  for (int x = x0; x <= x1; x += x_step) {
    svg += "<text class=\"x-tick\" x=\"" + fmt(px(x)) + "\" y=\"" + fmt(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\">" + byte_label(x) + "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double g = ymax * i / 5;
    svg += "<text class=\"y-tick\" x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py(g) + 4) +
           "\" text-anchor=\"end\">" + fmt(g) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 16) +
         "\" text-anchor=\"middle\">memory per invocation</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt(kTop + plot_h / 2) + ")\">Gflop/s</text>\n";

  for (int level = 1; level <= 3; ++level) {
    const auto bytes = machine.cache_bytes(level);
    if (bytes == 0) continue;
    const double x = px(std::log2(static_cast<double>(bytes)));
    svg += "<line class=\"cache-marker\" x1=\"" + fmt(x) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(x) +
           "\" y2=\"" + fmt(kTop + plot_h) + "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";
    svg += "<text x=\"" + fmt(x + 3) + "\" y=\"" + fmt(kTop + 12) + "\" fill=\"#666666\">L" +
           std::to_string(level) + "</text>\n";
  }

  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const Profile& profile = profiles[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const SamplePoint& p : profile.points) {
      if (!points.empty()) points += ' ';
      points += fmt(px(std::log2(static_cast<double>(p.memory_per_invocation)))) + "," +
                fmt(py(p.performance / 1e9));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"><title>" + escape(profile.label) + "</title></polyline>\n";
    const double ly = kTop + 10 + 18 * static_cast<double>(i);
    const double lx = kLeft + plot_w + 16;
    svg += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(lx + 20) + "\" y2=\"" + fmt(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text class=\"legend\" x=\"" + fmt(lx + 26) + "\" y=\"" + fmt(ly + 4) + "\">" + escape(profile.label) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_profile_chart(const std::vector<Profile>& profiles, const MachineProfile& machine,
                          const std::filesystem::path& path, const std::string& title) {
  const std::string svg = render_profile_chart(profiles, machine, title);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write chart " + path.string());
  out << svg;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "error writing " + path.string());
}

}  // namespace kprof
