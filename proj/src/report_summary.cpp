#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "kernelprof/error.hpp"
#include "kernelprof/model.hpp"
#include "kernelprof/report.hpp"

namespace kprof {

namespace {

std::string shortest(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

struct Pairing {
  const char* title;
  const Profile* fast;
  const Profile* slow;
};

bool same_variant(const Profile& a, const Profile& b) {
  return a.variant == b.variant && a.alignment == b.alignment;
}

bool is_aligned_vect(const Profile& p) {
  return p.variant == VariantId::Vect && p.alignment == AlignmentPolicy::Aligned32;
}

bool is_unaligned_vect(const Profile& p) {
  return p.variant == VariantId::VectUnaligned ||
         (p.variant == VariantId::Vect && p.alignment == AlignmentPolicy::Misaligned8);
}

std::vector<Pairing> find_pairs(const std::vector<const Profile*>& profiles) {
  std::vector<Pairing> pairs;
  for (const Profile* fast : profiles) {
    for (const Profile* slow : profiles) {
      if (fast->path == CallPathId::Inlined && slow->path == CallPathId::Outlined && same_variant(*fast, *slow)) {
        pairs.push_back({"inlining benefit", fast, slow});
      }
    }
  }
  for (const Profile* fast : profiles) {
    for (const Profile* slow : profiles) {
      if (fast->path == CallPathId::NativeMemoryDirect && slow->path == CallPathId::CallbackPinned &&
          same_variant(*fast, *slow)) {
        pairs.push_back({"callback penalty", fast, slow});
      }
    }
  }
  for (const Profile* fast : profiles) {
    for (const Profile* slow : profiles) {
      if (fast->path == slow->path && is_aligned_vect(*fast) && is_unaligned_vect(*slow)) {
        pairs.push_back({"alignment penalty", fast, slow});
      }
    }
  }
  return pairs;
}

void write_pair(std::ostringstream& out, const Pairing& pair) {
  out << "\n" << pair.title << ": " << pair.fast->label << " vs " << pair.slow->label << "\n";
  out << "  mem_bytes     fast Gflop/s   slow Gflop/s   penalty\n";
  double total = 0;
  int matched = 0;
  for (const SamplePoint& f : pair.fast->points) {
    for (const SamplePoint& s : pair.slow->points) {
      if (s.memory_per_invocation != f.memory_per_invocation) continue;
      const double pct = 100 * penalty(f.performance, s.performance);
      char row[128];
      std::snprintf(row, sizeof row, "  %-12llu  %12.3f   %12.3f   %6.1f%%\n",
                    static_cast<unsigned long long>(f.memory_per_invocation), f.performance / 1e9,
                    s.performance / 1e9, pct);
      out << row;
      total += pct;
      ++matched;
    }
  }
  if (matched == 0) {
    out << "  (no common memory points)\n";
  } else {
    out << "  mean penalty " << fixed(total / matched, 1) << "% over " << matched << " points\n";
  }
}

}  // namespace

double penalty(double fast, double slow) {
  if (fast == 0) throw Error(ErrorCode::InvalidArgument, "penalty against zero performance");
  return (fast - slow) / fast;
}

std::string summarize_comparison(const std::vector<Profile>& profiles, const MachineProfile& machine) {
  std::ostringstream out;
  out << "machine: " << (machine.description.empty() ? "(unnamed)" : machine.description) << "\n";
  out << "  peak performance  " << shortest(machine.peak_gflops) << " Gflop/s\n";
  out << "  peak bandwidth    " << shortest(machine.peak_bandwidth_gbs) << " GB/s\n";
  for (const CacheLevel& cache : machine.caches) {
    out << "  L" << cache.level << " cache          " << cache.bytes << " B\n";
  }

  std::map<KernelId, std::vector<const Profile*>> by_kernel;
  for (const Profile& p : profiles) by_kernel[p.kernel].push_back(&p);

  for (const auto& [kernel, group] : by_kernel) {
    out << "\n== " << to_string(kernel) << ": " << describe(kernel) << " ==\n";
    if (is_horner(kernel)) out << "flops counted as 192 per point (3 per coefficient)\n";

    const auto pairs = find_pairs(group);
    for (const char* title : {"inlining benefit", "callback penalty", "alignment penalty"}) {
      bool any = false;
      for (const Pairing& pair : pairs) {
        if (std::string_view(pair.title) != title) continue;
        write_pair(out, pair);
        any = true;
      }
      if (!any) out << "\n" << title << ": absent (no matching pair of profiles)\n";
    }

    out << "\nclassification (largest measured size)\n";
    for (const Profile* p : group) {
      if (p->points.empty()) continue;
      const SamplePoint& last = p->points.back();
      const Rational ai = arithmetic_intensity(last.flop_per_invocation, last.memory_per_invocation);
      out << "  " << p->label << ": AI = " << ai.str() << " flop/B (" << fixed(ai.to_double(), 4) << ") -> "
          << to_string(classify(ai, machine)) << "\n";
    }

    out << "\ninvocation-cost fits (I includes the constant cost of the measurement loop)\n";
    for (const Profile* p : group) {
      try {
        const FitResult fit = fit_invocation_cost(*p);
        out << "  " << p->label << ": p_max = " << fixed(fit.p_max / 1e9, 3) << " Gflop/s, I = "
            << fixed(fit.invocation_cost, 1) << " flop, rms residual = " << fixed(fit.rms_relative_residual, 4)
            << ", points = " << fit.points_used << "\n";
      } catch (const Error& e) {
        out << "  " << p->label << ": no fit (" << e.what() << ")\n";
      }
    }
  }
  return out.str();
}

}  // namespace kprof
