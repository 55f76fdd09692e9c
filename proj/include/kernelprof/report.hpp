#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kernelprof/machine.hpp"
#include "kernelprof/profile.hpp"

namespace kprof {

/// Column order of profile CSV files.
inline constexpr const char* kCsvHeader =
    "label,kernel,variant,callpath,alignment,n,mem_bytes,flops,best_mean_seconds,gflops,inner_iters,rep_variance";

/// One row per sample point, profiles in order. Doubles are written in
/// shortest round-trip form, so output is byte-stable and reads back exactly.
void write_csv(const std::vector<Profile>& profiles, std::ostream& out);
void write_csv(const std::vector<Profile>& profiles, const std::filesystem::path& path);

/// Rows sharing a label form one profile; a label must not reappear after
/// another label's rows. Throws Schema naming the line (and column) at fault.
std::vector<Profile> read_csv(std::istream& in);
std::vector<Profile> read_csv(const std::filesystem::path& path);

// Machine profile file:
//
//   # comment
//   peak_gflops = 41.6
//   peak_bandwidth_gbs = 40
//   l1_bytes = 32768
//   l2_bytes = 262144
//   l3_bytes = 6291456
//   description = free text
//
// All five numeric keys are required; unknown keys are rejected.
MachineProfile read_machine_profile(std::istream& in);
MachineProfile read_machine_profile(const std::filesystem::path& path);
/// `comments` are written as leading '#' lines.
void write_machine_profile(const MachineProfile& machine, std::ostream& out,
                           const std::vector<std::string>& comments = {});
void write_machine_profile(const MachineProfile& machine, const std::filesystem::path& path,
                           const std::vector<std::string>& comments = {});

/// SVG line chart: log2 memory on x, Gflop/s on y, one polyline per profile,
/// dashed markers at the machine's cache sizes. Deterministic output.
std::string render_profile_chart(const std::vector<Profile>& profiles, const MachineProfile& machine,
                                 const std::string& title = {});
void write_profile_chart(const std::vector<Profile>& profiles, const MachineProfile& machine,
                         const std::filesystem::path& path, const std::string& title = {});

/// Relative penalty of `slow` against `fast`: (fast - slow) / fast.
double penalty(double fast, double slow);

/// Text comparison of the profiles of one kernel: inlining benefit, callback
/// penalty and alignment penalty per memory point where both sides exist,
/// then roofline classification and invocation-cost fits.
std::string summarize_comparison(const std::vector<Profile>& profiles, const MachineProfile& machine);

}  // namespace kprof
