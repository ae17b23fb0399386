#pragma once

// Cross-run comparison of completed run directories.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotsim::report {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunData {
  std::string label;  ///< scenario name, or the directory name when unnamed
  std::string technology;
  int schema_version = 0;
  std::uint64_t max_packets = 0;
  double steady_from_s = 0;
  std::vector<std::string> nodes;
  /// Per node, per steady window.
  std::map<std::string, std::vector<double>> ndr;
  std::map<std::string, std::vector<double>> pdr;
};

/// Reads manifest.json and windows.csv from a run directory.
RunData load_run(const std::filesystem::path& dir);

/// Throws ReportError when the runs disagree on schema version or `runs` is empty.
void check_compatible(const std::vector<RunData>& runs);

/// Side-by-side NDR table (and PDR for runs that poll), one column group per run.
std::string comparison_markdown(const std::vector<RunData>& runs);

/// run,node,metric,n,min,q1,median,q3,max rows for box plots.
std::string boxplot_csv(const std::vector<RunData>& runs);

/// Linear-interpolation quantile of sorted values, q in [0, 1].
double quantile(const std::vector<double>& sorted, double q);

}  // namespace iotsim::report
