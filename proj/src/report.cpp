#include "iotsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "iotsim/metrics.hpp"

namespace iotsim::report {

namespace {

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void stat_cells(std::ostream& os, const std::vector<double>& v) {
  if (v.empty()) {
    os << " - | - | - | - |";
    return;
  }
  const auto s = metrics::stat_row(v);
  os << ' ' << fmt(s.avg, 2) << " | " << fmt(s.sd, 2) << " | " << fmt(s.min, 2) << " | " << fmt(s.max, 2) << " |";
}

void table(std::ostream& os, const std::vector<RunData>& runs, const char* title,
           std::map<std::string, std::vector<double>> RunData::*field) {
  os << "## " << title << "\n\n| Node |";
  for (const auto& r : runs) os << ' ' << r.label << " Avg | SD | Min | Max |";
  os << "\n|---|";
  for (std::size_t i = 0; i < runs.size(); ++i) os << "---|---|---|---|";
  os << '\n';
  std::vector<std::string> nodes;
  for (const auto& r : runs)
    for (const auto& n : r.nodes)
      if (std::find(nodes.begin(), nodes.end(), n) == nodes.end()) nodes.push_back(n);
  for (const auto& n : nodes) {
    os << "| " << n << " |";
    for (const auto& r : runs) {
      const auto it = (r.*field).find(n);
      stat_cells(os, it == (r.*field).end() ? std::vector<double>{} : it->second);
    }
    os << '\n';
  }
  os << '\n';
}

}  // namespace

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

RunData load_run(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ReportError(dir.string() + ": no manifest.json");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(dir.string() + "/manifest.json: " + e.what());
  }
  RunData r;
  try {
    r.schema_version = m.at("schema_version").get<int>();
    r.technology = m.at("technology").get<std::string>();
    r.max_packets = m.at("max_packets_per_window").get<std::uint64_t>();
    r.steady_from_s = m.at("steady_from_s").get<double>();
    r.nodes = m.at("nodes").get<std::vector<std::string>>();
    r.label = m.value("name", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(dir.string() + "/manifest.json: " + e.what());
  }
  if (r.label.empty()) r.label = dir.filename().string();

  std::ifstream wf(dir / "windows.csv");
  if (!wf) throw ReportError(dir.string() + ": no windows.csv");
  std::string line;
  std::getline(wf, line);
  if (line != metrics::kWindowCsvHeader) throw ReportError(dir.string() + "/windows.csv: unexpected header");
  const auto header = split_csv(line);
  auto col = [&](const char* name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  const std::size_t c_start = col("window_start_s"), c_node = col("node_id"), c_ndr = col("ndr"), c_pdr = col("pdr");
  while (std::getline(wf, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ReportError(dir.string() + "/windows.csv: malformed row: " + line);
    if (std::stod(cells[c_start]) + 1e-9 < r.steady_from_s) continue;
    if (!cells[c_ndr].empty()) r.ndr[cells[c_node]].push_back(std::stod(cells[c_ndr]));
    if (!cells[c_pdr].empty()) r.pdr[cells[c_node]].push_back(std::stod(cells[c_pdr]));
  }
  return r;
}

void check_compatible(const std::vector<RunData>& runs) {
  if (runs.empty()) throw ReportError("no runs given");
  for (const auto& r : runs)
    if (r.schema_version != runs.front().schema_version)
      throw ReportError("schema version mismatch: " + runs.front().label + " has " +
                        std::to_string(runs.front().schema_version) + ", " + r.label + " has " +
                        std::to_string(r.schema_version));
}

std::string comparison_markdown(const std::vector<RunData>& runs) {
  check_compatible(runs);
  std::ostringstream os;
  os << "# Run comparison\n\n| Run | Technology | Max packets per window |\n|---|---|---|\n";
  for (const auto& r : runs) os << "| " << r.label << " | " << r.technology << " | " << r.max_packets << " |\n";
  os << '\n';
  table(os, runs, "Network delivery ratio", &RunData::ndr);
  std::vector<RunData> polled;
  for (const auto& r : runs)
    if (!r.pdr.empty()) polled.push_back(r);
  if (!polled.empty()) table(os, polled, "Packet delivery ratio", &RunData::pdr);
  return os.str();
}

std::string boxplot_csv(const std::vector<RunData>& runs) {
  check_compatible(runs);
  std::ostringstream os;
  os << "run,node,metric,n,min,q1,median,q3,max\n";
  auto emit = [&](const RunData& r, const char* metric, const std::map<std::string, std::vector<double>>& data) {
    for (const auto& n : r.nodes) {
      const auto it = data.find(n);
      if (it == data.end() || it->second.empty()) continue;
      auto v = it->second;
      std::sort(v.begin(), v.end());
      os << r.label << ',' << n << ',' << metric << ',' << v.size() << ',' << fmt(v.front(), 6) << ','
         << fmt(quantile(v, 0.25), 6) << ',' << fmt(quantile(v, 0.5), 6) << ',' << fmt(quantile(v, 0.75), 6) << ','
         << fmt(v.back(), 6) << '\n';
    }
  };
  for (const auto& r : runs) {
    emit(r, "ndr", r.ndr);
    emit(r, "pdr", r.pdr);
  }
  return os.str();
}

}  // namespace iotsim::report
