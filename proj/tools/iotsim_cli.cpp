#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "iotsim/airtime.hpp"
#include "iotsim/duty_ledger.hpp"
#include "iotsim/metrics.hpp"
#include "iotsim/report.hpp"
#include "iotsim/runner.hpp"
#include "iotsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace iotsim;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct AirtimeArgs {
  int sf = 7;
  double bw_khz = 125;
  int payload = 60;
  int cr = 1;
  int nodes = 0;
  double window_s = 900;
  bool csv = false;
};

int cmd_airtime(const AirtimeArgs& a) {
  airtime::RadioConfig cfg = airtime::make_config(a.sf, static_cast<std::uint32_t>(std::llround(a.bw_khz * 1000)));
  cfg.coding_rate = a.cr;
  try {
    cfg.validate();
    if (a.payload < 0 || a.payload > 255) throw std::invalid_argument("payload: must be in [0, 255]");
    if (a.nodes < 0) throw std::invalid_argument("nodes: must be >= 0");
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  const auto toa = airtime::time_on_air(cfg, a.payload);
  const double period = airtime::min_tx_period(toa.total);
  std::vector<std::string> head{"SF", "BW_kHz", "PL", "ToA_ms", "PayloadToA_ms", "MinPeriod_s"};
  char buf[64];
  auto f = [&](const char* spec, double v) {
    std::snprintf(buf, sizeof buf, spec, v);
    return std::string(buf);
  };
  std::vector<std::string> row{std::to_string(a.sf), f("%g", a.bw_khz), std::to_string(a.payload),
                               f("%.3f", toa.total * 1e3),
                               f("%.3f", toa.payload_duration * 1e3), f("%.4f", period)};
  if (a.nodes > 0) {
    const auto cap = airtime::polled_capacity(a.nodes, cfg, a.payload, a.window_s);
    head.insert(head.end(), {"Nodes", "NodePeriod_s", "MaxPackets"});
    row.insert(row.end(), {std::to_string(a.nodes), f("%.4f", cap.per_node_period), f("%.4f", cap.max_packets)});
  }
  if (a.csv) {
    for (std::size_t i = 0; i < head.size(); ++i) std::cout << (i ? "," : "") << head[i];
    std::cout << '\n';
    for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << row[i];
    std::cout << '\n';
    return 0;
  }
  for (std::size_t i = 0; i < head.size(); ++i) {
    const std::size_t w = std::max(head[i].size(), row[i].size());
    std::printf("%*s%s", static_cast<int>(w), head[i].c_str(), i + 1 < head.size() ? "  " : "\n");
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    const std::size_t w = std::max(head[i].size(), row[i].size());
    std::printf("%*s%s", static_cast<int>(w), row[i].c_str(), i + 1 < row.size() ? "  " : "\n");
  }
  return 0;
}

struct SimulateArgs {
  std::vector<std::string> scenarios;
  std::optional<std::uint64_t> seed;
  std::uint64_t seeds = 1;
  std::string out;
  unsigned jobs = 1;
};

struct Job {
  Scenario scenario;
  fs::path dir;
};

int cmd_simulate(const SimulateArgs& a) {
  fs::path out = a.out;
  if (out.empty()) {
    const char* env = std::getenv("IOTSIM_OUT_DIR");
    out = env && *env ? env : "runs";
  }
  std::vector<Job> jobs;
  for (const auto& path : a.scenarios) {
    Scenario base;
    try {
      base = load_scenario(path);
    } catch (const ScenarioError& e) {
      std::cerr << "error: " << path << ": " << e.what() << '\n';
      return kExitValidation;
    }
    const std::uint64_t first = a.seed.value_or(base.seed);
    for (std::uint64_t k = 0; k < a.seeds; ++k) {
      Scenario s = base;
      s.seed = first + k;
      const std::string stem = fs::path(path).stem().string();
      fs::path dir = out / stem;
      if (a.seeds > 1 || a.scenarios.size() > 1) dir = out / (stem + "-seed" + std::to_string(s.seed));
      jobs.push_back({std::move(s), dir});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> status{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        const RunResult r = run_scenario(job.scenario);
        write_run(r, job.dir);
        std::lock_guard lock(io);
        std::cout << job.dir.string() << ": seed " << job.scenario.seed << ", " << r.windows.size()
                  << " window rows, trace " << hex64(r.trace_hash) << '\n';
      } catch (const ScenarioError& e) {
        std::lock_guard lock(io);
        std::cerr << "error: " << e.what() << '\n';
        int expected = 0;
        status.compare_exchange_strong(expected, kExitValidation);
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        std::cerr << "runtime inconsistency in " << job.dir.string() << ": " << e.what() << '\n';
        status = kExitRuntime;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return status;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
  std::string boxplot;
};

int cmd_report(const ReportArgs& a) {
  std::vector<report::RunData> runs;
  try {
    for (const auto& r : a.runs) runs.push_back(report::load_run(r));
    const std::string md = report::comparison_markdown(runs);
    if (a.out.empty()) {
      std::cout << md;
    } else {
      std::ofstream(a.out) << md;
    }
    if (!a.boxplot.empty()) std::ofstream(a.boxplot) << report::boxplot_csv(runs);
  } catch (const report::ReportError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor IoT network simulator: LoRa polling star and 802.15.4 multihop tree"};
  app.require_subcommand(1);

  AirtimeArgs aa;
  auto* air = app.add_subcommand("airtime", "LoRa time on air, minimum period and polled capacity");
  air->add_option("--sf", aa.sf, "Spreading factor (6-12)")->required();
  air->add_option("--bw", aa.bw_khz, "Bandwidth in kHz (125, 250, 500)")->required();
  air->add_option("--payload", aa.payload, "Payload length in bytes")->capture_default_str();
  air->add_option("--cr", aa.cr, "Coding rate index, 1..4 for 4/5..4/8")->capture_default_str();
  air->add_option("--nodes", aa.nodes, "Polled nodes sharing the gateway budget");
  air->add_option("--window", aa.window_s, "Capacity window in seconds")->capture_default_str();
  air->add_flag("--csv", aa.csv, "CSV output");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run scenario files");
  sim->add_option("scenarios", sa.scenarios, "Scenario JSON files")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", sa.seed, "Override the scenario seed");
  sim->add_option("--seeds", sa.seeds, "Consecutive seeds to run from the base seed")->check(CLI::PositiveNumber);
  sim->add_option("--out", sa.out, "Output directory (default $IOTSIM_OUT_DIR or ./runs)");
  sim->add_option("--jobs", sa.jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Compare completed runs");
  rep->add_option("runs", ra.runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", ra.out, "Write the comparison markdown here instead of stdout");
  rep->add_option("--boxplot", ra.boxplot, "Write per-node quantiles CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (*air) return cmd_airtime(aa);
  if (*sim) return cmd_simulate(sa);
  return cmd_report(ra);
}
