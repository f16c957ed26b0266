#include "wban/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "wban/engine.hpp"
#include "wban/scenario.hpp"

namespace wban {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json summary_json(const RunResult& r) {
  const auto& m = r.metrics;
  return {{"seed", r.header.at("seed")},
          {"mode_occupancy_ms", m.mode_occupancy_ms},
          {"escalation_activations", m.escalation_activations},
          {"stage_sends", {m.stage_sends[0], m.stage_sends[1], m.stage_sends[2]}},
          {"interrupt_returns", m.interrupt_returns},
          {"frames_sent", m.frames_sent},
          {"frames_delivered", m.frames_delivered},
          {"mean_delivery_latency_ms", m.delivery_latency_ms.mean()},
          {"mean_detection_latency_ms", m.emergency_detection_latency_ms.mean()},
          {"fault_detection",
           {{"tp", m.fault_true_positives}, {"fp", m.fault_false_positives}, {"fn", m.fault_false_negatives}}},
          {"energy_by_link", m.energy_by_link},
          {"total_energy", m.total_energy}};
}

void print_table(std::ostream& out, const std::string& name, const RunResult& r) {
  const auto& m = r.metrics;
  out << "scenario " << name << " (seed " << r.header.at("seed").get<std::uint64_t>() << ")\n";
  out << std::left;
  auto row = [&](const std::string& k, const auto& v) { out << "  " << std::setw(28) << k << v << '\n'; };
  for (const auto& [mode, ms] : m.mode_occupancy_ms) row("mode " + mode + " ms", ms);
  row("escalation activations", m.escalation_activations);
  row("stage sends 1/2/3", std::to_string(m.stage_sends[0]) + "/" + std::to_string(m.stage_sends[1]) + "/" +
                               std::to_string(m.stage_sends[2]));
  row("interrupt returns", m.interrupt_returns);
  row("reports sent/retried/acked", std::to_string(m.report_transmissions) + "/" +
                                        std::to_string(m.report_retransmissions) + "/" +
                                        std::to_string(m.reports_acked));
  row("frames sent/delivered", std::to_string(m.frames_sent) + "/" + std::to_string(m.frames_delivered));
  row("mean delivery latency ms", m.delivery_latency_ms.mean());
  row("mean detection latency ms", m.emergency_detection_latency_ms.mean());
  row("faults tp/fp/fn", std::to_string(m.fault_true_positives) + "/" + std::to_string(m.fault_false_positives) +
                             "/" + std::to_string(m.fault_false_negatives));
  for (const auto& [link, e] : m.energy_by_link) row("energy " + link, e);
  row("energy total", m.total_energy);
}

struct Job {
  fs::path scenario;
  fs::path out_dir;
};

struct JobOutcome {
  int code = kExitOk;
  std::string out;
  std::string err;
};

JobOutcome run_one(const Job& job, const RunConfig& cfg) {
  JobOutcome o;
  std::ostringstream out, err;
  try {
    Scenario sc = load_scenario(job.scenario);
    if (cfg.seed) sc.seed = *cfg.seed;
    const RunResult result = run(sc);

    fs::create_directories(job.out_dir);
    {
      std::ofstream trace(job.out_dir / "trace.jsonl", std::ios::binary);
      result.write_trace(trace);
      if (!trace) throw std::runtime_error("cannot write " + (job.out_dir / "trace.jsonl").string());
    }
    {
      std::ofstream metrics(job.out_dir / "metrics.json", std::ios::binary);
      metrics << to_json(result.metrics).dump(2) << '\n';
      if (!metrics) throw std::runtime_error("cannot write " + (job.out_dir / "metrics.json").string());
    }
    const std::string name = job.scenario.stem().string();
    if (cfg.report == ReportFormat::kStructured) {
      json s = summary_json(result);
      s["scenario"] = name;
      out << s.dump() << '\n';
    } else {
      print_table(out, name, result);
    }
    if (cfg.verbosity > 0) out << "wrote " << job.out_dir.string() << '\n';
  } catch (const ScenarioIoError& e) {
    err << "error: " << e.what() << '\n';
    o.code = kExitUnreadable;
  } catch (const ScenarioError& e) {
    err << "invalid scenario " << job.scenario.string() << ":\n";
    for (const auto& v : e.violations()) err << "  - " << v << '\n';
    o.code = kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    o.code = kExitInternal;
  }
  o.out = out.str();
  o.err = err.str();
  return o;
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::error_code ec;
  if (!fs::exists(config.scenario, ec)) {
    err << "error: scenario not found: " << config.scenario.string() << '\n';
    return kExitUnreadable;
  }

  std::vector<Job> jobs;
  if (fs::is_directory(config.scenario, ec)) {
    for (const auto& entry : fs::directory_iterator(config.scenario)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        jobs.push_back({entry.path(), config.out_dir / entry.path().stem()});
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.scenario < b.scenario; });
    if (jobs.empty()) {
      err << "error: no .json scenarios in " << config.scenario.string() << '\n';
      return kExitUnreadable;
    }
  } else {
    jobs.push_back({config.scenario, config.out_dir});
  }

  // Validate everything before any run starts.
  for (const auto& job : jobs) {
    try {
      Scenario sc = load_scenario(job.scenario);
      if (config.seed) sc.seed = *config.seed;
      if (auto v = validate(sc); !v.empty()) throw ScenarioError(std::move(v));
    } catch (const ScenarioIoError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUnreadable;
    } catch (const ScenarioError& e) {
      err << "invalid scenario " << job.scenario.string() << ":\n";
      for (const auto& v : e.violations()) err << "  - " << v << '\n';
      return kExitInvalid;
    }
  }

  std::vector<JobOutcome> outcomes(jobs.size());
  unsigned workers = config.jobs ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) outcomes[i] = run_one(jobs[i], config);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) outcomes[i] = run_one(jobs[i], config);
      });
    }
    for (auto& t : pool) t.join();
  }

  int code = kExitOk;
  for (const auto& o : outcomes) {
    out << o.out;
    err << o.err;
    if (code == kExitOk) code = o.code;
  }
  return code;
}

int cmd_validate(const fs::path& path, std::ostream& out, std::ostream& err) {
  try {
    const Scenario sc = load_scenario(path);
    if (auto v = validate(sc); !v.empty()) throw ScenarioError(std::move(v));
    out << path.string() << ": ok (" << sc.sensors.size() << " sensors, " << sc.phones.size() << " phones)\n";
    return kExitOk;
  } catch (const ScenarioIoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnreadable;
  } catch (const ScenarioError& e) {
    err << path.string() << ": " << e.violations().size() << " violation(s)\n";
    for (const auto& v : e.violations()) err << "  - " << v << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int cmd_selftest(std::ostream& out, const SelftestOptions& options) {
  return print_selftest(out, run_selftest(options)) ? kExitOk : kExitInternal;
}

}  // namespace wban
