#include "wban/trace.hpp"

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>

namespace wban {

using nlohmann::json;

json to_json(const TraceEvent& e) {
  json line = {{"t", e.time.ticks}, {"seq", e.seq}, {"actor", e.actor}, {"kind", e.kind}};
  if (!e.frame.empty()) line["frame"] = to_hex(e.frame);
  if (!e.annotations.empty()) line["ann"] = e.annotations;
  return line;
}

TraceEvent trace_event_from_json(const json& line) {
  TraceEvent e;
  e.time = VirtualTime{line.at("t").get<std::uint64_t>()};
  e.seq = line.at("seq").get<std::uint64_t>();
  e.actor = line.at("actor").get<std::string>();
  e.kind = line.at("kind").get<std::string>();
  if (auto it = line.find("frame"); it != line.end()) e.frame = from_hex(it->get<std::string>());
  if (auto it = line.find("ann"); it != line.end()) e.annotations = *it;
  return e;
}

void write_trace(std::ostream& out, const json& header, const std::vector<TraceEvent>& events) {
  out << header.dump() << '\n';
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

ParsedTrace read_trace(std::istream& in) {
  ParsedTrace trace;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto doc = json::parse(line);
    if (first) {
      trace.header = std::move(doc);
      first = false;
    } else {
      trace.events.push_back(trace_event_from_json(doc));
    }
  }
  if (first) throw std::runtime_error("trace is empty");
  return trace;
}

void Stats::add(double x) {
  if (count == 0) {
    min = max = x;
  } else {
    min = std::min(min, x);
    max = std::max(max, x);
  }
  sum += x;
  ++count;
}

namespace {

std::string ann_string(const TraceEvent& e, const char* key) {
  auto it = e.annotations.find(key);
  return it != e.annotations.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

}  // namespace

Metrics compute_metrics(const std::vector<TraceEvent>& trace) {
  Metrics m;
  for (const char* mode : {"normal", "semi_critical", "critical"}) m.mode_occupancy_ms[mode] = 0;

  std::string mode = "normal";
  VirtualTime mode_since{0};
  bool anomaly_pending = false;
  VirtualTime anomaly_since{0};

  struct Injection {
    std::size_t sensor;
    VirtualTime start;
    bool expect_detect;
  };
  std::vector<Injection> injections;
  std::set<std::size_t> detected;

  for (const auto& e : trace) {
    const auto& k = e.kind;
    if (k == "send") {
      ++m.frames_sent;
      const auto purpose = ann_string(e, "purpose");
      if (e.actor == "ch") {
        const double energy = e.annotations.value("energy", 0.0);
        m.energy_by_link[ann_string(e, "link")] += energy;
        m.total_energy += energy;
      }
      if (purpose == "daily" || purpose == "retry" || purpose == "fault_notice")
        ++m.report_transmissions;
      if (purpose == "retry") ++m.report_retransmissions;
      if (purpose == "stage1") {
        ++m.stage_sends[0];
        ++m.escalation_activations;
      }
      if (purpose == "stage2") ++m.stage_sends[1];
      if (purpose == "stage3") ++m.stage_sends[2];
    } else if (k == "recv") {
      ++m.frames_delivered;
      m.delivery_latency_ms.add(e.annotations.value("latency", 0.0));
    } else if (k == "decode_error") {
      ++m.decode_errors;
    } else if (k == "report_acked") {
      ++m.reports_acked;
    } else if (k == "return_from_interrupt") {
      ++m.interrupt_returns;
    } else if (k == "advisory") {
      ++m.advisories;
    } else if (k == "dispatch") {
      ++m.dispatches;
    } else if (k == "anomaly_start") {
      anomaly_pending = true;
      anomaly_since = e.time;
    } else if (k == "mode") {
      const auto to = ann_string(e, "to");
      m.mode_occupancy_ms[mode] += (e.time - mode_since).count();
      mode = to;
      mode_since = e.time;
      if (to == "critical" && anomaly_pending) {
        m.emergency_detection_latency_ms.add(static_cast<double>((e.time - anomaly_since).count()));
        anomaly_pending = false;
      }
    } else if (k == "fault_injected") {
      injections.push_back({e.annotations.at("sensor").get<std::size_t>(), e.time,
                            e.annotations.value("expect_detect", false)});
    } else if (k == "verdict" && ann_string(e, "verdict") == "faulty") {
      const auto sensor = e.annotations.at("sensor").get<std::size_t>();
      if (!detected.insert(sensor).second) continue;
      const bool injected = std::any_of(injections.begin(), injections.end(), [&](const Injection& i) {
        return i.sensor == sensor && i.start <= e.time;
      });
      ++(injected ? m.fault_true_positives : m.fault_false_positives);
    } else if (k == "end") {
      m.mode_occupancy_ms[mode] += (e.time - mode_since).count();
      mode_since = e.time;
    }
  }
  for (const auto& i : injections) {
    if (i.expect_detect && !detected.contains(i.sensor)) ++m.fault_false_negatives;
  }
  return m;
}

namespace {

json stats_json(const Stats& s) {
  return {{"count", s.count}, {"sum", s.sum}, {"min", s.min}, {"max", s.max}, {"mean", s.mean()}};
}

Stats stats_from(const json& j) {
  Stats s;
  s.count = j.at("count").get<std::uint64_t>();
  s.sum = j.at("sum").get<double>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  return s;
}

}  // namespace

json to_json(const Metrics& m) {
  return {
      {"emergency_detection_latency_ms", stats_json(m.emergency_detection_latency_ms)},
      {"delivery_latency_ms", stats_json(m.delivery_latency_ms)},
      {"frames_sent", m.frames_sent},
      {"frames_delivered", m.frames_delivered},
      {"decode_errors", m.decode_errors},
      {"report_transmissions", m.report_transmissions},
      {"report_retransmissions", m.report_retransmissions},
      {"reports_acked", m.reports_acked},
      {"escalation_activations", m.escalation_activations},
      {"stage_sends", {m.stage_sends[0], m.stage_sends[1], m.stage_sends[2]}},
      {"interrupt_returns", m.interrupt_returns},
      {"advisories", m.advisories},
      {"dispatches", m.dispatches},
      {"fault_detection",
       {{"true_positives", m.fault_true_positives},
        {"false_positives", m.fault_false_positives},
        {"false_negatives", m.fault_false_negatives}}},
      {"energy_by_link", m.energy_by_link},
      {"total_energy", m.total_energy},
      {"mode_occupancy_ms", m.mode_occupancy_ms},
  };
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.emergency_detection_latency_ms = stats_from(j.at("emergency_detection_latency_ms"));
  m.delivery_latency_ms = stats_from(j.at("delivery_latency_ms"));
  m.frames_sent = j.at("frames_sent").get<std::uint64_t>();
  m.frames_delivered = j.at("frames_delivered").get<std::uint64_t>();
  m.decode_errors = j.at("decode_errors").get<std::uint64_t>();
  m.report_transmissions = j.at("report_transmissions").get<std::uint64_t>();
  m.report_retransmissions = j.at("report_retransmissions").get<std::uint64_t>();
  m.reports_acked = j.at("reports_acked").get<std::uint64_t>();
  m.escalation_activations = j.at("escalation_activations").get<std::uint64_t>();
  for (int i = 0; i < 3; ++i) m.stage_sends[i] = j.at("stage_sends").at(i).get<std::uint64_t>();
  m.interrupt_returns = j.at("interrupt_returns").get<std::uint64_t>();
  m.advisories = j.at("advisories").get<std::uint64_t>();
  m.dispatches = j.at("dispatches").get<std::uint64_t>();
  const auto& fd = j.at("fault_detection");
  m.fault_true_positives = fd.at("true_positives").get<std::uint64_t>();
  m.fault_false_positives = fd.at("false_positives").get<std::uint64_t>();
  m.fault_false_negatives = fd.at("false_negatives").get<std::uint64_t>();
  m.energy_by_link = j.at("energy_by_link").get<std::map<std::string, double>>();
  m.total_energy = j.at("total_energy").get<double>();
  m.mode_occupancy_ms = j.at("mode_occupancy_ms").get<std::map<std::string, std::uint64_t>>();
  return m;
}

}  // namespace wban
