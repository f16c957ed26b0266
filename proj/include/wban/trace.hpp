#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wban/codec.hpp"
#include "wban/time.hpp"

namespace wban {

/// One line of the run trace.
struct TraceEvent {
  VirtualTime time;
  std::uint64_t seq = 0;
  std::string actor;
  std::string kind;
  Bytes frame;  // empty when the event carries no frame
  nlohmann::json annotations = nlohmann::json::object();

  bool operator==(const TraceEvent&) const = default;
};

nlohmann::json to_json(const TraceEvent& event);
TraceEvent trace_event_from_json(const nlohmann::json& line);

/// JSON Lines: the header object first, then one object per event.
void write_trace(std::ostream& out, const nlohmann::json& header,
                 const std::vector<TraceEvent>& events);

struct ParsedTrace {
  nlohmann::json header;
  std::vector<TraceEvent> events;
};

ParsedTrace read_trace(std::istream& in);

struct Stats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double min = 0.0;
  double max = 0.0;

  void add(double x);
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
  bool operator==(const Stats&) const = default;
};

/// Aggregate outcome counters. Always derived from a trace by
/// compute_metrics(), never accumulated separately.
struct Metrics {
  Stats emergency_detection_latency_ms;
  Stats delivery_latency_ms;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_delivered = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t report_transmissions = 0;
  std::uint64_t report_retransmissions = 0;
  std::uint64_t reports_acked = 0;
  std::uint64_t escalation_activations = 0;
  std::uint64_t stage_sends[3] = {0, 0, 0};
  std::uint64_t interrupt_returns = 0;
  std::uint64_t advisories = 0;
  std::uint64_t dispatches = 0;
  std::uint64_t fault_true_positives = 0;
  std::uint64_t fault_false_positives = 0;
  std::uint64_t fault_false_negatives = 0;
  std::map<std::string, double> energy_by_link;  // cluster-head transmissions only
  double total_energy = 0.0;
  std::map<std::string, std::uint64_t> mode_occupancy_ms;

  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(const std::vector<TraceEvent>& trace);

nlohmann::json to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& doc);

}  // namespace wban
