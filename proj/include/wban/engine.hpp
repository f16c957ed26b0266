#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "wban/rng.hpp"
#include "wban/scenario.hpp"
#include "wban/trace.hpp"

namespace wban {

/// baseline + amplitude * sin(2 pi t / period) + N(0, noise_sigma) plus the
/// offsets of every anomaly window containing t. Draws from `rng` only when
/// noise_sigma > 0.
double sample_vital(const VitalSignModel& model, VirtualTime t, Rng& rng);

struct RunResult {
  nlohmann::json header;
  std::vector<TraceEvent> trace;
  Metrics metrics;

  void write_trace(std::ostream& out) const;
};

/// Execute a scenario over virtual time.
///
/// Samples, clock ticks and timers are processed up to and including
/// `duration`; an "end" event is then recorded and frames still in flight are
/// delivered, with no further timers. Throws ScenarioError for an invalid
/// scenario.
RunResult run(const Scenario& scenario);

}  // namespace wban
