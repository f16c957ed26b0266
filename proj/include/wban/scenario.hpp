#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wban/cluster_head.hpp"
#include "wban/codec.hpp"
#include "wban/net_sim.hpp"
#include "wban/time.hpp"

namespace wban {

enum class VitalKind {
  kPulseRate,
  kRespirationRate,
  kBodyTemperature,
  kBloodPressure,
  kBloodGas,
  kCardiacOutput,
  kSpirometry,
};

std::string_view to_string(VitalKind kind);

/// Additive offset applied while start <= t < end.
struct AnomalyWindow {
  VirtualTime start;
  VirtualTime end;
  double offset = 0.0;
};

struct VitalSignModel {
  VitalKind kind = VitalKind::kPulseRate;
  double baseline = 0.0;
  double amplitude = 0.0;
  Duration period{60000};
  double noise_sigma = 0.0;
  std::vector<AnomalyWindow> anomalies;
};

struct PredictorConfig {
  std::size_t hidden = 4;
  double learning_rate = 0.01;
  double init_scale = 0.5;
  /// Samples during which only the range check applies while the predictor
  /// trains.
  std::uint32_t warmup_samples = 300;
};

struct SensorConfig {
  std::string name;
  VitalSignModel vital;
  QuantSpec quant;
  double lo = 0.0;  // physiological range
  double hi = 1.0;
  double eps_max = 0.1;
  Duration t_fault{5000};
  PredictorConfig predictor;
  std::vector<std::size_t> neighbors;
  Duration sample_period{1000};
};

struct PhoneChange {
  VirtualTime at;
  std::optional<bool> reachable;
  std::optional<Position> position;
};

struct PhoneScript {
  PhoneNode node;
  std::vector<PhoneChange> changes;
};

enum class FaultMode { kStuckAt, kOffset, kDead };

std::string_view to_string(FaultMode mode);

struct FaultInjection {
  std::size_t sensor = 0;
  VirtualTime start;
  std::optional<VirtualTime> end;  // persistent when empty
  FaultMode mode = FaultMode::kStuckAt;
  double value = 0.0;  // stuck value or offset delta
};

struct LinkTable {
  LinkModel personal = LinkModel::defaults(LinkKind::kPersonal);
  LinkModel nearby = LinkModel::defaults(LinkKind::kNearbyBroadcast);
  LinkModel satellite = LinkModel::defaults(LinkKind::kSatellite);
  LinkModel internal = LinkModel::defaults(LinkKind::kInternal);

  const LinkModel& get(LinkKind kind) const;
};

struct Scenario {
  std::uint64_t seed = 1;
  Duration duration{std::chrono::hours(1)};
  Fingerprint fingerprint{1};
  Position patient;
  double nearby_radius = 40.0;
  std::size_t max_report_events = 32;
  TimerConfig timers;
  std::vector<SensorConfig> sensors;
  std::vector<PhoneScript> phones;
  LinkTable links;
  std::vector<FaultInjection> faults;

  QuantTable quant_table() const;
};

/// Every violated invariant, one message per violation. Empty when valid.
std::vector<std::string> validate(const Scenario& scenario);

/// The scenario document could not be accepted; lists every violation.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// The scenario file could not be read or is not well-formed JSON.
class ScenarioIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict conversion: unknown keys and type mismatches are violations, and
/// the result is validated. Throws ScenarioError.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Throws ScenarioIoError or ScenarioError.
Scenario load_scenario(const std::filesystem::path& path);

/// "250ms", "2s", "5min", "24h", "7d" or a bare integer of milliseconds.
std::optional<Duration> parse_duration(std::string_view text);

}  // namespace wban
