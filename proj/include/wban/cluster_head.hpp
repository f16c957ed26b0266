#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wban/codec.hpp"
#include "wban/time.hpp"

namespace wban {

/// CH timer constants. Defaults are the published values.
struct TimerConfig {
  Duration time0{std::chrono::hours(24)};    // daily report period
  Duration time01{std::chrono::hours(1)};    // retry period, must be < time0
  Duration time1{100};                       // personal-phone ACK window
  Duration time2{std::chrono::seconds(2)};   // nearby-broadcast ACK window
  Duration time3{std::chrono::seconds(20)};  // standby before interrupt return

  /// Empty when the configuration is usable.
  std::vector<std::string> violations() const;

  bool operator==(const TimerConfig&) const = default;
};

enum class PatientMode { kNormal = 0, kSemiCritical = 1, kCritical = 2 };

std::string_view to_string(PatientMode mode);

/// 0 -> Normal, 1..2 -> SemiCritical, 3 or more -> Critical.
/// Throws std::domain_error when count > n_sensors.
PatientMode classify(std::size_t out_of_threshold, std::size_t n_sensors);

// ---------------------------------------------------------------------------
// Emergency interrupt

enum class Stage { kMonitorIdle, kStage1Wait, kStage2Wait, kStage3Wait, kPostAckStandby };

std::string_view to_string(Stage stage);

struct EscalationState {
  Stage stage = Stage::kMonitorIdle;
  std::optional<VirtualTime> deadline;
  bool emergency_active = false;
  std::vector<Ack> inbox;

  bool waiting() const { return stage != Stage::kMonitorIdle; }
  bool operator==(const EscalationState&) const = default;
};

struct EmergencyRaised {
  bool operator==(const EmergencyRaised&) const = default;
};
struct TimerExpired {
  bool operator==(const TimerExpired&) const = default;
};
struct AckReceived {
  Ack ack;
  bool operator==(const AckReceived&) const = default;
};
struct EmergencyCleared {
  bool operator==(const EmergencyCleared&) const = default;
};

using EscalationEvent =
    std::variant<EmergencyRaised, TimerExpired, AckReceived, EmergencyCleared>;

struct SendToPersonalPhone {
  Frame frame;
  bool operator==(const SendToPersonalPhone&) const = default;
};
struct BroadcastNearby {
  Frame frame;
  bool operator==(const BroadcastNearby&) const = default;
};
struct SendSatellite {
  Frame frame;
  bool operator==(const SendSatellite&) const = default;
};
struct ArmTimer {
  Duration duration;
  bool operator==(const ArmTimer&) const = default;
};
struct EmptyInbox {
  bool operator==(const EmptyInbox&) const = default;
};
struct ReturnFromInterrupt {
  bool operator==(const ReturnFromInterrupt&) const = default;
};

using EscalationAction = std::variant<SendToPersonalPhone, BroadcastNearby, SendSatellite,
                                      ArmTimer, EmptyInbox, ReturnFromInterrupt>;

std::string_view action_name(const EscalationAction& action);

/// What the escalation frames carry. Each stage wraps it in its own layout.
struct EmergencyPayload {
  Fingerprint fingerprint;
  SensorStatusField status;
  std::vector<EventRecord> events;
};

struct EscalationStep {
  EscalationState state;
  std::vector<EscalationAction> actions;
};

/// Raised for an event the current stage cannot accept.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Pure transition function of the emergency interrupt.
///
/// After ReturnFromInterrupt the stage is MonitorIdle; if emergency_active is
/// still set the caller re-raises immediately. ACKs in PostAckStandby are
/// duplicates and produce no actions.
EscalationStep escalation_step(EscalationState state, const TimerConfig& cfg,
                               const EscalationEvent& event, VirtualTime now,
                               const EmergencyPayload& payload);

struct TimelineEntry {
  VirtualTime time;
  std::string action;  // action_name() of the emitted action
  Stage stage_after = Stage::kMonitorIdle;
  bool operator==(const TimelineEntry&) const = default;
};

/// Drives escalation_step alone, from EmergencyRaised at t=0 until `horizon`,
/// re-raising after every return. Each ACK time is delivered as AckReceived
/// at that instant (ACKs landing while idle are dropped). Used by selftest
/// and the Python bindings.
std::vector<TimelineEntry> escalation_timeline(const TimerConfig& cfg,
                                               VirtualTime horizon,
                                               std::span<const VirtualTime> ack_times = {});

// ---------------------------------------------------------------------------
// Normal loop

struct QueuedReport {
  DailyReport report;
  VirtualTime enqueued;
  unsigned attempts = 0;
  bool operator==(const QueuedReport&) const = default;
};

struct NormalLoopState {
  std::deque<QueuedReport> queue;
  bool operator==(const NormalLoopState&) const = default;
};

struct SendReport {
  DailyReport report;
  unsigned attempt = 1;  // 1 for the first transmission
  bool operator==(const SendReport&) const = default;
};

struct ReportAcknowledged {
  unsigned attempts = 0;
  VirtualTime enqueued;
  bool operator==(const ReportAcknowledged&) const = default;
};

using NormalAction = std::variant<SendReport, ReportAcknowledged>;

struct NormalTick {
  NormalLoopState state;
  std::vector<NormalAction> actions;
};

/// One turn of the monitoring loop at `now`.
///
/// In order: an ACK matching the queue head removes it (several ACKs in one
/// inbox collapse to one removal); on a multiple of time01 the head is resent
/// if it was queued before `now`; on a nonzero multiple of time0 a fresh
/// report from `build_report` is sent and queued.
NormalTick normal_tick(NormalLoopState state, const TimerConfig& cfg, VirtualTime now,
                       std::span<const Ack> inbox,
                       const std::function<DailyReport()>& build_report);

/// ACK handling alone, for ACKs that arrive between clock ticks.
NormalTick acknowledge_reports(NormalLoopState state, std::span<const Ack> inbox);

/// Send a report outside the daily schedule and queue it for retry.
NormalTick submit_report(NormalLoopState state, DailyReport report, VirtualTime now);

// ---------------------------------------------------------------------------
// Mode transitions

struct RequestAllSensorData {
  bool operator==(const RequestAllSensorData&) const = default;
};

using ModeAction = std::variant<RequestAllSensorData, EmergencyRaised, EmergencyCleared>;

/// Throws std::invalid_argument when old_mode == new_mode.
std::vector<ModeAction> on_mode_change(PatientMode old_mode, PatientMode new_mode);

}  // namespace wban
