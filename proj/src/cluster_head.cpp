#include "wban/cluster_head.hpp"

#include <algorithm>

namespace wban {

std::vector<std::string> TimerConfig::violations() const {
  std::vector<std::string> out;
  const std::pair<const char*, Duration> all[] = {
      {"time0", time0}, {"time01", time01}, {"time1", time1},
      {"time2", time2}, {"time3", time3}};
  for (const auto& [name, value] : all) {
    if (value.count() <= 0) out.push_back(std::string("timers.") + name + " must be positive");
  }
  if (time01 >= time0) out.push_back("timers.time01 must be shorter than timers.time0");
  return out;
}

std::string_view to_string(PatientMode mode) {
  switch (mode) {
    case PatientMode::kNormal: return "normal";
    case PatientMode::kSemiCritical: return "semi_critical";
    case PatientMode::kCritical: return "critical";
  }
  return "unknown";
}

PatientMode classify(std::size_t out_of_threshold, std::size_t n_sensors) {
  if (out_of_threshold > n_sensors) {
    throw std::domain_error("out-of-threshold count " + std::to_string(out_of_threshold) +
                            " exceeds sensor count " + std::to_string(n_sensors));
  }
  if (out_of_threshold == 0) return PatientMode::kNormal;
  if (out_of_threshold < 3) return PatientMode::kSemiCritical;
  // Exactly three is not covered by the "<3" / ">3" rules; resolve to the
  // more severe mode.
  return PatientMode::kCritical;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kMonitorIdle: return "monitor_idle";
    case Stage::kStage1Wait: return "stage1_wait";
    case Stage::kStage2Wait: return "stage2_wait";
    case Stage::kStage3Wait: return "stage3_wait";
    case Stage::kPostAckStandby: return "post_ack_standby";
  }
  return "unknown";
}

std::string_view action_name(const EscalationAction& action) {
  static constexpr std::string_view names[] = {
      "send_personal", "broadcast_nearby", "send_satellite",
      "arm_timer",     "empty_inbox",      "return_from_interrupt"};
  return names[action.index()];
}

namespace {

std::string_view event_name(const EscalationEvent& e) {
  static constexpr std::string_view names[] = {"EmergencyRaised", "TimerExpired",
                                               "AckReceived", "EmergencyCleared"};
  return names[e.index()];
}

[[noreturn]] void illegal(const EscalationState& s, const EscalationEvent& e) {
  throw ProtocolError("event " + std::string(event_name(e)) + " is illegal in stage " +
                      std::string(to_string(s.stage)));
}

void arm(EscalationStep& step, Stage next, Duration d, VirtualTime now) {
  step.state.stage = next;
  step.state.deadline = now + d;
  step.actions.emplace_back(ArmTimer{d});
}

}  // namespace

EscalationStep escalation_step(EscalationState state, const TimerConfig& cfg,
                               const EscalationEvent& event, VirtualTime now,
                               const EmergencyPayload& payload) {
  EscalationStep step{std::move(state), {}};
  auto& s = step.state;

  if (std::holds_alternative<EmergencyCleared>(event)) {
    s.stage = Stage::kMonitorIdle;
    s.deadline.reset();
    s.emergency_active = false;
    s.inbox.clear();
    return step;
  }

  if (std::holds_alternative<EmergencyRaised>(event)) {
    if (s.stage != Stage::kMonitorIdle) illegal(s, event);
    s.emergency_active = true;
    step.actions.emplace_back(
        SendToPersonalPhone{DailyReport{payload.fingerprint, payload.status, payload.events}});
    arm(step, Stage::kStage1Wait, cfg.time1, now);
    return step;
  }

  if (const auto* ack = std::get_if<AckReceived>(&event)) {
    switch (s.stage) {
      case Stage::kStage1Wait:
      case Stage::kStage2Wait:
      case Stage::kStage3Wait:
        s.inbox.push_back(ack->ack);
        s.inbox.clear();
        step.actions.emplace_back(EmptyInbox{});
        arm(step, Stage::kPostAckStandby, cfg.time3, now);
        return step;
      case Stage::kPostAckStandby:
        return step;
      case Stage::kMonitorIdle:
        illegal(s, event);
    }
  }

  // TimerExpired
  if (s.stage == Stage::kMonitorIdle) illegal(s, event);
  if (now < *s.deadline) {
    throw ProtocolError("timer expiry at " + std::to_string(now.ticks) +
                        " ms precedes deadline " + std::to_string(s.deadline->ticks) + " ms");
  }
  switch (s.stage) {
    case Stage::kStage1Wait:
      step.actions.emplace_back(
          BroadcastNearby{EmergencyBroadcast{payload.fingerprint, payload.events}});
      arm(step, Stage::kStage2Wait, cfg.time2, now);
      break;
    case Stage::kStage2Wait:
      step.actions.emplace_back(
          SendSatellite{SatelliteReport{payload.fingerprint, payload.events}});
      arm(step, Stage::kStage3Wait, cfg.time3, now);
      break;
    case Stage::kStage3Wait:
    case Stage::kPostAckStandby:
      s.stage = Stage::kMonitorIdle;
      s.deadline.reset();
      step.actions.emplace_back(ReturnFromInterrupt{});
      break;
    case Stage::kMonitorIdle:
      break;
  }
  return step;
}

std::vector<TimelineEntry> escalation_timeline(const TimerConfig& cfg, VirtualTime horizon,
                                               std::span<const VirtualTime> ack_times) {
  std::vector<VirtualTime> acks(ack_times.begin(), ack_times.end());
  std::sort(acks.begin(), acks.end());
  std::size_t next_ack = 0;

  const EmergencyPayload payload{Fingerprint{1}, SensorStatusField{}, {}};
  std::vector<TimelineEntry> out;
  EscalationState state;

  auto apply = [&](const EscalationEvent& event, VirtualTime now) {
    auto step = escalation_step(std::move(state), cfg, event, now, payload);
    state = std::move(step.state);
    for (const auto& action : step.actions)
      out.push_back({now, std::string(action_name(action)), state.stage});
  };

  apply(EmergencyRaised{}, VirtualTime{0});
  while (true) {
    if (!state.waiting()) {
      // Returned from the interrupt with the emergency still active.
      apply(EmergencyRaised{}, out.back().time);
      continue;
    }
    const VirtualTime deadline = *state.deadline;
    while (next_ack < acks.size() && acks[next_ack] < deadline) {
      const VirtualTime at = acks[next_ack++];
      if (at > horizon) return out;
      if (state.stage == Stage::kPostAckStandby) continue;
      apply(AckReceived{Ack{payload.fingerprint}}, at);
      break;
    }
    if (*state.deadline != deadline) continue;  // an ACK re-armed the timer
    if (deadline > horizon) return out;
    apply(TimerExpired{}, deadline);
  }
}

NormalTick acknowledge_reports(NormalLoopState state, std::span<const Ack> inbox) {
  NormalTick tick{std::move(state), {}};
  auto& queue = tick.state.queue;
  if (!queue.empty()) {
    const bool matched = std::any_of(inbox.begin(), inbox.end(), [&](const Ack& a) {
      return a.fingerprint == queue.front().report.fingerprint;
    });
    if (matched) {
      tick.actions.emplace_back(
          ReportAcknowledged{queue.front().attempts, queue.front().enqueued});
      queue.pop_front();
    }
  }
  return tick;
}

NormalTick normal_tick(NormalLoopState state, const TimerConfig& cfg, VirtualTime now,
                       std::span<const Ack> inbox,
                       const std::function<DailyReport()>& build_report) {
  NormalTick tick = acknowledge_reports(std::move(state), inbox);
  auto& queue = tick.state.queue;

  const auto ms = static_cast<std::uint64_t>(now.ticks);
  if (ms % static_cast<std::uint64_t>(cfg.time01.count()) == 0 && !queue.empty() &&
      queue.front().enqueued < now) {
    auto& head = queue.front();
    ++head.attempts;
    tick.actions.emplace_back(SendReport{head.report, head.attempts});
  }

  if (ms != 0 && ms % static_cast<std::uint64_t>(cfg.time0.count()) == 0) {
    auto report = build_report();
    queue.push_back({report, now, 1});
    tick.actions.emplace_back(SendReport{std::move(report), 1});
  }
  return tick;
}

NormalTick submit_report(NormalLoopState state, DailyReport report, VirtualTime now) {
  NormalTick tick{std::move(state), {}};
  tick.state.queue.push_back({report, now, 1});
  tick.actions.emplace_back(SendReport{std::move(report), 1});
  return tick;
}

std::vector<ModeAction> on_mode_change(PatientMode old_mode, PatientMode new_mode) {
  if (old_mode == new_mode) throw std::invalid_argument("mode did not change");
  std::vector<ModeAction> actions;
  if (old_mode == PatientMode::kCritical) actions.emplace_back(EmergencyCleared{});
  if (new_mode == PatientMode::kSemiCritical) actions.emplace_back(RequestAllSensorData{});
  if (new_mode == PatientMode::kCritical) actions.emplace_back(EmergencyRaised{});
  return actions;
}

}  // namespace wban
