#include "wban/engine.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "wban/cluster_head.hpp"
#include "wban/event_queue.hpp"
#include "wban/fault_detect.hpp"
#include "wban/net_sim.hpp"

namespace wban {

using nlohmann::json;

double sample_vital(const VitalSignModel& model, VirtualTime t, Rng& rng) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(t.ticks) /
                       static_cast<double>(model.period.count());
  double value = model.baseline + model.amplitude * std::sin(phase);
  if (model.noise_sigma > 0.0) value += rng.gaussian(0.0, model.noise_sigma);
  for (const auto& w : model.anomalies) {
    if (w.start <= t && t < w.end) value += w.offset;
  }
  return value;
}

void RunResult::write_trace(std::ostream& out) const { wban::write_trace(out, header, trace); }

namespace {

// Simulation events.
struct Sample {
  std::size_t sensor;
};
struct Evaluate {};
struct ClockTick {};
struct EscalationTimer {
  std::uint64_t generation;
};
struct Reraise {};
struct Arrival {
  DeliveryEvent delivery;
  LinkKind link;
};
struct PhoneUpdate {
  std::size_t phone;
  PhoneChange change;
};
struct Marker {
  std::string kind;
  json annotations;
};

using SimEvent =
    std::variant<Sample, Evaluate, ClockTick, EscalationTimer, Reraise, Arrival, PhoneUpdate, Marker>;

struct SensorState {
  PredictorModel model;
  SensorHealth health;
  std::uint32_t samples = 0;
  bool has_reading = false;
  double reading = 0.0;
  VirtualTime reading_time;
  std::optional<double> last_valid;
  Verdict verdict = Verdict::kValid;
  bool fault_reported = false;
};

std::string phone_endpoint(std::uint32_t id) { return "phone:" + std::to_string(id); }

class Simulation {
 public:
  explicit Simulation(const Scenario& sc)
      : sc_(sc), specs_(sc.quant_table()), rng_(sc.seed), database_(specs_) {}

  RunResult run() {
    init();
    const VirtualTime end = VirtualTime::from(sc_.duration);
    bool ended = false;
    while (auto item = queue_.next()) {
      now_ = item->time;
      if (!ended && now_ > end) {
        emit_at(end, "engine", "end");
        ended = true;
      }
      if (ended && !std::holds_alternative<Arrival>(item->event)) continue;
      std::visit([this](auto& ev) { handle(ev); }, item->event);
    }
    if (!ended) emit_at(end, "engine", "end");

    RunResult result;
    result.header = {{"kind", "header"},
                     {"format", "wban-trace/1"},
                     {"seed", sc_.seed},
                     {"fingerprint", sc_.fingerprint.id},
                     {"duration_ms", sc_.duration.count()},
                     {"sensors", sc_.sensors.size()}};
    result.metrics = compute_metrics(trace_);
    result.trace = std::move(trace_);
    return result;
  }

 private:
  // --- setup ---------------------------------------------------------------

  void init() {
    for (std::size_t i = 0; i < sc_.faults.size(); ++i) {
      const auto& f = sc_.faults[i];
      const auto t_fault = sc_.sensors[f.sensor].t_fault;
      const bool expect = f.mode != FaultMode::kDead && (!f.end || (*f.end - f.start) >= t_fault);
      queue_.schedule(f.start, Marker{"fault_injected",
                                      {{"sensor", f.sensor},
                                       {"mode", std::string(to_string(f.mode))},
                                       {"expect_detect", expect}}});
      if (f.end) queue_.schedule(*f.end, Marker{"fault_cleared", {{"sensor", f.sensor}}});
    }
    for (std::size_t i = 0; i < sc_.sensors.size(); ++i) {
      for (const auto& w : sc_.sensors[i].vital.anomalies) {
        queue_.schedule(w.start, Marker{"anomaly_start", {{"sensor", i}, {"offset", w.offset}}});
        queue_.schedule(w.end, Marker{"anomaly_end", {{"sensor", i}}});
      }
    }
    for (std::size_t p = 0; p < sc_.phones.size(); ++p) {
      phones_.push_back(sc_.phones[p].node);
      phone_index_[phone_endpoint(phones_.back().id)] = p;
      if (phones_.back().role == PhoneRole::kPersonal) personal_ = p;
      for (const auto& c : sc_.phones[p].changes) queue_.schedule(c.at, PhoneUpdate{p, c});
    }
    for (std::size_t i = 0; i < sc_.sensors.size(); ++i) {
      const auto& cfg = sc_.sensors[i];
      SensorState s;
      s.model = PredictorModel::random(std::max<std::size_t>(1, cfg.neighbors.size()),
                                       cfg.predictor.hidden, rng_, cfg.predictor.init_scale,
                                       cfg.predictor.learning_rate);
      s.health.lo = cfg.lo;
      s.health.hi = cfg.hi;
      s.health.eps_max = cfg.eps_max;
      s.health.timer.duration = cfg.t_fault;
      sensors_.push_back(std::move(s));
      queue_.schedule(VirtualTime{0}, Sample{i});
    }
    schedule_clock(VirtualTime{0});
  }

  void schedule_clock(VirtualTime after) {
    auto next_multiple = [&](Duration period) {
      const auto p = static_cast<std::uint64_t>(period.count());
      return VirtualTime{(after.ticks / p + 1) * p};
    };
    queue_.schedule(std::min(next_multiple(sc_.timers.time0), next_multiple(sc_.timers.time01)),
                    ClockTick{});
  }

  // --- trace ---------------------------------------------------------------

  TraceEvent& emit_at(VirtualTime t, std::string actor, std::string kind, json ann = json::object(),
                      Bytes frame = {}) {
    trace_.push_back({t, trace_.size(), std::move(actor), std::move(kind), std::move(frame),
                      std::move(ann)});
    return trace_.back();
  }

  TraceEvent& emit(std::string actor, std::string kind, json ann = json::object(), Bytes frame = {}) {
    return emit_at(now_, std::move(actor), std::move(kind), std::move(ann), std::move(frame));
  }

  // --- sensors -------------------------------------------------------------

  double normalized(std::size_t sensor, double value) const {
    const auto& c = sc_.sensors[sensor];
    return 2.0 * (value - c.lo) / (c.hi - c.lo) - 1.0;
  }

  double denormalized(std::size_t sensor, double value) const {
    const auto& c = sc_.sensors[sensor];
    return c.lo + (value + 1.0) * 0.5 * (c.hi - c.lo);
  }

  // Neighbors contribute their last validated reading, so one failing sensor
  // does not drag its neighbors' predictions with it.
  std::vector<double> predictor_inputs(std::size_t sensor) const {
    const auto& cfg = sc_.sensors[sensor];
    if (cfg.neighbors.empty()) return {0.0};
    std::vector<double> x;
    x.reserve(cfg.neighbors.size());
    for (auto n : cfg.neighbors) {
      const auto& last = sensors_[n].last_valid;
      x.push_back(last ? normalized(n, *last) : 0.0);
    }
    return x;
  }

  const FaultInjection* active_fault(std::size_t sensor) const {
    const FaultInjection* hit = nullptr;
    for (const auto& f : sc_.faults) {
      if (f.sensor == sensor && f.start <= now_ && (!f.end || now_ < *f.end)) hit = &f;
    }
    return hit;
  }

  bool out_of_threshold(std::size_t i) const {
    const auto& s = sensors_[i];
    if (!s.has_reading) return false;
    return s.reading < s.health.lo || s.reading > s.health.hi || s.verdict != Verdict::kValid;
  }

  void handle(const Sample& ev) {
    const std::size_t i = ev.sensor;
    const auto& cfg = sc_.sensors[i];
    queue_.schedule(now_ + cfg.sample_period, Sample{i});

    const auto* fault = active_fault(i);
    if (fault && fault->mode == FaultMode::kDead) return;

    double value = sample_vital(cfg.vital, now_, rng_);
    if (fault && fault->mode == FaultMode::kStuckAt) value = fault->value;
    if (fault && fault->mode == FaultMode::kOffset) value += fault->value;

    auto& s = sensors_[i];
    const auto inputs = predictor_inputs(i);
    const double prediction = denormalized(i, predict(s.model, inputs));
    const bool warming_up = s.samples < cfg.predictor.warmup_samples;

    auto checked = check_reading(std::move(s.health), value, warming_up ? value : prediction, now_);
    s.health = std::move(checked.health);
    ++s.samples;
    if (checked.train) s.model = train_step(std::move(s.model), inputs, normalized(i, value)).model;
    if (checked.verdict == Verdict::kValid) s.last_valid = value;

    const Verdict previous = s.verdict;
    s.verdict = checked.verdict;
    s.has_reading = true;
    s.reading = value;
    s.reading_time = now_;

    if (s.verdict != previous) {
      emit("sensor:" + std::to_string(i), "verdict",
           {{"sensor", i},
            {"verdict", std::string(to_string(s.verdict))},
            {"reading", value},
            {"prediction", prediction}});
    }
    if (out_of_threshold(i)) {
      undesirable_.push_back(event_record(i));
      if (undesirable_.size() > sc_.max_report_events) undesirable_.pop_front();
    }
    if (!evaluate_pending_) {
      evaluate_pending_ = true;
      queue_.schedule(now_, Evaluate{});
    }
  }

  EventRecord event_record(std::size_t i) const {
    const auto& s = sensors_[i];
    return {static_cast<std::uint8_t>(i), static_cast<std::uint16_t>(quantize(s.reading, sc_.sensors[i].quant)),
            static_cast<std::uint32_t>(s.reading_time.ticks)};
  }

  SensorStatusField status_field() const {
    std::vector<bool> verdicts;
    verdicts.reserve(sensors_.size());
    for (const auto& s : sensors_) verdicts.push_back(s.verdict == Verdict::kValid);
    return build_status_field(verdicts);
  }

  // Status plus the undesirable readings logged since the previous report.
  DailyReport build_report() {
    DailyReport r{sc_.fingerprint, status_field(), {undesirable_.begin(), undesirable_.end()}};
    undesirable_.clear();
    return r;
  }

  EmergencyPayload emergency_payload() const {
    EmergencyPayload p{sc_.fingerprint, status_field(), {}};
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      if (out_of_threshold(i)) p.events.push_back(event_record(i));
    }
    return p;
  }

  // --- cluster head --------------------------------------------------------

  void handle(const Evaluate&) {
    evaluate_pending_ = false;
    std::size_t count = 0;
    std::vector<std::size_t> newly_faulty;
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      count += out_of_threshold(i) ? 1 : 0;
      auto& s = sensors_[i];
      if (s.verdict == Verdict::kFaulty && !s.fault_reported) {
        s.fault_reported = true;
        newly_faulty.push_back(i);
      }
    }

    const auto mode = classify(count, sensors_.size());
    if (mode != mode_) {
      emit("ch", "mode",
           {{"from", std::string(to_string(mode_))},
            {"to", std::string(to_string(mode))},
            {"out_of_threshold", count}});
      const auto actions = on_mode_change(mode_, mode);
      mode_ = mode;
      for (const auto& a : actions) std::visit([this](const auto& x) { on_mode_action(x); }, a);
    }

    for (auto i : newly_faulty) {
      emit("ch", "sensor_fault", {{"sensor", i}});
      auto tick = submit_report(std::move(normal_), build_report(), now_);
      normal_ = std::move(tick.state);
      for (const auto& a : tick.actions) on_normal_action(a, "fault_notice");
    }
  }

  void on_mode_action(const RequestAllSensorData&) {
    emit("ch", "request_all_sensor_data");
    DailyReport collected{sc_.fingerprint, status_field(), {}};
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      if (sensors_[i].has_reading) collected.events.push_back(event_record(i));
    }
    send_to_personal(collected, "semi_critical");
  }

  void on_mode_action(const EmergencyRaised& ev) {
    if (!escalation_.waiting()) escalate(ev);
  }

  void on_mode_action(const EmergencyCleared& ev) {
    ++timer_generation_;
    escalate(ev);
  }

  void escalate(const EscalationEvent& event) {
    if (std::holds_alternative<EmergencyRaised>(event)) emit("ch", "emergency_raised");
    if (std::holds_alternative<EmergencyCleared>(event)) emit("ch", "emergency_cleared");
    auto step = escalation_step(std::move(escalation_), sc_.timers, event, now_, emergency_payload());
    escalation_ = std::move(step.state);
    for (const auto& action : step.actions) {
      std::visit([this](const auto& a) { on_escalation_action(a); }, action);
    }
  }

  void on_escalation_action(const SendToPersonalPhone& a) { send_to_personal(a.frame, "stage1"); }

  void on_escalation_action(const BroadcastNearby& a) {
    const Bytes bytes = encode_frame(a.frame, specs_);
    std::vector<std::string> receivers;
    for (const auto& p : discover_nearby(phones_, sc_.patient, sc_.nearby_radius))
      receivers.push_back(phone_endpoint(p.id));
    auto result = broadcast(sc_.links.nearby, bytes, "ch", receivers, now_, rng_);
    emit("ch", "send",
         {{"to", "broadcast"},
          {"receivers", receivers},
          {"link", "nearby"},
          {"energy", result.energy_spent},
          {"purpose", "stage2"},
          {"delivered", result.deliveries.size()}},
         bytes);
    for (auto& d : result.deliveries) {
      const auto at = d.arrive_time;
      queue_.schedule(at, Arrival{std::move(d), LinkKind::kNearbyBroadcast});
    }
  }

  void on_escalation_action(const SendSatellite& a) {
    send("ch", "database", LinkKind::kSatellite, a.frame, "stage3");
  }

  void on_escalation_action(const ArmTimer& a) {
    ++timer_generation_;
    queue_.schedule(now_ + a.duration, EscalationTimer{timer_generation_});
    emit("ch", "arm_timer",
         {{"duration_ms", a.duration.count()}, {"stage", std::string(to_string(escalation_.stage))}});
  }

  void on_escalation_action(const EmptyInbox&) { emit("ch", "empty_inbox"); }

  void on_escalation_action(const ReturnFromInterrupt&) {
    emit("ch", "return_from_interrupt");
    if (escalation_.emergency_active) queue_.schedule(now_, Reraise{});
  }

  void handle(const EscalationTimer& ev) {
    if (ev.generation != timer_generation_ || !escalation_.waiting()) return;
    escalate(TimerExpired{});
  }

  void handle(const Reraise&) {
    if (escalation_.emergency_active && !escalation_.waiting()) escalate(EmergencyRaised{});
  }

  void handle(const ClockTick&) {
    schedule_clock(now_);
    if (escalation_.emergency_active) return;
    auto tick = normal_tick(std::move(normal_), sc_.timers, now_, {}, [this] { return build_report(); });
    normal_ = std::move(tick.state);
    for (const auto& a : tick.actions) on_normal_action(a, "");
  }

  void on_normal_action(const NormalAction& action, std::string_view purpose) {
    if (const auto* send = std::get_if<SendReport>(&action)) {
      std::string p(purpose);
      if (p.empty()) p = send->attempt == 1 ? "daily" : "retry";
      send_to_personal(send->report, p, json{{"attempt", send->attempt}});
    } else if (const auto* acked = std::get_if<ReportAcknowledged>(&action)) {
      emit("ch", "report_acked",
           {{"attempts", acked->attempts}, {"enqueued", acked->enqueued.ticks}});
    }
  }

  // --- transport -----------------------------------------------------------

  bool endpoint_reachable(const std::string& endpoint) const {
    auto it = phone_index_.find(endpoint);
    return it == phone_index_.end() || phones_[it->second].reachable;
  }

  void send_to_personal(const Frame& frame, const std::string& purpose, json extra = json::object()) {
    const std::string to =
        personal_ ? phone_endpoint(phones_[*personal_].id) : std::string("phone:none");
    send("ch", to, LinkKind::kPersonal, frame, purpose, std::move(extra));
  }

  void send(const std::string& from, const std::string& to, LinkKind kind, const Frame& frame,
            const std::string& purpose, json extra = json::object()) {
    const Bytes bytes = encode_frame(frame, specs_);
    auto result = transmit(sc_.links.get(kind), bytes, from, to, now_, rng_);
    const bool reachable = endpoint_reachable(from) && endpoint_reachable(to) &&
                           to != "phone:none";
    const bool delivered = result.delivery && reachable;
    json ann = {{"to", to},
                {"link", std::string(to_string(kind))},
                {"energy", result.energy_spent},
                {"purpose", purpose},
                {"delivered", delivered ? 1 : 0}};
    ann.update(extra);
    emit(from, "send", std::move(ann), bytes);
    if (delivered) {
      const auto at = result.delivery->arrive_time;
      queue_.schedule(at, Arrival{std::move(*result.delivery), kind});
    }
  }

  void handle(const Arrival& ev) {
    const auto& d = ev.delivery;
    if (!endpoint_reachable(d.destination)) {
      emit(d.destination, "lost", {{"from", d.source}, {"reason", "unreachable"}});
      return;
    }
    emit(d.destination, "recv",
         {{"from", d.source},
          {"link", std::string(to_string(ev.link))},
          {"send_time", d.send_time.ticks},
          {"latency", (d.arrive_time - d.send_time).count()}},
         d.payload);

    if (d.destination == "database") return database_receive(d);

    Frame frame;
    try {
      frame = decode_frame(d.payload, specs_);
    } catch (const CodecError& e) {
      emit(d.destination, "decode_error",
           {{"error", std::string(to_string(e.kind()))}, {"what", e.what()}});
      return;
    }

    if (d.destination == "ch") return ch_receive(frame);
    if (d.destination == "emergency_center") {
      emit("emergency_center", "record", {{"frame_kind", std::string(frame_kind_name(frame))}});
      if (std::holds_alternative<SatelliteReport>(frame))
        emit("emergency_center", "dispatch", {{"fingerprint", frame_fingerprint(frame).id}});
      return;
    }
    if (auto it = phone_index_.find(d.destination); it != phone_index_.end()) {
      const auto& phone = phones_[it->second];
      const auto link = phone.role == PhoneRole::kPersonal ? LinkKind::kPersonal : LinkKind::kNearbyBroadcast;
      for (const auto& action : phone_on_receive(phone, frame, now_)) {
        if (const auto* f = std::get_if<ForwardToEmergencyCenter>(&action)) {
          send(d.destination, "emergency_center", LinkKind::kInternal, f->report, "forward");
        } else if (const auto* f = std::get_if<ForwardToDatabase>(&action)) {
          send(d.destination, "database", LinkKind::kInternal, f->frame, "forward");
        } else if (const auto* a = std::get_if<AckToClusterHead>(&action)) {
          send(d.destination, "ch", link, a->ack, "ack");
        }
      }
    }
  }

  void ch_receive(const Frame& frame) {
    const auto* ack = std::get_if<Ack>(&frame);
    if (!ack) return;
    if (escalation_.waiting()) {
      escalate(AckReceived{*ack});
      return;
    }
    auto tick = acknowledge_reports(std::move(normal_), std::span<const Ack>(ack, 1));
    normal_ = std::move(tick.state);
    for (const auto& a : tick.actions) on_normal_action(a, "");
  }

  void database_receive(const DeliveryEvent& d) {
    const auto dropped_before = database_.dropped();
    const auto actions = database_.on_bytes(d.payload, now_);
    if (database_.dropped() != dropped_before) {
      emit("database", "decode_error", {{"from", d.source}});
      return;
    }
    for (const auto& action : actions) {
      if (const auto* r = std::get_if<Record>(&action)) {
        emit("database", "record", {{"frame_kind", r->frame_kind}, {"from", d.source}});
      } else if (const auto* x = std::get_if<DispatchService>(&action)) {
        emit("database", "dispatch", {{"fingerprint", x->fingerprint.id}});
      } else if (const auto* adv = std::get_if<SensorDamagedAdvisory>(&action)) {
        emit("database", "advisory", {{"sensor", adv->sensor}});
      } else if (const auto* a = std::get_if<AckToSender>(&action)) {
        if (phone_index_.contains(d.source))
          send("database", d.source, LinkKind::kInternal, a->ack, "ack");
      }
    }
  }

  void handle(const PhoneUpdate& ev) {
    auto& phone = phones_[ev.phone];
    if (ev.change.reachable) phone.reachable = *ev.change.reachable;
    if (ev.change.position) phone.position = *ev.change.position;
    emit(phone_endpoint(phone.id), "phone_update",
         {{"reachable", phone.reachable}, {"position", {phone.position.x, phone.position.y}}});
  }

  void handle(const Marker& ev) { emit("scenario", ev.kind, ev.annotations); }

  const Scenario& sc_;
  QuantTable specs_;
  Rng rng_;
  EventQueue<SimEvent> queue_;
  VirtualTime now_{0};
  std::vector<TraceEvent> trace_;

  std::vector<SensorState> sensors_;
  std::vector<PhoneNode> phones_;
  std::unordered_map<std::string, std::size_t> phone_index_;
  std::optional<std::size_t> personal_;
  DatabaseSink database_;

  PatientMode mode_ = PatientMode::kNormal;
  EscalationState escalation_;
  NormalLoopState normal_;
  std::uint64_t timer_generation_ = 0;
  bool evaluate_pending_ = false;
  std::deque<EventRecord> undesirable_;
};

}  // namespace

RunResult run(const Scenario& scenario) {
  if (auto violations = validate(scenario); !violations.empty())
    throw ScenarioError(std::move(violations));
  return Simulation(scenario).run();
}

}  // namespace wban
