#include "wban/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace wban {

using nlohmann::json;

std::string_view to_string(VitalKind kind) {
  switch (kind) {
    case VitalKind::kPulseRate: return "pulse_rate";
    case VitalKind::kRespirationRate: return "respiration_rate";
    case VitalKind::kBodyTemperature: return "body_temperature";
    case VitalKind::kBloodPressure: return "blood_pressure";
    case VitalKind::kBloodGas: return "blood_gas";
    case VitalKind::kCardiacOutput: return "cardiac_output";
    case VitalKind::kSpirometry: return "spirometry";
  }
  return "unknown";
}

std::string_view to_string(FaultMode mode) {
  switch (mode) {
    case FaultMode::kStuckAt: return "stuck_at";
    case FaultMode::kOffset: return "offset";
    case FaultMode::kDead: return "dead";
  }
  return "unknown";
}

const LinkModel& LinkTable::get(LinkKind kind) const {
  switch (kind) {
    case LinkKind::kPersonal: return personal;
    case LinkKind::kNearbyBroadcast: return nearby;
    case LinkKind::kSatellite: return satellite;
    case LinkKind::kInternal: return internal;
  }
  return internal;
}

QuantTable Scenario::quant_table() const {
  QuantTable table;
  table.reserve(sensors.size());
  for (const auto& s : sensors) table.push_back(s.quant);
  return table;
}

ScenarioError::ScenarioError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid scenario:";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::optional<Duration> parse_duration(std::string_view text) {
  std::uint64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first) return std::nullopt;
  const std::string_view unit(ptr, static_cast<std::size_t>(last - ptr));
  std::uint64_t scale = 0;
  if (unit.empty() || unit == "ms") scale = 1;
  else if (unit == "s") scale = 1000;
  else if (unit == "min") scale = 60'000;
  else if (unit == "h") scale = 3'600'000;
  else if (unit == "d") scale = 86'400'000;
  else return std::nullopt;
  if (value > static_cast<std::uint64_t>(INT64_MAX) / scale) return std::nullopt;
  return Duration{static_cast<Duration::rep>(value * scale)};
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate(const Scenario& sc) {
  std::vector<std::string> out;
  auto add = [&](std::string msg) { out.push_back(std::move(msg)); };

  if (sc.sensors.empty()) add("sensors: at least one sensor is required");
  if (sc.sensors.size() > 255) add("sensors: at most 255 sensors fit the status field");
  if (sc.fingerprint.id == 0) add("fingerprint: zero is reserved");
  if (sc.duration.count() <= 0) add("duration must be positive");
  if (sc.duration.count() > static_cast<Duration::rep>(UINT32_MAX))
    add("duration exceeds the 32-bit millisecond event offset range");
  if (!(sc.nearby_radius > 0.0)) add("nearby_radius_m must be positive");
  if (sc.max_report_events > 0xFFFF) add("max_report_events exceeds the 16-bit event count");
  if (!std::isfinite(sc.patient.x) || !std::isfinite(sc.patient.y))
    add("patient_position must be finite");

  for (auto& v : sc.timers.violations()) add(std::move(v));
  for (auto& v : sc.links.personal.violations("personal")) add(std::move(v));
  for (auto& v : sc.links.nearby.violations("nearby")) add(std::move(v));
  for (auto& v : sc.links.satellite.violations("satellite")) add(std::move(v));
  for (auto& v : sc.links.internal.violations("internal")) add(std::move(v));

  for (std::size_t i = 0; i < sc.sensors.size(); ++i) {
    const auto& s = sc.sensors[i];
    const std::string p = "sensors[" + std::to_string(i) + "] (" + s.name + "): ";
    if (!(s.lo < s.hi)) add(p + "range requires lo < hi");
    if (!(s.eps_max > 0.0 && s.eps_max <= 1.0)) add(p + "eps_max must be in (0, 1]");
    if (s.t_fault.count() <= 0) add(p + "t_fault must be positive");
    if (s.sample_period.count() <= 0) add(p + "sample_period must be positive");
    if (s.vital.period.count() <= 0) add(p + "vital.period must be positive");
    if (!(s.vital.noise_sigma >= 0.0)) add(p + "vital.noise_sigma must be nonnegative");
    for (const auto& w : s.vital.anomalies) {
      if (!(w.start < w.end)) add(p + "anomaly window requires start < end");
    }
    try {
      s.quant.validate();
    } catch (const std::invalid_argument& e) {
      add(p + "quant: " + e.what());
    }
    if (s.predictor.hidden < 1) add(p + "predictor.hidden must be at least 1");
    if (!(s.predictor.learning_rate > 0.0)) add(p + "predictor.learning_rate must be positive");
    if (!(s.predictor.init_scale >= 0.0)) add(p + "predictor.init_scale must be nonnegative");
    std::set<std::size_t> seen;
    for (auto n : s.neighbors) {
      if (n == i) add(p + "neighbor list refers to the sensor itself");
      else if (n >= sc.sensors.size()) add(p + "neighbor index " + std::to_string(n) + " does not exist");
      if (!seen.insert(n).second) add(p + "neighbor index " + std::to_string(n) + " repeated");
    }
  }

  std::size_t personal = 0;
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < sc.phones.size(); ++i) {
    const auto& ph = sc.phones[i];
    const std::string p = "phones[" + std::to_string(i) + "]: ";
    if (ph.node.role == PhoneRole::kPersonal) ++personal;
    if (!ids.insert(ph.node.id).second) add(p + "duplicate phone id " + std::to_string(ph.node.id));
    if (!std::isfinite(ph.node.position.x) || !std::isfinite(ph.node.position.y))
      add(p + "position must be finite");
    VirtualTime last{0};
    for (const auto& c : ph.changes) {
      if (c.at < last) add(p + "script entries must be in time order");
      last = c.at;
      if (c.position && (!std::isfinite(c.position->x) || !std::isfinite(c.position->y)))
        add(p + "script position must be finite");
    }
  }
  if (personal > 1) add("phones: at most one personal phone");

  for (std::size_t i = 0; i < sc.faults.size(); ++i) {
    const auto& f = sc.faults[i];
    const std::string p = "faults[" + std::to_string(i) + "]: ";
    if (f.sensor >= sc.sensors.size()) add(p + "sensor index " + std::to_string(f.sensor) + " does not exist");
    if (f.end && !(f.start < *f.end)) add(p + "requires start < end");
    if (!std::isfinite(f.value)) add(p + "value must be finite");
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON reading

namespace {

/// Collects every problem in the document instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) {
      errors.push_back(path + ": expected an object");
      return;
    }
    for (const auto& [key, value] : obj.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) errors.push_back(path + "." + key + ": unknown key");
    }
  }

  const json* find(const json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  template <typename T>
  void number(const json& obj, const char* key, const std::string& path, T& out) {
    const json* v = find(obj, key);
    if (!v) return;
    if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) return type_error(path, key, "a number");
    } else {
      if (!v->is_number_unsigned()) return type_error(path, key, "a nonnegative integer");
    }
    out = v->get<T>();
  }

  void boolean(const json& obj, const char* key, const std::string& path, bool& out) {
    const json* v = find(obj, key);
    if (!v) return;
    if (!v->is_boolean()) return type_error(path, key, "a boolean");
    out = v->get<bool>();
  }

  void string(const json& obj, const char* key, const std::string& path, std::string& out) {
    const json* v = find(obj, key);
    if (!v) return;
    if (!v->is_string()) return type_error(path, key, "a string");
    out = v->get<std::string>();
  }

  void duration(const json& obj, const char* key, const std::string& path, Duration& out) {
    const json* v = find(obj, key);
    if (!v) return;
    if (v->is_number_unsigned()) {
      out = Duration{static_cast<Duration::rep>(v->get<std::uint64_t>())};
    } else if (v->is_string()) {
      auto d = parse_duration(v->get<std::string>());
      if (!d) return type_error(path, key, "a duration like \"250ms\", \"2s\" or \"24h\"");
      out = *d;
    } else {
      type_error(path, key, "a duration");
    }
  }

  void time(const json& obj, const char* key, const std::string& path, VirtualTime& out) {
    Duration d = out.since_start();
    duration(obj, key, path, d);
    out = VirtualTime::from(d);
  }

  void position(const json& obj, const char* key, const std::string& path, Position& out) {
    const json* v = find(obj, key);
    if (!v) return;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
      return type_error(path, key, "an [x, y] pair of numbers");
    out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
  }

  void require(const json& obj, const char* key, const std::string& path) {
    if (obj.is_object() && !obj.contains(key)) errors.push_back(path + "." + key + ": required");
  }

  void type_error(const std::string& path, const char* key, const char* expected) {
    errors.push_back(path + "." + key + ": expected " + expected);
  }
};

template <typename Enum, std::size_t N>
void enum_field(Reader& r, const json& obj, const char* key, const std::string& path,
                const std::pair<std::string_view, Enum> (&options)[N], Enum& out) {
  std::string text;
  const bool present = r.find(obj, key) != nullptr;
  r.string(obj, key, path, text);
  if (!present || text.empty()) return;
  for (const auto& [name, value] : options) {
    if (text == name) {
      out = value;
      return;
    }
  }
  r.errors.push_back(path + "." + key + ": unknown value \"" + text + "\"");
}

constexpr std::pair<std::string_view, VitalKind> kVitalKinds[] = {
    {"pulse_rate", VitalKind::kPulseRate},
    {"respiration_rate", VitalKind::kRespirationRate},
    {"body_temperature", VitalKind::kBodyTemperature},
    {"blood_pressure", VitalKind::kBloodPressure},
    {"blood_gas", VitalKind::kBloodGas},
    {"cardiac_output", VitalKind::kCardiacOutput},
    {"spirometry", VitalKind::kSpirometry},
};

constexpr std::pair<std::string_view, FaultMode> kFaultModes[] = {
    {"stuck_at", FaultMode::kStuckAt},
    {"offset", FaultMode::kOffset},
    {"dead", FaultMode::kDead},
};

constexpr std::pair<std::string_view, PhoneRole> kRoles[] = {
    {"personal", PhoneRole::kPersonal},
    {"bystander", PhoneRole::kBystander},
};

void read_link(Reader& r, const json& obj, const std::string& path, LinkModel& link) {
  r.keys(obj, path, {"delivery_prob", "base", "jitter", "energy_cost"});
  r.number(obj, "delivery_prob", path, link.delivery_prob);
  r.duration(obj, "base", path, link.base);
  r.duration(obj, "jitter", path, link.jitter);
  r.number(obj, "energy_cost", path, link.energy_cost);
}

SensorConfig read_sensor(Reader& r, const json& obj, const std::string& path) {
  SensorConfig s;
  r.keys(obj, path,
         {"name", "vital", "range", "quant", "eps_max", "t_fault", "predictor", "neighbors",
          "sample_period"});
  r.require(obj, "vital", path);
  r.require(obj, "range", path);
  r.string(obj, "name", path, s.name);

  if (const json* v = r.find(obj, "vital")) {
    const std::string vp = path + ".vital";
    r.keys(*v, vp, {"kind", "baseline", "amplitude", "period", "noise_sigma", "anomalies"});
    enum_field(r, *v, "kind", vp, kVitalKinds, s.vital.kind);
    r.number(*v, "baseline", vp, s.vital.baseline);
    r.number(*v, "amplitude", vp, s.vital.amplitude);
    r.duration(*v, "period", vp, s.vital.period);
    r.number(*v, "noise_sigma", vp, s.vital.noise_sigma);
    if (const json* a = r.find(*v, "anomalies")) {
      if (!a->is_array()) {
        r.type_error(vp, "anomalies", "an array");
      } else {
        for (std::size_t i = 0; i < a->size(); ++i) {
          const std::string ap = vp + ".anomalies[" + std::to_string(i) + "]";
          AnomalyWindow w;
          r.keys((*a)[i], ap, {"start", "end", "offset"});
          r.require((*a)[i], "start", ap);
          r.require((*a)[i], "end", ap);
          r.time((*a)[i], "start", ap, w.start);
          r.time((*a)[i], "end", ap, w.end);
          r.number((*a)[i], "offset", ap, w.offset);
          s.vital.anomalies.push_back(w);
        }
      }
    }
  }

  if (const json* range = r.find(obj, "range")) {
    if (!range->is_array() || range->size() != 2 || !(*range)[0].is_number() ||
        !(*range)[1].is_number()) {
      r.type_error(path, "range", "a [lo, hi] pair of numbers");
    } else {
      s.lo = (*range)[0].get<double>();
      s.hi = (*range)[1].get<double>();
    }
  }
  s.quant = QuantSpec{s.lo, s.hi, 8};
  if (const json* q = r.find(obj, "quant")) {
    const std::string qp = path + ".quant";
    r.keys(*q, qp, {"lo", "hi", "bits"});
    r.number(*q, "lo", qp, s.quant.lo);
    r.number(*q, "hi", qp, s.quant.hi);
    r.number(*q, "bits", qp, s.quant.bits);
  }
  r.number(obj, "eps_max", path, s.eps_max);
  r.duration(obj, "t_fault", path, s.t_fault);
  r.duration(obj, "sample_period", path, s.sample_period);

  if (const json* p = r.find(obj, "predictor")) {
    const std::string pp = path + ".predictor";
    r.keys(*p, pp, {"hidden", "learning_rate", "init_scale", "warmup_samples"});
    r.number(*p, "hidden", pp, s.predictor.hidden);
    r.number(*p, "learning_rate", pp, s.predictor.learning_rate);
    r.number(*p, "init_scale", pp, s.predictor.init_scale);
    r.number(*p, "warmup_samples", pp, s.predictor.warmup_samples);
  }
  if (const json* n = r.find(obj, "neighbors")) {
    if (!n->is_array()) {
      r.type_error(path, "neighbors", "an array of sensor indices");
    } else {
      for (const auto& idx : *n) {
        if (!idx.is_number_unsigned()) {
          r.type_error(path, "neighbors", "an array of sensor indices");
          break;
        }
        s.neighbors.push_back(idx.get<std::size_t>());
      }
    }
  }
  return s;
}

PhoneScript read_phone(Reader& r, const json& obj, const std::string& path) {
  PhoneScript ph;
  r.keys(obj, path, {"id", "role", "position", "reachable", "script"});
  r.require(obj, "id", path);
  r.number(obj, "id", path, ph.node.id);
  enum_field(r, obj, "role", path, kRoles, ph.node.role);
  r.position(obj, "position", path, ph.node.position);
  r.boolean(obj, "reachable", path, ph.node.reachable);
  if (const json* s = r.find(obj, "script")) {
    if (!s->is_array()) return r.type_error(path, "script", "an array"), ph;
    for (std::size_t i = 0; i < s->size(); ++i) {
      const std::string sp = path + ".script[" + std::to_string(i) + "]";
      const json& e = (*s)[i];
      PhoneChange c;
      r.keys(e, sp, {"at", "reachable", "position"});
      r.require(e, "at", sp);
      r.time(e, "at", sp, c.at);
      if (r.find(e, "reachable")) {
        bool b = true;
        r.boolean(e, "reachable", sp, b);
        c.reachable = b;
      }
      if (r.find(e, "position")) {
        Position p;
        r.position(e, "position", sp, p);
        c.position = p;
      }
      ph.changes.push_back(c);
    }
  }
  return ph;
}

FaultInjection read_fault(Reader& r, const json& obj, const std::string& path) {
  FaultInjection f;
  r.keys(obj, path, {"sensor", "start", "end", "mode", "value"});
  r.require(obj, "sensor", path);
  r.require(obj, "start", path);
  r.require(obj, "mode", path);
  r.number(obj, "sensor", path, f.sensor);
  r.time(obj, "start", path, f.start);
  if (r.find(obj, "end")) {
    VirtualTime end;
    r.time(obj, "end", path, end);
    f.end = end;
  }
  enum_field(r, obj, "mode", path, kFaultModes, f.mode);
  r.number(obj, "value", path, f.value);
  return f;
}

json duration_json(Duration d) { return static_cast<std::uint64_t>(d.count()); }

json link_json(const LinkModel& l) {
  return {{"delivery_prob", l.delivery_prob},
          {"base", duration_json(l.base)},
          {"jitter", duration_json(l.jitter)},
          {"energy_cost", l.energy_cost}};
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  Reader r;
  Scenario sc;
  const std::string root = "scenario";
  r.keys(doc, root,
         {"seed", "duration", "fingerprint", "patient_position", "nearby_radius_m",
          "max_report_events", "timers", "sensors", "phones", "links", "faults"});
  if (!doc.is_object()) throw ScenarioError(std::move(r.errors));

  r.require(doc, "sensors", root);
  r.require(doc, "duration", root);
  r.number(doc, "seed", root, sc.seed);
  r.duration(doc, "duration", root, sc.duration);
  r.number(doc, "fingerprint", root, sc.fingerprint.id);
  r.position(doc, "patient_position", root, sc.patient);
  r.number(doc, "nearby_radius_m", root, sc.nearby_radius);
  r.number(doc, "max_report_events", root, sc.max_report_events);

  if (const json* t = r.find(doc, "timers")) {
    const std::string tp = root + ".timers";
    r.keys(*t, tp, {"time0", "time01", "time1", "time2", "time3"});
    r.duration(*t, "time0", tp, sc.timers.time0);
    r.duration(*t, "time01", tp, sc.timers.time01);
    r.duration(*t, "time1", tp, sc.timers.time1);
    r.duration(*t, "time2", tp, sc.timers.time2);
    r.duration(*t, "time3", tp, sc.timers.time3);
  }
  if (const json* l = r.find(doc, "links")) {
    const std::string lp = root + ".links";
    r.keys(*l, lp, {"personal", "nearby", "satellite", "internal"});
    if (const json* x = r.find(*l, "personal")) read_link(r, *x, lp + ".personal", sc.links.personal);
    if (const json* x = r.find(*l, "nearby")) read_link(r, *x, lp + ".nearby", sc.links.nearby);
    if (const json* x = r.find(*l, "satellite")) read_link(r, *x, lp + ".satellite", sc.links.satellite);
    if (const json* x = r.find(*l, "internal")) read_link(r, *x, lp + ".internal", sc.links.internal);
  }

  auto array_of = [&](const char* key, auto&& read_one) {
    const json* a = r.find(doc, key);
    if (!a) return;
    if (!a->is_array()) return r.type_error(root, key, "an array");
    for (std::size_t i = 0; i < a->size(); ++i)
      read_one((*a)[i], root + "." + key + "[" + std::to_string(i) + "]");
  };
  array_of("sensors", [&](const json& e, const std::string& p) { sc.sensors.push_back(read_sensor(r, e, p)); });
  array_of("phones", [&](const json& e, const std::string& p) { sc.phones.push_back(read_phone(r, e, p)); });
  array_of("faults", [&](const json& e, const std::string& p) { sc.faults.push_back(read_fault(r, e, p)); });

  auto errors = std::move(r.errors);
  if (errors.empty()) errors = validate(sc);
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json sensors = json::array();
  for (const auto& s : sc.sensors) {
    json anomalies = json::array();
    for (const auto& w : s.vital.anomalies)
      anomalies.push_back({{"start", w.start.ticks}, {"end", w.end.ticks}, {"offset", w.offset}});
    sensors.push_back({
        {"name", s.name},
        {"vital",
         {{"kind", std::string(to_string(s.vital.kind))},
          {"baseline", s.vital.baseline},
          {"amplitude", s.vital.amplitude},
          {"period", duration_json(s.vital.period)},
          {"noise_sigma", s.vital.noise_sigma},
          {"anomalies", anomalies}}},
        {"range", {s.lo, s.hi}},
        {"quant", {{"lo", s.quant.lo}, {"hi", s.quant.hi}, {"bits", s.quant.bits}}},
        {"eps_max", s.eps_max},
        {"t_fault", duration_json(s.t_fault)},
        {"predictor",
         {{"hidden", s.predictor.hidden},
          {"learning_rate", s.predictor.learning_rate},
          {"init_scale", s.predictor.init_scale},
          {"warmup_samples", s.predictor.warmup_samples}}},
        {"neighbors", s.neighbors},
        {"sample_period", duration_json(s.sample_period)},
    });
  }
  json phones = json::array();
  for (const auto& ph : sc.phones) {
    json script = json::array();
    for (const auto& c : ph.changes) {
      json e = {{"at", c.at.ticks}};
      if (c.reachable) e["reachable"] = *c.reachable;
      if (c.position) e["position"] = {c.position->x, c.position->y};
      script.push_back(std::move(e));
    }
    phones.push_back({{"id", ph.node.id},
                      {"role", ph.node.role == PhoneRole::kPersonal ? "personal" : "bystander"},
                      {"position", {ph.node.position.x, ph.node.position.y}},
                      {"reachable", ph.node.reachable},
                      {"script", script}});
  }
  json faults = json::array();
  for (const auto& f : sc.faults) {
    json e = {{"sensor", f.sensor},
              {"start", f.start.ticks},
              {"mode", std::string(to_string(f.mode))},
              {"value", f.value}};
    if (f.end) e["end"] = f.end->ticks;
    faults.push_back(std::move(e));
  }
  return {
      {"seed", sc.seed},
      {"duration", duration_json(sc.duration)},
      {"fingerprint", sc.fingerprint.id},
      {"patient_position", {sc.patient.x, sc.patient.y}},
      {"nearby_radius_m", sc.nearby_radius},
      {"max_report_events", sc.max_report_events},
      {"timers",
       {{"time0", duration_json(sc.timers.time0)},
        {"time01", duration_json(sc.timers.time01)},
        {"time1", duration_json(sc.timers.time1)},
        {"time2", duration_json(sc.timers.time2)},
        {"time3", duration_json(sc.timers.time3)}}},
      {"sensors", sensors},
      {"phones", phones},
      {"links",
       {{"personal", link_json(sc.links.personal)},
        {"nearby", link_json(sc.links.nearby)},
        {"satellite", link_json(sc.links.satellite)},
        {"internal", link_json(sc.links.internal)}}},
      {"faults", faults},
  };
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioIoError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioIoError("scenario file " + path.string() + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace wban
