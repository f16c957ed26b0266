// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wban/cluster_head.hpp"
#include "wban/codec.hpp"
#include "wban/fault_detect.hpp"
#include "wban/selftest.hpp"

using namespace wban;
using fixtures::canned;
using fixtures::purpose;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::vector<std::uint64_t> send_times(const RunResult& r, const std::string& p) {
  std::vector<std::uint64_t> out;
  for (const auto& e : r.trace)
    if (e.kind == "send" && purpose(e) == p) out.push_back(e.time.ticks);
  return out;
}

std::vector<std::uint64_t> times_of(const RunResult& r, const std::string& kind) {
  std::vector<std::uint64_t> out;
  for (const auto& e : r.trace)
    if (e.kind == kind) out.push_back(e.time.ticks);
  return out;
}

std::string join(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return "[" + s + "]";
}

// Ten-sensor body with three sensors driven out of range from t=0.
Scenario emergency_at_zero(Duration duration) {
  auto sc = canned("emergency_reachable");
  sc.duration = duration;
  for (auto& s : sc.sensors) {
    for (auto& w : s.vital.anomalies) {
      w.start = VirtualTime{0};
      w.end = VirtualTime::from(duration) + Duration{1};
    }
  }
  return sc;
}

Outcome ac1_escalation_timeline() {
  Outcome o;
  auto sc = emergency_at_zero(std::chrono::minutes(2));
  sc.links.personal.delivery_prob = 0.0;
  sc.links.nearby.delivery_prob = 0.0;
  sc.links.satellite.delivery_prob = 0.0;
  sc.phones.push_back({PhoneNode{9, Position{10, 0}, true, PhoneRole::kBystander}, {}});
  const auto r = run(sc);

  const std::uint64_t period = 22100;
  const auto cycles = sc.duration.count() / period + 1;
  std::vector<std::uint64_t> s1, s2, s3, rfi;
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(cycles); ++k) {
    const auto base = k * period;
    s1.push_back(base);
    if (base + 100 <= static_cast<std::uint64_t>(sc.duration.count())) s2.push_back(base + 100);
    if (base + 2100 <= static_cast<std::uint64_t>(sc.duration.count())) s3.push_back(base + 2100);
    if (base + period <= static_cast<std::uint64_t>(sc.duration.count())) rfi.push_back(base + period);
  }
  o.require(send_times(r, "stage1") == s1, "stage-1 sends " + join(send_times(r, "stage1")) + " != " + join(s1));
  o.require(send_times(r, "stage2") == s2, "stage-2 sends " + join(send_times(r, "stage2")) + " != " + join(s2));
  o.require(send_times(r, "stage3") == s3, "stage-3 sends " + join(send_times(r, "stage3")) + " != " + join(s3));
  o.require(times_of(r, "return_from_interrupt") == rfi,
            "returns " + join(times_of(r, "return_from_interrupt")) + " != " + join(rfi));
  if (o.pass)
    o.detail = "sends at 0/100/2100 ms, return at 22100 ms, " + std::to_string(rfi.size()) + " full periods of 22100 ms";
  return o;
}

Outcome ac2_ack_suppression() {
  Outcome o;
  auto sc = emergency_at_zero(std::chrono::seconds(25));
  sc.links.personal.base = Duration{25};
  sc.links.personal.jitter = Duration{0};
  const auto r = run(sc);

  std::vector<std::uint64_t> ch_acks;
  for (const auto& e : r.trace)
    if (e.actor == "ch" && e.kind == "recv" && !e.frame.empty() && e.frame[0] == 0x05) ch_acks.push_back(e.time.ticks);
  const auto rfi = times_of(r, "return_from_interrupt");
  o.require(!ch_acks.empty() && ch_acks.front() == 50, "first ACK at the cluster head " + join(ch_acks));
  o.require(!rfi.empty() && rfi.front() == 20050, "first return " + join(rfi) + ", expected 20050");
  std::size_t higher = 0;
  for (const auto& e : r.trace) {
    if (!rfi.empty() && e.time.ticks >= rfi.front()) break;
    if (e.kind == "send" && (purpose(e) == "stage2" || purpose(e) == "stage3")) ++higher;
  }
  o.require(higher == 0, std::to_string(higher) + " stage-2/3 sends in the acknowledged activation");
  if (o.pass) o.detail = "ACK at 50 ms, no stage-2/3 sends, return at 20050 ms";
  return o;
}

Outcome ac3_daily_retry() {
  Outcome o;
  auto sc = canned("minimal");
  sc.duration = std::chrono::hours(30);
  const VirtualTime daily = VirtualTime::from(std::chrono::hours(24));
  sc.phones[0].changes = {{VirtualTime{0}, false, std::nullopt},
                          {daily + std::chrono::hours(3), true, std::nullopt}};
  const auto r = run(sc);

  std::vector<std::uint64_t> tx;
  for (const auto& e : r.trace)
    if (e.kind == "send" && (purpose(e) == "daily" || purpose(e) == "retry")) tx.push_back(e.time.ticks / 3600000);
  o.require(tx == std::vector<std::uint64_t>{24, 25, 26, 27}, "transmissions at hours " + join(tx));
  o.require(r.metrics.reports_acked == 1, std::to_string(r.metrics.reports_acked) + " reports acknowledged");
  o.require(r.metrics.report_transmissions == 4, "report transmissions " + std::to_string(r.metrics.report_transmissions));
  if (o.pass) o.detail = "transmissions at 24/25/26/27 h, queue empty after the 27 h ACK";
  return o;
}

Outcome ac4_classifier() {
  Outcome o;
  const std::pair<std::size_t, PatientMode> cases[] = {
      {0, PatientMode::kNormal}, {2, PatientMode::kSemiCritical}, {3, PatientMode::kCritical}, {5, PatientMode::kCritical}};
  for (const auto& [k, want] : cases)
    o.require(classify(k, 10) == want, "classify(" + std::to_string(k) + ", 10) = " + std::string(to_string(classify(k, 10))));
  if (o.pass) o.detail = "0/2/3/5 -> normal/semi_critical/critical/critical";
  return o;
}

Outcome ac5_status_field() {
  Outcome o;
  auto sc = canned("sensor_fault");
  const auto r = run(sc);
  const auto specs = sc.quant_table();
  std::vector<std::string> rendered;
  for (const auto& e : r.trace) {
    if (e.actor != "ch" || e.kind != "send" || e.frame.empty() || e.frame[0] != 0x02) continue;
    if (purpose(e) != "fault_notice" && purpose(e) != "daily") continue;
    rendered.push_back(std::get<DailyReport>(decode_frame(e.frame, specs)).status.to_string());
  }
  o.require(!rendered.empty(), "no daily report sent");
  o.require(!rendered.empty() && rendered.front() == "1111101111",
            "status field " + (rendered.empty() ? std::string("<none>") : rendered.front()));
  if (o.pass) o.detail = "DailyReport status field \"" + rendered.front() + "\"";
  return o;
}

Outcome ac6_fault_confirmation() {
  Outcome o;
  const auto sc = canned("sensor_fault");
  const auto start = sc.faults.at(0).start.ticks;
  const auto r = run(sc);
  std::optional<std::uint64_t> faulty;
  for (const auto& e : r.trace)
    if (e.kind == "verdict" && e.annotations["verdict"] == "faulty") {
      faulty = e.time.ticks;
      break;
    }
  const auto want = start + 5000;
  o.require(faulty && *faulty + 1000 >= want && *faulty <= want + 1000,
            "faulty at " + (faulty ? std::to_string(*faulty) : std::string("never")) + " ms, expected " +
                std::to_string(want) + " +/- 1000");

  std::size_t false_positives = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto t = canned("sensor_fault");
    t.seed = seed;
    t.duration = std::chrono::minutes(15);
    t.faults = {{5, VirtualTime{600000}, VirtualTime{603000}, FaultMode::kOffset, -30.0}};
    const auto tr = run(t);
    for (const auto& e : tr.trace)
      if (e.kind == "verdict" && e.annotations["verdict"] == "faulty") {
        ++false_positives;
        break;
      }
  }
  o.require(false_positives == 0, std::to_string(false_positives) + "/100 transient trials produced Faulty");
  if (o.pass)
    o.detail = "Faulty at " + std::to_string(*faulty - start) + " ms after injection; 0/100 transient trials faulty";
  return o;
}

Outcome ac7_codec() {
  Outcome o;
  Rng rng(77);
  std::size_t ok = 0;
  for (int n = 0; n < 1000; ++n) {
    const auto specs = selftest_quant_table(static_cast<std::size_t>(rng.uniform_int(1, 16)));
    const Frame f = random_frame(rng, specs);
    if (decode_frame(encode_frame(f, specs), specs) == f) ++ok;
  }
  o.require(ok == 1000, std::to_string(ok) + "/1000 round trips");

  const auto specs = selftest_quant_table(10);
  const std::vector<Frame> frames = {
      Beacon{Fingerprint{5}},
      DailyReport{Fingerprint{5}, SensorStatusField::parse("1111101111"), {{5, 33, 605000}, {1, 200, 7}}},
      EmergencyBroadcast{Fingerprint{5}, {{0, 255, 1}, {1, 0, 2}, {5, 17, 3}}},
      SatelliteReport{Fingerprint{5}, {{9, 128, 4}}},
      Ack{Fingerprint{5}},
  };
  std::size_t flips = 0, detected = 0;
  for (const auto& f : frames) {
    auto b = encode_frame(f, specs);
    for (std::size_t bit = 0; bit < b.size() * 8; ++bit) {
      b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++flips;
      try {
        decode_frame(b, specs);
      } catch (const CodecError& e) {
        if (e.kind() == CodecError::Kind::kIntegrity || e.kind() == CodecError::Kind::kFormat) ++detected;
      }
      b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
  o.require(detected == flips, std::to_string(detected) + "/" + std::to_string(flips) + " bit flips detected");
  if (o.pass) o.detail = "1000/1000 round trips; " + std::to_string(flips) + "/" + std::to_string(flips) + " single-bit flips detected across 5 kinds";
  return o;
}

Outcome ac8_predictor() {
  Outcome o;
  Rng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n_in = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto n_hidden = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto m = PredictorModel::random(n_in, n_hidden, rng, 1.0);
    std::vector<double> x(n_in);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const double target = rng.uniform(-1.0, 1.0);
    const auto g = loss_gradient(m, x, target);
    const auto fd = oracle::numeric_gradient(m, x, target);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g[i]) < 1e-7 && std::abs(fd[i]) < 1e-7) continue;
      worst = std::max(worst, oracle::relative_error(g[i], fd[i]));
    }
  }
  o.require(worst < 1e-4, "max relative gradient error " + std::to_string(worst));

  Rng train_rng(2000);
  auto model = PredictorModel::random(1, 4, train_rng);
  auto grid_mse = [&] {
    double mse = 0.0;
    for (int k = 0; k <= 100; ++k) {
      const double x = -1.0 + k / 50.0;
      mse += std::pow(predict(model, std::vector<double>{x}) - (0.5 * x + 0.2), 2) / 101;
    }
    return mse;
  };
  int reached = -1;
  double loss = 0.0;
  for (int step = 1; step <= 2000; ++step) {
    const std::vector<double> x{train_rng.uniform(-1.0, 1.0)};
    auto r = train_step(std::move(model), x, 0.5 * x[0] + 0.2);
    model = std::move(r.model);
    loss = r.loss;
    if (reached < 0 && step % 10 == 0 && grid_mse() < 1e-3) reached = step;
  }
  const double mse = grid_mse();
  o.require(loss < 1e-3 && mse < 1e-3,
            "after 2000 steps: last loss " + std::to_string(loss) + ", grid mse " + std::to_string(mse));
  if (o.pass) {
    std::ostringstream d;
    d << "max gradient error " << worst << " over 50 models; grid mse < 1e-3 from step " << reached
      << ", final grid mse " << mse;
    o.detail = d.str();
  }
  return o;
}

Outcome ac9_determinism() {
  Outcome o;
  auto trace_of = [](const Scenario& sc) {
    std::ostringstream ss;
    run(sc).write_trace(ss);
    return ss.str();
  };
  for (const char* name : {"minimal", "sensor_fault", "emergency_reachable", "emergency_bystander",
                           "emergency_isolated", "stochastic_link"}) {
    const auto sc = canned(name);
    o.require(trace_of(sc) == trace_of(sc), std::string(name) + ": equal seeds gave different traces");
  }
  auto sc = canned("stochastic_link");
  const auto a = trace_of(sc);
  sc.seed += 1;
  o.require(a != trace_of(sc), "stochastic_link: different seeds gave identical traces");
  if (o.pass) o.detail = "6 scenarios byte-identical on rerun; stochastic_link differs across seeds";
  return o;
}

Outcome ac10_energy() {
  Outcome o;
  const double reachable = run(canned("emergency_reachable")).metrics.total_energy;
  const double bystander = run(canned("emergency_bystander")).metrics.total_energy;
  const double isolated = run(canned("emergency_isolated")).metrics.total_energy;
  std::ostringstream d;
  d << "reachable " << reachable << " < bystander " << bystander << " < isolated " << isolated;
  o.require(reachable < bystander && bystander < isolated, d.str());
  if (o.pass) o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 escalation timeline", ac1_escalation_timeline},
      {"AC2 ack suppression", ac2_ack_suppression},
      {"AC3 daily retry arithmetic", ac3_daily_retry},
      {"AC4 classifier boundaries", ac4_classifier},
      {"AC5 status field", ac5_status_field},
      {"AC6 fault confirmation", ac6_fault_confirmation},
      {"AC7 codec", ac7_codec},
      {"AC8 predictor", ac8_predictor},
      {"AC9 determinism", ac9_determinism},
      {"AC10 energy ordering", ac10_energy},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (10 - failed) << "/10 acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
