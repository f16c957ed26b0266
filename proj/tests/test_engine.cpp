#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "wban/event_queue.hpp"

using namespace wban;
using fixtures::canned;
using fixtures::count;
using fixtures::purpose;

TEST_CASE("sample_vital") {
  VitalSignModel m;
  m.baseline = 72.0;
  m.amplitude = 4.0;
  m.period = Duration{60000};
  Rng rng(1);
  CHECK(sample_vital(m, VirtualTime{0}, rng) == 72.0);
  CHECK(sample_vital(m, VirtualTime{15000}, rng) == doctest::Approx(76.0).epsilon(1e-12));
  m.anomalies.push_back({VirtualTime{1000}, VirtualTime{2000}, 5.0});
  Rng a(1), b(1);
  CHECK(sample_vital(m, VirtualTime{1500}, a) - 5.0 == doctest::Approx(sample_vital(VitalSignModel{m.kind, 72.0, 4.0, m.period, 0.0, {}}, VirtualTime{1500}, b)));
  CHECK(sample_vital(m, VirtualTime{2000}, a) == doctest::Approx(72.0 + 4.0 * std::sin(2 * M_PI * 2000 / 60000)));
}

TEST_CASE("event queue ordering") {
  EventQueue<char> q;
  q.schedule(VirtualTime{5}, 'A');
  q.schedule(VirtualTime{3}, 'B');
  q.schedule(VirtualTime{5}, 'C');
  CHECK(q.next()->event == 'B');
  CHECK(q.now() == VirtualTime{3});
  CHECK(q.next()->event == 'A');
  CHECK(q.next()->event == 'C');
  CHECK_FALSE(q.next());
  CHECK_THROWS_AS(q.schedule(VirtualTime{4}, 'D'), std::logic_error);
}

TEST_CASE("48 hours with perfect links sends two acknowledged daily reports") {
  const auto r = run(canned("normal_48h"));
  std::vector<std::uint64_t> daily;
  for (const auto& e : r.trace)
    if (e.kind == "send" && purpose(e) == "daily") daily.push_back(e.time.ticks);
  CHECK(daily == std::vector<std::uint64_t>{24ull * 3600 * 1000, 48ull * 3600 * 1000});
  CHECK(r.metrics.reports_acked == 2);
  CHECK(r.metrics.report_retransmissions == 0);
  CHECK(r.metrics.escalation_activations == 0);
  CHECK(r.metrics.mode_occupancy_ms.at("normal") == 48ull * 3600 * 1000);
  CHECK(r.metrics.fault_false_positives == 0);
}

TEST_CASE("stuck sensor is confirmed faulty five seconds after injection") {
  const auto r = run(canned("sensor_fault"));
  std::optional<std::uint64_t> faulty_at;
  for (const auto& e : r.trace) {
    if (e.kind == "verdict" && e.annotations["verdict"] == "faulty") {
      CHECK(e.annotations["sensor"] == 5);
      faulty_at = e.time.ticks;
      break;
    }
  }
  REQUIRE(faulty_at);
  CHECK(*faulty_at >= 604000);
  CHECK(*faulty_at <= 606000);
  CHECK(count(r, "database", "advisory") >= 1);
  CHECK(r.metrics.fault_true_positives == 1);
  CHECK(r.metrics.fault_false_positives == 0);
}

TEST_CASE("bystander-only emergency reaches the emergency center without satellite") {
  const auto r = run(canned("emergency_bystander"));
  bool broadcast_delivered = false, bystander_ack = false, forwarded = false;
  for (const auto& e : r.trace) {
    if (e.actor == "phone:2" && e.kind == "recv" && !e.frame.empty() && e.frame[0] == 0x03) broadcast_delivered = true;
    if (e.actor == "phone:2" && e.kind == "send" && purpose(e) == "ack") bystander_ack = true;
    if (e.actor == "emergency_center" && e.kind == "recv") forwarded = true;
  }
  CHECK(broadcast_delivered);
  CHECK(bystander_ack);
  CHECK(forwarded);
  CHECK(r.metrics.stage_sends[2] == 0);
  CHECK(r.metrics.dispatches > 0);
}

TEST_CASE("identical seeds give identical traces") {
  auto sc = canned("stochastic_link");
  std::ostringstream a, b, c;
  run(sc).write_trace(a);
  run(sc).write_trace(b);
  sc.seed += 1;
  run(sc).write_trace(c);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("metrics recomputed from the written trace match") {
  const auto r = run(canned("stochastic_link"));
  std::stringstream ss;
  r.write_trace(ss);
  const auto parsed = read_trace(ss);
  CHECK(parsed.header == r.header);
  CHECK(parsed.events == r.trace);
  CHECK(compute_metrics(parsed.events) == r.metrics);
  CHECK(metrics_from_json(to_json(r.metrics)) == r.metrics);
}

TEST_CASE("trace invariants") {
  for (const char* name : {"stochastic_link", "emergency_isolated", "sensor_fault"}) {
    CAPTURE(name);
    const auto r = run(canned(name));
    std::multiset<std::pair<std::string, Bytes>> sent;  // (destination, frame) still in flight
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& e = r.trace[i];
      REQUIRE(e.seq == i);
      if (i > 0) REQUIRE(e.time >= r.trace[i - 1].time);
      if (e.kind == "send") {
        const auto to = e.annotations["to"].get<std::string>();
        if (to == "broadcast") {
          for (const auto& rcv : e.annotations["receivers"]) sent.insert({rcv.get<std::string>(), e.frame});
        } else {
          sent.insert({to, e.frame});
        }
      }
      if (e.kind == "recv") {
        // Conservation and causality: every delivery matches an earlier transmission byte for byte.
        auto it = sent.find({e.actor, e.frame});
        REQUIRE(it != sent.end());
        sent.erase(it);
      }
    }
  }
}

TEST_CASE("fault scoring uses injections as ground truth") {
  auto sc = canned("sensor_fault");
  sc.faults.push_back({2, VirtualTime{900000}, VirtualTime{902000}, FaultMode::kOffset, 4.0});
  sc.faults.push_back({7, VirtualTime{1000000}, std::nullopt, FaultMode::kDead, 0.0});
  const auto r = run(sc);
  CHECK(r.metrics.fault_true_positives == 1);
  CHECK(r.metrics.fault_false_positives == 0);
  CHECK(r.metrics.fault_false_negatives == 0);
}

TEST_CASE("seven-day run") {
  auto sc = canned("minimal");
  sc.duration = std::chrono::hours(24 * 7);
  const auto r = run(sc);
  CHECK(count(r, "engine", "end") == 1);
  CHECK(r.metrics.report_transmissions == 7);
  CHECK(r.metrics.reports_acked == 7);
  std::uint64_t total = 0;
  for (const auto& [mode, ms] : r.metrics.mode_occupancy_ms) total += ms;
  CHECK(total == 7ull * 24 * 3600 * 1000);
}

TEST_CASE("invalid scenarios are rejected before running") {
  auto sc = canned("minimal");
  sc.sensors[0].neighbors = {0};
  CHECK_THROWS_AS(run(sc), ScenarioError);
}

TEST_CASE("random emergencies: runs complete and no stage sends follow a clear") {
  Rng pick(31);
  for (int trial = 0; trial < 40; ++trial) {
    auto sc = canned("stochastic_link");
    sc.seed = static_cast<std::uint64_t>(trial);
    sc.duration = std::chrono::minutes(20);
    sc.faults.clear();
    for (auto& s : sc.sensors) s.vital.anomalies.clear();
    const auto n = pick.uniform_int(0, 6);
    for (int k = 0; k < n; ++k) {
      auto& s = sc.sensors[static_cast<std::size_t>(pick.uniform_int(0, 9))];
      const auto start = static_cast<std::uint64_t>(pick.uniform_int(0, 1100)) * 1000;
      const auto len = static_cast<std::uint64_t>(pick.uniform_int(1, 60)) * 500;
      s.vital.anomalies.push_back({VirtualTime{start}, VirtualTime{start + len}, 5.0 * (s.hi - s.lo)});
    }
    sc.links.personal.delivery_prob = pick.uniform();
    sc.links.nearby.delivery_prob = pick.uniform();
    sc.links.satellite.delivery_prob = pick.uniform();

    RunResult r;
    REQUIRE_NOTHROW(r = run(sc));
    bool active = false;
    for (const auto& e : r.trace) {
      if (e.kind == "emergency_raised") active = true;
      if (e.kind == "emergency_cleared") active = false;
      const auto p = purpose(e);
      if (e.kind == "send" && (p == "stage1" || p == "stage2" || p == "stage3")) REQUIRE(active);
    }
  }
}
