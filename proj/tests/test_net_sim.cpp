#include <doctest.h>

#include <cmath>

#include "wban/net_sim.hpp"

using namespace wban;
using namespace std::chrono_literals;

namespace {

const Bytes kPayload{1, 2, 3, 4};

LinkModel link(double p, Duration base, Duration jitter, double energy = 1.0) {
  return LinkModel{LinkKind::kPersonal, p, base, jitter, energy};
}

PhoneNode phone(std::uint32_t id, double x, double y, PhoneRole role = PhoneRole::kBystander, bool reachable = true) {
  return PhoneNode{id, Position{x, y}, reachable, role};
}

std::vector<std::size_t> kinds(const std::vector<PhoneAction>& actions) {
  std::vector<std::size_t> out;
  for (const auto& a : actions) out.push_back(a.index());
  return out;
}

std::vector<std::size_t> kinds(const std::vector<DatabaseAction>& actions) {
  std::vector<std::size_t> out;
  for (const auto& a : actions) out.push_back(a.index());
  return out;
}

}  // namespace

TEST_CASE("default link costs are ordered") {
  const auto p = LinkModel::defaults(LinkKind::kPersonal);
  const auto n = LinkModel::defaults(LinkKind::kNearbyBroadcast);
  const auto s = LinkModel::defaults(LinkKind::kSatellite);
  CHECK(p.energy_cost == 1.0);
  CHECK(n.energy_cost == 2.0);
  CHECK(s.energy_cost == 10.0);
  for (auto k : {LinkKind::kPersonal, LinkKind::kNearbyBroadcast, LinkKind::kSatellite, LinkKind::kInternal})
    CHECK(LinkModel::defaults(k).violations("l").empty());
}

TEST_CASE("link invariants") {
  CHECK_FALSE(link(1.5, 10ms, 0ms).violations("x").empty());
  CHECK_FALSE(link(1.0, 10ms, 10ms).violations("x").empty());
  CHECK(link(1.0, 0ms, 5ms).violations("x").empty());
  CHECK_FALSE(link(1.0, -1ms, 0ms).violations("x").empty());
}

TEST_CASE("perfect link delivers at the base latency") {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    auto r = transmit(link(1.0, 10ms, 0ms), kPayload, "a", "b", VirtualTime{1000}, rng);
    REQUIRE(r.delivery);
    CHECK(r.delivery->arrive_time == VirtualTime{1010});
    CHECK(r.delivery->payload == kPayload);
    CHECK(r.energy_spent == 1.0);
  }
}

TEST_CASE("dead link never delivers but still costs energy") {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    auto r = transmit(link(0.0, 10ms, 0ms, 3.0), kPayload, "a", "b", VirtualTime{0}, rng);
    CHECK_FALSE(r.delivery);
    CHECK(r.energy_spent == 3.0);
  }
}

TEST_CASE("empirical delivery rate") {
  Rng rng(2024);
  int delivered = 0;
  for (int k = 0; k < 10000; ++k)
    delivered += transmit(link(0.5, 10ms, 5ms), kPayload, "a", "b", VirtualTime{0}, rng).delivery ? 1 : 0;
  CHECK(std::abs(delivered / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("jittered latency stays within bounds") {
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    auto r = transmit(link(1.0, 20ms, 5ms), kPayload, "a", "b", VirtualTime{100}, rng);
    const auto lat = (r.delivery->arrive_time - r.delivery->send_time).count();
    REQUIRE(lat >= 15);
    REQUIRE(lat <= 25);
  }
}

TEST_CASE("broadcast charges once and draws per receiver") {
  Rng rng(4);
  auto r = broadcast(link(1.0, 30ms, 0ms, 2.0), kPayload, "ch", {"p1", "p2", "p3"}, VirtualTime{0}, rng);
  CHECK(r.energy_spent == 2.0);
  REQUIRE(r.deliveries.size() == 3);
  CHECK(r.deliveries[1].destination == "p2");
  auto none = broadcast(link(1.0, 30ms, 0ms, 2.0), kPayload, "ch", {}, VirtualTime{0}, rng);
  CHECK(none.energy_spent == 2.0);
  CHECK(none.deliveries.empty());
}

TEST_CASE("nearby discovery boundary is closed") {
  const std::vector<PhoneNode> phones = {
      phone(1, 39.9, 0), phone(2, 0, 40.0), phone(3, 40.1, 0), phone(4, 1, 0, PhoneRole::kBystander, false),
      phone(5, 2, 0, PhoneRole::kPersonal)};
  const auto found = discover_nearby(phones, Position{0, 0});
  std::vector<std::uint32_t> ids;
  for (const auto& p : found) ids.push_back(p.id);
  CHECK(ids == std::vector<std::uint32_t>{1, 2});
  CHECK(discover_nearby(phones, Position{0, 0}) == found);
  CHECK_THROWS(discover_nearby(phones, Position{0, 0}, 0.0));
}

TEST_CASE("phone reactions") {
  const auto bystander = phone(1, 5, 0);
  const auto personal = phone(2, 1, 0, PhoneRole::kPersonal);
  const Fingerprint fp{3};
  CHECK(kinds(phone_on_receive(bystander, EmergencyBroadcast{fp, {}}, VirtualTime{0})) ==
        std::vector<std::size_t>{0, 2});
  CHECK(kinds(phone_on_receive(personal, DailyReport{fp, SensorStatusField::parse("1"), {}}, VirtualTime{0})) ==
        std::vector<std::size_t>{1, 2});
  CHECK(phone_on_receive(bystander, Ack{fp}, VirtualTime{0}).empty());
}

TEST_CASE("database reactions") {
  const Fingerprint fp{3};
  CHECK(kinds(database_on_receive(SatelliteReport{fp, {}}, VirtualTime{0})) == std::vector<std::size_t>{0, 1});
  CHECK(kinds(database_on_receive(DailyReport{fp, SensorStatusField::parse("1111111111"), {}}, VirtualTime{0})) ==
        std::vector<std::size_t>{0, 3});
  const auto damaged = database_on_receive(DailyReport{fp, SensorStatusField::parse("1111101111"), {}}, VirtualTime{0});
  REQUIRE(kinds(damaged) == std::vector<std::size_t>{0, 2, 3});
  CHECK(std::get<SensorDamagedAdvisory>(damaged[1]).sensor == 5);
}

TEST_CASE("database sink counts undecodable frames") {
  DatabaseSink sink(QuantTable(1, QuantSpec{}));
  CHECK(sink.on_bytes(Bytes{0, 1, 2}, VirtualTime{0}).empty());
  CHECK(sink.dropped() == 1);
  const auto ok = encode_frame(SatelliteReport{Fingerprint{1}, {}}, QuantTable(1, QuantSpec{}));
  CHECK(sink.on_bytes(ok, VirtualTime{0}).size() == 2);
  CHECK(sink.records().size() == 1);
}
