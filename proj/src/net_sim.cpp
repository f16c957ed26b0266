#include "wban/net_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wban {

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::kPersonal: return "personal";
    case LinkKind::kNearbyBroadcast: return "nearby";
    case LinkKind::kSatellite: return "satellite";
    case LinkKind::kInternal: return "internal";
  }
  return "unknown";
}

LinkModel LinkModel::defaults(LinkKind kind) {
  switch (kind) {
    case LinkKind::kPersonal: return {kind, 1.0, Duration{20}, Duration{5}, 1.0};
    case LinkKind::kNearbyBroadcast: return {kind, 1.0, Duration{30}, Duration{10}, 2.0};
    case LinkKind::kSatellite: return {kind, 0.9, Duration{600}, Duration{200}, 10.0};
    case LinkKind::kInternal: return {kind, 1.0, Duration{50}, Duration{0}, 0.0};
  }
  return {};
}

std::vector<std::string> LinkModel::violations(std::string_view name) const {
  std::vector<std::string> out;
  const std::string prefix = "links." + std::string(name) + ".";
  if (!(delivery_prob >= 0.0 && delivery_prob <= 1.0))
    out.push_back(prefix + "delivery_prob must be in [0, 1]");
  if (base.count() < 0) out.push_back(prefix + "base latency must be nonnegative");
  if (jitter.count() < 0) out.push_back(prefix + "jitter must be nonnegative");
  if (base.count() > 0 && jitter >= base)
    out.push_back(prefix + "jitter must be smaller than base latency");
  if (!(energy_cost >= 0.0) || !std::isfinite(energy_cost))
    out.push_back(prefix + "energy_cost must be a nonnegative number");
  return out;
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

Duration sample_latency(const LinkModel& link, Rng& rng) {
  if (link.jitter.count() == 0) return link.base;
  const auto j = link.jitter.count();
  const auto offset = rng.uniform_int(-j, j);
  return Duration{std::max<Duration::rep>(0, link.base.count() + offset)};
}

}  // namespace

TransmitResult transmit(const LinkModel& link, const Bytes& payload, std::string source,
                        std::string destination, VirtualTime now, Rng& rng) {
  TransmitResult result;
  result.energy_spent = link.energy_cost;
  if (!rng.bernoulli(link.delivery_prob)) return result;
  const auto latency = sample_latency(link, rng);
  result.delivery = DeliveryEvent{payload,     std::move(source), std::move(destination),
                                  now,         now + latency,     link.energy_cost};
  return result;
}

BroadcastResult broadcast(const LinkModel& link, const Bytes& payload, std::string source,
                          const std::vector<std::string>& receivers, VirtualTime now,
                          Rng& rng) {
  BroadcastResult result;
  result.energy_spent = link.energy_cost;
  for (const auto& to : receivers) {
    if (!rng.bernoulli(link.delivery_prob)) continue;
    const auto latency = sample_latency(link, rng);
    result.deliveries.push_back({payload, source, to, now, now + latency, 0.0});
  }
  return result;
}

std::vector<PhoneNode> discover_nearby(const std::vector<PhoneNode>& phones, Position center,
                                       double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("discovery radius must be positive");
  std::vector<std::pair<double, PhoneNode>> hits;
  for (const auto& p : phones) {
    if (p.role != PhoneRole::kBystander || !p.reachable) continue;
    const double d = distance(p.position, center);
    if (d <= radius) hits.emplace_back(d, p);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second.id < b.second.id;
  });
  std::vector<PhoneNode> out;
  out.reserve(hits.size());
  for (auto& [d, p] : hits) out.push_back(std::move(p));
  return out;
}

std::vector<PhoneAction> phone_on_receive(const PhoneNode& phone, const Frame& frame,
                                          VirtualTime /*now*/) {
  std::vector<PhoneAction> actions;
  const Ack ack{frame_fingerprint(frame)};
  if (const auto* eb = std::get_if<EmergencyBroadcast>(&frame)) {
    actions.emplace_back(ForwardToEmergencyCenter{SatelliteReport{eb->fingerprint, eb->events}});
    actions.emplace_back(AckToClusterHead{ack});
  } else if (std::holds_alternative<DailyReport>(frame)) {
    if (phone.role == PhoneRole::kPersonal) {
      actions.emplace_back(ForwardToDatabase{frame});
      actions.emplace_back(AckToClusterHead{ack});
    }
  } else if (std::holds_alternative<Beacon>(frame)) {
    actions.emplace_back(AckToClusterHead{ack});
  }
  return actions;
}

std::vector<DatabaseAction> database_on_receive(const Frame& frame, VirtualTime /*now*/) {
  std::vector<DatabaseAction> actions;
  actions.emplace_back(Record{std::string(frame_kind_name(frame))});
  if (const auto* sr = std::get_if<SatelliteReport>(&frame)) {
    actions.emplace_back(DispatchService{sr->fingerprint});
  } else if (const auto* dr = std::get_if<DailyReport>(&frame)) {
    for (std::size_t i = 0; i < dr->status.size(); ++i) {
      if (!dr->status.agrees(i)) actions.emplace_back(SensorDamagedAdvisory{i});
    }
    actions.emplace_back(AckToSender{Ack{dr->fingerprint}});
  }
  return actions;
}

std::vector<DatabaseAction> DatabaseSink::on_bytes(const Bytes& payload, VirtualTime now) {
  try {
    auto frame = decode_frame(payload, specs_);
    auto actions = database_on_receive(frame, now);
    records_.push_back(std::move(frame));
    return actions;
  } catch (const CodecError&) {
    ++dropped_;
    return {};
  }
}

}  // namespace wban
