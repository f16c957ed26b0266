#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wban/codec.hpp"
#include "wban/rng.hpp"
#include "wban/time.hpp"

namespace wban {

enum class LinkKind { kPersonal, kNearbyBroadcast, kSatellite, kInternal };

std::string_view to_string(LinkKind kind);

/// Lossy channel: independent drops with probability 1 - delivery_prob and a
/// latency of base +/- uniform jitter (whole milliseconds, never negative).
struct LinkModel {
  LinkKind kind = LinkKind::kInternal;
  double delivery_prob = 1.0;
  Duration base{0};
  Duration jitter{0};
  double energy_cost = 0.0;  // charged to the sender per transmission

  /// Defaults per kind: energy Personal 1 < NearbyBroadcast 2 < Satellite 10.
  static LinkModel defaults(LinkKind kind);

  std::vector<std::string> violations(std::string_view name) const;

  bool operator==(const LinkModel&) const = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

double distance(Position a, Position b);

enum class PhoneRole { kPersonal, kBystander };

struct PhoneNode {
  std::uint32_t id = 0;
  Position position;
  bool reachable = true;
  PhoneRole role = PhoneRole::kBystander;
  bool operator==(const PhoneNode&) const = default;
};

/// A frame in flight. The payload is the encoded frame; channels never alter it.
struct DeliveryEvent {
  Bytes payload;
  std::string source;
  std::string destination;
  VirtualTime send_time;
  VirtualTime arrive_time;
  double energy_spent = 0.0;
  bool operator==(const DeliveryEvent&) const = default;
};

struct TransmitResult {
  std::optional<DeliveryEvent> delivery;
  double energy_spent = 0.0;
};

/// One draw of the channel. Energy is charged whether or not the frame lands.
TransmitResult transmit(const LinkModel& link, const Bytes& payload, std::string source,
                        std::string destination, VirtualTime now, Rng& rng);

struct BroadcastResult {
  std::vector<DeliveryEvent> deliveries;
  double energy_spent = 0.0;
};

/// One radio transmission heard by every receiver: energy is charged once,
/// loss and latency are drawn independently per receiver in the given order.
BroadcastResult broadcast(const LinkModel& link, const Bytes& payload, std::string source,
                          const std::vector<std::string>& receivers, VirtualTime now, Rng& rng);

/// Reachable bystanders within `radius` metres (boundary inclusive), sorted
/// by distance then id. Throws std::invalid_argument unless radius > 0.
std::vector<PhoneNode> discover_nearby(const std::vector<PhoneNode>& phones, Position center,
                                       double radius = 40.0);

// Phone behaviour

struct ForwardToEmergencyCenter {
  SatelliteReport report;
  bool operator==(const ForwardToEmergencyCenter&) const = default;
};
struct ForwardToDatabase {
  Frame frame;
  bool operator==(const ForwardToDatabase&) const = default;
};
struct AckToClusterHead {
  Ack ack;
  bool operator==(const AckToClusterHead&) const = default;
};

using PhoneAction = std::variant<ForwardToEmergencyCenter, ForwardToDatabase, AckToClusterHead>;

/// Emergency broadcasts are stripped of their marker and forwarded to the
/// emergency center while the CH is acknowledged at the same instant. A
/// personal phone relays daily reports to the database and acknowledges them.
std::vector<PhoneAction> phone_on_receive(const PhoneNode& phone, const Frame& frame,
                                          VirtualTime now);

// Database behaviour

struct Record {
  std::string frame_kind;
  bool operator==(const Record&) const = default;
};
struct DispatchService {
  Fingerprint fingerprint;
  bool operator==(const DispatchService&) const = default;
};
/// Sensor index is 0-based, i.e. the position in the status string.
struct SensorDamagedAdvisory {
  std::size_t sensor = 0;
  bool operator==(const SensorDamagedAdvisory&) const = default;
};
struct AckToSender {
  Ack ack;
  bool operator==(const AckToSender&) const = default;
};

using DatabaseAction = std::variant<Record, DispatchService, SensorDamagedAdvisory, AckToSender>;

std::vector<DatabaseAction> database_on_receive(const Frame& frame, VirtualTime now);

/// Database endpoint working on raw bytes. Frames failing to decode are
/// counted and dropped; there is no negative acknowledgement.
class DatabaseSink {
 public:
  explicit DatabaseSink(QuantTable specs) : specs_(std::move(specs)) {}

  std::vector<DatabaseAction> on_bytes(const Bytes& payload, VirtualTime now);

  std::uint64_t dropped() const { return dropped_; }
  const std::vector<Frame>& records() const { return records_; }

 private:
  QuantTable specs_;
  std::uint64_t dropped_ = 0;
  std::vector<Frame> records_;
};

}  // namespace wban
