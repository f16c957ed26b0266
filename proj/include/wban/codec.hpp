#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wban {

using Bytes = std::vector<std::uint8_t>;

/// Opaque 64-bit patient identifier. Zero means "unassigned".
struct Fingerprint {
  std::uint64_t id = 0;
  bool operator==(const Fingerprint&) const = default;
};

/// Linear mapping of a physical range onto an unsigned `bits`-wide integer.
struct QuantSpec {
  double lo = 0.0;
  double hi = 1.0;
  int bits = 8;

  /// Largest representable code, 2^bits - 1.
  std::uint32_t full_scale() const { return (1u << bits) - 1u; }
  /// Throws std::invalid_argument unless lo < hi and 1 <= bits <= 16.
  void validate() const;

  bool operator==(const QuantSpec&) const = default;
};

using QuantTable = std::vector<QuantSpec>;

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout.
std::uint16_t crc16(std::span<const std::uint8_t> bytes);

/// Clamp to [lo, hi] and round to the nearest code, ties away from zero.
std::uint32_t quantize(double value, const QuantSpec& spec);

/// Inverse of quantize. Throws std::out_of_range when q > full_scale().
double dequantize(std::uint32_t q, const QuantSpec& spec);

/// One agreement bit per sensor. Bit i is 1 when sensor i's prediction
/// agreed with its sensed value; sensor 0 is rendered leftmost.
class SensorStatusField {
 public:
  SensorStatusField() = default;
  explicit SensorStatusField(std::vector<bool> bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  bool agrees(std::size_t sensor) const { return bits_.at(sensor); }
  std::size_t conflict_count() const;
  const std::vector<bool>& bits() const { return bits_; }

  /// "1111101111" style rendering.
  std::string to_string() const;
  static SensorStatusField parse(std::string_view text);

  bool operator==(const SensorStatusField&) const = default;

 private:
  std::vector<bool> bits_;
};

SensorStatusField build_status_field(const std::vector<bool>& verdicts);

/// One reading worth reporting: which sensor, its quantized value and when it
/// was taken (milliseconds since the run epoch).
struct EventRecord {
  std::uint8_t sensor_index = 0;
  std::uint16_t qvalue = 0;
  std::uint32_t t_offset_ms = 0;
  bool operator==(const EventRecord&) const = default;
};

inline constexpr std::uint8_t kEmergencyMarker = 0xEB;

// Frame kinds. The CRC trailer is not stored: encode computes it and decode
// verifies it.

/// Identity-only keep-alive.
struct Beacon {
  Fingerprint fingerprint;
  bool operator==(const Beacon&) const = default;
};

/// Periodic status report, also used as the first escalation frame.
struct DailyReport {
  Fingerprint fingerprint;
  SensorStatusField status;
  std::vector<EventRecord> events;
  bool operator==(const DailyReport&) const = default;
};

/// Broadcast to nearby phones. Always carries kEmergencyMarker on the wire.
struct EmergencyBroadcast {
  Fingerprint fingerprint;
  std::vector<EventRecord> events;
  bool operator==(const EmergencyBroadcast&) const = default;
};

/// Direct uplink to the database, and the layout phones forward to the
/// emergency center.
struct SatelliteReport {
  Fingerprint fingerprint;
  std::vector<EventRecord> events;
  bool operator==(const SatelliteReport&) const = default;
};

struct Ack {
  Fingerprint fingerprint;
  bool operator==(const Ack&) const = default;
};

using Frame =
    std::variant<Beacon, DailyReport, EmergencyBroadcast, SatelliteReport, Ack>;

enum class FrameTag : std::uint8_t {
  kBeacon = 0x01,
  kDailyReport = 0x02,
  kEmergencyBroadcast = 0x03,
  kSatelliteReport = 0x04,
  kAck = 0x05,
};

FrameTag frame_tag(const Frame& frame);
std::string_view frame_kind_name(const Frame& frame);
Fingerprint frame_fingerprint(const Frame& frame);

class CodecError : public std::runtime_error {
 public:
  enum class Kind { kValidation, kIntegrity, kFormat, kLength };

  CodecError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(CodecError::Kind kind);

/// Exact encoded size of a well-formed frame.
std::size_t encoded_size(const Frame& frame);

/// Serialize a frame, appending its CRC-16 trailer. Throws CodecError of kind
/// kValidation naming the offending field for malformed frames.
Bytes encode_frame(const Frame& frame, const QuantTable& specs);

/// Parse a frame. Total over all inputs: either returns a frame or throws
/// CodecError (kLength, kIntegrity or kFormat).
Frame decode_frame(std::span<const std::uint8_t> bytes, const QuantTable& specs);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

}  // namespace wban
