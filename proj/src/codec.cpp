#include "wban/codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace wban {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    auto reg = static_cast<std::uint16_t>(i << 8);
    for (int bit = 0; bit < 8; ++bit) {
      reg = (reg & 0x8000) ? static_cast<std::uint16_t>((reg << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(reg << 1);
    }
    table[i] = reg;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

constexpr std::size_t kTagSize = 1;
constexpr std::size_t kCrcSize = 2;
constexpr std::size_t kFingerprintSize = 8;
constexpr std::size_t kEventSize = 7;
constexpr std::size_t kMaxEvents = 0xFFFF;
constexpr std::size_t kMaxSensors = 0xFF;

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw CodecError(CodecError::Kind::kValidation, field + ": " + why);
}

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }

  Bytes finish() && {
    u16(crc16(out_));
    return std::move(out_);
  }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> body) : body_(body) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (auto byte : b) v = (v << 8) | byte;
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (auto byte : b) v = (v << 8) | byte;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (body_.size() - pos_ < n) {
      throw CodecError(CodecError::Kind::kLength,
                       "truncated frame: need " + std::to_string(n) +
                           " more bytes at offset " + std::to_string(pos_));
    }
    auto out = body_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void expect_end() const {
    if (pos_ != body_.size()) {
      throw CodecError(CodecError::Kind::kLength,
                       std::to_string(body_.size() - pos_) +
                           " trailing bytes after frame body");
    }
  }

 private:
  std::span<const std::uint8_t> body_;
  std::size_t pos_ = 0;
};

void check_fingerprint(const Fingerprint& fp) {
  if (fp.id == 0) invalid("fingerprint", "zero is reserved for unassigned");
}

void check_events(const std::vector<EventRecord>& events,
                  const QuantTable& specs) {
  if (events.size() > kMaxEvents) {
    invalid("events", "count " + std::to_string(events.size()) +
                          " exceeds 16-bit limit");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    const std::string field = "events[" + std::to_string(i) + "]";
    if (ev.sensor_index >= specs.size()) {
      invalid(field + ".sensor_index",
              std::to_string(ev.sensor_index) + " >= sensor count " +
                  std::to_string(specs.size()));
    }
    if (ev.qvalue > specs[ev.sensor_index].full_scale()) {
      invalid(field + ".qvalue",
              std::to_string(ev.qvalue) + " overflows " +
                  std::to_string(specs[ev.sensor_index].bits) + "-bit width");
    }
  }
}

void write_events(Writer& w, const std::vector<EventRecord>& events) {
  w.u16(static_cast<std::uint16_t>(events.size()));
  for (const auto& ev : events) {
    w.u8(ev.sensor_index);
    w.u16(ev.qvalue);
    w.u32(ev.t_offset_ms);
  }
}

[[noreturn]] void bad_format(const std::string& what) {
  throw CodecError(CodecError::Kind::kFormat, what);
}

Fingerprint read_fingerprint(Reader& r) {
  Fingerprint fp{r.u64()};
  if (fp.id == 0) bad_format("zero fingerprint");
  return fp;
}

std::vector<EventRecord> read_events(Reader& r, const QuantTable& specs) {
  const std::size_t count = r.u16();
  std::vector<EventRecord> events;
  events.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    EventRecord ev;
    ev.sensor_index = r.u8();
    ev.qvalue = r.u16();
    ev.t_offset_ms = r.u32();
    if (ev.sensor_index >= specs.size())
      bad_format("event sensor index " + std::to_string(ev.sensor_index) +
                 " out of range");
    if (ev.qvalue > specs[ev.sensor_index].full_scale())
      bad_format("event qvalue " + std::to_string(ev.qvalue) +
                 " has bits set above sensor width");
    events.push_back(ev);
  }
  return events;
}

std::size_t events_size(const std::vector<EventRecord>& events) {
  return 2 + kEventSize * events.size();
}

}  // namespace

void QuantSpec::validate() const {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("QuantSpec requires finite lo < hi");
  if (bits < 1 || bits > 16)
    throw std::invalid_argument("QuantSpec bits must be in [1, 16], got " +
                                std::to_string(bits));
}

std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
  std::uint16_t reg = 0xFFFF;
  for (auto byte : bytes) {
    reg = static_cast<std::uint16_t>((reg << 8) ^
                                     kCrcTable[((reg >> 8) ^ byte) & 0xFF]);
  }
  return reg;
}

std::uint32_t quantize(double value, const QuantSpec& spec) {
  const double full = spec.full_scale();
  if (std::isnan(value)) value = spec.lo;
  const double clamped = std::clamp(value, spec.lo, spec.hi);
  const double scaled = (clamped - spec.lo) / (spec.hi - spec.lo) * full;
  // std::round breaks ties away from zero.
  return static_cast<std::uint32_t>(std::clamp(std::round(scaled), 0.0, full));
}

double dequantize(std::uint32_t q, const QuantSpec& spec) {
  if (q > spec.full_scale()) {
    throw std::out_of_range("code " + std::to_string(q) + " exceeds " +
                            std::to_string(spec.bits) + "-bit full scale");
  }
  return spec.lo + static_cast<double>(q) / spec.full_scale() * (spec.hi - spec.lo);
}

std::size_t SensorStatusField::conflict_count() const {
  std::size_t n = 0;
  for (bool b : bits_) n += b ? 0 : 1;
  return n;
}

std::string SensorStatusField::to_string() const {
  std::string out;
  out.reserve(bits_.size());
  for (bool b : bits_) out.push_back(b ? '1' : '0');
  return out;
}

SensorStatusField SensorStatusField::parse(std::string_view text) {
  std::vector<bool> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("status field must contain only 0/1");
    bits.push_back(c == '1');
  }
  return SensorStatusField(std::move(bits));
}

SensorStatusField build_status_field(const std::vector<bool>& verdicts) {
  return SensorStatusField(verdicts);
}

FrameTag frame_tag(const Frame& frame) {
  static constexpr FrameTag tags[] = {
      FrameTag::kBeacon, FrameTag::kDailyReport, FrameTag::kEmergencyBroadcast,
      FrameTag::kSatelliteReport, FrameTag::kAck};
  return tags[frame.index()];
}

std::string_view frame_kind_name(const Frame& frame) {
  static constexpr std::string_view names[] = {
      "beacon", "daily_report", "emergency_broadcast", "satellite_report",
      "ack"};
  return names[frame.index()];
}

Fingerprint frame_fingerprint(const Frame& frame) {
  return std::visit([](const auto& f) { return f.fingerprint; }, frame);
}

std::string_view to_string(CodecError::Kind kind) {
  switch (kind) {
    case CodecError::Kind::kValidation: return "validation";
    case CodecError::Kind::kIntegrity: return "integrity";
    case CodecError::Kind::kFormat: return "format";
    case CodecError::Kind::kLength: return "length";
  }
  return "unknown";
}

std::size_t encoded_size(const Frame& frame) {
  struct {
    std::size_t operator()(const Beacon&) const { return kFingerprintSize; }
    std::size_t operator()(const Ack&) const { return kFingerprintSize; }
    std::size_t operator()(const DailyReport& f) const {
      return kFingerprintSize + 1 + (f.status.size() + 7) / 8 +
             events_size(f.events);
    }
    std::size_t operator()(const EmergencyBroadcast& f) const {
      return 1 + kFingerprintSize + events_size(f.events);
    }
    std::size_t operator()(const SatelliteReport& f) const {
      return kFingerprintSize + events_size(f.events);
    }
  } body_size;
  return kTagSize + std::visit(body_size, frame) + kCrcSize;
}

Bytes encode_frame(const Frame& frame, const QuantTable& specs) {
  Writer w(encoded_size(frame));
  w.u8(static_cast<std::uint8_t>(frame_tag(frame)));

  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        check_fingerprint(f.fingerprint);
        if constexpr (std::is_same_v<T, Beacon> || std::is_same_v<T, Ack>) {
          w.u64(f.fingerprint.id);
        } else if constexpr (std::is_same_v<T, DailyReport>) {
          if (f.status.size() != specs.size()) {
            invalid("status", "length " + std::to_string(f.status.size()) +
                                  " != sensor count " +
                                  std::to_string(specs.size()));
          }
          if (f.status.size() > kMaxSensors)
            invalid("status", "more than 255 sensors");
          check_events(f.events, specs);
          w.u64(f.fingerprint.id);
          w.u8(static_cast<std::uint8_t>(f.status.size()));
          std::uint8_t acc = 0;
          for (std::size_t i = 0; i < f.status.size(); ++i) {
            if (f.status.agrees(i)) acc |= static_cast<std::uint8_t>(0x80u >> (i % 8));
            if (i % 8 == 7) {
              w.u8(acc);
              acc = 0;
            }
          }
          if (f.status.size() % 8 != 0) w.u8(acc);
          write_events(w, f.events);
        } else if constexpr (std::is_same_v<T, EmergencyBroadcast>) {
          check_events(f.events, specs);
          w.u8(kEmergencyMarker);
          w.u64(f.fingerprint.id);
          write_events(w, f.events);
        } else {
          check_events(f.events, specs);
          w.u64(f.fingerprint.id);
          write_events(w, f.events);
        }
      },
      frame);

  return std::move(w).finish();
}

Frame decode_frame(std::span<const std::uint8_t> bytes, const QuantTable& specs) {
  if (bytes.size() < kTagSize + kCrcSize) {
    throw CodecError(CodecError::Kind::kLength,
                     "frame of " + std::to_string(bytes.size()) +
                         " bytes is shorter than tag + CRC");
  }
  const auto covered = bytes.first(bytes.size() - kCrcSize);
  const auto stored = static_cast<std::uint16_t>(
      (bytes[bytes.size() - 2] << 8) | bytes[bytes.size() - 1]);
  const auto computed = crc16(covered);
  if (stored != computed) {
    char msg[64];
    std::snprintf(msg, sizeof msg, "CRC mismatch: stored 0x%04X, computed 0x%04X",
                  stored, computed);
    throw CodecError(CodecError::Kind::kIntegrity, msg);
  }

  Reader r(covered.subspan(kTagSize));
  Frame out;
  switch (static_cast<FrameTag>(covered[0])) {
    case FrameTag::kBeacon:
      out = Beacon{read_fingerprint(r)};
      break;
    case FrameTag::kAck:
      out = Ack{read_fingerprint(r)};
      break;
    case FrameTag::kDailyReport: {
      DailyReport f;
      f.fingerprint = read_fingerprint(r);
      const std::size_t n = r.u8();
      if (n != specs.size()) {
        bad_format("report carries " + std::to_string(n) +
                   " sensors, expected " + std::to_string(specs.size()));
      }
      auto packed = r.take((n + 7) / 8);
      std::vector<bool> bits(n);
      for (std::size_t i = 0; i < n; ++i)
        bits[i] = (packed[i / 8] & (0x80u >> (i % 8))) != 0;
      if (n % 8 != 0) {
        const auto pad_mask = static_cast<std::uint8_t>(0xFFu >> (n % 8));
        if (packed.back() & pad_mask) bad_format("nonzero status padding bits");
      }
      f.status = SensorStatusField(std::move(bits));
      f.events = read_events(r, specs);
      out = std::move(f);
      break;
    }
    case FrameTag::kEmergencyBroadcast: {
      EmergencyBroadcast f;
      const auto marker = r.u8();
      if (marker != kEmergencyMarker) {
        char msg[48];
        std::snprintf(msg, sizeof msg, "bad emergency marker 0x%02X", marker);
        bad_format(msg);
      }
      f.fingerprint = read_fingerprint(r);
      f.events = read_events(r, specs);
      out = std::move(f);
      break;
    }
    case FrameTag::kSatelliteReport: {
      SatelliteReport f;
      f.fingerprint = read_fingerprint(r);
      f.events = read_events(r, specs);
      out = std::move(f);
      break;
    }
    default: {
      char msg[32];
      std::snprintf(msg, sizeof msg, "unknown frame tag 0x%02X", covered[0]);
      bad_format(msg);
    }
  }
  r.expect_end();
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw std::invalid_argument("bad hex digit");
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
  return out;
}

}  // namespace wban
