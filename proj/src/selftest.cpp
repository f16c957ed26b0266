#include "wban/selftest.hpp"

#include <ostream>
#include <sstream>

#include "wban/cluster_head.hpp"

namespace wban {

std::uint16_t crc16_bitwise(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (auto byte : bytes) {
    for (int bit = 7; bit >= 0; --bit) {
      const bool in = ((byte >> bit) & 1u) != 0;
      const bool top = (crc & 0x8000u) != 0;
      crc = static_cast<std::uint16_t>(crc << 1);
      if (in != top) crc ^= 0x1021;
    }
  }
  return crc;
}

QuantTable selftest_quant_table(std::size_t n_sensors) {
  return QuantTable(n_sensors, QuantSpec{0.0, 255.0, 8});
}

namespace {

std::vector<EventRecord> random_events(Rng& rng, const QuantTable& specs) {
  std::vector<EventRecord> events(static_cast<std::size_t>(rng.uniform_int(0, 12)));
  for (auto& e : events) {
    e.sensor_index = static_cast<std::uint8_t>(rng.uniform_int(0, static_cast<std::int64_t>(specs.size()) - 1));
    e.qvalue = static_cast<std::uint16_t>(rng.uniform_int(0, specs[e.sensor_index].full_scale()));
    e.t_offset_ms = static_cast<std::uint32_t>(rng.uniform_int(0, 0xFFFFFFFF));
  }
  return events;
}

}  // namespace

Frame random_frame(Rng& rng, const QuantTable& specs) {
  const Fingerprint fp{static_cast<std::uint64_t>(rng.uniform_int(1, INT64_MAX))};
  switch (rng.uniform_int(0, 4)) {
    case 0:
      return Beacon{fp};
    case 1: {
      std::vector<bool> bits(specs.size());
      for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = rng.bernoulli(0.8);
      return DailyReport{fp, SensorStatusField(std::move(bits)), random_events(rng, specs)};
    }
    case 2:
      return EmergencyBroadcast{fp, random_events(rng, specs)};
    case 3:
      return SatelliteReport{fp, random_events(rng, specs)};
    default:
      return Ack{fp};
  }
}

namespace {

class Suite {
 public:
  explicit Suite(std::string name) { result_.name = std::move(name); }

  void check(bool ok, const std::string& what) {
    if (ok) {
      ++result_.passed;
      return;
    }
    if (result_.failed++ == 0) result_.first_failure = what;
  }

  SuiteResult finish() { return std::move(result_); }

 private:
  SuiteResult result_;
};

std::uint16_t trailer(const Bytes& bytes) {
  return static_cast<std::uint16_t>((bytes[bytes.size() - 2] << 8) | bytes.back());
}

SuiteResult codec_round_trip(const SelftestOptions& opt) {
  Suite suite("codec round-trip");
  Rng rng(opt.seed);
  for (std::size_t c = 0; c < opt.codec_cases; ++c) {
    const auto specs = selftest_quant_table(static_cast<std::size_t>(rng.uniform_int(1, 16)));
    const Frame frame = random_frame(rng, specs);
    std::string label = "case " + std::to_string(c) + " (" + std::string(frame_kind_name(frame)) + ")";
    try {
      const Bytes bytes = encode_frame(frame, specs);
      suite.check(bytes.size() == encoded_size(frame), label + ": encoded size");
      suite.check(decode_frame(bytes, specs) == frame, label + ": decode(encode(f)) != f");
    } catch (const std::exception& e) {
      suite.check(false, label + ": " + e.what());
    }
  }
  return suite.finish();
}

SuiteResult crc_single_bit(const SelftestOptions& opt) {
  Suite suite("crc single-bit");
  const std::string check = "123456789";
  const std::span<const std::uint8_t> check_bytes(reinterpret_cast<const std::uint8_t*>(check.data()),
                                                  check.size());
  suite.check(opt.crc(check_bytes) == 0x29B1, "check value of \"123456789\" is not 0x29B1");

  Rng rng(opt.seed + 1);
  for (std::size_t c = 0; c < opt.codec_cases / 5; ++c) {
    const auto specs = selftest_quant_table(static_cast<std::size_t>(rng.uniform_int(1, 16)));
    const Frame frame = random_frame(rng, specs);
    const std::string label = "case " + std::to_string(c) + " (" + std::string(frame_kind_name(frame)) + ")";
    Bytes bytes = encode_frame(frame, specs);
    const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 2);
    suite.check(opt.crc(body) == crc16_bitwise(body), label + ": crc disagrees with bitwise reference");
    suite.check(opt.crc(body) == trailer(bytes), label + ": trailer does not match crc");

    bool all_detected = true;
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
      bytes[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
      const std::span<const std::uint8_t> flipped_body(bytes.data(), bytes.size() - 2);
      if (opt.crc(flipped_body) == trailer(bytes)) all_detected = false;
      try {
        decode_frame(bytes, specs);
        all_detected = false;
      } catch (const CodecError& e) {
        if (e.kind() != CodecError::Kind::kIntegrity) all_detected = false;
      }
      bytes[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    }
    suite.check(all_detected, label + ": single-bit flip not detected");
  }
  return suite.finish();
}

SuiteResult escalation(const SelftestOptions&) {
  Suite suite("escalation timeline");
  const TimerConfig cfg;
  const auto t = [](std::uint64_t ms) { return VirtualTime{ms}; };

  const auto dead = escalation_timeline(cfg, t(3 * 22100));
  const std::vector<std::pair<std::uint64_t, std::string>> expected = {
      {0, "send_personal"},    {0, "arm_timer"},       {100, "broadcast_nearby"},
      {100, "arm_timer"},      {2100, "send_satellite"}, {2100, "arm_timer"},
      {22100, "return_from_interrupt"}};
  for (std::size_t cycle = 0; cycle < 3; ++cycle) {
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const std::size_t idx = cycle * expected.size() + k;
      const auto want_t = expected[k].first + cycle * 22100;
      const bool ok = idx < dead.size() && dead[idx].time == t(want_t) && dead[idx].action == expected[k].second;
      suite.check(ok, "dead channels: expected " + expected[k].second + " at " + std::to_string(want_t) + " ms");
    }
  }

  const VirtualTime ack[] = {t(50)};
  const auto acked = escalation_timeline(cfg, t(22000), ack);
  bool no_later_stages = true;
  bool rfi_at_20050 = false;
  for (const auto& e : acked) {
    if (e.action == "return_from_interrupt") {
      rfi_at_20050 = e.time == t(20050);
      break;
    }
    if (e.action == "broadcast_nearby" || e.action == "send_satellite") no_later_stages = false;
  }
  suite.check(no_later_stages, "ack at 50 ms: stage 2/3 sends present");
  suite.check(rfi_at_20050, "ack at 50 ms: return from interrupt not at 20050 ms");
  return suite.finish();
}

SuiteResult classifier(const SelftestOptions&) {
  Suite suite("classifier boundaries");
  for (std::size_t n = 1; n <= 12; ++n) {
    for (std::size_t k = 0; k <= n; ++k) {
      const auto want = k == 0 ? PatientMode::kNormal : k <= 2 ? PatientMode::kSemiCritical : PatientMode::kCritical;
      suite.check(classify(k, n) == want,
                  "classify(" + std::to_string(k) + ", " + std::to_string(n) + ") != " + std::string(to_string(want)));
    }
    bool threw = false;
    try {
      classify(n + 1, n);
    } catch (const std::domain_error&) {
      threw = true;
    }
    suite.check(threw, "classify(" + std::to_string(n + 1) + ", " + std::to_string(n) + ") accepted");
  }
  return suite.finish();
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& options) {
  std::vector<SuiteResult> results;
  for (auto suite : {codec_round_trip, crc_single_bit, escalation, classifier}) {
    try {
      results.push_back(suite(options));
    } catch (const std::exception& e) {
      results.push_back({"internal", 0, 1, e.what()});
    }
  }
  return results;
}

bool print_selftest(std::ostream& out, const std::vector<SuiteResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    out << (r.ok() ? "PASS " : "FAIL ") << r.name << ": " << r.passed << "/" << (r.passed + r.failed)
        << " checks passed";
    if (!r.ok()) out << "; first failure: " << r.first_failure;
    out << '\n';
    all = all && r.ok();
  }
  return all;
}

}  // namespace wban
