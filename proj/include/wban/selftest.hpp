#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wban/codec.hpp"
#include "wban/rng.hpp"

namespace wban {

using CrcFunction = std::function<std::uint16_t(std::span<const std::uint8_t>)>;

/// Bit-at-a-time CRC-16/CCITT-FALSE, independent of the table-driven crc16.
std::uint16_t crc16_bitwise(std::span<const std::uint8_t> bytes);

/// Quantization table of `n_sensors` 8-bit channels over [0, 255].
QuantTable selftest_quant_table(std::size_t n_sensors);

/// Random well-formed frame of any kind, valid against `specs`.
Frame random_frame(Rng& rng, const QuantTable& specs);

struct SuiteResult {
  std::string name;
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::string first_failure;  // empty when the suite passed

  bool ok() const { return failed == 0; }
};

struct SelftestOptions {
  std::uint64_t seed = 20240601;
  std::size_t codec_cases = 500;
  // CRC under test. Replace to exercise the failure path.
  CrcFunction crc = [](std::span<const std::uint8_t> b) { return crc16(b); };
};

std::vector<SuiteResult> run_selftest(const SelftestOptions& options = {});

/// One line per suite; returns true when every suite passed.
bool print_selftest(std::ostream& out, const std::vector<SuiteResult>& results);

}  // namespace wban
