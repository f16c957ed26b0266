#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "wban/selftest.hpp"

namespace wban {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUnreadable = 2,
  kExitInvalid = 3,
};

enum class ReportFormat { kTable, kStructured };

struct RunConfig {
  std::filesystem::path scenario;  // a file, or a directory of *.json files
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "out";
  int verbosity = 0;
  ReportFormat report = ReportFormat::kTable;
  unsigned jobs = 0;  // batch workers; 0 picks hardware concurrency
};

/// Writes <out>/trace.jsonl and <out>/metrics.json. A batch directory writes
/// one subdirectory per scenario file, named after its stem.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_validate(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

int cmd_selftest(std::ostream& out, const SelftestOptions& options = {});

}  // namespace wban
