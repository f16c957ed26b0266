#pragma once

#include <algorithm>
#include <string>

#include "wban/engine.hpp"
#include "wban/scenario.hpp"

namespace fixtures {

inline wban::Scenario canned(const std::string& name) {
  return wban::load_scenario(std::string(WBAN_SCENARIO_DIR) + "/" + name + ".json");
}

inline std::size_t count(const wban::RunResult& r, const std::string& actor, const std::string& kind) {
  return static_cast<std::size_t>(std::count_if(r.trace.begin(), r.trace.end(), [&](const wban::TraceEvent& e) {
    return (actor.empty() || e.actor == actor) && e.kind == kind;
  }));
}

inline std::string purpose(const wban::TraceEvent& e) {
  auto it = e.annotations.find("purpose");
  return it == e.annotations.end() ? std::string{} : it->get<std::string>();
}

}  // namespace fixtures
