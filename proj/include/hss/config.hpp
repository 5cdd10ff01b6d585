#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hss/device.hpp"
#include "hss/engine.hpp"
#include "hss/trace.hpp"

namespace hss {

// Everything a run needs besides the trace, policy and seed.
struct SimConfig {
  HssConfig hss = preset("perf_opt");
  EngineKnobs knobs;

  void validate() const;
};

// INI text. A top-level `preset = <name>` picks the starting device set;
// [devices.N] sections override fields of device N or append it when N equals
// the current device count. Other sections: [agents.placement],
// [agents.migration], [engine]. Unknown sections or keys are errors.
SimConfig parse_config(std::istream& in);
SimConfig load_config(const std::filesystem::path& path);

// Sets one value as if it had appeared in the config file. `knob` is
// `section.key` (e.g. `engine.migration_queue_size`) or one of the short
// aliases from knob_names().
void set_knob(SimConfig& config, std::string_view knob, std::string_view value);

// Every name set_knob accepts, aliases first.
std::vector<std::string> knob_names();

// Workload profile for the generator: flat `key = value` lines, no sections.
// Keys mirror TraceProfile; request sizes are written `1:0.5,2:0.2,...`.
TraceProfile parse_profile(std::istream& in);
TraceProfile load_profile(const std::filesystem::path& path);

}  // namespace hss
