#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hss/agents.hpp"
#include "hss/device.hpp"
#include "hss/policy.hpp"
#include "hss/report.hpp"
#include "hss/rl.hpp"
#include "hss/trace.hpp"

namespace hss {

// Tunables of one run. Defaults follow the reference configuration.
struct EngineKnobs {
  std::size_t migration_queue_size = 10;  // 0 disables migration
  MigrationRewardConfig reward;
  std::size_t scan_window = 16;  // pages examined per scan
  bool scan_per_request = true;
  // Idle lookahead; unset means twice the fast device's 1-page read time.
  std::optional<double> idle_window_us;
  bool low_priority_fast_path = true;
  double fast_capacity_fraction = 0.1;  // used for devices without a capacity
  CdeThresholds cde;
  rl::Hyperparameters placement = rl::Hyperparameters::placement_defaults();
  rl::Hyperparameters migration = rl::Hyperparameters::migration_defaults();
  bool training_enabled = true;
  bool check_invariants = false;

  void validate() const;
};

// Event kinds in tie-break priority order.
enum class EventKind { RequestArrival, RequestComplete, ScanTick, MigrationStep, TrainTick, SyncTick };

const char* event_kind_name(EventKind kind);

// One line of the debug event log. Device operations appear as
// `io:<R|W>:<cause>` records carrying their service time; request completions
// carry the request latency. `request` is the trace index, -1 for background
// work.
struct EventRecord {
  double time_us = 0.0;
  std::string kind;
  std::int64_t request = -1;
  PageAddr page = 0;
  std::optional<DeviceIndex> device;
  std::uint32_t pages = 0;
  double latency_us = 0.0;
};

// time_us,kind,request,page,device,pages,latency_us
void write_event_log(std::span<const EventRecord> events, std::ostream& out);

// Smallest 1-page service time over every device and operation; latencies
// fed to the agents are expressed in multiples of it.
double reference_latency(const HssConfig& hss);

// Capacities the engine actually uses for `policy` on `trace`.
HssConfig resolve_capacities(const HssConfig& hss, std::span<const IORequest> trace, PolicyKind policy,
                             double fast_fraction);

struct RunOutput {
  SimReport report;
  std::vector<EventRecord> events;  // only when requested
};

// Replays the trace under the policy. Deterministic in (trace, hss, policy,
// seed, knobs).
RunOutput simulate(std::span<const IORequest> trace, const HssConfig& hss, PolicyKind policy,
                   std::uint64_t seed, const EngineKnobs& knobs, bool record_events = false);

inline SimReport run(std::span<const IORequest> trace, const HssConfig& hss, PolicyKind policy,
                     std::uint64_t seed, const EngineKnobs& knobs = {}) {
  return simulate(trace, hss, policy, seed, knobs).report;
}

}  // namespace hss
