#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hss/agents.hpp"

namespace hss {

struct WriteBytes {
  std::uint64_t placement = 0;
  std::uint64_t eviction = 0;
  std::uint64_t migration = 0;

  std::uint64_t total() const { return placement + eviction + migration; }
};

struct SimReport {
  std::string policy;
  std::uint64_t requests = 0;
  double avg_latency_us = 0.0;
  double p99_latency_us = 0.0;
  double p9999_latency_us = 0.0;
  double iops = 0.0;
  double write_amplification = 1.0;
  std::uint64_t migration_count = 0;
  std::optional<double> normalized_avg_latency;

  std::vector<WriteBytes> bytes_written;  // per device
  std::uint64_t workload_write_bytes = 0;
  std::vector<std::uint64_t> migrations_into;  // per target device
  std::vector<std::uint64_t> migrations_out_of;
  std::uint64_t evictions = 0;
  std::uint64_t fast_path_migrations = 0;
  std::uint64_t dropped_nominations = 0;
  std::uint64_t free_moves = 0;  // Oracle only, outside WA

  std::uint64_t placement_decisions = 0;
  std::uint64_t placement_experiences = 0;
  std::uint64_t migration_nominations = 0;
  std::uint64_t migration_experiences = 0;

  std::vector<double> latencies_us;  // per request, trace order
  std::vector<LossPoint> placement_loss;
  std::vector<LossPoint> migration_loss;
  std::vector<std::string> invariant_violations;
};

// Nearest-rank percentile, p in (0, 100]: the value at 1-based rank
// min(N, floor(p * N / 100) + 1) of the sorted sample. NaN for an empty one.
double percentile_nearest_rank(std::vector<double> values, double p);

// Fills the summary fields (latency stats, IOPS, WA) from the raw counters.
// first_arrival_us / last_completion_us bound the IOPS window.
void summarize(SimReport& report, double first_arrival_us, double last_completion_us);

inline constexpr const char* kReportHeader =
    "policy,requests,avg_latency_us,p99_us,p9999_us,iops,wa,migrations,norm_avg_latency";

std::string report_row(const SimReport& r);
void write_report_csv(std::span<const SimReport> reports, std::ostream& out);

// request_index,loss
void write_loss_csv(std::span<const LossPoint> losses, std::ostream& out);

}  // namespace hss
