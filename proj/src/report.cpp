#include "hss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace hss {

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw InputError("percentile must be in (0, 100]");
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<std::uint64_t>(values.size());
  // Work in hundredths of a percent so 99.99 is exact.
  const auto p10k = static_cast<std::uint64_t>(std::llround(p * 100.0));
  const std::uint64_t rank = std::min<std::uint64_t>(n, p10k * n / 10000 + 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

void summarize(SimReport& r, double first_arrival_us, double last_completion_us) {
  r.requests = r.latencies_us.size();
  if (r.requests == 0) {
    r.avg_latency_us = 0.0;
    r.p99_latency_us = 0.0;
    r.p9999_latency_us = 0.0;
    r.iops = 0.0;
  } else {
    const double sum = std::accumulate(r.latencies_us.begin(), r.latencies_us.end(), 0.0);
    r.avg_latency_us = sum / static_cast<double>(r.requests);
    r.p99_latency_us = percentile_nearest_rank(r.latencies_us, 99.0);
    r.p9999_latency_us = percentile_nearest_rank(r.latencies_us, 99.99);
    const double span_us = last_completion_us - first_arrival_us;
    r.iops = span_us > 0.0 ? static_cast<double>(r.requests) / (span_us * 1e-6) : 0.0;
  }
  std::uint64_t written = 0;
  for (const WriteBytes& w : r.bytes_written) written += w.total();
  r.write_amplification =
      r.workload_write_bytes == 0 ? 1.0 : static_cast<double>(written) / static_cast<double>(r.workload_write_bytes);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string report_row(const SimReport& r) {
  std::string row = r.policy;
  row += ',' + std::to_string(r.requests);
  row += ',' + fmt(r.avg_latency_us);
  row += ',' + fmt(r.p99_latency_us);
  row += ',' + fmt(r.p9999_latency_us);
  row += ',' + fmt(r.iops);
  row += ',' + fmt(r.write_amplification);
  row += ',' + std::to_string(r.migration_count);
  row += ',';
  if (r.normalized_avg_latency) row += fmt(*r.normalized_avg_latency);
  return row;
}

void write_report_csv(std::span<const SimReport> reports, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const SimReport& r : reports) out << report_row(r) << '\n';
}

void write_loss_csv(std::span<const LossPoint> losses, std::ostream& out) {
  out << "request_index,loss\n";
  char buf[64];
  for (const LossPoint& p : losses) {
    std::snprintf(buf, sizeof buf, "%.9g", p.loss);
    out << p.request_index << ',' << buf << '\n';
  }
}

}  // namespace hss
