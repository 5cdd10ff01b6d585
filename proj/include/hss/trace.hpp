#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hss/types.hpp"

namespace hss {

struct IORequest {
  std::uint64_t arrival_us = 0;
  Op op = Op::Read;
  PageAddr page_addr = 0;
  std::uint32_t size_pages = 1;

  bool operator==(const IORequest&) const = default;
};

using Trace = std::vector<IORequest>;

// Parameters of the synthetic workload generator. Accesses are split between
// a hot set (the first hot_fraction of the footprint) and the remaining cold
// pages.
struct TraceProfile {
  double read_fraction = 0.5;
  double mean_inter_request_us = 100.0;
  std::uint64_t footprint_pages = 1000;
  std::vector<std::pair<std::uint32_t, double>> request_size_distribution{{1, 1.0}};
  double hot_fraction = 0.2;
  double hot_skew = 0.8;
  std::optional<std::uint64_t> phase_length_requests;

  // Throws InputError naming the first violated constraint.
  void validate() const;

  std::uint64_t hot_pages() const;
};

class TraceParseError : public InputError {
 public:
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TraceOrderError : public InputError {
 public:
  TraceOrderError(std::size_t line, std::uint64_t previous, std::uint64_t current);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kTraceHeader = "ts_us,op,addr_page,size_pages";

// CSV with header `ts_us,op,addr_page,size_pages`. Line numbers in errors are
// 1-based and count the header.
Trace load_trace(const std::filesystem::path& path);
Trace parse_trace(std::istream& in);

void write_trace(const Trace& trace, std::ostream& out);
void write_trace(const Trace& trace, const std::filesystem::path& path);

// One past the highest page touched by the trace (0 for an empty trace).
std::uint64_t address_span(std::span<const IORequest> trace);

// Number of distinct pages touched.
std::uint64_t footprint_pages(std::span<const IORequest> trace);

// Time-ordered merge of independently recorded traces. Each input keeps its
// own page namespace: trace i is shifted by i * (largest address span).
Trace merge_traces(std::span<const Trace> traces);

Trace generate_trace(const TraceProfile& profile, std::uint64_t num_requests,
                     std::uint64_t seed);

}  // namespace hss
