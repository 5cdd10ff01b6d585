#include "hss/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <string_view>
#include <unordered_set>

#include "hss/random.hpp"

namespace hss {

namespace {

template <typename T>
bool parse_uint(std::string_view field, T& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : InputError("trace line " + std::to_string(line) + ": " + what), line_(line) {}

TraceOrderError::TraceOrderError(std::size_t line, std::uint64_t previous, std::uint64_t current)
    : InputError("trace line " + std::to_string(line) + ": timestamp " + std::to_string(current) +
                 " precedes previous timestamp " + std::to_string(previous)),
      line_(line) {}

void TraceProfile::validate() const {
  if (!(read_fraction >= 0.0 && read_fraction <= 1.0))
    throw InputError("read_fraction must lie in [0,1]");
  if (!(mean_inter_request_us > 0.0)) throw InputError("mean_inter_request_us must be positive");
  if (footprint_pages == 0) throw InputError("footprint_pages must be positive");
  if (request_size_distribution.empty()) throw InputError("request size distribution is empty");
  double total = 0.0;
  for (const auto& [size, prob] : request_size_distribution) {
    if (size == 0) throw InputError("request sizes must be at least one page");
    if (!(prob >= 0.0)) throw InputError("request size probabilities must be non-negative");
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("request size probabilities must sum to 1");
  if (!(hot_fraction >= 0.0 && hot_fraction <= 1.0))
    throw InputError("hot_fraction must lie in [0,1]");
  if (!(hot_skew >= 0.0 && hot_skew <= 1.0)) throw InputError("hot_skew must lie in [0,1]");
  if (hot_skew > 0.0 && hot_fraction * static_cast<double>(footprint_pages) < 1.0)
    throw InputError("hot set is empty but hot_skew is positive");
  if (phase_length_requests && *phase_length_requests == 0)
    throw InputError("phase_length_requests must be positive");
}

std::uint64_t TraceProfile::hot_pages() const {
  return static_cast<std::uint64_t>(std::floor(hot_fraction * static_cast<double>(footprint_pages)));
}

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw TraceParseError(1, "missing header");
  ++line_no;
  if (trim_cr(line) != kTraceHeader)
    throw TraceParseError(1, std::string("expected header '") + kTraceHeader + "'");

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim_cr(line);
    if (row.empty()) continue;

    std::string_view fields[4];
    std::size_t count = 0;
    while (count < 4) {
      auto comma = row.find(',');
      fields[count++] = row.substr(0, comma);
      if (comma == std::string_view::npos) {
        row = {};
        break;
      }
      row.remove_prefix(comma + 1);
    }
    if (count != 4 || !row.empty()) throw TraceParseError(line_no, "expected 4 fields");

    IORequest req;
    if (!parse_uint(fields[0], req.arrival_us)) throw TraceParseError(line_no, "bad ts_us");
    if (fields[1] == "R") {
      req.op = Op::Read;
    } else if (fields[1] == "W") {
      req.op = Op::Write;
    } else {
      throw TraceParseError(line_no, "op must be R or W");
    }
    if (!parse_uint(fields[2], req.page_addr)) throw TraceParseError(line_no, "bad addr_page");
    if (!parse_uint(fields[3], req.size_pages) || req.size_pages == 0)
      throw TraceParseError(line_no, "bad size_pages");

    if (!trace.empty() && req.arrival_us < trace.back().arrival_us)
      throw TraceOrderError(line_no, trace.back().arrival_us, req.arrival_us);
    trace.push_back(req);
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file '" + path.string() + "'");
  return parse_trace(in);
}

void write_trace(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace)
    out << r.arrival_us << ',' << op_name(r.op) << ',' << r.page_addr << ',' << r.size_pages << '\n';
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trace file '" + path.string() + "'");
  write_trace(trace, out);
}

std::uint64_t address_span(std::span<const IORequest> trace) {
  std::uint64_t span = 0;
  for (const auto& r : trace) span = std::max<std::uint64_t>(span, r.page_addr + r.size_pages);
  return span;
}

std::uint64_t footprint_pages(std::span<const IORequest> trace) {
  std::unordered_set<PageAddr> pages;
  for (const auto& r : trace)
    for (std::uint32_t i = 0; i < r.size_pages; ++i) pages.insert(r.page_addr + i);
  return pages.size();
}

Trace merge_traces(std::span<const Trace> traces) {
  if (traces.empty()) throw InputError("merge_traces needs at least one trace");

  std::uint64_t stride = 0;
  std::size_t total = 0;
  for (const auto& t : traces) {
    stride = std::max(stride, address_span(t));
    total += t.size();
  }

  // (timestamp, trace index, position) orders the heap; the last two fields
  // make ties deterministic.
  using Cursor = std::tuple<std::uint64_t, std::size_t, std::size_t>;
  std::priority_queue<Cursor, std::vector<Cursor>, std::greater<>> heap;
  for (std::size_t i = 0; i < traces.size(); ++i)
    if (!traces[i].empty()) heap.emplace(traces[i][0].arrival_us, i, 0);

  Trace merged;
  merged.reserve(total);
  while (!heap.empty()) {
    auto [ts, i, pos] = heap.top();
    heap.pop();
    IORequest r = traces[i][pos];
    r.page_addr += static_cast<std::uint64_t>(i) * stride;
    merged.push_back(r);
    if (pos + 1 < traces[i].size()) {
      if (traces[i][pos + 1].arrival_us < ts)
        throw InputError("merge_traces input " + std::to_string(i) + " is not time-ordered");
      heap.emplace(traces[i][pos + 1].arrival_us, i, pos + 1);
    }
  }
  return merged;
}

Trace generate_trace(const TraceProfile& profile, std::uint64_t num_requests, std::uint64_t seed) {
  profile.validate();
  if (num_requests == 0) throw InputError("num_requests must be at least 1");

  Rng rng(seed);
  const std::uint64_t hot = profile.hot_pages();
  const std::uint64_t cold = profile.footprint_pages - hot;

  std::vector<double> cdf;
  double acc = 0.0;
  for (const auto& entry : profile.request_size_distribution) cdf.push_back(acc += entry.second);

  auto pick_start = [&](std::uint64_t begin, std::uint64_t len, std::uint32_t size) {
    // Requests stay inside their region whenever the region can hold them.
    const std::uint64_t slots = len >= size ? len - size + 1 : 1;
    return begin + rng.below(slots);
  };

  Trace trace;
  trace.reserve(num_requests);
  double clock = 0.0;
  for (std::uint64_t i = 0; i < num_requests; ++i) {
    if (i > 0) clock += rng.exponential(profile.mean_inter_request_us);

    bool inverted = false;
    if (profile.phase_length_requests) inverted = (i / *profile.phase_length_requests) % 2 == 1;
    const double read_fraction = inverted ? 1.0 - profile.read_fraction : profile.read_fraction;

    IORequest r;
    r.arrival_us = static_cast<std::uint64_t>(clock);
    r.op = rng.bernoulli(read_fraction) ? Op::Read : Op::Write;

    const double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    r.size_pages = profile.request_size_distribution[k].first;

    const bool to_hot = hot > 0 && (cold == 0 || rng.bernoulli(profile.hot_skew));
    r.page_addr = to_hot ? pick_start(0, hot, r.size_pages) : pick_start(hot, cold, r.size_pages);
    trace.push_back(r);
  }
  return trace;
}

}  // namespace hss
