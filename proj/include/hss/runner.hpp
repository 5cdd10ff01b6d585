#pragma once

#include <span>
#include <string>
#include <vector>

#include "hss/config.hpp"
#include "hss/policy.hpp"
#include "hss/report.hpp"

namespace hss {

// Worker count for batches of independent runs: HSS_SIM_THREADS when set,
// otherwise the hardware concurrency. Always at least 1.
std::size_t worker_threads();

// Runs `jobs` independent tasks on up to `threads` workers. Results come back
// in job order, so output does not depend on scheduling. The first exception
// thrown by a job is rethrown after all workers stop.
template <class Job>
auto run_parallel(const std::vector<Job>& jobs, std::size_t threads) -> std::vector<decltype(jobs.front()())>;

// Fast-Only first, then every listed policy on the same trace and seed. Each
// report carries its avg latency divided by Fast-Only's; a listed fast-only
// gets exactly 1.
std::vector<SimReport> compare(std::span<const IORequest> trace, const SimConfig& config,
                               std::span<const PolicyKind> policies, std::uint64_t seed);

// One run per value of `knob` (see knob_names()). Rows are labelled
// `<policy>@<knob>=<value>`. Bad knob names or values fail before any run.
std::vector<SimReport> sweep(std::span<const IORequest> trace, const SimConfig& base, PolicyKind policy,
                             const std::string& knob, std::span<const std::string> values, std::uint64_t seed);

}  // namespace hss

#include "hss/runner_impl.hpp"
