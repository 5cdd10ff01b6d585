#include "hss/runner.hpp"

#include <cstdlib>
#include <functional>

namespace hss {

std::size_t worker_threads() {
  if (const char* env = std::getenv("HSS_SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw InputError("HSS_SIM_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SimReport> compare(std::span<const IORequest> trace, const SimConfig& config,
                               std::span<const PolicyKind> policies, std::uint64_t seed) {
  config.validate();
  std::vector<std::function<SimReport()>> jobs;
  for (PolicyKind p : policies) {
    if (p == PolicyKind::FastOnly) continue;
    jobs.push_back([&, p] { return run(trace, config.hss, p, seed, config.knobs); });
  }
  // The baseline is needed before any row can be normalized, so it runs on
  // its own ahead of the batch.
  const SimReport fast = run(trace, config.hss, PolicyKind::FastOnly, seed, config.knobs);
  std::vector<SimReport> others = run_parallel(jobs, worker_threads());

  std::vector<SimReport> out;
  std::size_t k = 0;
  for (PolicyKind p : policies) {
    SimReport r = p == PolicyKind::FastOnly ? fast : std::move(others[k++]);
    if (p == PolicyKind::FastOnly) r.normalized_avg_latency = 1.0;
    else if (fast.avg_latency_us > 0.0) r.normalized_avg_latency = r.avg_latency_us / fast.avg_latency_us;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SimReport> sweep(std::span<const IORequest> trace, const SimConfig& base, PolicyKind policy,
                             const std::string& knob, std::span<const std::string> values, std::uint64_t seed) {
  std::vector<SimConfig> configs;
  for (const std::string& v : values) {
    SimConfig c = base;
    set_knob(c, knob, v);
    c.validate();
    configs.push_back(std::move(c));
  }
  std::vector<std::function<SimReport()>> jobs;
  for (std::size_t i = 0; i < configs.size(); ++i)
    jobs.push_back([&, i] {
      SimReport r = run(trace, configs[i].hss, policy, seed, configs[i].knobs);
      r.policy = std::string(policy_name(policy)) + "@" + knob + "=" + values[i];
      return r;
    });
  return run_parallel(jobs, worker_threads());
}

}  // namespace hss
