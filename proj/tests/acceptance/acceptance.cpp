// Acceptance run: one PASS/FAIL line per criterion, numbered 1-10.
// Exit status is the number of failed criteria. Arguments, if any, pick the
// criteria to run (4 and 5 share their runs, as do 7 and the traces before it).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/belady.hpp"
#include "../support/oracles.hpp"
#include "../support/rl_fixtures.hpp"
#include "hss/engine.hpp"
#include "hss/runner.hpp"

using namespace hss;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void note(const std::string& text) {
  std::printf("    %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class T>
std::vector<T> for_seeds(int seeds, const std::function<T(std::uint64_t)>& job) {
  std::vector<std::function<T()>> jobs;
  for (int s = 1; s <= seeds; ++s) jobs.push_back([job, s] { return job(static_cast<std::uint64_t>(s)); });
  return run_parallel(jobs, worker_threads());
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double loss_mean(const std::vector<LossPoint>& loss, std::uint64_t from, std::uint64_t to) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const LossPoint& p : loss)
    if (p.request_index >= from && p.request_index < to) {
      sum += p.loss;
      ++n;
    }
  return n ? sum / n : std::nan("");
}

const std::vector<std::pair<std::uint32_t, double>> kSizes{{1, 0.5}, {2, 0.2}, {4, 0.2}, {8, 0.1}};

// 80% of accesses on 20% of the footprint; the fast device is a tenth of it.
TraceProfile convergence_profile() {
  TraceProfile p;
  p.footprint_pages = 2000;
  p.hot_fraction = 0.2;
  p.hot_skew = 0.8;
  p.request_size_distribution = kSizes;
  return p;
}

TraceProfile read_skewed_profile(double hot_skew = 0.65) {
  TraceProfile p;
  p.read_fraction = 0.8;
  p.footprint_pages = 2000;
  p.hot_fraction = 0.05;
  p.hot_skew = hot_skew;
  p.request_size_distribution = kSizes;
  return p;
}

constexpr std::uint64_t kTraceSeedBase = 1000;

// ---------------------------------------------------------------------------

void rl_math() {
  const auto start = Clock::now();
  Rng rng(1);
  double worst_grad = 0.0;
  int grad_draws = 0;
  for (std::size_t atoms : {1u, 51u}) {
    for (int draw = 0; draw < 100; ++draw) {
      rl::Hyperparameters hp = fixture::hyper(atoms);
      hp.gamma = rng.uniform();
      const std::size_t actions = 2 + rng.below(3);
      const rl::Network train = rl::Network::random(actions, hp.support(), rng);
      const rl::Network infer = rl::Network::random(actions, hp.support(), rng);
      const auto batch = fixture::random_batch(8, actions, rng, 0.5);
      const auto targets = rl::compute_targets(train, infer, batch, hp);
      std::vector<double> grad;
      rl::loss_and_gradient(train, batch, targets, &grad);
      worst_grad = std::max(worst_grad, oracle::relative_error(grad, oracle::numeric_gradient(train, batch, targets)));
      ++grad_draws;
    }
  }
  double worst_proj = 0.0, worst_mass = 0.0;
  int proj_draws = 0;
  for (std::size_t atoms : {2u, 3u, 5u, 51u}) {
    const rl::Support support{atoms, -1.0, 1.0};
    for (int draw = 0; draw < 1000; ++draw) {
      std::vector<double> dist(atoms);
      for (double& d : dist) d = rng.uniform();
      const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
      for (double& d : dist) d /= total;
      const double reward = rng.uniform(-1.5, 1.5);
      const double gamma = rng.uniform();
      const auto got = rl::c51_project(reward, gamma, dist, support);
      const auto want = oracle::project(reward, gamma, dist, -1.0, 1.0);
      for (std::size_t j = 0; j < atoms; ++j) worst_proj = std::max(worst_proj, std::abs(got[j] - want[j]));
      worst_mass = std::max(worst_mass, std::abs(std::accumulate(got.begin(), got.end(), 0.0) - 1.0));
      ++proj_draws;
    }
  }
  const double secs = seconds_since(start);
  const bool pass = worst_grad < 1e-4 && worst_proj < 1e-9 && worst_mass < 1e-9 && secs < 60.0;
  verdict(1, pass,
          std::to_string(grad_draws) + " gradient draws, worst rel err " + fmt("%.2e", worst_grad) + "; " +
              std::to_string(proj_draws) + " projections, worst diff " + fmt("%.2e", worst_proj) + ", mass err " +
              fmt("%.2e", worst_mass) + "; " + fmt("%.1f s", secs));
}

void convergence() {
  const auto start = Clock::now();
  const auto ratios = for_seeds<double>(10, [](std::uint64_t s) {
    const Trace t = generate_trace(convergence_profile(), 20000, kTraceSeedBase + s);
    const SimReport r = run(t, preset("perf_opt"), PolicyKind::Harmonia, s);
    return loss_mean(r.placement_loss, 5000, 6000) / loss_mean(r.placement_loss, 0, 1000);
  });
  const auto secs = seconds_since(start);
  const int ok = static_cast<int>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r < 0.5; }));
  std::string per_seed;
  for (double r : ratios) per_seed += fmt(" %.2f", r);
  verdict(2, ok >= 8 && secs < 300.0,
          std::to_string(ok) + "/10 seeds with loss[5000,6000) < 0.5 * loss[0,1000); " + fmt("%.1f s", secs));
  note("ratios:" + per_seed);
}

void adaptability() {
  static constexpr std::uint64_t kPhase = 5000, kRequests = 40000, kConverged = 10000;
  struct SeedResult {
    bool ok = true;
    double worst = 0.0;  // largest post/pre ratio seen
  };
  const auto results = for_seeds<SeedResult>(10, [](std::uint64_t s) {
    TraceProfile p = convergence_profile();
    p.phase_length_requests = kPhase;
    const Trace t = generate_trace(p, kRequests, kTraceSeedBase + s);
    const SimReport r = run(t, preset("perf_opt"), PolicyKind::Harmonia, s);
    SeedResult out;
    for (std::uint64_t b = kConverged; b < kRequests; b += kPhase) {
      const double before = loss_mean(r.placement_loss, b - 1000, b);
      const double after = loss_mean(r.placement_loss, b + 750, b + 1000);
      out.worst = std::max(out.worst, after / before);
      if (!(after <= 2.0 * before)) out.ok = false;
    }
    return out;
  });
  const int ok = static_cast<int>(std::count_if(results.begin(), results.end(), [](const SeedResult& r) { return r.ok; }));
  std::string per_seed;
  for (const auto& r : results) per_seed += fmt(" %.2f", r.worst);
  verdict(3, ok >= 8,
          std::to_string(ok) + "/10 seeds recover to <= 2x the pre-boundary loss within 1000 requests at every "
                               "boundary from request 10000 on");
  note("worst post/pre ratio per seed:" + per_seed);
}

struct SkewedRun {
  double harmonia = 0.0, nocoord = 0.0, sibyl = 0.0;
  std::uint64_t harmonia_into_fast = 0, sibyl_migrations = 0;
  bool fast_only_lowest = true, wa_ok = true;
};

std::vector<SkewedRun> skewed_runs(double hot_skew) {
  return for_seeds<SkewedRun>(10, [hot_skew](std::uint64_t s) {
    const Trace t = generate_trace(read_skewed_profile(hot_skew), 20000, kTraceSeedBase + s);
    SimConfig cfg;
    const std::vector<PolicyKind> pols{PolicyKind::FastOnly, PolicyKind::Harmonia, PolicyKind::HarmoniaNoCoord, PolicyKind::Sibyl};
    const auto rows = compare(t, cfg, pols, s);
    SkewedRun out;
    const double fast = rows[0].avg_latency_us;
    for (const SimReport& r : rows) {
      if (r.avg_latency_us < fast) out.fast_only_lowest = false;
      if (r.write_amplification < 1.0) out.wa_ok = false;
    }
    out.harmonia = *rows[1].normalized_avg_latency;
    out.nocoord = *rows[2].normalized_avg_latency;
    out.sibyl = *rows[3].normalized_avg_latency;
    out.harmonia_into_fast = rows[1].migrations_into[0];
    out.sibyl_migrations = rows[3].migration_count;
    return out;
  });
}

bool all_fast_only_lowest = true;
bool all_wa_at_least_one = true;

void coordination_and_prefetch() {
  const auto runs = skewed_runs(0.65);
  std::vector<double> h, n, s;
  std::uint64_t into_fast = 0, sibyl_moves = 0;
  for (const auto& r : runs) {
    h.push_back(r.harmonia);
    n.push_back(r.nocoord);
    s.push_back(r.sibyl);
    into_fast += r.harmonia_into_fast;
    sibyl_moves += r.sibyl_migrations;
    all_fast_only_lowest &= r.fast_only_lowest;
    all_wa_at_least_one &= r.wa_ok;
  }
  verdict(4, mean(h) < mean(n) && mean(h) < mean(s),
          "mean normalized latency: harmonia " + fmt("%.2f", mean(h)) + ", no-coordination " + fmt("%.2f", mean(n)) +
              ", sibyl " + fmt("%.2f", mean(s)));
  verdict(5, into_fast > 0 && sibyl_moves == 0,
          "harmonia migrations into device 0: " + std::to_string(into_fast) +
              "; sibyl migrations: " + std::to_string(sibyl_moves));

  // Same comparison with a heavier hot set, reported for context only.
  const auto heavy = skewed_runs(0.8);
  h.clear(), n.clear(), s.clear();
  for (const auto& r : heavy) {
    h.push_back(r.harmonia);
    n.push_back(r.nocoord);
    s.push_back(r.sibyl);
    all_fast_only_lowest &= r.fast_only_lowest;
    all_wa_at_least_one &= r.wa_ok;
  }
  note("info, hot set taking 80% of accesses: harmonia " + fmt("%.2f", mean(h)) + ", no-coordination " +
       fmt("%.2f", mean(n)) + ", sibyl " + fmt("%.2f", mean(s)));
}

void queue_sensitivity() {
  const std::vector<std::size_t> sizes{0, 1, 5, 10, 20, 50};
  struct Point {
    std::vector<double> latency;
    std::uint64_t moves_at_zero = 0;
  };
  const auto per_seed = for_seeds<Point>(10, [&sizes](std::uint64_t s) {
    const Trace t = generate_trace(read_skewed_profile(), 20000, kTraceSeedBase + s);
    Point p;
    for (std::size_t q : sizes) {
      EngineKnobs k;
      k.migration_queue_size = q;
      const SimReport r = run(t, preset("perf_opt"), PolicyKind::Harmonia, s, k);
      p.latency.push_back(r.avg_latency_us);
      if (q == 0) p.moves_at_zero = r.migration_count;
      if (r.write_amplification < 1.0) all_wa_at_least_one = false;
    }
    return p;
  });
  std::vector<double> avg(sizes.size(), 0.0);
  std::uint64_t moves_at_zero = 0;
  for (const Point& p : per_seed) {
    for (std::size_t i = 0; i < sizes.size(); ++i) avg[i] += p.latency[i] / per_seed.size();
    moves_at_zero += p.moves_at_zero;
  }
  const double worst = *std::max_element(avg.begin(), avg.end());
  const bool zero_is_worst = avg[0] >= worst * (1.0 - 1e-12);
  std::string line;
  for (std::size_t i = 0; i < sizes.size(); ++i) line += " q" + std::to_string(sizes[i]) + "=" + fmt("%.1f", avg[i]);
  verdict(6, moves_at_zero == 0 && zero_is_worst && avg[3] <= avg[0],
          "mean avg latency (us):" + line + "; migrations at q0: " + std::to_string(moves_at_zero));
}

Trace tiny_trace(Rng& rng, bool single_page) {
  const std::uint64_t footprint = 2 + rng.below(7);  // 2..8 pages
  const std::uint64_t n = 5 + rng.below(36);          // up to 40 requests
  Trace t;
  std::uint64_t now = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    now += rng.below(200);
    const std::uint32_t size = single_page || rng.bernoulli(0.7) ? 1 : 2;
    const PageAddr page = rng.below(footprint - size + 1);
    t.push_back({now, rng.bernoulli(0.6) ? Op::Read : Op::Write, page, size});
  }
  return t;
}

// Traces on which some policy beats Fast-Only or some online policy beats
// the Oracle.
int ordering_violations(Rng& rng, int traces, bool single_page) {
  int bad = 0;
  for (int trial = 0; trial < traces; ++trial) {
    const Trace t = tiny_trace(rng, single_page);
    const double fast = run(t, preset("perf_opt"), PolicyKind::FastOnly, trial).avg_latency_us;
    const double orc = run(t, preset("perf_opt"), PolicyKind::Oracle, trial).avg_latency_us;
    bool ok = fast <= orc + 1e-9;
    for (PolicyKind p : all_policies()) {
      if (p == PolicyKind::FastOnly || p == PolicyKind::Oracle) continue;
      const double v = run(t, preset("perf_opt"), p, trial).avg_latency_us;
      ok = ok && v + 1e-9 >= fast && v + 1e-9 >= orc;
    }
    bad += !ok;
  }
  return bad;
}

void ordering() {
  // Exhaustive check of the Oracle's admission rule against every demand
  // schedule over the same accesses.
  Rng rng(7);
  int admission_mismatch = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int footprint = 2 + static_cast<int>(rng.below(7));
    const int capacity = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(36));
    std::vector<int> acc;
    for (int i = 0; i < n; ++i) acc.push_back(static_cast<int>(rng.below(footprint)));
    if (fixture::belady_misses(acc, capacity) != oracle::min_misses(acc, capacity)) ++admission_mismatch;
  }

  // The exhaustive check covers single-page accesses, so the latency
  // ordering is held to single-page tiny traces.
  const int tiny_traces = 500;
  const int tiny_violations = ordering_violations(rng, tiny_traces, true);
  verdict(7, all_fast_only_lowest && tiny_violations == 0 && admission_mismatch == 0,
          std::string("fast-only lowest on every compared trace: ") + (all_fast_only_lowest ? "yes" : "no") +
              "; admission rule off the exhaustive optimum: " + std::to_string(admission_mismatch) + "/300" +
              "; single-page tiny traces with an ordering violation: " + std::to_string(tiny_violations) + "/" +
              std::to_string(tiny_traces));
  // With 2-page requests a half hit still waits on the slow device, and
  // fewest misses is no longer fewest microseconds.
  note("info, tiny traces with 2-page requests mixed in: " + std::to_string(ordering_violations(rng, 500, false)) +
       "/500 with an ordering violation");
}

void write_amplification() {
  auto wa_for = [](double read_fraction) {
    const auto was = for_seeds<double>(10, [read_fraction](std::uint64_t s) {
      TraceProfile p = read_skewed_profile();
      p.read_fraction = read_fraction;
      return run(generate_trace(p, 20000, kTraceSeedBase + s), preset("perf_opt"), PolicyKind::Harmonia, s)
          .write_amplification;
    });
    for (double w : was)
      if (w < 1.0) all_wa_at_least_one = false;
    return mean(was);
  };
  const double write_heavy = wa_for(0.2), read_heavy = wa_for(0.8);
  verdict(8, all_wa_at_least_one && write_heavy < read_heavy,
          "mean WA at read fraction 0.2: " + fmt("%.3f", write_heavy) + ", at 0.8: " + fmt("%.3f", read_heavy) +
              "; every run WA >= 1: " + (all_wa_at_least_one ? "yes" : "no"));
}

void determinism() {
  const Trace t = generate_trace(read_skewed_profile(), 20000, kTraceSeedBase + 1);
  int differing = 0;
  for (PolicyKind p : all_policies()) {
    std::ostringstream csv_a, csv_b, log_a, log_b;
    const RunOutput a = simulate(t, preset("perf_opt"), p, 5, {}, true);
    const RunOutput b = simulate(t, preset("perf_opt"), p, 5, {}, true);
    write_report_csv(std::span(&a.report, 1), csv_a);
    write_report_csv(std::span(&b.report, 1), csv_b);
    write_event_log(a.events, log_a);
    write_event_log(b.events, log_b);
    if (csv_a.str() != csv_b.str() || log_a.str() != log_b.str()) ++differing;
  }
  verdict(9, differing == 0,
          std::to_string(differing) + " of " + std::to_string(all_policies().size()) +
              " policies gave differing report CSV or event log across two identical runs");
}

void invariants() {
  const auto start = Clock::now();
  const std::vector<std::string> presets{"perf_opt", "cost_opt", "pmem_hss", "tri_hss", "quad_hss"};
  struct Outcome {
    std::size_t violations = 0;
    std::string first;
  };
  const auto outcomes = for_seeds<Outcome>(20, [&presets](std::uint64_t s) {
    Rng rng(s);
    TraceProfile p;
    p.read_fraction = rng.uniform(0.1, 0.9);
    p.mean_inter_request_us = rng.uniform(20.0, 400.0);
    p.footprint_pages = 200 + rng.below(4000);
    p.hot_fraction = rng.uniform(0.02, 0.5);
    p.hot_skew = rng.uniform(0.3, 0.95);
    p.request_size_distribution = kSizes;
    if (rng.bernoulli(0.3)) p.phase_length_requests = 2000 + rng.below(8000);
    const Trace t = generate_trace(p, 100000, kTraceSeedBase + 500 + s);
    EngineKnobs k;
    k.check_invariants = true;
    k.migration_queue_size = std::vector<std::size_t>{1, 5, 10, 20, 50}[rng.below(5)];
    const PolicyKind policy = all_policies()[s % all_policies().size()];
    const SimReport r = run(t, preset(presets[s % presets.size()]), policy, s, k);
    Outcome o;
    o.violations = r.invariant_violations.size();
    if (!r.invariant_violations.empty()) o.first = r.invariant_violations.front();
    if (r.placement_experiences != r.placement_decisions || r.migration_experiences != r.migration_nominations) {
      ++o.violations;
      if (o.first.empty()) o.first = "experience accounting";
    }
    return o;
  });
  std::size_t total = 0;
  std::string first;
  for (const auto& o : outcomes) {
    total += o.violations;
    if (first.empty()) first = o.first;
  }
  verdict(10, total == 0,
          "20 seeds x 100000 requests, policies and presets cycled: " + std::to_string(total) + " violations" +
              (first.empty() ? "" : " (first: " + first + ")") + "; " + fmt("%.0f s", seconds_since(start)));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return pick.empty() || pick.contains(id); };
  if (wanted(1)) rl_math();
  if (wanted(2)) convergence();
  if (wanted(3)) adaptability();
  if (wanted(4) || wanted(5)) coordination_and_prefetch();
  if (wanted(6)) queue_sensitivity();
  if (wanted(7)) ordering();
  if (wanted(8)) write_amplification();
  if (wanted(9)) determinism();
  if (wanted(10)) invariants();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
