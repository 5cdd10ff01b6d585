#include "hss/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>

namespace hss {

void EngineKnobs::validate() const {
  reward.validate();
  if (scan_window == 0) throw InputError("engine: scan_window must be positive");
  if (idle_window_us && !(*idle_window_us >= 0.0)) throw InputError("engine: idle_window_us must be non-negative");
  if (!(fast_capacity_fraction > 0.0 && fast_capacity_fraction <= 1.0))
    throw InputError("engine: fast_capacity_fraction must be in (0, 1]");
  placement.validate();
  migration.validate();
}

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::RequestArrival: return "RequestArrival";
    case EventKind::RequestComplete: return "RequestComplete";
    case EventKind::ScanTick: return "ScanTick";
    case EventKind::MigrationStep: return "MigrationStep";
    case EventKind::TrainTick: return "TrainTick";
    case EventKind::SyncTick: return "SyncTick";
  }
  return "?";
}

void write_event_log(std::span<const EventRecord> events, std::ostream& out) {
  out << "time_us,kind,request,page,device,pages,latency_us\n";
  char buf[64];
  for (const EventRecord& e : events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.time_us);
    out << buf << ',' << e.kind << ',' << e.request << ',' << e.page << ',';
    if (e.device) out << *e.device;
    std::snprintf(buf, sizeof buf, "%.17g", e.latency_us);
    out << ',' << e.pages << ',' << buf << '\n';
  }
}

double reference_latency(const HssConfig& hss) {
  double best = service_time(hss.devices.at(0), Op::Read, 1);
  for (const DeviceSpec& d : hss.devices)
    best = std::min({best, service_time(d, Op::Read, 1), service_time(d, Op::Write, 1)});
  return best;
}

HssConfig resolve_capacities(const HssConfig& hss, std::span<const IORequest> trace, PolicyKind policy,
                             double fast_fraction) {
  const std::uint64_t footprint = footprint_pages(trace);
  HssConfig out = with_capacities(hss, footprint, fast_fraction);
  // Fast-Only: the fast device holds the whole data set.
  if (policy == PolicyKind::FastOnly)
    out.devices[0].capacity_pages = std::max<std::uint64_t>(out.devices[0].capacity_pages.value_or(0), footprint);
  return out;
}

namespace {

constexpr std::size_t kFullCheckEvery = 1024;
constexpr std::size_t kMaxViolations = 100;

struct Event {
  double time;
  EventKind kind;
  std::uint64_t seq;
  std::uint64_t arg;  // request index, page, or core index
  bool has_arg;

  bool operator>(const Event& o) const {
    return std::tie(time, kind, seq) > std::tie(o.time, o.kind, o.seq);
  }
};

struct Flight {
  DeviceIndex source;
  DeviceIndex target;
  double done_us;
  double cost_us;
  bool drain;
};

class Engine {
 public:
  Engine(std::span<const IORequest> trace, const HssConfig& hss, PolicyKind policy, std::uint64_t seed,
         const EngineKnobs& knobs, bool record)
      : trace_(trace),
        kind_(policy),
        traits_(traits(policy)),
        knobs_(knobs),
        rng_(seed),
        record_(record),
        queue_(knobs.migration_queue_size) {
    knobs_.validate();
    hss_ = resolve_capacities(hss, trace, policy, knobs_.fast_capacity_fraction);
    hss_.validate();
    for (const DeviceSpec& d : hss_.devices) devices_.emplace_back(d.capacity_pages.value());
    ref_latency_ = reference_latency(hss_);
    idle_window_ = knobs_.idle_window_us.value_or(2.0 * service_time(hss_.fast(), Op::Read, 1));

    if (traits_.placement == PlacementSource::Agent) {
      placement_core_ = std::make_shared<LearningCore>(hss_.size(), knobs_.placement, rng_);
      placer_.emplace(placement_core_, ref_latency_);
    }
    const bool migrates = traits_.migration == MigrationSource::Agent ||
                          traits_.migration == MigrationSource::IdleOnlyAgent;
    if (migrates && knobs_.migration_queue_size > 0) {
      migration_core_ = traits_.shared_agent ? placement_core_
                                             : std::make_shared<LearningCore>(hss_.size(), knobs_.migration, rng_);
      const auto mode = traits_.coordinated_reward ? MigrationAgent::RewardMode::Coordinated
                                                   : MigrationAgent::RewardMode::LocalCost;
      migrator_.emplace(migration_core_, knobs_.reward, mode, ref_latency_, knobs_.scan_window);
    }
    for (const auto& core : {placement_core_, migration_core_})
      if (core && std::find(cores_.begin(), cores_.end(), core) == cores_.end()) {
        core->set_training_enabled(knobs_.training_enabled);
        cores_.push_back(core);
      }

    if (traits_.overflow == OverflowRule::EvictLru) lru_.resize(hss_.size());
    if (kind_ == PolicyKind::Oracle) next_use_.emplace(trace);

    report_.policy = std::string(policy_name(policy));
    report_.bytes_written.resize(hss_.size());
    report_.migrations_into.assign(hss_.size(), 0);
    report_.migrations_out_of.assign(hss_.size(), 0);
    report_.latencies_us.assign(trace.size(), 0.0);
    tickets_.resize(trace.size());
  }

  RunOutput run() {
    for (std::size_t i = 1; i < trace_.size(); ++i)
      if (trace_[i].arrival_us < trace_[i - 1].arrival_us) throw InputError("trace is not time-ordered");
    std::size_t processed = 0;
    while (true) {
      const bool has_arrival = next_request_ < trace_.size();
      if (!has_arrival && events_.empty()) break;
      if (has_arrival && (events_.empty() || arrival_time(next_request_) <= events_.top().time)) {
        advance_clock(arrival_time(next_request_));
        on_arrival(next_request_++);
      } else {
        const Event e = events_.top();
        events_.pop();
        advance_clock(e.time);
        dispatch(e);
      }
      if (knobs_.check_invariants) check_cheap();
      if (knobs_.check_invariants && ++processed % kFullCheckEvery == 0) check_full();
    }
    finish();
    RunOutput out;
    out.report = std::move(report_);
    out.events = std::move(log_);
    return out;
  }

 private:
  double arrival_time(std::size_t i) const { return static_cast<double>(trace_[i].arrival_us); }

  void advance_clock(double t) {
    if (t < clock_) throw InvariantError("simulated clock moved backwards");
    clock_ = t;
  }

  void push(double time, EventKind kind, std::optional<std::uint64_t> arg = {}) {
    events_.push({time, kind, seq_++, arg.value_or(0), arg.has_value()});
  }

  void log(double time, const std::string& kind, std::int64_t request, PageAddr page,
           std::optional<DeviceIndex> device, std::uint32_t pages, double latency) {
    if (record_) log_.push_back({time, kind, request, page, device, pages, latency});
  }

  double fast_free_fraction() const {
    const DeviceState& f = devices_[0];
    return f.capacity() == 0 ? 0.0 : static_cast<double>(f.free_pages()) / static_cast<double>(f.capacity());
  }

  std::optional<DeviceIndex> location(PageAddr page) const {
    const PageMeta* m = store_.find(page);
    return m == nullptr ? std::nullopt : m->curr_dev;
  }

  // Where a read of `page` at time t is served: the source while a migration
  // of the page is still being written.
  DeviceIndex read_location(PageAddr page, double t) const {
    if (auto it = flights_.find(page); it != flights_.end() && t < it->second.done_us) return it->second.source;
    return location(page).value();
  }

  StateVector observe_page(PageAddr page) const {
    const PageMeta* m = store_.find(page);
    const Op op = m ? m->op_last : Op::Read;
    const std::uint32_t size = m ? m->size_pages_last : 1;
    return to_network_input(store_.observe(page, op, size, fast_free_fraction()));
  }

  MigrationAgent::ObserveFn observer() {
    return [this](PageAddr p) { return observe_page(p); };
  }

  Completion device_op(DeviceIndex d, Op op, std::uint32_t pages, double start, std::int64_t request,
                       PageAddr page, const char* cause) {
    const double begin = std::max(start, devices_[d].busy_until());
    const Completion c = request_latency(devices_[d], hss_.devices[d], op, pages, start);
    if (record_) {
      std::string kind = "io:";
      kind += op_name(op);
      kind += ':';
      kind += cause;
      log(c.completion_us, kind, request, page, d, pages, c.completion_us - begin);
    }
    return c;
  }

  // Residency change plus the bookkeeping that follows the page around.
  void move_page(PageAddr page, DeviceIndex to) {
    const std::optional<DeviceIndex> from = location(page);
    if (from == to) return;
    if (from) {
      devices_[*from].erase(page);
      if (!lru_.empty()) lru_[*from].erase({lru_stamp_.at(page), page});
    } else {
      placed_pages_.push_back(page);
    }
    devices_[to].insert(page);
    store_.set_device(page, to);
    if (!lru_.empty()) lru_[to].insert({lru_stamp_.at(page), page});
    if (next_use_) oracle_.set_fast(page, to == 0);
  }

  void touch_lru(PageAddr page) {
    const std::uint64_t stamp = store_.find(page)->last_touch_seq;
    auto [it, inserted] = lru_stamp_.try_emplace(page, stamp);
    if (!inserted) {
      if (auto dev = location(page)) {
        lru_[*dev].erase({it->second, page});
        lru_[*dev].insert({stamp, page});
      }
      it->second = stamp;
    }
  }

  std::optional<DeviceIndex> first_with_room(DeviceIndex from, std::uint64_t need) const {
    for (DeviceIndex d = from; d < devices_.size(); ++d)
      if (devices_[d].free_pages() >= need) return d;
    return std::nullopt;
  }

  // ---- request path ----

  DeviceIndex decide(const IORequest& r, std::size_t index, std::uint64_t prior_accesses) {
    switch (traits_.placement) {
      case PlacementSource::Agent: {
        const Observation obs = store_.observe(r.page_addr, r.op, r.size_pages, fast_free_fraction());
        const auto decision = placer_->place(obs, rng_);
        tickets_[index] = decision.ticket;
        return decision.device;
      }
      case PlacementSource::Cde:
        return cde_place(prior_accesses, r.size_pages, hss_.size(), knobs_.cde);
      case PlacementSource::Oracle:
      case PlacementSource::FastOnly:
        return 0;
    }
    throw InvariantError("unknown placement source");
  }

  // Moves LRU victims from d one tier down until `need` pages fit. Returns
  // when the last eviction write completes.
  double make_room_lru(DeviceIndex d, std::uint64_t need, double t, std::span<const PageAddr> keep,
                       std::int64_t request) {
    double ready = t;
    while (devices_[d].free_pages() < need) {
      const DeviceIndex down = d + 1;
      if (down >= devices_.size()) throw InvariantError("no device below the slowest one to evict to");
      std::optional<PageAddr> victim;
      for (const auto& [stamp, page] : lru_[d])
        if (std::find(keep.begin(), keep.end(), page) == keep.end() && !flights_.contains(page)) {
          victim = page;
          break;
        }
      if (!victim) throw InvariantError("device full of pages that cannot be evicted");
      if (devices_[down].free_pages() == 0) ready = std::max(ready, make_room_lru(down, 1, t, keep, request));
      const Completion rd = device_op(d, Op::Read, 1, t, request, *victim, "eviction");
      const Completion wr = device_op(down, Op::Write, 1, std::max(rd.completion_us, ready), request, *victim,
                                      "eviction");
      move_page(*victim, down);
      report_.bytes_written[down].eviction += kPageBytes;
      ++report_.evictions;
      ready = std::max(ready, wr.completion_us);
    }
    return ready;
  }

  // Oracle: farthest-reused fast pages step aside for free.
  void make_room_free(DeviceIndex d, std::uint64_t need, std::span<const PageAddr> keep) {
    while (devices_[d].free_pages() < need) {
      const auto victim = oracle_.farthest_fast(keep);
      if (!victim) throw InvariantError("oracle: nothing to displace");
      const auto down = first_with_room(1, 1);
      if (!down) throw InvariantError("oracle: no room below the fast device");
      move_page(victim->second, *down);
      ++report_.free_moves;
    }
  }

  // Puts the request's pages that are not yet on the target there, applying
  // the policy's overflow rule. Returns the time the request may start and
  // the device used.
  std::pair<double, DeviceIndex> place_pages(const IORequest& r, std::size_t index, DeviceIndex d, double t) {
    std::vector<PageAddr> pages;
    for (std::uint32_t k = 0; k < r.size_pages; ++k) pages.push_back(r.page_addr + k);
    const bool write = r.op == Op::Write;
    auto moving = [&](DeviceIndex dev) {
      std::vector<PageAddr> out;
      for (PageAddr p : pages) {
        const auto loc = location(p);
        if (write ? loc != dev : !loc) out.push_back(p);
      }
      return out;
    };
    // Requests larger than a whole device go further down.
    while (d < devices_.size() && devices_[d].capacity() < moving(d).size()) ++d;
    if (d >= devices_.size()) throw InvariantError("request larger than every device");

    double ready = t;
    OverflowRule rule = traits_.overflow;
    if (rule == OverflowRule::FreeDisplace && d != 0) rule = OverflowRule::NextDevice;
    // Room that eviction cannot make: the request's own pages and pages in
    // flight stay put. If the rest is too small, go down a tier instead.
    if (rule == OverflowRule::FreeDisplace || rule == OverflowRule::EvictLru) {
      std::uint64_t pinned = 0;
      for (PageAddr p : pages) pinned += location(p) == d;
      for (const auto& [p, f] : flights_)
        pinned += location(p) == d && std::find(pages.begin(), pages.end(), p) == pages.end();
      if (devices_[d].capacity() - pinned < moving(d).size()) rule = OverflowRule::NextDevice;
    }
    switch (rule) {
      case OverflowRule::NextDevice:
      case OverflowRule::Unbounded:
        while (d < devices_.size() && devices_[d].free_pages() < moving(d).size()) ++d;
        if (d >= devices_.size()) throw InvariantError("no device has room for the request");
        break;
      case OverflowRule::EvictLru:
        ready = make_room_lru(d, moving(d).size(), t, pages, static_cast<std::int64_t>(index));
        break;
      case OverflowRule::FreeDisplace:
        make_room_free(d, moving(d).size(), pages);
        break;
    }
    for (PageAddr p : moving(d)) move_page(p, d);
    return {ready, d};
  }

  void on_arrival(std::size_t index) {
    const IORequest& r = trace_[index];
    const double t = arrival_time(index);
    log(t, "RequestArrival", static_cast<std::int64_t>(index), r.page_addr, std::nullopt, r.size_pages, 0.0);
    store_.begin_request();

    bool cold = false;
    for (std::uint32_t k = 0; k < r.size_pages; ++k) cold = cold || !location(r.page_addr + k);
    const bool places = r.op == Op::Write || cold;

    std::optional<DeviceIndex> target;
    if (places) {
      const PageMeta* m = store_.find(r.page_addr);
      target = decide(r, index, m ? m->acc_freq : 0);
      if (*target >= devices_.size()) throw InvariantError("placement chose a device that does not exist");
    }
    for (std::uint32_t k = 0; k < r.size_pages; ++k) {
      const PageAddr p = r.page_addr + k;
      store_.record_access(p, r.op, r.size_pages);
      if (!lru_.empty()) touch_lru(p);
      if (next_use_) oracle_.set_next_use(p, next_use_->next_read(index, k));
    }

    double ready = t;
    if (places) std::tie(ready, target) = place_pages(r, index, *target, t);

    double completion = ready;
    const auto req = static_cast<std::int64_t>(index);
    if (r.op == Op::Write) {
      completion = device_op(*target, Op::Write, r.size_pages, ready, req, r.page_addr, "placement").completion_us;
      report_.bytes_written[*target].placement += std::uint64_t{r.size_pages} * kPageBytes;
      report_.workload_write_bytes += std::uint64_t{r.size_pages} * kPageBytes;
    } else {
      std::map<DeviceIndex, std::uint32_t> parts;
      for (std::uint32_t k = 0; k < r.size_pages; ++k) ++parts[read_location(r.page_addr + k, t)];
      for (const auto& [dev, count] : parts)
        completion = std::max(completion, device_op(dev, Op::Read, count, ready, req, r.page_addr, "request").completion_us);
      for (std::uint32_t k = 0; k < r.size_pages; ++k) try_fast_path(r.page_addr + k, completion);
      if (next_use_) oracle_admit(r);
    }
    ++outstanding_;
    push(completion, EventKind::RequestComplete, index);
  }

  void on_complete(std::size_t index, double t) {
    --outstanding_;
    ++served_;
    const double latency = t - arrival_time(index);
    report_.latencies_us[index] = latency;
    last_completion_ = std::max(last_completion_, t);
    log(t, "RequestComplete", static_cast<std::int64_t>(index), trace_[index].page_addr, location(trace_[index].page_addr),
        trace_[index].size_pages, latency);

    if (tickets_[index]) placer_->reward_placement(*tickets_[index], latency);
    if (migrator_) migrator_->on_request_latency(latency, observer());

    if (migrator_ && traits_.migration == MigrationSource::Agent && knobs_.scan_per_request)
      push(t, EventKind::ScanTick);
    for (std::size_t c = 0; c < cores_.size(); ++c) {
      const rl::Hyperparameters& hp = cores_[c]->hyperparameters();
      if (served_ % hp.train_every == 0) push(t, EventKind::TrainTick, c);
      if (served_ % hp.sync_interval == 0) push(t, EventKind::SyncTick, c);
    }
    if (traits_.migration != MigrationSource::None) push(t, EventKind::MigrationStep);
  }

  // ---- migration path ----

  bool system_idle(double t) const {
    if (outstanding_ > 0 || next_request_ >= trace_.size()) return false;
    return arrival_time(next_request_) > t + idle_window_;
  }

  void scan(double t) {
    if (!migrator_) return;
    const std::size_t before = queue_.size();
    const HssView view{store_, devices_, fast_free_fraction()};
    migrator_->scan_and_nominate(view, placed_pages_, queue_, rng_);
    if (knobs_.check_invariants) check_queue(before);
    log(t, "ScanTick", -1, 0, std::nullopt, static_cast<std::uint32_t>(queue_.size() - before), 0.0);
  }

  void start_migration(PageAddr page, DeviceIndex source, DeviceIndex target, double done, double cost, bool drain) {
    move_page(page, target);
    store_.record_migration(page, target);
    flights_.emplace(page, Flight{source, target, done, cost, drain});
    ++report_.migration_count;
    ++report_.migrations_into[target];
    ++report_.migrations_out_of[source];
    report_.bytes_written[target].migration += kPageBytes;
    push(done, EventKind::MigrationStep, page);
  }

  void drop_front() {
    const MigrationEntry e = *queue_.pop_front();
    ++report_.dropped_nominations;
    migrator_->on_dropped(e.page, observer());
  }

  bool entry_valid(const MigrationEntry& e) const {
    const auto loc = location(e.page);
    return loc && *loc != e.target && !flights_.contains(e.page) && devices_[e.target].free_pages() > 0;
  }

  void drain_one(double t) {
    while (!queue_.empty()) {
      const MigrationEntry e = *queue_.front();
      if (!entry_valid(e)) {
        drop_front();
        continue;
      }
      const DeviceIndex src = *location(e.page);
      const double busy = std::max(devices_[src].busy_until(), devices_[e.target].busy_until());
      if (busy > t) {
        push(busy, EventKind::MigrationStep);
        return;
      }
      queue_.pop_front();
      const Completion rd = device_op(src, Op::Read, 1, t, -1, e.page, "migration");
      const Completion wr = device_op(e.target, Op::Write, 1, rd.completion_us, -1, e.page, "migration");
      drain_active_ = true;
      start_migration(e.page, src, e.target, wr.completion_us, wr.completion_us - t, true);
      return;
    }
  }

  // A read of a queued page carries its data: write it to the target as soon
  // as the read is done, if nothing else is using the target then.
  void try_fast_path(PageAddr page, double read_done) {
    if (!knobs_.low_priority_fast_path || !migrator_ || !queue_.contains(page)) return;
    const auto it = std::find_if(queue_.entries().begin(), queue_.entries().end(),
                                 [&](const MigrationEntry& e) { return e.page == page; });
    const MigrationEntry e = *it;
    if (!entry_valid(e) || devices_[e.target].busy_until() > read_done) return;
    queue_.remove(page);
    const DeviceIndex src = *location(page);
    const Completion wr = device_op(e.target, Op::Write, 1, read_done, -1, page, "migration");
    ++report_.fast_path_migrations;
    start_migration(page, src, e.target, wr.completion_us, wr.completion_us - read_done, false);
  }

  void finish_flight(PageAddr page) {
    auto node = flights_.extract(page);
    if (node.empty()) throw InvariantError("migration finished twice");
    if (node.mapped().drain) drain_active_ = false;
    if (migrator_) migrator_->on_migrated(page, node.mapped().cost_us, observer());
  }

  void idle_step(double t) {
    if (drain_active_ || !system_idle(t)) return;
    switch (traits_.migration) {
      case MigrationSource::None:
        return;
      case MigrationSource::OracleReshuffle:
        oracle_reshuffle();
        return;
      case MigrationSource::Agent:
      case MigrationSource::IdleOnlyAgent:
        if (!migrator_) return;
        scan(t);
        drain_one(t);
        return;
    }
  }

  // ---- Oracle ----

  // Free Belady admission of a just-read page into the fast device.
  void oracle_admit(const IORequest& r) {
    std::vector<PageAddr> pages;
    for (std::uint32_t k = 0; k < r.size_pages; ++k) pages.push_back(r.page_addr + k);
    for (PageAddr p : pages) {
      const auto loc = location(p);
      if (!loc || *loc == 0) continue;
      if (devices_[0].free_pages() == 0) {
        const auto victim = oracle_.farthest_fast(pages);
        if (!victim || victim->first <= oracle_.next_use(p)) continue;
        move_page(victim->second, *loc);
        ++report_.free_moves;
      }
      move_page(p, 0);
      ++report_.free_moves;
    }
  }

  // Fast device takes the pages reused soonest.
  void oracle_reshuffle() {
    while (true) {
      const auto up = oracle_.soonest_slow();
      if (!up || up->first == kNeverUsed) return;
      const DeviceIndex from = *location(up->second);
      if (devices_[0].free_pages() == 0) {
        const auto down = oracle_.farthest_fast();
        if (!down || down->first <= up->first) return;
        move_page(down->second, from);
        ++report_.free_moves;
      }
      move_page(up->second, 0);
      ++report_.free_moves;
    }
  }

  // ---- dispatch ----

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::RequestArrival:
        throw InvariantError("arrivals are not queued");
      case EventKind::RequestComplete:
        on_complete(e.arg, e.time);
        return;
      case EventKind::ScanTick:
        scan(e.time);
        return;
      case EventKind::MigrationStep:
        if (e.has_arg) {
          finish_flight(e.arg);
          log(e.time, "MigrationStep", -1, e.arg, location(e.arg), 1, 0.0);
        }
        idle_step(e.time);
        return;
      case EventKind::TrainTick: {
        const auto loss = cores_[e.arg]->train(served_, rng_);
        log(e.time, "TrainTick", -1, 0, std::nullopt, 0, loss.value_or(0.0));
        return;
      }
      case EventKind::SyncTick:
        cores_[e.arg]->sync_networks();
        log(e.time, "SyncTick", -1, 0, std::nullopt, 0, 0.0);
        return;
    }
  }

  void finish() {
    if (placer_) placer_->finish();
    if (migrator_) {
      // Entries never executed count as discarded.
      while (!queue_.empty()) drop_front();
      migrator_->finish(observer());
    }
    if (!flights_.empty()) throw InvariantError("migrations still in flight at the end of the run");

    if (placer_) {
      report_.placement_decisions = placer_->decisions();
      report_.placement_experiences = placer_->experiences();
    }
    if (migrator_) {
      report_.migration_nominations = migrator_->nominations();
      report_.migration_experiences = migrator_->experiences();
    }
    if (placement_core_) report_.placement_loss = placement_core_->losses();
    if (migration_core_ && migration_core_ != placement_core_) report_.migration_loss = migration_core_->losses();

    if (knobs_.check_invariants) {
      check_full();
      if (report_.placement_experiences != report_.placement_decisions)
        violation("placement experiences " + std::to_string(report_.placement_experiences) + " != decisions " +
                  std::to_string(report_.placement_decisions));
      if (report_.migration_experiences != report_.migration_nominations)
        violation("migration experiences " + std::to_string(report_.migration_experiences) + " != nominations " +
                  std::to_string(report_.migration_nominations));
    }
    const double first = trace_.empty() ? 0.0 : arrival_time(0);
    summarize(report_, first, trace_.empty() ? 0.0 : last_completion_);
  }

  // ---- invariant checks ----

  void violation(const std::string& what) {
    if (report_.invariant_violations.size() < kMaxViolations)
      report_.invariant_violations.push_back(what + " (t=" + std::to_string(clock_) + ")");
  }

  void check_cheap() {
    for (std::size_t d = 0; d < devices_.size(); ++d)
      if (devices_[d].used() > devices_[d].capacity()) violation("device " + std::to_string(d) + " over capacity");
    std::uint64_t into = 0;
    std::uint64_t out = 0;
    for (std::size_t d = 0; d < devices_.size(); ++d) {
      into += report_.migrations_into[d];
      out += report_.migrations_out_of[d];
    }
    if (into != out || into != report_.migration_count) violation("migration counts do not balance");
  }

  void check_full() {
    std::uint64_t used = 0;
    for (const DeviceState& d : devices_) used += d.used();
    if (used != placed_pages_.size()) violation("resident pages != placed pages");
    for (PageAddr p : placed_pages_) {
      const auto loc = location(p);
      if (!loc) {
        violation("placed page without a device");
        continue;
      }
      for (std::size_t d = 0; d < devices_.size(); ++d)
        if (devices_[d].holds(p) != (d == *loc)) violation("page " + std::to_string(p) + " residency mismatch");
    }
  }

  void check_queue(std::size_t before) {
    const auto& entries = queue_.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (std::size_t j = i + 1; j < entries.size(); ++j)
        if (entries[i].page == entries[j].page) violation("duplicate page in migration queue");
      if (i >= before && location(entries[i].page) == entries[i].target)
        violation("queued migration targets the page's current device");
    }
    if (entries.size() > queue_.capacity()) violation("migration queue over capacity");
  }

  std::span<const IORequest> trace_;
  HssConfig hss_;
  PolicyKind kind_;
  PolicyTraits traits_;
  EngineKnobs knobs_;
  Rng rng_;
  bool record_;
  double ref_latency_ = 1.0;
  double idle_window_ = 0.0;

  std::vector<DeviceState> devices_;
  MetadataStore store_;
  std::vector<PageAddr> placed_pages_;

  std::shared_ptr<LearningCore> placement_core_;
  std::shared_ptr<LearningCore> migration_core_;
  std::vector<std::shared_ptr<LearningCore>> cores_;
  std::optional<PlacementAgent> placer_;
  std::optional<MigrationAgent> migrator_;
  MigrationQueue queue_;

  std::optional<NextUseIndex> next_use_;
  OracleBook oracle_;
  std::vector<std::set<std::pair<std::uint64_t, PageAddr>>> lru_;
  std::unordered_map<PageAddr, std::uint64_t> lru_stamp_;

  std::unordered_map<PageAddr, Flight> flights_;
  bool drain_active_ = false;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::size_t next_request_ = 0;
  std::uint64_t outstanding_ = 0;
  std::uint64_t served_ = 0;
  double clock_ = 0.0;
  double last_completion_ = 0.0;
  std::vector<std::optional<PlacementAgent::Ticket>> tickets_;

  SimReport report_;
  std::vector<EventRecord> log_;
};

}  // namespace

RunOutput simulate(std::span<const IORequest> trace, const HssConfig& hss, PolicyKind policy, std::uint64_t seed,
                   const EngineKnobs& knobs, bool record_events) {
  Engine engine(trace, hss, policy, seed, knobs, record_events);
  return engine.run();
}

}  // namespace hss
