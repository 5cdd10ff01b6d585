#include "hss/agents.hpp"

#include <algorithm>
#include <numeric>

namespace hss {

bool MigrationQueue::contains(PageAddr page) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const MigrationEntry& e) { return e.page == page; });
}

std::size_t MigrationQueue::count_targeting(DeviceIndex device) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const MigrationEntry& e) { return e.target == device; }));
}

bool MigrationQueue::push(MigrationEntry entry) {
  if (full() || contains(entry.page)) return false;
  entries_.push_back(entry);
  return true;
}

std::optional<MigrationEntry> MigrationQueue::front() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front();
}

std::optional<MigrationEntry> MigrationQueue::pop_front() {
  if (entries_.empty()) return std::nullopt;
  MigrationEntry e = entries_.front();
  entries_.pop_front();
  return e;
}

std::optional<MigrationEntry> MigrationQueue::remove(PageAddr page) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const MigrationEntry& e) { return e.page == page; });
  if (it == entries_.end()) return std::nullopt;
  MigrationEntry e = *it;
  entries_.erase(it);
  return e;
}

void MigrationRewardConfig::validate() const {
  if (n == 0) throw InputError("migration reward: n must be positive");
  if (x == 0) throw InputError("migration reward: x must be positive");
  if (!(beta >= 0.0)) throw InputError("migration reward: beta must be non-negative");
}

double placement_reward(double normalized_latency) {
  if (!(normalized_latency > 0.0)) throw InputError("placement reward: latency must be positive");
  return 1.0 / normalized_latency;
}

double migration_penalty(double beta, double mean_acc_intr, double mean_migr_intr) {
  return beta * (1.0 / (1.0 + mean_acc_intr) + 1.0 / (1.0 + mean_migr_intr));
}

double migration_reward(std::span<const double> normalized_latencies, double penalty) {
  if (normalized_latencies.empty()) throw InputError("migration reward: no latencies");
  const double sum = std::accumulate(normalized_latencies.begin(), normalized_latencies.end(), 0.0);
  if (!(sum > 0.0)) throw InputError("migration reward: latencies must be positive");
  return static_cast<double>(normalized_latencies.size()) / sum - penalty;
}

LearningCore::LearningCore(std::size_t num_actions, const rl::Hyperparameters& hp, Rng& init_rng)
    : hp_(hp),
      training_(rl::Network::random(num_actions, hp.support(), init_rng)),
      inference_(training_),
      buffer_(hp.buffer_size),
      optimizer_(hp.optimizer, hp.learning_rate) {
  hp_.validate();
}

std::size_t LearningCore::act(const StateVector& input, Rng& rng) const {
  return rl::select_action(inference_, input, hp_.epsilon, rng);
}

void LearningCore::push(const rl::Experience& e) { buffer_.push(e); }

std::optional<double> LearningCore::train(std::uint64_t request_index, Rng& rng) {
  if (!training_enabled_ || buffer_.size() < hp_.batch_size) return std::nullopt;
  const auto batch = buffer_.sample(hp_.batch_size, rng);
  auto loss = rl::train_step(training_, inference_, batch, hp_, optimizer_);
  if (loss) losses_.push_back({request_index, *loss});
  return loss;
}

void LearningCore::sync_networks() { rl::sync(training_, inference_); }

PlacementAgent::PlacementAgent(std::shared_ptr<LearningCore> core, double reference_latency_us)
    : core_(std::move(core)), reference_latency_us_(reference_latency_us) {
  if (!core_) throw InputError("placement agent: missing learning core");
  if (!(reference_latency_us_ > 0.0)) throw InputError("placement agent: reference latency must be positive");
}

PlacementAgent::Decision PlacementAgent::place(const Observation& obs, Rng& rng) {
  const StateVector s = to_network_input(obs);
  // The previous decision's transition ends here.
  if (!pending_.empty()) {
    auto last = std::prev(pending_.end());
    if (!last->second.next_state) {
      last->second.next_state = s;
      if (last->second.reward) complete(last);
    }
  }
  const std::size_t action = core_->act(s, rng);
  const Ticket ticket = decisions_++;
  pending_.emplace(ticket, Pending{s, action, std::nullopt, std::nullopt});
  return {action, ticket};
}

void PlacementAgent::reward_placement(Ticket ticket, double latency_us) {
  auto it = pending_.find(ticket);
  if (it == pending_.end()) throw InvariantError("placement reward for an unknown decision");
  if (it->second.reward) throw InvariantError("placement decision rewarded twice");
  it->second.reward = placement_reward(latency_us / reference_latency_us_);
  if (it->second.next_state) complete(it);
}

void PlacementAgent::complete(std::map<Ticket, Pending>::iterator it) {
  rl::Experience e;
  e.state = it->second.state;
  e.action = it->second.action;
  e.reward = core_->learner_reward(*it->second.reward);
  e.next_state = *it->second.next_state;
  core_->push(e);
  ++experiences_;
  pending_.erase(it);
}

void PlacementAgent::finish() {
  while (!pending_.empty()) {
    auto it = pending_.begin();
    if (!it->second.reward) throw InvariantError("placement decision never rewarded");
    if (!it->second.next_state) it->second.next_state = it->second.state;
    complete(it);
  }
}

MigrationAgent::MigrationAgent(std::shared_ptr<LearningCore> core, MigrationRewardConfig cfg, RewardMode mode,
                               double reference_latency_us, std::size_t scan_window)
    : core_(std::move(core)),
      cfg_(cfg),
      mode_(mode),
      reference_latency_us_(reference_latency_us),
      scan_window_(scan_window) {
  if (!core_) throw InputError("migration agent: missing learning core");
  cfg_.validate();
  if (!(reference_latency_us_ > 0.0)) throw InputError("migration agent: reference latency must be positive");
  if (scan_window_ == 0) throw InputError("migration agent: scan window must be positive");
}

std::size_t MigrationAgent::scan_and_nominate(const HssView& hss, std::span<const PageAddr> placed_pages,
                                              MigrationQueue& queue, Rng& rng) {
  if (queue.full() || placed_pages.empty()) return 0;

  struct Candidate {
    PageAddr page;
    DeviceIndex curr;
    PageIntervals iv;
    int coldness;
  };
  std::vector<Candidate> candidates;
  const std::size_t window = std::min(scan_window_, placed_pages.size());
  for (std::size_t k = 0; k < window; ++k) {
    const PageAddr page = placed_pages[(cursor_ + k) % placed_pages.size()];
    const PageMeta* meta = hss.store.find(page);
    // Queued or still moving: the earlier decision is not settled yet.
    if (meta == nullptr || !meta->curr_dev || queue.contains(page) || queued_.contains(page)) continue;
    const PageIntervals iv = hss.store.intervals(page);
    const int acc_bin = log_bin(iv.acc_intr);
    // Touched by the current or previous request: leave it alone.
    if (acc_bin == 0) continue;
    candidates.push_back({page, *meta->curr_dev, iv, acc_bin + log_bin(iv.migr_intr)});
  }
  cursor_ = (cursor_ + window) % placed_pages.size();

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.coldness > b.coldness; });

  std::size_t enqueued = 0;
  for (const Candidate& c : candidates) {
    if (queue.full()) break;
    const PageMeta& meta = *hss.store.find(c.page);
    const Observation obs = hss.store.observe(c.page, meta.op_last, meta.size_pages_last, hss.fast_free_fraction);
    const StateVector s = to_network_input(obs);
    const std::size_t action = core_->act(s, rng);
    if (action == c.curr || action >= hss.devices.size()) continue;
    // Capacity on the target, counting what is already queued for it.
    const DeviceState& target = hss.devices[action];
    if (target.free_pages() <= queue.count_targeting(action)) continue;
    if (!queue.push({c.page, action})) continue;
    queued_[c.page] = Nomination{c.page, s, action, c.iv.acc_intr, c.iv.migr_intr};
    ++nominations_;
    ++enqueued;
  }
  return enqueued;
}

void MigrationAgent::complete(const Nomination& rec, double raw_reward, const ObserveFn& observe) {
  rl::Experience e;
  e.state = rec.state;
  e.action = rec.action;
  e.reward = core_->learner_reward(raw_reward);
  e.next_state = observe(rec.page);
  core_->push(e);
  settled_rewards_.push_back(raw_reward);
  ++experiences_;
}

void MigrationAgent::on_dropped(PageAddr page, const ObserveFn& observe) {
  auto it = queued_.find(page);
  if (it == queued_.end()) return;
  const Nomination rec = it->second;
  queued_.erase(it);
  complete(rec, 0.0, observe);
}

void MigrationAgent::on_migrated(PageAddr page, double cost_us, const ObserveFn& observe) {
  auto it = queued_.find(page);
  if (it == queued_.end()) return;
  const Nomination rec = it->second;
  queued_.erase(it);
  if (mode_ == RewardMode::LocalCost) {
    complete(rec, -cost_us / reference_latency_us_, observe);
    return;
  }
  open_batch_.push_back(rec);
  if (open_batch_.size() >= cfg_.x) {
    settling_.push_back({std::move(open_batch_), {}});
    open_batch_.clear();
    settling_.back().latencies.reserve(cfg_.n);
  }
}

void MigrationAgent::on_request_latency(double latency_us, const ObserveFn& observe) {
  const double normalized = latency_us / reference_latency_us_;
  for (SettlingBatch& b : settling_) b.latencies.push_back(normalized);
  while (!settling_.empty() && settling_.front().latencies.size() >= cfg_.n) {
    SettlingBatch b = std::move(settling_.front());
    settling_.pop_front();
    double acc = 0.0;
    double migr = 0.0;
    for (const Nomination& r : b.records) {
      acc += static_cast<double>(r.acc_intr);
      migr += static_cast<double>(r.migr_intr);
    }
    const double count = static_cast<double>(b.records.size());
    const double reward = migration_reward(b.latencies, migration_penalty(cfg_.beta, acc / count, migr / count));
    for (const Nomination& r : b.records) complete(r, reward, observe);
  }
}

void MigrationAgent::finish(const ObserveFn& observe) {
  std::vector<PageAddr> pages;
  for (const auto& [page, rec] : queued_) pages.push_back(page);
  std::sort(pages.begin(), pages.end());
  for (PageAddr p : pages) complete(queued_.at(p), 0.0, observe);
  queued_.clear();
  for (const SettlingBatch& b : settling_)
    for (const Nomination& r : b.records) complete(r, 0.0, observe);
  settling_.clear();
  for (const Nomination& r : open_batch_) complete(r, 0.0, observe);
  open_batch_.clear();
}

}  // namespace hss
