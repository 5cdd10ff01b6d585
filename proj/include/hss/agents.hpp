#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hss/device.hpp"
#include "hss/metadata.hpp"
#include "hss/rl.hpp"

namespace hss {

struct MigrationEntry {
  PageAddr page = 0;
  DeviceIndex target = 0;
};

// FIFO of pending migrations. Holds each page at most once.
class MigrationQueue {
 public:
  explicit MigrationQueue(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t free_slots() const { return capacity_ - entries_.size(); }
  bool full() const { return entries_.size() >= capacity_; }
  bool empty() const { return entries_.empty(); }
  bool contains(PageAddr page) const;
  std::size_t count_targeting(DeviceIndex device) const;

  // False when full or when the page is already queued.
  bool push(MigrationEntry entry);
  std::optional<MigrationEntry> front() const;
  std::optional<MigrationEntry> pop_front();
  std::optional<MigrationEntry> remove(PageAddr page);
  const std::deque<MigrationEntry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<MigrationEntry> entries_;
};

struct MigrationRewardConfig {
  std::size_t n = 50;  // placement latencies averaged per reward
  std::size_t x = 10;  // migrated pages per reward
  double beta = 0.1;   // ping-pong penalty scale

  void validate() const;
};

// Placement reward: inverse of the (normalized) request latency.
double placement_reward(double normalized_latency);

// Ping-pong penalty over the mean raw intervals of a migration batch.
double migration_penalty(double beta, double mean_acc_intr, double mean_migr_intr);

// Delayed migration reward: n / sum(L_i) - penalty, latencies normalized.
double migration_reward(std::span<const double> normalized_latencies, double penalty);

struct LossPoint {
  std::uint64_t request_index = 0;
  double loss = 0.0;
};

// Networks, replay buffer and optimizer behind one agent. SAPM shares a
// single core between placement and migration.
class LearningCore {
 public:
  LearningCore(std::size_t num_actions, const rl::Hyperparameters& hp, Rng& init_rng);

  std::size_t act(const StateVector& input, Rng& rng) const;
  void push(const rl::Experience& e);

  // One training step on a uniformly sampled batch; nullopt while the buffer
  // holds fewer experiences than a batch, or when training is disabled.
  std::optional<double> train(std::uint64_t request_index, Rng& rng);
  void sync_networks();

  void set_training_enabled(bool on) { training_enabled_ = on; }
  bool training_enabled() const { return training_enabled_; }

  const rl::Hyperparameters& hyperparameters() const { return hp_; }
  const rl::Network& training_net() const { return training_; }
  const rl::Network& inference_net() const { return inference_; }
  rl::Network& training_net() { return training_; }
  const rl::ReplayBuffer& buffer() const { return buffer_; }
  const std::vector<LossPoint>& losses() const { return losses_; }

  // Reward handed to the learner: raw reward scaled by (1 - gamma) so the
  // discounted return stays inside the [v_min, v_max] support.
  double learner_reward(double raw) const { return (1.0 - hp_.gamma) * raw; }

 private:
  rl::Hyperparameters hp_;
  rl::Network training_;
  rl::Network inference_;
  rl::ReplayBuffer buffer_;
  rl::Optimizer optimizer_;
  bool training_enabled_ = true;
  std::vector<LossPoint> losses_;
};

// Decisions may overlap: a decision's reward arrives when its request
// completes, its next state at the following decision. The experience is
// pushed once both are known.
class PlacementAgent {
 public:
  using Ticket = std::uint64_t;

  // reference_latency_us is the smallest possible request latency in the HSS;
  // latencies are expressed in multiples of it.
  PlacementAgent(std::shared_ptr<LearningCore> core, double reference_latency_us);

  struct Decision {
    DeviceIndex device;
    Ticket ticket;
  };
  Decision place(const Observation& obs, Rng& rng);
  void reward_placement(Ticket ticket, double latency_us);

  // Completes every rewarded decision still waiting for a next state (using
  // its own state). Throws InvariantError if a decision was never rewarded.
  void finish();

  std::uint64_t decisions() const { return decisions_; }
  std::uint64_t experiences() const { return experiences_; }
  std::size_t pending() const { return pending_.size(); }
  LearningCore& core() { return *core_; }

 private:
  struct Pending {
    StateVector state{};
    std::size_t action = 0;
    std::optional<double> reward;
    std::optional<StateVector> next_state;
  };

  void complete(std::map<Ticket, Pending>::iterator it);

  std::shared_ptr<LearningCore> core_;
  double reference_latency_us_;
  std::map<Ticket, Pending> pending_;
  std::uint64_t decisions_ = 0;
  std::uint64_t experiences_ = 0;
};

// Read-only view of the HSS the migration scanner needs.
struct HssView {
  const MetadataStore& store;
  std::span<const DeviceState> devices;
  double fast_free_fraction = 0.0;
};

class MigrationAgent {
 public:
  enum class RewardMode {
    Coordinated,  // delayed reward from later placement latencies
    LocalCost,    // negated service time of the migration itself
  };

  MigrationAgent(std::shared_ptr<LearningCore> core, MigrationRewardConfig cfg, RewardMode mode,
                 double reference_latency_us, std::size_t scan_window);

  // Examines the next scan_window placed pages (round robin), colder pages
  // first, and queues pages whose chosen device differs from their current
  // one. Returns the number of pages enqueued.
  std::size_t scan_and_nominate(const HssView& hss, std::span<const PageAddr> placed_pages,
                                MigrationQueue& queue, Rng& rng);

  using ObserveFn = std::function<StateVector(PageAddr)>;

  // The queued entry for `page` was discarded without moving data.
  void on_dropped(PageAddr page, const ObserveFn& observe);
  // `page` has physically moved; cost_us is its read plus write service time.
  void on_migrated(PageAddr page, double cost_us, const ObserveFn& observe);
  // Latency of every serviced request, in completion order.
  void on_request_latency(double latency_us, const ObserveFn& observe);
  // Settles everything still open with reward 0.
  void finish(const ObserveFn& observe);

  std::uint64_t nominations() const { return nominations_; }
  std::uint64_t experiences() const { return experiences_; }
  std::size_t open_batch_size() const { return open_batch_.size(); }
  std::size_t awaiting_migration() const { return queued_.size(); }
  const std::vector<double>& settled_rewards() const { return settled_rewards_; }
  LearningCore& core() { return *core_; }
  const MigrationRewardConfig& reward_config() const { return cfg_; }

 private:
  struct Nomination {
    PageAddr page = 0;
    StateVector state{};
    std::size_t action = 0;
    std::uint64_t acc_intr = 0;
    std::uint64_t migr_intr = 0;
  };
  struct SettlingBatch {
    std::vector<Nomination> records;
    std::vector<double> latencies;
  };

  void complete(const Nomination& rec, double raw_reward, const ObserveFn& observe);

  std::shared_ptr<LearningCore> core_;
  MigrationRewardConfig cfg_;
  RewardMode mode_;
  double reference_latency_us_;
  std::size_t scan_window_;
  std::size_t cursor_ = 0;

  std::unordered_map<PageAddr, Nomination> queued_;
  std::vector<Nomination> open_batch_;
  std::deque<SettlingBatch> settling_;
  std::vector<double> settled_rewards_;
  std::uint64_t nominations_ = 0;
  std::uint64_t experiences_ = 0;
};

}  // namespace hss
