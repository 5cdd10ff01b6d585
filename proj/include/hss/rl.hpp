#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hss/metadata.hpp"
#include "hss/random.hpp"

namespace hss::rl {

// Fixed, evenly spaced return support. A single atom means a scalar Q head.
struct Support {
  std::size_t atoms = 51;
  double v_min = -1.0;
  double v_max = 1.0;

  double delta() const { return atoms > 1 ? (v_max - v_min) / static_cast<double>(atoms - 1) : 0.0; }
  double atom(std::size_t j) const { return v_min + static_cast<double>(j) * delta(); }
  std::vector<double> atoms_vector() const;
};

enum class OptimizerKind { Sgd, Adam };

// Which network supplies the next-state return distribution in the target.
// The greedy next action always comes from the inference network.
enum class BootstrapNet { Inference, Training };

struct Hyperparameters {
  double gamma = 0.9;
  double learning_rate = 1e-3;
  double epsilon = 0.001;
  std::size_t batch_size = 128;
  std::size_t buffer_size = 1000;
  std::size_t num_atoms = 51;
  double v_min = -1.0;
  double v_max = 1.0;
  std::size_t sync_interval = 1000;  // requests between inference-net refreshes
  std::size_t train_every = 10;      // requests between training steps
  OptimizerKind optimizer = OptimizerKind::Adam;
  BootstrapNet bootstrap = BootstrapNet::Training;

  void validate() const;
  Support support() const { return {num_atoms, v_min, v_max}; }

  static Hyperparameters placement_defaults();
  static Hyperparameters migration_defaults();
};

// 7 -> 10 (swish) -> actions * atoms. Parameters live in one flat vector:
// W1[hidden][input], b1[hidden], W2[out][hidden], b2[out].
class Network {
 public:
  static constexpr std::size_t kInputDim = kStateDim;
  static constexpr std::size_t kHiddenDim = 10;

  Network(std::size_t num_actions, Support support);

  // Uniform in +-1/sqrt(fan_in) for weights and biases.
  static Network random(std::size_t num_actions, Support support, Rng& rng);

  std::size_t num_actions() const { return actions_; }
  std::size_t num_atoms() const { return support_.atoms; }
  std::size_t output_dim() const { return actions_ * support_.atoms; }
  const Support& support() const { return support_; }

  // Weights only, biases excluded.
  std::size_t weight_count() const { return kInputDim * kHiddenDim + kHiddenDim * output_dim(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double& w1(std::size_t h, std::size_t i) { return params_[h * kInputDim + i]; }
  double w1(std::size_t h, std::size_t i) const { return params_[h * kInputDim + i]; }
  double& b1(std::size_t h) { return params_[b1_offset() + h]; }
  double b1(std::size_t h) const { return params_[b1_offset() + h]; }
  double& w2(std::size_t o, std::size_t h) { return params_[w2_offset() + o * kHiddenDim + h]; }
  double w2(std::size_t o, std::size_t h) const { return params_[w2_offset() + o * kHiddenDim + h]; }
  double& b2(std::size_t o) { return params_[b2_offset() + o]; }
  double b2(std::size_t o) const { return params_[b2_offset() + o]; }

  static constexpr std::size_t b1_offset() { return kInputDim * kHiddenDim; }
  static constexpr std::size_t w2_offset() { return b1_offset() + kHiddenDim; }
  std::size_t b2_offset() const { return w2_offset() + output_dim() * kHiddenDim; }

  bool same_shape(const Network& other) const;

 private:
  std::size_t actions_;
  Support support_;
  std::vector<double> params_;
};

double swish(double z);
double swish_grad(double z);

struct ForwardPass {
  std::array<double, Network::kHiddenDim> pre{};
  std::array<double, Network::kHiddenDim> hidden{};
  std::vector<double> logits;  // actions x atoms, row-major
  std::vector<double> probs;   // per-action softmax over atoms (all ones for N=1)
  std::vector<double> q;       // expected return per action
  std::vector<double> log_norm;  // per-action log-sum-exp of the logits (N > 1)

  std::span<const double> distribution(std::size_t action, std::size_t atoms) const {
    return std::span<const double>(probs).subspan(action * atoms, atoms);
  }
};

ForwardPass forward(const Network& net, const StateVector& input);

std::size_t greedy_action(std::span<const double> q);

// Uniform random action with probability epsilon, otherwise argmax Q with
// ties going to the lowest index.
std::size_t select_action(const Network& net, const StateVector& input, double epsilon, Rng& rng);

// Categorical projection of reward + gamma * z onto the support. For a
// single atom the result is {1}; callers use the scalar TD target instead.
std::vector<double> c51_project(double reward, double gamma, std::span<const double> next_distribution,
                                const Support& support);

struct Experience {
  StateVector state{};
  std::size_t action = 0;
  double reward = 0.0;
  StateVector next_state{};
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Experience& e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_pushed() const { return pushed_; }
  const Experience& operator[](std::size_t i) const { return items_[i]; }

  // Uniform draws with replacement.
  std::vector<Experience> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::size_t pushed_ = 0;
  std::vector<Experience> items_;
};

// Frozen learning target for one experience.
struct Target {
  std::size_t action = 0;
  std::vector<double> distribution;  // categorical head
  double value = 0.0;                // scalar head
};

std::vector<Target> compute_targets(const Network& training, const Network& inference,
                                    std::span<const Experience> batch, const Hyperparameters& hp);

// Mean cross-entropy (categorical) or mean squared TD error (scalar) of the
// taken actions, with its gradient w.r.t. every parameter when `grad` is set.
double loss_and_gradient(const Network& net, std::span<const Experience> batch,
                         std::span<const Target> targets, std::vector<double>* grad);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  void step(std::span<double> params, std::span<const double> grad);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  double lr_;
  std::uint64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// One gradient step on `training`. Empty batch: no-op, nullopt.
std::optional<double> train_step(Network& training, const Network& inference,
                                 std::span<const Experience> batch, const Hyperparameters& hp,
                                 Optimizer& optimizer);

// inference := training. Throws InputError on shape mismatch.
void sync(const Network& training, Network& inference);

// Text checkpoint: a shape header line followed by one parameter per line.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace hss::rl
