#include "hss/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <cstdio>

namespace hss::rl {

std::vector<double> Support::atoms_vector() const {
  std::vector<double> z(atoms);
  for (std::size_t j = 0; j < atoms; ++j) z[j] = atom(j);
  return z;
}

void Hyperparameters::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("gamma must lie in [0,1]");
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("epsilon must lie in [0,1]");
  if (batch_size == 0) throw InputError("batch_size must be positive");
  if (buffer_size == 0) throw InputError("buffer_size must be positive");
  if (num_atoms == 0) throw InputError("num_atoms must be positive");
  if (num_atoms > 1 && !(v_min < v_max)) throw InputError("v_min must be below v_max");
  if (sync_interval == 0) throw InputError("sync_interval must be positive");
  if (train_every == 0) throw InputError("train_every must be positive");
}

Hyperparameters Hyperparameters::placement_defaults() {
  Hyperparameters hp;
  hp.gamma = 0.9;
  hp.learning_rate = 1e-3;
  hp.epsilon = 0.001;
  hp.batch_size = 128;
  hp.buffer_size = 1000;
  return hp;
}

Hyperparameters Hyperparameters::migration_defaults() {
  Hyperparameters hp;
  hp.gamma = 0.1;
  hp.learning_rate = 1e-2;
  hp.epsilon = 0.001;
  hp.batch_size = 256;
  hp.buffer_size = 1000;
  return hp;
}

Network::Network(std::size_t num_actions, Support support)
    : actions_(num_actions), support_(support) {
  if (num_actions == 0) throw InputError("a network needs at least one action");
  if (support.atoms == 0) throw InputError("a network needs at least one atom");
  params_.assign(b2_offset() + output_dim(), 0.0);
}

Network Network::random(std::size_t num_actions, Support support, Rng& rng) {
  Network net(num_actions, support);
  const double l1 = 1.0 / std::sqrt(static_cast<double>(kInputDim));
  const double l2 = 1.0 / std::sqrt(static_cast<double>(kHiddenDim));
  for (std::size_t k = 0; k < w2_offset(); ++k) net.params_[k] = rng.uniform(-l1, l1);
  for (std::size_t k = w2_offset(); k < net.params_.size(); ++k) net.params_[k] = rng.uniform(-l2, l2);
  return net;
}

bool Network::same_shape(const Network& other) const {
  return actions_ == other.actions_ && support_.atoms == other.support_.atoms;
}

double swish(double z) { return z / (1.0 + std::exp(-z)); }

double swish_grad(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s + z * s * (1.0 - s);
}

namespace {

// Fills fp in place. With `row` set, only that action's distribution, Q and
// log-normalizer are computed; the other rows are left stale.
void forward_into(const Network& net, const StateVector& x, ForwardPass& fp, std::optional<std::size_t> row) {
  constexpr std::size_t H = Network::kHiddenDim;
  constexpr std::size_t I = Network::kInputDim;
  const std::span<const double> params = net.params();
  const double* w1 = params.data();
  const double* b1 = params.data() + Network::b1_offset();
  for (std::size_t h = 0; h < H; ++h) {
    double z = b1[h];
    for (std::size_t i = 0; i < I; ++i) z += w1[h * I + i] * x[i];
    fp.pre[h] = z;
    fp.hidden[h] = swish(z);
  }

  const std::size_t A = net.num_actions();
  const std::size_t N = net.num_atoms();
  const double* w2 = params.data() + Network::w2_offset();
  const double* b2 = params.data() + net.b2_offset();
  fp.logits.resize(A * N);
  for (std::size_t o = 0; o < A * N; ++o) {
    const double* w = w2 + o * H;
    double z = b2[o];
    for (std::size_t h = 0; h < H; ++h) z += w[h] * fp.hidden[h];
    fp.logits[o] = z;
  }

  fp.q.assign(A, 0.0);
  if (N == 1) {
    fp.probs.assign(A, 1.0);
    for (std::size_t a = 0; a < A; ++a) fp.q[a] = fp.logits[a];
    return;
  }

  fp.probs.resize(A * N);
  fp.log_norm.resize(A);
  const Support& s = net.support();
  const double v_min = s.v_min;
  const double dz = s.delta();
  const std::size_t first = row.value_or(0);
  const std::size_t last = row ? *row + 1 : A;
  for (std::size_t a = first; a < last; ++a) {
    const double* logit = fp.logits.data() + a * N;
    double* p = fp.probs.data() + a * N;
    const double mx = *std::max_element(logit, logit + N);
    double sum = 0.0;
    for (std::size_t j = 0; j < N; ++j) sum += p[j] = std::exp(logit[j] - mx);
    const double inv = 1.0 / sum;
    double q = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      p[j] *= inv;
      q += p[j] * (v_min + static_cast<double>(j) * dz);
    }
    fp.q[a] = q;
    fp.log_norm[a] = mx + std::log(sum);
  }
}

}  // namespace

ForwardPass forward(const Network& net, const StateVector& x) {
  ForwardPass fp;
  forward_into(net, x, fp, std::nullopt);
  return fp;
}

std::size_t greedy_action(std::span<const double> q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

std::size_t select_action(const Network& net, const StateVector& input, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.below(net.num_actions());
  return greedy_action(forward(net, input).q);
}

std::vector<double> c51_project(double reward, double gamma, std::span<const double> next,
                                const Support& support) {
  const std::size_t N = support.atoms;
  if (N == 1) return {1.0};

  std::vector<double> m(N, 0.0);
  const double dz = support.delta();
  for (std::size_t j = 0; j < N; ++j) {
    const double tz = std::clamp(reward + gamma * support.atom(j), support.v_min, support.v_max);
    const double b = std::clamp((tz - support.v_min) / dz, 0.0, static_cast<double>(N - 1));
    const auto lo = static_cast<std::size_t>(std::floor(b));
    const auto hi = static_cast<std::size_t>(std::ceil(b));
    if (lo == hi) {
      m[lo] += next[j];
    } else {
      m[lo] += next[j] * (static_cast<double>(hi) - b);
      m[hi] += next[j] * (b - static_cast<double>(lo));
    }
  }
  return m;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("replay buffer capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(const Experience& e) {
  if (items_.size() < capacity_) {
    items_.push_back(e);
  } else {
    items_[next_] = e;
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

std::vector<Experience> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  std::vector<Experience> out;
  if (items_.empty()) return out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) out.push_back(items_[rng.below(items_.size())]);
  return out;
}

std::vector<Target> compute_targets(const Network& training, const Network& inference,
                                    std::span<const Experience> batch, const Hyperparameters& hp) {
  const Network& evaluator = hp.bootstrap == BootstrapNet::Training ? training : inference;
  const Support& support = training.support();
  const std::size_t N = support.atoms;

  std::vector<Target> targets;
  targets.reserve(batch.size());
  ForwardPass next;
  for (const auto& e : batch) {
    Target t;
    t.action = e.action;
    const double gamma = e.terminal ? 0.0 : hp.gamma;
    forward_into(inference, e.next_state, next, std::nullopt);
    const std::size_t next_action = greedy_action(next.q);
    if (&evaluator != &inference) forward_into(evaluator, e.next_state, next, next_action);
    if (N == 1) {
      t.value = e.reward + gamma * next.q[next_action];
    } else {
      t.distribution = c51_project(e.reward, gamma, next.distribution(next_action, N), support);
    }
    targets.push_back(std::move(t));
  }
  return targets;
}

double loss_and_gradient(const Network& net, std::span<const Experience> batch,
                         std::span<const Target> targets, std::vector<double>* grad) {
  constexpr std::size_t H = Network::kHiddenDim;
  constexpr std::size_t I = Network::kInputDim;
  const std::size_t N = net.num_atoms();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  if (grad) grad->assign(net.params().size(), 0.0);
  std::vector<double> dlogit(N);
  double loss = 0.0;
  ForwardPass fp;

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& e = batch[k];
    const auto& t = targets[k];
    const std::size_t a = t.action;
    forward_into(net, e.state, fp, a);

    if (N == 1) {
      const double err = fp.q[a] - t.value;
      loss += err * err * inv_b;
      dlogit[0] = 2.0 * err * inv_b;
    } else {
      const double* row = fp.logits.data() + a * N;
      const double log_z = fp.log_norm[a];
      const auto p = fp.distribution(a, N);
      for (std::size_t j = 0; j < N; ++j) {
        const double m = t.distribution[j];
        if (m > 0.0) loss -= m * (row[j] - log_z) * inv_b;
        dlogit[j] = (p[j] - m) * inv_b;
      }
    }
    if (!grad) continue;

    auto& g = *grad;
    std::array<double, H> dhidden{};
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t o = a * N + j;
      const double d = dlogit[j];
      g[net.b2_offset() + o] += d;
      for (std::size_t h = 0; h < H; ++h) {
        g[Network::w2_offset() + o * H + h] += d * fp.hidden[h];
        dhidden[h] += d * net.w2(o, h);
      }
    }
    for (std::size_t h = 0; h < H; ++h) {
      const double dpre = dhidden[h] * swish_grad(fp.pre[h]);
      g[Network::b1_offset() + h] += dpre;
      for (std::size_t i = 0; i < I; ++i) g[h * I + i] += dpre * e.state[i];
    }
  }
  return loss;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr_ * grad[k];
    return;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = kBeta1 * m_[k] + (1.0 - kBeta1) * grad[k];
    v_[k] = kBeta2 * v_[k] + (1.0 - kBeta2) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + kEps);
  }
}

std::optional<double> train_step(Network& training, const Network& inference,
                                 std::span<const Experience> batch, const Hyperparameters& hp,
                                 Optimizer& optimizer) {
  if (batch.empty()) return std::nullopt;
  const auto targets = compute_targets(training, inference, batch, hp);
  std::vector<double> grad;
  const double loss = loss_and_gradient(training, batch, targets, &grad);
  optimizer.step(training.params(), grad);
  return loss;
}

void sync(const Network& training, Network& inference) {
  if (!training.same_shape(inference)) throw InputError("cannot sync networks of different shapes");
  inference = training;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  const Support& s = net.support();
  out << "hss-net input=" << Network::kInputDim << " hidden=" << Network::kHiddenDim
      << " actions=" << net.num_actions() << " atoms=" << s.atoms << " v_min=" << std::setprecision(17)
      << s.v_min << " v_max=" << s.v_max << '\n';
  for (double p : net.params()) out << p << '\n';
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  std::size_t input = 0, hidden = 0, actions = 0;
  Support s;
  const int matched = std::sscanf(header.c_str(), "hss-net input=%zu hidden=%zu actions=%zu atoms=%zu v_min=%lf v_max=%lf",
                                  &input, &hidden, &actions, &s.atoms, &s.v_min, &s.v_max);
  if (matched != 6 || input != Network::kInputDim || hidden != Network::kHiddenDim)
    throw InputError("bad checkpoint header in '" + path.string() + "'");
  Network net(actions, s);
  for (double& p : net.params()) {
    if (!(in >> p)) throw InputError("truncated checkpoint '" + path.string() + "'");
  }
  return net;
}

}  // namespace hss::rl
