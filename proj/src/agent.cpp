#include "sfcmig/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "sfcmig/error.hpp"

namespace sfcmig {

double AgentConfig::exploitation(int episode) const {
  if (eps_anneal_episodes <= 0) throw Error("agent", "annealing horizon is unresolved");
  double progress = std::min(1.0, static_cast<double>(episode) / eps_anneal_episodes);
  return eps_start + (eps_end - eps_start) * progress;
}

void AgentConfig::validate() const {
  if (gamma < 0.0 || gamma >= 1.0) throw Error("agent", "gamma must lie in [0, 1)");
  if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
    throw Error("agent", "exploitation probabilities must lie in [0, 1]");
  if (learning_rate <= 0.0) throw Error("agent", "learning rate must be positive");
  if (batch_size <= 0) throw Error("agent", "batch size must be positive");
  if (buffer_capacity <= batch_size)
    throw Error("agent", "buffer capacity must exceed the batch size");
  if (target_update_period <= 0) throw Error("agent", "target update period must be positive");
  if (tau <= 0.0 || tau > 1.0) throw Error("agent", "tau must lie in (0, 1]");
  if (train_steps_per_slot < 0) throw Error("agent", "train steps per slot must be >= 0");
  for (int width : hidden)
    if (width <= 0) throw Error("agent", "hidden layer widths must be positive");
}

QNetwork::QNetwork(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& init_rng) {
  if (input_dim <= 0 || output_dim <= 0) throw Error("agent", "network dimensions must be positive");
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int width : hidden) {
    if (width <= 0) throw Error("agent", "hidden layer widths must be positive");
    dims.push_back(width);
  }
  dims.push_back(output_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    int fan_in = dims[l], fan_out = dims[l + 1];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = init_rng.uniform(-limit, limit);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

Eigen::VectorXd QNetwork::forward(const Eigen::VectorXd& input) const {
  if (weights_.empty()) throw Error("agent", "forward on an uninitialized network");
  if (input.size() != weights_.front().cols())
    throw Error("agent", "observation size does not match the network input");
  Eigen::VectorXd a = input;
  for (size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    a = (l + 1 < weights_.size()) ? z.cwiseMax(0.0).eval() : z;
  }
  return a;
}

QNetwork::Gradients QNetwork::zero_gradients() const {
  Gradients g;
  for (size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

void QNetwork::accumulate_gradients(const Eigen::VectorXd& input,
                                    const Eigen::VectorXd& output_grad, Gradients& grads) const {
  if (output_grad.size() != output_dim())
    throw Error("agent", "output gradient size does not match the network output");
  std::vector<Eigen::VectorXd> activations{input};
  std::vector<Eigen::VectorXd> pre;  // pre-activation of each hidden layer
  Eigen::VectorXd a = input;
  for (size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    if (l + 1 < weights_.size()) {
      pre.push_back(z);
      a = z.cwiseMax(0.0);
      activations.push_back(a);
    }
  }
  Eigen::VectorXd delta = output_grad;
  for (size_t l = weights_.size(); l-- > 0;) {
    grads.weights[l] += delta * activations[l].transpose();
    grads.biases[l] += delta;
    if (l > 0) {
      delta = (weights_[l].transpose() * delta).eval();
      const Eigen::VectorXd& z = pre[l - 1];
      for (Eigen::Index i = 0; i < delta.size(); ++i)
        if (z[i] <= 0.0) delta[i] = 0.0;
    }
  }
}

void QNetwork::apply_gradients(const Gradients& grads, double learning_rate) {
  for (size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] -= learning_rate * grads.weights[l];
    biases_[l] -= learning_rate * grads.biases[l];
  }
}

void QNetwork::soft_update_from(const QNetwork& online, double tau) {
  if (online.weights_.size() != weights_.size())
    throw Error("agent", "soft update across mismatched architectures");
  for (size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] = tau * online.weights_[l] + (1.0 - tau) * weights_[l];
    biases_[l] = tau * online.biases_[l] + (1.0 - tau) * biases_[l];
  }
}

int QNetwork::input_dim() const {
  return weights_.empty() ? 0 : static_cast<int>(weights_.front().cols());
}

int QNetwork::output_dim() const {
  return weights_.empty() ? 0 : static_cast<int>(weights_.back().rows());
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size()) + static_cast<std::size_t>(biases_[l].size());
  return n;
}

namespace {

// Maps a flat index to (layer, offset-within-layer); weights row-major first,
// then the bias vector.
template <typename Weights, typename Biases, typename Fn>
decltype(auto) with_parameter(Weights& weights, Biases& biases, std::size_t index, Fn&& fn) {
  for (size_t l = 0; l < weights.size(); ++l) {
    std::size_t wn = static_cast<std::size_t>(weights[l].size());
    std::size_t bn = static_cast<std::size_t>(biases[l].size());
    if (index < wn) {
      Eigen::Index cols = weights[l].cols();
      Eigen::Index r = static_cast<Eigen::Index>(index) / cols;
      Eigen::Index c = static_cast<Eigen::Index>(index) % cols;
      return fn(weights[l](r, c));
    }
    index -= wn;
    if (index < bn) return fn(biases[l](static_cast<Eigen::Index>(index)));
    index -= bn;
  }
  throw Error("agent", "parameter index out of range");
}

}  // namespace

double QNetwork::get_parameter(std::size_t index) const {
  return with_parameter(weights_, biases_, index, [](const double& v) { return v; });
}

void QNetwork::set_parameter(std::size_t index, double value) {
  with_parameter(weights_, biases_, index, [value](double& v) {
    v = value;
    return 0;
  });
}

void QNetwork::save(std::ostream& out) const {
  out << "sfcmig-qnet 1\n" << weights_.size() << "\n";
  for (size_t l = 0; l < weights_.size(); ++l)
    out << weights_[l].cols() << " " << weights_[l].rows() << "\n";
  char buf[64];
  std::size_t n = parameter_count();
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%a", get_parameter(i));
    out << buf << "\n";
  }
}

QNetwork QNetwork::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "sfcmig-qnet" || version != 1)
    throw Error("agent", "unrecognized network checkpoint header");
  size_t layers = 0;
  if (!(in >> layers) || layers == 0) throw Error("agent", "checkpoint layer count is invalid");
  QNetwork net;
  for (size_t l = 0; l < layers; ++l) {
    long cols = 0, rows = 0;
    if (!(in >> cols >> rows) || cols <= 0 || rows <= 0)
      throw Error("agent", "checkpoint layer shape is invalid");
    net.weights_.push_back(Eigen::MatrixXd::Zero(rows, cols));
    net.biases_.push_back(Eigen::VectorXd::Zero(rows));
  }
  std::size_t n = net.parameter_count();
  for (std::size_t i = 0; i < n; ++i) {
    std::string token;
    if (!(in >> token)) throw Error("agent", "checkpoint is truncated");
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0')
      throw Error("agent", "checkpoint holds a malformed parameter");
    net.set_parameter(i, v);
  }
  return net;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("agent", "replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw Error("agent", "replay buffer index out of range");
  if (data_.size() < capacity_) return data_[i];
  return data_[(head_ + i) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (batch <= 0 || static_cast<std::size_t>(batch) > data_.size())
    throw Error("agent", "cannot sample more transitions than the buffer holds");
  std::vector<std::size_t> idx(data_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<const Transition*> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    int j = i + rng.uniform_int(static_cast<int>(idx.size()) - i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    out.push_back(&at(idx[static_cast<std::size_t>(i)]));
  }
  return out;
}

int action_count(int chain_length, int n_function_nodes) {
  if (chain_length <= 0) throw Error("agent", "chain length must be positive");
  if (n_function_nodes <= 0) throw Error("agent", "need at least one function node");
  return chain_length * (n_function_nodes - 1) + 1;
}

MigrationAction decode_action(const NetworkState& state, const Problem& problem, int chain_id,
                              int index) {
  const ServiceChain& chain = problem.chain(chain_id);
  int n = problem.n_function_nodes();
  int count = action_count(chain.length(), n);
  if (index < 0 || index >= count) throw Error("agent", "action index out of range");
  if (index == 0) return MigrationAction::noop(chain_id);
  int per = n - 1;
  int m = (index - 1) / per;
  int j = (index - 1) % per;
  int current = state.host(chain_id, m);
  for (int node : problem.topology.function_nodes()) {
    if (node == current) continue;
    if (j == 0) return MigrationAction::move(chain_id, m, node);
    --j;
  }
  throw Error("agent", "action index does not map to a candidate node");
}

int encode_action(const NetworkState& state, const Problem& problem, int chain_id,
                  const MigrationAction& action) {
  if (action.chain != chain_id) throw Error("agent", "action belongs to a different chain");
  if (action.is_noop()) return 0;
  const ServiceChain& chain = problem.chain(chain_id);
  if (action.vnf_index < 0 || action.vnf_index >= chain.length())
    throw Error("agent", "action VNF position out of range");
  int per = problem.n_function_nodes() - 1;
  int current = state.host(chain_id, action.vnf_index);
  if (action.target == current) throw Error("agent", "move onto the current host has no index");
  int j = 0;
  for (int node : problem.topology.function_nodes()) {
    if (node == current) continue;
    if (node == action.target) return 1 + action.vnf_index * per + j;
    ++j;
  }
  throw Error("agent", "move target is not a function node");
}

Subagent::Subagent(int chain_id, int obs_dim, int n_actions, const AgentConfig& config,
                   std::uint64_t init_seed, std::uint64_t explore_seed)
    : chain_id_(chain_id),
      n_actions_(n_actions),
      config_(config),
      buffer_(static_cast<std::size_t>(config.buffer_capacity)),
      rng_(explore_seed),
      epsilon_(config.eps_start) {
  config_.validate();
  if (n_actions <= 0) throw Error("agent", "action space must be non-empty");
  Rng init_rng(init_seed);
  online_ = QNetwork(obs_dim, config_.hidden, n_actions, init_rng);
  target_ = online_;
}

int Subagent::greedy_action(const Eigen::VectorXd& obs) const {
  Eigen::VectorXd q = online_.forward(obs);
  int best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = static_cast<int>(i);
  return best;
}

int Subagent::select_action(const Eigen::VectorXd& obs) {
  if (rng_.uniform() < epsilon_) return greedy_action(obs);
  return rng_.uniform_int(n_actions_);
}

double Subagent::train_step() {
  if (buffer_.size() <= static_cast<std::size_t>(config_.batch_size))
    throw Error("agent", "replay buffer holds too few transitions to train");
  std::vector<const Transition*> batch = buffer_.sample(config_.batch_size, rng_);
  QNetwork::Gradients grads = online_.zero_gradients();
  double loss = 0.0;
  for (const Transition* t : batch) {
    Eigen::VectorXd q = online_.forward(t->state);
    double bootstrap = target_.forward(t->next_state).maxCoeff();
    double target_value = t->reward + config_.gamma * bootstrap;
    double diff = q[t->action] - target_value;
    loss += diff * diff;
    Eigen::VectorXd output_grad = Eigen::VectorXd::Zero(n_actions_);
    output_grad[t->action] = 2.0 * diff / config_.batch_size;
    online_.accumulate_gradients(t->state, output_grad, grads);
  }
  loss /= config_.batch_size;
  online_.apply_gradients(grads, config_.learning_rate);
  ++steps_;
  if (steps_ % config_.target_update_period == 0) target_.soft_update_from(online_, config_.tau);
  return loss;
}

double gradient_check(QNetwork& network, const Eigen::VectorXd& obs, const Eigen::VectorXd& target,
                      double step) {
  auto loss_at = [&]() {
    Eigen::VectorXd diff = network.forward(obs) - target;
    return diff.squaredNorm();
  };
  QNetwork::Gradients grads = network.zero_gradients();
  Eigen::VectorXd output_grad = 2.0 * (network.forward(obs) - target);
  network.accumulate_gradients(obs, output_grad, grads);

  double worst = 0.0;
  std::size_t n = network.parameter_count();
  std::size_t flat = 0;
  for (size_t l = 0; l < grads.weights.size(); ++l) {
    auto compare = [&](double analytic) {
      std::size_t i = flat++;
      double saved = network.get_parameter(i);
      network.set_parameter(i, saved + step);
      double up = loss_at();
      network.set_parameter(i, saved - step);
      double down = loss_at();
      network.set_parameter(i, saved);
      double numeric = (up - down) / (2.0 * step);
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-9});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    const Eigen::MatrixXd& w = grads.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) compare(w(r, c));
    for (Eigen::Index i = 0; i < grads.biases[l].size(); ++i) compare(grads.biases[l][i]);
  }
  if (flat != n) throw Error("agent", "gradient traversal missed parameters");
  return worst;
}

}  // namespace sfcmig
