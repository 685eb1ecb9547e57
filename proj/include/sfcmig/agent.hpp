#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sfcmig/model.hpp"
#include "sfcmig/rng.hpp"
#include "sfcmig/state.hpp"

namespace sfcmig {

// Learning hyperparameters shared by every subagent.
struct AgentConfig {
  double gamma = 0.9;
  // Exploitation probability: starts low, anneals up over episodes.
  double eps_start = 0.1;
  double eps_end = 0.95;
  int eps_anneal_episodes = 0;  // 0 -> resolved to half the episode cap
  double learning_rate = 1e-3;
  int batch_size = 32;
  int buffer_capacity = 10000;
  int target_update_period = 100;
  double tau = 0.1;
  std::vector<int> hidden = {64, 64};
  int train_steps_per_slot = 1;

  // Exploitation probability for a given absolute episode index.
  double exploitation(int episode) const;
  void validate() const;
};

// Fully connected ReLU network with a linear head. All math is dense Eigen;
// an empty hidden list degenerates to a single linear layer.
class QNetwork {
 public:
  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  QNetwork() = default;
  QNetwork(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& init_rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  Gradients zero_gradients() const;
  // Backpropagates d(loss)/d(output) for one input, adding into grads.
  void accumulate_gradients(const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad,
                            Gradients& grads) const;
  void apply_gradients(const Gradients& grads, double learning_rate);

  // theta_target <- tau * theta_online + (1 - tau) * theta_target
  void soft_update_from(const QNetwork& online, double tau);

  int input_dim() const;
  int output_dim() const;
  int layer_count() const { return static_cast<int>(weights_.size()); }

  // Flat parameter view (weights row-major, then bias, layer by layer); used
  // by the finite-difference check and the checkpoint format.
  std::size_t parameter_count() const;
  double get_parameter(std::size_t index) const;
  void set_parameter(std::size_t index, double value);

  void save(std::ostream& out) const;
  static QNetwork load(std::istream& in);

 private:
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

// Fixed-capacity FIFO of transitions with uniform sampling w/o replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  std::vector<const Transition*> sample(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // insertion point once full
  std::vector<Transition> data_;
};

// Size of one chain's action space: stay put, or move any of its g VNFs to
// any of the other N-1 function nodes.
int action_count(int chain_length, int n_function_nodes);

// Index 0 is the no-op. Index 1 + m*(N-1) + j moves VNF m to the j-th
// function node in ascending id order, skipping the VNF's current host.
MigrationAction decode_action(const NetworkState& state, const Problem& problem, int chain_id,
                              int index);
int encode_action(const NetworkState& state, const Problem& problem, int chain_id,
                  const MigrationAction& action);

// One chain's learner: online and target networks over its local observation.
class Subagent {
 public:
  Subagent(int chain_id, int obs_dim, int n_actions, const AgentConfig& config,
           std::uint64_t init_seed, std::uint64_t explore_seed);

  int chain_id() const { return chain_id_; }
  int n_actions() const { return n_actions_; }

  // Exploitation probability used by select_action.
  void set_epsilon(double eps) { epsilon_ = eps; }
  double epsilon() const { return epsilon_; }

  // With probability epsilon exploit (greedy), otherwise explore uniformly.
  int select_action(const Eigen::VectorXd& obs);
  // Lowest-index argmax of the online network.
  int greedy_action(const Eigen::VectorXd& obs) const;

  void store(Transition t) { buffer_.push(std::move(t)); }
  const ReplayBuffer& buffer() const { return buffer_; }

  // One SGD step on a sampled batch; returns the pre-update TD loss.
  // Requires strictly more stored transitions than the batch size.
  double train_step();

  long train_steps() const { return steps_; }
  QNetwork& online() { return online_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }

 private:
  int chain_id_;
  int n_actions_;
  AgentConfig config_;
  QNetwork online_;
  QNetwork target_;
  ReplayBuffer buffer_;
  Rng rng_;
  double epsilon_;
  long steps_ = 0;
};

// Max relative mismatch between backpropagated and central-difference
// gradients of the squared error against `target`. Zero-gradient entries
// compare against an absolute floor so an exact match reports 0.
double gradient_check(QNetwork& network, const Eigen::VectorXd& obs,
                      const Eigen::VectorXd& target, double step = 1e-5);

}  // namespace sfcmig
