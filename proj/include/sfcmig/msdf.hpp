#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "sfcmig/agent.hpp"
#include "sfcmig/cost.hpp"
#include "sfcmig/model.hpp"
#include "sfcmig/state.hpp"

namespace sfcmig {

// One slot's migration decisions in application order, stamped with the
// fingerprint of the state they were planned against.
struct JointStrategy {
  std::vector<std::pair<int, MigrationAction>> actions;
  std::uint64_t planning_fingerprint = 0;
};

// Everything a slot produced: the cost ledger (per-chain terms evaluated on
// the successive intermediate states, network-wide terms on the final one),
// the number of actual moves, and the final overload degree.
struct SlotOutcome {
  CostBreakdown costs;
  int migrations = 0;
  double overload = 0.0;
};

// Declares convergence once every tracked series has a full window whose
// variance sits at or below the threshold.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(int window, double threshold);

  void record(int id, double value);
  bool converged() const;
  double variance(int id) const;
  int window() const { return window_; }

 private:
  int window_;
  double threshold_;
  std::map<int, std::deque<double>> series_;
};

// Chains ordered by descending overload probability, ties to the lower id.
std::vector<int> sort_chains(const NetworkState& state, const ResourceReport& resources,
                             const Problem& problem);

// Applies the ordered decisions to `state`, attributing each chain's
// migration cost and reward to the intermediate transition its own action
// causes. This is the one accounting path shared by planning, execution,
// and the heuristic policies.
SlotOutcome apply_decisions(NetworkState& state,
                            const std::vector<std::pair<int, MigrationAction>>& actions,
                            const Problem& problem);

// Lets every subagent pick its action successively on a scratch copy of the
// network, never touching `real`. Appends one transition per chain (reward
// as seen during planning) when `transitions` is given.
JointStrategy plan_joint(const NetworkState& real, std::vector<Subagent>& agents,
                         const std::vector<int>& order, const Problem& problem,
                         std::vector<Transition>* transitions);

// Replays a planned strategy on the live network. Refuses to apply against
// any state other than the one the plan was made for.
SlotOutcome apply_joint(NetworkState& real, const JointStrategy& strategy,
                        const Problem& problem);

struct MsdfConfig {
  int max_episodes = 300;
  int eval_episodes = 5;
  int monitor_window = 50;
  double variance_threshold = 1.0;
  bool resort_each_slot = true;
  // Called after every applied slot; eval marks the greedy episodes run
  // after training stops.
  std::function<void(int episode, int slot, bool eval, const JointStrategy&, const SlotOutcome&)>
      slot_callback;

  void validate() const;
};

struct EpisodeStats {
  int episode = 0;
  double epsilon = 0.0;
  std::map<int, double> chain_return;  // summed per-chain rewards
  double total_cost = 0.0;             // summed slot objectives
  int migrations = 0;
  double mean_overload = 0.0;
  double mean_loss = 0.0;
};

struct MsdfResult {
  std::vector<EpisodeStats> training;
  std::vector<EpisodeStats> eval;
  int converged_episode = -1;  // -1: training hit the episode cap instead
  NetworkState final_state;
  std::vector<Subagent> agents;
};

// Trains one subagent per chain with successive planning on shared state;
// state persists across episodes. After training (convergence or cap), runs
// the greedy evaluation episodes without learning.
MsdfResult run_msdf(const Problem& problem, AgentConfig agent_config, const MsdfConfig& config);

// Joint action space of the single-learner comparator.
long joint_action_count(const Problem& problem);

// Mixed-radix decoding of a joint index: chain ids ascending, each digit in
// that chain's local action space, all host lookups against `state`.
std::vector<std::pair<int, MigrationAction>> decode_joint_action(const NetworkState& state,
                                                                 const Problem& problem,
                                                                 long index);

// Global observation of the comparator: per-chain demand blocks (ascending
// chain id) followed by one shared block of node headrooms.
Eigen::VectorXd observe_global(const NetworkState& state, const ResourceReport& resources,
                               const Problem& problem);

struct MonolithicResult {
  std::vector<EpisodeStats> training;
  std::vector<EpisodeStats> eval;
  int converged_episode = -1;
  NetworkState final_state;
};

// Single learner over the joint action space, same reward structure with the
// chains' migration costs summed. Used as the scaling comparator.
MonolithicResult run_monolithic(const Problem& problem, AgentConfig agent_config,
                                const MsdfConfig& config);

}  // namespace sfcmig
