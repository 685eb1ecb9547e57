#include "sfcmig/msdf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfcmig/error.hpp"
#include "sfcmig/rng.hpp"

namespace sfcmig {

ConvergenceMonitor::ConvergenceMonitor(int window, double threshold)
    : window_(window), threshold_(threshold) {
  if (window < 2) throw Error("msdf", "convergence window must cover at least two episodes");
  if (threshold < 0.0) throw Error("msdf", "variance threshold must be non-negative");
}

void ConvergenceMonitor::record(int id, double value) {
  std::deque<double>& series = series_[id];
  series.push_back(value);
  if (series.size() > static_cast<size_t>(window_)) series.pop_front();
}

double ConvergenceMonitor::variance(int id) const {
  auto it = series_.find(id);
  if (it == series_.end()) throw Error("msdf", "no rewards recorded for this series");
  const std::deque<double>& series = it->second;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  return var / static_cast<double>(series.size());
}

bool ConvergenceMonitor::converged() const {
  if (series_.empty()) return false;
  for (const auto& [id, series] : series_) {
    if (series.size() < static_cast<size_t>(window_)) return false;
    if (variance(id) > threshold_) return false;
  }
  return true;
}

std::vector<int> sort_chains(const NetworkState& state, const ResourceReport& resources,
                             const Problem& problem) {
  std::vector<std::pair<double, int>> keyed;
  for (const ServiceChain& chain : problem.chains)
    keyed.emplace_back(-chain_overload_prob(state, chain.id, resources, problem), chain.id);
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> order;
  order.reserve(keyed.size());
  for (const auto& [neg, id] : keyed) order.push_back(id);
  return order;
}

SlotOutcome apply_decisions(NetworkState& state,
                            const std::vector<std::pair<int, MigrationAction>>& actions,
                            const Problem& problem) {
  SlotOutcome out;
  for (const auto& [chain_id, action] : actions) {
    if (action.chain != chain_id)
      throw Error("msdf", "decision list names a different chain than its action");
    NetworkState before = state.snapshot();
    apply_action(state, action, problem);
    ResourceReport resources = compute_resources(state, problem);
    out.costs.ncost[chain_id] = migration_data_cost(before, state, chain_id, problem);
    out.costs.rcost[chain_id] = reconfig_cost(before, state, chain_id, problem);
    out.costs.mcost[chain_id] = migration_overhead(before, state, chain_id, problem);
    out.costs.reward[chain_id] = reward(chain_id, before, state, resources, problem);
    if (!action.is_noop()) ++out.migrations;
  }
  ResourceReport final_resources = compute_resources(state, problem);
  out.costs.ecost = energy_cost(state, problem);
  out.costs.penalty = penalty(state, final_resources, problem);
  out.costs.total = problem.config.alpha_c * out.costs.ecost +
                    problem.config.beta_c * out.costs.mcost_total();
  out.overload = overload_degree(final_resources, problem);
  return out;
}

JointStrategy plan_joint(const NetworkState& real, std::vector<Subagent>& agents,
                         const std::vector<int>& order, const Problem& problem,
                         std::vector<Transition>* transitions) {
  JointStrategy strategy;
  strategy.planning_fingerprint = real.fingerprint();
  NetworkState sim = real.snapshot();
  for (int chain_id : order) {
    Subagent* agent = nullptr;
    for (Subagent& candidate : agents)
      if (candidate.chain_id() == chain_id) agent = &candidate;
    if (agent == nullptr) throw Error("msdf", "planning order names a chain without a subagent");

    ResourceReport resources = compute_resources(sim, problem);
    Eigen::VectorXd obs = observe(sim, chain_id, resources, problem);
    int index = agent->select_action(obs);
    MigrationAction action = decode_action(sim, problem, chain_id, index);
    NetworkState before = sim.snapshot();
    apply_action(sim, action, problem);
    ResourceReport after = compute_resources(sim, problem);
    if (transitions != nullptr) {
      Transition t;
      t.state = obs;
      t.action = index;
      t.reward = reward(chain_id, before, sim, after, problem);
      t.next_state = observe(sim, chain_id, after, problem);
      transitions->push_back(std::move(t));
    }
    strategy.actions.emplace_back(chain_id, action);
  }
  return strategy;
}

SlotOutcome apply_joint(NetworkState& real, const JointStrategy& strategy,
                        const Problem& problem) {
  if (real.fingerprint() != strategy.planning_fingerprint)
    throw Error("msdf", "joint strategy was planned against a stale network state");
  return apply_decisions(real, strategy.actions, problem);
}

void MsdfConfig::validate() const {
  if (max_episodes <= 0) throw Error("msdf", "episode cap must be positive");
  if (eval_episodes < 0) throw Error("msdf", "evaluation episode count must be >= 0");
  if (monitor_window < 2) throw Error("msdf", "convergence window must cover at least two episodes");
  if (variance_threshold < 0.0) throw Error("msdf", "variance threshold must be non-negative");
}

namespace {

// Shared-state training loop: the network never resets, so the loop keeps
// the state, the decision order cache, and the first-slot flag together.
struct MsdfLoop {
  NetworkState state;
  std::vector<Subagent> agents;
  const Problem& problem;
  const MsdfConfig& config;
  const AgentConfig& agent_config;
  bool first_slot = true;
  std::vector<int> fixed_order;  // used when resorting per slot is off

  MsdfLoop(NetworkState initial, std::vector<Subagent> subagents, const Problem& p,
           const MsdfConfig& c, const AgentConfig& a)
      : state(std::move(initial)), agents(std::move(subagents)), problem(p), config(c),
        agent_config(a) {}

  // One T-slot pass. The very first slot of a run keeps the freshly placed
  // state; every later slot starts by advancing the clock.
  EpisodeStats run_episode(int episode, bool train, bool eval) {
    EpisodeStats stats;
    stats.episode = episode;
    const int slots = problem.config.slots_per_cycle;
    int train_calls = 0;
    for (const ServiceChain& chain : problem.chains) stats.chain_return[chain.id] = 0.0;
    for (int t = 0; t < slots; ++t) {
      if (first_slot)
        first_slot = false;
      else
        advance_slot(state, problem);

      ResourceReport resources = compute_resources(state, problem);
      std::vector<int> order;
      if (config.resort_each_slot) {
        order = sort_chains(state, resources, problem);
      } else {
        if (fixed_order.empty()) fixed_order = sort_chains(state, resources, problem);
        order = fixed_order;
      }

      std::vector<Transition> transitions;
      JointStrategy strategy = plan_joint(state, agents, order, problem, &transitions);
      SlotOutcome outcome = apply_joint(state, strategy, problem);

      for (size_t k = 0; k < strategy.actions.size(); ++k) {
        int chain_id = strategy.actions[k].first;
        // The replay of the plan on the live network is authoritative; its
        // rewards replace what the scratch pass saw (they match whenever the
        // fingerprint guard held).
        transitions[k].reward = outcome.costs.reward.at(chain_id);
        stats.chain_return[chain_id] += transitions[k].reward;
      }
      stats.total_cost += outcome.costs.total;
      stats.migrations += outcome.migrations;
      stats.mean_overload += outcome.overload / slots;

      if (train) {
        for (size_t k = 0; k < strategy.actions.size(); ++k) {
          int chain_id = strategy.actions[k].first;
          for (Subagent& agent : agents)
            if (agent.chain_id() == chain_id) agent.store(std::move(transitions[k]));
        }
        for (Subagent& agent : agents) {
          for (int s = 0; s < agent_config.train_steps_per_slot; ++s) {
            if (agent.buffer().size() <= static_cast<size_t>(agent_config.batch_size)) break;
            stats.mean_loss += agent.train_step();
            ++train_calls;
          }
        }
      }
      if (config.slot_callback) config.slot_callback(episode, state.slot, eval, strategy, outcome);
    }
    stats.mean_loss = train_calls > 0 ? stats.mean_loss / train_calls : 0.0;
    return stats;
  }
};

}  // namespace

MsdfResult run_msdf(const Problem& problem, AgentConfig agent_config, const MsdfConfig& config) {
  config.validate();
  if (agent_config.eps_anneal_episodes <= 0)
    agent_config.eps_anneal_episodes = std::max(1, config.max_episodes / 2);
  agent_config.validate();

  const int n = problem.n_function_nodes();
  std::vector<Subagent> agents;
  for (const ServiceChain& chain : problem.chains) {
    std::string tag = std::to_string(chain.id);
    agents.emplace_back(chain.id, chain.length() + n, action_count(chain.length(), n),
                        agent_config, derive_seed(problem.config.seed, "agent-init-" + tag),
                        derive_seed(problem.config.seed, "agent-explore-" + tag));
  }
  MsdfLoop loop(initial_placement(problem), std::move(agents), problem, config, agent_config);

  ConvergenceMonitor monitor(config.monitor_window, config.variance_threshold);
  MsdfResult result;
  for (int episode = 0; episode < config.max_episodes; ++episode) {
    double eps = agent_config.exploitation(episode);
    for (Subagent& agent : loop.agents) agent.set_epsilon(eps);
    EpisodeStats stats = loop.run_episode(episode, true, false);
    stats.epsilon = eps;
    for (const auto& [chain_id, value] : stats.chain_return) monitor.record(chain_id, value);
    result.training.push_back(std::move(stats));
    if (monitor.converged()) {
      result.converged_episode = episode;
      break;
    }
  }

  for (Subagent& agent : loop.agents) agent.set_epsilon(1.0);
  for (int e = 0; e < config.eval_episodes; ++e) {
    int episode = static_cast<int>(result.training.size()) + e;
    EpisodeStats stats = loop.run_episode(episode, false, true);
    stats.epsilon = 1.0;
    result.eval.push_back(std::move(stats));
  }

  result.final_state = std::move(loop.state);
  result.agents = std::move(loop.agents);
  return result;
}

long joint_action_count(const Problem& problem) {
  const long limit = 4000000;
  long total = 1;
  int n = problem.n_function_nodes();
  for (const ServiceChain& chain : problem.chains) {
    total *= action_count(chain.length(), n);
    if (total > limit) throw Error("msdf", "joint action space is too large to enumerate");
  }
  return total;
}

std::vector<std::pair<int, MigrationAction>> decode_joint_action(const NetworkState& state,
                                                                 const Problem& problem,
                                                                 long index) {
  long count = joint_action_count(problem);
  if (index < 0 || index >= count) throw Error("msdf", "joint action index out of range");
  std::vector<std::pair<int, MigrationAction>> actions;
  int n = problem.n_function_nodes();
  for (const ServiceChain& chain : problem.chains) {
    long radix = action_count(chain.length(), n);
    int digit = static_cast<int>(index % radix);
    index /= radix;
    actions.emplace_back(chain.id, decode_action(state, problem, chain.id, digit));
  }
  return actions;
}

Eigen::VectorXd observe_global(const NetworkState& state, const ResourceReport& resources,
                               const Problem& problem) {
  int total = 0;
  for (const ServiceChain& chain : problem.chains) total += chain.length();
  const int n = problem.n_function_nodes();
  Eigen::VectorXd out(total + n);
  int at = 0;
  Eigen::VectorXd shared;
  for (const ServiceChain& chain : problem.chains) {
    Eigen::VectorXd local = observe(state, chain.id, resources, problem);
    out.segment(at, chain.length()) = local.head(chain.length());
    at += chain.length();
    shared = local.tail(n);
  }
  out.tail(n) = shared;
  return out;
}

MonolithicResult run_monolithic(const Problem& problem, AgentConfig agent_config,
                                const MsdfConfig& config) {
  config.validate();
  if (agent_config.eps_anneal_episodes <= 0)
    agent_config.eps_anneal_episodes = std::max(1, config.max_episodes / 2);
  agent_config.validate();

  NetworkState state = initial_placement(problem);
  long actions = joint_action_count(problem);
  if (actions > 100000) throw Error("msdf", "joint action space is too large for one learner");
  int obs_dim = 0;
  for (const ServiceChain& chain : problem.chains) obs_dim += chain.length();
  obs_dim += problem.n_function_nodes();

  Subagent agent(-1, obs_dim, static_cast<int>(actions), agent_config,
                 derive_seed(problem.config.seed, "mono-init"),
                 derive_seed(problem.config.seed, "mono-explore"));

  ConvergenceMonitor monitor(config.monitor_window, config.variance_threshold);
  MonolithicResult result;
  const int slots = problem.config.slots_per_cycle;
  bool first_slot = true;

  auto run_one = [&](int episode, bool train, bool eval) {
    EpisodeStats stats;
    stats.episode = episode;
    stats.epsilon = agent.epsilon();
    int train_calls = 0;
    for (int t = 0; t < slots; ++t) {
      if (first_slot)
        first_slot = false;
      else
        advance_slot(state, problem);
      ResourceReport resources = compute_resources(state, problem);
      Eigen::VectorXd obs = observe_global(state, resources, problem);
      int joint = agent.select_action(obs);
      std::vector<std::pair<int, MigrationAction>> decisions =
          decode_joint_action(state, problem, joint);
      JointStrategy strategy;
      strategy.actions = decisions;
      strategy.planning_fingerprint = state.fingerprint();
      SlotOutcome outcome = apply_decisions(state, decisions, problem);
      double joint_reward = reward_value(outcome.costs.ecost, outcome.costs.mcost_total(),
                                         outcome.costs.penalty, problem);
      stats.chain_return[-1] += joint_reward;
      stats.total_cost += outcome.costs.total;
      stats.migrations += outcome.migrations;
      stats.mean_overload += outcome.overload / slots;
      if (train) {
        ResourceReport after = compute_resources(state, problem);
        Transition transition;
        transition.state = std::move(obs);
        transition.action = joint;
        transition.reward = joint_reward;
        transition.next_state = observe_global(state, after, problem);
        agent.store(std::move(transition));
        for (int s = 0; s < agent_config.train_steps_per_slot; ++s) {
          if (agent.buffer().size() <= static_cast<size_t>(agent_config.batch_size)) break;
          stats.mean_loss += agent.train_step();
          ++train_calls;
        }
      }
      if (config.slot_callback)
        config.slot_callback(episode, state.slot, eval, strategy, outcome);
    }
    stats.mean_loss = train_calls > 0 ? stats.mean_loss / train_calls : 0.0;
    return stats;
  };

  for (int episode = 0; episode < config.max_episodes; ++episode) {
    agent.set_epsilon(agent_config.exploitation(episode));
    EpisodeStats stats = run_one(episode, true, false);
    monitor.record(-1, stats.chain_return.at(-1));
    result.training.push_back(std::move(stats));
    if (monitor.converged()) {
      result.converged_episode = episode;
      break;
    }
  }
  agent.set_epsilon(1.0);
  for (int e = 0; e < config.eval_episodes; ++e) {
    EpisodeStats stats = run_one(static_cast<int>(result.training.size()) + e, false, true);
    result.eval.push_back(std::move(stats));
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace sfcmig
