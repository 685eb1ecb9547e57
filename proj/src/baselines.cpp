#include "sfcmig/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "sfcmig/cost.hpp"
#include "sfcmig/error.hpp"

namespace sfcmig {

namespace {

constexpr double kTol = 1e-12;

// Demand one VNF position puts on its host this slot.
double position_demand(const Problem& problem, const ServiceChain& chain, int position, int slot) {
  double bw = chain_bandwidth(problem, chain.id, slot);
  const VnfType& type = problem.vnf(chain.vnf_sequence[static_cast<size_t>(position)]);
  return bw / problem.config.packet_len * type.proc_coeff;
}

// Summed end-to-end delay of the chain's flows that carry traffic this slot.
double active_delay(const NetworkState& state, const Problem& problem, int chain_id) {
  double total = 0.0;
  for (int flow_id : problem.chain(chain_id).member_flows) {
    const Flow& flow = problem.flow(flow_id);
    if (flow.bandwidth(state.slot) <= 0.0) continue;
    total += end_to_end_delay(state, flow, problem);
  }
  return total;
}

// True when every active flow of the chain meets its deadline in `state`.
bool deadlines_hold(const NetworkState& state, const Problem& problem, int chain_id) {
  for (int flow_id : problem.chain(chain_id).member_flows) {
    const Flow& flow = problem.flow(flow_id);
    if (flow.bandwidth(state.slot) <= 0.0) continue;
    if (end_to_end_delay(state, flow, problem) > flow.max_delay + kTol) return false;
  }
  return true;
}

PolicyDecision finalize(const Problem& problem, const std::map<int, MigrationAction>& moves) {
  PolicyDecision decision;
  for (const ServiceChain& chain : problem.chains) {
    auto it = moves.find(chain.id);
    decision.actions.emplace_back(
        chain.id, it != moves.end() ? it->second : MigrationAction::noop(chain.id));
  }
  return decision;
}

}  // namespace

PolicyDecision greedy_step(const NetworkState& state, const Problem& problem, bool multi_node) {
  NetworkState working = state.snapshot();
  std::map<int, MigrationAction> moves;
  std::set<int> treated;

  for (;;) {
    ResourceReport resources = compute_resources(working, problem);
    int worst = -1;
    double worst_ratio = 1.0;
    for (int node : problem.topology.function_nodes()) {
      if (treated.count(node)) continue;
      double ratio = resources.node_load(node) / problem.topology.node(node).capacity;
      if (ratio > worst_ratio + kTol) {
        worst = node;
        worst_ratio = ratio;
      }
    }
    if (worst < 0) break;
    treated.insert(worst);

    // Hosted positions, largest demand first; ties go to the lower chain id
    // and then the earlier position.
    std::vector<std::tuple<double, int, int>> contributors;
    for (const ServiceChain& chain : problem.chains) {
      for (int m = 0; m < chain.length(); ++m) {
        if (working.host(chain.id, m) != worst) continue;
        contributors.emplace_back(-position_demand(problem, chain, m, working.slot), chain.id, m);
      }
    }
    std::sort(contributors.begin(), contributors.end());

    double capacity = problem.topology.node(worst).capacity;
    for (const auto& [neg_demand, chain_id, m] : contributors) {
      ResourceReport current = compute_resources(working, problem);
      if (current.node_load(worst) <= capacity + kTol) break;  // relieved
      if (moves.count(chain_id)) continue;  // one move per chain per slot
      double demand = -neg_demand;

      int best = -1;
      double best_headroom = 0.0;
      for (int target : problem.topology.function_nodes()) {
        if (target == worst) continue;
        double headroom =
            problem.topology.node(target).capacity - current.node_load(target);
        if (demand > headroom + kTol) continue;
        NetworkState probe = working.snapshot();
        apply_action(probe, MigrationAction::move(chain_id, m, target), problem);
        if (!deadlines_hold(probe, problem, chain_id)) continue;
        if (best < 0 || headroom > best_headroom + kTol) {
          best = target;
          best_headroom = headroom;
        }
      }
      if (best < 0) continue;
      MigrationAction action = MigrationAction::move(chain_id, m, best);
      apply_action(working, action, problem);
      moves.emplace(chain_id, action);
    }
    if (!multi_node) break;
  }
  return finalize(problem, moves);
}

PolicyDecision rm_step(const NetworkState& state, const Problem& problem) {
  NetworkState working = state.snapshot();
  std::map<int, MigrationAction> moves;

  for (const ServiceChain& chain : problem.chains) {
    double current_delay = active_delay(working, problem, chain.id);
    ResourceReport resources = compute_resources(working, problem);

    MigrationAction best = MigrationAction::noop(chain.id);
    double best_delay = current_delay;
    for (int m = 0; m < chain.length(); ++m) {
      double demand = position_demand(problem, chain, m, working.slot);
      int current = working.host(chain.id, m);
      for (int target : problem.topology.function_nodes()) {
        if (target == current) continue;
        if (resources.node_load(target) + demand >
            problem.topology.node(target).capacity + kTol)
          continue;
        NetworkState probe = working.snapshot();
        apply_action(probe, MigrationAction::move(chain.id, m, target), problem);
        double delay = active_delay(probe, problem, chain.id);
        if (delay < best_delay - kTol) {
          best_delay = delay;
          best = MigrationAction::move(chain.id, m, target);
        }
      }
    }
    if (!best.is_noop()) {
      apply_action(working, best, problem);
      moves.emplace(chain.id, best);
    }
  }
  return finalize(problem, moves);
}

PolicyDecision random_step(const NetworkState& state, const Problem& problem, Rng& rng) {
  PolicyDecision decision;
  int n = problem.n_function_nodes();
  for (const ServiceChain& chain : problem.chains) {
    int index = rng.uniform_int(action_count(chain.length(), n));
    decision.actions.emplace_back(chain.id, decode_action(state, problem, chain.id, index));
  }
  return decision;
}

OracleResult oracle_step(const NetworkState& state, const Problem& problem, long cap,
                         bool include_penalty) {
  long count = joint_action_count(problem);
  if (count > cap)
    throw Error("baselines", "joint action space exceeds the enumeration budget");

  OracleResult best;
  bool have = false;
  for (long j = 0; j < count; ++j) {
    std::vector<std::pair<int, MigrationAction>> actions = decode_joint_action(state, problem, j);
    NetworkState scratch = state.snapshot();
    SlotOutcome outcome = apply_decisions(scratch, actions, problem);
    double cost = outcome.costs.total;
    if (include_penalty) cost += problem.config.gamma_c * outcome.costs.penalty;
    if (!have || cost < best.cost) {
      have = true;
      best.cost = cost;
      best.decision.actions = std::move(actions);
    }
  }
  return best;
}

}  // namespace sfcmig
