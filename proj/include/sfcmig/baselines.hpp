#pragma once

#include <utility>
#include <vector>

#include "sfcmig/model.hpp"
#include "sfcmig/msdf.hpp"
#include "sfcmig/rng.hpp"
#include "sfcmig/state.hpp"

namespace sfcmig {

// One slot's decisions from a heuristic policy: every chain appears exactly
// once, in ascending id order, carrying either its move or a no-op.
struct PolicyDecision {
  std::vector<std::pair<int, MigrationAction>> actions;
};

// Reactive overload relief. Finds the most overloaded function node and
// moves its hosted VNFs away, largest demand first, onto the feasible node
// with the most headroom, until the node fits again. Feasible means the
// demand fits and every flow of the moved chain keeps its deadline. Only one
// node is treated per slot unless multi_node is set.
PolicyDecision greedy_step(const NetworkState& state, const Problem& problem,
                           bool multi_node = false);

// Delay-chasing policy: every chain in turn takes the single-VNF move that
// minimizes the summed end-to-end delay of its active flows, provided the
// target stays within capacity and the move strictly improves the delay.
PolicyDecision rm_step(const NetworkState& state, const Problem& problem);

// Uniformly random action per chain.
PolicyDecision random_step(const NetworkState& state, const Problem& problem, Rng& rng);

struct OracleResult {
  PolicyDecision decision;
  double cost = 0.0;
};

// Exhaustive search over the joint action space for the cheapest slot:
// weighted energy plus weighted migration overhead, optionally plus the
// weighted penalty. First strictly better joint index wins ties, so the
// result is deterministic. Refuses spaces larger than `cap`.
OracleResult oracle_step(const NetworkState& state, const Problem& problem, long cap = 1000000,
                         bool include_penalty = false);

}  // namespace sfcmig
