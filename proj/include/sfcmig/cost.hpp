#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "sfcmig/model.hpp"
#include "sfcmig/state.hpp"

namespace sfcmig {

// Slot-level cost ledger. ecost and penalty are network-wide; the per-chain
// maps cover data-volume cost, reconfiguration cost, their weighted blend,
// and the piecewise reward. total is the slot objective
// alpha_c * ecost + beta_c * sum of per-chain blends.
struct CostBreakdown {
  double ecost = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  std::map<int, double> ncost;
  std::map<int, double> rcost;
  std::map<int, double> mcost;
  std::map<int, double> reward;

  double mcost_total() const;
};

// Basic per-slot energy: one node term per node hosting any active VM, plus
// one VM term per active (node, type) instance.
double energy_cost(const NetworkState& state, const Problem& problem);

// Data volume a chain's migration moves this slot: half the chain bandwidth
// at each flipped endpoint, scaled by the type's configuration-transfer time
// plus, where no instance existed before this slot, its deployment time.
double migration_data_cost(const NetworkState& prev, const NetworkState& cur, int chain_id,
                           const Problem& problem);

// Reconfiguration: deployment fees where the move lands on a node that
// lacked the instance, plus half the size of the symmetric difference
// between the chain's old and new inter-VNF edge sets.
double reconfig_cost(const NetworkState& prev, const NetworkState& cur, int chain_id,
                     const Problem& problem);

// beta_n-weighted data cost plus beta_r-weighted reconfiguration cost.
double migration_overhead(const NetworkState& prev, const NetworkState& cur, int chain_id,
                          const Problem& problem);

// Relative deadline misses of flows carrying traffic this slot, plus packet
// loss. Zero for a network meeting every bound.
double penalty(const NetworkState& state, const ResourceReport& resources,
               const Problem& problem);

// Piecewise reward on precomputed scalars: while the penalty stays below the
// rho threshold the true energy enters; at or above it the saturated energy
// bound does.
double reward_value(double ecost, double mcost_chain, double pen, const Problem& problem);

// Reward of one chain for the prev -> cur transition, evaluated on cur's
// traffic and resource allocation.
double reward(int chain_id, const NetworkState& prev, const NetworkState& cur,
              const ResourceReport& cur_resources, const Problem& problem);

// Full slot ledger for a prev -> cur transition.
CostBreakdown compute_slot_costs(const NetworkState& prev, const NetworkState& cur,
                                 const Problem& problem);

// Objective over a horizon: sum of slot totals.
double total_cost(const std::vector<CostBreakdown>& slots, const Problem& problem);

void write_cost_log_header(std::ostream& out);
void write_cost_log_line(std::ostream& out, int slot, int chain_id, const CostBreakdown& costs);

}  // namespace sfcmig
