#include "sfcmig/cost.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "sfcmig/error.hpp"
#include "sfcmig/text.hpp"

namespace sfcmig {

namespace {

std::set<std::pair<int, int>> path_edges(const std::vector<int>& path) {
  std::set<std::pair<int, int>> edges;
  for (size_t i = 1; i < path.size(); ++i) {
    edges.emplace(std::min(path[i - 1], path[i]), std::max(path[i - 1], path[i]));
  }
  return edges;
}

}  // namespace

double CostBreakdown::mcost_total() const {
  double total = 0.0;
  for (const auto& [chain, value] : mcost) {
    (void)chain;
    total += value;
  }
  return total;
}

double energy_cost(const NetworkState& state, const Problem& problem) {
  std::set<int> busy_nodes;
  double vm_term = 0.0;
  for (const auto& [node, type] : state.active) {
    busy_nodes.insert(node);
    vm_term += problem.vnf(type).vm_energy;
  }
  double node_term = 0.0;
  for (int node : busy_nodes) node_term += problem.topology.node(node).node_energy;
  return node_term + vm_term;
}

double migration_data_cost(const NetworkState& prev, const NetworkState& cur, int chain_id,
                           const Problem& problem) {
  const ServiceChain& chain = problem.chain(chain_id);
  const std::vector<int>& before = prev.placement.at(chain_id);
  const std::vector<int>& after = cur.placement.at(chain_id);
  if (before.size() != after.size()) {
    throw Error("cost", "chain " + std::to_string(chain_id) + " changed length between slots");
  }
  double bw = chain_bandwidth(problem, chain_id, cur.slot);
  double total = 0.0;
  for (size_t m = 0; m < before.size(); ++m) {
    if (before[m] == after[m]) continue;
    const VnfType& type = problem.vnf(chain.vnf_sequence[m]);
    // Instance flags are read before this slot's deployments, so a move onto
    // a node without the instance pays the deployment transfer too.
    bool at_source = prev.deployed.count({before[m], type.id}) > 0;
    bool at_target = prev.deployed.count({after[m], type.id}) > 0;
    total += bw / 2.0 * (type.config_delay + (at_source ? 0.0 : type.deploy_delay));
    total += bw / 2.0 * (type.config_delay + (at_target ? 0.0 : type.deploy_delay));
  }
  return total;
}

double reconfig_cost(const NetworkState& prev, const NetworkState& cur, int chain_id,
                     const Problem& problem) {
  const ServiceChain& chain = problem.chain(chain_id);
  const std::vector<int>& before = prev.placement.at(chain_id);
  const std::vector<int>& after = cur.placement.at(chain_id);
  double total = 0.0;
  for (size_t m = 0; m < before.size(); ++m) {
    if (before[m] == after[m]) continue;
    const VnfType& type = problem.vnf(chain.vnf_sequence[m]);
    bool at_source = prev.deployed.count({before[m], type.id}) > 0;
    bool at_target = prev.deployed.count({after[m], type.id}) > 0;
    total += 0.5 * (at_source ? 0.0 : type.deploy_cost);
    total += 0.5 * (at_target ? 0.0 : type.deploy_cost);
  }

  const ChainRoutes& old_routes = prev.routes.at(chain_id);
  const ChainRoutes& new_routes = cur.routes.at(chain_id);
  for (size_t k = 0; k < new_routes.vlink_paths.size(); ++k) {
    std::set<std::pair<int, int>> old_edges = path_edges(old_routes.vlink_paths[k]);
    std::set<std::pair<int, int>> new_edges = path_edges(new_routes.vlink_paths[k]);
    int differing = 0;
    for (const auto& e : old_edges) {
      if (new_edges.count(e) == 0) ++differing;
    }
    for (const auto& e : new_edges) {
      if (old_edges.count(e) == 0) ++differing;
    }
    total += 0.5 * differing;
  }
  return total;
}

double migration_overhead(const NetworkState& prev, const NetworkState& cur, int chain_id,
                          const Problem& problem) {
  return problem.config.beta_n * migration_data_cost(prev, cur, chain_id, problem) +
         problem.config.beta_r * reconfig_cost(prev, cur, chain_id, problem);
}

double penalty(const NetworkState& state, const ResourceReport& resources,
               const Problem& problem) {
  double total = 0.0;
  for (const Flow& flow : problem.flows) {
    if (flow.bandwidth(state.slot) <= 0) continue;
    double delay = end_to_end_delay(state, flow, problem);
    total += std::max(0.0, (delay - flow.max_delay) / flow.max_delay);
  }
  total += std::max(0.0, resources.total_packet_loss);
  return total;
}

double reward_value(double ecost, double mcost_chain, double pen, const Problem& problem) {
  const ExperimentConfig& c = problem.config;
  double energy = pen >= c.rho ? problem.ecost_max() : ecost;
  return -(c.alpha_c * energy + c.beta_c * mcost_chain + c.gamma_c * pen);
}

double reward(int chain_id, const NetworkState& prev, const NetworkState& cur,
              const ResourceReport& cur_resources, const Problem& problem) {
  double ecost = energy_cost(cur, problem);
  double mcost = migration_overhead(prev, cur, chain_id, problem);
  double pen = penalty(cur, cur_resources, problem);
  return reward_value(ecost, mcost, pen, problem);
}

CostBreakdown compute_slot_costs(const NetworkState& prev, const NetworkState& cur,
                                 const Problem& problem) {
  CostBreakdown costs;
  ResourceReport resources = compute_resources(cur, problem);
  costs.ecost = energy_cost(cur, problem);
  costs.penalty = penalty(cur, resources, problem);
  for (const ServiceChain& chain : problem.chains) {
    double n = migration_data_cost(prev, cur, chain.id, problem);
    double r = reconfig_cost(prev, cur, chain.id, problem);
    double m = problem.config.beta_n * n + problem.config.beta_r * r;
    costs.ncost[chain.id] = n;
    costs.rcost[chain.id] = r;
    costs.mcost[chain.id] = m;
    costs.reward[chain.id] = reward_value(costs.ecost, m, costs.penalty, problem);
  }
  costs.total = problem.config.alpha_c * costs.ecost + problem.config.beta_c * costs.mcost_total();
  return costs;
}

double total_cost(const std::vector<CostBreakdown>& slots, const Problem& problem) {
  (void)problem;
  double total = 0.0;
  for (const CostBreakdown& slot : slots) total += slot.total;
  return total;
}

void write_cost_log_header(std::ostream& out) {
  out << "slot,chain,ecost,ncost,rcost,mcost,penalty,reward\n";
}

void write_cost_log_line(std::ostream& out, int slot, int chain_id, const CostBreakdown& costs) {
  auto lookup = [&](const std::map<int, double>& m) {
    auto it = m.find(chain_id);
    return it == m.end() ? 0.0 : it->second;
  };
  out << slot << "," << chain_id << "," << fmt_double(costs.ecost) << ","
      << fmt_double(lookup(costs.ncost)) << "," << fmt_double(lookup(costs.rcost)) << ","
      << fmt_double(lookup(costs.mcost)) << "," << fmt_double(costs.penalty) << ","
      << fmt_double(lookup(costs.reward)) << "\n";
}

}  // namespace sfcmig
