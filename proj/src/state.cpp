#include "sfcmig/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sfcmig/error.hpp"
#include "sfcmig/text.hpp"

namespace sfcmig {

namespace {
const std::string kModule = "state";

Error state_error(const std::string& msg) { return Error(kModule, msg); }

void hash_mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

// Demand one VNF of the given type places on its host for this bandwidth.
double vnf_demand(double chain_bw, const VnfType& type, const ExperimentConfig& config) {
  return chain_bw / config.packet_len * type.proc_coeff;
}

void reroute_chain(NetworkState& state, int chain_id, const Problem& problem) {
  const ServiceChain& chain = problem.chain(chain_id);
  const std::vector<int>& hosts = state.placement.at(chain_id);
  ChainRoutes& routes = state.routes[chain_id];
  routes.vlink_paths.assign(hosts.size() - 1, {});
  for (size_t m = 0; m + 1 < hosts.size(); ++m) {
    routes.vlink_paths[m] = problem.topology.shortest_path(hosts[m], hosts[m + 1]);
  }
  for (int f : chain.member_flows) {
    const Flow& flow = problem.flow(f);
    FlowRoute& fr = state.flow_routes[f];
    fr.ingress = problem.topology.shortest_path(flow.src, hosts.front());
    fr.egress = problem.topology.shortest_path(hosts.back(), flow.dst);
  }
}

void refresh_active(NetworkState& state, const Problem& problem) {
  state.active.clear();
  for (const auto& [chain_id, hosts] : state.placement) {
    const ServiceChain& chain = problem.chain(chain_id);
    for (size_t m = 0; m < hosts.size(); ++m) {
      state.active.emplace(hosts[m], chain.vnf_sequence[m]);
    }
  }
}

}  // namespace

std::uint64_t NetworkState::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_mix(h, static_cast<std::uint64_t>(slot));
  for (const auto& [chain_id, hosts] : placement) {
    hash_mix(h, static_cast<std::uint64_t>(chain_id));
    for (int node : hosts) hash_mix(h, static_cast<std::uint64_t>(node) + 0x51ULL);
  }
  for (const auto& [node, type] : deployed) {
    hash_mix(h, (static_cast<std::uint64_t>(node) << 20) ^ static_cast<std::uint64_t>(type));
  }
  return h;
}

int NetworkState::host(int chain_id, int vnf_index) const {
  auto it = placement.find(chain_id);
  if (it == placement.end() || vnf_index < 0 ||
      vnf_index >= static_cast<int>(it->second.size())) {
    throw state_error("no placement for chain " + std::to_string(chain_id) + " position " +
                      std::to_string(vnf_index));
  }
  return it->second[static_cast<size_t>(vnf_index)];
}

NetworkState initial_placement(const Problem& problem) {
  const std::vector<int>& sites = problem.topology.function_nodes();

  double total_capacity = 0.0;
  for (int node : sites) total_capacity += problem.topology.node(node).capacity;
  double total_demand = 0.0;
  for (const ServiceChain& chain : problem.chains) {
    double bw = chain_bandwidth(problem, chain.id, 0);
    for (int v : chain.vnf_sequence) total_demand += vnf_demand(bw, problem.vnf(v), problem.config);
  }
  if (total_demand > total_capacity) {
    throw state_error("initial demand " + fmt_double(total_demand) +
                      " exceeds total function-node capacity " + fmt_double(total_capacity));
  }

  NetworkState state;
  std::map<int, double> used;
  for (int node : sites) used[node] = 0.0;
  for (const ServiceChain& chain : problem.chains) {
    double bw = chain_bandwidth(problem, chain.id, 0);
    std::vector<int>& hosts = state.placement[chain.id];
    for (int v : chain.vnf_sequence) {
      double demand = vnf_demand(bw, problem.vnf(v), problem.config);
      int chosen = -1;
      for (int node : sites) {
        if (used[node] + demand <= problem.topology.node(node).capacity) {
          chosen = node;
          break;
        }
      }
      if (chosen == -1) {
        // Fragmentation: fall back to the roomiest node even if it overflows.
        double best_headroom = -std::numeric_limits<double>::infinity();
        for (int node : sites) {
          double headroom = problem.topology.node(node).capacity - used[node];
          if (headroom > best_headroom) {
            best_headroom = headroom;
            chosen = node;
          }
        }
      }
      used[chosen] += demand;
      hosts.push_back(chosen);
      state.deployed.emplace(chosen, v);
    }
  }
  for (const ServiceChain& chain : problem.chains) reroute_chain(state, chain.id, problem);
  refresh_active(state, problem);
  return state;
}

const std::vector<int>& shortest_path(const Topology& topo, int from, int to) {
  return topo.shortest_path(from, to);
}

void apply_action(NetworkState& state, const MigrationAction& action, const Problem& problem) {
  const ServiceChain& chain = problem.chain(action.chain);
  if (action.is_noop()) return;

  if (state.moved_this_slot.count(action.chain) > 0) {
    throw state_error("chain " + std::to_string(action.chain) + " already migrated this slot");
  }
  if (action.vnf_index < 0 || action.vnf_index >= chain.length()) {
    throw state_error("chain " + std::to_string(action.chain) + " has no VNF position " +
                      std::to_string(action.vnf_index));
  }
  if (!problem.topology.has_node(action.target) ||
      !problem.topology.node(action.target).is_function_node) {
    throw state_error("migration target " + std::to_string(action.target) +
                      " is not a function node");
  }
  std::vector<int>& hosts = state.placement.at(action.chain);
  int from = hosts[static_cast<size_t>(action.vnf_index)];
  if (from == action.target) {
    throw state_error("chain " + std::to_string(action.chain) + " VNF " +
                      std::to_string(action.vnf_index) + " is already on node " +
                      std::to_string(action.target));
  }
  int type = chain.vnf_sequence[static_cast<size_t>(action.vnf_index)];
  hosts[static_cast<size_t>(action.vnf_index)] = action.target;
  state.deployed.emplace(action.target, type);
  reroute_chain(state, action.chain, problem);
  refresh_active(state, problem);
  state.moved_this_slot.insert(action.chain);
}

void advance_slot(NetworkState& state, const Problem& problem) {
  refresh_active(state, problem);
  // Idle instances are kept through the slot that vacated them, then retracted.
  for (auto it = state.deployed.begin(); it != state.deployed.end();) {
    if (state.active.count(*it) == 0) {
      it = state.deployed.erase(it);
    } else {
      ++it;
    }
  }
  state.slot += 1;
  state.moved_this_slot.clear();
}

double ResourceReport::node_load(int node) const {
  double total = 0.0;
  for (const auto& [key, value] : requested) {
    if (key.first == node) total += value;
  }
  return total;
}

double ResourceReport::requested_at(int node, int type) const {
  auto it = requested.find({node, type});
  return it == requested.end() ? 0.0 : it->second;
}

double ResourceReport::allocated_at(int node, int type) const {
  auto it = allocated.find({node, type});
  return it == allocated.end() ? 0.0 : it->second;
}

ResourceReport compute_resources(const NetworkState& state, const Problem& problem) {
  ResourceReport report;
  for (const auto& [chain_id, hosts] : state.placement) {
    const ServiceChain& chain = problem.chain(chain_id);
    double bw = chain_bandwidth(problem, chain_id, state.slot);
    for (size_t m = 0; m < hosts.size(); ++m) {
      int type = chain.vnf_sequence[m];
      report.requested[{hosts[m], type}] +=
          vnf_demand(bw, problem.vnf(type), problem.config);
    }
  }

  // Per node, split capacity across the competing types max-min fairly.
  std::map<int, std::vector<std::pair<int, double>>> per_node;  // node -> (type, demand)
  for (const auto& [key, demand] : report.requested) {
    per_node[key.first].emplace_back(key.second, demand);
  }
  for (const auto& [node, entries] : per_node) {
    Eigen::VectorXd demands(static_cast<Eigen::Index>(entries.size()));
    for (size_t i = 0; i < entries.size(); ++i) demands[static_cast<Eigen::Index>(i)] = entries[i].second;
    Eigen::VectorXd granted = maxmin_allocate(demands, problem.topology.node(node).capacity);
    for (size_t i = 0; i < entries.size(); ++i) {
      report.allocated[{node, entries[i].first}] = granted[static_cast<Eigen::Index>(i)];
    }
  }
  report.total_packet_loss = packet_loss(report, problem);
  return report;
}

Eigen::VectorXd maxmin_allocate(const Eigen::VectorXd& demands, double capacity) {
  if (capacity < 0) throw state_error("negative capacity in allocation");
  for (Eigen::Index i = 0; i < demands.size(); ++i) {
    if (demands[i] < 0) throw state_error("negative demand in allocation");
  }
  Eigen::VectorXd granted = Eigen::VectorXd::Zero(demands.size());
  std::vector<Eigen::Index> order(static_cast<size_t>(demands.size()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return demands[a] < demands[b]; });

  double remaining = capacity;
  size_t unserved = order.size();
  for (Eigen::Index idx : order) {
    double fair = remaining / static_cast<double>(unserved);
    double give = std::min(demands[idx], fair);
    granted[idx] = give;
    remaining -= give;
    --unserved;
  }
  return granted;
}

double packet_loss(const ResourceReport& resources, const Problem& problem) {
  double total = 0.0;
  for (const auto& [key, requested] : resources.requested) {
    double shortfall = requested - resources.allocated_at(key.first, key.second);
    if (shortfall <= 0) continue;
    total += shortfall / problem.vnf(key.second).proc_coeff;
  }
  return total;
}

double end_to_end_delay(const NetworkState& state, const Flow& flow, const Problem& problem) {
  const ServiceChain& chain = problem.chain_of_flow(flow.id);
  auto fr_it = state.flow_routes.find(flow.id);
  auto cr_it = state.routes.find(chain.id);
  if (fr_it == state.flow_routes.end() || cr_it == state.routes.end()) {
    throw state_error("flow " + std::to_string(flow.id) + " has no routed paths");
  }
  double total = problem.topology.path_delay(fr_it->second.ingress) +
                 problem.topology.path_delay(fr_it->second.egress);
  for (const std::vector<int>& path : cr_it->second.vlink_paths) {
    total += problem.topology.path_delay(path);
  }
  for (int v : chain.vnf_sequence) total += problem.vnf(v).proc_coeff;
  return total;
}

const char* constraint_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Delay: return "delay";
    case ConstraintKind::Capacity: return "capacity";
    case ConstraintKind::MappingUniqueness: return "mapping-uniqueness";
    case ConstraintKind::MigrationCount: return "migration-count";
    case ConstraintKind::TypeAvailability: return "type-availability";
    case ConstraintKind::FlowPartition: return "flow-partition";
    case ConstraintKind::FlowConservation: return "flow-conservation";
  }
  return "unknown";
}

std::vector<Violation> check_constraints(const NetworkState& prev, const NetworkState& cur,
                                         const Problem& problem) {
  std::vector<Violation> out;
  auto report = [&out](ConstraintKind kind, int subject, double magnitude, std::string detail) {
    out.push_back({kind, subject, magnitude, std::move(detail)});
  };

  // Every VNF of every chain sits on exactly one function node.
  for (const ServiceChain& chain : problem.chains) {
    auto it = cur.placement.find(chain.id);
    if (it == cur.placement.end() || static_cast<int>(it->second.size()) != chain.length()) {
      report(ConstraintKind::MappingUniqueness, chain.id, 1.0,
             "chain " + std::to_string(chain.id) + " placement is missing or malformed");
      continue;
    }
    for (size_t m = 0; m < it->second.size(); ++m) {
      int node = it->second[m];
      if (!problem.topology.has_node(node) || !problem.topology.node(node).is_function_node) {
        report(ConstraintKind::MappingUniqueness, chain.id, 1.0,
               "chain " + std::to_string(chain.id) + " VNF " + std::to_string(m) +
                   " sits on non-function node " + std::to_string(node));
      }
    }
  }

  // At most one migration per chain per slot.
  for (const ServiceChain& chain : problem.chains) {
    auto pit = prev.placement.find(chain.id);
    auto cit = cur.placement.find(chain.id);
    if (pit == prev.placement.end() || cit == cur.placement.end() ||
        pit->second.size() != cit->second.size()) {
      continue;
    }
    int moves = 0;
    for (size_t m = 0; m < pit->second.size(); ++m) {
      if (pit->second[m] != cit->second[m]) ++moves;
    }
    if (moves > 1) {
      report(ConstraintKind::MigrationCount, chain.id, static_cast<double>(moves),
             "chain " + std::to_string(chain.id) + " moved " + std::to_string(moves) +
                 " VNFs in one slot");
    }
  }

  // Every type used by some chain has at least one deployed instance.
  std::set<int> used_types;
  for (const ServiceChain& chain : problem.chains) {
    for (int v : chain.vnf_sequence) used_types.insert(v);
  }
  for (int v : used_types) {
    bool found = false;
    for (const auto& [node, type] : cur.deployed) {
      if (type == v) {
        found = true;
        break;
      }
    }
    if (!found) {
      report(ConstraintKind::TypeAvailability, v, 1.0,
             "VNF type " + std::to_string(v) + " has no deployed instance");
    }
  }

  // Flows partition across chains.
  std::map<int, int> owners;
  for (const ServiceChain& chain : problem.chains) {
    for (int f : chain.member_flows) owners[f] += 1;
  }
  for (const Flow& flow : problem.flows) {
    int count = owners.count(flow.id) ? owners[flow.id] : 0;
    if (count != 1) {
      report(ConstraintKind::FlowPartition, flow.id, static_cast<double>(count),
             "flow " + std::to_string(flow.id) + " belongs to " + std::to_string(count) +
                 " chains");
    }
  }

  // Routed paths are contiguous and start/end where the mapping says.
  auto path_ok = [&](const std::vector<int>& path, int from, int to) {
    if (path.empty() || path.front() != from || path.back() != to) return false;
    for (size_t i = 1; i < path.size(); ++i) {
      if (!problem.topology.has_link(path[i - 1], path[i])) return false;
    }
    return true;
  };
  for (const ServiceChain& chain : problem.chains) {
    auto pit = cur.placement.find(chain.id);
    auto rit = cur.routes.find(chain.id);
    if (pit == cur.placement.end() || static_cast<int>(pit->second.size()) != chain.length()) {
      continue;
    }
    const std::vector<int>& hosts = pit->second;
    bool ok = rit != cur.routes.end() &&
              rit->second.vlink_paths.size() == hosts.size() - 1;
    if (ok) {
      for (size_t m = 0; m + 1 < hosts.size(); ++m) {
        if (!path_ok(rit->second.vlink_paths[m], hosts[m], hosts[m + 1])) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      report(ConstraintKind::FlowConservation, chain.id, 1.0,
             "chain " + std::to_string(chain.id) + " has a broken inter-VNF route");
    }
    for (int f : chain.member_flows) {
      auto fit = cur.flow_routes.find(f);
      const Flow& flow = problem.flow(f);
      if (fit == cur.flow_routes.end() ||
          !path_ok(fit->second.ingress, flow.src, hosts.front()) ||
          !path_ok(fit->second.egress, hosts.back(), flow.dst)) {
        report(ConstraintKind::FlowConservation, f, 1.0,
               "flow " + std::to_string(f) + " has a broken ingress or egress route");
      }
    }
  }

  // Capacity per function node.
  ResourceReport resources = compute_resources(cur, problem);
  for (int node : problem.topology.function_nodes()) {
    double load = resources.node_load(node);
    double capacity = problem.topology.node(node).capacity;
    if (load > capacity + 1e-12) {
      report(ConstraintKind::Capacity, node, load - capacity,
             "node " + std::to_string(node) + " load " + fmt_double(load) + " exceeds capacity " +
                 fmt_double(capacity));
    }
  }

  // Delay bound per flow carrying traffic this slot.
  for (const Flow& flow : problem.flows) {
    if (flow.bandwidth(cur.slot) <= 0) continue;
    if (cur.flow_routes.find(flow.id) == cur.flow_routes.end()) continue;
    double delay = end_to_end_delay(cur, flow, problem);
    if (delay > flow.max_delay + 1e-12) {
      report(ConstraintKind::Delay, flow.id, delay - flow.max_delay,
             "flow " + std::to_string(flow.id) + " delay " + fmt_double(delay) +
                 " exceeds bound " + fmt_double(flow.max_delay));
    }
  }

  return out;
}

Eigen::VectorXd observe(const NetworkState& state, int chain_id, const ResourceReport& resources,
                        const Problem& problem) {
  const ServiceChain& chain = problem.chain(chain_id);
  const std::vector<int>& sites = problem.topology.function_nodes();
  Eigen::VectorXd obs(chain.length() + static_cast<int>(sites.size()));
  auto clip = [](double v) { return std::clamp(v, -1.0, 1.0); };

  double bw = chain_bandwidth(problem, chain_id, state.slot);
  const std::vector<int>& hosts = state.placement.at(chain_id);
  for (int m = 0; m < chain.length(); ++m) {
    const VnfType& type = problem.vnf(chain.vnf_sequence[static_cast<size_t>(m)]);
    double demand = vnf_demand(bw, type, problem.config);
    double capacity = problem.topology.node(hosts[static_cast<size_t>(m)]).capacity;
    obs[m] = clip(demand / capacity);
  }
  for (size_t i = 0; i < sites.size(); ++i) {
    double capacity = problem.topology.node(sites[i]).capacity;
    double load = resources.node_load(sites[i]);
    obs[chain.length() + static_cast<int>(i)] = clip((capacity - load) / capacity);
  }
  return obs;
}

double node_overload_prob(const ResourceReport& resources, int node, const Problem& problem) {
  double capacity = problem.topology.node(node).capacity;
  if (capacity <= 0) return 0.0;
  return resources.node_load(node) / capacity;
}

double chain_overload_prob(const NetworkState& state, int chain_id,
                           const ResourceReport& resources, const Problem& problem) {
  const std::vector<int>& hosts = state.placement.at(chain_id);
  double prob = 1.0;
  for (int node : hosts) prob *= node_overload_prob(resources, node, problem);
  return prob;
}

double overload_degree(const ResourceReport& resources, const Problem& problem) {
  double total = 0.0;
  for (int node : problem.topology.function_nodes()) {
    double capacity = problem.topology.node(node).capacity;
    double excess = resources.node_load(node) - capacity;
    if (excess > 0) total += excess / capacity;
  }
  return total;
}

void write_state_dump(std::ostream& out, const NetworkState& state,
                      const ResourceReport& resources) {
  out << "slot,chain,vnf_index,node\n";
  for (const auto& [chain_id, hosts] : state.placement) {
    for (size_t m = 0; m < hosts.size(); ++m) {
      out << state.slot << "," << chain_id << "," << m << "," << hosts[m] << "\n";
    }
  }
  out << "slot,node,type,requested,allocated\n";
  for (const auto& [key, requested] : resources.requested) {
    out << state.slot << "," << key.first << "," << key.second << "," << fmt_double(requested)
        << "," << fmt_double(resources.allocated_at(key.first, key.second)) << "\n";
  }
}

}  // namespace sfcmig
