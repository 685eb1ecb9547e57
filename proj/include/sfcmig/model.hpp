#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sfcmig {

// One VNF type from the catalog. proc_coeff is the per-packet processing
// delay of a VM of this type; the delay/resource/loss formulas all scale by
// it. config_delay and deploy_delay are the per-unit data costs of moving
// state into a configured instance vs standing up a fresh one; deploy_cost
// and vm_energy feed the reconfiguration and energy terms.
struct VnfType {
  int id = 0;
  double proc_coeff = 0.0;
  double config_delay = 0.0;
  double deploy_delay = 0.0;
  double deploy_cost = 0.0;
  double vm_energy = 0.0;
};

struct PhysicalNode {
  int id = 0;
  double capacity = 0.0;
  double node_energy = 0.0;  // per-slot energy while the node hosts any active VM
  bool is_function_node = false;
};

// Undirected link with a propagation delay.
struct PhysicalLink {
  int a = 0;
  int b = 0;
  double prop_delay = 0.0;
};

// Immutable physical network. Construction validates the graph and
// precomputes all-pairs shortest paths (by propagation delay, ties broken by
// the lexicographically smallest node sequence), so routing lookups are O(1).
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<PhysicalNode> nodes, std::vector<PhysicalLink> links);

  const std::vector<PhysicalNode>& nodes() const { return nodes_; }
  const std::vector<PhysicalLink>& links() const { return links_; }
  bool has_node(int id) const { return index_.count(id) > 0; }
  const PhysicalNode& node(int id) const;
  const std::vector<int>& function_nodes() const { return function_nodes_; }
  int degree(int id) const;
  const std::vector<std::pair<int, double>>& neighbors(int id) const;
  bool has_link(int a, int b) const;
  double link_delay(int a, int b) const;
  const std::vector<int>& shortest_path(int from, int to) const;
  double shortest_delay(int from, int to) const;
  double path_delay(const std::vector<int>& path) const;

 private:
  int index_of(int id, const char* what) const;
  void compute_routes();

  std::vector<PhysicalNode> nodes_;  // sorted by id
  std::vector<PhysicalLink> links_;  // normalized a < b, sorted
  std::map<int, int> index_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;  // (neighbor id, delay)
  std::vector<int> function_nodes_;                             // sorted ids
  std::vector<std::vector<std::vector<int>>> paths_;
  std::vector<std::vector<double>> dists_;
};

Topology load_topology(const std::string& path);
void save_topology(const Topology& topo, const std::string& path);

// Returns a copy with exactly k function nodes: the top-k by degree, ties to
// the lower id.
Topology select_function_nodes_by_degree(const Topology& topo, int k);

std::vector<VnfType> load_vnf_catalog(const std::string& path);

struct ServiceChain {
  int id = 0;
  std::string service_type;
  std::vector<int> vnf_sequence;  // VnfType ids, traversal order
  double max_delay = 0.0;
  std::vector<int> member_flows;  // filled by assign_flows_to_chains
  int length() const { return static_cast<int>(vnf_sequence.size()); }
};

struct Flow {
  int id = 0;
  std::string service_type;
  int src = 0;
  int dst = 0;
  std::vector<double> bandwidth_trace;  // one value per slot; loops when read past the end
  double max_delay = 0.0;               // inherited from the owning chain

  double bandwidth(int slot) const {
    return bandwidth_trace.empty()
               ? 0.0
               : bandwidth_trace[static_cast<size_t>(slot) % bandwidth_trace.size()];
  }
};

struct TrafficSpec {
  std::string profile = "sinusoid";  // sinusoid | step | trace
  int n_flows = 1;
  int slots = 20;
  double base = 4.0;       // sinusoid midline
  double amplitude = 2.0;  // sinusoid swing; step profile emits this constant
  double period = 20.0;
  std::string trace_path;  // used by the trace profile
  int n_services = 1;      // flows cycle over service types svc0..svc{n-1}
};

// Deterministic given the seed. Sources/destinations are drawn uniformly
// over all nodes; negative samples clamp to zero bandwidth.
std::vector<Flow> generate_traffic(const Topology& topo, const TrafficSpec& spec,
                                   std::uint64_t seed);

// Matches each flow's service type against exactly one chain; fills
// member_flows and stamps the chain's delay bound onto the flow.
void assign_flows_to_chains(std::vector<Flow>& flows, std::vector<ServiceChain>& chains);

struct ExperimentConfig {
  double alpha_c = 0.5;   // weight of energy in the slot objective
  double beta_c = 0.5;    // weight of migration overhead; alpha_c + beta_c == 1
  double gamma_c = 1.0;   // weight of the QoS penalty inside the reward
  double beta_n = 0.5;    // data-volume share of migration overhead
  double beta_r = 0.5;    // reconfiguration share of migration overhead
  double rho = 0.1;       // penalty level that saturates the reward's energy term
  double packet_len = 1.0;
  int slots_per_cycle = 20;  // T, the episode length
  double ecost_max = 0.0;    // 0 means: derive the all-on bound from the problem
  std::uint64_t seed = 1;

  void validate() const;
};

// Everything a simulation step needs, bundled. Chains and flows are kept
// sorted by id; validate() checks cross-references once up front.
struct Problem {
  Topology topology;
  std::vector<VnfType> catalog;
  std::vector<ServiceChain> chains;
  std::vector<Flow> flows;
  ExperimentConfig config;

  const VnfType& vnf(int id) const;
  const ServiceChain& chain(int id) const;
  const Flow& flow(int id) const;
  const ServiceChain& chain_of_flow(int flow_id) const;
  int n_function_nodes() const { return static_cast<int>(topology.function_nodes().size()); }

  // Energy bound with every node and every (node, type) VM slot active; used
  // as the saturated-energy term in the reward's overloaded branch.
  double default_ecost_max() const;
  double ecost_max() const;

  void validate();

 private:
  std::map<int, int> flow_owner_;  // flow id -> chain id
};

double chain_bandwidth(const Problem& problem, int chain_id, int slot);

}  // namespace sfcmig
