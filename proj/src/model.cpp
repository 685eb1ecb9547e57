#include "sfcmig/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "sfcmig/error.hpp"
#include "sfcmig/rng.hpp"
#include "sfcmig/text.hpp"

namespace sfcmig {

namespace {
const std::string kModule = "model";

Error model_error(const std::string& msg) { return Error(kModule, msg); }
}  // namespace

Topology::Topology(std::vector<PhysicalNode> nodes, std::vector<PhysicalLink> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  if (nodes_.empty()) throw model_error("topology has no nodes");
  std::sort(nodes_.begin(), nodes_.end(),
            [](const PhysicalNode& a, const PhysicalNode& b) { return a.id < b.id; });
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const PhysicalNode& n = nodes_[i];
    if (n.id < 0) throw model_error("negative node id " + std::to_string(n.id));
    if (!index_.emplace(n.id, static_cast<int>(i)).second) {
      throw model_error("duplicate node id " + std::to_string(n.id));
    }
    if (n.capacity < 0 || n.node_energy < 0) {
      throw model_error("node " + std::to_string(n.id) + " has a negative capacity or energy");
    }
    if (n.is_function_node && n.capacity <= 0) {
      throw model_error("function node " + std::to_string(n.id) + " needs a positive capacity");
    }
    if (n.is_function_node) function_nodes_.push_back(n.id);
  }

  adjacency_.assign(nodes_.size(), {});
  std::set<std::pair<int, int>> seen;
  for (PhysicalLink& l : links_) {
    if (l.a == l.b) throw model_error("self-loop on node " + std::to_string(l.a));
    if (!has_node(l.a) || !has_node(l.b)) {
      throw model_error("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                        " references an unknown node");
    }
    if (l.prop_delay < 0) {
      throw model_error("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                        " has a negative delay");
    }
    if (l.a > l.b) std::swap(l.a, l.b);
    if (!seen.emplace(l.a, l.b).second) {
      throw model_error("duplicate link " + std::to_string(l.a) + "-" + std::to_string(l.b));
    }
    adjacency_[index_.at(l.a)].emplace_back(l.b, l.prop_delay);
    adjacency_[index_.at(l.b)].emplace_back(l.a, l.prop_delay);
  }
  std::sort(links_.begin(), links_.end(), [](const PhysicalLink& x, const PhysicalLink& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

  // Connectivity: every node (and so every function node) must be reachable.
  std::vector<char> visited(nodes_.size(), 0);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = 1;
  size_t reached = 1;
  while (!frontier.empty()) {
    int at = frontier.front();
    frontier.pop();
    for (const auto& [nb, delay] : adjacency_[at]) {
      (void)delay;
      int idx = index_.at(nb);
      if (!visited[idx]) {
        visited[idx] = 1;
        ++reached;
        frontier.push(idx);
      }
    }
  }
  if (reached != nodes_.size()) {
    throw model_error("topology is not connected");
  }

  compute_routes();
}

int Topology::index_of(int id, const char* what) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw model_error(std::string("unknown ") + what + " node " + std::to_string(id));
  }
  return it->second;
}

const PhysicalNode& Topology::node(int id) const { return nodes_[index_of(id, "")]; }

int Topology::degree(int id) const {
  return static_cast<int>(adjacency_[index_of(id, "")].size());
}

const std::vector<std::pair<int, double>>& Topology::neighbors(int id) const {
  return adjacency_[index_of(id, "")];
}

bool Topology::has_link(int a, int b) const {
  if (!has_node(a) || !has_node(b)) return false;
  for (const auto& [nb, delay] : adjacency_[index_.at(a)]) {
    (void)delay;
    if (nb == b) return true;
  }
  return false;
}

double Topology::link_delay(int a, int b) const {
  for (const auto& [nb, delay] : adjacency_[index_of(a, "link endpoint")]) {
    if (nb == b) return delay;
  }
  throw model_error("no link " + std::to_string(a) + "-" + std::to_string(b));
}

// Dijkstra keyed on (distance, node sequence): the first settled entry per
// node is both minimum-delay and lexicographically smallest among ties.
void Topology::compute_routes() {
  const size_t n = nodes_.size();
  paths_.assign(n, std::vector<std::vector<int>>(n));
  dists_.assign(n, std::vector<double>(n, 0.0));
  using Entry = std::pair<double, std::vector<int>>;
  for (size_t s = 0; s < n; ++s) {
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    std::vector<char> settled(n, 0);
    queue.push({0.0, {nodes_[s].id}});
    size_t remaining = n;
    while (!queue.empty() && remaining > 0) {
      auto [dist, path] = queue.top();
      queue.pop();
      int at = index_.at(path.back());
      if (settled[at]) continue;
      settled[at] = 1;
      --remaining;
      paths_[s][at] = path;
      dists_[s][at] = dist;
      for (const auto& [nb, delay] : adjacency_[at]) {
        if (settled[index_.at(nb)]) continue;
        std::vector<int> next = path;
        next.push_back(nb);
        queue.push({dist + delay, std::move(next)});
      }
    }
  }
}

const std::vector<int>& Topology::shortest_path(int from, int to) const {
  return paths_[index_of(from, "route source")][index_of(to, "route target")];
}

double Topology::shortest_delay(int from, int to) const {
  return dists_[index_of(from, "route source")][index_of(to, "route target")];
}

double Topology::path_delay(const std::vector<int>& path) const {
  double total = 0.0;
  for (size_t i = 1; i < path.size(); ++i) total += link_delay(path[i - 1], path[i]);
  return total;
}

Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw model_error("cannot open topology file " + path);
  std::vector<PhysicalNode> nodes;
  std::vector<PhysicalLink> links;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t == "[nodes]" || t == "[links]") {
        section = t;
        continue;
      }
      throw model_error(where + ": unknown section " + t);
    }
    std::vector<std::string> f = split(t, ',');
    if (section == "[nodes]") {
      if (f.size() != 4) throw model_error(where + ": expected id,capacity,node_energy,is_function");
      PhysicalNode n;
      n.id = parse_int(f[0], where, kModule);
      n.capacity = parse_double(f[1], where, kModule);
      n.node_energy = parse_double(f[2], where, kModule);
      int flag = parse_int(f[3], where, kModule);
      if (flag != 0 && flag != 1) throw model_error(where + ": is_function must be 0 or 1");
      n.is_function_node = flag == 1;
      nodes.push_back(n);
    } else if (section == "[links]") {
      if (f.size() != 3) throw model_error(where + ": expected i,j,prop_delay");
      PhysicalLink l;
      l.a = parse_int(f[0], where, kModule);
      l.b = parse_int(f[1], where, kModule);
      l.prop_delay = parse_double(f[2], where, kModule);
      links.push_back(l);
    } else {
      throw model_error(where + ": data before any [nodes]/[links] section");
    }
  }
  return Topology(std::move(nodes), std::move(links));
}

void save_topology(const Topology& topo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw model_error("cannot write topology file " + path);
  out << "[nodes]\n";
  for (const PhysicalNode& n : topo.nodes()) {
    out << n.id << "," << fmt_double(n.capacity) << "," << fmt_double(n.node_energy) << ","
        << (n.is_function_node ? 1 : 0) << "\n";
  }
  out << "[links]\n";
  for (const PhysicalLink& l : topo.links()) {
    out << l.a << "," << l.b << "," << fmt_double(l.prop_delay) << "\n";
  }
  if (!out) throw model_error("failed writing topology file " + path);
}

Topology select_function_nodes_by_degree(const Topology& topo, int k) {
  const int n = static_cast<int>(topo.nodes().size());
  if (k < 1 || k > n) {
    throw model_error("cannot select " + std::to_string(k) + " function nodes out of " +
                      std::to_string(n));
  }
  std::vector<std::pair<int, int>> by_degree;  // (-degree, id)
  for (const PhysicalNode& node : topo.nodes()) {
    by_degree.emplace_back(-topo.degree(node.id), node.id);
  }
  std::sort(by_degree.begin(), by_degree.end());
  std::set<int> chosen;
  for (int i = 0; i < k; ++i) chosen.insert(by_degree[i].second);
  std::vector<PhysicalNode> nodes = topo.nodes();
  for (PhysicalNode& node : nodes) node.is_function_node = chosen.count(node.id) > 0;
  return Topology(std::move(nodes), topo.links());
}

std::vector<VnfType> load_vnf_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw model_error("cannot open VNF catalog " + path);
  std::vector<VnfType> catalog;
  std::set<int> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> f = split(t, ',');
    if (f.size() != 6) {
      throw model_error(where +
                        ": expected id,proc_coeff,config_delay,deploy_delay,deploy_cost,vm_energy");
    }
    VnfType v;
    v.id = parse_int(f[0], where, kModule);
    v.proc_coeff = parse_double(f[1], where, kModule);
    v.config_delay = parse_double(f[2], where, kModule);
    v.deploy_delay = parse_double(f[3], where, kModule);
    v.deploy_cost = parse_double(f[4], where, kModule);
    v.vm_energy = parse_double(f[5], where, kModule);
    if (v.proc_coeff < 0 || v.config_delay < 0 || v.deploy_delay < 0 || v.deploy_cost < 0 ||
        v.vm_energy < 0) {
      throw model_error(where + ": VNF type fields must be non-negative");
    }
    if (!ids.insert(v.id).second) {
      throw model_error(where + ": duplicate VNF type id " + std::to_string(v.id));
    }
    catalog.push_back(v);
  }
  if (catalog.empty()) throw model_error("VNF catalog " + path + " is empty");
  std::sort(catalog.begin(), catalog.end(),
            [](const VnfType& a, const VnfType& b) { return a.id < b.id; });
  return catalog;
}

namespace {

std::vector<double> trace_from_file(const std::string& path, std::map<int, std::map<int, double>>& rows) {
  std::ifstream in(path);
  if (!in) throw model_error("cannot open trace file " + path);
  std::string line;
  int lineno = 0;
  int max_slot = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> f = split(t, ',');
    if (f.size() != 3) throw model_error(where + ": expected flow_id,slot,bandwidth");
    int id = parse_int(f[0], where, kModule);
    int slot = parse_int(f[1], where, kModule);
    double bw = parse_double(f[2], where, kModule);
    if (slot < 0) throw model_error(where + ": negative slot");
    if (bw < 0) throw model_error(where + ": negative bandwidth");
    rows[id][slot] = bw;
    max_slot = std::max(max_slot, slot);
  }
  if (rows.empty()) throw model_error("trace file " + path + " has no rows");
  return std::vector<double>(static_cast<size_t>(max_slot + 1), 0.0);
}

}  // namespace

std::vector<Flow> generate_traffic(const Topology& topo, const TrafficSpec& spec,
                                   std::uint64_t seed) {
  if (spec.n_services < 1) throw model_error("n_services must be at least 1");
  Rng rng(seed);
  const auto& nodes = topo.nodes();
  auto random_endpoints = [&](Flow& flow) {
    flow.src = nodes[rng.uniform_int(static_cast<int>(nodes.size()))].id;
    do {
      flow.dst = nodes[rng.uniform_int(static_cast<int>(nodes.size()))].id;
    } while (flow.dst == flow.src && nodes.size() > 1);
  };

  std::vector<Flow> flows;
  if (spec.profile == "sinusoid" || spec.profile == "step") {
    if (spec.n_flows < 1) throw model_error("n_flows must be positive");
    if (spec.slots < 1) throw model_error("slots must be positive");
    if (spec.profile == "sinusoid" && spec.period <= 0) {
      throw model_error("sinusoid period must be positive");
    }
    for (int i = 0; i < spec.n_flows; ++i) {
      Flow flow;
      flow.id = i;
      flow.service_type = "svc" + std::to_string(i % spec.n_services);
      random_endpoints(flow);
      double phase = spec.profile == "sinusoid" ? rng.uniform(0.0, spec.period) : 0.0;
      flow.bandwidth_trace.resize(static_cast<size_t>(spec.slots));
      for (int t = 0; t < spec.slots; ++t) {
        double bw = spec.amplitude;
        if (spec.profile == "sinusoid") {
          bw = spec.base +
               spec.amplitude * std::sin(2.0 * std::numbers::pi * (t + phase) / spec.period);
        }
        flow.bandwidth_trace[static_cast<size_t>(t)] = std::max(0.0, bw);
      }
      flows.push_back(std::move(flow));
    }
  } else if (spec.profile == "trace") {
    std::map<int, std::map<int, double>> rows;
    std::vector<double> blank = trace_from_file(spec.trace_path, rows);
    int i = 0;
    for (const auto& [id, samples] : rows) {
      Flow flow;
      flow.id = id;
      flow.service_type = "svc" + std::to_string(i++ % spec.n_services);
      random_endpoints(flow);
      flow.bandwidth_trace = blank;
      for (const auto& [slot, bw] : samples) {
        flow.bandwidth_trace[static_cast<size_t>(slot)] = bw;
      }
      flows.push_back(std::move(flow));
    }
  } else {
    throw model_error("unknown traffic profile '" + spec.profile + "'");
  }
  return flows;
}

void assign_flows_to_chains(std::vector<Flow>& flows, std::vector<ServiceChain>& chains) {
  for (ServiceChain& chain : chains) chain.member_flows.clear();
  for (Flow& flow : flows) {
    ServiceChain* owner = nullptr;
    for (ServiceChain& chain : chains) {
      if (chain.service_type != flow.service_type) continue;
      if (owner != nullptr) {
        throw model_error("flow " + std::to_string(flow.id) + " matches several chains (type '" +
                          flow.service_type + "')");
      }
      owner = &chain;
    }
    if (owner == nullptr) {
      throw model_error("flow " + std::to_string(flow.id) + " has no chain for service type '" +
                        flow.service_type + "'");
    }
    owner->member_flows.push_back(flow.id);
    flow.max_delay = owner->max_delay;
  }
}

void ExperimentConfig::validate() const {
  if (std::abs(alpha_c + beta_c - 1.0) > 1e-9) {
    throw model_error("alpha_c + beta_c must equal 1");
  }
  if (alpha_c < 0 || beta_c < 0 || gamma_c < 0 || beta_n < 0 || beta_r < 0) {
    throw model_error("cost weights must be non-negative");
  }
  if (rho <= 0) throw model_error("rho must be positive");
  if (packet_len <= 0) throw model_error("packet_len must be positive");
  if (slots_per_cycle < 1) throw model_error("slots_per_cycle must be positive");
  if (ecost_max < 0) throw model_error("ecost_max must be non-negative");
}

const VnfType& Problem::vnf(int id) const {
  for (const VnfType& v : catalog) {
    if (v.id == id) return v;
  }
  throw model_error("unknown VNF type " + std::to_string(id));
}

const ServiceChain& Problem::chain(int id) const {
  for (const ServiceChain& c : chains) {
    if (c.id == id) return c;
  }
  throw model_error("unknown chain " + std::to_string(id));
}

const Flow& Problem::flow(int id) const {
  for (const Flow& f : flows) {
    if (f.id == id) return f;
  }
  throw model_error("unknown flow " + std::to_string(id));
}

const ServiceChain& Problem::chain_of_flow(int flow_id) const {
  auto it = flow_owner_.find(flow_id);
  if (it == flow_owner_.end()) {
    throw model_error("flow " + std::to_string(flow_id) + " is not assigned to a chain");
  }
  return chain(it->second);
}

double Problem::default_ecost_max() const {
  double node_sum = 0.0;
  for (const PhysicalNode& n : topology.nodes()) node_sum += n.node_energy;
  double vm_max = 0.0;
  for (const VnfType& v : catalog) vm_max = std::max(vm_max, v.vm_energy);
  return node_sum + static_cast<double>(topology.nodes().size()) *
                        static_cast<double>(catalog.size()) * vm_max;
}

double Problem::ecost_max() const {
  return config.ecost_max > 0 ? config.ecost_max : default_ecost_max();
}

void Problem::validate() {
  config.validate();
  if (topology.nodes().empty()) throw model_error("problem has no topology");
  if (topology.function_nodes().empty()) throw model_error("topology has no function nodes");
  if (catalog.empty()) throw model_error("problem has an empty VNF catalog");
  if (chains.empty()) throw model_error("problem has no chains");

  std::sort(chains.begin(), chains.end(),
            [](const ServiceChain& a, const ServiceChain& b) { return a.id < b.id; });
  std::sort(flows.begin(), flows.end(), [](const Flow& a, const Flow& b) { return a.id < b.id; });

  std::set<int> chain_ids;
  flow_owner_.clear();
  for (const ServiceChain& c : chains) {
    if (!chain_ids.insert(c.id).second) {
      throw model_error("duplicate chain id " + std::to_string(c.id));
    }
    if (c.vnf_sequence.empty()) {
      throw model_error("chain " + std::to_string(c.id) + " has no VNFs");
    }
    if (c.max_delay <= 0) {
      throw model_error("chain " + std::to_string(c.id) + " needs a positive delay bound");
    }
    for (int v : c.vnf_sequence) vnf(v);  // throws on unknown type
    for (int f : c.member_flows) {
      flow(f);
      if (!flow_owner_.emplace(f, c.id).second) {
        throw model_error("flow " + std::to_string(f) + " appears in several chains");
      }
    }
  }
  std::set<int> flow_ids;
  for (const Flow& f : flows) {
    if (!flow_ids.insert(f.id).second) {
      throw model_error("duplicate flow id " + std::to_string(f.id));
    }
    if (!topology.has_node(f.src) || !topology.has_node(f.dst)) {
      throw model_error("flow " + std::to_string(f.id) + " has endpoints outside the topology");
    }
    if (f.bandwidth_trace.empty()) {
      throw model_error("flow " + std::to_string(f.id) + " has an empty bandwidth trace");
    }
    if (flow_owner_.find(f.id) == flow_owner_.end()) {
      throw model_error("flow " + std::to_string(f.id) + " is not assigned to any chain");
    }
  }
}

double chain_bandwidth(const Problem& problem, int chain_id, int slot) {
  const ServiceChain& c = problem.chain(chain_id);
  double total = 0.0;
  for (int f : c.member_flows) total += problem.flow(f).bandwidth(slot);
  return total;
}

}  // namespace sfcmig
