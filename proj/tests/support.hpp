#pragma once

// Shared builders for small test networks.

#include <string>
#include <vector>

#include "sfcmig/model.hpp"
#include "sfcmig/state.hpp"

namespace sfcmig::test {

inline PhysicalNode fnode(int id, double capacity, double energy = 1.0) {
  return {id, capacity, energy, true};
}

inline PhysicalNode relay(int id) { return {id, 0.0, 0.0, false}; }

inline VnfType vnf_type(int id, double proc, double config = 1.0, double deploy = 2.0,
                        double fee = 6.0, double energy = 0.5) {
  return {id, proc, config, deploy, fee, energy};
}

// Two function nodes joined by one link.
inline Topology two_node_topology(double cap0 = 10.0, double cap1 = 10.0) {
  return Topology({fnode(0, cap0), fnode(1, cap1)}, {{0, 1, 1.0}});
}

// a - b - c line, unit delays, ends are function nodes.
inline Topology line3_topology() {
  return Topology({fnode(0, 10), fnode(1, 10), fnode(2, 10)}, {{0, 1, 1.0}, {1, 2, 1.0}});
}

inline Flow constant_flow(int id, const std::string& service, int src, int dst, double bw,
                          int slots = 8) {
  Flow f;
  f.id = id;
  f.service_type = service;
  f.src = src;
  f.dst = dst;
  f.bandwidth_trace.assign(static_cast<size_t>(slots), bw);
  return f;
}

inline ServiceChain chain_of(int id, const std::string& service, std::vector<int> types,
                             double max_delay = 100.0) {
  ServiceChain c;
  c.id = id;
  c.service_type = service;
  c.vnf_sequence = std::move(types);
  c.max_delay = max_delay;
  return c;
}

// One chain with one type-0 VNF and a single constant flow, on two nodes.
inline Problem tiny_problem(double bw = 4.0, double cap0 = 10.0, double cap1 = 10.0) {
  Problem p;
  p.topology = two_node_topology(cap0, cap1);
  p.catalog = {vnf_type(0, 1.0)};
  p.chains = {chain_of(0, "svc0", {0})};
  p.flows = {constant_flow(0, "svc0", 0, 1, bw)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  return p;
}

}  // namespace sfcmig::test
