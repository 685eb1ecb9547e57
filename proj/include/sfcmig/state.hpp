#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sfcmig/model.hpp"

namespace sfcmig {

struct MigrationAction {
  enum class Kind { NoOp, Move };

  int chain = -1;
  Kind kind = Kind::NoOp;
  int vnf_index = -1;  // position within the chain, only for Move
  int target = -1;     // destination function node, only for Move

  static MigrationAction noop(int chain) {
    MigrationAction a;
    a.chain = chain;
    return a;
  }
  static MigrationAction move(int chain, int vnf_index, int target) {
    MigrationAction a;
    a.chain = chain;
    a.kind = Kind::Move;
    a.vnf_index = vnf_index;
    a.target = target;
    return a;
  }
  bool is_noop() const { return kind == Kind::NoOp; }
  bool operator==(const MigrationAction&) const = default;
};

struct ChainRoutes {
  // One physical path per virtual link between consecutive VNFs (length - 1
  // entries, each an ordered node-id sequence).
  std::vector<std::vector<int>> vlink_paths;
  bool operator==(const ChainRoutes&) const = default;
};

struct FlowRoute {
  std::vector<int> ingress;  // flow source -> node hosting the first VNF
  std::vector<int> egress;   // node hosting the last VNF -> flow destination
  bool operator==(const FlowRoute&) const = default;
};

// Snapshot of the network at one slot: where every chain's VNFs sit, which
// (node, type) instances exist, which of those are serving traffic, and all
// routed paths. Plain value type; copying it is the snapshot operation.
struct NetworkState {
  int slot = 0;
  std::map<int, std::vector<int>> placement;       // chain id -> hosting node per position
  std::set<std::pair<int, int>> deployed;          // (node, type) instances present
  std::set<std::pair<int, int>> active;            // (node, type) instances with mapped VNFs
  std::map<int, ChainRoutes> routes;               // chain id -> inter-VNF paths
  std::map<int, FlowRoute> flow_routes;            // flow id -> ingress/egress legs
  std::set<int> moved_this_slot;                   // chains that already migrated this slot

  NetworkState snapshot() const { return *this; }
  std::uint64_t fingerprint() const;
  int host(int chain_id, int vnf_index) const;
  bool operator==(const NetworkState&) const = default;
};

// First-fit over function nodes in ascending id order, using slot-0 demands.
// Fails only when total demand exceeds total function-node capacity; a VNF
// that fits nowhere (fragmentation) lands on the node with the most headroom.
NetworkState initial_placement(const Problem& problem);

const std::vector<int>& shortest_path(const Topology& topo, int from, int to);

// Applies one migration (or no-op) in place: remaps the VNF, deploys the
// instance at the target if missing, reroutes the touched virtual links and
// flow legs, and refreshes the active flags. At most one move per chain per
// slot.
void apply_action(NetworkState& state, const MigrationAction& action, const Problem& problem);

// End-of-slot bookkeeping: retract deployed instances that no longer serve
// any VNF, advance the clock, reset the per-slot move ledger.
void advance_slot(NetworkState& state, const Problem& problem);

struct ResourceReport {
  std::map<std::pair<int, int>, double> requested;  // (node, type) -> demanded capacity
  std::map<std::pair<int, int>, double> allocated;  // (node, type) -> granted capacity
  double total_packet_loss = 0.0;

  double node_load(int node) const;
  double requested_at(int node, int type) const;
  double allocated_at(int node, int type) const;
};

// Demands per (node, type) from this slot's chain bandwidths, max-min fair
// allocations within each node, and the resulting packet loss.
ResourceReport compute_resources(const NetworkState& state, const Problem& problem);

// Water-filling: every demand gets min(own demand, fair share), capacity is
// exhausted unless total demand is below it.
Eigen::VectorXd maxmin_allocate(const Eigen::VectorXd& demands, double capacity);

double packet_loss(const ResourceReport& resources, const Problem& problem);

// Propagation along the stored ingress, inter-VNF, and egress paths plus the
// processing time of every VNF on the chain.
double end_to_end_delay(const NetworkState& state, const Flow& flow, const Problem& problem);

enum class ConstraintKind {
  Delay,
  Capacity,
  MappingUniqueness,
  MigrationCount,
  TypeAvailability,
  FlowPartition,
  FlowConservation,
};

const char* constraint_name(ConstraintKind kind);

struct Violation {
  ConstraintKind kind;
  int subject = -1;  // flow, node, or chain id depending on the kind
  double magnitude = 0.0;
  std::string detail;
};

// Structural and QoS checks against the previous slot's state. Delay checks
// cover only flows that carry traffic this slot.
std::vector<Violation> check_constraints(const NetworkState& prev, const NetworkState& cur,
                                         const Problem& problem);

// Subagent input: per-VNF demand over hosting-node capacity, then remaining
// capacity fraction of every function node, all clipped to [-1, 1].
Eigen::VectorXd observe(const NetworkState& state, int chain_id, const ResourceReport& resources,
                        const Problem& problem);

double node_overload_prob(const ResourceReport& resources, int node, const Problem& problem);
double chain_overload_prob(const NetworkState& state, int chain_id,
                           const ResourceReport& resources, const Problem& problem);

// Sum over function nodes of the relative capacity excess this slot.
double overload_degree(const ResourceReport& resources, const Problem& problem);

// Plain-text dump: placement rows, then per-(node, type) resource rows.
void write_state_dump(std::ostream& out, const NetworkState& state,
                      const ResourceReport& resources);

}  // namespace sfcmig
