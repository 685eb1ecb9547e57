#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sfcmig/cost.hpp"
#include "sfcmig/error.hpp"
#include "sfcmig/rng.hpp"
#include "sfcmig/state.hpp"
#include "support.hpp"

using namespace sfcmig;

namespace {

// Tree topology: 0-1-2 on one branch, 0-3-4-5 on the other. A chain of two
// type-0 VNFs starts split over nodes 0 and 2 (node 0 is too small for both);
// moving the second VNF to node 5 re-routes its virtual link from the 2-edge
// branch to the disjoint 3-edge branch and deploys a fresh instance there.
struct MigrationFixture {
  Problem problem;
  NetworkState before;
  NetworkState after;
};

MigrationFixture make_migration_fixture(bool target_already_deployed = false) {
  MigrationFixture fx;
  Problem& p = fx.problem;
  p.topology = Topology(
      {test::fnode(0, 6), test::relay(1), test::fnode(2, 10), test::relay(3), test::relay(4),
       test::fnode(5, 10)},
      {{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}});
  // type 0: config transfer 1, deployment transfer 2, deployment fee 6
  p.catalog = {test::vnf_type(0, 1.0, 1.0, 2.0, 6.0, 0.5)};
  p.chains = {test::chain_of(0, "svc0", {0, 0})};
  p.flows = {test::constant_flow(0, "svc0", 0, 2, 4.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.config.ecost_max = 20.0;
  p.validate();

  fx.before = initial_placement(p);
  REQUIRE(fx.before.placement.at(0) == std::vector<int>{0, 2});
  REQUIRE(fx.before.routes.at(0).vlink_paths == std::vector<std::vector<int>>{{0, 1, 2}});
  if (target_already_deployed) fx.before.deployed.emplace(5, 0);

  fx.after = fx.before.snapshot();
  apply_action(fx.after, MigrationAction::move(0, 1, 5), p);
  REQUIRE(fx.after.routes.at(0).vlink_paths == std::vector<std::vector<int>>{{0, 3, 4, 5}});
  return fx;
}

}  // namespace

TEST_CASE("energy cost of an empty network is zero") {
  Problem p = test::tiny_problem();
  NetworkState empty;
  CHECK(energy_cost(empty, p) == 0.0);
}

TEST_CASE("energy cost counts busy nodes once and every active VM") {
  // Chain [t0, t1] packs onto node 0 (demand 4 of 5); chain [t0] spills to
  // node 1: two busy nodes, three VMs.
  Problem p;
  p.topology = test::two_node_topology(5, 10);
  p.catalog = {test::vnf_type(0, 1.0), test::vnf_type(1, 1.0)};
  p.chains = {test::chain_of(0, "svcA", {0, 1}), test::chain_of(1, "svcB", {0})};
  p.flows = {test::constant_flow(0, "svcA", 0, 1, 2.0), test::constant_flow(1, "svcB", 0, 1, 2.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  NetworkState state = initial_placement(p);
  REQUIRE(state.placement.at(0) == std::vector<int>{0, 0});
  REQUIRE(state.placement.at(1) == std::vector<int>{1});
  CHECK(energy_cost(state, p) == doctest::Approx(2.0 * 1.0 + 3 * 0.5));
}

TEST_CASE("vacating a node onto an already-busy one saves exactly the node term") {
  // Chain 0 (type 0) on node 0, chain 1 (type 1) on node 1. Consolidating
  // chain 0 onto node 1 relocates its VM, so only the node term changes.
  Problem p;
  p.topology = test::two_node_topology(20, 20);
  p.catalog = {test::vnf_type(0, 1.0), test::vnf_type(1, 1.0)};
  p.chains = {test::chain_of(0, "svcA", {0}), test::chain_of(1, "svcB", {1})};
  p.flows = {test::constant_flow(0, "svcA", 0, 1, 8.0), test::constant_flow(1, "svcB", 0, 1, 8.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  NetworkState spread = initial_placement(p);
  REQUIRE(spread.placement.at(0) == std::vector<int>{0});
  REQUIRE(spread.placement.at(1) == std::vector<int>{0});
  apply_action(spread, MigrationAction::move(1, 0, 1), p);
  advance_slot(spread, p);

  double before = energy_cost(spread, p);
  NetworkState merged = spread.snapshot();
  apply_action(merged, MigrationAction::move(0, 0, 1), p);
  advance_slot(merged, p);
  double after = energy_cost(merged, p);

  CHECK(before == doctest::Approx(2 * 1.0 + 2 * 0.5));
  CHECK(before - after == doctest::Approx(p.topology.node(0).node_energy));
}

TEST_CASE("a slot without migrations costs nothing to move") {
  MigrationFixture fx = make_migration_fixture();
  CHECK(migration_data_cost(fx.before, fx.before, 0, fx.problem) == 0.0);
  CHECK(reconfig_cost(fx.before, fx.before, 0, fx.problem) == 0.0);
  CHECK(migration_overhead(fx.before, fx.before, 0, fx.problem) == 0.0);
}

TEST_CASE("migration data volume: fresh instance at the target") {
  // bandwidth 4, config 1, deploy 2; instance present at the source only:
  // (4/2)*(1+0) + (4/2)*(1+2) = 8
  MigrationFixture fx = make_migration_fixture();
  CHECK(migration_data_cost(fx.before, fx.after, 0, fx.problem) == doctest::Approx(8.0));
}

TEST_CASE("migration data volume: instance already at the target") {
  // Both endpoints hold the instance: (4/2)*1 + (4/2)*1 = 4
  MigrationFixture fx = make_migration_fixture(true);
  CHECK(migration_data_cost(fx.before, fx.after, 0, fx.problem) == doctest::Approx(4.0));
}

TEST_CASE("reconfiguration: deployment fee plus rerouted edges") {
  // Fee 6 halved at the fresh target = 3; edge sets {01,12} vs {03,34,45}
  // differ in 5 edges = 2.5.
  MigrationFixture fx = make_migration_fixture();
  CHECK(reconfig_cost(fx.before, fx.after, 0, fx.problem) == doctest::Approx(5.5));

  // With the instance pre-deployed the fee vanishes; rerouting remains.
  MigrationFixture warm = make_migration_fixture(true);
  CHECK(reconfig_cost(warm.before, warm.after, 0, warm.problem) == doctest::Approx(2.5));
}

TEST_CASE("shared edges between old and new routes do not count") {
  // Line of four function nodes; moving the tail VNF one hop extends the
  // route, old edges stay: symmetric difference is the single new edge.
  Problem p;
  p.topology = Topology(
      {test::fnode(0, 50), test::fnode(1, 50), test::fnode(2, 50), test::fnode(3, 50)},
      {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  p.catalog = {test::vnf_type(0, 1.0, 1.0, 2.0, 6.0, 0.5)};
  p.chains = {test::chain_of(0, "svc0", {0, 0})};
  p.flows = {test::constant_flow(0, "svc0", 0, 3, 4.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  NetworkState before = initial_placement(p);
  REQUIRE(before.placement.at(0) == std::vector<int>{0, 0});
  apply_action(before, MigrationAction::move(0, 1, 2), p);
  advance_slot(before, p);
  // route now 0->2; moving on to 3 adds edge 2-3 and keeps 0-1, 1-2
  NetworkState after = before.snapshot();
  apply_action(after, MigrationAction::move(0, 1, 3), p);
  double fee = 0.5 * 6.0;  // instance at 3 is fresh; source instance at 2 stays counted
  CHECK(reconfig_cost(before, after, 0, p) == doctest::Approx(fee + 0.5 * 1.0));
}

TEST_CASE("migration overhead blends the two terms with their weights") {
  MigrationFixture fx = make_migration_fixture();
  Problem& p = fx.problem;
  p.config.beta_n = 0.0;
  p.config.beta_r = 0.0;
  CHECK(migration_overhead(fx.before, fx.after, 0, p) == 0.0);
  p.config.beta_n = 1.0;
  CHECK(migration_overhead(fx.before, fx.after, 0, p) == doctest::Approx(8.0));
  p.config.beta_n = 0.5;
  p.config.beta_r = 0.5;
  CHECK(migration_overhead(fx.before, fx.after, 0, p) == doctest::Approx(6.75));
}

TEST_CASE("penalty is zero when deadlines and capacity hold") {
  Problem p = test::tiny_problem(2.0);
  NetworkState state = initial_placement(p);
  CHECK(penalty(state, compute_resources(state, p), p) == 0.0);
}

TEST_CASE("penalty scales the deadline miss relatively") {
  // Processing 11 + egress 1 = 12 against a bound of 10 -> 0.2.
  Problem p;
  p.topology = test::two_node_topology(30, 30);
  p.catalog = {test::vnf_type(0, 11.0)};
  p.chains = {test::chain_of(0, "svc0", {0}, 10.0)};
  p.flows = {test::constant_flow(0, "svc0", 0, 1, 1.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  NetworkState state = initial_placement(p);
  REQUIRE(end_to_end_delay(state, p.flow(0), p) == doctest::Approx(12.0));
  CHECK(penalty(state, compute_resources(state, p), p) == doctest::Approx(0.2));

  // A silent flow cannot miss its deadline.
  for (double& bw : p.flows[0].bandwidth_trace) bw = 0.0;
  CHECK(penalty(state, compute_resources(state, p), p) == 0.0);
}

TEST_CASE("penalty passes packet loss through") {
  Problem p;
  p.topology = test::two_node_topology(30, 30);
  p.catalog = {test::vnf_type(0, 7.0)};
  p.chains = {test::chain_of(0, "svc0", {0}, 10.0)};  // delay 8 <= 10
  p.flows = {test::constant_flow(0, "svc0", 0, 1, 1.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  NetworkState state = initial_placement(p);
  ResourceReport resources = compute_resources(state, p);
  resources.total_packet_loss = 3.0;
  CHECK(penalty(state, resources, p) == doctest::Approx(3.0));
}

TEST_CASE("reward stays on the true-energy branch while the penalty is small") {
  Problem p = test::tiny_problem();
  p.config.alpha_c = 0.5;
  p.config.beta_c = 0.5;
  p.config.gamma_c = 1.0;
  CHECK(reward_value(3.5, 0.0, 0.0, p) == doctest::Approx(-1.75));
}

TEST_CASE("reward saturates the energy term at the penalty threshold") {
  Problem p = test::tiny_problem();
  p.config.ecost_max = 20.0;
  p.config.rho = 0.1;
  double below = reward_value(3.5, 0.0, 0.0999, p);
  double at = reward_value(3.5, 0.0, 0.1, p);
  CHECK(below == doctest::Approx(-(0.5 * 3.5 + 0.0999)));
  CHECK(at == doctest::Approx(-(0.5 * 20.0 + 0.1)));
}

TEST_CASE("pinned reward value on the migration fixture") {
  // Saturated branch: -(0.5*20 + 0.5*6.75 + 1*3) = -16.375
  MigrationFixture fx = make_migration_fixture();
  CHECK(reward_value(energy_cost(fx.after, fx.problem), 6.75, 3.0, fx.problem) ==
        doctest::Approx(-16.375));
}

TEST_CASE("state-based reward composes the scalar pieces") {
  MigrationFixture fx = make_migration_fixture();
  ResourceReport resources = compute_resources(fx.after, fx.problem);
  double expected = reward_value(energy_cost(fx.after, fx.problem),
                                 migration_overhead(fx.before, fx.after, 0, fx.problem),
                                 penalty(fx.after, resources, fx.problem), fx.problem);
  CHECK(reward(0, fx.before, fx.after, resources, fx.problem) == doctest::Approx(expected));
}

TEST_CASE("slot ledger gathers per-chain terms and the objective") {
  MigrationFixture fx = make_migration_fixture();
  CostBreakdown costs = compute_slot_costs(fx.before, fx.after, fx.problem);
  CHECK(costs.ncost.at(0) == doctest::Approx(8.0));
  CHECK(costs.rcost.at(0) == doctest::Approx(5.5));
  CHECK(costs.mcost.at(0) == doctest::Approx(6.75));
  CHECK(costs.ecost == doctest::Approx(energy_cost(fx.after, fx.problem)));
  CHECK(costs.total == doctest::Approx(0.5 * costs.ecost + 0.5 * 6.75));

  // Horizon objective: empty sum, single slot, additivity.
  CHECK(total_cost({}, fx.problem) == 0.0);
  CHECK(total_cost({costs}, fx.problem) == doctest::Approx(costs.total));
  CHECK(total_cost({costs, costs}, fx.problem) == doctest::Approx(2 * costs.total));
}

TEST_CASE("no-op slots cost nothing across random states") {
  Problem p;
  p.topology = Topology({test::fnode(0, 40), test::fnode(1, 40), test::fnode(2, 40)},
                        {{0, 1, 1.0}, {1, 2, 2.0}});
  p.catalog = {test::vnf_type(0, 0.5), test::vnf_type(1, 1.0)};
  p.chains = {test::chain_of(0, "svcA", {0, 1}), test::chain_of(1, "svcB", {1})};
  p.flows = {test::constant_flow(0, "svcA", 0, 2, 3.0), test::constant_flow(1, "svcB", 2, 0, 2.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();

  Rng rng(17);
  NetworkState state = initial_placement(p);
  for (int step = 0; step < 40; ++step) {
    // Random walk to a fresh state, then verify an idle slot is free.
    for (const ServiceChain& chain : p.chains) {
      if (rng.uniform() < 0.4) continue;
      int m = rng.uniform_int(chain.length());
      int current = state.host(chain.id, m);
      std::vector<int> candidates;
      for (int node : p.topology.function_nodes()) {
        if (node != current) candidates.push_back(node);
      }
      apply_action(state,
                   MigrationAction::move(chain.id, m,
                                         candidates[static_cast<size_t>(rng.uniform_int(
                                             static_cast<int>(candidates.size())))]),
                   p);
    }
    advance_slot(state, p);
    CostBreakdown idle = compute_slot_costs(state, state, p);
    for (const ServiceChain& chain : p.chains) {
      CHECK(idle.ncost.at(chain.id) == 0.0);
      CHECK(idle.rcost.at(chain.id) == 0.0);
      CHECK(idle.mcost.at(chain.id) == 0.0);
      CHECK(idle.reward.at(chain.id) <= 0.0);
    }
  }
}

TEST_CASE("per-chain migration costs add up to a direct whole-network evaluation") {
  Problem p;
  p.topology = Topology({test::fnode(0, 60), test::fnode(1, 60), test::fnode(2, 60)},
                        {{0, 1, 1.0}, {1, 2, 2.0}, {0, 2, 2.5}});
  p.catalog = {test::vnf_type(0, 0.5, 1.0, 2.0, 6.0), test::vnf_type(1, 1.0, 1.5, 3.0, 8.0)};
  p.chains = {test::chain_of(0, "svcA", {0, 1}), test::chain_of(1, "svcB", {1, 0}),
              test::chain_of(2, "svcC", {0})};
  p.flows = {test::constant_flow(0, "svcA", 0, 2, 3.0), test::constant_flow(1, "svcB", 2, 0, 2.0),
             test::constant_flow(2, "svcC", 1, 1, 5.0)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();

  Rng rng(23);
  NetworkState state = initial_placement(p);
  for (int slot = 0; slot < 25; ++slot) {
    NetworkState prev = state.snapshot();
    for (const ServiceChain& chain : p.chains) {
      if (rng.uniform() < 0.35) continue;
      int m = rng.uniform_int(chain.length());
      int current = state.host(chain.id, m);
      std::vector<int> candidates;
      for (int node : p.topology.function_nodes()) {
        if (node != current) candidates.push_back(node);
      }
      apply_action(state,
                   MigrationAction::move(chain.id, m,
                                         candidates[static_cast<size_t>(rng.uniform_int(
                                             static_cast<int>(candidates.size())))]),
                   p);
    }

    // Independent re-derivation straight from the raw placement diff.
    double direct_data = 0.0;
    double direct_fees = 0.0;
    for (const ServiceChain& chain : p.chains) {
      double bw = chain_bandwidth(p, chain.id, state.slot);
      const auto& old_hosts = prev.placement.at(chain.id);
      const auto& new_hosts = state.placement.at(chain.id);
      for (size_t m = 0; m < old_hosts.size(); ++m) {
        if (old_hosts[m] == new_hosts[m]) continue;
        const VnfType& type = p.vnf(chain.vnf_sequence[m]);
        for (int endpoint : {old_hosts[m], new_hosts[m]}) {
          bool had = prev.deployed.count({endpoint, type.id}) > 0;
          direct_data += bw / 2.0 * (type.config_delay + (had ? 0.0 : type.deploy_delay));
          direct_fees += 0.5 * (had ? 0.0 : type.deploy_cost);
        }
      }
    }
    double sum_data = 0.0, sum_reconf = 0.0, sum_links = 0.0;
    for (const ServiceChain& chain : p.chains) {
      sum_data += migration_data_cost(prev, state, chain.id, p);
      sum_reconf += reconfig_cost(prev, state, chain.id, p);
    }
    // Count rerouted edges directly too.
    for (const ServiceChain& chain : p.chains) {
      const auto& old_paths = prev.routes.at(chain.id).vlink_paths;
      const auto& new_paths = state.routes.at(chain.id).vlink_paths;
      for (size_t k = 0; k < old_paths.size(); ++k) {
        std::set<std::pair<int, int>> a, b;
        for (size_t i = 1; i < old_paths[k].size(); ++i)
          a.emplace(std::min(old_paths[k][i - 1], old_paths[k][i]),
                    std::max(old_paths[k][i - 1], old_paths[k][i]));
        for (size_t i = 1; i < new_paths[k].size(); ++i)
          b.emplace(std::min(new_paths[k][i - 1], new_paths[k][i]),
                    std::max(new_paths[k][i - 1], new_paths[k][i]));
        for (const auto& e : a)
          if (!b.count(e)) sum_links += 0.5;
        for (const auto& e : b)
          if (!a.count(e)) sum_links += 0.5;
      }
    }
    CHECK(sum_data == doctest::Approx(direct_data).epsilon(1e-12));
    CHECK(sum_reconf == doctest::Approx(direct_fees + sum_links).epsilon(1e-12));
    advance_slot(state, p);
  }
}

TEST_CASE("migration data volume scales linearly with chain bandwidth") {
  MigrationFixture fx = make_migration_fixture();
  double base = migration_data_cost(fx.before, fx.after, 0, fx.problem);
  for (double& bw : fx.problem.flows[0].bandwidth_trace) bw *= 2.0;
  CHECK(migration_data_cost(fx.before, fx.after, 0, fx.problem) == doctest::Approx(2 * base));
  CHECK(reconfig_cost(fx.before, fx.after, 0, fx.problem) == doctest::Approx(5.5));
}

TEST_CASE("cost log lines are stable and complete") {
  MigrationFixture fx = make_migration_fixture();
  CostBreakdown costs = compute_slot_costs(fx.before, fx.after, fx.problem);
  std::ostringstream out;
  write_cost_log_header(out);
  write_cost_log_line(out, 3, 0, costs);
  CHECK(out.str().find("slot,chain,ecost,ncost,rcost,mcost,penalty,reward\n") == 0);
  CHECK(out.str().find("3,0,") != std::string::npos);
  CHECK(out.str().find(",8,5.5,6.75,") != std::string::npos);
}
