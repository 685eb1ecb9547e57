#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "sfcmig/error.hpp"
#include "sfcmig/msdf.hpp"
#include "support.hpp"

using namespace sfcmig;

namespace {

// Triangle of function nodes hosting two single-VNF chains; node 0 is small
// so the second chain spills to node 1.
Problem triangle_problem(double bw0 = 4.0, double bw1 = 4.0) {
  Problem p;
  p.topology = Topology({test::fnode(0, 6), test::fnode(1, 10), test::fnode(2, 20)},
                        {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  p.catalog = {test::vnf_type(0, 1.0)};
  p.chains = {test::chain_of(0, "svcA", {0}), test::chain_of(1, "svcB", {0})};
  p.flows = {test::constant_flow(0, "svcA", 0, 1, bw0), test::constant_flow(1, "svcB", 0, 1, bw1)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  return p;
}

// Two roomy nodes, one single-VNF chain: staying put is strictly optimal
// because energy is identical everywhere and every move costs overhead.
Problem stay_put_problem() {
  Problem p;
  p.topology = test::two_node_topology(100, 100);
  p.catalog = {test::vnf_type(0, 1.0)};
  p.chains = {test::chain_of(0, "svc0", {0})};
  p.flows = {test::constant_flow(0, "svc0", 0, 1, 4.0, 20)};
  assign_flows_to_chains(p.flows, p.chains);
  p.validate();
  return p;
}

std::vector<Subagent> make_agents(const Problem& p, const AgentConfig& cfg) {
  std::vector<Subagent> agents;
  int n = p.n_function_nodes();
  for (const ServiceChain& chain : p.chains)
    agents.emplace_back(chain.id, chain.length() + n, action_count(chain.length(), n), cfg,
                        derive_seed(p.config.seed, "t-init-" + std::to_string(chain.id)),
                        derive_seed(p.config.seed, "t-explore-" + std::to_string(chain.id)));
  return agents;
}

AgentConfig quick_config() {
  AgentConfig cfg;
  cfg.hidden = {};
  cfg.batch_size = 8;
  cfg.buffer_capacity = 400;
  cfg.eps_anneal_episodes = 10;
  cfg.learning_rate = 0.01;
  return cfg;
}

}  // namespace

TEST_CASE("chains queue up by descending overload, ties to the lower id") {
  Problem p = triangle_problem(2.0, 8.0);
  NetworkState state = initial_placement(p);
  REQUIRE(state.host(0, 0) == 0);
  REQUIRE(state.host(1, 0) == 1);
  ResourceReport res = compute_resources(state, p);
  // chain 0 loads node 0 at 2/6, chain 1 loads node 1 at 8/10
  CHECK(sort_chains(state, res, p) == std::vector<int>{1, 0});

  Problem tie = triangle_problem(3.0, 5.0);  // 3/6 == 5/10
  NetworkState tied = initial_placement(tie);
  ResourceReport tied_res = compute_resources(tied, tie);
  CHECK(chain_overload_prob(tied, 0, tied_res, tie) ==
        doctest::Approx(chain_overload_prob(tied, 1, tied_res, tie)));
  CHECK(sort_chains(tied, tied_res, tie) == std::vector<int>{0, 1});
}

TEST_CASE("successive decisions attribute costs to the chain that causes them") {
  Problem p = triangle_problem();
  NetworkState state = initial_placement(p);
  std::vector<std::pair<int, MigrationAction>> decisions = {
      {0, MigrationAction::move(0, 0, 2)}, {1, MigrationAction::move(1, 0, 2)}};
  SlotOutcome outcome = apply_decisions(state, decisions, p);

  // Chain 0 pays for a cold target: data 2 + 6, fee half of 6.
  CHECK(outcome.costs.ncost.at(0) == doctest::Approx(8.0));
  CHECK(outcome.costs.rcost.at(0) == doctest::Approx(3.0));
  // Chain 1 lands on the instance chain 0 just deployed: warm both ends.
  CHECK(outcome.costs.ncost.at(1) == doctest::Approx(4.0));
  CHECK(outcome.costs.rcost.at(1) == doctest::Approx(0.0));
  CHECK(outcome.migrations == 2);
  CHECK(outcome.costs.total ==
        doctest::Approx(0.5 * outcome.costs.ecost + 0.5 * (5.5 + 2.0)));

  // The whole-slot ledger reads deployment flags from the slot start, so it
  // bills chain 1 for the cold target instead.
  NetworkState fresh = initial_placement(p);
  CostBreakdown whole = compute_slot_costs(fresh, state, p);
  CHECK(whole.ncost.at(1) == doctest::Approx(8.0));
}

TEST_CASE("planning leaves the live network untouched") {
  Problem p = triangle_problem();
  NetworkState real = initial_placement(p);
  std::uint64_t before = real.fingerprint();
  std::vector<Subagent> agents = make_agents(p, quick_config());
  for (Subagent& a : agents) a.set_epsilon(0.0);  // explore: forces real moves
  ResourceReport res = compute_resources(real, p);
  std::vector<Transition> transitions;
  JointStrategy strategy =
      plan_joint(real, agents, sort_chains(real, res, p), p, &transitions);
  CHECK(real.fingerprint() == before);
  CHECK(strategy.planning_fingerprint == before);
  CHECK(transitions.size() == 2);
}

TEST_CASE("executing the plan reproduces the planned rewards exactly") {
  Problem p = triangle_problem();
  NetworkState real = initial_placement(p);
  std::vector<Subagent> agents = make_agents(p, quick_config());
  for (Subagent& a : agents) a.set_epsilon(0.0);
  for (int trial = 0; trial < 10; ++trial) {
    ResourceReport res = compute_resources(real, p);
    std::vector<int> order = sort_chains(real, res, p);
    std::vector<Transition> transitions;
    JointStrategy strategy = plan_joint(real, agents, order, p, &transitions);
    SlotOutcome outcome = apply_joint(real, strategy, p);
    for (size_t k = 0; k < order.size(); ++k)
      CHECK(transitions[k].reward == outcome.costs.reward.at(order[k]));
    advance_slot(real, p);
  }
}

TEST_CASE("a stale plan is refused") {
  Problem p = triangle_problem();
  NetworkState real = initial_placement(p);
  std::vector<Subagent> agents = make_agents(p, quick_config());
  ResourceReport res = compute_resources(real, p);
  JointStrategy strategy =
      plan_joint(real, agents, sort_chains(real, res, p), p, nullptr);
  apply_action(real, MigrationAction::move(0, 0, 2), p);
  CHECK_THROWS_AS(apply_joint(real, strategy, p), Error);
}

TEST_CASE("convergence monitor requires a full quiet window on every series") {
  ConvergenceMonitor monitor(3, 0.25);
  CHECK_FALSE(monitor.converged());
  monitor.record(0, 0.0);
  monitor.record(0, 1.0);
  CHECK_FALSE(monitor.converged());  // window not full
  monitor.record(0, 0.0);
  CHECK(monitor.variance(0) == doctest::Approx(2.0 / 9.0));
  CHECK(monitor.converged());
  monitor.record(0, 5.0);  // [1, 0, 5]
  CHECK_FALSE(monitor.converged());

  ConvergenceMonitor pair(2, 0.01);
  pair.record(0, 1.0);
  pair.record(0, 1.0);
  CHECK(pair.converged());
  pair.record(1, 0.0);  // second series appears with a short history
  CHECK_FALSE(pair.converged());
  pair.record(1, 9.0);
  CHECK_FALSE(pair.converged());  // full but noisy
  pair.record(1, 9.0);
  pair.record(0, 1.0);
  CHECK(pair.converged());

  CHECK_THROWS_AS(monitor.variance(42), Error);
  CHECK_THROWS_AS(ConvergenceMonitor(1, 0.5), Error);
}

TEST_CASE("training settles on staying put when every move is pure overhead") {
  Problem p = stay_put_problem();
  AgentConfig agent_cfg = quick_config();
  agent_cfg.eps_anneal_episodes = 15;
  agent_cfg.eps_end = 1.0;
  MsdfConfig cfg;
  cfg.max_episodes = 80;
  cfg.eval_episodes = 3;
  cfg.monitor_window = 5;
  cfg.variance_threshold = 1e-9;
  MsdfResult result = run_msdf(p, agent_cfg, cfg);

  CHECK(result.converged_episode >= 0);
  REQUIRE(result.eval.size() == 3);
  // By evaluation the policy has nowhere better to go: the last episode is
  // migration-free and repeats the previous one's return exactly.
  CHECK(result.eval.back().migrations == 0);
  CHECK(result.eval[2].chain_return.at(0) == result.eval[1].chain_return.at(0));
  // Stay-put slots carry no migration overhead, so the objective is pure
  // weighted energy: node term 1 plus VM term 0.5, halved.
  CHECK(result.eval.back().total_cost ==
        doctest::Approx(20 * 0.5 * 1.5));
}

TEST_CASE("identical seeds reproduce the whole run bit for bit") {
  auto run_once = [] {
    Problem p = triangle_problem();
    AgentConfig agent_cfg = quick_config();
    MsdfConfig cfg;
    cfg.max_episodes = 8;
    cfg.eval_episodes = 2;
    cfg.monitor_window = 4;
    cfg.variance_threshold = 0.0;
    return run_msdf(p, agent_cfg, cfg);
  };
  MsdfResult a = run_once();
  MsdfResult b = run_once();
  REQUIRE(a.training.size() == b.training.size());
  for (size_t e = 0; e < a.training.size(); ++e) {
    CHECK(a.training[e].total_cost == b.training[e].total_cost);
    CHECK(a.training[e].chain_return == b.training[e].chain_return);
    CHECK(a.training[e].migrations == b.training[e].migrations);
    CHECK(a.training[e].mean_loss == b.training[e].mean_loss);
  }
  CHECK(a.converged_episode == b.converged_episode);
  CHECK(a.final_state.fingerprint() == b.final_state.fingerprint());
  REQUIRE(a.eval.size() == b.eval.size());
  for (size_t e = 0; e < a.eval.size(); ++e)
    CHECK(a.eval[e].total_cost == b.eval[e].total_cost);
}

TEST_CASE("slot callback sees every applied slot in order") {
  Problem p = stay_put_problem();
  AgentConfig agent_cfg = quick_config();
  MsdfConfig cfg;
  cfg.max_episodes = 2;
  cfg.eval_episodes = 1;
  cfg.monitor_window = 10;  // never converges within two episodes
  cfg.variance_threshold = 0.0;
  std::vector<std::tuple<int, int, bool>> seen;
  cfg.slot_callback = [&](int episode, int slot, bool eval, const JointStrategy&,
                          const SlotOutcome&) { seen.emplace_back(episode, slot, eval); };
  run_msdf(p, agent_cfg, cfg);
  REQUIRE(seen.size() == 3 * 20);
  CHECK(seen.front() == std::tuple<int, int, bool>{0, 0, false});
  CHECK(seen[20] == std::tuple<int, int, bool>{1, 20, false});
  CHECK(seen.back() == std::tuple<int, int, bool>{2, 59, true});
  for (size_t i = 1; i < seen.size(); ++i)
    CHECK(std::get<1>(seen[i]) == static_cast<int>(i));
}

TEST_CASE("joint action space is the product of the per-chain spaces") {
  Problem p = triangle_problem();
  CHECK(joint_action_count(p) == 9);  // (1*(3-1)+1)^2
  NetworkState state = initial_placement(p);
  std::set<std::pair<int, int>> seen;
  for (long j = 0; j < 9; ++j) {
    auto decisions = decode_joint_action(state, p, j);
    REQUIRE(decisions.size() == 2);
    CHECK(decisions[0].first == 0);
    CHECK(decisions[1].first == 1);
    seen.emplace(encode_action(state, p, 0, decisions[0].second),
                 encode_action(state, p, 1, decisions[1].second));
  }
  CHECK(seen.size() == 9);
  auto noop = decode_joint_action(state, p, 0);
  CHECK(noop[0].second.is_noop());
  CHECK(noop[1].second.is_noop());
  CHECK_THROWS_AS(decode_joint_action(state, p, 9), Error);
}

TEST_CASE("global observation stacks chain blocks before the shared node block") {
  Problem p = triangle_problem(2.0, 8.0);
  NetworkState state = initial_placement(p);
  ResourceReport res = compute_resources(state, p);
  Eigen::VectorXd global = observe_global(state, res, p);
  Eigen::VectorXd local0 = observe(state, 0, res, p);
  Eigen::VectorXd local1 = observe(state, 1, res, p);
  REQUIRE(global.size() == 1 + 1 + 3);
  CHECK(global[0] == local0[0]);
  CHECK(global[1] == local1[0]);
  for (int i = 0; i < 3; ++i) {
    CHECK(global[2 + i] == local0[1 + i]);
    CHECK(global[2 + i] == local1[1 + i]);
  }
}

TEST_CASE("the single-learner comparator trains on the joint space") {
  Problem p = stay_put_problem();
  AgentConfig agent_cfg = quick_config();
  MsdfConfig cfg;
  cfg.max_episodes = 6;
  cfg.eval_episodes = 1;
  cfg.monitor_window = 3;
  cfg.variance_threshold = 1e9;  // full window alone triggers the stop
  MonolithicResult result = run_monolithic(p, agent_cfg, cfg);
  CHECK(result.converged_episode == 2);
  REQUIRE(result.training.size() == 3);
  CHECK(result.training[0].chain_return.count(-1) == 1);
  CHECK(result.eval.size() == 1);
  CHECK(result.final_state.slot == 4 * 20 - 1);
}
