#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "sfcmig/agent.hpp"
#include "sfcmig/error.hpp"
#include "sfcmig/harness.hpp"
#include "sfcmig/msdf.hpp"
#include "sfcmig/state.hpp"
#include "sfcmig/text.hpp"

using namespace sfcmig;

namespace {

struct Overrides {
  long long seed = -1;
  int episodes = -1;
  int eval_episodes = -1;
  std::string policy;
  std::string out_dir;

  void add_to(CLI::App* cmd, bool with_policy) {
    cmd->add_option("--seed", seed, "Override the run seed");
    cmd->add_option("--episodes", episodes, "Override the training episode cap");
    cmd->add_option("--eval-episodes", eval_episodes, "Override the evaluation episode count");
    cmd->add_option("--out-dir", out_dir, "Write slots.csv/episodes.csv/summary.txt here");
    if (with_policy)
      cmd->add_option("--policy", policy,
                      "Override the policy (msdf|mono|greedy|rm|random|oracle)");
  }

  void apply(Scenario& s) const {
    if (seed >= 0) s.run.seed = static_cast<std::uint64_t>(seed);
    if (episodes >= 0) s.run.episodes = episodes;
    if (eval_episodes >= 0) s.run.eval_episodes = eval_episodes;
    if (!policy.empty()) s.run.policy = policy;
    if (!out_dir.empty()) s.run.out_dir = out_dir;
  }
};

void print_summary_table(const std::vector<MetricsSummary>& rows) {
  std::cout << "policy,eval_return,eval_total_cost,eval_migrations,eval_overload,eval_energy,"
               "eval_penalty,episodes_run,converged_episode\n";
  for (const MetricsSummary& m : rows) {
    std::cout << m.policy << ',' << fmt_double(m.eval_return) << ','
              << fmt_double(m.eval_total_cost) << ',' << fmt_double(m.eval_migrations) << ','
              << fmt_double(m.eval_overload) << ',' << fmt_double(m.eval_energy) << ','
              << fmt_double(m.eval_penalty) << ',' << m.episodes_run << ','
              << m.converged_episode << '\n';
  }
}

int cmd_validate(const std::string& path) {
  Scenario scenario = load_scenario(path);
  Problem problem = build_problem(scenario);
  NetworkState placement = initial_placement(problem);

  const Topology& topo = problem.topology;
  std::cout << "scenario: " << path << "\n"
            << "nodes = " << topo.nodes().size() << " (" << topo.function_nodes().size()
            << " host functions)\n"
            << "links = " << topo.links().size() << "\n"
            << "chains = " << problem.chains.size() << "\n"
            << "flows = " << problem.flows.size() << "\n"
            << "policy = " << scenario.run.policy << "\n"
            << "slots_per_cycle = " << problem.config.slots_per_cycle << "\n";
  for (const ServiceChain& chain : problem.chains) {
    std::cout << "chain " << chain.id << ": length = " << chain.vnf_sequence.size()
              << ", actions = "
              << action_count(static_cast<int>(chain.vnf_sequence.size()),
                              problem.n_function_nodes())
              << "\n";
  }
  try {
    std::cout << "joint actions = " << joint_action_count(problem) << "\n";
  } catch (const Error&) {
    std::cout << "joint actions = too many to enumerate\n";
  }
  std::cout << "initial placement fits (slot 0, " << placement.deployed.size()
            << " instances deployed)\n"
            << "ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Service chain migration simulator"};
  app.require_subcommand(1);

  std::string run_path, sweep_path, compare_path, validate_path;
  std::string axis;
  std::vector<int> values;
  std::vector<std::string> policies;
  Overrides run_over, sweep_over, compare_over;

  CLI::App* run = app.add_subcommand("run", "Play one scenario and print its summary");
  run->add_option("scenario", run_path, "Scenario file")->required();
  run_over.add_to(run, true);

  CLI::App* sweep = app.add_subcommand("sweep", "Replay a scenario along one size axis");
  sweep->add_option("scenario", sweep_path, "Scenario file")->required();
  sweep->add_option("--axis", axis, "n_chains | n_flows | chain_length")->required();
  sweep->add_option("--values", values, "Axis values, e.g. --values 1 2 4")
      ->required()
      ->delimiter(',');
  sweep_over.add_to(sweep, true);

  CLI::App* compare = app.add_subcommand("compare", "Run several policies on one scenario");
  compare->add_option("scenario", compare_path, "Scenario file")->required();
  compare->add_option("--policies", policies, "At least two of msdf|mono|greedy|rm|random|oracle")
      ->required()
      ->delimiter(',');
  compare_over.add_to(compare, false);

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario and describe the problem");
  validate->add_option("scenario", validate_path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      Scenario scenario = load_scenario(run_path);
      run_over.apply(scenario);
      MetricsSummary summary = run_scenario(scenario);
      write_summary(std::cout, summary);
      if (!scenario.run.out_dir.empty())
        std::cout << "outputs written to " << scenario.run.out_dir << "\n";
    } else if (sweep->parsed()) {
      Scenario scenario = load_scenario(sweep_path);
      sweep_over.apply(scenario);
      std::vector<SweepPoint> points = sweep_scenario(scenario, axis, values);
      std::cout << "axis,value,policy,eval_total_cost,eval_migrations,eval_overload,error\n";
      for (const SweepPoint& p : points) {
        std::cout << p.axis << ',' << p.value << ',' << p.summary.policy << ','
                  << fmt_double(p.summary.eval_total_cost) << ','
                  << fmt_double(p.summary.eval_migrations) << ','
                  << fmt_double(p.summary.eval_overload) << ',' << p.error << '\n';
      }
    } else if (compare->parsed()) {
      Scenario scenario = load_scenario(compare_path);
      compare_over.apply(scenario);
      print_summary_table(compare_policies(scenario, policies));
    } else if (validate->parsed()) {
      return cmd_validate(validate_path);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
