#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sfcmig/agent.hpp"
#include "sfcmig/model.hpp"
#include "sfcmig/msdf.hpp"

namespace sfcmig {

// How the scenario's chains are cut from the catalog: chain q runs VNF types
// (q + j) mod |catalog| for j = 0..length-1, under service type "svc<q>".
struct ChainSpec {
  int count = 1;
  std::vector<int> lengths = {1};  // one entry for all chains, or one per chain
  int flows_per_chain = 1;
  double max_delay = 100.0;

  int length_of(int chain_index) const;
};

struct RunSpec {
  std::string policy = "msdf";  // msdf | mono | greedy | rm | random | oracle
  int episodes = 300;
  int eval_episodes = 5;
  std::uint64_t seed = 1;
  std::string out_dir;      // empty: no files are written
  int function_nodes = 0;   // >0: re-flag the top-k nodes by degree
  int monitor_window = 50;
  double variance_threshold = 1.0;
  bool resort_each_slot = true;
  long oracle_cap = 1000000;
  bool oracle_penalty = true;
};

struct Scenario {
  std::string topology_file;
  std::string catalog_file;
  ChainSpec chains;
  TrafficSpec traffic;
  ExperimentConfig experiment;
  AgentConfig agent;
  RunSpec run;
};

// INI-style scenario text; `base_dir` resolves the file paths.
Scenario parse_scenario(std::istream& in, const std::string& base_dir);
Scenario load_scenario(const std::string& path);

// Materializes the scenario: topology, catalog, chains, generated traffic.
Problem build_problem(const Scenario& scenario);

struct MetricsSummary {
  std::string policy;
  int episodes_run = 0;        // training episodes (RL) or played episodes
  int converged_episode = -1;  // RL only; -1 when the cap was hit
  // Means over the evaluation episodes.
  double eval_return = 0.0;
  double eval_total_cost = 0.0;
  double eval_migrations = 0.0;
  double eval_overload = 0.0;
  // Means over the evaluation slots.
  double eval_energy = 0.0;
  double eval_penalty = 0.0;
};

// Plays the scenario's policy. With run.out_dir set, writes slots.csv,
// episodes.csv, and summary.txt there.
MetricsSummary run_scenario(const Scenario& scenario);

// Same scenario under several policies, identical seed and traffic. Needs at
// least two. Writes compare.csv into out_dir when set.
std::vector<MetricsSummary> compare_policies(const Scenario& scenario,
                                             const std::vector<std::string>& policies);

struct SweepPoint {
  std::string axis;
  int value = 0;
  MetricsSummary summary;
  std::string error;  // non-empty: this point failed and was skipped
};

// Re-runs the scenario along one size axis: n_chains, n_flows (flows per
// chain), or chain_length. Failures are recorded per point, not fatal.
// Writes sweep.csv into out_dir when set.
std::vector<SweepPoint> sweep_scenario(const Scenario& scenario, const std::string& axis,
                                       const std::vector<int>& values);

void write_summary(std::ostream& out, const MetricsSummary& summary);

}  // namespace sfcmig
