#include "sfcmig/harness.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sfcmig/baselines.hpp"
#include "sfcmig/cost.hpp"
#include "sfcmig/error.hpp"
#include "sfcmig/rng.hpp"
#include "sfcmig/state.hpp"
#include "sfcmig/text.hpp"

namespace sfcmig {

namespace {

const std::set<std::string>& known_policies() {
  static const std::set<std::string> policies = {"msdf", "mono", "greedy", "rm", "random", "oracle"};
  return policies;
}

void check_policy(const std::string& policy) {
  if (!known_policies().count(policy))
    throw Error("harness", "unknown policy '" + policy + "'");
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error("harness", where + ": expected true or false, got '" + value + "'");
}

std::uint64_t parse_seed(const std::string& value, const std::string& where) {
  long long v = parse_long(value, where, "harness");
  if (v < 0) throw Error("harness", where + ": seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::vector<int> parse_int_list(const std::string& value, const std::string& where) {
  std::vector<int> out;
  if (trim(value).empty()) return out;
  for (const std::string& piece : split(value, ','))
    out.push_back(parse_int(trim(piece), where, "harness"));
  return out;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || path.front() == '/' || base_dir.empty()) return path;
  return base_dir + "/" + path;
}

}  // namespace

int ChainSpec::length_of(int chain_index) const {
  if (lengths.empty()) throw Error("harness", "chain lengths are missing");
  if (lengths.size() == 1) return lengths.front();
  if (chain_index < 0 || static_cast<size_t>(chain_index) >= lengths.size())
    throw Error("harness", "chain index has no configured length");
  return lengths[static_cast<size_t>(chain_index)];
}

Scenario parse_scenario(std::istream& in, const std::string& base_dir) {
  Scenario s;
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = "scenario line " + std::to_string(line_no);

    if (line.front() == '[') {
      if (line.back() != ']') throw Error("harness", where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known = {"files", "chains",     "traffic",
                                                  "experiment", "agent", "run"};
      if (!known.count(section))
        throw Error("harness", where + ": unknown section [" + section + "]");
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos) throw Error("harness", where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw Error("harness", where + ": entry outside any section");

    if (section == "files") {
      if (key == "topology")
        s.topology_file = resolve_path(base_dir, value);
      else if (key == "catalog")
        s.catalog_file = resolve_path(base_dir, value);
      else
        throw Error("harness", where + ": unknown key '" + key + "' in [files]");
    } else if (section == "chains") {
      if (key == "count")
        s.chains.count = parse_int(value, where, "harness");
      else if (key == "length")
        s.chains.lengths = {parse_int(value, where, "harness")};
      else if (key == "lengths")
        s.chains.lengths = parse_int_list(value, where);
      else if (key == "flows_per_chain")
        s.chains.flows_per_chain = parse_int(value, where, "harness");
      else if (key == "max_delay")
        s.chains.max_delay = parse_double(value, where, "harness");
      else
        throw Error("harness", where + ": unknown key '" + key + "' in [chains]");
    } else if (section == "traffic") {
      if (key == "profile")
        s.traffic.profile = value;
      else if (key == "slots")
        s.traffic.slots = parse_int(value, where, "harness");
      else if (key == "base")
        s.traffic.base = parse_double(value, where, "harness");
      else if (key == "amplitude")
        s.traffic.amplitude = parse_double(value, where, "harness");
      else if (key == "period")
        s.traffic.period = parse_double(value, where, "harness");
      else if (key == "trace")
        s.traffic.trace_path = resolve_path(base_dir, value);
      else
        throw Error("harness", where + ": unknown key '" + key + "' in [traffic]");
    } else if (section == "experiment") {
      if (key == "alpha_c")
        s.experiment.alpha_c = parse_double(value, where, "harness");
      else if (key == "beta_c")
        s.experiment.beta_c = parse_double(value, where, "harness");
      else if (key == "gamma_c")
        s.experiment.gamma_c = parse_double(value, where, "harness");
      else if (key == "beta_n")
        s.experiment.beta_n = parse_double(value, where, "harness");
      else if (key == "beta_r")
        s.experiment.beta_r = parse_double(value, where, "harness");
      else if (key == "rho")
        s.experiment.rho = parse_double(value, where, "harness");
      else if (key == "packet_len")
        s.experiment.packet_len = parse_double(value, where, "harness");
      else if (key == "slots_per_cycle")
        s.experiment.slots_per_cycle = parse_int(value, where, "harness");
      else if (key == "ecost_max")
        s.experiment.ecost_max = parse_double(value, where, "harness");
      else
        throw Error("harness", where + ": unknown key '" + key + "' in [experiment]");
    } else if (section == "agent") {
      if (key == "gamma")
        s.agent.gamma = parse_double(value, where, "harness");
      else if (key == "eps_start")
        s.agent.eps_start = parse_double(value, where, "harness");
      else if (key == "eps_end")
        s.agent.eps_end = parse_double(value, where, "harness");
      else if (key == "eps_anneal_episodes")
        s.agent.eps_anneal_episodes = parse_int(value, where, "harness");
      else if (key == "learning_rate")
        s.agent.learning_rate = parse_double(value, where, "harness");
      else if (key == "batch_size")
        s.agent.batch_size = parse_int(value, where, "harness");
      else if (key == "buffer_capacity")
        s.agent.buffer_capacity = parse_int(value, where, "harness");
      else if (key == "target_update_period")
        s.agent.target_update_period = parse_int(value, where, "harness");
      else if (key == "tau")
        s.agent.tau = parse_double(value, where, "harness");
      else if (key == "hidden")
        s.agent.hidden = parse_int_list(value, where);
      else if (key == "train_steps_per_slot")
        s.agent.train_steps_per_slot = parse_int(value, where, "harness");
      else
        throw Error("harness", where + ": unknown key '" + key + "' in [agent]");
    } else if (section == "run") {
      if (key == "policy") {
        check_policy(value);
        s.run.policy = value;
      } else if (key == "episodes")
        s.run.episodes = parse_int(value, where, "harness");
      else if (key == "eval_episodes")
        s.run.eval_episodes = parse_int(value, where, "harness");
      else if (key == "seed")
        s.run.seed = parse_seed(value, where);
      else if (key == "out_dir")
        s.run.out_dir = resolve_path(base_dir, value);
      else if (key == "function_nodes")
        s.run.function_nodes = parse_int(value, where, "harness");
      else if (key == "monitor_window")
        s.run.monitor_window = parse_int(value, where, "harness");
      else if (key == "variance_threshold")
        s.run.variance_threshold = parse_double(value, where, "harness");
      else if (key == "resort_each_slot")
        s.run.resort_each_slot = parse_bool(value, where);
      else if (key == "oracle_cap")
        s.run.oracle_cap = static_cast<long>(parse_long(value, where, "harness"));
      else if (key == "oracle_penalty")
        s.run.oracle_penalty = parse_bool(value, where);
      else
        throw Error("harness", where + ": unknown key '" + key + "' in [run]");
    }
  }
  if (s.topology_file.empty()) throw Error("harness", "scenario is missing [files] topology");
  if (s.catalog_file.empty()) throw Error("harness", "scenario is missing [files] catalog");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("harness", "cannot open scenario file '" + path + "'");
  return parse_scenario(in, std::filesystem::path(path).parent_path().string());
}

Problem build_problem(const Scenario& scenario) {
  Problem p;
  p.topology = load_topology(scenario.topology_file);
  if (scenario.run.function_nodes > 0)
    p.topology = select_function_nodes_by_degree(p.topology, scenario.run.function_nodes);
  p.catalog = load_vnf_catalog(scenario.catalog_file);
  if (p.catalog.empty()) throw Error("harness", "catalog holds no VNF types");

  if (scenario.chains.count <= 0) throw Error("harness", "chain count must be positive");
  if (scenario.chains.lengths.size() != 1 &&
      scenario.chains.lengths.size() != static_cast<size_t>(scenario.chains.count))
    throw Error("harness", "need one chain length, or one per chain");
  if (scenario.chains.flows_per_chain <= 0)
    throw Error("harness", "flows per chain must be positive");

  const int types = static_cast<int>(p.catalog.size());
  for (int q = 0; q < scenario.chains.count; ++q) {
    ServiceChain chain;
    chain.id = q;
    chain.service_type = "svc" + std::to_string(q);
    int length = scenario.chains.length_of(q);
    if (length <= 0) throw Error("harness", "chain lengths must be positive");
    for (int j = 0; j < length; ++j)
      chain.vnf_sequence.push_back(p.catalog[static_cast<size_t>((q + j) % types)].id);
    chain.max_delay = scenario.chains.max_delay;
    p.chains.push_back(std::move(chain));
  }

  TrafficSpec traffic = scenario.traffic;
  traffic.n_flows = scenario.chains.count * scenario.chains.flows_per_chain;
  traffic.n_services = scenario.chains.count;
  p.flows = generate_traffic(p.topology, traffic, derive_seed(scenario.run.seed, "traffic"));
  assign_flows_to_chains(p.flows, p.chains);

  p.config = scenario.experiment;
  p.config.seed = scenario.run.seed;
  p.validate();
  return p;
}

namespace {

std::string action_text(const MigrationAction& action) {
  if (action.is_noop()) return "-";
  return std::to_string(action.vnf_index) + ":" + std::to_string(action.target);
}

// Open CSV sinks for a run directory; rows go nowhere when disabled.
struct OutputSinks {
  std::ofstream slots;
  std::ofstream episodes;
  bool enabled = false;

  void open(const std::string& dir) {
    std::filesystem::create_directories(dir);
    slots.open(dir + "/slots.csv");
    episodes.open(dir + "/episodes.csv");
    if (!slots || !episodes)
      throw Error("harness", "cannot write run outputs under '" + dir + "'");
    slots << "episode,slot,chain,action,reward,ecost,mcost,penalty,migrated\n";
    episodes << "episode,phase,epsilon,total_return,total_cost,migrations,mean_overload,mean_loss\n";
    enabled = true;
  }

  void slot_rows(int episode, int slot,
                 const std::vector<std::pair<int, MigrationAction>>& actions,
                 const SlotOutcome& outcome) {
    if (!enabled) return;
    for (const auto& [chain_id, action] : actions) {
      slots << episode << ',' << slot << ',' << chain_id << ',' << action_text(action) << ','
            << fmt_double(outcome.costs.reward.at(chain_id)) << ','
            << fmt_double(outcome.costs.ecost) << ','
            << fmt_double(outcome.costs.mcost.at(chain_id)) << ','
            << fmt_double(outcome.costs.penalty) << ',' << (action.is_noop() ? 0 : 1) << '\n';
    }
  }

  void episode_row(const EpisodeStats& stats, const char* phase) {
    if (!enabled) return;
    double total_return = 0.0;
    for (const auto& [chain_id, value] : stats.chain_return) total_return += value;
    episodes << stats.episode << ',' << phase << ',' << fmt_double(stats.epsilon) << ','
             << fmt_double(total_return) << ',' << fmt_double(stats.total_cost) << ','
             << stats.migrations << ',' << fmt_double(stats.mean_overload) << ','
             << fmt_double(stats.mean_loss) << '\n';
  }
};

double total_return_of(const EpisodeStats& stats) {
  double total = 0.0;
  for (const auto& [chain_id, value] : stats.chain_return) total += value;
  return total;
}

void fold_eval_episodes(MetricsSummary& summary, const std::vector<EpisodeStats>& eval) {
  if (eval.empty()) return;
  for (const EpisodeStats& stats : eval) {
    summary.eval_return += total_return_of(stats);
    summary.eval_total_cost += stats.total_cost;
    summary.eval_migrations += stats.migrations;
    summary.eval_overload += stats.mean_overload;
  }
  double n = static_cast<double>(eval.size());
  summary.eval_return /= n;
  summary.eval_total_cost /= n;
  summary.eval_migrations /= n;
  summary.eval_overload /= n;
}

MetricsSummary run_learning(const Scenario& scenario, const Problem& problem,
                            OutputSinks& sinks) {
  MsdfConfig cfg;
  cfg.max_episodes = scenario.run.episodes;
  cfg.eval_episodes = scenario.run.eval_episodes;
  cfg.monitor_window = scenario.run.monitor_window;
  cfg.variance_threshold = scenario.run.variance_threshold;
  cfg.resort_each_slot = scenario.run.resort_each_slot;

  double ecost_sum = 0.0, penalty_sum = 0.0;
  long eval_slots = 0;
  cfg.slot_callback = [&](int episode, int slot, bool eval, const JointStrategy& strategy,
                          const SlotOutcome& outcome) {
    if (eval) {
      ecost_sum += outcome.costs.ecost;
      penalty_sum += outcome.costs.penalty;
      ++eval_slots;
    }
    sinks.slot_rows(episode, slot, strategy.actions, outcome);
  };

  MetricsSummary summary;
  summary.policy = scenario.run.policy;
  std::vector<EpisodeStats> training, eval;
  if (scenario.run.policy == "mono") {
    MonolithicResult result = run_monolithic(problem, scenario.agent, cfg);
    training = std::move(result.training);
    eval = std::move(result.eval);
    summary.converged_episode = result.converged_episode;
  } else {
    MsdfResult result = run_msdf(problem, scenario.agent, cfg);
    training = std::move(result.training);
    eval = std::move(result.eval);
    summary.converged_episode = result.converged_episode;
  }
  summary.episodes_run = static_cast<int>(training.size());
  fold_eval_episodes(summary, eval);
  if (eval_slots > 0) {
    summary.eval_energy = ecost_sum / static_cast<double>(eval_slots);
    summary.eval_penalty = penalty_sum / static_cast<double>(eval_slots);
  }
  for (const EpisodeStats& stats : training) sinks.episode_row(stats, "train");
  for (const EpisodeStats& stats : eval) sinks.episode_row(stats, "eval");
  return summary;
}

MetricsSummary run_heuristic(const Scenario& scenario, const Problem& problem,
                             OutputSinks& sinks) {
  const std::string& policy = scenario.run.policy;
  NetworkState state = initial_placement(problem);
  Rng rng(derive_seed(scenario.run.seed, "random-policy"));
  const int slots = problem.config.slots_per_cycle;
  const int episodes = std::max(1, scenario.run.eval_episodes);

  MetricsSummary summary;
  summary.policy = policy;
  summary.episodes_run = episodes;
  std::vector<EpisodeStats> eval;
  double ecost_sum = 0.0, penalty_sum = 0.0;
  bool first_slot = true;
  for (int e = 0; e < episodes; ++e) {
    EpisodeStats stats;
    stats.episode = e;
    for (int t = 0; t < slots; ++t) {
      if (first_slot)
        first_slot = false;
      else
        advance_slot(state, problem);

      PolicyDecision decision;
      if (policy == "greedy")
        decision = greedy_step(state, problem);
      else if (policy == "rm")
        decision = rm_step(state, problem);
      else if (policy == "random")
        decision = random_step(state, problem, rng);
      else if (policy == "oracle")
        decision = oracle_step(state, problem, scenario.run.oracle_cap,
                               scenario.run.oracle_penalty)
                       .decision;
      else
        throw Error("harness", "policy '" + policy + "' has no step rule");

      SlotOutcome outcome = apply_decisions(state, decision.actions, problem);
      for (const auto& [chain_id, value] : outcome.costs.reward)
        stats.chain_return[chain_id] += value;
      stats.total_cost += outcome.costs.total;
      stats.migrations += outcome.migrations;
      stats.mean_overload += outcome.overload / slots;
      ecost_sum += outcome.costs.ecost;
      penalty_sum += outcome.costs.penalty;
      sinks.slot_rows(e, state.slot, decision.actions, outcome);
    }
    sinks.episode_row(stats, "eval");
    eval.push_back(std::move(stats));
  }
  fold_eval_episodes(summary, eval);
  double total_slots = static_cast<double>(episodes) * slots;
  summary.eval_energy = ecost_sum / total_slots;
  summary.eval_penalty = penalty_sum / total_slots;
  return summary;
}

}  // namespace

void write_summary(std::ostream& out, const MetricsSummary& summary) {
  out << "policy = " << summary.policy << "\n"
      << "episodes_run = " << summary.episodes_run << "\n"
      << "converged_episode = " << summary.converged_episode << "\n"
      << "eval_return = " << fmt_double(summary.eval_return) << "\n"
      << "eval_total_cost = " << fmt_double(summary.eval_total_cost) << "\n"
      << "eval_migrations = " << fmt_double(summary.eval_migrations) << "\n"
      << "eval_overload = " << fmt_double(summary.eval_overload) << "\n"
      << "eval_energy = " << fmt_double(summary.eval_energy) << "\n"
      << "eval_penalty = " << fmt_double(summary.eval_penalty) << "\n";
}

MetricsSummary run_scenario(const Scenario& scenario) {
  check_policy(scenario.run.policy);
  Problem problem = build_problem(scenario);
  OutputSinks sinks;
  if (!scenario.run.out_dir.empty()) sinks.open(scenario.run.out_dir);

  MetricsSummary summary;
  if (scenario.run.policy == "msdf" || scenario.run.policy == "mono")
    summary = run_learning(scenario, problem, sinks);
  else
    summary = run_heuristic(scenario, problem, sinks);

  if (sinks.enabled) {
    std::ofstream out(scenario.run.out_dir + "/summary.txt");
    if (!out) throw Error("harness", "cannot write summary.txt");
    write_summary(out, summary);
  }
  return summary;
}

std::vector<MetricsSummary> compare_policies(const Scenario& scenario,
                                             const std::vector<std::string>& policies) {
  if (policies.size() < 2)
    throw Error("harness", "comparison needs at least two policies");
  for (const std::string& policy : policies) check_policy(policy);

  std::vector<MetricsSummary> results;
  for (const std::string& policy : policies) {
    Scenario variant = scenario;
    variant.run.policy = policy;
    variant.run.out_dir.clear();
    results.push_back(run_scenario(variant));
  }

  if (!scenario.run.out_dir.empty()) {
    std::filesystem::create_directories(scenario.run.out_dir);
    std::ofstream out(scenario.run.out_dir + "/compare.csv");
    if (!out) throw Error("harness", "cannot write compare.csv");
    out << "policy,eval_return,eval_total_cost,eval_migrations,eval_overload,eval_energy,"
           "eval_penalty,episodes_run,converged_episode\n";
    for (const MetricsSummary& m : results) {
      out << m.policy << ',' << fmt_double(m.eval_return) << ',' << fmt_double(m.eval_total_cost)
          << ',' << fmt_double(m.eval_migrations) << ',' << fmt_double(m.eval_overload) << ','
          << fmt_double(m.eval_energy) << ',' << fmt_double(m.eval_penalty) << ','
          << m.episodes_run << ',' << m.converged_episode << '\n';
    }
  }
  return results;
}

std::vector<SweepPoint> sweep_scenario(const Scenario& scenario, const std::string& axis,
                                       const std::vector<int>& values) {
  if (axis != "n_chains" && axis != "n_flows" && axis != "chain_length")
    throw Error("harness", "unknown sweep axis '" + axis + "'");
  if (values.empty()) throw Error("harness", "sweep needs at least one value");

  std::vector<SweepPoint> points;
  for (int value : values) {
    SweepPoint point;
    point.axis = axis;
    point.value = value;
    Scenario variant = scenario;
    variant.run.out_dir.clear();
    if (axis == "n_chains") {
      variant.chains.count = value;
      variant.chains.lengths = {scenario.chains.lengths.front()};
    } else if (axis == "n_flows") {
      variant.chains.flows_per_chain = value;
    } else {
      variant.chains.lengths = {value};
    }
    try {
      point.summary = run_scenario(variant);
    } catch (const Error& e) {
      point.error = std::string(e.what());
    }
    points.push_back(std::move(point));
  }

  if (!scenario.run.out_dir.empty()) {
    std::filesystem::create_directories(scenario.run.out_dir);
    std::ofstream out(scenario.run.out_dir + "/sweep.csv");
    if (!out) throw Error("harness", "cannot write sweep.csv");
    out << "axis,value,policy,eval_return,eval_total_cost,eval_migrations,eval_overload,"
           "eval_energy,eval_penalty,error\n";
    for (const SweepPoint& p : points) {
      out << p.axis << ',' << p.value << ',' << p.summary.policy << ','
          << fmt_double(p.summary.eval_return) << ',' << fmt_double(p.summary.eval_total_cost)
          << ',' << fmt_double(p.summary.eval_migrations) << ','
          << fmt_double(p.summary.eval_overload) << ',' << fmt_double(p.summary.eval_energy)
          << ',' << fmt_double(p.summary.eval_penalty) << ',' << p.error << '\n';
    }
  }
  return points;
}

}  // namespace sfcmig
