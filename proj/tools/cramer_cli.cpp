// Command-line driver: evaluate, verify, sweep, info.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11/CLI11.hpp>

#include "cramer/io.hpp"

namespace fs = std::filesystem;
using namespace cramer;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNotConverged = 2;
constexpr int kVerifyFailed = 3;

#ifndef CRAMER_DATA_DIR
#define CRAMER_DATA_DIR "data"
#endif

struct Flags {
  std::string config;
  std::string mdp;
  std::string policy;
  double gamma = 0.0;
  std::string backend;
  std::size_t grid_points = 0;
  double merge_delta = 0.0;
  std::string reduction;
  double tol = 0.0;
  std::size_t max_iter = 0;
  std::vector<double> eps_list;
  std::uint64_t seed = 0;
  std::string out;
};

// Options shared by every subcommand that runs a computation.
struct SharedOptions {
  CLI::Option *config, *mdp, *policy, *gamma, *backend, *grid_points, *merge_delta,
      *reduction, *tol, *max_iter, *eps_list, *seed, *out;
};

SharedOptions add_shared(CLI::App &cmd, Flags &f) {
  SharedOptions o{};
  o.config = cmd.add_option("--config", f.config, "experiment config JSON")
                 ->check(CLI::ExistingFile);
  o.mdp = cmd.add_option("--mdp", f.mdp, "MDP JSON file");
  o.policy = cmd.add_option("--policy", f.policy, "policy JSON file or \"uniform\"");
  o.gamma = cmd.add_option("--gamma", f.gamma, "discount override");
  o.backend = cmd.add_option("--backend", f.backend, "atomic or grid");
  o.grid_points = cmd.add_option("--grid-points", f.grid_points, "grid backend node count");
  o.merge_delta = cmd.add_option("--merge-delta", f.merge_delta, "atom merge width");
  o.reduction = cmd.add_option("--reduction", f.reduction, "cluster or lattice");
  o.tol = cmd.add_option("--tol", f.tol, "Banach stopping tolerance");
  o.max_iter = cmd.add_option("--max-iter", f.max_iter, "iteration cap");
  o.eps_list = cmd.add_option("--eps-list", f.eps_list, "comma-separated epsilons")
                   ->delimiter(',');
  o.seed = cmd.add_option("--seed", f.seed, "random seed");
  o.out = cmd.add_option("--out", f.out, "output directory");
  return o;
}

ExperimentConfig resolve(const Flags &f, const SharedOptions &o) {
  ExperimentConfig c = o.config->count() ? load_config(f.config) : ExperimentConfig{};
  if (o.mdp->count()) c.mdp = f.mdp;
  if (o.policy->count()) c.policy = f.policy;
  if (o.gamma->count()) c.gamma = f.gamma;
  if (o.backend->count()) c.backend = parse_backend(f.backend);
  if (o.grid_points->count()) c.grid_points = f.grid_points;
  if (o.merge_delta->count()) c.merge_delta = f.merge_delta;
  if (o.reduction->count()) c.reduction = parse_reduction(f.reduction);
  if (o.tol->count()) c.stop_tol = f.tol;
  if (o.max_iter->count()) c.max_iter = f.max_iter;
  if (o.eps_list->count()) c.eps_list = f.eps_list;
  if (o.seed->count()) c.seed = f.seed;
  if (o.out->count()) c.out = f.out;
  c.validate();
  return c;
}

FiniteMdp model_for(const ExperimentConfig &c) {
  if (c.mdp.empty()) {
    throw std::invalid_argument("--mdp is required");
  }
  FiniteMdp mdp = load_mdp(c.mdp);
  return c.gamma ? mdp.with_gamma(*c.gamma) : mdp;
}

template <typename Field>
nlohmann::json summary_json(const Evaluation<Field> &result,
                            const ExperimentConfig &config) {
  std::size_t max_atoms = 0;
  for (const TraceRow &row : result.trace) {
    max_atoms = std::max(max_atoms, row.atom_count_max);
  }
  nlohmann::json means = nlohmann::json::array();
  for (std::size_t s = 0; s < result.field.n_states(); ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t a = 0; a < result.field.n_actions(); ++a) {
      if constexpr (std::is_same_v<Field, ReturnField>) {
        row.push_back(result.field(s, a).mean());
      } else {
        row.push_back(to_atomic(result.field(s, a)).mean());
      }
    }
    means.push_back(std::move(row));
  }
  return {{"iterations", result.trace.size()},
          {"converged", result.converged},
          {"banach_bound", result.banach_bound},
          {"certified_error", result.certified_error},
          {"merge_drift", result.merge_drift},
          {"max_atom_count", max_atoms},
          {"means", means},
          {"config", config_to_json(config)}};
}

template <typename Field> int finish_evaluate(const Evaluation<Field> &result,
                                              const ExperimentConfig &config) {
  const fs::path out(config.out);
  save_field(result.field, out / "field.json");
  write_trace_csv(result.trace, out / "trace.csv");
  write_json(summary_json(result, config), out / "summary.json");
  std::cout << "iterations " << result.trace.size() << ", banach bound "
            << result.banach_bound << (result.converged ? ", converged" : ", NOT converged")
            << "\n";
  return result.converged ? kOk : kNotConverged;
}

int run_evaluate(const ExperimentConfig &config) {
  const FiniteMdp mdp = model_for(config);
  const Policy policy = load_policy(config.policy, mdp);
  const BellmanConfig bellman = config.bellman(mdp);
  if (bellman.backend == Backend::grid) {
    return finish_evaluate(
        evaluate_policy(mdp, policy, bellman, zero_grid_field(mdp, *bellman.grid)), config);
  }
  return finish_evaluate(evaluate_policy(mdp, policy, bellman, zero_field(mdp)), config);
}

std::vector<fs::path> bundled_models() {
  std::vector<fs::path> paths;
  for (const char *name : {"single_state.json", "two_state_bernoulli.json", "three_state.json"}) {
    paths.push_back(fs::path(CRAMER_DATA_DIR) / name);
  }
  return paths;
}

int run_verify(const ExperimentConfig &config, std::size_t trials, std::size_t mc_samples,
               const std::vector<std::string> &overrides) {
  std::map<std::string, double> tolerance_overrides;
  for (const std::string &item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--override-tolerance expects NAME=VALUE, got " + item);
    }
    tolerance_overrides[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  std::vector<fs::path> models;
  if (config.mdp.empty()) {
    models = bundled_models();
  } else {
    models.emplace_back(config.mdp);
  }
  SuiteOptions options;
  options.trials = trials;
  options.seed = config.seed;
  options.mc_samples = mc_samples;
  if (config.merge_delta > 0.0) {
    options.reference_merge_delta = config.merge_delta;
    options.reference_reduction = config.reduction;
  }

  std::vector<CheckReport> reports;
  for (const fs::path &path : models) {
    FiniteMdp mdp = load_mdp(path);
    if (config.gamma) {
      mdp = mdp.with_gamma(*config.gamma);
    }
    const Policy policy = load_policy(config.policy, mdp);
    for (CheckReport &r :
         run_default_suite(path.stem().string(), mdp, policy, options)) {
      reports.push_back(std::move(r));
    }
  }
  for (const auto &[name, tol] : tolerance_overrides) {
    bool found = false;
    for (CheckReport &r : reports) {
      if (r.check_name == name) {
        r = with_tolerance(r, tol);
        found = true;
      }
    }
    if (!found) {
      throw std::invalid_argument("--override-tolerance: no check named " + name);
    }
  }
  write_json(reports_to_json(reports), fs::path(config.out) / "report.json");
  for (const CheckReport &r : reports) {
    std::printf("%s %-55s slack %.3e tol %.3e\n", r.passed ? "PASS" : "FAIL",
                r.check_name.c_str(), r.worst_slack, r.tolerance);
  }
  return all_passed(reports) ? kOk : kVerifyFailed;
}

// delta:X | bernoulli:P[:LOW:HIGH] | path to a {"atoms": ...} JSON file.
AtomicDistribution parse_distribution(const std::string &spec) {
  const auto fields = [&spec] {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      const auto colon = spec.find(':', start);
      parts.push_back(spec.substr(start, colon - start));
      if (colon == std::string::npos) {
        return parts;
      }
      start = colon + 1;
    }
  }();
  if (fields[0] == "delta" && fields.size() == 2) {
    return point_mass(std::stod(fields[1]));
  }
  if (fields[0] == "bernoulli" && (fields.size() == 2 || fields.size() == 4)) {
    const double p = std::stod(fields[1]);
    return fields.size() == 2 ? bernoulli(p)
                              : bernoulli(p, std::stod(fields[2]), std::stod(fields[3]));
  }
  if (fs::exists(spec)) {
    return distribution_from_json(read_json(spec));
  }
  throw std::invalid_argument("unrecognised distribution \"" + spec + "\"");
}

int run_sweep(const ExperimentConfig &config, const std::string &p1_spec,
              const std::string &p2_spec, const std::string &field1,
              const std::string &field2) {
  const fs::path out(config.out);
  if (!field1.empty() || !field2.empty()) {
    if (field1.empty() || field2.empty()) {
      throw std::invalid_argument("--field1 and --field2 go together");
    }
    const ReturnField f1 = load_field(field1);
    const ReturnField f2 = load_field(field2);
    if (!f1.same_shape(f2)) {
      throw std::invalid_argument("sweep: fields have different shapes");
    }
    bool monotone = true;
    for (std::size_t s = 0; s < f1.n_states(); ++s) {
      for (std::size_t a = 0; a < f1.n_actions(); ++a) {
        const auto rows = eps_sweep(f1(s, a), f2(s, a), config.eps_list);
        for (const SweepRow &r : rows) monotone = monotone && r.monotone;
        write_sweep_csv(rows, out / ("sweep_s" + std::to_string(s) + "_a" +
                                     std::to_string(a) + ".csv"));
      }
    }
    std::cout << (monotone ? "monotone" : "NOT monotone") << "\n";
    return kOk;
  }
  const AtomicDistribution p1 = parse_distribution(p1_spec);
  const AtomicDistribution p2 = parse_distribution(p2_spec);
  const auto rows = eps_sweep(p1, p2, config.eps_list);
  write_sweep_csv(rows, out / "sweep.csv");
  write_json(budget_to_json(cramer_via_spectrum(p1, p2)), out / "budget.json");
  for (const SweepRow &r : rows) {
    std::printf("eps %.1e  reg %.12f  gap %.3e%s\n", r.epsilon, r.reg_distance, r.gap,
                r.monotone ? "" : "  (not monotone)");
  }
  return kOk;
}

int run_info(const ExperimentConfig &config) {
  std::cout << "cramer: distributional policy evaluation under the Cramér metric\n"
            << "bundled models: " << CRAMER_DATA_DIR << "\n";
  if (config.mdp.empty()) {
    return kOk;
  }
  const FiniteMdp mdp = model_for(config);
  const Policy policy = load_policy(config.policy, mdp);
  const Interval bound = mdp.return_bound();
  std::cout << "states " << mdp.n_states() << ", actions " << mdp.n_actions()
            << ", gamma " << mdp.gamma() << ", reward bound " << mdp.reward_bound()
            << "\nreturn support [" << bound.lo << ", " << bound.hi << "]"
            << "\nrollout horizon " << rollout_horizon(mdp) << "\nmean returns Q(s, a):\n"
            << classical_q_values(mdp, policy) << "\n";
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Distributional policy evaluation and spectral checks under the Cramér metric"};
  app.require_subcommand(1, 1);

  Flags eval_flags, verify_flags, sweep_flags, info_flags;
  CLI::App *evaluate = app.add_subcommand("evaluate", "iterate the Bellman operator to its fixed point");
  const SharedOptions eval_opts = add_shared(*evaluate, eval_flags);

  CLI::App *verify = app.add_subcommand("verify", "run the certification suite");
  const SharedOptions verify_opts = add_shared(*verify, verify_flags);
  std::size_t trials = 200;
  std::size_t mc_samples = 100000;
  std::vector<std::string> overrides;
  verify->add_option("--trials", trials, "random trials per check");
  verify->add_option("--mc-samples", mc_samples, "Monte Carlo rollouts per (s, a)");
  verify->add_option("--override-tolerance", overrides, "NAME=VALUE, replaces a tolerance");

  CLI::App *sweep = app.add_subcommand("sweep", "regularised distance along an epsilon list");
  const SharedOptions sweep_opts = add_shared(*sweep, sweep_flags);
  std::string p1 = "delta:0", p2 = "delta:1", field1, field2;
  sweep->add_option("--p1", p1, "first law: delta:X, bernoulli:P[:LOW:HIGH] or JSON path");
  sweep->add_option("--p2", p2, "second law");
  sweep->add_option("--field1", field1, "first field JSON (entrywise sweep)");
  sweep->add_option("--field2", field2, "second field JSON");

  CLI::App *info = app.add_subcommand("info", "describe a model");
  const SharedOptions info_opts = add_shared(*info, info_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (evaluate->parsed()) {
      return run_evaluate(resolve(eval_flags, eval_opts));
    }
    if (verify->parsed()) {
      return run_verify(resolve(verify_flags, verify_opts), trials, mc_samples, overrides);
    }
    if (sweep->parsed()) {
      return run_sweep(resolve(sweep_flags, sweep_opts), p1, p2, field1, field2);
    }
    return run_info(resolve(info_flags, info_opts));
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
