#include "cramer/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace cramer {

using nlohmann::json;

namespace {

const json &require(const json &j, const char *key) {
  if (!j.is_object() || !j.contains(key)) {
    throw IoError(std::string("missing key \"") + key + "\"");
  }
  return j.at(key);
}

std::size_t require_count(const json &j, const char *key) {
  const json &v = require(j, key);
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
    throw IoError(std::string("\"") + key + "\" must be a positive integer");
  }
  return v.get<std::size_t>();
}

double as_number(const json &v, const std::string &what) {
  if (!v.is_number()) {
    throw IoError(what + " must be a number");
  }
  return v.get<double>();
}

const json &array_of(const json &v, std::size_t n, const std::string &what) {
  if (!v.is_array() || v.size() != n) {
    throw IoError(what + " must be an array of length " + std::to_string(n));
  }
  return v;
}

std::string index_name(std::size_t s, std::size_t a) {
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

void reject_unknown(const json &j, std::initializer_list<const char *> allowed,
                    const std::string &what) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto &[key, value] : j.items()) {
    if (!keys.contains(key)) {
      throw IoError(what + ": unknown key \"" + key + "\"");
    }
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_output(const std::filesystem::path &path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  return out;
}

} // namespace

json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const json &j, const std::filesystem::path &path) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

AtomicDistribution distribution_from_json(const json &j) {
  if (!j.is_object() || !j.contains("atoms")) {
    throw IoError("distribution must be an object with \"atoms\"");
  }
  reject_unknown(j, {"atoms"}, "distribution");
  const json &atoms = j.at("atoms");
  if (!atoms.is_array() || atoms.empty()) {
    throw IoError("\"atoms\" must be a nonempty array of [location, weight]");
  }
  std::vector<Atom> pairs;
  pairs.reserve(atoms.size());
  for (const json &pair : atoms) {
    if (!pair.is_array() || pair.size() != 2) {
      throw IoError("atom must be [location, weight]");
    }
    pairs.push_back({as_number(pair[0], "atom location"),
                     as_number(pair[1], "atom weight")});
  }
  return make_atomic(pairs);
}

json distribution_to_json(const AtomicDistribution &dist) {
  json atoms = json::array();
  for (const Atom &a : dist.atoms()) {
    atoms.push_back({a.location, a.weight});
  }
  return {{"atoms", atoms}};
}

json grid_to_json(const GridCdf &grid) {
  return {{"grid",
           {{"x_min", grid.x_min()},
            {"step", grid.step()},
            {"values", std::vector<double>(grid.values().begin(), grid.values().end())}}}};
}

GridCdf grid_from_json(const json &j) {
  if (!j.is_object() || !j.contains("grid")) {
    throw IoError("grid entry must be an object with \"grid\"");
  }
  reject_unknown(j, {"grid"}, "grid entry");
  const json &g = j.at("grid");
  reject_unknown(g, {"x_min", "step", "values"}, "grid");
  const json &values = require(g, "values");
  if (!values.is_array()) {
    throw IoError("\"values\" must be an array");
  }
  std::vector<double> v;
  for (const json &x : values) {
    v.push_back(as_number(x, "grid value"));
  }
  return GridCdf::create(as_number(require(g, "x_min"), "x_min"),
                         as_number(require(g, "step"), "step"), std::move(v));
}

namespace {

template <typename Entry, typename ToJson>
json field_json(const BasicField<Entry> &field, ToJson to_json) {
  json rows = json::array();
  for (std::size_t s = 0; s < field.n_states(); ++s) {
    json row = json::array();
    for (std::size_t a = 0; a < field.n_actions(); ++a) {
      row.push_back(to_json(field(s, a)));
    }
    rows.push_back(std::move(row));
  }
  return {{"n_states", field.n_states()},
          {"n_actions", field.n_actions()},
          {"entries", std::move(rows)}};
}

template <typename Entry, typename FromJson>
BasicField<Entry> field_parse(const json &j, FromJson from_json,
                              const char *expected_key, const char *other_key) {
  reject_unknown(j, {"n_states", "n_actions", "entries"}, "field");
  const std::size_t n_states = require_count(j, "n_states");
  const std::size_t n_actions = require_count(j, "n_actions");
  const json &rows = array_of(require(j, "entries"), n_states, "\"entries\"");
  std::vector<Entry> entries;
  entries.reserve(n_states * n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    const json &row = array_of(rows[s], n_actions, "entries[" + std::to_string(s) + "]");
    for (std::size_t a = 0; a < n_actions; ++a) {
      const json &e = row[a];
      if (e.is_object() && e.contains(other_key)) {
        throw IoError("entry " + index_name(s, a) + " holds \"" + other_key +
                      "\" data; expected \"" + expected_key + "\"");
      }
      try {
        entries.push_back(from_json(e));
      } catch (const std::exception &err) {
        throw IoError("entry " + index_name(s, a) + ": " + err.what());
      }
    }
  }
  return BasicField<Entry>(n_states, n_actions, std::move(entries));
}

} // namespace

json field_to_json(const ReturnField &field) {
  return field_json(field, distribution_to_json);
}

json field_to_json(const GridField &field) { return field_json(field, grid_to_json); }

ReturnField field_from_json(const json &j) {
  return field_parse<AtomicDistribution>(j, distribution_from_json, "atoms", "grid");
}

GridField grid_field_from_json(const json &j) {
  return field_parse<GridCdf>(j, grid_from_json, "grid", "atoms");
}

void save_field(const ReturnField &field, const std::filesystem::path &path) {
  write_json(field_to_json(field), path);
}

void save_field(const GridField &field, const std::filesystem::path &path) {
  write_json(field_to_json(field), path);
}

ReturnField load_field(const std::filesystem::path &path) {
  return field_from_json(read_json(path));
}

GridField load_grid_field(const std::filesystem::path &path) {
  return grid_field_from_json(read_json(path));
}

FiniteMdp mdp_from_json(const json &j) {
  reject_unknown(j, {"n_states", "n_actions", "gamma", "transition", "reward", "r_max"},
                 "mdp");
  const std::size_t n_states = require_count(j, "n_states");
  const std::size_t n_actions = require_count(j, "n_actions");
  const double gamma = as_number(require(j, "gamma"), "\"gamma\"");
  const json &transition = array_of(require(j, "transition"), n_states, "\"transition\"");
  const json &reward = array_of(require(j, "reward"), n_states, "\"reward\"");

  Eigen::MatrixXd p(static_cast<Eigen::Index>(n_states * n_actions),
                    static_cast<Eigen::Index>(n_states));
  std::vector<AtomicDistribution> rewards;
  rewards.reserve(n_states * n_actions * n_states);
  for (std::size_t s = 0; s < n_states; ++s) {
    const json &trow = array_of(transition[s], n_actions,
                                "transition[" + std::to_string(s) + "]");
    const json &rrow = array_of(reward[s], n_actions, "reward[" + std::to_string(s) + "]");
    for (std::size_t a = 0; a < n_actions; ++a) {
      const std::string where = index_name(s, a);
      const json &probs = array_of(trow[a], n_states, "transition " + where);
      const json &laws = array_of(rrow[a], n_states, "reward " + where);
      for (std::size_t next = 0; next < n_states; ++next) {
        p(static_cast<Eigen::Index>(s * n_actions + a), static_cast<Eigen::Index>(next)) =
            as_number(probs[next], "transition " + where);
        try {
          rewards.push_back(distribution_from_json({{"atoms", laws[next]}}));
        } catch (const std::exception &e) {
          throw IoError("reward " + where + " -> s'=" + std::to_string(next) + ": " +
                        e.what());
        }
      }
    }
  }
  const double r_max = j.contains("r_max") ? as_number(j.at("r_max"), "\"r_max\"") : -1.0;
  return FiniteMdp::create(n_states, n_actions, gamma, std::move(p), std::move(rewards),
                           r_max);
}

json mdp_to_json(const FiniteMdp &mdp) {
  json transition = json::array();
  json reward = json::array();
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    json trow = json::array();
    json rrow = json::array();
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      json probs = json::array();
      json laws = json::array();
      for (std::size_t next = 0; next < mdp.n_states(); ++next) {
        probs.push_back(mdp.transition(s, a, next));
        laws.push_back(distribution_to_json(mdp.reward(s, a, next)).at("atoms"));
      }
      trow.push_back(std::move(probs));
      rrow.push_back(std::move(laws));
    }
    transition.push_back(std::move(trow));
    reward.push_back(std::move(rrow));
  }
  return {{"n_states", mdp.n_states()}, {"n_actions", mdp.n_actions()},
          {"gamma", mdp.gamma()},       {"r_max", mdp.reward_bound()},
          {"transition", transition},   {"reward", reward}};
}

FiniteMdp load_mdp(const std::filesystem::path &path) {
  try {
    return mdp_from_json(read_json(path));
  } catch (const IoError &e) {
    const std::string msg = e.what();
    if (msg.starts_with(path.string())) {
      throw;
    }
    throw IoError(path.string() + ": " + msg);
  }
}

Policy policy_from_json(const json &j, const FiniteMdp &mdp) {
  reject_unknown(j, {"probabilities"}, "policy");
  const json &rows = array_of(require(j, "probabilities"), mdp.n_states(),
                              "\"probabilities\"");
  Eigen::MatrixXd p(static_cast<Eigen::Index>(mdp.n_states()),
                    static_cast<Eigen::Index>(mdp.n_actions()));
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const json &row = array_of(rows[s], mdp.n_actions(),
                               "probabilities[" + std::to_string(s) + "]");
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
          as_number(row[a], "policy " + index_name(s, a));
    }
  }
  Policy policy = Policy::create(std::move(p));
  check_compatible(mdp, policy);
  return policy;
}

Policy load_policy(const std::string &spec, const FiniteMdp &mdp) {
  if (spec == "uniform") {
    return Policy::uniform(mdp.n_states(), mdp.n_actions());
  }
  return policy_from_json(read_json(spec), mdp);
}

void write_trace_csv(std::span<const TraceRow> trace, const std::filesystem::path &path) {
  std::ofstream out = open_output(path);
  out << "iteration,successive_distance,banach_bound,atom_count_max\n";
  for (const TraceRow &row : trace) {
    out << row.iteration << ',' << format_double(row.successive_distance) << ','
        << format_double(row.banach_bound) << ',' << row.atom_count_max << '\n';
  }
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path &path) {
  std::ofstream out = open_output(path);
  out << "epsilon,reg_distance,cdf_side_distance,gap,monotone\n";
  for (const SweepRow &row : rows) {
    out << format_double(row.epsilon) << ',' << format_double(row.reg_distance) << ','
        << format_double(row.cdf_side_distance) << ',' << format_double(row.gap) << ','
        << (row.monotone ? "true" : "false") << '\n';
  }
}

json budget_to_json(const SpectralEstimate &estimate) {
  const QuadratureBudget &b = estimate.budget;
  return {{"tail_bound", b.tail_bound},
          {"inner_correction", b.inner_correction},
          {"panel_estimate", b.panel_estimate},
          {"tail_correction", b.tail_correction},
          {"inner_uncertainty", b.inner_uncertainty},
          {"squared_budget", b.total()},
          {"distance_budget", estimate.distance_budget},
          {"value", estimate.value}};
}

json reports_to_json(std::span<const CheckReport> reports) {
  json out = json::array();
  for (const CheckReport &r : reports) {
    json entry = {{"check_name", r.check_name}, {"trials", r.trials},
                  {"worst_slack", r.worst_slack}, {"tolerance", r.tolerance},
                  {"passed", r.passed},           {"seed", r.seed},
                  {"runtime", r.runtime}};
    if (!r.detail.empty()) {
      entry["detail"] = r.detail;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

BellmanConfig ExperimentConfig::bellman(const FiniteMdp &model) const {
  BellmanConfig c;
  c.merge_delta = merge_delta;
  c.reduction = reduction;
  c.backend = backend;
  c.stop_tol = stop_tol;
  c.max_iter = max_iter;
  if (backend == Backend::grid) {
    c.grid = GridSpec::spanning(model.return_bound(), grid_points);
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (gamma && !(*gamma > 0.0 && *gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (!(merge_delta >= 0.0)) {
    throw std::invalid_argument("merge_delta must be nonnegative");
  }
  if (!(stop_tol > 0.0)) {
    throw std::invalid_argument("tol must be positive");
  }
  if (max_iter == 0) {
    throw std::invalid_argument("max_iter must be positive");
  }
  if (grid_points < 2) {
    throw std::invalid_argument("grid_points must be at least 2");
  }
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) {
      throw std::invalid_argument("eps_list values must be positive");
    }
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw std::invalid_argument("eps_list must be strictly decreasing");
    }
  }
}

ExperimentConfig config_from_json(const json &j) {
  if (!j.is_object()) {
    throw IoError("config must be a JSON object");
  }
  reject_unknown(j,
                 {"mdp", "policy", "gamma", "backend", "grid_points", "merge_delta",
                  "reduction", "stop_tol", "max_iter", "eps_list", "seed", "out"},
                 "config");
  ExperimentConfig c;
  try {
    if (j.contains("mdp")) c.mdp = j.at("mdp").get<std::string>();
    if (j.contains("policy")) c.policy = j.at("policy").get<std::string>();
    if (j.contains("gamma") && !j.at("gamma").is_null()) c.gamma = j.at("gamma").get<double>();
    if (j.contains("backend")) c.backend = parse_backend(j.at("backend").get<std::string>());
    if (j.contains("grid_points")) c.grid_points = j.at("grid_points").get<std::size_t>();
    if (j.contains("merge_delta")) c.merge_delta = j.at("merge_delta").get<double>();
    if (j.contains("reduction")) c.reduction = parse_reduction(j.at("reduction").get<std::string>());
    if (j.contains("stop_tol")) c.stop_tol = j.at("stop_tol").get<double>();
    if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<std::size_t>();
    if (j.contains("eps_list")) c.eps_list = j.at("eps_list").get<std::vector<double>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
  } catch (const json::exception &e) {
    throw IoError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig &c) {
  return {{"mdp", c.mdp},
          {"policy", c.policy},
          {"gamma", c.gamma ? json(*c.gamma) : json(nullptr)},
          {"backend", to_string(c.backend)},
          {"grid_points", c.grid_points},
          {"merge_delta", c.merge_delta},
          {"reduction", to_string(c.reduction)},
          {"stop_tol", c.stop_tol},
          {"max_iter", c.max_iter},
          {"eps_list", c.eps_list},
          {"seed", c.seed},
          {"out", c.out}};
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  return config_from_json(read_json(path));
}

} // namespace cramer
