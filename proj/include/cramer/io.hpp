#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cramer/bellman.hpp"
#include "cramer/mdp.hpp"
#include "cramer/spectral.hpp"
#include "cramer/verify.hpp"

namespace cramer {

/// Raised for unreadable files and schema violations. Validation failures of
/// the loaded model surface as std::invalid_argument from the model itself.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

FiniteMdp mdp_from_json(const nlohmann::json &j);
nlohmann::json mdp_to_json(const FiniteMdp &mdp);
FiniteMdp load_mdp(const std::filesystem::path &path);

/// `spec` is either the keyword "uniform" or a path to a policy JSON file.
Policy load_policy(const std::string &spec, const FiniteMdp &mdp);
Policy policy_from_json(const nlohmann::json &j, const FiniteMdp &mdp);

nlohmann::json distribution_to_json(const AtomicDistribution &dist);
AtomicDistribution distribution_from_json(const nlohmann::json &j);
nlohmann::json grid_to_json(const GridCdf &grid);
GridCdf grid_from_json(const nlohmann::json &j);

nlohmann::json field_to_json(const ReturnField &field);
nlohmann::json field_to_json(const GridField &field);
ReturnField field_from_json(const nlohmann::json &j);
GridField grid_field_from_json(const nlohmann::json &j);

void save_field(const ReturnField &field, const std::filesystem::path &path);
void save_field(const GridField &field, const std::filesystem::path &path);
/// Atomic fields only; a grid field file is a schema mismatch.
ReturnField load_field(const std::filesystem::path &path);
GridField load_grid_field(const std::filesystem::path &path);

void write_trace_csv(std::span<const TraceRow> trace, const std::filesystem::path &path);
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path &path);

nlohmann::json budget_to_json(const SpectralEstimate &estimate);
nlohmann::json reports_to_json(std::span<const CheckReport> reports);

struct ExperimentConfig {
  std::string mdp;
  std::string policy = "uniform";
  std::optional<double> gamma;
  Backend backend = Backend::atomic;
  std::size_t grid_points = 2001;
  double merge_delta = 0.0;
  Reduction reduction = Reduction::cluster;
  double stop_tol = 1e-8;
  std::size_t max_iter = 1000;
  std::vector<double> eps_list = default_eps_list();
  std::uint64_t seed = 1;
  std::string out = "out";

  /// Bellman settings for `mdp`, with the grid spanning its return bound.
  BellmanConfig bellman(const FiniteMdp &mdp) const;
  void validate() const;
};

/// Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const ExperimentConfig &config);
ExperimentConfig load_config(const std::filesystem::path &path);

nlohmann::json read_json(const std::filesystem::path &path);
/// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json &j, const std::filesystem::path &path);

} // namespace cramer
