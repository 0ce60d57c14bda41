#pragma once

#include "obsadj/adjustments.hpp"
#include "obsadj/common.hpp"
#include "obsadj/estimator.hpp"
#include "obsadj/inference.hpp"
#include "obsadj/loss.hpp"
#include "obsadj/model.hpp"
#include "obsadj/penalty.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace obsadj {

struct Dims {
  Index n = 0;
  Index p = 0;
};

enum class CovarianceScale { fixed, inverse_p, inverse_n };

struct CovarianceRecipe {
  std::string kind = "identity";  // identity | ar1
  CovarianceScale scale_kind = CovarianceScale::fixed;
  double scale = 1.0;
  double rho = 0.0;
  Covariance build(const Dims& d) const;
};

struct IndexRecipe {
  std::string kind = "equal-sparse";  // equal-sparse | equispaced-sparse | dense
  std::optional<Index> nonzeros;
  std::optional<double> fraction;
  double lo = 0.5, hi = 4.0;
  Vec build(Index p) const;
  Index count(Index p) const;
};

enum class PivotKind { none, ls, ridge, general };

struct OutputSpec {
  PivotKind pivot = PivotKind::none;
  OmegaSource omega = OmegaSource::exact;
  bool ci = false;
  double alpha = 0.05;
  bool qq = false;
};

/// Parsed, validated experiment description.
struct ExperimentConfig {
  std::string name;
  std::string description;
  std::uint64_t seed = 0;
  int reps = 1;
  std::vector<Dims> dims;
  CovarianceRecipe covariance;
  IndexRecipe index;
  std::vector<LinkSpec> links;
  std::string loss = "square";  // a loss name or "match-link"
  Penalty penalty;              // lambda filled per arm
  std::vector<double> lambdas;
  SolverConfig solver;
  std::optional<Variant> variant;
  OutputSpec outputs;
  nlohmann::json source;  // effective JSON after the --full patch

  Loss loss_for(const LinkSpec& link) const;
  Penalty penalty_for(double lambda) const;
};

// Parses a config; `full` applies the "full" object as a merge patch first.
ExperimentConfig parse_config(const std::string& json_text, bool full = false);
ExperimentConfig load_preset(const std::string& name, bool full = false);
std::vector<std::string> preset_names();
// (name, JSON text) of every built-in preset.
const std::vector<std::pair<std::string, std::string>>& builtin_presets();

struct RunOptions {
  int workers = 0;  // 0: OBSADJ_WORKERS or hardware concurrency
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
};

int resolve_workers(int requested);

// Design seed of replication `rep` for dims entry `dims_index`.
std::uint64_t replication_seed(const ExperimentConfig& cfg, std::size_t dims_index, int rep);
// The dataset a replication with design seed `seed` sees for one link,
// with covariance and truth attached.
Dataset simulate_dataset(const ExperimentConfig& cfg, std::size_t dims_index, std::size_t link_index,
                         std::uint64_t seed);

/// One fit within one replication.
struct ReplicationRecord {
  std::size_t arm = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | zero-fit | degenerate: ... | failed: ...
  double lambda = 0.0;
  Index n = 0, p = 0;

  double df, v, r2, gamma, t2, a2, sigma2;
  double a_star, sigma_star2, gamma_star, t_star;
  double ks_null, coverage_null, coverage_nonnull;
  double type1, power, signal_strength, kkt, support_size, beta_sigma_norm2;

  std::vector<double> null_pivots;

  ReplicationRecord();
  bool usable() const { return status == "ok"; }
};

struct Arm {
  std::string label;
  std::string link;
  double lambda = 0.0;
  Dims dims;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<Arm> arms;
  std::vector<ReplicationRecord> records;  // sorted by (arm, rep)
  int workers = 1;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Mean / sd / stderr per scalar and pooled diagnostics per arm. The result
// does not depend on the order of `result.records`.
nlohmann::json summarize(const ExperimentResult& result);

// 64-bit FNV-1a of the canonical config JSON, as hex.
std::string config_hash(const ExperimentConfig& cfg);

// Writes records.csv, summary.json, config.json and qq/*.csv under dir.
void write_outputs(const ExperimentResult& result, const nlohmann::json& summary, const std::string& dir);

extern const char* const kRecordHeader;
std::string record_csv_row(const std::string& experiment, const ReplicationRecord& r);

}  // namespace obsadj
