#pragma once

#include "matchprior/core/types.hpp"
#include "matchprior/mcmc/mcmc.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace matchprior::experiments {

enum class ExperimentKind { LogisticSynthetic, Banknote, PoissonShrinkage, CauchyCalibration, Timing };
std::string_view to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::LogisticSynthetic;
  int scenario = 1;
  std::vector<std::size_t> n_grid;
  std::size_t repetitions = 1;
  ChainConfig chain;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";

  /// Model and prior names from the catalogs. The model is fixed by the
  /// experiment; the prior is normal(m,v) for the logistic and Cauchy runs and
  /// komaki(beta,alpha|auto,floor) for shrinkage.
  std::string model;
  std::string prior;
  std::filesystem::path data;

  // Poisson shrinkage: "paper-synthetic" or "csv" (rows are periods).
  std::string generator = "paper-synthetic";
  /// Parameter dimension for the synthetic shrinkage and Cauchy runs.
  std::size_t dim = 100;

  /// Chain lengths at which the Cauchy trajectory is reported.
  std::vector<std::size_t> checkpoints;

  ExperimentKind timing_target = ExperimentKind::LogisticSynthetic;

  /// Worker cap; 0 means MATCHPRIOR_THREADS or the hardware count.
  std::size_t threads = 0;

  /// Set by apply_desk_preset.
  bool desk = false;

  nlohmann::json raw;

  void validate() const;
};

/// Reads a JSON config. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

/// Logistic chains 2000/2000 with 20 repetitions; shrinkage chains 5000.
void apply_desk_preset(ExperimentConfig& c);

struct GapRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::string label;
  std::string reference;
  std::string status = "ok";
  Vector estimate;
  Vector gap;    // |estimate - reference| per coordinate
  double l2 = 0;
  Vector mc_se;  // samplers only
  double seconds = 0;
};

struct CellSeed {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
};

struct RunResult {
  std::string experiment;
  std::vector<GapRecord> records;
  std::vector<CellSeed> seeds;
  /// The two methods compared in the timing table: reference first.
  std::vector<std::string> timing_labels;
  std::map<std::string, std::string> notes;
};

RunResult run_logistic_synthetic(const ExperimentConfig& c);
RunResult run_banknote(const ExperimentConfig& c);
RunResult run_poisson_shrinkage(const ExperimentConfig& c);
RunResult run_cauchy_calibration(const ExperimentConfig& c);
/// Runs the timing target; timing.csv carries the table.
RunResult run_timing(const ExperimentConfig& c);
RunResult run_experiment(const ExperimentConfig& c);

/// experiment,n,rep,label,reference,status,l2_gap,est*,gap*,se*; sorted by
/// (n, rep, label) and free of wall-clock values.
std::string records_csv(const RunResult& r);
/// Count, mean and sd of the L2 gap per (n, label).
std::string summary_csv(const RunResult& r);
/// One row per n with mean and sd seconds for each timing label.
std::string timing_csv(const RunResult& r);
nlohmann::json meta_json(const ExperimentConfig& c, const RunResult& r);

/// Writes records.csv, summary.csv, timing.csv and meta.json into c.output.
void write_outputs(const ExperimentConfig& c, const RunResult& r);

/// (mean, variance) of a normal(m,v) catalog string.
std::pair<double, double> normal_hyper(const std::string& spec);

struct KomakiHyper {
  double beta = 0;
  double alpha = 0;
  double floor = 0;
};
/// komaki(beta[,alpha|auto[,floor]]); auto resolves to d * beta - 1.
KomakiHyper komaki_hyper(const std::string& spec, std::size_t d);

/// Worker count after applying MATCHPRIOR_THREADS.
std::size_t worker_count(std::size_t requested);

std::string git_hash();

}  // namespace matchprior::experiments
