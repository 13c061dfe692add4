#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rfk/config.hpp"
#include "rfk/datagen.hpp"
#include "rfk/features.hpp"
#include "rfk/metrics.hpp"
#include "rfk/solvers.hpp"

namespace rfk {

/// One trained estimator (RRE = least squares, SRRE = hard thresholding pursuit,
/// or whichever solver was configured) with its evaluation results.
struct TrainedModel {
  std::string name;  // "rre", "srre", "ridge", "nnls"
  FeatureBasis basis;
  SolveReport solve;
  ErrorReport errors;
};

struct RunResult {
  ExperimentConfig config;
  DensitySet density;
  std::uint64_t train_checksum = 0;
  std::vector<TrainedModel> models;
  IntegrationStats train_stats;
  std::filesystem::path report_path;
};

/// Full training/forecast/evaluation pipeline; writes report.txt, basis and
/// kernel-curve CSVs, density.csv, and sample forecast trajectories to
/// config.out_dir. Deterministic byte-for-byte in (config, seed).
RunResult run_experiment(const ExperimentConfig& config);

/// Writes the dataset CSV of L true-system trajectories (plus noise when
/// configured with run.simulate_with_noise).
std::filesystem::path cmd_simulate(const ExperimentConfig& config);

/// Integrates the true system or a trained basis from a fresh IC over
/// [0, T_tilde] and writes the trajectory CSV (T_train marks the transition).
std::filesystem::path cmd_forecast(const ExperimentConfig& config,
                                   const std::filesystem::path& basis_file,
                                   const std::filesystem::path& ic_file = {});

/// Evaluates a stored basis against the true system: kernel-space and
/// path-wise errors, written as a report.
RunResult cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& basis_file);

struct SweepRow {
  int sparsity = 0;
  double kernel_rel_err = 0;
  double path_mean = 0;
  double path_std = 0;
};

/// Trains one HTP model per sparsity level over a shared dataset and shared
/// frequency draws; writes sweep.csv.
std::vector<SweepRow> cmd_sweep_sparsity(const ExperimentConfig& config,
                                         const std::vector<int>& s_list);

struct RffComparison {
  double radial_rel_err = 0;
  double fourier_rel_err = 0;
  std::uint64_t train_checksum = 0;
};

/// Trains radial and random-Fourier bases on the identical dataset and budget,
/// writing both kernel curves on a common r-grid plus an error report.
RffComparison cmd_compare_rff(const ExperimentConfig& config);

}  // namespace rfk
