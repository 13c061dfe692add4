#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfk/datagen.hpp"
#include "rfk/integrate.hpp"
#include "rfk/solvers.hpp"
#include "rfk/systems.hpp"

namespace rfk {

struct FeatureConfig {
  bool fourier = false;
  std::array<int, 4> n_grid{0, 0, 0, 0};  // heterogeneous block sizes
  int N = 0;                              // homogeneous feature count
  double theta_variance = 1.0;
};

struct SolverConfig {
  SolverKind kind = SolverKind::Htp;
  int sparsity = 0;
  double lambda = 0;
  int max_iters = 50;
  bool compare_rre_srre = true;  // train both the least-squares and sparse models
};

/// Fully resolved experiment description (system, data sizes, features, solver,
/// evaluation settings). Presets reproduce the four reference systems exactly
/// and every key can be overridden via config file or --set.
struct ExperimentConfig {
  std::string preset;  // empty for fully custom configs
  SystemSpec system;
  InitialConditionSet laws;

  int L = 1, L_density = 1, J = 3;
  double T = 1, T_tilde = 1, sigma_noise = 0;

  FeatureConfig features;
  SolverConfig solver;
  IntegratorSettings integrator;

  int trials = 50;          // path-wise error trials (M)
  int grid_points = 0;      // 0 = keep the training sampling interval
  int bins = 200;           // density histogram bins
  int curve_points = 400;   // kernel-curve export grid
  enum class Tabulate { Auto, On, Off } tabulate_learned = Tabulate::Auto;
  int tabulate_resolution = 16384;
  bool include_endpoints = false;

  std::uint64_t seed = 1;
  std::uint64_t test_seed = 0;  // optional independent seed for path-error ICs
  bool has_test_seed = false;
  std::filesystem::path out_dir = "out";
  int threads = 0;  // 0 = hardware concurrency
  bool write_train_data = false;
  bool simulate_with_noise = false;
  std::vector<int> sweep_sparsity;

  int forecast_grid_points() const;
  void validate() const;
};

/// Table presets: lennard-jones, cucker-smale, predator-prey, sheep-food.
ExperimentConfig config_from_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parses the `key = value` / `[section]` config format. A `preset` key seeds
/// the defaults; remaining keys override field by field. Errors name the key
/// and line number.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override (the CLI --set flag).
void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value);

}  // namespace rfk
