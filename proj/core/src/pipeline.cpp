#include "rfk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rfk/errors.hpp"
#include "rfk/io.hpp"
#include "rfk/parallel.hpp"
#include "rfk/rng.hpp"

namespace rfk {

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

void add(Entries& entries, const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}
void add(Entries& entries, const std::string& key, double value) {
  entries.emplace_back(key, format_double(value));
}
void add(Entries& entries, const std::string& key, std::int64_t value) {
  entries.emplace_back(key, std::to_string(value));
}
void add(Entries& entries, const std::string& key, int value) {
  entries.emplace_back(key, std::to_string(value));
}
void add(Entries& entries, const std::string& key, bool value) {
  entries.emplace_back(key, value ? "true" : "false");
}

std::string describe(const InitialConditionLaw& law) {
  std::ostringstream out;
  switch (law.kind) {
    case InitialConditionLaw::Kind::GaussianStandard:
      return "gaussian";
    case InitialConditionLaw::Kind::UniformBox:
    case InitialConditionLaw::Kind::UniformStrip: {
      out << (law.kind == InitialConditionLaw::Kind::UniformBox ? "box:" : "strip:");
      for (Eigen::Index c = 0; c < law.lo.size(); ++c) {
        if (c) out << ',';
        out << format_double(law.lo(c)) << ',' << format_double(law.hi(c));
      }
      return out.str();
    }
    case InitialConditionLaw::Kind::UniformRing:
      out << "ring:" << format_double(law.r_min) << ',' << format_double(law.r_max);
      return out.str();
    case InitialConditionLaw::Kind::UniformDisk:
      out << "disk:" << format_double(law.radius);
      return out.str();
    case InitialConditionLaw::Kind::HeartCurve:
      out << "heart:" << format_double(law.radius);
      return out.str();
  }
  return "?";
}

std::string model_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::LeastSquares: return "rre";
    case SolverKind::Htp: return "srre";
    case SolverKind::Ridge: return "ridge";
    case SolverKind::Nnls: return "nnls";
  }
  return "?";
}

std::uint64_t test_ic_seed(const ExperimentConfig& cfg) {
  if (cfg.has_test_seed) return rng::splitmix64(cfg.test_seed);
  return rng::derive(cfg.seed, rng::kTestIcs);
}

BlockLayout layout_for(const ExperimentConfig& cfg) {
  if (is_heterogeneous(cfg.system.cls)) return BlockLayout::grid(cfg.features.n_grid);
  return BlockLayout::single(cfg.features.N);
}

FeatureBasis basis_for(const ExperimentConfig& cfg) {
  const std::uint64_t seed = rng::derive(cfg.seed, rng::kFrequencies);
  if (cfg.features.fourier)
    return make_fourier_basis(cfg.system.n, cfg.features.theta_variance, cfg.features.N, seed);
  return make_radial_basis(cfg.system.cls, cfg.system.n, cfg.features.theta_variance,
                           layout_for(cfg), seed);
}

// Streams the feature rows of every trajectory through per-group QR
// compressions and merges them into one block-diagonal problem. Assembly runs
// in parallel over a bounded chunk of trajectories; reduction order is fixed.
CompressedLsq compress_training(const TrajectorySet& traj, const FeatureBasis& basis,
                                const SystemSpec& spec, bool include_endpoints, int threads) {
  const int groups = row_group_count(spec);
  const int total_cols = basis.blocks.total();
  std::vector<CompressedLsq> parts;
  parts.reserve(groups);

  for (int g = 0; g < groups; ++g) {
    const int cols = basis.blocks.group_count(g);
    LsqCompressor compressor(cols, std::max(4096, 4 * cols));
    // Chunk size bounded to ~512 MB of assembled rows.
    const auto [j_lo, j_hi] = include_endpoints ? std::pair<int, int>{0, traj.J}
                                                : traj.interior_range();
    const int agents = is_heterogeneous(spec.cls) ? spec.count_of_type(g) : spec.n;
    const std::size_t block_bytes = static_cast<std::size_t>(j_hi - j_lo) * agents * spec.d *
                                    cols * sizeof(double);
    const int workers = threads > 0 ? threads : default_thread_count();
    const int chunk = std::max(
        1, std::min<int>(2 * workers,
                         static_cast<int>((512ull << 20) / std::max<std::size_t>(1, block_bytes))));
    std::vector<RowBlock> blocks(chunk);
    for (int l0 = 0; l0 < traj.L; l0 += chunk) {
      const int count = std::min(chunk, traj.L - l0);
      parallel_for(
          static_cast<std::size_t>(count),
          [&](std::size_t i) {
            blocks[i] = assemble_trajectory_rows(traj, basis, spec, l0 + static_cast<int>(i), g,
                                                 include_endpoints);
          },
          threads);
      for (int i = 0; i < count; ++i) {
        compressor.add(blocks[i].values, blocks[i].targets);
        blocks[i] = RowBlock{};
      }
    }
    parts.push_back(compressor.finish());
  }

  if (groups == 1) return std::move(parts[0]);
  CompressedLsq merged;
  merged.R = Eigen::MatrixXd::Zero(total_cols, total_cols);
  merged.qtb = Eigen::VectorXd::Zero(total_cols);
  for (int g = 0; g < groups; ++g) {
    const int off = basis.blocks.group_offset(g);
    const int cols = basis.blocks.group_count(g);
    merged.R.block(off, off, cols, cols) = parts[g].R;
    merged.qtb.segment(off, cols) = parts[g].qtb;
    merged.extra_sq += parts[g].extra_sq;
    merged.rows += parts[g].rows;
  }
  return merged;
}

FeatureBasis with_solution(const FeatureBasis& basis, const SolveReport& report) {
  FeatureBasis trained = basis;
  trained.coefficients = report.coefficients;
  if (static_cast<int>(report.support.size()) < basis.size())
    trained.support = report.support;
  else
    trained.support.clear();
  return trained;
}

SystemSpec integration_spec(const ExperimentConfig& cfg, const SystemSpec& learned,
                            double r_max) {
  if (cfg.tabulate_learned == ExperimentConfig::Tabulate::Off || !(r_max > 0)) return learned;
  SystemSpec fast = learned;
  for (auto& kernel : fast.kernels)
    if (kernel.id() == Kernel::Id::Learned)
      kernel = kernel.tabulated_copy(r_max, cfg.tabulate_resolution);
  return fast;
}

double curve_r_max(const DensitySet& density) {
  return std::max(1e-3, density.overall.max_observed());
}

double mass_at(const RadialDensity& rho, double r) {
  const Eigen::Index bins = rho.mass.size();
  if (bins == 0 || r < rho.bin_edges(0) || r > rho.bin_edges(bins)) return 0.0;
  const double width = (rho.bin_edges(bins) - rho.bin_edges(0)) / static_cast<double>(bins);
  Eigen::Index b = width > 0 ? static_cast<Eigen::Index>((r - rho.bin_edges(0)) / width) : 0;
  b = std::clamp<Eigen::Index>(b, 0, bins - 1);
  return rho.mass(b);
}

void write_curves(const ExperimentConfig& cfg, const std::string& name,
                  const SystemSpec& true_spec, const SystemSpec& learned,
                  const DensitySet& density) {
  const double r_lo = std::max(0.0, density.overall.min_observed());
  const double r_hi = curve_r_max(density);
  Eigen::VectorXd grid(cfg.curve_points);
  for (int i = 0; i < cfg.curve_points; ++i)
    grid(i) = r_lo + (r_hi - r_lo) * i / static_cast<double>(cfg.curve_points - 1);
  if (grid(0) <= 0) grid(0) = std::min(1e-9, 0.5 * (grid(0) + grid(1)));

  auto fill = [&](const Kernel& g_true, const Kernel& g_learned, const RadialDensity& rho,
                  const std::filesystem::path& path) {
    Eigen::VectorXd vt(grid.size()), vl(grid.size()), vm(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      vt(i) = g_true.eval(grid(i));
      vl(i) = g_learned.eval(grid(i));
      vm(i) = mass_at(rho, grid(i));
    }
    write_kernel_curve(path, grid, vt, vl, vm);
  };

  if (is_heterogeneous(cfg.system.cls)) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        std::ostringstream file;
        file << "kernels_" << name << '_' << (a + 1) << (b + 1) << ".csv";
        fill(true_spec.kernel(a, b), learned.kernel(a, b), density.pair(a, b),
             cfg.out_dir / file.str());
      }
  } else {
    fill(true_spec.kernel(), learned.kernel(), density.overall,
         cfg.out_dir / ("kernels_" + name + ".csv"));
  }
}

void echo_config(Entries& entries, const ExperimentConfig& cfg) {
  add(entries, "preset", cfg.preset.empty() ? std::string("custom") : cfg.preset);
  add(entries, "system.class", std::string(to_string(cfg.system.cls)));
  add(entries, "system.d", cfg.system.d);
  if (is_heterogeneous(cfg.system.cls)) {
    add(entries, "system.n1", cfg.system.count_of_type(0));
    add(entries, "system.n2", cfg.system.count_of_type(1));
  } else {
    add(entries, "system.n", cfg.system.n);
  }
  add(entries, "data.mu0_1", describe(cfg.laws.position[0]));
  if (is_heterogeneous(cfg.system.cls)) add(entries, "data.mu0_2", describe(cfg.laws.position[1]));
  if (cfg.laws.velocity) add(entries, "data.mu0_velocity", describe((*cfg.laws.velocity)[0]));
  add(entries, "data.L", cfg.L);
  add(entries, "data.L_density", cfg.L_density);
  add(entries, "data.J", cfg.J);
  add(entries, "data.T", cfg.T);
  add(entries, "eval.T_tilde", cfg.T_tilde);
  add(entries, "data.noise_sigma", cfg.sigma_noise);
  if (is_heterogeneous(cfg.system.cls)) {
    add(entries, "features.N_11", cfg.features.n_grid[0]);
    add(entries, "features.N_12", cfg.features.n_grid[1]);
    add(entries, "features.N_21", cfg.features.n_grid[2]);
    add(entries, "features.N_22", cfg.features.n_grid[3]);
  } else {
    add(entries, "features.N", cfg.features.N);
  }
  add(entries, "features.theta_variance", cfg.features.theta_variance);
  add(entries, "features.family", std::string(cfg.features.fourier ? "fourier" : "radial"));
  add(entries, "solver.kind", std::string(to_string(cfg.solver.kind)));
  add(entries, "solver.sparsity", cfg.solver.sparsity);
  add(entries, "solver.lambda", cfg.solver.lambda);
  add(entries, "solver.compare_rre_srre", cfg.solver.compare_rre_srre);
  add(entries, "eval.trials", cfg.trials);
  add(entries, "eval.grid_points", cfg.forecast_grid_points());
  add(entries, "eval.bins", cfg.bins);
  add(entries, "run.seed", static_cast<std::int64_t>(cfg.seed));
}

void echo_errors(Entries& entries, const std::string& name, const ErrorReport& errors,
                 const SolveReport& solve, bool heterog) {
  add(entries, name + ".empirical_risk", errors.empirical_risk);
  add(entries, name + ".residual_norm", solve.residual_norm);
  add(entries, name + ".iterations", solve.iterations);
  add(entries, name + ".converged", solve.converged);
  add(entries, name + ".rank_deficient", solve.rank_deficient);
  add(entries, name + ".support_size", static_cast<int>(solve.support.size()));
  if (heterog) {
    const char* tags[4] = {"11", "12", "21", "22"};
    for (int i = 0; i < 4; ++i) {
      const KernelError& e = (*errors.per_pair)[i];
      add(entries, name + ".kernel_abs_err_" + tags[i], e.absolute);
      add(entries, name + ".kernel_rel_err_" + tags[i], e.relative);
      if (e.flagged)
        add(entries, name + ".kernel_rel_err_" + tags[i] + "_flag",
            std::string("zero_true_kernel"));
    }
  } else {
    add(entries, name + ".kernel_abs_err", errors.kernel.absolute);
    add(entries, name + ".kernel_rel_err", errors.kernel.relative);
    if (errors.kernel.flagged)
      add(entries, name + ".kernel_rel_err_flag", std::string("zero_true_kernel"));
    if (errors.kernel.excluded_bins)
      add(entries, name + ".kernel_excluded_bins", errors.kernel.excluded_bins);
  }
  add(entries, name + ".path_mean", errors.pathwise.mean);
  add(entries, name + ".path_std", errors.pathwise.stddev);
  add(entries, name + ".path_trials", errors.pathwise.trials);
  add(entries, name + ".path_dropped", errors.pathwise.dropped);
  add(entries, name + ".horizon", errors.horizon);
}

struct PreparedData {
  TrajectorySet train;
  std::uint64_t checksum = 0;
  IntegrationStats stats;
};

PreparedData prepare_training(const ExperimentConfig& cfg) {
  PreparedData data;
  TrajectorySet clean =
      generate_dataset(cfg.system, cfg.laws, cfg.L, cfg.J, cfg.T, cfg.integrator,
                       rng::derive(cfg.seed, rng::kTrainIcs), cfg.threads, &data.stats);
  data.checksum = dataset_checksum(clean);
  TrajectorySet noisy = apply_multiplicative_noise(std::move(clean), cfg.sigma_noise,
                                                   rng::derive(cfg.seed, rng::kNoise));
  data.train = is_second_order(cfg.system.cls)
                   ? estimate_accelerations(noisy)
                   : estimate_velocities_central_difference(noisy);
  return data;
}

DensitySet estimate_density(const ExperimentConfig& cfg) {
  TrajectorySet density_set =
      generate_dataset(cfg.system, cfg.laws, cfg.L_density, cfg.J, cfg.T, cfg.integrator,
                       rng::derive(cfg.seed, rng::kDensityIcs), cfg.threads);
  density_set.velocities.clear();
  return empirical_radial_density(density_set, cfg.bins);
}

ErrorReport evaluate_model(const ExperimentConfig& cfg, const FeatureBasis& trained,
                           const DensitySet& density, double empirical_risk_value) {
  ErrorReport errors;
  errors.empirical_risk = empirical_risk_value;
  errors.horizon = cfg.T_tilde;

  const SystemSpec learned = build_learned_system(trained, cfg.system);
  if (is_heterogeneous(cfg.system.cls)) {
    errors.per_pair.emplace();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        (*errors.per_pair)[a * 2 + b] = kernel_l2_rho_error(
            cfg.system.kernel(a, b), learned.kernel(a, b), density.pair(a, b));
  } else {
    errors.kernel = kernel_l2_rho_error(cfg.system.kernel(), learned.kernel(), density.overall);
  }

  const double r_max = 2.0 * curve_r_max(density) + 1.0;
  const SystemSpec fast = integration_spec(cfg, learned, r_max);
  const auto grid = equidistant_timestamps(0.0, cfg.T_tilde, cfg.forecast_grid_points());
  errors.pathwise = pathwise_error(cfg.system, fast, cfg.laws, cfg.trials, grid, cfg.integrator,
                                   test_ic_seed(cfg), cfg.threads);
  return errors;
}

void write_forecasts(const ExperimentConfig& cfg, const std::vector<TrainedModel>& models,
                     const DensitySet& density) {
  const auto grid = equidistant_timestamps(0.0, cfg.T_tilde, cfg.forecast_grid_points());
  const auto ics = sample_initial_conditions(cfg.laws, cfg.system, 1,
                                             rng::derive(cfg.seed, rng::kTrainIcs));
  auto to_set = [&](const std::vector<AgentState>& path) {
    TrajectorySet t;
    t.d = cfg.system.d;
    t.n = cfg.system.n;
    t.J = static_cast<int>(grid.size());
    t.L = 1;
    t.T = cfg.T_tilde;
    t.cls = cfg.system.cls;
    t.types = cfg.system.types;
    t.timestamps = grid;
    t.states.reserve(path.size());
    for (const auto& s : path) t.states.push_back(s.positions);
    if (is_second_order(cfg.system.cls)) {
      t.velocities.reserve(path.size());
      for (const auto& s : path) t.velocities.push_back(s.velocities);
    }
    return t;
  };
  const auto true_path = integrate_system(cfg.system, ics[0], grid, cfg.integrator);
  write_dataset(cfg.out_dir / "forecast_true.csv", to_set(true_path), cfg.T);
  const double r_max = 2.0 * curve_r_max(density) + 1.0;
  for (const auto& model : models) {
    const SystemSpec fast =
        integration_spec(cfg, build_learned_system(model.basis, cfg.system), r_max);
    const auto path = integrate_system(fast, ics[0], grid, cfg.integrator);
    write_dataset(cfg.out_dir / ("forecast_" + model.name + ".csv"), to_set(path), cfg.T);
  }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  RunResult result;
  result.config = cfg;

  PreparedData data = prepare_training(cfg);
  result.train_checksum = data.checksum;
  result.train_stats = data.stats;
  if (cfg.write_train_data) write_dataset(cfg.out_dir / "train_data.csv", data.train, cfg.T);

  const FeatureBasis basis = basis_for(cfg);
  const CompressedLsq problem =
      compress_training(data.train, basis, cfg.system, cfg.include_endpoints, cfg.threads);
  const auto [j_lo, j_hi] = cfg.include_endpoints ? std::pair<int, int>{0, data.train.J}
                                                  : data.train.interior_range();
  const int J_used = j_hi - j_lo;

  std::vector<std::pair<std::string, SolveReport>> solves;
  if (cfg.solver.compare_rre_srre) {
    solves.emplace_back("rre", solve_least_squares(problem));
    solves.emplace_back("srre",
                        solve_htp(problem, cfg.solver.sparsity, cfg.solver.max_iters));
  } else {
    switch (cfg.solver.kind) {
      case SolverKind::LeastSquares:
        solves.emplace_back("rre", solve_least_squares(problem));
        break;
      case SolverKind::Htp:
        solves.emplace_back("srre",
                            solve_htp(problem, cfg.solver.sparsity, cfg.solver.max_iters));
        break;
      case SolverKind::Ridge:
        solves.emplace_back("ridge", solve_ridge(problem, cfg.solver.lambda));
        break;
      case SolverKind::Nnls:
        solves.emplace_back("nnls", solve_nonnegative(problem));
        break;
    }
  }

  // Training data is no longer needed; free it before the density pass.
  data.train = TrajectorySet{};
  result.density = estimate_density(cfg);

  for (auto& [name, solve] : solves) {
    TrainedModel model;
    model.name = name;
    model.basis = with_solution(basis, solve);
    model.solve = solve;
    model.errors = evaluate_model(
        cfg, model.basis, result.density,
        empirical_risk(problem, solve.coefficients, cfg.system.n, J_used, cfg.L));
    write_basis(cfg.out_dir / ("basis_" + name + ".csv"), model.basis);
    write_curves(cfg, name, cfg.system, build_learned_system(model.basis, cfg.system),
                 result.density);
    result.models.push_back(std::move(model));
  }

  write_density(cfg.out_dir / "density.csv", result.density);
  write_forecasts(cfg, result.models, result.density);

  Entries entries;
  echo_config(entries, cfg);
  add(entries, "data.checksum", static_cast<std::int64_t>(result.train_checksum));
  add(entries, "data.J_used", J_used);
  add(entries, "train.steps_accepted", result.train_stats.accepted);
  add(entries, "train.steps_rejected", result.train_stats.rejected);
  add(entries, "train.kernel_clamps", result.train_stats.clamped);
  add(entries, "train.step_flagged", result.train_stats.step_flagged);
  for (const auto& model : result.models)
    echo_errors(entries, model.name, model.errors, model.solve,
                is_heterogeneous(cfg.system.cls));
  result.report_path = cfg.out_dir / "report.txt";
  write_report(result.report_path, entries);
  return result;
}

std::filesystem::path cmd_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  TrajectorySet traj =
      generate_dataset(cfg.system, cfg.laws, cfg.L, cfg.J, cfg.T, cfg.integrator,
                       rng::derive(cfg.seed, rng::kTrainIcs), cfg.threads);
  if (cfg.simulate_with_noise && cfg.sigma_noise > 0)
    traj = apply_multiplicative_noise(traj, cfg.sigma_noise, rng::derive(cfg.seed, rng::kNoise));
  const auto path = cfg.out_dir / "simulate.csv";
  write_dataset(path, traj, cfg.T);
  return path;
}

std::filesystem::path cmd_forecast(const ExperimentConfig& cfg,
                                   const std::filesystem::path& basis_file,
                                   const std::filesystem::path& ic_file) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  SystemSpec spec = cfg.system;
  std::string label = "true";
  if (!basis_file.empty()) {
    const FeatureBasis basis = read_basis(basis_file);
    if (!basis.has_coefficients())
      throw ConfigError("basis file has no trained coefficients: " + basis_file.string());
    spec = integration_spec(cfg, build_learned_system(basis, cfg.system), 0.0);
    label = "learned";
  }

  AgentState initial;
  if (!ic_file.empty()) {
    const DatasetFile file = read_dataset(ic_file);
    if (file.traj.n != cfg.system.n || file.traj.d != cfg.system.d)
      throw ConfigError("IC file shape does not match the system");
    initial.positions = file.traj.state(0, 0);
    if (is_second_order(cfg.system.cls)) {
      if (!file.traj.has_velocities())
        throw ConfigError("second-order forecasts need velocity columns in the IC file");
      initial.velocities = file.traj.velocities[0];
    }
  } else {
    initial = sample_initial_conditions(cfg.laws, cfg.system, 1,
                                        rng::derive(cfg.seed, rng::kTrainIcs))[0];
  }

  const auto grid = equidistant_timestamps(0.0, cfg.T_tilde, cfg.forecast_grid_points());
  const auto path_states = integrate_system(spec, initial, grid, cfg.integrator);
  TrajectorySet out;
  out.d = cfg.system.d;
  out.n = cfg.system.n;
  out.J = static_cast<int>(grid.size());
  out.L = 1;
  out.T = cfg.T_tilde;
  out.cls = cfg.system.cls;
  out.types = cfg.system.types;
  out.timestamps = grid;
  for (const auto& s : path_states) out.states.push_back(s.positions);
  if (is_second_order(cfg.system.cls))
    for (const auto& s : path_states) out.velocities.push_back(s.velocities);
  const auto file_path = cfg.out_dir / ("forecast_" + label + ".csv");
  write_dataset(file_path, out, cfg.T);
  return file_path;
}

RunResult cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& basis_file) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  FeatureBasis basis = read_basis(basis_file);
  if (!basis.has_coefficients())
    throw ConfigError("basis file has no trained coefficients: " + basis_file.string());

  RunResult result;
  result.config = cfg;
  result.density = estimate_density(cfg);

  TrainedModel model;
  model.name = model_name(cfg.solver.kind);
  model.basis = std::move(basis);
  model.errors = evaluate_model(cfg, model.basis, result.density,
                                std::numeric_limits<double>::quiet_NaN());
  write_curves(cfg, model.name, cfg.system, build_learned_system(model.basis, cfg.system),
               result.density);
  result.models.push_back(std::move(model));

  Entries entries;
  echo_config(entries, cfg);
  add(entries, "evaluated_basis", basis_file.string());
  echo_errors(entries, result.models[0].name, result.models[0].errors, result.models[0].solve,
              is_heterogeneous(cfg.system.cls));
  result.report_path = cfg.out_dir / "report.txt";
  write_report(result.report_path, entries);
  return result;
}

std::vector<SweepRow> cmd_sweep_sparsity(const ExperimentConfig& cfg,
                                         const std::vector<int>& s_list) {
  cfg.validate();
  if (s_list.empty()) throw ConfigError("sweep needs at least one sparsity level");
  const int total = is_heterogeneous(cfg.system.cls)
                        ? cfg.features.n_grid[0] + cfg.features.n_grid[1] +
                              cfg.features.n_grid[2] + cfg.features.n_grid[3]
                        : cfg.features.N;
  for (int s : s_list)
    if (s < 1 || s > total) throw ConfigError("sweep sparsity out of [1, N]");
  std::filesystem::create_directories(cfg.out_dir);

  PreparedData data = prepare_training(cfg);
  const FeatureBasis basis = basis_for(cfg);
  const CompressedLsq problem =
      compress_training(data.train, basis, cfg.system, cfg.include_endpoints, cfg.threads);
  data.train = TrajectorySet{};
  const DensitySet density = estimate_density(cfg);
  const auto grid = equidistant_timestamps(0.0, cfg.T_tilde, cfg.forecast_grid_points());
  const double r_max = 2.0 * curve_r_max(density) + 1.0;

  std::vector<SweepRow> rows;
  for (int s : s_list) {
    const SolveReport solve = solve_htp(problem, s, cfg.solver.max_iters);
    const FeatureBasis trained = with_solution(basis, solve);
    const SystemSpec learned = build_learned_system(trained, cfg.system);
    SweepRow row;
    row.sparsity = s;
    if (is_heterogeneous(cfg.system.cls)) {
      // Overall sparsity quality: density-weighted mean of per-pair relative errors.
      double weighted = 0, weight = 0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const KernelError e = kernel_l2_rho_error(cfg.system.kernel(a, b), learned.kernel(a, b),
                                                    density.pair(a, b));
          if (!e.flagged) {
            weighted += e.relative;
            weight += 1;
          }
        }
      row.kernel_rel_err = weight > 0 ? weighted / weight : 0;
    } else {
      row.kernel_rel_err =
          kernel_l2_rho_error(cfg.system.kernel(), learned.kernel(), density.overall).relative;
    }
    const SystemSpec fast = integration_spec(cfg, learned, r_max);
    const PathwiseError path = pathwise_error(cfg.system, fast, cfg.laws, cfg.trials, grid,
                                              cfg.integrator, test_ic_seed(cfg), cfg.threads);
    row.path_mean = path.mean;
    row.path_std = path.stddev;
    rows.push_back(row);
  }

  std::ofstream out(cfg.out_dir / "sweep.csv");
  out << "s,kernel_rel_err,path_mean,path_std\n";
  for (const auto& row : rows)
    out << row.sparsity << ',' << format_double(row.kernel_rel_err) << ','
        << format_double(row.path_mean) << ',' << format_double(row.path_std) << "\n";
  return rows;
}

RffComparison cmd_compare_rff(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.system.cls != SystemClass::FirstOrderHomogeneous)
    throw ConfigError("compare-rff needs a first-order homogeneous system");
  std::filesystem::create_directories(cfg.out_dir);

  PreparedData data = prepare_training(cfg);
  const std::uint64_t freq_seed = rng::derive(cfg.seed, rng::kFrequencies);
  const FeatureBasis radial =
      make_radial_basis(cfg.system.cls, cfg.system.n, cfg.features.theta_variance,
                        BlockLayout::single(cfg.features.N), freq_seed);
  const FeatureBasis fourier =
      make_fourier_basis(cfg.system.n, cfg.features.theta_variance, cfg.features.N, freq_seed);

  const CompressedLsq radial_problem =
      compress_training(data.train, radial, cfg.system, cfg.include_endpoints, cfg.threads);
  const CompressedLsq fourier_problem =
      compress_training(data.train, fourier, cfg.system, cfg.include_endpoints, cfg.threads);
  data.train = TrajectorySet{};

  const DensitySet density = estimate_density(cfg);
  const FeatureBasis radial_trained =
      with_solution(radial, solve_least_squares(radial_problem));
  const FeatureBasis fourier_trained =
      with_solution(fourier, solve_least_squares(fourier_problem));
  const SystemSpec radial_sys = build_learned_system(radial_trained, cfg.system);
  const SystemSpec fourier_sys = build_learned_system(fourier_trained, cfg.system);

  RffComparison cmp;
  cmp.train_checksum = data.checksum;
  cmp.radial_rel_err =
      kernel_l2_rho_error(cfg.system.kernel(), radial_sys.kernel(), density.overall).relative;
  cmp.fourier_rel_err =
      kernel_l2_rho_error(cfg.system.kernel(), fourier_sys.kernel(), density.overall).relative;

  write_curves(cfg, "radial", cfg.system, radial_sys, density);
  write_curves(cfg, "fourier", cfg.system, fourier_sys, density);
  write_basis(cfg.out_dir / "basis_radial.csv", radial_trained);
  write_basis(cfg.out_dir / "basis_fourier.csv", fourier_trained);

  Entries entries;
  echo_config(entries, cfg);
  add(entries, "data.checksum", static_cast<std::int64_t>(cmp.train_checksum));
  add(entries, "radial.kernel_rel_err", cmp.radial_rel_err);
  add(entries, "fourier.kernel_rel_err", cmp.fourier_rel_err);
  write_report(cfg.out_dir / "rff_report.txt", entries);
  return cmp;
}

}  // namespace rfk
