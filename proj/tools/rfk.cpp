// rfk: learn pairwise interaction kernels of multi-agent systems from
// trajectory data and forecast with the trained model.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "rfk/config.hpp"
#include "rfk/errors.hpp"
#include "rfk/io.hpp"
#include "rfk/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string solver;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int sparsity = 0;
  double lambda = -1;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (key = value with [section] headers)");
  cmd->add_option("--preset", args.preset,
                  "Preset: lennard-jones, cucker-smale, predator-prey, sheep-food");
  cmd->add_option("--seed", args.seed, "Master seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--solver", args.solver, "Solver: ols, ridge, htp, nnls");
  cmd->add_option("--sparsity", args.sparsity, "HTP sparsity level s");
  cmd->add_option("--lambda", args.lambda, "Ridge penalty");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--set", args.overrides, "Override a config key (section.key=value)")
      ->take_all();
}

rfk::ExperimentConfig resolve_config(const CommonArgs& args) {
  rfk::ExperimentConfig config;
  if (!args.config_path.empty()) {
    config = rfk::load_config(args.config_path);
    if (!args.preset.empty())
      throw rfk::ConfigError("--preset and --config are mutually exclusive");
  } else if (!args.preset.empty()) {
    config = rfk::config_from_preset(args.preset);
  } else {
    throw rfk::ConfigError("either --config or --preset is required");
  }
  if (args.seed_set) rfk::apply_override(config, "run.seed", std::to_string(args.seed));
  if (!args.solver.empty()) {
    rfk::apply_override(config, "solver.kind", args.solver);
    rfk::apply_override(config, "solver.compare_rre_srre", "false");
  }
  if (args.sparsity > 0)
    rfk::apply_override(config, "solver.sparsity", std::to_string(args.sparsity));
  if (args.lambda >= 0)
    rfk::apply_override(config, "solver.lambda", rfk::format_double(args.lambda));
  if (!args.out_dir.empty()) rfk::apply_override(config, "run.out", args.out_dir);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw rfk::ConfigError("--set expects section.key=value, got '" + kv + "'");
    rfk::apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void print_kernel_errors(const rfk::TrainedModel& model, bool heterog) {
  if (heterog) {
    const char* tags[4] = {"11", "12", "21", "22"};
    for (int i = 0; i < 4; ++i) {
      const auto& e = (*model.errors.per_pair)[i];
      std::printf("  %s kernel_rel_err_%s = %s%s\n", model.name.c_str(), tags[i],
                  rfk::format_double(e.relative).c_str(),
                  e.flagged ? " (flagged: zero true kernel)" : "");
    }
  } else {
    std::printf("  %s kernel_rel_err = %s\n", model.name.c_str(),
                rfk::format_double(model.errors.kernel.relative).c_str());
  }
  std::printf("  %s path error = %s +- %s over [0, %s]\n", model.name.c_str(),
              rfk::format_double(model.errors.pathwise.mean).c_str(),
              rfk::format_double(model.errors.pathwise.stddev).c_str(),
              rfk::format_double(model.errors.horizon).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction-kernel learning with sparse random radial features"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string basis_file, ic_file;
  std::vector<int> sweep_list;

  auto* run = app.add_subcommand("run", "Train, forecast, and score one experiment");
  attach_common(run, args);

  auto* simulate = app.add_subcommand("simulate", "Write true-system trajectories as CSV");
  attach_common(simulate, args);

  auto* forecast = app.add_subcommand("forecast", "Integrate the true or a trained system");
  attach_common(forecast, args);
  forecast->add_option("--basis", basis_file, "Trained basis CSV (omit to use true kernels)");
  forecast->add_option("--ic-file", ic_file, "Dataset CSV whose first snapshot seeds the IC");

  auto* evaluate = app.add_subcommand("evaluate", "Score a stored basis against the true system");
  attach_common(evaluate, args);
  evaluate->add_option("--basis", basis_file, "Trained basis CSV")->required();

  auto* sweep = app.add_subcommand("sweep-sparsity", "Train one model per sparsity level");
  attach_common(sweep, args);
  sweep->add_option("--sparsity-list", sweep_list, "Sparsity levels (repeatable)")->take_all();

  auto* compare = app.add_subcommand("compare-rff", "Radial features versus Fourier features");
  attach_common(compare, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const rfk::ExperimentConfig config = resolve_config(args);
    if (run->parsed()) {
      const rfk::RunResult result = rfk::run_experiment(config);
      std::printf("report: %s\n", result.report_path.string().c_str());
      for (const auto& model : result.models)
        print_kernel_errors(model, rfk::is_heterogeneous(config.system.cls));
    } else if (simulate->parsed()) {
      std::printf("dataset: %s\n", rfk::cmd_simulate(config).string().c_str());
    } else if (forecast->parsed()) {
      std::printf("forecast: %s\n",
                  rfk::cmd_forecast(config, basis_file, ic_file).string().c_str());
    } else if (evaluate->parsed()) {
      const rfk::RunResult result = rfk::cmd_evaluate(config, basis_file);
      std::printf("report: %s\n", result.report_path.string().c_str());
      print_kernel_errors(result.models[0], rfk::is_heterogeneous(config.system.cls));
    } else if (sweep->parsed()) {
      const auto list = sweep_list.empty() ? config.sweep_sparsity : sweep_list;
      const auto rows = rfk::cmd_sweep_sparsity(config, list);
      std::printf("s,kernel_rel_err,path_mean,path_std\n");
      for (const auto& row : rows)
        std::printf("%d,%s,%s,%s\n", row.sparsity,
                    rfk::format_double(row.kernel_rel_err).c_str(),
                    rfk::format_double(row.path_mean).c_str(),
                    rfk::format_double(row.path_std).c_str());
    } else if (compare->parsed()) {
      const auto cmp = rfk::cmd_compare_rff(config);
      std::printf("radial.kernel_rel_err=%s\nfourier.kernel_rel_err=%s\n",
                  rfk::format_double(cmp.radial_rel_err).c_str(),
                  rfk::format_double(cmp.fourier_rel_err).c_str());
    }
  } catch (const rfk::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
