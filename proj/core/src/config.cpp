#include "rfk/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rfk/errors.hpp"

namespace rfk {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

double to_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::string field;
  std::istringstream stream(v);
  while (std::getline(stream, field, ',')) out.push_back(to_double(trim(field), key));
  return out;
}

Kernel parse_kernel(const std::string& value, const std::string& key) {
  const auto colon = value.find(':');
  const std::string name = value.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : value.substr(colon + 1);
  if (name == "zero") return Kernel::zero();
  if (name == "cucker-smale") return Kernel::cucker_smale();
  if (name == "prey-prey") return Kernel::prey_prey();
  if (name == "prey-predator") return Kernel::prey_predator();
  if (name == "predator-prey") return Kernel::predator_prey();
  if (name == "predator-predator") return Kernel::predator_predator();
  if (name == "sheep-sheep") return Kernel::sheep_sheep();
  if (name == "sheep-food-attraction") return Kernel::sheep_food_attraction();
  if (name == "lennard-jones") {
    double eps = 10, sigma = 1;
    if (!args.empty()) {
      const auto vals = to_doubles(args, key);
      if (vals.size() != 2) throw ConfigError("key '" + key + "': lennard-jones:eps,sigma");
      eps = vals[0];
      sigma = vals[1];
    }
    return Kernel::lennard_jones(eps, sigma);
  }
  if (name == "tabulated") {
    // tabulated:file.csv with `r,g` rows
    std::ifstream in(args);
    if (!in) throw ConfigError("key '" + key + "': cannot open kernel table '" + args + "'");
    std::vector<double> rs, gs;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw ConfigError("key '" + key + "': kernel table rows need `r,g`");
      rs.push_back(to_double(trim(line.substr(0, comma)), key));
      gs.push_back(to_double(trim(line.substr(comma + 1)), key));
    }
    Eigen::VectorXd r = Eigen::Map<Eigen::VectorXd>(rs.data(), rs.size());
    Eigen::VectorXd g = Eigen::Map<Eigen::VectorXd>(gs.data(), gs.size());
    return Kernel::tabulated(r, g);
  }
  throw ConfigError("key '" + key + "': unknown kernel '" + value + "'");
}

InitialConditionLaw parse_law(const std::string& value, const std::string& key) {
  const auto colon = value.find(':');
  const std::string name = value.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : value.substr(colon + 1);
  const auto vals = args.empty() ? std::vector<double>{} : to_doubles(args, key);
  if (name == "gaussian") return InitialConditionLaw::gaussian();
  if (name == "box") {
    if (vals.size() < 2 || vals.size() % 2 != 0)
      throw ConfigError("key '" + key + "': box:lo1,hi1[,lo2,hi2,...]");
    const int d = static_cast<int>(vals.size() / 2);
    Eigen::VectorXd lo(d), hi(d);
    for (int c = 0; c < d; ++c) {
      lo(c) = vals[2 * c];
      hi(c) = vals[2 * c + 1];
    }
    return InitialConditionLaw::box(lo, hi);
  }
  if (name == "ring") {
    if (vals.size() != 2 && vals.size() != 4)
      throw ConfigError("key '" + key + "': ring:r_min,r_max[,cx,cy]");
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    if (vals.size() == 4) center << vals[2], vals[3];
    return InitialConditionLaw::ring(vals[0], vals[1], center);
  }
  if (name == "disk") {
    if (vals.size() != 1 && vals.size() != 3)
      throw ConfigError("key '" + key + "': disk:radius[,cx,cy]");
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    if (vals.size() == 3) center << vals[1], vals[2];
    return InitialConditionLaw::disk(vals[0], center);
  }
  if (name == "heart") {
    if (vals.size() != 1 && vals.size() != 3)
      throw ConfigError("key '" + key + "': heart:radius[,cx,cy]");
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    if (vals.size() == 3) center << vals[1], vals[2];
    return InitialConditionLaw::heart(vals[0], center);
  }
  if (name == "strip") {
    if (vals.size() != 4) throw ConfigError("key '" + key + "': strip:x0,x1,y0,y1");
    return InitialConditionLaw::strip(vals[0], vals[1], vals[2], vals[3]);
  }
  throw ConfigError("key '" + key + "': unknown law '" + value + "'");
}

SolverKind parse_solver(const std::string& v, const std::string& key) {
  if (v == "ols") return SolverKind::LeastSquares;
  if (v == "ridge") return SolverKind::Ridge;
  if (v == "htp") return SolverKind::Htp;
  if (v == "nnls") return SolverKind::Nnls;
  throw ConfigError("key '" + key + "': unknown solver '" + v + "'");
}

// Raw key-value view used while a config is being assembled: the system section
// may arrive in any order, so the SystemSpec is built at the end.
struct PendingSystem {
  std::optional<SystemClass> cls;
  int d = 2;
  std::optional<int> n, n1, n2;
  std::map<std::string, Kernel> kernels;
  std::optional<double> domain_floor;
  bool touched = false;
};

struct ConfigBuilder {
  ExperimentConfig config;
  PendingSystem system;
  bool from_preset = false;

  void apply(const std::string& key, const std::string& value);
  ExperimentConfig finish();
};

void ConfigBuilder::apply(const std::string& dotted, const std::string& value) {
  const auto dot = dotted.find('.');
  const std::string section = dot == std::string::npos ? "" : dotted.substr(0, dot);
  const std::string key = dot == std::string::npos ? dotted : dotted.substr(dot + 1);

  if (section == "system") {
    system.touched = true;
    if (key == "preset") throw ConfigError("preset must be the first system key");
    else if (key == "class") system.cls = system_class_from_string(value);
    else if (key == "d") system.d = static_cast<int>(to_int(value, dotted));
    else if (key == "n") system.n = static_cast<int>(to_int(value, dotted));
    else if (key == "n1") system.n1 = static_cast<int>(to_int(value, dotted));
    else if (key == "n2") system.n2 = static_cast<int>(to_int(value, dotted));
    else if (key == "kernel" || key == "kernel_11" || key == "kernel_12" ||
             key == "kernel_21" || key == "kernel_22")
      system.kernels[key] = parse_kernel(value, dotted);
    else if (key == "domain_floor") system.domain_floor = to_double(value, dotted);
    else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "data") {
    if (key == "L") config.L = static_cast<int>(to_int(value, dotted));
    else if (key == "L_density") config.L_density = static_cast<int>(to_int(value, dotted));
    else if (key == "J") config.J = static_cast<int>(to_int(value, dotted));
    else if (key == "T") config.T = to_double(value, dotted);
    else if (key == "noise_sigma") config.sigma_noise = to_double(value, dotted);
    else if (key == "mu0" || key == "mu0_1") config.laws.position[0] = parse_law(value, dotted);
    else if (key == "mu0_2") config.laws.position[1] = parse_law(value, dotted);
    else if (key == "mu0_velocity" || key == "mu0_velocity_1") {
      if (!config.laws.velocity) config.laws.velocity.emplace();
      (*config.laws.velocity)[0] = parse_law(value, dotted);
      if (key == "mu0_velocity") (*config.laws.velocity)[1] = parse_law(value, dotted);
    } else if (key == "mu0_velocity_2") {
      if (!config.laws.velocity) config.laws.velocity.emplace();
      (*config.laws.velocity)[1] = parse_law(value, dotted);
    } else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "features") {
    if (key == "N") config.features.N = static_cast<int>(to_int(value, dotted));
    else if (key == "N_11") config.features.n_grid[0] = static_cast<int>(to_int(value, dotted));
    else if (key == "N_12") config.features.n_grid[1] = static_cast<int>(to_int(value, dotted));
    else if (key == "N_21") config.features.n_grid[2] = static_cast<int>(to_int(value, dotted));
    else if (key == "N_22") config.features.n_grid[3] = static_cast<int>(to_int(value, dotted));
    else if (key == "theta_variance") config.features.theta_variance = to_double(value, dotted);
    else if (key == "family") {
      if (value == "fourier") config.features.fourier = true;
      else if (value == "radial") config.features.fourier = false;
      else throw ConfigError("key '" + dotted + "': family is radial or fourier");
    } else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "integrate") {
    if (key == "rel_tol") config.integrator.rel_tol = to_double(value, dotted);
    else if (key == "abs_tol") config.integrator.abs_tol = to_double(value, dotted);
    else if (key == "max_step") config.integrator.max_step = to_double(value, dotted);
    else if (key == "max_steps") config.integrator.max_steps = to_int(value, dotted);
    else if (key == "method") {
      if (value == "rk45") config.integrator.method = IntegratorSettings::Method::AdaptiveRK45;
      else if (value == "rk4") config.integrator.method = IntegratorSettings::Method::FixedRK4;
      else throw ConfigError("key '" + dotted + "': method is rk45 or rk4");
    } else if (key == "fixed_step") config.integrator.fixed_step = to_double(value, dotted);
    else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "solver") {
    if (key == "kind") config.solver.kind = parse_solver(value, dotted);
    else if (key == "sparsity") config.solver.sparsity = static_cast<int>(to_int(value, dotted));
    else if (key == "lambda") config.solver.lambda = to_double(value, dotted);
    else if (key == "max_iters") config.solver.max_iters = static_cast<int>(to_int(value, dotted));
    else if (key == "compare_rre_srre") config.solver.compare_rre_srre = to_bool(value, dotted);
    else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "eval") {
    if (key == "T_tilde") config.T_tilde = to_double(value, dotted);
    else if (key == "trials") config.trials = static_cast<int>(to_int(value, dotted));
    else if (key == "grid_points") config.grid_points = static_cast<int>(to_int(value, dotted));
    else if (key == "bins") config.bins = static_cast<int>(to_int(value, dotted));
    else if (key == "curve_points") config.curve_points = static_cast<int>(to_int(value, dotted));
    else if (key == "tabulate_learned") {
      if (value == "auto") config.tabulate_learned = ExperimentConfig::Tabulate::Auto;
      else if (value == "on") config.tabulate_learned = ExperimentConfig::Tabulate::On;
      else if (value == "off") config.tabulate_learned = ExperimentConfig::Tabulate::Off;
      else throw ConfigError("key '" + dotted + "': tabulate_learned is auto, on, or off");
    } else if (key == "tabulate_resolution")
      config.tabulate_resolution = static_cast<int>(to_int(value, dotted));
    else if (key == "include_endpoints") config.include_endpoints = to_bool(value, dotted);
    else if (key == "test_seed") {
      config.test_seed = static_cast<std::uint64_t>(to_int(value, dotted));
      config.has_test_seed = true;
    } else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "run") {
    if (key == "seed") config.seed = static_cast<std::uint64_t>(to_int(value, dotted));
    else if (key == "out") config.out_dir = value;
    else if (key == "threads") config.threads = static_cast<int>(to_int(value, dotted));
    else if (key == "write_train_data") config.write_train_data = to_bool(value, dotted);
    else if (key == "simulate_with_noise") config.simulate_with_noise = to_bool(value, dotted);
    else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  if (section == "sweep") {
    if (key == "s_list") {
      config.sweep_sparsity.clear();
      for (double v : to_doubles(value, dotted))
        config.sweep_sparsity.push_back(static_cast<int>(v));
    } else throw ConfigError("unknown config key '" + dotted + "'");
    return;
  }
  throw ConfigError("unknown config key '" + dotted + "'");
}

ExperimentConfig ConfigBuilder::finish() {
  if (system.touched) {
    if (!system.cls) throw ConfigError("custom systems need system.class");
    const bool heterog = is_heterogeneous(*system.cls);
    if (heterog) {
      if (!system.n1 || !system.n2)
        throw ConfigError("heterogeneous systems need system.n1 and system.n2");
      std::vector<int> types;
      types.insert(types.end(), *system.n1, 0);
      types.insert(types.end(), *system.n2, 1);
      std::array<Kernel, 4> grid = {Kernel::zero(), Kernel::zero(), Kernel::zero(),
                                    Kernel::zero()};
      const char* names[4] = {"kernel_11", "kernel_12", "kernel_21", "kernel_22"};
      for (int i = 0; i < 4; ++i) {
        auto it = system.kernels.find(names[i]);
        if (it != system.kernels.end()) grid[i] = it->second;
      }
      config.system = SystemSpec::heterogeneous(system.d, std::move(types), grid);
    } else {
      if (!system.n) throw ConfigError("homogeneous systems need system.n");
      auto it = system.kernels.find("kernel");
      if (it == system.kernels.end())
        throw ConfigError("homogeneous systems need system.kernel");
      config.system = SystemSpec::homogeneous(*system.cls, system.d, *system.n, it->second);
    }
    if (system.domain_floor)
      for (auto& k : config.system.kernels) k.set_domain_floor(*system.domain_floor);
  }
  config.validate();
  return config;
}

}  // namespace

int ExperimentConfig::forecast_grid_points() const {
  if (grid_points > 0) return grid_points;
  // Keep the training sampling interval over the longer horizon.
  const double ratio = T_tilde / T;
  const long long points = std::llround(static_cast<double>(J - 1) * ratio) + 1;
  return static_cast<int>(std::clamp<long long>(points, J, 200000));
}

void ExperimentConfig::validate() const {
  system.validate();
  if (L < 1 || L_density < 1) throw ConfigError("L and L_density must be >= 1");
  if (J < 3) throw ConfigError("J must be >= 3");
  if (is_second_order(system.cls) && J < 5)
    throw ConfigError("second-order systems need J >= 5");
  if (!(T > 0)) throw ConfigError("T must be > 0");
  if (!(T_tilde >= T)) throw ConfigError("T_tilde must be >= T");
  if (sigma_noise < 0) throw ConfigError("noise_sigma must be >= 0");
  if (trials < 1) throw ConfigError("eval.trials must be >= 1");
  if (bins < 1) throw ConfigError("eval.bins must be >= 1");
  if (curve_points < 2) throw ConfigError("eval.curve_points must be >= 2");
  integrator.validate();
  const bool heterog = is_heterogeneous(system.cls);
  if (heterog) {
    int total = 0;
    for (int c : features.n_grid) {
      if (c < 0) throw ConfigError("feature block sizes must be >= 0");
      total += c;
    }
    if (total < 1) throw ConfigError("heterogeneous runs need a feature N-grid");
    if (features.fourier) throw ConfigError("the Fourier baseline is first-order homogeneous only");
  } else if (features.N < 1) {
    throw ConfigError("features.N must be >= 1");
  }
  if (!(features.theta_variance > 0)) throw ConfigError("theta_variance must be > 0");
  if (solver.kind == SolverKind::Htp || solver.compare_rre_srre) {
    const int total = heterog ? features.n_grid[0] + features.n_grid[1] + features.n_grid[2] +
                                    features.n_grid[3]
                              : features.N;
    if (solver.sparsity < 1 || solver.sparsity > total)
      throw ConfigError("solver.sparsity must be in [1, N]");
  }
  if (solver.kind == SolverKind::Ridge && solver.lambda < 0)
    throw ConfigError("solver.lambda must be >= 0");
  for (int s : sweep_sparsity)
    if (s < 1) throw ConfigError("sweep sparsity levels must be >= 1");
}

ExperimentConfig config_from_preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "lennard-jones") {
    c.system = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 7,
                                       Kernel::lennard_jones(10.0, 1.0));
    c.laws.position[0] = InitialConditionLaw::gaussian();
    c.L = 100; c.L_density = 2000; c.J = 150;
    c.T = 0.01; c.T_tilde = 0.5; c.sigma_noise = 0.001;
    c.features.N = 1000; c.features.theta_variance = 35.0;
    c.solver.kind = SolverKind::Htp; c.solver.sparsity = 150;
    c.integrator.max_step = 1e-3;
    return c;
  }
  if (name == "cucker-smale") {
    c.system = SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, 2, 10,
                                       Kernel::cucker_smale());
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(2), hi = Eigen::VectorXd::Constant(2, 100.0);
    c.laws.position[0] = InitialConditionLaw::box(lo, hi);
    c.laws.velocity.emplace();
    (*c.laws.velocity)[0] = InitialConditionLaw::box(lo, hi);
    (*c.laws.velocity)[1] = (*c.laws.velocity)[0];
    c.L = 50; c.L_density = 2000; c.J = 200;
    c.T = 0.25; c.T_tilde = 0.5; c.sigma_noise = 0.01;
    c.features.N = 1000; c.features.theta_variance = 1.0;
    c.solver.kind = SolverKind::Htp; c.solver.sparsity = 500;
    return c;
  }
  if (name == "predator-prey") {
    std::vector<int> types(9, 0);
    types.insert(types.end(), 1, 1);
    c.system = SystemSpec::heterogeneous(
        2, std::move(types),
        {Kernel::prey_prey(), Kernel::prey_predator(), Kernel::predator_prey(),
         Kernel::predator_predator()});
    c.laws.position[0] = InitialConditionLaw::ring(0.5, 1.5);
    c.laws.position[1] = InitialConditionLaw::disk(0.1);
    c.L = 50; c.L_density = 2000; c.J = 200;
    c.T = 5.0; c.T_tilde = 10.0; c.sigma_noise = 0.001;
    c.features.n_grid = {500, 500, 500, 50};
    c.features.theta_variance = 30.0;
    c.solver.kind = SolverKind::Htp; c.solver.sparsity = 400;
    return c;
  }
  if (name == "sheep-food") {
    // Type 1 = sheep (strip, movers), type 2 = food (heart, g21 = g22 = 0).
    std::vector<int> types(20, 0);
    types.insert(types.end(), 40, 1);
    c.system = SystemSpec::heterogeneous(
        2, std::move(types),
        {Kernel::sheep_sheep(), Kernel::sheep_food_attraction(), Kernel::zero(),
         Kernel::zero()});
    c.laws.position[0] = InitialConditionLaw::strip(-5.0, 5.0, -10.0, -9.0);
    c.laws.position[1] = InitialConditionLaw::heart(5.0);
    c.L = 50; c.L_density = 1000; c.J = 600;
    c.T = 100.0; c.T_tilde = 400.0; c.sigma_noise = 0.001;
    c.features.n_grid = {500, 500, 50, 50};
    c.features.theta_variance = 10.0;
    c.solver.kind = SolverKind::Htp; c.solver.sparsity = 600;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (available: lennard-jones, cucker-smale, "
                    "predator-prey, sheep-food)");
}

std::vector<std::string> preset_names() {
  return {"lennard-jones", "cucker-smale", "predator-prey", "sheep-food"};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());

  // First pass: collect (line, section.key, value), resolving the preset.
  std::string line, section;
  std::vector<std::tuple<int, std::string, std::string>> entries;
  std::optional<std::string> preset;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find_first_of("#;")));
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed section");
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected `key = value`");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const std::string dotted = section.empty() ? key : section + "." + key;
    if (dotted == "system.preset" || dotted == "preset") {
      if (!entries.empty() || preset)
        throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                          ": preset must be the first setting");
      preset = value;
      continue;
    }
    entries.emplace_back(lineno, dotted, value);
  }

  ConfigBuilder builder;
  if (preset) {
    builder.config = config_from_preset(*preset);
    builder.from_preset = true;
  }
  for (const auto& [ln, key, value] : entries) {
    if (builder.from_preset && key.rfind("system.", 0) == 0)
      throw ConfigError(path.string() + ":" + std::to_string(ln) +
                        ": presets fix the system section (override data/solver/eval keys instead)");
    try {
      builder.apply(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  return builder.finish();
}

void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value) {
  ConfigBuilder builder;
  builder.config = std::move(config);
  builder.from_preset = !builder.config.preset.empty();
  if (builder.from_preset && dotted_key.rfind("system.", 0) == 0)
    throw ConfigError("presets fix the system section; cannot override '" + dotted_key + "'");
  builder.apply(dotted_key, value);
  config = builder.finish();
}

}  // namespace rfk
