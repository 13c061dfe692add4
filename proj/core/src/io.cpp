#include "rfk/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rfk/errors.hpp"

namespace rfk {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("bad numeric field '" + s + "' in " + context);
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("bad integer field '" + s + "' in " + context);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path.string());
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_dataset(const std::filesystem::path& path, const TrajectorySet& traj,
                   double t_train) {
  traj.validate();
  std::ofstream out = open_out(path);
  out << "#d=" << traj.d << "\n#n=" << traj.n << "\n#J=" << traj.J << "\n#L=" << traj.L
      << "\n#T=" << format_double(traj.T) << "\n#T_train=" << format_double(t_train)
      << "\n#class=" << to_string(traj.cls) << "\n#types=";
  for (int i = 0; i < traj.n; ++i) {
    if (i) out << ',';
    out << (traj.types.empty() ? 1 : traj.types[i] + 1);
  }
  out << "\n";
  const bool with_velocities = traj.has_velocities();
  out << "traj,step,time,agent,type";
  for (int c = 0; c < traj.d; ++c) out << ",x_" << (c + 1);
  if (with_velocities)
    for (int c = 0; c < traj.d; ++c) out << ",v_" << (c + 1);
  out << "\n";
  for (int l = 0; l < traj.L; ++l) {
    for (int j = 0; j < traj.J; ++j) {
      const Eigen::MatrixXd& x = traj.state(l, j);
      for (int i = 0; i < traj.n; ++i) {
        out << l << ',' << j << ',' << format_double(traj.timestamps[j]) << ',' << i << ','
            << (traj.types.empty() ? 1 : traj.types[i] + 1);
        for (int c = 0; c < traj.d; ++c) out << ',' << format_double(x(i, c));
        if (with_velocities) {
          const Eigen::MatrixXd& v = traj.velocities[static_cast<std::size_t>(l) * traj.J + j];
          for (int c = 0; c < traj.d; ++c) out << ',' << format_double(v(i, c));
        }
        out << "\n";
      }
    }
  }
}

DatasetFile read_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  DatasetFile file;
  TrajectorySet& traj = file.traj;
  std::string line;
  std::vector<int> types_1based;
  bool have_class = false;
  while (in.peek() == '#' && std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed dataset header: " + line);
    const std::string key = line.substr(1, eq - 1);
    const std::string value = line.substr(eq + 1);
    if (key == "d") traj.d = static_cast<int>(parse_long(value, "header d"));
    else if (key == "n") traj.n = static_cast<int>(parse_long(value, "header n"));
    else if (key == "J") traj.J = static_cast<int>(parse_long(value, "header J"));
    else if (key == "L") traj.L = static_cast<int>(parse_long(value, "header L"));
    else if (key == "T") traj.T = parse_double(value, "header T");
    else if (key == "T_train") file.t_train = parse_double(value, "header T_train");
    else if (key == "class") { traj.cls = system_class_from_string(value); have_class = true; }
    else if (key == "types") {
      for (const auto& f : split(value, ','))
        types_1based.push_back(static_cast<int>(parse_long(f, "header types")));
    } else {
      throw ConfigError("unknown dataset header key: " + key);
    }
  }
  if (traj.d < 1 || traj.n < 1 || traj.J < 1 || traj.L < 1 || !have_class)
    throw ConfigError("dataset header incomplete in " + path.string());
  if (is_heterogeneous(traj.cls)) {
    if (static_cast<int>(types_1based.size()) != traj.n)
      throw ConfigError("dataset types header does not cover all agents");
    traj.types.resize(traj.n);
    for (int i = 0; i < traj.n; ++i) traj.types[i] = types_1based[i] - 1;
  }

  if (!std::getline(in, line)) throw ConfigError("dataset missing column header");
  const auto columns = split(line, ',');
  const std::size_t base_cols = 5 + static_cast<std::size_t>(traj.d);
  bool with_velocities = false;
  if (columns.size() == base_cols + traj.d) with_velocities = true;
  else if (columns.size() != base_cols)
    throw ConfigError("dataset column count mismatch in " + path.string());

  traj.timestamps.assign(traj.J, 0.0);
  traj.states.assign(static_cast<std::size_t>(traj.L) * traj.J,
                     Eigen::MatrixXd::Zero(traj.n, traj.d));
  if (with_velocities)
    traj.velocities.assign(static_cast<std::size_t>(traj.L) * traj.J,
                           Eigen::MatrixXd::Zero(traj.n, traj.d));

  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != columns.size())
      throw ConfigError("dataset row with wrong field count: " + line);
    const int l = static_cast<int>(parse_long(fields[0], "traj"));
    const int j = static_cast<int>(parse_long(fields[1], "step"));
    const int i = static_cast<int>(parse_long(fields[3], "agent"));
    if (l < 0 || l >= traj.L || j < 0 || j >= traj.J || i < 0 || i >= traj.n)
      throw ConfigError("dataset row out of range: " + line);
    traj.timestamps[j] = parse_double(fields[2], "time");
    for (int c = 0; c < traj.d; ++c)
      traj.state(l, j)(i, c) = parse_double(fields[5 + c], "x");
    if (with_velocities)
      for (int c = 0; c < traj.d; ++c)
        traj.velocities[static_cast<std::size_t>(l) * traj.J + j](i, c) =
            parse_double(fields[5 + traj.d + c], "v");
    ++rows;
  }
  if (rows != static_cast<std::size_t>(traj.L) * traj.J * traj.n)
    throw ConfigError("dataset row count does not match header dimensions");
  return file;
}

void write_basis(const std::filesystem::path& path, const FeatureBasis& basis) {
  std::ofstream out = open_out(path);
  const bool fourier = basis.family == FeatureBasis::Family::Fourier;
  out << "#N=" << basis.size() << "\n#theta_variance=" << format_double(basis.theta_variance)
      << "\n#class=" << to_string(basis.cls) << "\n#n_context=" << basis.n_context
      << "\n#seed=" << basis.seed << "\n#family=" << (fourier ? "fourier" : "radial")
      << "\n#blocks=" << basis.blocks.count[0] << ',' << basis.blocks.count[1] << ','
      << basis.blocks.count[2] << ',' << basis.blocks.count[3]
      << "\n#trained=" << (basis.has_coefficients() ? 1 : 0) << "\n";
  out << "k,omega,coefficient,block_row,block_col";
  if (fourier) out << ",phase";
  out << "\n";
  const bool trained = basis.has_coefficients();
  for (int k = 0; k < basis.size(); ++k) {
    int a = 0, b = 0;
    if (basis.blocks.heterogeneous) {
      for (int blk = 3; blk >= 0; --blk)
        if (k >= basis.blocks.offset[blk] && basis.blocks.count[blk] > 0) {
          a = blk / 2;
          b = blk % 2;
          break;
        }
    }
    out << k << ',' << format_double(basis.omegas(k)) << ','
        << format_double(trained ? basis.coefficients(k) : 0.0) << ',' << (a + 1) << ','
        << (b + 1);
    if (fourier) out << ',' << format_double(basis.phases(k));
    out << "\n";
  }
}

FeatureBasis read_basis(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  FeatureBasis basis;
  std::string line;
  int n_declared = 0;
  std::array<int, 4> block_counts{0, 0, 0, 0};
  bool have_blocks = false;
  bool trained = true;
  while (in.peek() == '#' && std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed basis header: " + line);
    const std::string key = line.substr(1, eq - 1);
    const std::string value = line.substr(eq + 1);
    if (key == "N") n_declared = static_cast<int>(parse_long(value, "basis N"));
    else if (key == "theta_variance") basis.theta_variance = parse_double(value, "theta");
    else if (key == "class") basis.cls = system_class_from_string(value);
    else if (key == "n_context") basis.n_context = static_cast<int>(parse_long(value, "n_context"));
    else if (key == "seed") basis.seed = static_cast<std::uint64_t>(parse_long(value, "seed"));
    else if (key == "family") {
      if (value == "fourier") basis.family = FeatureBasis::Family::Fourier;
      else if (value != "radial") throw ConfigError("unknown basis family: " + value);
    } else if (key == "blocks") {
      const auto fields = split(value, ',');
      if (fields.size() != 4) throw ConfigError("basis blocks header needs 4 counts");
      for (int i = 0; i < 4; ++i)
        block_counts[i] = static_cast<int>(parse_long(fields[i], "blocks"));
      have_blocks = true;
    } else if (key == "trained") {
      trained = parse_long(value, "trained") != 0;
    } else {
      throw ConfigError("unknown basis header key: " + key);
    }
  }
  if (n_declared < 1 || !have_blocks) throw ConfigError("basis header incomplete");
  basis.blocks = (basis.cls == SystemClass::FirstOrderHeterogeneous)
                     ? BlockLayout::grid(block_counts)
                     : BlockLayout::single(n_declared);

  if (!std::getline(in, line)) throw ConfigError("basis missing column header");
  const bool fourier = basis.family == FeatureBasis::Family::Fourier;
  basis.omegas.resize(n_declared);
  basis.coefficients.resize(n_declared);
  if (fourier) basis.phases.resize(n_declared);
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != (fourier ? 6u : 5u))
      throw ConfigError("basis row with wrong field count: " + line);
    const int k = static_cast<int>(parse_long(fields[0], "basis k"));
    if (k < 0 || k >= n_declared) throw ConfigError("basis row index out of range");
    basis.omegas(k) = parse_double(fields[1], "omega");
    basis.coefficients(k) = parse_double(fields[2], "coefficient");
    if (fourier) basis.phases(k) = parse_double(fields[5], "phase");
    ++rows;
  }
  if (rows != n_declared) throw ConfigError("basis row count mismatch");
  if (!trained) {
    basis.coefficients.resize(0);
  } else {
    // Sparse solutions store exact zeros off-support; recover the support when
    // the coefficient vector is sparse.
    std::vector<int> support;
    for (int k = 0; k < n_declared; ++k)
      if (basis.coefficients(k) != 0.0) support.push_back(k);
    if (static_cast<int>(support.size()) < n_declared) basis.support = std::move(support);
  }
  basis.validate();
  return basis;
}

void write_kernel_curve(const std::filesystem::path& path, const Eigen::VectorXd& r_grid,
                        const Eigen::VectorXd& g_true, const Eigen::VectorXd& g_learned,
                        const Eigen::VectorXd& rho_mass) {
  if (r_grid.size() != g_true.size() || r_grid.size() != g_learned.size() ||
      r_grid.size() != rho_mass.size())
    throw ConfigError("kernel curve arrays must share one grid");
  std::ofstream out = open_out(path);
  out << "r,g_true,g_learned,rho_mass\n";
  for (Eigen::Index i = 0; i < r_grid.size(); ++i)
    out << format_double(r_grid(i)) << ',' << format_double(g_true(i)) << ','
        << format_double(g_learned(i)) << ',' << format_double(rho_mass(i)) << "\n";
}

void write_density(const std::filesystem::path& path, const DensitySet& density) {
  std::ofstream out = open_out(path);
  out << "bin_lo,bin_hi,mass";
  if (density.heterogeneous) out << ",mass_11,mass_12,mass_22";
  out << "\n";
  const auto& overall = density.overall;
  for (Eigen::Index b = 0; b < overall.mass.size(); ++b) {
    out << format_double(overall.bin_edges(b)) << ',' << format_double(overall.bin_edges(b + 1))
        << ',' << format_double(overall.mass(b));
    if (density.heterogeneous)
      for (int p = 0; p < 3; ++p) out << ',' << format_double(density.per_pair[p].mass(b));
    out << "\n";
  }
}

void write_report(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out = open_out(path);
  for (const auto& [key, value] : entries) out << key << '=' << value << "\n";
}

std::uint64_t dataset_checksum(const TrajectorySet& traj) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto feed = [&hash](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ULL;
    }
  };
  for (const auto& x : traj.states)
    feed(x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
  return hash;
}

}  // namespace rfk
