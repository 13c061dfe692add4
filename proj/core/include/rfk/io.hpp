#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rfk/datagen.hpp"
#include "rfk/features.hpp"

namespace rfk {

/// Shortest 17-significant-digit decimal; round-trips doubles bit-exactly.
std::string format_double(double value);

/// Dataset CSV: `#key=value` header lines (d, n, J, L, T, T_train, class, types)
/// then `traj,step,time,agent,type,x_1..x_d[,v_1..v_d]` rows. The T_train header
/// marks the forecast transition time (equal to T for plain simulations).
void write_dataset(const std::filesystem::path& path, const TrajectorySet& traj,
                   double t_train);
struct DatasetFile {
  TrajectorySet traj;
  double t_train = 0;
};
DatasetFile read_dataset(const std::filesystem::path& path);

/// Basis CSV: `k,omega,coefficient,block_row,block_col[,phase]` with header
/// comments carrying N, theta variance, class, n_context, seed, family.
void write_basis(const std::filesystem::path& path, const FeatureBasis& basis);
FeatureBasis read_basis(const std::filesystem::path& path);

/// Kernel curves on a common r grid: `r,g_true,g_learned,rho_mass`.
void write_kernel_curve(const std::filesystem::path& path, const Eigen::VectorXd& r_grid,
                        const Eigen::VectorXd& g_true, const Eigen::VectorXd& g_learned,
                        const Eigen::VectorXd& rho_mass);

/// Density histogram: `bin_lo,bin_hi,mass` (heterogeneous sets add per-pair columns).
void write_density(const std::filesystem::path& path, const DensitySet& density);

/// Flat `key=value` report, one entry per line, insertion order preserved.
void write_report(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& entries);

/// FNV-1a over the raw state bytes; stable fingerprint for shared-data checks.
std::uint64_t dataset_checksum(const TrajectorySet& traj);

}  // namespace rfk
