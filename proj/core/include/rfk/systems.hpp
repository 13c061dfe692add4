#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rfk/kernels.hpp"

namespace rfk {

enum class SystemClass {
  FirstOrderHomogeneous,
  FirstOrderHeterogeneous,
  SecondOrderHomogeneous,
};

bool is_second_order(SystemClass c);
bool is_heterogeneous(SystemClass c);
const char* to_string(SystemClass c);
SystemClass system_class_from_string(const std::string& s);

/// Snapshot of all agents. velocities is n x d for second-order systems and
/// empty otherwise.
struct AgentState {
  Eigen::MatrixXd positions;   // n x d
  Eigen::MatrixXd velocities;  // n x d (second-order only)
  double time = 0.0;
};

/// An interacting system: class, dimensions, agent types, and its kernel table
/// (one kernel for homogeneous classes, a 2x2 grid for heterogeneous ones,
/// row-major [g11 g12 g21 g22]). Types are 0-based internally.
struct SystemSpec {
  SystemClass cls = SystemClass::FirstOrderHomogeneous;
  int d = 0;
  int n = 0;
  std::vector<int> types;       // size n, values in {0,1}; empty for homogeneous
  std::vector<Kernel> kernels;  // size 1 or 4

  static SystemSpec homogeneous(SystemClass cls, int d, int n, Kernel kernel);
  static SystemSpec heterogeneous(int d, std::vector<int> types,
                                  std::array<Kernel, 4> grid);

  int count_of_type(int t) const;
  /// Kernel governing how type-b agents influence type-a agents.
  const Kernel& kernel(int a, int b) const;
  const Kernel& kernel() const { return kernels.front(); }
  void validate() const;
};

struct RhsStats {
  std::int64_t clamped = 0;  // pair distances clamped at the kernel domain floor
};

/// dx_i/dt = (1/n) sum_{i'} g(||r_{i',i}||) r_{i',i}. Skips the i'=i term.
Eigen::MatrixXd rhs_first_order_homog(const AgentState& state, const SystemSpec& spec,
                                      RhsStats* stats = nullptr);

/// dx_i/dt = sum_{i'} (1/n_{type(i')}) g_{type(i) type(i')}(||r||) r.
Eigen::MatrixXd rhs_first_order_heterog(const AgentState& state, const SystemSpec& spec,
                                        RhsStats* stats = nullptr);

/// d2x_i/dt2 = (1/n) sum_{i'} g(||r_{i',i}||) (v_{i'} - v_i). Needs velocities.
Eigen::MatrixXd rhs_second_order_homog(const AgentState& state, const SystemSpec& spec,
                                       RhsStats* stats = nullptr);

/// Dispatches on spec.cls; returns velocities (first-order) or accelerations.
Eigen::MatrixXd eval_rhs(const AgentState& state, const SystemSpec& spec,
                         RhsStats* stats = nullptr);

}  // namespace rfk
