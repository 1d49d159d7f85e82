#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcx/extrapolate.hpp"

namespace pcx {

/// Admissible classes: moment-constrained families (D0) and L1-neighborhood
/// families around a fixed density f1 (D1d).
enum class DensityFamily { D0_1, D0_2, D0_3, D0_4, D1d_1, D1d_2, D1d_3, D1d_4 };

bool is_moment_family(DensityFamily family);
const char* family_name(DensityFamily family);
DensityFamily family_from_name(const std::string& name);

struct DensityClassSpec {
  DensityFamily family = DensityFamily::D0_2;

  // moment data (diagonal usage; entries on the diagonal)
  Eigen::MatrixXd P;       // D0_1
  double p = 0.0;          // D0_2 / D0_4
  Eigen::VectorXd p_k;     // D0_3
  Eigen::MatrixXd B1;      // D0_4, Hermitian PD (diagonal here)
  Eigen::MatrixXd B2;      // D1d_4

  // neighborhood data
  std::optional<SpectralDensityModel> f1;
  double delta = 0.0;          // D1d_2 / D1d_4
  Eigen::VectorXd delta_k;     // D1d_3
  Eigen::MatrixXd delta_ij;    // D1d_1 (diagonal budgets used)

  // solver knobs
  double damping = 0.5;
  int max_iterations = 500;
  double tolerance = 1e-8;
  int multistart = 1;
  bool allow_experimental = false;

  void validate(int K) const;
};

struct LeastFavorableResult {
  DensityFamily family = DensityFamily::D0_2;
  Eigen::VectorXd lambda;        // grid nodes
  Eigen::MatrixXd g0;            // K x nodes: kernel-weighted least favorable density
  SpectralDensityModel f0;       // tabulated model, f0 = g0 / kernel
  Eigen::MatrixXcd C_samples;    // C_tau(e^{i lambda}) under f0, K x nodes
  BlockVector b;
  BlockVector c;
  Eigen::VectorXd multipliers;
  double equation_residual = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double value = 0.0;            // Delta(f0)
  std::vector<Eigen::MatrixXd> alternates;  // distinct converged tables from multi-start
};

/// Mean-square error of the f0-optimal filter when the true density is f:
/// (1/2pi) integral C^T g0^{-1} g g0^{-1} conj(C); linear in f.
double robust_value(const LeastFavorableResult& lf, const SpectralDensityModel& f,
                    const ExtrapolationProblem& problem);

LeastFavorableResult solve_least_favorable_D0(const DensityClassSpec& spec,
                                              const ExtrapolationProblem& problem);
LeastFavorableResult solve_least_favorable_D1delta(const DensityClassSpec& spec,
                                                   const ExtrapolationProblem& problem);

/// Re-solve the optimal filter under an externally supplied diagonal table.
/// Used by negative controls and diagnostics; no fixed-point iteration runs.
LeastFavorableResult least_favorable_from_table(const ExtrapolationProblem& problem,
                                                DensityFamily family,
                                                const Eigen::MatrixXd& g0_table);

struct CertificationReport {
  bool passed = false;
  int n_probes = 0;
  int density_violations = 0;
  int characteristic_violations = 0;
  double worst_density_margin = 0.0;        // max Delta(h0; f) - Delta(h0; f0)
  double worst_characteristic_margin = 0.0; // max Delta(h0; f0) - Delta(h; f0)
  std::vector<double> density_margins;
  std::vector<double> characteristic_margins;
  std::string violating_probe;
};

/// Monte Carlo saddle check: random in-class densities must not beat f0 and
/// random past-supported filter perturbations must not beat h0, to 1e-6.
CertificationReport certify_saddle(const LeastFavorableResult& lf, const DensityClassSpec& spec,
                                   const ExtrapolationProblem& problem, int n_probes,
                                   std::uint64_t seed);

}  // namespace pcx
