#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pcx/extrapolate.hpp"

namespace pcx {

/// Discrete spectral synthesis setup: independent complex Gaussian weights per
/// frequency cell with covariance g(lambda_m) * dlambda / (2 pi),
/// Hermitian-paired across +/- lambda so real-process symmetry is preserved.
struct SynthesisConfig {
  SpectralDensityModel density;
  IncrementParams params;
  int n_blocks = 64;
  int n_paths = 10000;
  std::uint64_t seed = 0;
  int spectral_grid = 0;  // M_s; 0 selects the smallest power of two >= max(8 n_blocks, 256)
};

/// Per-node matrix square roots are factored once; each path then streams its
/// Gaussian weights through one inverse FFT per component.  Identical
/// (seed, path_index) pairs reproduce bit-identically on any thread layout.
class IncrementSynthesizer {
 public:
  IncrementSynthesizer(const SynthesisConfig& cfg);

  /// Sequence samples for block indices j = j_min .. j_min + count - 1 (K x count).
  Eigen::MatrixXcd path(int path_index, int j_min, int count) const;

  int spectral_nodes() const { return Ms_; }

 private:
  int Ms_ = 0;
  int K_ = 1;
  std::uint64_t seed_ = 0;
  Eigen::VectorXd lambda_;
  std::vector<Eigen::MatrixXcd> factor_;  // sqrt(g * dlambda / 2pi) at each node
};

/// Synthesized generated-increment sequence for blocks j = j_min .. j_min + n_blocks - 1.
Eigen::MatrixXcd synthesize_increments(const SynthesisConfig& cfg, int path_index = 0,
                                       int j_min = 0);

/// Gaussian conditioning of the functional on the increment past j = -1..-window.
struct GaussianConditioning {
  double variance = 0.0;  // Var(B)
  double mse = 0.0;       // Var(B) - explained part
  Eigen::VectorXcd weights;  // projection weights on the stacked past (window*K)
  bool ridge_applied = false;
};

/// R holds the sequence covariances R(m), m = 0..max_lag (R(-m) = R(m)^H).
GaussianConditioning condition_on_past(const std::vector<Eigen::MatrixXcd>& R,
                                       const BlockVector& b, int window);

struct OracleReport {
  double analytic_mse = 0.0;
  double oracle_mse = 0.0;
  double empirical_mse = 0.0;
  double standard_error = 0.0;
  int window = 0;
  double window_refinement_delta = 0.0;
  bool window_converged = false;
  bool ridge_applied = false;
  bool agree_analytic_oracle = false;
  bool agree_empirical = false;
  bool has_empirical = false;
  int n_paths = 0;
};

/// Ground-truth mean-square error by conditioning the functional on the past
/// increment coordinates; reports the half-window refinement as the
/// convergence diagnostic and the analytic value alongside.
OracleReport oracle_mmse(const ExtrapolationProblem& problem, int window);

/// Monte Carlo realization: applies the conditioning weights to synthesized
/// paths and compares the empirical mean-square residual against both values.
OracleReport empirical_mse(const ExtrapolationProblem& problem, const SynthesisConfig& cfg,
                           int window, int threads = 1);

}  // namespace pcx
