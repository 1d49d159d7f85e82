#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcx/spectral.hpp"

namespace pcx {

enum class Horizon { infinite, finite };

/// A linear functional of the unobserved future, integral a(t) x(t) dt, to be
/// estimated from observations at t < 0 under the given spectral model.
struct ExtrapolationProblem {
  IncrementParams params;
  CoefficientFunction a;
  Horizon horizon = Horizon::finite;
  int N = 0;  // horizon periods when finite: support [0, (N+1)T]
  SpectralDensityModel density;
  QuadratureGrid grid{4096};

  IncrementKernel kernel() const { return IncrementKernel{params.d, params.tau}; }
};

/// Solve F c = b through a Hermitian eigendecomposition of the assembled
/// operator.  Requires the smallest eigenvalue to exceed 1e-10 * trace / (JK)
/// and the residual to meet 1e-10 * ||b||; violations raise
/// IllConditionedOperatorError carrying the condition estimate.
BlockVector solve_c(const BlockToeplitzOperator& F, const BlockVector& b);

/// <b, c> with the conjugate-symmetric pairing sum_j b_j^H c_j.  Guards the
/// imaginary part at 1e-12 relative and negativity at the -1e-10 floor.
double mse(const BlockVector& b, const BlockVector& c);

/// Frequency-domain filter of the optimal estimate.  With B and C the block
/// polynomials of b and c, h(lambda)^T = phi(lambda) * [B^T - C^T g^{-1}],
/// an algebraically equivalent form of
///   B^T (1-e^{-i lambda tau})^d/(i lambda)^d
///     - (-i lambda)^d/(1-e^{i lambda tau})^d C^T f^{-1}
/// that stays finite at every kernel zero.
struct SpectralCharacteristic {
  BlockVector b;
  BlockVector c;
  IncrementKernel kernel;
  SpectralDensityModel density;
  Eigen::VectorXd lambdas;     // sample nodes
  Eigen::MatrixXcd samples;    // K x nodes
  std::vector<int> skipped_nodes;

  /// Evaluate from the defining formula at an arbitrary frequency.
  Eigen::VectorXcd operator()(double lambda) const;
};

SpectralCharacteristic spectral_characteristic(const ExtrapolationProblem& problem,
                                               const BlockVector& b, const BlockVector& c);

/// Projection residuals: for each j in [j_from, j_to] (all <= -1) the norm of
///   (1/2pi) integral (B phi - h)^T f(lambda) e^{-i j lambda} conj(phi) dlambda,
/// computed from the h sample table.  Zero (to quadrature) iff h is the
/// orthogonal projection of the functional's spectral image.
Eigen::VectorXd orthogonality_residuals(const Eigen::MatrixXcd& h_samples, const BlockVector& b,
                                        const SpectralDensityModel& density,
                                        const IncrementKernel& kernel, const QuadratureGrid& grid,
                                        int j_from = -10, int j_to = -1);

struct EstimateReport {
  double mse = 0.0;
  double mse_refinement_delta = 0.0;  // |mse(2J) - mse(J)| / mse(J)
  BlockVector b;
  BlockVector c;
  ProcessPath v;                          // sampled v on [-tau*T*d, 0]
  Eigen::VectorXd orthogonality_residuals;  // j = -1 .. -10, ascending |j|
  Eigen::VectorXd h_lambdas;
  Eigen::MatrixXcd h_samples;
  int j_used = 0;
  bool summability_ok = true;
  double tail_fraction = 0.0;
  std::vector<int> skipped_nodes;
};

/// Full pipeline: a -> coefficient blocks -> b = D^tau a -> c = F^{-1} b ->
/// mse, spectral characteristic, orthogonality residuals, boundary weights v.
EstimateReport solve_extrapolation(const ExtrapolationProblem& problem);

/// Front half of the pipeline: the blocks b determining the reduced functional.
BlockVector functional_coefficients(const ExtrapolationProblem& problem);

/// Block polynomial sum_j v_j e^{i j lambda} at one frequency or per node (K x nodes).
Eigen::VectorXcd block_polynomial(const BlockVector& v, double lambda);
Eigen::MatrixXcd block_polynomial_samples(const BlockVector& v, const Eigen::VectorXd& lambdas);

}  // namespace pcx
