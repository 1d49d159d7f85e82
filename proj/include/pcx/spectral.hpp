#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "pcx/grid.hpp"
#include "pcx/increments.hpp"

namespace pcx {

/// The scalar spectral factor of a d-th increment with step tau:
///   kernel(lambda) = |1 - e^{i lambda tau}|^{2d} / lambda^{2d}
///                  = (tau * sinc(tau*lambda/2))^{2d},
/// continuously extended to tau^{2d} at lambda = 0.  `phi` and `psi` are the
/// one-sided factors (1-e^{-i lambda tau})^d/(i lambda)^d and its reciprocal
/// twin (-i lambda)^d/(1-e^{i lambda tau})^d; |phi|^2 = kernel and phi*psi =
/// e^{-i d tau lambda}.
struct IncrementKernel {
  int d = 1;
  int tau = 1;

  double operator()(double lambda) const;
  Complex phi(double lambda) const;
  Complex psi(double lambda) const;

  /// Mixed-step factor (1-e^{-i tau1 lambda})^d (1-e^{i tau2 lambda})^d / lambda^{2d}.
  Complex mixed(double lambda, int tau1, int tau2) const;
};

/// K x K Hermitian PSD matrix function on [-pi, pi).  A model may be declared
/// through the density of the generated increment sequence instead of f
/// itself (increment_matched); then f(lambda) = base(lambda) / kernel(lambda).
class SpectralDensityModel {
 public:
  enum class Kind { constant, scalar_rational, diagonal_rational, white_increment_matched, tabulated };

  struct Rational {
    Eigen::VectorXd ma{Eigen::VectorXd::Ones(1)};  // coefficients of e^{-i lambda k}
    Eigen::VectorXd ar{Eigen::VectorXd::Ones(1)};
    double scale = 1.0;
    double eval(double lambda) const;
  };

  static SpectralDensityModel constant(Eigen::MatrixXcd f0);
  static SpectralDensityModel white_increment_matched(int K, IncrementKernel kernel);
  static SpectralDensityModel scalar_rational(Rational r, int K, bool increment_matched,
                                              std::optional<IncrementKernel> kernel = {});
  static SpectralDensityModel diagonal_rational(std::vector<Rational> entries, bool increment_matched,
                                                std::optional<IncrementKernel> kernel = {});
  /// Diagonal table on a lambda grid, linearly interpolated, clamped at the ends.
  static SpectralDensityModel tabulated(Eigen::VectorXd lambda, Eigen::MatrixXd diag_values,
                                        bool increment_matched,
                                        std::optional<IncrementKernel> kernel = {});

  Kind kind() const { return kind_; }
  int dimension() const { return K_; }
  bool increment_matched() const { return increment_matched_; }

  /// f(lambda).
  Eigen::MatrixXcd eval(double lambda) const;
  /// kernel(lambda) * f(lambda), evaluated without the 0/0 at kernel zeros
  /// when the model is increment-matched with the same kernel.
  Eigen::MatrixXcd increment_density(double lambda, const IncrementKernel& kernel) const;

  bool is_diagonal() const;

  /// Hermitian/PSD spot checks plus the f(-lambda) = conj(f(lambda)) symmetry
  /// expected of real-valued processes.  Throws on violation.
  void validate(const QuadratureGrid& grid = QuadratureGrid{64}) const;

 private:
  Kind kind_ = Kind::constant;
  int K_ = 1;
  bool increment_matched_ = false;
  std::optional<IncrementKernel> kernel_;
  Eigen::MatrixXcd constant_{Eigen::MatrixXcd::Identity(1, 1)};
  std::vector<Rational> rationals_;
  Eigen::VectorXd tab_lambda_;
  Eigen::MatrixXd tab_values_;

  Eigen::MatrixXcd base_eval(double lambda) const;
};

/// J x J grid of K x K blocks, block (j, l) = G_{j-l}, G_{-m} = G_m^H.
struct BlockToeplitzOperator {
  int K = 1;
  int J = 1;
  std::vector<Eigen::MatrixXcd> generators;  // G_0 .. G_{J-1}

  Eigen::MatrixXcd block(int j, int l) const;
  Eigen::MatrixXcd dense() const;
};

/// Increment density g and its inverse tabulated on the quadrature grid.
struct DensityTable {
  Eigen::VectorXd lambda;
  std::vector<Eigen::MatrixXcd> g;
  std::vector<Eigen::MatrixXcd> g_inv;
  int K = 1;
  double weight = 0.0;  // node spacing

  int nodes() const { return static_cast<int>(lambda.size()); }
};

/// Evaluate g = kernel*f on the grid and invert per node by Hermitian
/// factorization.  Nodes whose smallest eigenvalue falls below 1e-12 of the
/// global largest raise NearSingularDensityError naming the node.
DensityTable tabulate_increment_density(const SpectralDensityModel& f, const IncrementKernel& kernel,
                                        const QuadratureGrid& grid);

/// Same inversion policy for an externally supplied diagonal table.
DensityTable table_from_diagonal(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& g_diag);

Eigen::MatrixXcd eval_increment_density(const SpectralDensityModel& f, const IncrementKernel& kernel,
                                        double lambda);

struct MinimalityReport {
  bool finite = false;
  double value = 0.0;
  bool converged = false;
  double refined_value = 0.0;
};

/// Quadrature of (1/2pi) Tr[g^{-1}] at M and 2M nodes; converged when the
/// relative change is below 1e-4 and finite when additionally the value stays
/// under the divergence ceiling.
MinimalityReport check_minimality(const SpectralDensityModel& f, const IncrementKernel& kernel,
                                  const QuadratureGrid& grid, double divergence_ceiling = 1e8);

/// Fourier coefficient blocks of g^{-1}:
///   G_m = (1/2pi) integral e^{-i lambda m} g^{-1}(lambda) d lambda, 0 <= m < J.
/// Verifies the minimality condition first (PreconditionError on failure).
BlockToeplitzOperator fourier_block_coeffs(const SpectralDensityModel& f, const IncrementKernel& kernel,
                                           int J, const QuadratureGrid& grid);

/// Variant for a pre-tabulated density (no minimality re-check).
BlockToeplitzOperator fourier_blocks_from_table(const DensityTable& table, int J);

/// Structural function R(j; tau1, tau2) of the generated increment sequence.
Eigen::MatrixXcd structural_function(const SpectralDensityModel& f, const IncrementParams& params,
                                     int j, int tau1, int tau2, const QuadratureGrid& grid);

/// R(m) for m = 0..max_lag at tau1 = tau2 = params.tau, sharing one sweep
/// over the quadrature nodes.
std::vector<Eigen::MatrixXcd> structural_function_batch(const SpectralDensityModel& f,
                                                        const IncrementParams& params, int max_lag,
                                                        const QuadratureGrid& grid);

std::vector<Eigen::MatrixXcd> structural_function_batch(const DensityTable& table, int max_lag);

}  // namespace pcx
