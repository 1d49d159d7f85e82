#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "pcx/errors.hpp"

namespace pcx {

using Complex = std::complex<double>;

/// Increment order d, period T, step multiplier tau (physical step tau*T),
/// and the two truncation orders shared by every transform.
struct IncrementParams {
  int d = 1;
  double T = 1.0;
  int tau = 1;
  int K = 1;
  int J = 32;

  double step() const { return tau * T; }
  void validate() const;
};

/// Signed frequency carried by basis index k (1-based): 0, +1, -1, +2, -2, ...
inline int basis_frequency(int k) {
  int half = k / 2;
  return (k % 2 == 0) ? half : -half;
}

/// Samples of a function on a uniform grid covering [t_min, t_max], both ends
/// included.  T and tau*T are required to be integer multiples of delta_t
/// wherever an operation depends on them.
template <typename Scalar>
struct ProcessPathT {
  double t_min = 0.0;
  double delta_t = 1.0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;

  int size() const { return static_cast<int>(values.size()); }
  double t_max() const { return t_min + delta_t * (size() - 1); }
  double time_at(int i) const { return t_min + i * delta_t; }

  int index_of(double t) const {
    double pos = (t - t_min) / delta_t;
    int i = static_cast<int>(std::lround(pos));
    if (std::abs(pos - i) > 1e-9)
      throw GridMismatchError("time " + std::to_string(t) + " is not on the sample grid");
    if (i < 0 || i >= size())
      throw DomainError("time " + std::to_string(t) + " outside sampled range");
    return i;
  }

  Scalar at_time(double t) const { return values[index_of(t)]; }
};

using ProcessPath = ProcessPathT<double>;
using ComplexPath = ProcessPathT<Complex>;

/// One period-length piece of a path, re-indexed to u in [0, T).  `closing`
/// holds the value at u = T (the first sample of the next block) so integrals
/// over the closed period are available to the trapezoid rule.
template <typename Scalar>
struct BlockFunctionT {
  int block_index = 0;
  double delta_t = 1.0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> samples;
  Scalar closing{};

  double period() const { return delta_t * samples.size(); }
};

using BlockFunction = BlockFunctionT<double>;
using ComplexBlockFunction = BlockFunctionT<Complex>;

/// Ordered list of K-dimensional complex coefficient vectors, stored as the
/// columns of a K x length matrix.  Entry k of a block carries the signed
/// frequency basis_frequency(k); under this arrangement entry k of a
/// coefficient block multiplies component k of the generated increment
/// sequence directly, with no further index shuffling anywhere downstream.
struct BlockVector {
  Eigen::MatrixXcd blocks;  // K rows, one column per block index j = 0,1,...

  BlockVector() = default;
  explicit BlockVector(Eigen::MatrixXcd m) : blocks(std::move(m)) {}
  static BlockVector zero(int K, int length) {
    return BlockVector(Eigen::MatrixXcd::Zero(K, length));
  }

  int dimension() const { return static_cast<int>(blocks.rows()); }
  int length() const { return static_cast<int>(blocks.cols()); }

  Eigen::VectorXcd flattened() const;
  static BlockVector from_flattened(const Eigen::VectorXcd& v, int K);

  /// Sum of column norms (the summability functional).
  double total_norm() const;
  /// Largest column norm.
  double sup_norm() const;

  /// Zero-pad (or keep) to at least `length` blocks.
  BlockVector padded(int length) const;
  /// Drop trailing blocks once their cumulative norm falls below
  /// rel_tol * total_norm().  Always keeps at least one block.
  BlockVector tail_truncated(double rel_tol = 1e-12) const;
};

/// Coefficient function a(t) sampled on a uniform grid over [0, support_end],
/// plus the relative tail tolerance used when truncating block expansions.
struct CoefficientFunction {
  ProcessPath samples;
  double tail_tolerance = 1e-12;

  double support_end() const { return samples.t_max(); }
};

/// How sampled coefficient functions treat the jump points introduced by
/// their floor-function cutoffs.  `literal` evaluates the defining formula;
/// `averaged` replaces each breakpoint sample by the mean of its one-sided
/// limits, which is what piecewise application of the trapezoid rule needs.
enum class BreakpointRule { literal, averaged };

// --- increment operators ---------------------------------------------------

/// d-fold backward difference with the given step: sum_l (-1)^l C(d,l) x(t - l*step).
/// The output grid is the input grid truncated on the left by d*step.
template <typename Scalar>
ProcessPathT<Scalar> increment_path(const ProcessPathT<Scalar>& path, int d, double step);

/// Split a path into period-T blocks.  The path must start on a multiple of T
/// and span a whole number of periods; a trailing closing sample is used when
/// present (sample count n*(T/dt) + 1), otherwise the closure wraps
/// periodically within each available block.
template <typename Scalar>
std::vector<BlockFunctionT<Scalar>> block_decompose(const ProcessPathT<Scalar>& path, double T);

/// Inner products of a block against the first K period-T basis functions,
/// entry k = (1/sqrt(T)) * integral block(v) exp(-2*pi*i*basis_frequency(k)*v/T) dv,
/// by the composite trapezoid rule on the block grid (closed by `closing`).
template <typename Scalar>
Eigen::VectorXcd fourier_block(const BlockFunctionT<Scalar>& block, int K);

/// Coefficient-arrangement transform: entry k uses the e^{+i...} kernel at
/// basis_frequency(k).  For real blocks this is the entrywise conjugate of
/// fourier_block.  Use this when building BlockVectors of functional
/// coefficients (a, b, c).
template <typename Scalar>
Eigen::VectorXcd coefficient_block(const BlockFunctionT<Scalar>& block, int K);

// --- combinatorial coefficients ---------------------------------------------

/// Coefficient of x^k in (sum_j x^j)^d = C(k+d-1, d-1).
long long dcoef(int d, int k);

/// Coefficient of x^k in (sum_j x^{tau*j})^d: dcoef(d, k/tau) when tau | k, else 0.
long long dtau_coef(int d, int tau, int k);

/// Upper-triangular transform b_j = sum_{m >= j} dtau(m - j) * a_m, entrywise
/// on each of the K components; output length equals input length.
BlockVector apply_D_tau(const BlockVector& a, const IncrementParams& params);

// --- time-domain coefficient transforms --------------------------------------

/// b(t) = sum_k a(t + tau*T*k) d(k), k <= floor((horizon_end - t)/(tau*T)).
/// For the finite-horizon problem horizon_end = (N+1)*T; for the truncated
/// infinite-horizon problem pass the support end of a.
double b_coeff(const CoefficientFunction& a, const IncrementParams& params,
               double horizon_end, double t);

/// Finite-horizon b^{tau,N}(t) on [0, (N+1)T].
double b_coeff_finite(const CoefficientFunction& a, const IncrementParams& params,
                      int N, double t);

/// v(t) = sum_{l=ceil(-t/(tau*T))}^{L} (-1)^l C(d,l) b(t + l*tau*T) for
/// t in [-tau*T*d, 0), with L = d, or min(d, floor((horizon_end - t)/(tau*T)))
/// when a finite horizon_end is given.
double v_coeff(const ProcessPath& b_samples, const IncrementParams& params,
               std::optional<double> horizon_end, double t);

/// b sampled on the grid of [0, horizon_end].  Under BreakpointRule::averaged
/// the samples at t = horizon_end - k*tau*T take the mean of one-sided limits.
ProcessPath sample_b(const CoefficientFunction& a, const IncrementParams& params,
                     double horizon_end, BreakpointRule rule = BreakpointRule::literal);

/// v sampled on the closed grid of [-tau*T*d, 0]; the t = 0 sample always uses
/// the limit from the left (the domain of v is half-open on the right).
ProcessPath sample_v(const ProcessPath& b_samples, const IncrementParams& params,
                     std::optional<double> horizon_end,
                     BreakpointRule rule = BreakpointRule::literal);

// --- block pipeline helpers ---------------------------------------------------

/// Fourier coefficient blocks of a, in coefficient arrangement: column j holds
/// the K-vector of block j of a.
BlockVector coefficient_blocks(const CoefficientFunction& a, const IncrementParams& params);

struct SummabilityReport {
  double sum_norm = 0.0;        // sum_j ||a_j||
  double weighted_sum = 0.0;    // sum_j (j+1) ||a_j||
  double tail_fraction = 0.0;   // share of sum_norm dropped by truncation
  bool ok = false;
};

/// Numerical check of the summability conditions on a truncated support.
SummabilityReport check_summability(const BlockVector& a, double rel_tol = 1e-12);

/// Composite trapezoid integral of a sampled path over its full range.
double trapezoid(const ProcessPath& path);
Complex trapezoid(const ComplexPath& path);

}  // namespace pcx
