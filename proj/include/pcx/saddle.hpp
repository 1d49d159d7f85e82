#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "pcx/increments.hpp"

namespace pcx {

/// Gram-type block operator with entries
///   Q(p, q) = sum_{s=0}^{min(N-p, N-q)} b_{s+p} b_{s+q}^H,  p, q = 0..N.
struct SaddleOperator {
  int K = 1;
  int N = 0;
  Eigen::MatrixXcd dense;  // (N+1)K x (N+1)K, Hermitian PSD

  Eigen::MatrixXcd block(int p, int q) const {
    if (p < 0 || q < 0 || p > N || q > N) throw DimensionError("block index outside [0, N]");
    return dense.block(p * K, q * K, K, K);
  }
};

/// Assemble Q from the N+1 blocks of b.
SaddleOperator build_Q(const BlockVector& b, int N);

/// Top eigenpair of Q: the greatest attainable mean-square error over
/// power-bounded increment sequences is power_bound * nu^2, attained by the
/// one-sided moving average driven by the eigenvector blocks.
struct SaddleResult {
  double nu_squared = 0.0;
  BlockVector g;             // eigenvector blocks, ||g||^2 = power_bound
  double power_bound = 1.0;
  double max_error = 0.0;    // power_bound * nu_squared
  bool degenerate = false;   // non-simple top eigenvalue or non-convergence
  int iterations = 0;
  double residual = 0.0;     // ||Q g - nu^2 g|| / (nu^2 ||g||)
};

/// Power iteration with Rayleigh-quotient stopping (relative change < 1e-12,
/// at most 10^4 sweeps), cross-checked against a dense Hermitian eigensolver
/// whenever the operator dimension is at most 256.
SaddleResult top_eigen(const SaddleOperator& Q, double power_bound = 1.0);

/// One-sided moving average of order N driven by orthonormal Gaussian
/// innovations: xi_j = sum_{s=j-N}^{j} g(j-s) eps_1(s).  The innovation
/// vectors have dimension innovation_dim (default K); the kernel acts on the
/// first component, so higher innovation dimensions only widen the recorded
/// noise.
struct MovingAverageSequence {
  BlockVector kernel_blocks;    // g(p), p = 0..N
  int innovation_dim = 1;
  Eigen::MatrixXcd samples;     // K x n_steps, sequence index j = 0..n_steps-1
  Eigen::MatrixXd innovations;  // innovation_dim x (n_steps + N), s = -N..n_steps-1
};

MovingAverageSequence synthesize_least_favorable(const SaddleResult& result, int n_steps,
                                                 std::uint64_t seed, int innovation_dim = 0);

}  // namespace pcx
