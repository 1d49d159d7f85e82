#include "pcx/extrapolate.hpp"

#include <cmath>
#include <numbers>

namespace pcx {

Eigen::VectorXcd block_polynomial(const BlockVector& v, double lambda) {
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(v.dimension());
  const Complex rot = std::polar(1.0, lambda);
  Complex e = 1.0;
  for (int j = 0; j < v.length(); ++j) {
    acc += e * v.blocks.col(j);
    e *= rot;
  }
  return acc;
}

Eigen::MatrixXcd block_polynomial_samples(const BlockVector& v, const Eigen::VectorXd& lambdas) {
  Eigen::MatrixXcd out(v.dimension(), lambdas.size());
  for (int m = 0; m < lambdas.size(); ++m) out.col(m) = block_polynomial(v, lambdas[m]);
  return out;
}

BlockVector solve_c(const BlockToeplitzOperator& F, const BlockVector& b) {
  if (b.dimension() != F.K) throw DimensionError("block size mismatch between operator and rhs");
  if (b.length() != F.J) throw DimensionError("operator order and rhs length differ");
  const int n = F.J * F.K;
  Eigen::MatrixXcd dense = F.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) throw IllConditionedOperatorError("eigendecomposition failed", 0.0);
  const auto& ev = es.eigenvalues();
  double floor = 1e-10 * dense.real().trace() / n;
  if (ev.minCoeff() <= floor)
    throw IllConditionedOperatorError("operator not positive definite at working precision",
                                      ev.maxCoeff() / std::max(ev.minCoeff(), 1e-300));
  Eigen::VectorXcd rhs = b.flattened();
  Eigen::VectorXcd sol = es.eigenvectors() *
                         (es.eigenvectors().adjoint() * rhs).cwiseQuotient(ev.cast<Complex>());
  double resid = (dense * sol - rhs).norm();
  if (resid > 1e-10 * std::max(rhs.norm(), 1e-300))
    throw IllConditionedOperatorError("solve residual exceeds tolerance",
                                      ev.maxCoeff() / ev.minCoeff());
  return BlockVector::from_flattened(sol, F.K);
}

double mse(const BlockVector& b, const BlockVector& c) {
  if (b.dimension() != c.dimension() || b.length() != c.length())
    throw DimensionError("b and c shapes differ");
  Complex val = 0.0;
  for (int j = 0; j < b.length(); ++j) val += b.blocks.col(j).dot(c.blocks.col(j));
  double scale = std::max({std::abs(val), b.total_norm() * c.total_norm(), 1e-300});
  if (std::abs(val.imag()) > 1e-12 * scale)
    throw InconsistencyError("mean square error has a non-negligible imaginary part");
  if (val.real() < -1e-10 * std::max(1.0, scale))
    throw InconsistencyError("mean square error is negative; solve or operator is inconsistent");
  return std::max(val.real(), 0.0);
}

Eigen::VectorXcd SpectralCharacteristic::operator()(double lambda) const {
  Eigen::MatrixXcd g = density.increment_density(lambda, kernel);
  Eigen::VectorXcd B = block_polynomial(b, lambda);
  Eigen::VectorXcd C = block_polynomial(c, lambda);
  // h^T = phi (B^T - C^T g^{-1})  ==>  h = phi (B - g^{-T} C)
  Eigen::VectorXcd y = g.transpose().llt().solve(C);
  return kernel.phi(lambda) * (B - y);
}

SpectralCharacteristic spectral_characteristic(const ExtrapolationProblem& problem,
                                               const BlockVector& b, const BlockVector& c) {
  if (b.dimension() != c.dimension()) throw DimensionError("b and c dimensions differ");
  SpectralCharacteristic h;
  h.b = b;
  h.c = c;
  h.kernel = problem.kernel();
  h.density = problem.density;
  h.lambdas = problem.grid.lambdas();
  const int M = problem.grid.nodes;
  const int K = b.dimension();
  h.samples.resize(K, M);

  std::vector<Eigen::MatrixXcd> g(M);
  double global_max = 0.0;
  std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>> eigs(M);
  for (int m = 0; m < M; ++m) {
    g[m] = problem.density.increment_density(h.lambdas[m], h.kernel);
    eigs[m].compute(g[m]);
    global_max = std::max(global_max, eigs[m].eigenvalues().maxCoeff());
  }
  for (int m = 0; m < M; ++m) {
    double lo = eigs[m].eigenvalues().minCoeff();
    Eigen::VectorXcd B = block_polynomial(b, h.lambdas[m]);
    if (lo <= 1e-12 * global_max) {
      h.skipped_nodes.push_back(m);
      h.samples.col(m).setZero();
      continue;
    }
    Eigen::VectorXcd C = block_polynomial(c, h.lambdas[m]);
    const auto& V = eigs[m].eigenvectors();
    Eigen::MatrixXcd g_inv = V * eigs[m].eigenvalues().cwiseInverse().asDiagonal() * V.adjoint();
    h.samples.col(m) = h.kernel.phi(h.lambdas[m]) * (B - g_inv.transpose() * C);
  }
  return h;
}

Eigen::VectorXd orthogonality_residuals(const Eigen::MatrixXcd& h_samples, const BlockVector& b,
                                        const SpectralDensityModel& density,
                                        const IncrementKernel& kernel, const QuadratureGrid& grid,
                                        int j_from, int j_to) {
  if (j_to > -1 || j_from > j_to) throw DomainError("orthogonality residuals need j_from <= j_to <= -1");
  if (h_samples.cols() != grid.nodes) throw DimensionError("h sample table does not match the grid");
  const int K = static_cast<int>(h_samples.rows());
  const int count = j_to - j_from + 1;
  const double w = grid.spacing() / (2.0 * std::numbers::pi);
  std::vector<Eigen::VectorXcd> acc(count, Eigen::VectorXcd::Zero(K));
  for (int m = 0; m < grid.nodes; ++m) {
    const double lam = grid.node(m);
    const Complex phi = kernel.phi(lam);
    Eigen::MatrixXcd g = density.increment_density(lam, kernel);
    // (B phi - h)^T f conj(phi) = ((B phi - h)/phi)^T g ; row vector as a column
    Eigen::VectorXcd y = block_polynomial(b, lam) - h_samples.col(m) / phi;
    Eigen::VectorXcd row = g.transpose() * y;
    for (int idx = 0; idx < count; ++idx) {
      int j = j_from + idx;
      acc[idx] += (w * std::polar(1.0, -j * lam)) * row;
    }
  }
  // report ordered by increasing |j|: j = -1 first
  Eigen::VectorXd out(count);
  for (int idx = 0; idx < count; ++idx) out[idx] = acc[count - 1 - idx].norm();
  return out;
}

BlockVector functional_coefficients(const ExtrapolationProblem& problem) {
  problem.params.validate();
  BlockVector ablocks = coefficient_blocks(problem.a, problem.params);
  if (problem.horizon == Horizon::finite) {
    if (problem.N < 0) throw DomainError("N must satisfy N >= 0");
    double limit = (problem.N + 1) * problem.params.T;
    if (problem.a.support_end() > limit * (1.0 + 1e-12))
      throw DomainError("finite-horizon functional must be supported on [0, (N+1)T]");
    ablocks = ablocks.padded(problem.N + 1);
  } else {
    ablocks = ablocks.tail_truncated(problem.a.tail_tolerance);
  }
  return apply_D_tau(ablocks, problem.params);
}

EstimateReport solve_extrapolation(const ExtrapolationProblem& problem) {
  problem.params.validate();
  problem.grid.validate_for(problem.params.tau);
  const IncrementKernel kernel = problem.kernel();

  BlockVector ablocks = coefficient_blocks(problem.a, problem.params);
  SummabilityReport summ = check_summability(ablocks, problem.a.tail_tolerance);

  BlockVector b = functional_coefficients(problem);
  const int Jeff = std::max(problem.params.J, b.length());

  MinimalityReport minimality = check_minimality(problem.density, kernel, problem.grid);
  if (!minimality.finite)
    throw PreconditionError("minimality condition not verified for this density");
  DensityTable table = tabulate_increment_density(problem.density, kernel, problem.grid);

  EstimateReport rep;
  rep.summability_ok = summ.ok && summ.tail_fraction <= 1e-9;
  rep.tail_fraction = summ.tail_fraction;
  rep.j_used = Jeff;

  rep.b = b.padded(Jeff);
  rep.c = solve_c(fourier_blocks_from_table(table, Jeff), rep.b);
  rep.mse = mse(rep.b, rep.c);

  BlockVector b2 = b.padded(2 * Jeff);
  BlockVector c2 = solve_c(fourier_blocks_from_table(table, 2 * Jeff), b2);
  double mse2 = mse(b2, c2);
  rep.mse_refinement_delta = std::abs(mse2 - rep.mse) / std::max(rep.mse, 1e-300);

  SpectralCharacteristic h = spectral_characteristic(problem, rep.b, rep.c);
  rep.h_lambdas = h.lambdas;
  rep.h_samples = h.samples;
  rep.skipped_nodes = h.skipped_nodes;
  rep.orthogonality_residuals =
      orthogonality_residuals(h.samples, rep.b, problem.density, kernel, problem.grid, -10, -1);

  const bool finite = problem.horizon == Horizon::finite;
  const double horizon_end =
      finite ? (problem.N + 1) * problem.params.T : problem.a.support_end();
  ProcessPath bsamp = sample_b(problem.a, problem.params, horizon_end);
  rep.v = sample_v(bsamp, problem.params,
                   finite ? std::optional<double>(horizon_end) : std::nullopt);
  return rep;
}

}  // namespace pcx
