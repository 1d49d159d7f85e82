#include "pcx/simulate.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "pcx/rng.hpp"

namespace pcx {

namespace {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

IncrementSynthesizer::IncrementSynthesizer(const SynthesisConfig& cfg) {
  cfg.params.validate();
  if (cfg.n_blocks < 1) throw DomainError("n_blocks must satisfy n_blocks >= 1");
  Ms_ = cfg.spectral_grid > 0 ? cfg.spectral_grid : next_pow2(std::max(8 * cfg.n_blocks, 256));
  if (Ms_ < 8 * cfg.n_blocks)
    throw PreconditionError("spectral grid must hold at least 8 cells per requested block");
  if (Ms_ % 2 != 0) throw PreconditionError("spectral grid size must be even");
  K_ = cfg.density.dimension();
  seed_ = cfg.seed;

  IncrementKernel kernel{cfg.params.d, cfg.params.tau};
  QuadratureGrid grid{Ms_};
  grid.validate_for(cfg.params.tau);
  lambda_ = grid.lambdas();
  const double cell = grid.spacing() / (2.0 * std::numbers::pi);
  factor_.resize(Ms_);
  for (int m = 0; m < Ms_; ++m)
    factor_[m] = psd_sqrt(cell * cfg.density.increment_density(lambda_[m], kernel));
}

Eigen::MatrixXcd IncrementSynthesizer::path(int path_index, int j_min, int count) const {
  if (count < 1 || count > Ms_ / 8)
    throw DomainError("requested block count exceeds the synthesizer resolution");
  // weights at positive-frequency cells; mirrors carry the conjugates
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(K_, Ms_);
  CounterRng rng(seed_, static_cast<std::uint64_t>(path_index));
  const double inv_sqrt2 = std::sqrt(0.5);
  for (int m = Ms_ / 2; m < Ms_; ++m) {
    Eigen::VectorXcd z(K_);
    for (int k = 0; k < K_; ++k) {
      double re = rng.normal();
      double im = rng.normal();
      z[k] = Complex(re, im) * inv_sqrt2;
    }
    V.col(m) = factor_[m] * z;
    V.col(Ms_ - 1 - m) = V.col(m).conjugate();
  }

  // xi(j) = sum_m V_m e^{i lambda_m j} = twiddle(j) * Ms * ifft(V)[j mod Ms]
  Eigen::MatrixXcd out(K_, count);
  Eigen::FFT<double> fft;
  std::vector<Complex> in(Ms_), freq(Ms_);
  const double off = lambda_[0];  // -pi + dlambda/2
  for (int k = 0; k < K_; ++k) {
    for (int m = 0; m < Ms_; ++m) in[m] = V(k, m);
    fft.inv(freq, in);
    for (int c = 0; c < count; ++c) {
      int j = j_min + c;
      int idx = ((j % Ms_) + Ms_) % Ms_;
      out(k, c) = std::polar(1.0, off * j) * (static_cast<double>(Ms_) * freq[idx]);
    }
  }
  return out;
}

Eigen::MatrixXcd synthesize_increments(const SynthesisConfig& cfg, int path_index, int j_min) {
  IncrementSynthesizer synth(cfg);
  return synth.path(path_index, j_min, cfg.n_blocks);
}

GaussianConditioning condition_on_past(const std::vector<Eigen::MatrixXcd>& R,
                                       const BlockVector& b, int window) {
  if (window < 1) throw DomainError("window must satisfy window >= 1");
  const int K = b.dimension();
  const int L = b.length();
  if (static_cast<int>(R.size()) < window + L)
    throw DimensionError("need covariances up to lag window + L - 1");

  auto lag = [&](int m) -> Eigen::MatrixXcd {
    return m >= 0 ? R[m] : Eigen::MatrixXcd(R[-m].adjoint());
  };

  GaussianConditioning out;
  Complex var = 0.0;
  for (int j = 0; j < L; ++j)
    for (int l = 0; l < L; ++l)
      var += (b.blocks.col(j).transpose() * lag(j - l) * b.blocks.col(l).conjugate()).value();
  out.variance = var.real();

  // cross(w) = E[xi_{-w} conj(B)] per component: conj of sum_j R(j+w)^T b_j
  Eigen::VectorXcd cross(window * K);
  for (int w = 1; w <= window; ++w) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(K);
    for (int j = 0; j < L; ++j) acc += lag(j + w).transpose() * b.blocks.col(j);
    cross.segment((w - 1) * K, K) = acc.conjugate();
  }

  Eigen::MatrixXcd gram(window * K, window * K);
  for (int w1 = 1; w1 <= window; ++w1)
    for (int w2 = 1; w2 <= window; ++w2)
      gram.block((w1 - 1) * K, (w2 - 1) * K, K, K) = lag(w2 - w1);

  Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
  Eigen::VectorXcd weights;
  bool good = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (good) {
    weights = ldlt.solve(cross);
    good = (gram * weights - cross).norm() <= 1e-8 * std::max(cross.norm(), 1e-300);
  }
  if (!good) {
    double ridge = 1e-10 * std::max(gram.real().trace(), 1.0);
    Eigen::MatrixXcd reg = gram + ridge * Eigen::MatrixXcd::Identity(gram.rows(), gram.cols());
    weights = reg.ldlt().solve(cross);
    out.ridge_applied = true;
  }
  out.weights = weights;
  double explained = std::real(cross.dot(weights));
  out.mse = std::max(out.variance - explained, 0.0);
  return out;
}

namespace {

struct OracleContext {
  BlockVector b;
  std::vector<Eigen::MatrixXcd> R;
  double analytic = 0.0;
};

OracleContext build_context(const ExtrapolationProblem& problem, int max_lag) {
  OracleContext ctx;
  ctx.b = functional_coefficients(problem);
  IncrementKernel kernel = problem.kernel();
  DensityTable table = tabulate_increment_density(problem.density, kernel, problem.grid);
  ctx.R = structural_function_batch(table, max_lag);

  int Jeff = std::max(problem.params.J, ctx.b.length());
  BlockVector bp = ctx.b.padded(Jeff);
  BlockVector c = solve_c(fourier_blocks_from_table(table, Jeff), bp);
  ctx.analytic = mse(bp, c);
  return ctx;
}

}  // namespace

OracleReport oracle_mmse(const ExtrapolationProblem& problem, int window) {
  if (window < 2) throw DomainError("window must satisfy window >= 2");
  const int n_b = functional_coefficients(problem).length();
  OracleContext ctx = build_context(problem, window + n_b + 8);

  GaussianConditioning full = condition_on_past(ctx.R, ctx.b, window);
  GaussianConditioning half = condition_on_past(ctx.R, ctx.b, window / 2);

  OracleReport rep;
  rep.analytic_mse = ctx.analytic;
  rep.oracle_mse = full.mse;
  rep.window = window;
  rep.ridge_applied = full.ridge_applied;
  rep.window_refinement_delta =
      std::abs(full.mse - half.mse) / std::max(full.mse, 1e-300);
  rep.window_converged = rep.window_refinement_delta < 1e-4;
  rep.agree_analytic_oracle =
      std::abs(rep.analytic_mse - rep.oracle_mse) < 1e-3 * std::max(rep.oracle_mse, 1e-300);
  return rep;
}

OracleReport empirical_mse(const ExtrapolationProblem& problem, const SynthesisConfig& cfg,
                           int window, int threads) {
  OracleReport rep = oracle_mmse(problem, window);

  BlockVector b = functional_coefficients(problem);
  const int K = b.dimension();
  const int L = b.length();
  DensityTable table =
      tabulate_increment_density(problem.density, problem.kernel(), problem.grid);
  std::vector<Eigen::MatrixXcd> R = structural_function_batch(table, window + L + 8);
  GaussianConditioning cond = condition_on_past(R, b, window);

  SynthesisConfig synth_cfg = cfg;
  synth_cfg.params = problem.params;
  synth_cfg.density = problem.density;
  synth_cfg.n_blocks = window + L;
  IncrementSynthesizer synth(synth_cfg);

  const int n = std::max(cfg.n_paths, 1);
  Eigen::VectorXd sq(n);
  parallel_for(n, threads, [&](int path) {
    Eigen::MatrixXcd xi = synth.path(path, -window, window + L);  // columns j = -window..L-1
    Complex target = 0.0;
    for (int j = 0; j < L; ++j)
      target += (b.blocks.col(j).transpose() * xi.col(window + j)).value();
    Complex predicted = 0.0;
    for (int w = 1; w <= window; ++w)
      predicted += cond.weights.segment((w - 1) * K, K).dot(xi.col(window - w));
    sq[path] = std::norm(target - predicted);
  });

  double mean = pairwise_sum(sq) / n;
  Eigen::VectorXd centered = (sq.array() - mean).square();
  double var = pairwise_sum(centered) / std::max(n - 1, 1);
  rep.empirical_mse = mean;
  rep.standard_error = std::sqrt(var / n);
  rep.has_empirical = true;
  rep.n_paths = n;
  rep.agree_empirical = std::abs(mean - rep.oracle_mse) <= 3.0 * rep.standard_error;
  return rep;
}

}  // namespace pcx
