#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pcx/simulate.hpp"

using namespace pcx;
using std::numbers::pi;

namespace {

SpectralDensityModel ma1_matched(double theta, int K, IncrementKernel kern) {
  SpectralDensityModel::Rational r;
  r.ma = Eigen::Vector2d(1.0, theta);
  r.ar = Eigen::VectorXd::Ones(1);
  return SpectralDensityModel::scalar_rational(r, K, true, kern);
}

SpectralDensityModel ar1_matched(double rho, int K, IncrementKernel kern) {
  SpectralDensityModel::Rational r;
  r.ma = Eigen::VectorXd::Ones(1);
  r.ar = Eigen::Vector2d(1.0, -rho);
  return SpectralDensityModel::scalar_rational(r, K, true, kern);
}

CoefficientFunction taper_bump(double t_end, int n_per_T, double rate) {
  CoefficientFunction a;
  a.samples.t_min = 0.0;
  a.samples.delta_t = 1.0 / n_per_T;
  int n = static_cast<int>(std::lround(t_end * n_per_T));
  a.samples.values.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    double t = i * a.samples.delta_t;
    double u = std::min(1.0, t_end - t);
    double s = std::sin(0.5 * pi * u);
    a.samples.values[i] = std::exp(-rate * t) * s * s;
  }
  return a;
}

ExtrapolationProblem make_problem(const SpectralDensityModel& model, int d, int tau, int K,
                                  int N = 3, int J = 32) {
  ExtrapolationProblem prob;
  prob.params = IncrementParams{.d = d, .T = 1.0, .tau = tau, .K = K, .J = J};
  prob.horizon = Horizon::finite;
  prob.N = N;
  prob.grid = QuadratureGrid{2048};
  prob.density = model;
  prob.a = taper_bump((N + 1) * 1.0, 64, 0.5);
  return prob;
}

}  // namespace

TEST_CASE("synthesize_increments statistics") {
  SUBCASE("white-increment-matched: lag 0 ~ I, lags >= 1 ~ 0") {
    IncrementKernel kern{1, 1};
    SynthesisConfig cfg;
    cfg.density = SpectralDensityModel::white_increment_matched(2, kern);
    cfg.params = IncrementParams{.d = 1, .T = 1.0, .tau = 1, .K = 2, .J = 4};
    cfg.n_blocks = 8;
    cfg.seed = 11;
    const int n_paths = 4000;
    IncrementSynthesizer synth(cfg);
    Eigen::MatrixXcd lag0 = Eigen::MatrixXcd::Zero(2, 2);
    Eigen::MatrixXcd lag1 = Eigen::MatrixXcd::Zero(2, 2);
    for (int p = 0; p < n_paths; ++p) {
      auto xi = synth.path(p, 0, 2);
      lag0 += xi.col(0) * xi.col(0).adjoint();
      lag1 += xi.col(1) * xi.col(0).adjoint();
    }
    lag0 /= n_paths;
    lag1 /= n_paths;
    double se = 3.0 / std::sqrt(double(n_paths));
    CHECK((lag0 - Eigen::MatrixXcd::Identity(2, 2)).norm() < 3 * se);
    CHECK(lag1.norm() < 3 * se);
  }

  SUBCASE("zero density gives the zero sequence") {
    IncrementKernel kern{1, 1};
    SynthesisConfig cfg;
    cfg.density = SpectralDensityModel::constant(Eigen::MatrixXcd::Zero(1, 1));
    cfg.params = IncrementParams{.d = 1, .T = 1.0, .tau = 1, .K = 1, .J = 4};
    cfg.n_blocks = 4;
    auto xi = synthesize_increments(cfg, 0, 0);
    CHECK(xi.norm() == 0.0);
  }

  SUBCASE("MA(1) autocovariances match the analytic oracle") {
    IncrementKernel kern{2, 2};
    SynthesisConfig cfg;
    cfg.density = ma1_matched(0.5, 1, kern);
    cfg.params = IncrementParams{.d = 2, .T = 1.0, .tau = 2, .K = 1, .J = 4};
    cfg.n_blocks = 4;
    cfg.seed = 3;
    const int n_paths = 6000;
    IncrementSynthesizer synth(cfg);
    Complex r0 = 0, r1 = 0, r2 = 0;
    for (int p = 0; p < n_paths; ++p) {
      auto xi = synth.path(p, 0, 3);
      r0 += xi(0, 0) * std::conj(xi(0, 0));
      r1 += xi(0, 1) * std::conj(xi(0, 0));
      r2 += xi(0, 2) * std::conj(xi(0, 0));
    }
    double se = 1.5 * 3.0 / std::sqrt(double(n_paths));
    CHECK(std::abs(r0 / double(n_paths) - 1.25) < se);
    CHECK(std::abs(r1 / double(n_paths) - 0.50) < se);
    CHECK(std::abs(r2 / double(n_paths)) < se);
  }

  SUBCASE("identical seed reproduces bit-identically") {
    IncrementKernel kern{1, 1};
    SynthesisConfig cfg;
    cfg.density = ma1_matched(0.3, 1, kern);
    cfg.params = IncrementParams{.d = 1, .T = 1.0, .tau = 1, .K = 1, .J = 4};
    cfg.n_blocks = 16;
    cfg.seed = 77;
    auto a = synthesize_increments(cfg, 5, -8);
    auto b = synthesize_increments(cfg, 5, -8);
    CHECK((a - b).norm() == 0.0);
    auto c = synthesize_increments(cfg, 6, -8);
    CHECK((a - c).norm() > 0.0);
  }
}

TEST_CASE("condition_on_past") {
  SUBCASE("white: past carries no information") {
    std::vector<Eigen::MatrixXcd> R(40, Eigen::MatrixXcd::Zero(1, 1));
    R[0](0, 0) = 1.0;
    BlockVector b = BlockVector::zero(1, 1);
    b.blocks(0, 0) = Complex(1.0, 2.0);
    auto cond = condition_on_past(R, b, 30);
    CHECK(cond.mse == doctest::Approx(5.0).epsilon(1e-10));
    CHECK_FALSE(cond.ridge_applied);
  }

  SUBCASE("numerically indefinite past covariance applies the ridge and flags it") {
    // lag-1 correlation slightly above lag 0: not a valid covariance, the
    // LDLT sees a negative pivot and the ridge path must engage
    std::vector<Eigen::MatrixXcd> R(20, Eigen::MatrixXcd::Zero(1, 1));
    R[0](0, 0) = 1.0;
    R[1](0, 0) = 1.0 + 1e-9;
    BlockVector b = BlockVector::zero(1, 1);
    b.blocks(0, 0) = 1.0;
    auto cond = condition_on_past(R, b, 2);
    CHECK(cond.ridge_applied);
    CHECK(cond.mse >= 0.0);
  }
}

TEST_CASE("oracle_mmse") {
  SUBCASE("MA(1) one-step: innovation variance 1 within 2% at window 200") {
    IncrementKernel kern{1, 1};
    auto prob = make_problem(ma1_matched(0.5, 1, kern), 1, 1, 1, 0);
    // single-block functional: a concentrated in [0, T) with b = (b_0)
    auto rep = oracle_mmse(prob, 200);
    // b has one block; for MA(1) the prediction error of b_0 xi_0 is |b_0|^2 * 1
    double b0sq = functional_coefficients(prob).blocks.col(0).squaredNorm();
    CHECK(std::abs(rep.oracle_mse - b0sq) < 0.02 * b0sq);
    CHECK(rep.window_converged);
  }

  SUBCASE("oracle matches the analytic value for shipped scalar models") {
    IncrementKernel k11{1, 1};
    IncrementKernel k22{2, 2};
    for (auto& [model, d, tau] :
         {std::tuple{ma1_matched(0.5, 1, k11), 1, 1}, std::tuple{ma1_matched(0.9, 1, k11), 1, 1},
          std::tuple{ar1_matched(0.5, 1, k11), 1, 1}, std::tuple{ma1_matched(0.5, 1, k22), 2, 2}}) {
      auto prob = make_problem(model, d, tau, 1, 3, 64);
      auto rep = oracle_mmse(prob, 400);
      INFO("analytic=", rep.analytic_mse, " oracle=", rep.oracle_mse);
      CHECK(rep.agree_analytic_oracle);
    }
  }
}

TEST_CASE("empirical_mse") {
  SUBCASE("MA(1): empirical within 3 SE of the oracle") {
    IncrementKernel kern{1, 1};
    auto prob = make_problem(ma1_matched(0.5, 1, kern), 1, 1, 1);
    SynthesisConfig cfg;
    cfg.n_paths = 4000;
    cfg.seed = 42;
    auto rep = empirical_mse(prob, cfg, 128, 2);
    CHECK(rep.has_empirical);
    CHECK(rep.agree_empirical);
    CHECK(rep.agree_analytic_oracle);
  }

  SUBCASE("zero functional gives exactly zero") {
    IncrementKernel kern{1, 1};
    auto prob = make_problem(ma1_matched(0.5, 1, kern), 1, 1, 1);
    prob.a.samples.values.setZero();
    SynthesisConfig cfg;
    cfg.n_paths = 50;
    auto rep = empirical_mse(prob, cfg, 16, 1);
    CHECK(rep.empirical_mse == 0.0);
  }

  SUBCASE("doubling n_paths shrinks the standard error by about sqrt(2)") {
    IncrementKernel kern{1, 1};
    auto prob = make_problem(ar1_matched(0.5, 1, kern), 1, 1, 1);
    SynthesisConfig cfg;
    cfg.n_paths = 2000;
    cfg.seed = 9;
    auto rep1 = empirical_mse(prob, cfg, 64, 2);
    cfg.n_paths = 4000;
    auto rep2 = empirical_mse(prob, cfg, 64, 2);
    double ratio = rep1.standard_error / rep2.standard_error;
    CHECK(ratio > std::sqrt(2.0) * 0.8);
    CHECK(ratio < std::sqrt(2.0) * 1.2);
  }

  SUBCASE("thread count does not change the result") {
    IncrementKernel kern{1, 1};
    auto prob = make_problem(ma1_matched(0.3, 1, kern), 1, 1, 1);
    SynthesisConfig cfg;
    cfg.n_paths = 500;
    cfg.seed = 5;
    auto rep1 = empirical_mse(prob, cfg, 32, 1);
    auto rep4 = empirical_mse(prob, cfg, 32, 4);
    CHECK(rep1.empirical_mse == rep4.empirical_mse);
    CHECK(rep1.standard_error == rep4.standard_error);
  }
}
