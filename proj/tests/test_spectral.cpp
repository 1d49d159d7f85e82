#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pcx/rng.hpp"
#include "pcx/spectral.hpp"

using namespace pcx;
using std::numbers::pi;

namespace {

SpectralDensityModel ma1_model(double theta, int K, const IncrementKernel& kern) {
  SpectralDensityModel::Rational r;
  r.ma = Eigen::Vector2d(1.0, theta);
  r.ar = Eigen::VectorXd::Ones(1);
  return SpectralDensityModel::scalar_rational(r, K, true, kern);
}

SpectralDensityModel ar1_model(double rho, int K, const IncrementKernel& kern) {
  SpectralDensityModel::Rational r;
  r.ma = Eigen::VectorXd::Ones(1);
  r.ar = Eigen::Vector2d(1.0, -rho);
  return SpectralDensityModel::scalar_rational(r, K, true, kern);
}

}  // namespace

TEST_CASE("increment kernel closed forms") {
  for (int d : {1, 2, 3})
    for (int tau : {1, 2, 3}) {
      IncrementKernel k{d, tau};
      CHECK(k(0.0) == doctest::Approx(std::pow(tau, 2 * d)));
      for (double lam : {-3.0, -0.7, 0.3, 2.9}) {
        CHECK(k(lam) >= 0.0);
        CHECK(std::norm(k.phi(lam)) == doctest::Approx(k(lam)));
        Complex prod = k.phi(lam) * k.psi(lam);
        CHECK(std::abs(prod - std::polar(1.0, -d * tau * lam)) < 1e-12);
        CHECK(std::abs(k.mixed(lam, tau, tau) - k(lam)) < 1e-12 * std::max(1.0, k(lam)));
      }
      // exact zeros at interior points 2 pi m / tau
      if (tau == 3) CHECK(k(2 * pi / 3) < 1e-25);
    }
  // direct value check: d=1, tau=1, lambda=pi -> |1-e^{i pi}|^2/pi^2 = 4/pi^2
  IncrementKernel k11{1, 1};
  CHECK(k11(pi) == doctest::Approx(4.0 / (pi * pi)));
}

TEST_CASE("eval_increment_density") {
  IncrementKernel kern{2, 2};

  SUBCASE("white-increment-matched cancels the kernel") {
    auto f = SpectralDensityModel::white_increment_matched(3, kern);
    for (double lam : {-2.0, 0.0, 0.5, 3.1}) {
      Eigen::MatrixXcd g = eval_increment_density(f, kern, lam);
      CHECK((g - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-14);
    }
  }

  SUBCASE("limit at lambda = 0 is tau^{2d} f(0)") {
    Eigen::MatrixXcd f0(2, 2);
    f0 << 2.0, Complex(0.3, 0.1), Complex(0.3, -0.1), 1.0;
    auto f = SpectralDensityModel::constant(f0);
    Eigen::MatrixXcd g = eval_increment_density(f, kern, 0.0);
    CHECK((g - std::pow(2.0, 4) * f0).norm() < 1e-12);
  }

  SUBCASE("d=1, tau=1 at pi") {
    IncrementKernel k{1, 1};
    auto f = SpectralDensityModel::constant(Eigen::MatrixXcd::Identity(1, 1));
    Eigen::MatrixXcd g = eval_increment_density(f, k, pi);
    CHECK(std::abs(g(0, 0) - 4.0 / (pi * pi)) < 1e-12);
  }
}

TEST_CASE("check_minimality") {
  QuadratureGrid grid{2048};

  SUBCASE("white-increment-matched: value K, finite") {
    for (int K : {1, 3}) {
      IncrementKernel kern{1, 2};
      auto f = SpectralDensityModel::white_increment_matched(K, kern);
      auto rep = check_minimality(f, kern, grid);
      CHECK(rep.finite);
      CHECK(rep.converged);
      CHECK(rep.value == doctest::Approx(K).epsilon(1e-10));
    }
  }

  SUBCASE("interior zero of order 2 diverges under refinement") {
    const double lam0 = 1.0;
    int n = 8193;
    Eigen::VectorXd xs(n);
    Eigen::MatrixXd vals(1, n);
    for (int i = 0; i < n; ++i) {
      xs[i] = -pi + 2 * pi * i / (n - 1.0);
      double dlt = xs[i] - lam0;
      vals(0, i) = dlt * dlt;
    }
    IncrementKernel kern{1, 1};
    auto f = SpectralDensityModel::tabulated(xs, vals, true, kern);
    auto rep = check_minimality(f, kern, grid);
    CHECK_FALSE(rep.finite);
  }

  SUBCASE("tau=2, d=1, f == I blows up at the boundary") {
    IncrementKernel kern{1, 2};
    auto f = SpectralDensityModel::constant(Eigen::MatrixXcd::Identity(1, 1));
    auto rep = check_minimality(f, kern, grid);
    CHECK_FALSE(rep.finite);
  }
}

TEST_CASE("fourier_block_coeffs") {
  QuadratureGrid grid{4096};

  SUBCASE("white-increment-matched gives the identity operator") {
    IncrementKernel kern{2, 2};
    auto f = SpectralDensityModel::white_increment_matched(2, kern);
    auto op = fourier_block_coeffs(f, kern, 8, grid);
    CHECK((op.generators[0] - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    for (int m = 1; m < 8; ++m) CHECK(op.generators[m].norm() < 1e-12);
    Eigen::MatrixXcd dense = op.dense();
    CHECK((dense - Eigen::MatrixXcd::Identity(16, 16)).norm() < 1e-10);
  }

  SUBCASE("trigonometric polynomial integrand") {
    // g^{-1} = 2 + e^{i lambda} + e^{-i lambda} = |1 + e^{-i lambda}|^2
    IncrementKernel kern{1, 1};
    SpectralDensityModel::Rational r;
    r.ma = Eigen::VectorXd::Ones(1);
    r.ar = Eigen::Vector2d(1.0, 1.0);
    auto f = SpectralDensityModel::scalar_rational(r, 1, true, kern);
    auto op = fourier_blocks_from_table(tabulate_increment_density(f, kern, grid), 5);
    CHECK(std::abs(op.generators[0](0, 0) - 2.0) < 1e-10);
    CHECK(std::abs(op.generators[1](0, 0) - 1.0) < 1e-10);
    for (int m = 2; m < 5; ++m) CHECK(std::abs(op.generators[m](0, 0)) < 1e-10);
  }

  SUBCASE("geometric-series Fourier oracle") {
    // integrand 1/|1 - 0.5 e^{i lambda}|^2 -> G_m = 0.5^m / (1 - 0.25)
    IncrementKernel kern{1, 1};
    SpectralDensityModel::Rational r;
    r.ma = Eigen::Vector2d(1.0, -0.5);
    r.ar = Eigen::VectorXd::Ones(1);
    auto f = SpectralDensityModel::scalar_rational(r, 1, true, kern);
    auto op = fourier_block_coeffs(f, kern, 12, grid);
    for (int m = 0; m < 12; ++m)
      CHECK(std::abs(op.generators[m](0, 0) - std::pow(0.5, m) / 0.75) < 1e-8);
  }

  SUBCASE("failed minimality is a precondition error") {
    IncrementKernel kern{1, 2};
    auto f = SpectralDensityModel::constant(Eigen::MatrixXcd::Identity(1, 1));
    CHECK_THROWS_AS(fourier_block_coeffs(f, kern, 4, grid), PreconditionError);
  }

  SUBCASE("assembled operator is Hermitian PSD for random diagonal models") {
    CounterRng rng(5, 0);
    for (int rep = 0; rep < 3; ++rep) {
      int K = 1 + static_cast<int>(rng.uniform() * 7.99);
      IncrementKernel kern{1 + (rep % 2), 1};
      std::vector<SpectralDensityModel::Rational> entries(K);
      for (auto& e : entries) {
        e.ma = Eigen::Vector2d(1.0, 0.8 * (rng.uniform() - 0.5));
        e.ar = Eigen::Vector2d(1.0, 0.8 * (rng.uniform() - 0.5));
        e.scale = 0.5 + rng.uniform();
      }
      auto f = SpectralDensityModel::diagonal_rational(entries, true, kern);
      auto op = fourier_block_coeffs(f, kern, 16, QuadratureGrid{1024});
      Eigen::MatrixXcd dense = op.dense();
      CHECK((dense - dense.adjoint()).norm() < 1e-10 * dense.norm());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8 * dense.norm());
    }
  }

  SUBCASE("doubling the node count moves the generators by < 1e-6 relative") {
    IncrementKernel kern{1, 1};
    for (auto model : {ma1_model(0.5, 1, kern), ar1_model(0.5, 1, kern)}) {
      auto op1 = fourier_block_coeffs(model, kern, 8, QuadratureGrid{4096});
      auto op2 = fourier_block_coeffs(model, kern, 8, QuadratureGrid{8192});
      double scale = 0.0;
      for (int m = 0; m < 8; ++m) scale = std::max(scale, op2.generators[m].norm());
      for (int m = 0; m < 8; ++m)
        CHECK((op1.generators[m] - op2.generators[m]).norm() < 1e-6 * scale);
    }
  }
}

TEST_CASE("structural_function") {
  QuadratureGrid grid{4096};
  IncrementParams params{.d = 1, .T = 1.0, .tau = 1, .K = 1, .J = 8};
  IncrementKernel kern{params.d, params.tau};

  SUBCASE("white: R(0) = I, R(j != 0) = 0") {
    IncrementParams p2{.d = 2, .T = 1.0, .tau = 2, .K = 2, .J = 8};
    IncrementKernel k2{p2.d, p2.tau};
    auto f = SpectralDensityModel::white_increment_matched(2, k2);
    auto R0 = structural_function(f, p2, 0, 2, 2, grid);
    CHECK((R0 - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    for (int j : {1, 2, 5}) CHECK(structural_function(f, p2, j, 2, 2, grid).norm() < 1e-12);
  }

  SUBCASE("Hermitian symmetry R(j) = R(-j)^H") {
    auto f = ma1_model(0.4, 2, kern);
    for (int j : {1, 3}) {
      auto Rp = structural_function(f, params, j, 1, 1, grid);
      auto Rm = structural_function(f, params, -j, 1, 1, grid);
      CHECK((Rp - Rm.adjoint()).norm() < 1e-12);
    }
  }

  SUBCASE("MA(1) autocovariance oracle") {
    auto f = ma1_model(0.5, 1, kern);
    CHECK(std::abs(structural_function(f, params, 0, 1, 1, grid)(0, 0) - 1.25) < 1e-10);
    CHECK(std::abs(structural_function(f, params, 1, 1, 1, grid)(0, 0) - 0.5) < 1e-10);
    CHECK(std::abs(structural_function(f, params, 2, 1, 1, grid)(0, 0)) < 1e-10);
    auto batch = structural_function_batch(f, params, 3, grid);
    CHECK(std::abs(batch[0](0, 0) - 1.25) < 1e-10);
    CHECK(std::abs(batch[1](0, 0) - 0.5) < 1e-10);
  }

  SUBCASE("Parseval consistency for a rapidly decaying model") {
    auto f = ma1_model(0.5, 1, kern);
    auto batch = structural_function_batch(f, params, 8, grid);
    double sum = batch[0].squaredNorm();
    for (int j = 1; j <= 8; ++j) sum += 2.0 * batch[j].squaredNorm();
    double integral = 0.0;
    for (int m = 0; m < grid.nodes; ++m) {
      double lam = grid.node(m);
      integral += f.increment_density(lam, kern).squaredNorm();
    }
    integral *= grid.spacing() / (2 * pi);
    CHECK(std::abs(sum - integral) < 1e-4 * integral);
  }
}

TEST_CASE("density table guards") {
  SUBCASE("near-vanishing notch raises a near-singular error naming the node") {
    int n = 1025;
    Eigen::VectorXd xs(n);
    Eigen::MatrixXd vals(1, n);
    for (int i = 0; i < n; ++i) {
      xs[i] = -pi + 2 * pi * i / (n - 1.0);
      vals(0, i) = (std::abs(xs[i] - 0.5) < 0.02) ? 1e-14 : 1.0;
    }
    IncrementKernel kern{1, 1};
    auto f = SpectralDensityModel::tabulated(xs, vals, true, kern);
    bool threw = false;
    try {
      tabulate_increment_density(f, kern, QuadratureGrid{2048});
    } catch (const NearSingularDensityError& e) {
      threw = true;
      CHECK(std::abs(e.node - 0.5) < 0.05);
    }
    CHECK(threw);
  }

  SUBCASE("constant model construction and validation") {
    CHECK_THROWS_AS(SpectralDensityModel::constant((Eigen::MatrixXcd(1, 2) << 1, 2).finished()),
                    DimensionError);
    Eigen::MatrixXcd bad(2, 2);
    bad << 1.0, Complex(0, 1), Complex(0, 1), 1.0;  // symmetric, not Hermitian
    CHECK_THROWS_AS(SpectralDensityModel::constant(bad), DomainError);
    Eigen::MatrixXcd indef(2, 2);
    indef << 1.0, 0.0, 0.0, -1.0;
    auto f = SpectralDensityModel::constant(indef);
    CHECK_THROWS_AS(f.validate(), DomainError);
  }

  SUBCASE("quadrature grid rejects nodes on singular points") {
    CHECK_THROWS_AS(QuadratureGrid{3}.validate_for(1), PreconditionError);
    CHECK_NOTHROW(QuadratureGrid{4096}.validate_for(2));
    CHECK_THROWS_AS(QuadratureGrid{9}.validate_for(3), PreconditionError);
  }
}
