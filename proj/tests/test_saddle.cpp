#include <cmath>

#include "doctest.h"
#include "pcx/rng.hpp"
#include "pcx/saddle.hpp"

using namespace pcx;

TEST_CASE("build_Q") {
  SUBCASE("N = 0 is the rank-one Gram block") {
    BlockVector b = BlockVector::zero(2, 1);
    b.blocks(0, 0) = Complex(1, 1);
    b.blocks(1, 0) = 2.0;
    auto Q = build_Q(b, 0);
    Eigen::MatrixXcd expect = b.blocks.col(0) * b.blocks.col(0).adjoint();
    CHECK((Q.dense - expect).norm() == 0.0);
    auto res = top_eigen(Q);
    CHECK(res.nu_squared == doctest::Approx(b.blocks.col(0).squaredNorm()).epsilon(1e-12));
  }

  SUBCASE("K=1, N=1, b=(1,1) gives [[2,1],[1,1]]") {
    BlockVector b = BlockVector::zero(1, 2);
    b.blocks.row(0) << 1.0, 1.0;
    auto Q = build_Q(b, 1);
    CHECK(std::abs(Q.dense(0, 0) - 2.0) == 0.0);
    CHECK(std::abs(Q.dense(0, 1) - 1.0) == 0.0);
    CHECK(std::abs(Q.dense(1, 0) - 1.0) == 0.0);
    CHECK(std::abs(Q.dense(1, 1) - 1.0) == 0.0);
  }

  SUBCASE("single nonzero leading block populates only the (0,0) block") {
    BlockVector b = BlockVector::zero(2, 4);
    b.blocks(0, 0) = 3.0;
    b.blocks(1, 0) = Complex(0, 1);
    auto Q = build_Q(b, 3);
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) {
        if (p == 0 && q == 0)
          CHECK(Q.block(p, q).norm() > 0.0);
        else
          CHECK(Q.block(p, q).norm() == 0.0);
      }
  }

  SUBCASE("single nonzero interior block: equal diagonal blocks up to its index") {
    BlockVector b = BlockVector::zero(1, 4);
    b.blocks(0, 2) = 3.0;
    auto Q = build_Q(b, 3);
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) {
        if (p == q && p <= 2)
          CHECK(std::abs(Q.block(p, q)(0, 0) - 9.0) == 0.0);
        else
          CHECK(Q.block(p, q).norm() == 0.0);
      }
  }

  SUBCASE("Gram identity against the banded-factor route, exact on integers") {
    CounterRng rng(21, 0);
    for (int N = 0; N <= 8; ++N) {
      BlockVector b = BlockVector::zero(1, N + 1);
      for (int j = 0; j <= N; ++j)
        b.blocks(0, j) = std::floor(rng.uniform() * 9) - 4;
      auto Q = build_Q(b, N);
      // L(p, s) = b_{p+s} for p+s <= N; Q must equal L L^H exactly
      Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(N + 1, N + 1);
      for (int p = 0; p <= N; ++p)
        for (int s = 0; p + s <= N; ++s) L(p, s) = b.blocks(0, p + s);
      Eigen::MatrixXcd G = L * L.adjoint();
      CHECK((Q.dense - G).norm() == 0.0);
    }
  }

  SUBCASE("length mismatch raises") {
    BlockVector b = BlockVector::zero(1, 3);
    CHECK_THROWS_AS(build_Q(b, 3), DimensionError);
  }

  SUBCASE("scaling law: Q(alpha b) has top eigenvalue |alpha|^2 nu^2") {
    BlockVector b = BlockVector::zero(1, 3);
    b.blocks.row(0) << 1.0, 0.5, 0.25;
    auto nu1 = top_eigen(build_Q(b, 2)).nu_squared;
    BlockVector b2(Complex(0, 2) * b.blocks);
    auto nu2 = top_eigen(build_Q(b2, 2)).nu_squared;
    CHECK(nu2 == doctest::Approx(4.0 * nu1).epsilon(1e-12));
  }
}

TEST_CASE("top_eigen") {
  SUBCASE("closed-form 2x2: nu^2 = (3+sqrt(5))/2") {
    BlockVector b = BlockVector::zero(1, 2);
    b.blocks.row(0) << 1.0, 1.0;
    auto res = top_eigen(build_Q(b, 1), 2.0);
    CHECK(std::abs(res.nu_squared - (3.0 + std::sqrt(5.0)) / 2.0) < 1e-10);
    CHECK(res.max_error == doctest::Approx(2.0 * res.nu_squared));
    CHECK(res.g.flattened().squaredNorm() == doctest::Approx(2.0));
    CHECK(res.residual < 1e-8);
    CHECK_FALSE(res.degenerate);
  }

  SUBCASE("rank-one Q: g proportional to b") {
    BlockVector b = BlockVector::zero(2, 1);
    b.blocks(0, 0) = Complex(1, -1);
    b.blocks(1, 0) = 0.5;
    auto res = top_eigen(build_Q(b, 0));
    Eigen::VectorXcd gb = res.g.flattened();
    Eigen::VectorXcd bb = b.flattened().normalized();
    Complex phase = bb.dot(gb);
    CHECK((gb - phase * bb).norm() < 1e-10);
  }

  SUBCASE("identity operator is degenerate") {
    SaddleOperator Q;
    Q.K = 1;
    Q.N = 3;
    Q.dense = Eigen::MatrixXcd::Identity(4, 4);
    auto res = top_eigen(Q);
    CHECK(res.nu_squared == doctest::Approx(1.0));
    CHECK(res.degenerate);
  }

  SUBCASE("random PSD instances match the dense eigensolver to 1e-10") {
    CounterRng rng(7, 0);
    for (int rep = 0; rep < 20; ++rep) {
      int K = 1 + (rep % 4);
      int N = 1 + (rep % 7);
      BlockVector b = BlockVector::zero(K, N + 1);
      for (int j = 0; j <= N; ++j)
        for (int k = 0; k < K; ++k) b.blocks(k, j) = Complex(rng.normal(), rng.normal());
      auto Q = build_Q(b, N);
      auto res = top_eigen(Q);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q.dense, Eigen::EigenvaluesOnly);
      double dense = es.eigenvalues().maxCoeff();
      CHECK(std::abs(res.nu_squared - dense) <= 1e-10 * dense);
    }
  }
}

TEST_CASE("synthesize_least_favorable") {
  SUBCASE("zero kernel gives the zero sequence") {
    SaddleResult res;
    res.g = BlockVector::zero(2, 3);
    auto seq = synthesize_least_favorable(res, 50, 42);
    CHECK(seq.samples.norm() == 0.0);
  }

  SUBCASE("N=0, K=M=1, g = sqrt(P): iid with variance P") {
    const double P = 2.5;
    SaddleResult res;
    res.g = BlockVector::zero(1, 1);
    res.g.blocks(0, 0) = std::sqrt(P);
    res.power_bound = P;
    const int n = 20000;
    auto seq = synthesize_least_favorable(res, n, 7);
    double mean_sq = seq.samples.squaredNorm() / n;
    double se = P * std::sqrt(2.0 / n);
    CHECK(std::abs(mean_sq - P) < 3 * se);
  }

  SUBCASE("innovations are empirically orthonormal") {
    SaddleResult res;
    res.g = BlockVector::zero(2, 2);
    res.g.blocks(0, 0) = 1.0;
    const int n = 20000;
    auto seq = synthesize_least_favorable(res, n, 99, 2);
    Eigen::MatrixXd cov =
        seq.innovations * seq.innovations.transpose() / seq.innovations.cols();
    CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).norm() < 0.05);
  }

  SUBCASE("same seed reproduces bit-identically") {
    SaddleResult res;
    res.g = BlockVector::zero(1, 2);
    res.g.blocks(0, 0) = 1.0;
    res.g.blocks(0, 1) = -0.5;
    auto s1 = synthesize_least_favorable(res, 100, 1234);
    auto s2 = synthesize_least_favorable(res, 100, 1234);
    CHECK((s1.samples - s2.samples).norm() == 0.0);
    auto s3 = synthesize_least_favorable(res, 100, 1235);
    CHECK((s1.samples - s3.samples).norm() > 0.0);
  }

  SUBCASE("functional variance under the optimal-zero estimate is P nu^2") {
    // real b, so the eigenvector blocks drive the extremal sequence directly
    BlockVector b = BlockVector::zero(1, 2);
    b.blocks.row(0) << 1.0, 1.0;
    const double P = 2.0;
    auto res = top_eigen(build_Q(b, 1), P);
    const int N = 1;
    const int n_paths = 20000;
    double acc = 0.0, acc2 = 0.0;
    for (int path = 0; path < n_paths; ++path) {
      auto seq = synthesize_least_favorable(res, N + 1, 1000 + path);
      // subtract the past-innovation contribution: keep only s >= 0 terms
      Complex B = 0.0;
      for (int j = 0; j <= N; ++j) {
        Eigen::VectorXcd xi_fut = Eigen::VectorXcd::Zero(1);
        for (int p = 0; p <= std::min(j, N); ++p)
          xi_fut += res.g.blocks.col(p) * seq.innovations(0, j - p + N);
        B += (b.blocks.col(j).transpose() * xi_fut).value();
      }
      double v = std::norm(B);
      acc += v;
      acc2 += v * v;
    }
    double mean = acc / n_paths;
    double se = std::sqrt((acc2 / n_paths - mean * mean) / n_paths);
    CHECK(std::abs(mean - res.max_error) < 3.5 * se);
  }
}
