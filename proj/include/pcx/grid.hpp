#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

#include "pcx/errors.hpp"

namespace pcx {

/// Uniform midpoint nodes on [-pi, pi).  Midpoint placement keeps the nodes
/// away from lambda = 0 and (for sane node counts) from 2*pi*m/tau, where the
/// increment kernel has removable or true singularities.
struct QuadratureGrid {
  int nodes = 4096;

  double spacing() const { return 2.0 * std::numbers::pi / nodes; }

  double node(int m) const { return -std::numbers::pi + (m + 0.5) * spacing(); }

  Eigen::VectorXd lambdas() const {
    Eigen::VectorXd v(nodes);
    for (int m = 0; m < nodes; ++m) v[m] = node(m);
    return v;
  }

  QuadratureGrid refined(int factor = 2) const { return QuadratureGrid{nodes * factor}; }

  /// Throws if any node coincides with a singular point 2*pi*m/tau.
  void validate_for(int tau) const {
    for (int m = -tau; m <= tau; ++m) {
      double s = 2.0 * std::numbers::pi * m / tau;
      if (s < -std::numbers::pi || s >= std::numbers::pi) continue;
      double pos = (s + std::numbers::pi) / spacing() - 0.5;
      if (std::abs(pos - std::round(pos)) < 1e-9)
        throw PreconditionError("quadrature grid places a node on a kernel singularity; change nodes");
    }
  }
};

/// Pairwise (cascade) summation: deterministic order, O(log n) error growth.
template <typename T>
T pairwise_sum(const T* data, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 8) {
    T s = data[0];
    for (std::size_t i = 1; i < n; ++i) s += data[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> tmp(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) tmp[static_cast<std::size_t>(i)] = v[i];
  return pairwise_sum(tmp.data(), tmp.size());
}

/// Chunked parallel loop over [0, n).  Work items must write only to their own
/// slots; reductions happen after the join, so results do not depend on the
/// thread count.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += threads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pcx
