#include "pcx/increments.hpp"

#include <cmath>
#include <numbers>

namespace pcx {

namespace {

long long binom(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Number of grid steps in `span`, verifying exact divisibility.
int grid_multiple(double span, double delta_t, const char* what) {
  double pos = span / delta_t;
  int n = static_cast<int>(std::lround(pos));
  if (n <= 0 || std::abs(pos - n) > 1e-9 * std::max(1.0, std::abs(pos)))
    throw GridMismatchError(std::string(what) + " is not a positive integer multiple of delta_t");
  return n;
}

}  // namespace

void IncrementParams::validate() const {
  if (d < 1) throw DomainError("d must satisfy d >= 1");
  if (!(T > 0.0)) throw DomainError("T must be positive");
  if (tau < 1) throw DomainError("tau must satisfy tau >= 1");
  if (K < 1) throw DomainError("K must satisfy K >= 1");
  if (J < 1) throw DomainError("J must satisfy J >= 1");
}

Eigen::VectorXcd BlockVector::flattened() const {
  Eigen::VectorXcd v(blocks.size());
  for (int j = 0; j < length(); ++j) v.segment(j * dimension(), dimension()) = blocks.col(j);
  return v;
}

BlockVector BlockVector::from_flattened(const Eigen::VectorXcd& v, int K) {
  if (K < 1 || v.size() % K != 0) throw DimensionError("flattened size is not a multiple of K");
  BlockVector out = BlockVector::zero(K, static_cast<int>(v.size()) / K);
  for (int j = 0; j < out.length(); ++j) out.blocks.col(j) = v.segment(j * K, K);
  return out;
}

double BlockVector::total_norm() const {
  double s = 0.0;
  for (int j = 0; j < length(); ++j) s += blocks.col(j).norm();
  return s;
}

double BlockVector::sup_norm() const {
  double s = 0.0;
  for (int j = 0; j < length(); ++j) s = std::max(s, blocks.col(j).norm());
  return s;
}

BlockVector BlockVector::padded(int len) const {
  if (len <= length()) return *this;
  BlockVector out = BlockVector::zero(dimension(), len);
  out.blocks.leftCols(length()) = blocks;
  return out;
}

BlockVector BlockVector::tail_truncated(double rel_tol) const {
  double total = total_norm();
  if (total == 0.0 || length() <= 1) return *this;
  double tail = 0.0;
  int keep = length();
  for (int j = length() - 1; j >= 1; --j) {
    tail += blocks.col(j).norm();
    if (tail < rel_tol * total)
      keep = j;
    else
      break;
  }
  return BlockVector(blocks.leftCols(keep));
}

template <typename Scalar>
ProcessPathT<Scalar> increment_path(const ProcessPathT<Scalar>& path, int d, double step) {
  if (d < 1) throw DomainError("increment order must satisfy d >= 1");
  int s = grid_multiple(step, path.delta_t, "step");
  if (path.size() <= d * s)
    throw InsufficientHistoryError("path too short for a d-fold increment of this step");
  ProcessPathT<Scalar> out;
  out.t_min = path.t_min + d * s * path.delta_t;
  out.delta_t = path.delta_t;
  out.values.resize(path.size() - d * s);
  for (int i = 0; i < out.size(); ++i) {
    Scalar acc{};
    for (int l = 0; l <= d; ++l) {
      double c = static_cast<double>(binom(d, l));
      acc += ((l % 2 == 0) ? c : -c) * path.values[i + d * s - l * s];
    }
    out.values[i] = acc;
  }
  return out;
}

template <typename Scalar>
std::vector<BlockFunctionT<Scalar>> block_decompose(const ProcessPathT<Scalar>& path, double T) {
  int per = grid_multiple(T, path.delta_t, "period T");
  double start = path.t_min / T;
  if (std::abs(start - std::round(start)) > 1e-9)
    throw GridMismatchError("path start is not aligned to a period boundary");
  int n = path.size();
  bool closed = (n % per == 1);
  if (!closed && n % per != 0)
    throw GridMismatchError("path span is not a whole number of periods");
  int n_blocks = n / per;
  if (n_blocks == 0) throw EmptyInputError("path shorter than one period");
  std::vector<BlockFunctionT<Scalar>> out(n_blocks);
  for (int j = 0; j < n_blocks; ++j) {
    auto& blk = out[j];
    blk.block_index = j + static_cast<int>(std::lround(start));
    blk.delta_t = path.delta_t;
    blk.samples = path.values.segment(j * per, per);
    if (j + 1 < n_blocks || closed)
      blk.closing = path.values[(j + 1) * per];
    else
      blk.closing = blk.samples[0];  // periodic closure when no trailing sample exists
  }
  return out;
}

namespace {

template <typename Scalar>
Eigen::VectorXcd block_transform(const BlockFunctionT<Scalar>& block, int K, double sign) {
  if (block.samples.size() == 0) throw EmptyInputError("empty block");
  if (K < 1) throw DomainError("K must satisfy K >= 1");
  const int n = static_cast<int>(block.samples.size());
  const double T = block.period();
  const double dt = block.delta_t;
  Eigen::VectorXcd out(K);
  for (int k = 1; k <= K; ++k) {
    const double freq = sign * basis_frequency(k);
    const double w = 2.0 * std::numbers::pi * freq / T;
    Complex acc = 0.5 * (Complex(block.samples[0]) + Complex(block.closing) * std::polar(1.0, w * T));
    for (int m = 1; m < n; ++m)
      acc += Complex(block.samples[m]) * std::polar(1.0, w * (m * dt));
    out[k - 1] = acc * dt / std::sqrt(T);
  }
  return out;
}

}  // namespace

template <typename Scalar>
Eigen::VectorXcd fourier_block(const BlockFunctionT<Scalar>& block, int K) {
  return block_transform(block, K, -1.0);
}

template <typename Scalar>
Eigen::VectorXcd coefficient_block(const BlockFunctionT<Scalar>& block, int K) {
  return block_transform(block, K, +1.0);
}

long long dcoef(int d, int k) {
  if (d < 1) throw DomainError("d must satisfy d >= 1");
  if (k < 0) throw DomainError("k must satisfy k >= 0");
  return binom(k + d - 1, d - 1);
}

long long dtau_coef(int d, int tau, int k) {
  if (tau < 1) throw DomainError("tau must satisfy tau >= 1");
  if (k < 0) throw DomainError("k must satisfy k >= 0");
  if (k % tau != 0) return 0;
  return dcoef(d, k / tau);
}

BlockVector apply_D_tau(const BlockVector& a, const IncrementParams& params) {
  params.validate();
  const int len = a.length();
  BlockVector b = BlockVector::zero(a.dimension(), len);
  for (int j = 0; j < len; ++j)
    for (int m = j; m < len; m += params.tau)
      b.blocks.col(j) += static_cast<double>(dcoef(params.d, (m - j) / params.tau)) * a.blocks.col(m);
  return b;
}

double b_coeff(const CoefficientFunction& a, const IncrementParams& params,
               double horizon_end, double t) {
  params.validate();
  const auto& path = a.samples;
  if (t < -1e-12 || t > horizon_end * (1.0 + 1e-12))
    throw DomainError("t outside [0, horizon_end]");
  int sp = grid_multiple(params.step(), path.delta_t, "tau*T");
  int ti = path.index_of(std::min(t, path.t_max()));
  int hi = static_cast<int>(std::lround(horizon_end / path.delta_t));
  double acc = 0.0;
  for (int k = 0; ti + k * sp <= hi; ++k) {
    int idx = ti + k * sp;
    if (idx >= path.size()) break;  // a vanishes beyond its sampled support
    acc += path.values[idx] * static_cast<double>(dcoef(params.d, k));
  }
  return acc;
}

double b_coeff_finite(const CoefficientFunction& a, const IncrementParams& params,
                      int N, double t) {
  if (N < 0) throw DomainError("N must satisfy N >= 0");
  return b_coeff(a, params, (N + 1) * params.T, t);
}

double v_coeff(const ProcessPath& b_samples, const IncrementParams& params,
               std::optional<double> horizon_end, double t) {
  params.validate();
  const double sigma = params.step();
  if (t < -sigma * params.d - 1e-12 || t >= -1e-12)
    throw DomainError("t outside [-tau*T*d, 0)");
  int sp = grid_multiple(sigma, b_samples.delta_t, "tau*T");
  int si = static_cast<int>(std::lround(t / b_samples.delta_t));
  if (std::abs(t / b_samples.delta_t - si) > 1e-9)
    throw GridMismatchError("t is not on the sample grid");
  int lmin = (-si + sp - 1) / sp;  // least integer >= -t/(tau*T)
  int lmax = params.d;
  if (horizon_end) {
    int hi = static_cast<int>(std::lround(*horizon_end / b_samples.delta_t));
    lmax = std::min(lmax, (hi - si) / sp);
  }
  double acc = 0.0;
  for (int l = lmin; l <= lmax; ++l) {
    long long c = 1;
    for (int i = 1; i <= l; ++i) c = c * (params.d - l + i) / i;  // C(d, l)
    int idx = si + l * sp;
    if (idx < 0 || idx >= b_samples.size()) continue;
    acc += ((l % 2 == 0) ? 1.0 : -1.0) * static_cast<double>(c) * b_samples.values[idx];
  }
  return acc;
}

ProcessPath sample_b(const CoefficientFunction& a, const IncrementParams& params,
                     double horizon_end, BreakpointRule rule) {
  params.validate();
  const auto& src = a.samples;
  int hi = grid_multiple(horizon_end, src.delta_t, "horizon_end");
  int sp = grid_multiple(params.step(), src.delta_t, "tau*T");
  ProcessPath out;
  out.t_min = 0.0;
  out.delta_t = src.delta_t;
  out.values.resize(hi + 1);
  for (int m = 0; m <= hi; ++m) {
    double acc = 0.0;
    for (int k = 0; m + k * sp <= hi; ++k) {
      int idx = m + k * sp;
      double av = idx < src.size() ? src.values[idx] : 0.0;
      acc += av * static_cast<double>(dcoef(params.d, k));
    }
    out.values[m] = acc;
  }
  if (rule == BreakpointRule::averaged) {
    // at t = horizon_end - k*tau*T the k-th term enters the sum; the jump size
    // is a(horizon_end) d(k), so the mean of the one-sided limits subtracts half
    double a_end = hi < src.size() ? src.values[hi] : 0.0;
    for (int k = 1; k * sp <= hi; ++k)
      out.values[hi - k * sp] -= 0.5 * a_end * static_cast<double>(dcoef(params.d, k));
  }
  return out;
}

ProcessPath sample_v(const ProcessPath& b_samples, const IncrementParams& params,
                     std::optional<double> horizon_end, BreakpointRule rule) {
  params.validate();
  int sp = grid_multiple(params.step(), b_samples.delta_t, "tau*T");
  const int n = params.d * sp;
  ProcessPath out;
  out.t_min = -params.step() * params.d;
  out.delta_t = b_samples.delta_t;
  out.values.resize(n + 1);
  std::optional<int> hi;
  if (horizon_end) hi = static_cast<int>(std::lround(*horizon_end / b_samples.delta_t));
  for (int i = 0; i <= n; ++i) {
    int si = i - n;  // grid index of t (t = si * dt <= 0)
    int lmin = (si == 0) ? 1 : (-si + sp - 1) / sp;  // t = 0 uses the left limit
    int lmax = params.d;
    if (hi) lmax = std::min(lmax, (*hi - si) / sp);
    double acc = 0.0;
    for (int l = lmin; l <= lmax; ++l) {
      long long c = 1;
      for (int q = 1; q <= l; ++q) c = c * (params.d - l + q) / q;
      int idx = si + l * sp;
      if (idx < 0 || idx >= b_samples.size()) continue;
      double term = static_cast<double>(c) * b_samples.values[idx];
      if (l % 2 != 0) term = -term;
      // interior breakpoints sit at t = -l*tau*T where the l-th term enters;
      // the averaged rule gives that term half weight
      if (rule == BreakpointRule::averaged && si != 0 && si != -n && (-si) % sp == 0 &&
          l == (-si) / sp)
        term *= 0.5;
      acc += term;
    }
    out.values[i] = acc;
  }
  return out;
}

BlockVector coefficient_blocks(const CoefficientFunction& a, const IncrementParams& params) {
  params.validate();
  auto blocks = block_decompose(a.samples, params.T);
  BlockVector out = BlockVector::zero(params.K, static_cast<int>(blocks.size()));
  for (std::size_t j = 0; j < blocks.size(); ++j)
    out.blocks.col(static_cast<int>(j)) = coefficient_block(blocks[j], params.K);
  return out;
}

SummabilityReport check_summability(const BlockVector& a, double rel_tol) {
  SummabilityReport rep;
  for (int j = 0; j < a.length(); ++j) {
    double nj = a.blocks.col(j).norm();
    rep.sum_norm += nj;
    rep.weighted_sum += (j + 1) * nj;
  }
  BlockVector trunc = a.tail_truncated(rel_tol);
  double kept = 0.0;
  for (int j = 0; j < trunc.length(); ++j) kept += trunc.blocks.col(j).norm();
  rep.tail_fraction = rep.sum_norm > 0 ? (rep.sum_norm - kept) / rep.sum_norm : 0.0;
  rep.ok = std::isfinite(rep.sum_norm) && std::isfinite(rep.weighted_sum);
  return rep;
}

double trapezoid(const ProcessPath& path) {
  if (path.size() < 2) return 0.0;
  double acc = 0.5 * (path.values[0] + path.values[path.size() - 1]);
  for (int i = 1; i + 1 < path.size(); ++i) acc += path.values[i];
  return acc * path.delta_t;
}

Complex trapezoid(const ComplexPath& path) {
  if (path.size() < 2) return Complex{};
  Complex acc = 0.5 * (path.values[0] + path.values[path.size() - 1]);
  for (int i = 1; i + 1 < path.size(); ++i) acc += path.values[i];
  return acc * path.delta_t;
}

template ProcessPathT<double> increment_path(const ProcessPathT<double>&, int, double);
template ProcessPathT<Complex> increment_path(const ProcessPathT<Complex>&, int, double);
template std::vector<BlockFunctionT<double>> block_decompose(const ProcessPathT<double>&, double);
template std::vector<BlockFunctionT<Complex>> block_decompose(const ProcessPathT<Complex>&, double);
template Eigen::VectorXcd fourier_block(const BlockFunctionT<double>&, int);
template Eigen::VectorXcd fourier_block(const BlockFunctionT<Complex>&, int);
template Eigen::VectorXcd coefficient_block(const BlockFunctionT<double>&, int);
template Eigen::VectorXcd coefficient_block(const BlockFunctionT<Complex>&, int);

}  // namespace pcx
