#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bcs/instance.hpp"

namespace bcs {

// Per-trial recovery accuracy. fpr is undefined when k = n, fnr when k = 0.
struct Metrics {
  bool exact = false;
  std::optional<double> fpr;
  std::optional<double> fnr;
  double runtime_s = 0.0;
};

// Threshold rule: x_i >= tau maps to 1 (ties go up).
inline Eigen::VectorXi quantize(const Eigen::VectorXd& x, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("quantize: tau must lie in (0,1)");
  Eigen::VectorXi out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i] >= tau ? 1 : 0;
  return out;
}

inline Metrics compute_metrics(const Eigen::VectorXi& x_hat, const Eigen::VectorXi& x_true,
                               double runtime_s = 0.0) {
  if (x_hat.size() != x_true.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  const int n = static_cast<int>(x_true.size());
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (x_true[i] != 0 && x_true[i] != 1)
      throw std::invalid_argument("compute_metrics: x_true is not binary");
    k += x_true[i];
  }
  int false_pos = 0, false_neg = 0;
  bool exact = true;
  for (int i = 0; i < n; ++i) {
    if (x_hat[i] != x_true[i]) exact = false;
    if (x_hat[i] != 0 && x_true[i] == 0) ++false_pos;
    if (x_hat[i] == 0 && x_true[i] != 0) ++false_neg;
  }
  Metrics m;
  m.exact = exact;
  m.runtime_s = runtime_s;
  if (k < n) m.fpr = static_cast<double>(false_pos) / (n - k);
  if (k > 0) m.fnr = static_cast<double>(false_neg) / k;
  return m;
}

// 10 log10(k / (m eta^2))
inline double snr_db(double k, double m, double eta) {
  if (k <= 0.0 || m <= 0.0 || eta <= 0.0)
    throw std::invalid_argument("snr_db: all arguments must be positive");
  return 10.0 * std::log10(k / (m * eta * eta));
}

// Enumerates every binary x with ||Ax - y||_inf <= max(eta, 1e-9), in Gray-code
// order with an incrementally updated product. Candidates inside a pre-filter
// slack are re-verified with a fresh product so accumulated drift cannot flip
// a boundary decision. Output sorted lexicographically.
inline std::vector<Eigen::VectorXi> brute_force_solve(const Instance& inst, int max_n = 24) {
  if (inst.n > max_n)
    throw std::invalid_argument("brute_force_solve: n = " + std::to_string(inst.n) +
                                " exceeds the enumeration guard (" + std::to_string(max_n) + ")");
  const double tol = std::max(inst.eta, 1e-9);
  const double slack = tol + 1e-6;
  const int n = inst.n;

  std::vector<Eigen::VectorXi> found;
  std::uint32_t mask = 0;
  Eigen::VectorXd Ax = Eigen::VectorXd::Zero(inst.m);

  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t t = 0;; ++t) {
    if ((Ax - inst.y).lpNorm<Eigen::Infinity>() <= slack) {
      Eigen::VectorXi x(n);
      for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1u;
      if ((inst.A * x.cast<double>() - inst.y).lpNorm<Eigen::Infinity>() <= tol)
        found.push_back(std::move(x));
    }
    if (t + 1 == total) break;
    const int b = std::countr_zero(t + 1);  // bit flipped between consecutive Gray codes
    mask ^= (std::uint32_t{1} << b);
    if (mask & (std::uint32_t{1} << b))
      Ax += inst.A.col(b);
    else
      Ax -= inst.A.col(b);
  }

  std::sort(found.begin(), found.end(), [](const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  });
  return found;
}

inline bool check_uniqueness(const Instance& inst, int max_n = 24) {
  return brute_force_solve(inst, max_n).size() == 1;
}

}  // namespace bcs
