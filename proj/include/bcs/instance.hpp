#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace bcs {

enum class NoiseDistribution { none, uniform };

// Bound on the measurement disturbance: ||zeta||_inf <= eta.
struct NoiseModel {
  double eta = 0.0;
  NoiseDistribution distribution = NoiseDistribution::none;
};

// One binary compressed sensing problem: recover x in {0,1}^n from y = A x (+ noise).
struct Instance {
  int n = 0;
  int m = 0;
  Eigen::MatrixXd A;  // m x n
  Eigen::VectorXd y;  // length m
  std::optional<Eigen::VectorXi> x_true;  // entries exactly 0/1 when present
  double eta = 0.0;
  std::optional<std::int64_t> seed;
};

namespace detail {

// murmur3 finalizer; full-period bijective mixer on 64 bits
inline std::uint64_t mix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (mix64(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace detail

// Stable per-trial seed so every grid cell is reproducible in isolation.
inline std::uint64_t derive_seed(std::uint64_t base_seed, int n, int k, int m, int trial) {
  std::uint64_t h = detail::mix64(base_seed);
  h = detail::hash_combine(h, static_cast<std::uint64_t>(n));
  h = detail::hash_combine(h, static_cast<std::uint64_t>(k));
  h = detail::hash_combine(h, static_cast<std::uint64_t>(m));
  h = detail::hash_combine(h, static_cast<std::uint64_t>(trial));
  return h;
}

// Draws A (Gaussian, variance 1/m, row-major order), a uniform size-k support,
// and the noise vector, in that fixed order from one seeded generator.
inline Instance generate_instance(int n, int k, int m, const NoiseModel& noise,
                                  std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_instance: n must be positive");
  if (k < 0 || k > n) throw std::invalid_argument("generate_instance: k must be in [0, n]");
  if (m < 1) throw std::invalid_argument("generate_instance: m must be positive");
  if (noise.eta < 0.0) throw std::invalid_argument("generate_instance: eta must be nonnegative");

  std::mt19937_64 rng(seed);
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.eta = (noise.distribution == NoiseDistribution::none) ? 0.0 : noise.eta;
  inst.seed = static_cast<std::int64_t>(seed);

  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  inst.A.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) inst.A(i, j) = gauss(rng);

  // partial Fisher-Yates: first k entries of a shuffled index list
  std::vector<int> idx(n);
  for (int j = 0; j < n; ++j) idx[j] = j;
  for (int j = 0; j < k; ++j) {
    std::uniform_int_distribution<int> pick(j, n - 1);
    std::swap(idx[j], idx[pick(rng)]);
  }
  Eigen::VectorXi x = Eigen::VectorXi::Zero(n);
  for (int j = 0; j < k; ++j) x[idx[j]] = 1;
  inst.x_true = x;

  inst.y = inst.A * x.cast<double>();
  if (inst.eta > 0.0) {
    std::uniform_real_distribution<double> unif(-inst.eta, inst.eta);
    for (int i = 0; i < m; ++i) inst.y[i] += unif(rng);
  }
  return inst;
}

// sum_i (x_i - x_i^2); zero exactly on binary vectors, positive elsewhere in [0,1]^n
inline double pop_objective(const Eigen::VectorXd& x) {
  constexpr double tol = 1e-9;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < -tol || x[i] > 1.0 + tol)
      throw std::domain_error("pop_objective: component " + std::to_string(i) +
                              " outside [0,1]: " + std::to_string(x[i]));
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] - x[i] * x[i];
  return s;
}

inline double residual_inf(const Instance& inst, const Eigen::VectorXd& x) {
  if (x.size() != inst.n)
    throw std::invalid_argument("residual_inf: x has length " + std::to_string(x.size()) +
                                ", expected n = " + std::to_string(inst.n));
  return (inst.A * x - inst.y).lpNorm<Eigen::Infinity>();
}

inline void save_instance(const Instance& inst, const std::string& path) {
  nlohmann::json j;
  j["n"] = inst.n;
  j["m"] = inst.m;
  auto rows = nlohmann::json::array();
  for (int i = 0; i < inst.m; ++i) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < inst.n; ++c) row.push_back(inst.A(i, c));
    rows.push_back(std::move(row));
  }
  j["A"] = std::move(rows);
  j["y"] = std::vector<double>(inst.y.data(), inst.y.data() + inst.y.size());
  if (inst.x_true) {
    auto xt = nlohmann::json::array();
    for (int i = 0; i < inst.n; ++i) xt.push_back((*inst.x_true)[i]);
    j["x_true"] = std::move(xt);
  }
  j["eta"] = inst.eta;
  if (inst.seed) j["seed"] = *inst.seed;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_instance: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("save_instance: write failed for " + path);
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_instance: " + path + ": " + e.what());
  }

  auto need = [&](const char* field) -> const nlohmann::json& {
    if (!j.contains(field))
      throw std::runtime_error("load_instance: missing field \"" + std::string(field) + "\"");
    return j.at(field);
  };

  Instance inst;
  try {
    inst.n = need("n").get<int>();
    inst.m = need("m").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_instance: field \"n\"/\"m\": ") + e.what());
  }
  if (inst.n < 1 || inst.m < 1)
    throw std::runtime_error("load_instance: fields \"n\" and \"m\" must be positive");

  const auto& A = need("A");
  if (!A.is_array() || static_cast<int>(A.size()) != inst.m)
    throw std::runtime_error("load_instance: field \"A\" must have m = " +
                             std::to_string(inst.m) + " rows");
  inst.A.resize(inst.m, inst.n);
  for (int i = 0; i < inst.m; ++i) {
    const auto& row = A.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != inst.n)
      throw std::runtime_error("load_instance: field \"A\" row " + std::to_string(i) +
                               " must have n = " + std::to_string(inst.n) + " entries");
    for (int c = 0; c < inst.n; ++c) inst.A(i, c) = row.at(c).get<double>();
  }

  const auto& y = need("y");
  if (!y.is_array() || static_cast<int>(y.size()) != inst.m)
    throw std::runtime_error("load_instance: field \"y\" has length " +
                             std::to_string(y.size()) + ", expected m = " +
                             std::to_string(inst.m));
  inst.y.resize(inst.m);
  for (int i = 0; i < inst.m; ++i) inst.y[i] = y.at(i).get<double>();

  if (j.contains("x_true")) {
    const auto& xt = j.at("x_true");
    if (!xt.is_array() || static_cast<int>(xt.size()) != inst.n)
      throw std::runtime_error("load_instance: field \"x_true\" has length " +
                               std::to_string(xt.size()) + ", expected n = " +
                               std::to_string(inst.n));
    Eigen::VectorXi x(inst.n);
    for (int i = 0; i < inst.n; ++i) {
      const double v = xt.at(i).get<double>();
      if (v != 0.0 && v != 1.0)
        throw std::runtime_error("load_instance: field \"x_true\" entry " +
                                 std::to_string(i) + " is not exactly 0 or 1");
      x[i] = static_cast<int>(v);
    }
    inst.x_true = x;
  }

  if (j.contains("eta")) {
    inst.eta = j.at("eta").get<double>();
    if (inst.eta < 0.0) throw std::runtime_error("load_instance: field \"eta\" must be nonnegative");
  }
  if (j.contains("seed")) inst.seed = j.at("seed").get<std::int64_t>();
  return inst;
}

}  // namespace bcs
