#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bcs/conic.hpp"
#include "bcs/evaluation.hpp"
#include "bcs/instance.hpp"

namespace bcs {

enum class ShorForm { dense, decomposed };

// Maps semantic moments to positions in the program's variable vector:
// x_i = x_scale * u[x_pos[i]], X_ii = u[diag_pos[i]], corner = u[corner_pos].
struct ShorLayout {
  std::vector<int> x_pos;
  std::vector<int> diag_pos;
  int corner_pos = 0;
  double x_scale = 1.0;
};

struct ShorProgram {
  ConicProgram program;
  int n = 0;
  int m = 0;
  ShorForm form = ShorForm::dense;
  bool noisy = false;
  ShorLayout layout;
};

struct RecoveryResult {
  Eigen::VectorXd x_cont;      // extracted first-row moments, clamped to [0,1]
  Eigen::VectorXi x_bin;       // quantized at 1/2
  double objective_value = 0.0;
  double rank_ratio = 0.0;     // second/first eigenvalue of the moment matrix
  bool certified_rank_one = false;
  ConicSolution solver;
};

namespace detail {

// Measurement rows against the x coordinates. Equality rows for the noise-free
// case; for eta > 0 the band |A_i x - y_i| <= eta becomes two Nonneg rows each.
inline void add_measurement_rows(std::vector<Eigen::Triplet<double>>& trip,
                                 Eigen::VectorXd& h, int& row, const Instance& inst,
                                 const std::vector<int>& x_pos, double coeff_scale,
                                 bool noisy, double eta) {
  for (int r = 0; r < inst.m; ++r) {
    if (!noisy) {
      for (int i = 0; i < inst.n; ++i)
        trip.emplace_back(row, x_pos[i], inst.A(r, i) * coeff_scale);
      h[row] = inst.y[r];
      ++row;
    } else {
      // eta - (A_r x - y_r) >= 0
      for (int i = 0; i < inst.n; ++i)
        trip.emplace_back(row, x_pos[i], inst.A(r, i) * coeff_scale);
      h[row] = eta + inst.y[r];
      ++row;
      // eta + (A_r x - y_r) >= 0
      for (int i = 0; i < inst.n; ++i)
        trip.emplace_back(row, x_pos[i], -inst.A(r, i) * coeff_scale);
      h[row] = eta - inst.y[r];
      ++row;
    }
  }
}

inline ShorProgram build_dense_impl(const Instance& inst, bool noisy, double eta) {
  const int n = inst.n;
  const int side = n + 1;
  const int d = svec_size(side);
  const int meas_rows = noisy ? 2 * inst.m : inst.m;
  const int zero_rows = 1 + (noisy ? 0 : inst.m);
  const int nonneg_rows = n + (noisy ? meas_rows : 0);
  const int p = zero_rows + nonneg_rows + d;

  ShorProgram shor;
  shor.n = n;
  shor.m = inst.m;
  shor.form = ShorForm::dense;
  shor.noisy = noisy;
  shor.layout.x_scale = 1.0 / kSqrt2;  // u holds svec(X); off-diagonals carry sqrt(2)
  shor.layout.corner_pos = svec_index(0, 0);
  for (int i = 1; i <= n; ++i) {
    shor.layout.x_pos.push_back(svec_index(0, i));
    shor.layout.diag_pos.push_back(svec_index(i, i));
  }

  ConicProgram& prog = shor.program;
  prog.c = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    prog.c[shor.layout.x_pos[i]] = 1.0 / kSqrt2;  // + X_{0i}
    prog.c[shor.layout.diag_pos[i]] = -1.0;       // - X_{ii}
  }

  prog.h = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;

  // corner pin X_00 = 1
  trip.emplace_back(row, shor.layout.corner_pos, 1.0);
  prog.h[row] = 1.0;
  ++row;

  if (!noisy) {
    add_measurement_rows(trip, prog.h, row, inst, shor.layout.x_pos, 1.0 / kSqrt2, false, 0.0);
  }
  prog.cones.blocks.push_back(Zero(zero_rows));

  if (noisy) {
    add_measurement_rows(trip, prog.h, row, inst, shor.layout.x_pos, 1.0 / kSqrt2, true, eta);
  }
  // relaxed binarity X_{0i} - X_{ii} >= 0; together with the PSD 2x2 minor
  // X_{0i}^2 <= X_{ii} this pins X_{0i} into [0,1], so no explicit box rows
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(row, shor.layout.x_pos[i], -1.0 / kSqrt2);
    trip.emplace_back(row, shor.layout.diag_pos[i], 1.0);
    prog.h[row] = 0.0;
    ++row;
  }
  prog.cones.blocks.push_back(Nonneg(nonneg_rows));

  // s_psd = svec(X) = u
  for (int j = 0; j < d; ++j) trip.emplace_back(row + j, j, -1.0);
  row += d;
  prog.cones.blocks.push_back(Psd(side));

  prog.G.resize(p, d);
  prog.G.setFromTriplets(trip.begin(), trip.end());
  return shor;
}

}  // namespace detail

// Order-1 moment relaxation, one PSD block of side n+1. Noise-free instances only.
inline ShorProgram build_shor(const Instance& inst) {
  if (inst.eta != 0.0)
    throw std::invalid_argument("build_shor: instance has eta > 0, use build_shor_noisy");
  return detail::build_dense_impl(inst, false, 0.0);
}

// Same relaxation with the equality rows replaced by the eta-band inequalities.
inline ShorProgram build_shor_noisy(const Instance& inst, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("build_shor_noisy: eta must be positive");
  return detail::build_dense_impl(inst, true, eta);
}

// The aggregate sparsity of the dense relaxation is an arrowhead (diagonal plus
// first row/column), whose graph is a star: chordal, maximal cliques {0,i}. PSD
// completion over those cliques replaces the side-(n+1) block by n side-2 blocks
//   B_i = [[t, x_i], [x_i, X_ii]]
// sharing the corner scalar t = 1, with identical optimal value.
inline ShorProgram build_decomposed(const Instance& inst, bool noisy) {
  if (noisy && inst.eta <= 0.0)
    throw std::invalid_argument("build_decomposed: noisy form needs instance.eta > 0");
  if (!noisy && inst.eta != 0.0)
    throw std::invalid_argument("build_decomposed: instance has eta > 0, use the noisy form");

  const int n = inst.n;
  const double eta = inst.eta;
  const int d = 2 * n + 1;  // t, x_1..x_n, X_11..X_nn
  const int meas_rows = noisy ? 2 * inst.m : inst.m;
  const int zero_rows = 1 + (noisy ? 0 : inst.m);
  const int nonneg_rows = n + (noisy ? meas_rows : 0);
  const int p = zero_rows + nonneg_rows + 3 * n;

  ShorProgram shor;
  shor.n = n;
  shor.m = inst.m;
  shor.form = ShorForm::decomposed;
  shor.noisy = noisy;
  shor.layout.x_scale = 1.0;
  shor.layout.corner_pos = 0;
  for (int i = 1; i <= n; ++i) {
    shor.layout.x_pos.push_back(i);
    shor.layout.diag_pos.push_back(n + i);
  }

  ConicProgram& prog = shor.program;
  prog.c = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    prog.c[1 + i] = 1.0;
    prog.c[n + 1 + i] = -1.0;
  }

  prog.h = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;

  trip.emplace_back(row, 0, 1.0);  // t = 1
  prog.h[row] = 1.0;
  ++row;

  if (!noisy)
    detail::add_measurement_rows(trip, prog.h, row, inst, shor.layout.x_pos, 1.0, false, 0.0);
  prog.cones.blocks.push_back(Zero(zero_rows));

  if (noisy)
    detail::add_measurement_rows(trip, prog.h, row, inst, shor.layout.x_pos, 1.0, true, eta);
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(row, 1 + i, -1.0);
    trip.emplace_back(row, n + 1 + i, 1.0);
    prog.h[row] = 0.0;
    ++row;
  }
  prog.cones.blocks.push_back(Nonneg(nonneg_rows));

  for (int i = 0; i < n; ++i) {
    trip.emplace_back(row, 0, -1.0);                 // B_i(0,0) = t
    trip.emplace_back(row + 1, 1 + i, -kSqrt2);      // svec off-diagonal of x_i
    trip.emplace_back(row + 2, n + 1 + i, -1.0);     // B_i(1,1) = X_ii
    row += 3;
    prog.cones.blocks.push_back(Psd(2));
  }

  prog.G.resize(p, d);
  prog.G.setFromTriplets(trip.begin(), trip.end());
  return shor;
}

// The relaxation's zero-objective face holds every lift of {x in [0,1]^n :
// measurements hold, X_ii = X_0i}, so the minimizer is not unique and a plain
// first-order solve lands on an arbitrary face point. This direction makes the
// solver's tie-break prefer the face point of minimal sum(x_i) without touching
// the other moments; on that face the minimal-sum point is the binary vertex
// whenever box basis pursuit would recover it.
inline Eigen::VectorXd tie_break_direction(const ShorProgram& shor) {
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(shor.program.c.size());
  for (int i = 0; i < shor.n; ++i) dir[shor.layout.x_pos[i]] = shor.layout.x_scale;
  return dir;
}

// --- clique certificate --------------------------------------------------------

// Index sets over the slack-variable chain {x_1..x_n, z_{1,1}..z_{m,n-1}}.
// Variable ids: x_l -> l-1; z_{i,j} -> n + (j-1)m + (i-1).
struct CliqueSet {
  int n = 0;
  int m = 0;
  std::vector<std::vector<int>> cliques;

  int total_variables() const { return n + m * (n - 1); }

  std::string variable_name(int id) const {
    if (id < n) return "x" + std::to_string(id + 1);
    const int t = id - n;
    return "z" + std::to_string(t % m + 1) + "," + std::to_string(t / m + 1);
  }
};

// The n clique sets of the slack-chain reformulation:
//   I_1 = {x_1, z_{1,1}..z_{m,1}},
//   I_l = {x_l, z_{1,l-1}, z_{1,l}, .., z_{m,l-1}, z_{m,l}},  1 < l < n,
//   I_n = {x_n, z_{1,n-1}..z_{m,n-1}}.
inline CliqueSet build_cliques(int n, int m) {
  if (n < 2) throw std::invalid_argument("build_cliques: n must be >= 2 (no slack chain)");
  if (m < 1) throw std::invalid_argument("build_cliques: m must be >= 1");

  auto z_id = [n, m](int i, int j) { return n + (j - 1) * m + (i - 1); };  // 1-based i,j

  CliqueSet cs;
  cs.n = n;
  cs.m = m;
  cs.cliques.resize(n);
  for (int l = 1; l <= n; ++l) {
    auto& I = cs.cliques[l - 1];
    I.push_back(l - 1);  // x_l
    if (l > 1)
      for (int i = 1; i <= m; ++i) I.push_back(z_id(i, l - 1));
    if (l < n)
      for (int i = 1; i <= m; ++i) I.push_back(z_id(i, l));
    std::sort(I.begin(), I.end());
  }
  return cs;
}

// --- minimizer extraction -------------------------------------------------------

namespace detail {

inline double eigen_ratio_psd2(double a, double b_scaled, double d) {
  const double b = b_scaled / kSqrt2;
  const double mean = 0.5 * (a + d);
  const double disc = std::hypot(0.5 * (a - d), b);
  const double lam1 = mean + disc;
  const double lam2 = std::max(mean - disc, 0.0);
  return lam1 <= 0.0 ? 0.0 : lam2 / lam1;
}

}  // namespace detail

// Reads the first-row moments through the layout, clamps them into the box, and
// certifies rank 1 via the second-to-first eigenvalue ratio of the moment
// matrix (decomposed form: max of the per-block 2x2 ratios, conservative
// relative to the dense ratio).
inline RecoveryResult extract_minimizer(const ShorProgram& shor, const ConicSolution& sol,
                                        double rank_tol = 1e-3) {
  if (sol.u.size() != shor.program.c.size())
    throw std::invalid_argument("extract_minimizer: solution does not match program");
  if (rank_tol <= 0.0) throw std::invalid_argument("extract_minimizer: rank_tol must be positive");

  RecoveryResult res;
  res.solver = sol;
  res.objective_value = shor.program.c.dot(sol.u);

  const int n = shor.n;
  res.x_cont.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = shor.layout.x_scale * sol.u[shor.layout.x_pos[i]];
    res.x_cont[i] = std::clamp(v, 0.0, 1.0);
  }
  res.x_bin = quantize(res.x_cont, 0.5);

  // rank certificate from the slack block (the projected, exactly-conic iterate)
  int off = 0;
  double ratio = 0.0;
  for (const auto& b : shor.program.cones.blocks) {
    if (b.type == ConeType::psd) {
      if (b.dim == 2) {
        ratio = std::max(ratio, detail::eigen_ratio_psd2(sol.s[off], sol.s[off + 1],
                                                         sol.s[off + 2]));
      } else {
        const Eigen::MatrixXd S = unsvec(sol.s.segment(off, svec_size(b.dim)), b.dim);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const auto& lam = es.eigenvalues();  // ascending
        const double lam1 = lam[b.dim - 1];
        const double lam2 = std::max(lam[b.dim - 2], 0.0);
        if (lam1 > 0.0) ratio = std::max(ratio, lam2 / lam1);
      }
    }
    off += b.rows();
  }
  res.rank_ratio = ratio;
  res.certified_rank_one = (sol.status == SolveStatus::optimal) && (ratio <= rank_tol);
  return res;
}

}  // namespace bcs
