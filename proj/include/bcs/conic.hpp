#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace bcs {

// --- scaled symmetric vectorization -----------------------------------------
//
// A side-q symmetric matrix is stored as its upper triangle in column-major
// order with off-diagonal entries scaled by sqrt(2), so Euclidean inner
// products of vectorized blocks equal Frobenius products of the matrices.

inline constexpr int svec_size(int side) { return side * (side + 1) / 2; }

// position of entry (i,j), i <= j, within the vectorized upper triangle
inline constexpr int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

inline constexpr double kSqrt2 = 1.4142135623730951;

inline Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
  const int q = static_cast<int>(S.rows());
  Eigen::VectorXd v(svec_size(q));
  for (int j = 0; j < q; ++j)
    for (int i = 0; i <= j; ++i) v[svec_index(i, j)] = (i == j) ? S(i, j) : kSqrt2 * S(i, j);
  return v;
}

inline Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int side) {
  if (v.size() != svec_size(side)) throw std::invalid_argument("unsvec: length mismatch");
  Eigen::MatrixXd S(side, side);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = (i == j) ? v[svec_index(i, j)] : v[svec_index(i, j)] / kSqrt2;
      S(i, j) = x;
      S(j, i) = x;
    }
  return S;
}

// --- cones and programs ------------------------------------------------------

enum class ConeType { zero, nonneg, psd };

struct ConeBlock {
  ConeType type = ConeType::zero;
  int dim = 0;  // zero/nonneg: component count; psd: matrix side

  int rows() const { return type == ConeType::psd ? svec_size(dim) : dim; }
};

struct ConeSpec {
  std::vector<ConeBlock> blocks;

  int total_rows() const {
    int t = 0;
    for (const auto& b : blocks) t += b.rows();
    return t;
  }
};

inline ConeBlock Zero(int dim) { return {ConeType::zero, dim}; }
inline ConeBlock Nonneg(int dim) { return {ConeType::nonneg, dim}; }
inline ConeBlock Psd(int side) { return {ConeType::psd, side}; }

// minimize c.u  subject to  h - G u in K
struct ConicProgram {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  ConeSpec cones;
};

struct SolverSettings {
  double rho = 1.0;        // ADMM penalty
  double alpha = 1.6;      // over-relaxation, in (0,2)
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iters = 20000;
  bool adaptive_rho = true;
  // Programs whose optimum is attained on a whole face leave the returned
  // point unspecified; the plain splitting settles on an arbitrary face point.
  // With tie_break, a first pass minimizes c + eps*max(1,|c|_inf)*dir and the
  // main pass restarts from its iterate with a raised penalty, so among
  // multiple optima the solver prefers one where dir.u is small. An empty
  // direction means all-ones (small coordinate sum).
  bool tie_break = true;
  double tie_break_eps = 0.02;
  Eigen::VectorXd tie_break_dir;
  bool record_history = false;
  std::string trace_path;  // nonempty: per-iteration CSV dump
};

enum class SolveStatus { optimal, max_iters, primal_infeasible, dual_infeasible, numeric_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

struct IterateRecord {
  int iter;
  double primal_res, dual_res, gap, rho;
};

struct ConicSolution {
  Eigen::VectorXd u, s, z;
  SolveStatus status = SolveStatus::max_iters;
  double primal_res = 0.0, dual_res = 0.0, gap = 0.0;
  double objective = 0.0;  // c.u at the returned iterate
  int iterations = 0;
  double solve_seconds = 0.0;
  int failure_iter = -1;  // set on numeric_failure
  std::vector<IterateRecord> history;
};

// --- cone projection ----------------------------------------------------------

namespace detail {

// closed-form projection of a vectorized 2x2 symmetric matrix onto the PSD cone
inline void project_psd2(const double* in, double* out) {
  const double a = in[0], b = in[1] / kSqrt2, d = in[2];
  const double mean = 0.5 * (a + d);
  const double disc = std::hypot(0.5 * (a - d), b);
  const double lam1 = mean + disc, lam2 = mean - disc;
  if (lam2 >= 0.0) {
    out[0] = in[0];
    out[1] = in[1];
    out[2] = in[2];
    return;
  }
  if (lam1 <= 0.0) {
    out[0] = out[1] = out[2] = 0.0;
    return;
  }
  // keep only the positive eigenpair
  double vx = b, vy = lam1 - a;
  double nrm2 = vx * vx + vy * vy;
  if (nrm2 <= 0.0) {
    if (a >= d) { vx = 1.0; vy = 0.0; } else { vx = 0.0; vy = 1.0; }
    nrm2 = 1.0;
  }
  const double scale = lam1 / nrm2;
  out[0] = scale * vx * vx;
  out[1] = kSqrt2 * scale * vx * vy;
  out[2] = scale * vy * vy;
}

inline void project_psd(const double* in, double* out, int side) {
  if (side == 1) {
    out[0] = std::max(in[0], 0.0);
    return;
  }
  if (side == 2) {
    project_psd2(in, out);
    return;
  }
  Eigen::MatrixXd S(side, side);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = (i == j) ? in[svec_index(i, j)] : in[svec_index(i, j)] / kSqrt2;
      S(i, j) = x;
      S(j, i) = x;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd P =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  for (int j = 0; j < side; ++j)
    for (int i = 0; i <= j; ++i)
      out[svec_index(i, j)] = (i == j) ? P(i, j) : kSqrt2 * P(i, j);
}

inline void project_cone_inplace(const Eigen::VectorXd& v, Eigen::VectorXd& out,
                                 const ConeSpec& cones) {
  int off = 0;
  for (const auto& b : cones.blocks) {
    const int r = b.rows();
    switch (b.type) {
      case ConeType::zero:
        out.segment(off, r).setZero();
        break;
      case ConeType::nonneg:
        out.segment(off, r) = v.segment(off, r).cwiseMax(0.0);
        break;
      case ConeType::psd:
        project_psd(v.data() + off, out.data() + off, b.dim);
        break;
    }
    off += r;
  }
}

}  // namespace detail

// Blockwise Euclidean projection onto the cone product.
inline Eigen::VectorXd project_cone(const Eigen::VectorXd& v, const ConeSpec& cones) {
  if (v.size() != cones.total_rows())
    throw std::invalid_argument("project_cone: vector length " + std::to_string(v.size()) +
                                " does not match cone dimension " +
                                std::to_string(cones.total_rows()));
  Eigen::VectorXd out(v.size());
  detail::project_cone_inplace(v, out, cones);
  return out;
}

// --- residuals ----------------------------------------------------------------

struct ResidualTriple {
  double primal, dual, gap;
};

// Relative-scaled optimality measures at (u, s, z).
inline ResidualTriple residuals(const ConicProgram& prog, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  if (u.size() != prog.c.size() || s.size() != prog.h.size() || z.size() != prog.h.size())
    throw std::invalid_argument("residuals: dimension mismatch");
  const Eigen::VectorXd Gu = prog.G * u;
  const Eigen::VectorXd Gtz = prog.G.transpose() * z;
  const double rp = (Gu + s - prog.h).norm();
  const double sp = std::max({Gu.norm(), s.norm(), prog.h.norm()});
  const double rd = (prog.c + Gtz).norm();
  const double sd = std::max(prog.c.norm(), Gtz.norm());
  const double pobj = prog.c.dot(u), dobj = prog.h.dot(z);
  return {rp / (1.0 + sp), rd / (1.0 + sd),
          std::abs(pobj + dobj) / (1.0 + std::abs(pobj) + std::abs(dobj))};
}

// --- ADMM solver ----------------------------------------------------------------

namespace detail {

inline void validate_program(const ConicProgram& prog) {
  const int d = static_cast<int>(prog.c.size());
  const int p = static_cast<int>(prog.h.size());
  if (prog.G.rows() != p || prog.G.cols() != d)
    throw std::invalid_argument("solve: G must be " + std::to_string(p) + "x" +
                                std::to_string(d));
  if (prog.cones.total_rows() != p)
    throw std::invalid_argument("solve: cone dimensions sum to " +
                                std::to_string(prog.cones.total_rows()) + ", expected " +
                                std::to_string(p));
  for (const auto& b : prog.cones.blocks)
    if (b.dim < 1) throw std::invalid_argument("solve: cone block dimension must be >= 1");
}

}  // namespace detail

// Operator-splitting iteration on min c.u s.t. G u + s = h, s in K:
//   (i)  u-step: cached LDLT solve of the normal system (G'G + sigma I),
//   (ii) over-relaxed cone projection for s,
//   (iii) dual ascent on z.
// The normal matrix does not depend on rho or c (the proximal weight sigma is
// tied to rho), so one factorization serves the whole solve, including rho
// updates and the optional tie-break pre-pass on the perturbed objective.
inline ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings = {}) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();

  detail::validate_program(prog);
  if (!(settings.alpha > 0.0 && settings.alpha < 2.0))
    throw std::invalid_argument("solve: alpha must lie in (0,2)");
  if (settings.rho <= 0.0) throw std::invalid_argument("solve: rho must be positive");
  if (settings.eps_abs <= 0.0 || settings.eps_rel <= 0.0)
    throw std::invalid_argument("solve: tolerances must be positive");
  if (settings.max_iters < 1) throw std::invalid_argument("solve: max_iters must be positive");

  const int d = static_cast<int>(prog.c.size());
  const int p = static_cast<int>(prog.h.size());
  constexpr double kSigma = 1e-8;        // proximal weight / rho, keeps the normal matrix SPD
  constexpr int kRhoInterval = 50;       // adaptive-rho cadence
  constexpr double kRhoRatio = 10.0;
  constexpr double kInfeasTol = 1e-7;    // normalized certificate residual
  constexpr int kInfeasRun = 100;        // consecutive iterations below kInfeasTol
  constexpr double kRhoBoost = 10.0;     // penalty raise at the tie-break handover
  constexpr int kFloorHold = 500;        // final-pass iterations keeping the raised rho floor

  const Eigen::SparseMatrix<double> Gt = prog.G.transpose();
  Eigen::SparseMatrix<double> M = (Gt * prog.G).pruned();
  {
    Eigen::SparseMatrix<double> I(d, d);
    I.setIdentity();
    M = M + kSigma * I;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve: factorization of the normal system failed");

  double rho = settings.rho;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd Gu(p), gtil(p), w(p), rhs(d), Gtz(d);
  Eigen::VectorXd u_prev(d), z_prev(p);

  ConicSolution sol;
  sol.u = u;
  sol.s = s;
  sol.z = z;
  const bool keep_history = settings.record_history || !settings.trace_path.empty();

  double best_score = std::numeric_limits<double>::infinity();
  int pinf_run = 0, dinf_run = 0;
  const double h_norm = prog.h.norm();
  const double c_norm = prog.c.norm();

  int total_iter = 0;      // cumulative across both passes
  bool done = false;       // a terminal status has been set
  double rho_floor = 1e-6; // raised at the tie-break handover

  // Runs the splitting on objective cp for at most budget iterations. Only the
  // final pass reports convergence; the tie-break pass stops quietly once its
  // own residuals meet the tolerances. Infeasibility certificates are checked
  // against the true objective in both passes, so a detection in either pass
  // is sound for the reported program.
  const auto run_pass = [&](const Eigen::VectorXd& cp, int budget, bool final_pass) {
    const double cp_norm = cp.norm();
    for (int it = 0; it < budget; ++it) {
      // the raised floor only needs to cover the objective-switch transient;
      // afterwards full downward adaptivity returns so tight tolerances stay
      // reachable
      if (final_pass && it == kFloorHold) rho_floor = 1e-6;
      ++total_iter;
      u_prev = u;
      z_prev = z;

      rhs.noalias() = Gt * (prog.h - s - z / rho);
      rhs -= cp / rho;
      rhs += kSigma * u;
      u = ldlt.solve(rhs);

      Gu.noalias() = prog.G * u;
      gtil = settings.alpha * Gu + (1.0 - settings.alpha) * (prog.h - s);
      w = prog.h - gtil - z / rho;
      detail::project_cone_inplace(w, s, prog.cones);
      z += rho * (gtil + s - prog.h);

      if (!u.allFinite() || !s.allFinite() || !z.allFinite()) {
        sol.status = SolveStatus::numeric_failure;
        sol.failure_iter = total_iter;
        sol.iterations = total_iter;
        done = true;
        return;
      }

      // residuals at the unrelaxed iterate, against this pass's objective
      const double rp = (Gu + s - prog.h).norm();
      const double sp = std::max({Gu.norm(), s.norm(), h_norm});
      Gtz.noalias() = Gt * z;
      const double rd = (cp + Gtz).norm();
      const double sd = std::max(cp_norm, Gtz.norm());
      const double pobj = cp.dot(u);
      const double dobj = prog.h.dot(z);
      const double gap_raw = std::abs(pobj + dobj);

      const double rp_rel = rp / (1.0 + sp);
      const double rd_rel = rd / (1.0 + sd);
      const double gap_rel = gap_raw / (1.0 + std::abs(pobj) + std::abs(dobj));

      if (keep_history) sol.history.push_back({total_iter, rp_rel, rd_rel, gap_rel, rho});

      if (final_pass) {
        const double score = std::max({rp_rel, rd_rel, gap_rel});
        if (score < best_score) {
          best_score = score;
          sol.u = u;
          sol.s = s;
          sol.z = z;
          sol.primal_res = rp_rel;
          sol.dual_res = rd_rel;
          sol.gap = gap_rel;
          sol.objective = pobj;
          sol.iterations = total_iter;
        }
      }

      const bool p_ok = rp <= settings.eps_abs + settings.eps_rel * sp;
      const bool d_ok = rd <= settings.eps_abs + settings.eps_rel * sd;
      const bool g_ok = gap_raw <= settings.eps_abs +
                                       settings.eps_rel * std::max(std::abs(pobj), std::abs(dobj));
      if (p_ok && d_ok && g_ok) {
        if (final_pass) {
          sol.status = SolveStatus::optimal;
          sol.u = u;
          sol.s = s;
          sol.z = z;
          sol.primal_res = rp_rel;
          sol.dual_res = rd_rel;
          sol.gap = gap_rel;
          sol.objective = pobj;
          sol.iterations = total_iter;
          done = true;
        }
        return;  // tie-break pass: perturbed optimum reached, hand over
      }

      // divergence tests: iterate differences approximate infeasibility certificates
      const Eigen::VectorXd dz = z - z_prev;
      const double ndz = dz.norm();
      if (ndz > 1e-13) {
        const double cert = (Gt * dz).norm() / ndz;
        const double along_h = prog.h.dot(dz) / ndz;
        if (cert < kInfeasTol && along_h < -1e-10 * (1.0 + h_norm))
          ++pinf_run;
        else
          pinf_run = 0;
      } else {
        pinf_run = 0;
      }
      const Eigen::VectorXd du = u - u_prev;
      const double ndu = du.norm();
      if (ndu > 1e-13) {
        const Eigen::VectorXd ray = -(prog.G * du) / ndu;
        Eigen::VectorXd proj(p);
        detail::project_cone_inplace(ray, proj, prog.cones);
        const double cert = (ray - proj).norm();
        const double along_c = prog.c.dot(du) / ndu;
        if (cert < kInfeasTol && along_c < -1e-10 * (1.0 + c_norm))
          ++dinf_run;
        else
          dinf_run = 0;
      } else {
        dinf_run = 0;
      }
      if (pinf_run >= kInfeasRun) {
        sol.status = SolveStatus::primal_infeasible;
        sol.z = (z - z_prev) / std::max(ndz, 1e-300);
        sol.iterations = total_iter;
        done = true;
        return;
      }
      if (dinf_run >= kInfeasRun) {
        sol.status = SolveStatus::dual_infeasible;
        sol.u = (u - u_prev) / std::max(ndu, 1e-300);
        sol.iterations = total_iter;
        done = true;
        return;
      }

      if (settings.adaptive_rho && total_iter % kRhoInterval == 0) {
        if (rp_rel > kRhoRatio * rd_rel)
          rho = std::min(rho * 2.0, 1e6);
        else if (rd_rel > kRhoRatio * rp_rel)
          rho = std::max(rho * 0.5, rho_floor);
      }
    }
  };

  if (settings.tie_break && settings.tie_break_eps > 0.0 && settings.max_iters >= 2) {
    if (settings.tie_break_dir.size() != 0 && settings.tie_break_dir.size() != d)
      throw std::invalid_argument("solve: tie_break_dir length must match c");
    const double eps = settings.tie_break_eps * std::max(1.0, prog.c.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd cp =
        settings.tie_break_dir.size() == 0
            ? (prog.c + Eigen::VectorXd::Constant(d, eps)).eval()
            : (prog.c + eps * settings.tie_break_dir).eval();
    run_pass(cp, settings.max_iters / 2, false);
    // Raising the penalty damps the objective-switch transient, which would
    // otherwise walk the iterate away from the selected optimum; the floor
    // keeps later adaptive updates from re-enabling that walk.
    if (!done) {
      rho = std::min(rho * kRhoBoost, 1e6);
      rho_floor = rho;
    }
  }
  if (!done) run_pass(prog.c, settings.max_iters - total_iter, true);

  if (!done) {
    sol.status = SolveStatus::max_iters;  // best iterate already captured
    sol.iterations = total_iter;
  }

  sol.solve_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  if (!settings.trace_path.empty()) {
    std::ofstream trace(settings.trace_path);
    trace << "iter,primal_res,dual_res,gap,rho\n";
    trace.precision(12);
    for (const auto& r : sol.history)
      trace << r.iter << ',' << r.primal_res << ',' << r.dual_res << ',' << r.gap << ','
            << r.rho << '\n';
  }
  return sol;
}

}  // namespace bcs
