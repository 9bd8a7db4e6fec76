// Acceptance gate: eight checks covering the enumeration oracle, relaxation
// exactness, form equivalence, the clique certificate, desk-scale benchmark
// cells, the noisy band, and the solver unit fixtures. Prints one verdict line
// per criterion and exits with the number of failures. The full 9x7 grid at
// 100 trials x 4 methods (criterion 9) is a documented long-running
// reproduction driven by the CLI, not part of this gate.
#include <chrono>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bcs/bcs.hpp"

using namespace bcs;

namespace {

int g_failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s - %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SuiteInstance {
  Instance inst;
  int k;
};

// 100 uniqueness-filtered instances, n in [6,14], m in [1,6], k <= n/2, with a
// 30% noisy share at eta = 0.02
std::vector<SuiteInstance> make_suite(int count) {
  std::vector<SuiteInstance> suite;
  std::mt19937_64 rng(20240817);
  int tried = 0;
  while (static_cast<int>(suite.size()) < count && tried < 100000) {
    ++tried;
    std::uniform_int_distribution<int> pick_n(6, 14), pick_m(1, 6);
    const int n = pick_n(rng);
    const int m = pick_m(rng);
    std::uniform_int_distribution<int> pick_k(0, n / 2);
    const int k = pick_k(rng);
    NoiseModel noise;
    if ((tried % 10) < 3) noise = {0.02, NoiseDistribution::uniform};
    Instance inst = generate_instance(n, k, m, noise, derive_seed(7, n, k, m, tried));
    if (!check_uniqueness(inst)) continue;
    suite.push_back({std::move(inst), k});
  }
  return suite;
}

SolverSettings tight_settings(const ShorProgram& shor) {
  SolverSettings s;
  s.eps_abs = 1e-8;
  s.eps_rel = 1e-8;
  s.max_iters = 50000;
  s.tie_break_dir = tie_break_direction(shor);
  return s;
}

bool slack_in_cones(const ConicProgram& prog, const Eigen::VectorXd& u, double tol) {
  const Eigen::VectorXd slack = prog.h - prog.G * u;
  int off = 0;
  for (const auto& b : prog.cones.blocks) {
    const int rows = b.rows();
    if (b.type == ConeType::zero) {
      if (slack.segment(off, rows).lpNorm<Eigen::Infinity>() > tol) return false;
    } else if (b.type == ConeType::nonneg) {
      if (slack.segment(off, rows).minCoeff() < -tol) return false;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unsvec(slack.segment(off, rows), b.dim));
      if (es.eigenvalues().minCoeff() < -tol) return false;
    }
    off += rows;
  }
  return true;
}

Eigen::VectorXd dense_lift(const Eigen::VectorXi& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd v(n + 1);
  v[0] = 1.0;
  for (int i = 0; i < n; ++i) v[1 + i] = x[i];
  const Eigen::MatrixXd X = v * v.transpose();
  return svec(X);
}

void criterion_1(const std::vector<SuiteInstance>& suite) {
  const auto t0 = std::chrono::steady_clock::now();
  int fails = 0;
  for (const auto& s : suite) {
    const auto sols = brute_force_solve(s.inst);
    if (sols.size() != 1 || sols[0] != *s.inst.x_true) ++fails;
    if (pop_objective(sols[0].cast<double>()) != 0.0) ++fails;
    if (s.inst.eta > 0.0) {
      // a feasible interior perturbation must score strictly positive
      const Eigen::VectorXd xp = sols[0].cast<double>() * 0.999 +
                                 Eigen::VectorXd::Constant(s.inst.n, 0.0005);
      if (residual_inf(s.inst, xp) <= s.inst.eta && pop_objective(xp) <= 0.0) ++fails;
    }
  }
  // deterministic powers-of-two family at m = 1
  int p2_checked = 0;
  for (int n = 6; n <= 14; ++n) {
    Instance inst;
    inst.n = n;
    inst.m = 1;
    inst.A.resize(1, n);
    for (int j = 0; j < n; ++j) inst.A(0, j) = double(1u << j);
    std::mt19937_64 rng(n);
    std::uniform_int_distribution<unsigned> pick(0, (1u << n) - 1);
    for (int rep = 0; rep < 3; ++rep) {
      const unsigned v = pick(rng);
      inst.y = Eigen::VectorXd::Constant(1, double(v));
      Eigen::VectorXi want(n);
      for (int j = 0; j < n; ++j) want[j] = (v >> j) & 1u;
      inst.x_true = want;
      const auto sols = brute_force_solve(inst);
      if (sols.size() != 1 || sols[0] != want) ++fails;
      ++p2_checked;
    }
  }
  const double sec = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%zu unique-solution instances + %d powers-of-two decodes, %d failures, %.1fs",
                suite.size(), p2_checked, fails, sec);
  verdict(1, fails == 0 && suite.size() == 100 && sec < 60.0, buf);
}

void criterion_2(const std::vector<SuiteInstance>& suite) {
  const auto t0 = std::chrono::steady_clock::now();
  int val_fails = 0, lift_fails = 0;
  double worst = 0.0;
  for (const auto& s : suite) {
    const ShorProgram shor =
        s.inst.eta > 0.0 ? build_shor_noisy(s.inst, s.inst.eta) : build_shor(s.inst);
    const ConicSolution sol = solve(shor.program, tight_settings(shor));
    const double val = shor.program.c.dot(sol.u);
    worst = std::max(worst, std::abs(val));
    if (val < -1e-5 || val > 1e-5) ++val_fails;

    const Eigen::VectorXd lift = dense_lift(*s.inst.x_true);
    if (!slack_in_cones(shor.program, lift, 1e-10)) ++lift_fails;
    if (std::abs(shor.program.c.dot(lift)) > 1e-12) ++lift_fails;
  }
  const double sec = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "optimal values within 1e-5 (worst %.1e), lifts row-feasible at 1e-10; "
                "%d/%d value misses, %d lift misses, %.1fs",
                worst, val_fails, static_cast<int>(suite.size()), lift_fails, sec);
  verdict(2, val_fails == 0 && lift_fails == 0 && sec < 300.0, buf);
}

void criterion_3() {
  int val_fails = 0, bin_fails = 0, both_cert = 0;
  double worst_gap = 0.0;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 30; ++i) {
    std::uniform_int_distribution<int> pick_n(8, 15), pick_m(3, 8);
    const int n = pick_n(rng);
    const int m = pick_m(rng);
    std::uniform_int_distribution<int> pick_k(1, n / 2);
    const int k = pick_k(rng);
    const Instance inst = generate_instance(n, k, m, {}, derive_seed(11, n, k, m, i));
    const ShorProgram dense = build_shor(inst);
    const ShorProgram dec = build_decomposed(inst, false);
    const ConicSolution sd = solve(dense.program, tight_settings(dense));
    const ConicSolution sc = solve(dec.program, tight_settings(dec));
    const RecoveryResult rd = extract_minimizer(dense, sd, 1e-3);
    const RecoveryResult rc = extract_minimizer(dec, sc, 1e-3);
    const double gap = std::abs(rd.objective_value - rc.objective_value);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-4) ++val_fails;
    if (rd.certified_rank_one && rc.certified_rank_one) {
      ++both_cert;
      if (rd.x_bin != rc.x_bin) ++bin_fails;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "30 instances: worst value gap %.1e, %d over 1e-4; %d doubly-certified "
                "pairs, %d binary disagreements",
                worst_gap, val_fails, both_cert, bin_fails);
  verdict(3, val_fails == 0 && bin_fails == 0, buf);
}

void criterion_4() {
  int fails = 0, grids = 0;
  for (int n = 2; n <= 30; ++n)
    for (int m = 1; m <= 10; ++m) {
      ++grids;
      const CliqueSet cs = build_cliques(n, m);
      if (static_cast<int>(cs.cliques.size()) != n) ++fails;
      if (static_cast<int>(cs.cliques.front().size()) != m + 1) ++fails;
      if (static_cast<int>(cs.cliques.back().size()) != m + 1) ++fails;
      std::set<int> seen(cs.cliques[0].begin(), cs.cliques[0].end());
      std::set<int> all = seen;
      for (int l = 1; l < n; ++l) {
        if (l + 1 < n && static_cast<int>(cs.cliques[l].size()) != 2 * m + 1) ++fails;
        std::set<int> inter;
        for (int v : cs.cliques[l])
          if (seen.count(v)) inter.insert(v);
        bool contained = false;
        for (int s = 0; s < l && !contained; ++s) {
          const std::set<int> other(cs.cliques[s].begin(), cs.cliques[s].end());
          contained = true;
          for (int v : inter) contained = contained && other.count(v) > 0;
        }
        if (!contained) ++fails;
        seen.insert(cs.cliques[l].begin(), cs.cliques[l].end());
        all.insert(cs.cliques[l].begin(), cs.cliques[l].end());
      }
      if (static_cast<int>(all.size()) != cs.total_variables()) ++fails;
    }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "running intersection, sizes, and coverage over %d (n,m) grids, %d failures",
                grids, fails);
  verdict(4, fails == 0, buf);
}

struct CellStats {
  int exact = 0;
  int trials = 0;
  int band = 0;
  double max_rt = 0.0;
};

CellStats run_cell(const std::string& method, int n, int k, int m, double eta, int trials) {
  GridConfig cfg;
  cfg.n = n;
  cfg.eta = eta;
  CellStats st;
  st.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = derive_seed(1, n, k, m, t);
    NoiseModel noise;
    if (eta > 0.0) noise = {eta, NoiseDistribution::uniform};
    const Instance inst = generate_instance(n, k, m, noise, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = detail::run_method(method, inst, cfg, seed);
    st.max_rt = std::max(st.max_rt, seconds_since(t0));
    if (compute_metrics(out.x_bin, *inst.x_true).exact) ++st.exact;
    if (out.x_cont.size() == inst.n && residual_inf(inst, out.x_cont) <= eta + 1e-4) ++st.band;
  }
  return st;
}

double criterion_5() {
  const CellStats st = run_cell("pop_decomposed", 100, 10, 45, 0.0, 20);
  const double rate = double(st.exact) / st.trials;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "n=100 k=10 m=45: exact %d/%d (need >= 0.95), slowest solve %.2fs (cap 10s)",
                st.exact, st.trials, st.max_rt);
  verdict(5, rate >= 0.95 && st.max_rt <= 10.0, buf);
  return rate;
}

void criterion_6() {
  const CellStats pop = run_cell("pop_decomposed", 100, 30, 50, 0.0, 20);
  const CellStats rwr = run_cell("rwr", 100, 30, 50, 0.0, 20);
  const CellStats greedy = run_cell("greedy", 100, 30, 50, 0.0, 20);
  const double rp = double(pop.exact) / pop.trials;
  const double rr = double(rwr.exact) / rwr.trials;
  const double rg = double(greedy.exact) / greedy.trials;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "n=100 k=30 m=50: relaxation %d/20, restarts %d/20, greedy %d/20 "
                "(greedy <= 0.1, relaxation strictly ahead)",
                pop.exact, rwr.exact, greedy.exact);
  verdict(6, rg <= 0.1 && rp > rr && rp > rg, buf);
}

void criterion_7(double noise_free_rate) {
  const CellStats st = run_cell("pop_decomposed", 100, 10, 45, 0.05, 20);
  const double rate = double(st.exact) / st.trials;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "eta=0.05: every solution inside the band (%d/%d), exact %d/%d vs "
                "noise-free %.2f (allowed drop 0.15)",
                st.band, st.trials, st.exact, st.trials, noise_free_rate);
  verdict(7, st.band == st.trials && std::abs(rate - noise_free_rate) <= 0.15, buf);
}

void criterion_8() {
  int fails = 0;
  // projection properties on 1000 random vectors
  ConeSpec cones;
  cones.blocks = {Zero(2), Nonneg(3), Psd(2), Psd(3)};
  const int dim = cones.total_rows();
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> gauss;
  auto draw = [&]() {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 3.0 * gauss(rng);
    return v;
  };
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::VectorXd v = draw(), w = draw();
    const Eigen::VectorXd pv = project_cone(v, cones), pw = project_cone(w, cones);
    if ((project_cone(pv, cones) - pv).lpNorm<Eigen::Infinity>() >= 1e-10) ++fails;
    if ((pv - pw).norm() > (v - w).norm() + 1e-12) ++fails;
  }

  // the three reference programs, all within 2000 iterations
  {
    ConicProgram pr;  // min u s.t. u - 1 in Zero, u >= 0 -> value 1
    pr.c = Eigen::VectorXd::Ones(1);
    pr.h = Eigen::VectorXd::Zero(2);
    pr.h[0] = 1.0;
    pr.G = Eigen::SparseMatrix<double>(2, 1);
    pr.G.insert(0, 0) = 1.0;
    pr.G.insert(1, 0) = -1.0;
    pr.cones.blocks = {Zero(1), Nonneg(1)};
    const ConicSolution sol = solve(pr);
    if (sol.status != SolveStatus::optimal || std::abs(sol.objective - 1.0) > 1e-4 ||
        sol.iterations > 2000)
      ++fails;
  }
  {
    ConicProgram pr;  // min trace(X), X 2x2 psd, X_11 = 1 -> value 1
    pr.c = Eigen::VectorXd::Zero(3);
    pr.c[svec_index(0, 0)] = 1.0;
    pr.c[svec_index(1, 1)] = 1.0;
    pr.h = Eigen::VectorXd::Zero(4);
    pr.h[0] = 1.0;
    pr.G = Eigen::SparseMatrix<double>(4, 3);
    pr.G.insert(0, svec_index(0, 0)) = 1.0;
    for (int j = 0; j < 3; ++j) pr.G.insert(1 + j, j) = -1.0;
    pr.cones.blocks = {Zero(1), Psd(2)};
    const ConicSolution sol = solve(pr);
    if (sol.status != SolveStatus::optimal || std::abs(sol.objective - 1.0) > 1e-4 ||
        sol.iterations > 2000)
      ++fails;
  }
  {
    ConicProgram pr;  // u = -1 and u >= 0 -> primal infeasible
    pr.c = Eigen::VectorXd::Ones(1);
    pr.h = Eigen::VectorXd::Zero(2);
    pr.h[0] = -1.0;
    pr.G = Eigen::SparseMatrix<double>(2, 1);
    pr.G.insert(0, 0) = 1.0;
    pr.G.insert(1, 0) = -1.0;
    pr.cones.blocks = {Zero(1), Nonneg(1)};
    const ConicSolution sol = solve(pr);
    if (sol.status != SolveStatus::primal_infeasible || sol.iterations > 2000) ++fails;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "1000 projection property draws and 3 reference solves, %d failures", fails);
  verdict(8, fails == 0, buf);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto suite = make_suite(100);

  criterion_1(suite);
  criterion_2(suite);
  criterion_3();
  criterion_4();
  const double noise_free_rate = criterion_5();
  criterion_6();
  criterion_7(noise_free_rate);
  criterion_8();

  std::printf(
      "criterion 9: SKIP - full 9x7 grid x 100 trials x 4 methods is the documented "
      "long-running reproduction (hours); run `bcs bench --config configs/full_grid.json "
      "--out grid.csv` and `bcs plot` to regenerate the heatmaps\n");

  std::printf("acceptance: %d of 8 gate criteria failed, %.1fs total\n", g_failures,
              seconds_since(t0));
  return g_failures;
}
