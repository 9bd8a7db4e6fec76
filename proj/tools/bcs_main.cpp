// Command line front end: instance generation, single-instance recovery,
// brute-force verification, grid benchmarks, and heatmap rendering.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcs/bcs.hpp"

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json vector_to_json(const Eigen::VectorXi& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

struct SolveFlags {
  std::string instance_path;
  std::string method = "pop_decomposed";
  std::string out_path;
  std::string trace_path;
  bcs::SolverSettings solver;
  bcs::RwrSettings rwr;
  bcs::GreedySettings greedy;
  double rank_tol = 1e-3;
  std::uint64_t seed = 1;
};

int run_solve(const SolveFlags& f) {
  const bcs::Instance inst = bcs::load_instance(f.instance_path);
  bcs::SolverSettings settings = f.solver;
  if (!f.trace_path.empty()) settings.trace_path = f.trace_path;

  json doc;
  doc["method"] = f.method;
  doc["n"] = inst.n;
  doc["m"] = inst.m;

  Eigen::VectorXd x_cont;
  Eigen::VectorXi x_bin;
  bool solver_failed = false;
  const auto t0 = std::chrono::steady_clock::now();

  if (f.method == "pop_dense" || f.method == "pop_decomposed") {
    bcs::ShorProgram shor;
    if (f.method == "pop_dense")
      shor = (inst.eta > 0.0) ? bcs::build_shor_noisy(inst, inst.eta) : bcs::build_shor(inst);
    else
      shor = bcs::build_decomposed(inst, inst.eta > 0.0);
    bcs::SolverSettings ss = settings;
    if (ss.tie_break && ss.tie_break_dir.size() == 0)
      ss.tie_break_dir = bcs::tie_break_direction(shor);
    const bcs::ConicSolution sol = bcs::solve(shor.program, ss);
    const bcs::RecoveryResult rec = bcs::extract_minimizer(shor, sol, f.rank_tol);
    x_cont = rec.x_cont;
    x_bin = rec.x_bin;
    doc["solver_status"] = bcs::to_string(sol.status);
    doc["iterations"] = sol.iterations;
    doc["primal_res"] = sol.primal_res;
    doc["dual_res"] = sol.dual_res;
    doc["gap"] = sol.gap;
    doc["objective_value"] = rec.objective_value;
    doc["rank_ratio"] = rec.rank_ratio;
    doc["certified_rank_one"] = rec.certified_rank_one;
    solver_failed = sol.status == bcs::SolveStatus::primal_infeasible ||
                    sol.status == bcs::SolveStatus::dual_infeasible ||
                    sol.status == bcs::SolveStatus::numeric_failure;
  } else if (f.method == "box_bp") {
    bcs::ConicSolution diag;
    try {
      x_cont = bcs::solve_box_bp(inst, settings, &diag);
    } catch (const bcs::SolverFailure& e) {
      doc["solver_status"] = bcs::to_string(e.status);
      doc["error"] = e.what();
      std::cout << doc.dump(1) << std::endl;
      return 3;
    }
    x_bin = bcs::quantize(x_cont, 0.5);
    doc["solver_status"] = bcs::to_string(diag.status);
    doc["iterations"] = diag.iterations;
  } else if (f.method == "rwr") {
    x_cont = bcs::solve_rwr(inst, f.rwr, f.seed);
    x_bin = bcs::quantize(x_cont, 0.5);
  } else if (f.method == "greedy") {
    bcs::GreedySettings gs = f.greedy;
    if (gs.k_max <= 0) {
      if (!inst.x_true)
        throw std::invalid_argument("greedy needs --k-max when the instance has no x_true");
      gs.k_max = std::max(1, inst.x_true->sum());
    }
    x_bin = bcs::solve_greedy(inst, gs);
    x_cont = x_bin.cast<double>();
  } else {
    std::cerr << "unknown method \"" << f.method
              << "\"; available: pop_dense, pop_decomposed, box_bp, rwr, greedy\n";
    return 2;
  }

  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  doc["runtime_s"] = runtime;
  doc["x_cont"] = vector_to_json(x_cont);
  doc["x_bin"] = vector_to_json(x_bin);
  doc["residual_inf"] = bcs::residual_inf(inst, x_bin.cast<double>());
  if (inst.x_true) {
    const bcs::Metrics mx = bcs::compute_metrics(x_bin, *inst.x_true, runtime);
    doc["exact"] = mx.exact;
    if (mx.fpr) doc["fpr"] = *mx.fpr;
    if (mx.fnr) doc["fnr"] = *mx.fnr;
  }

  if (f.out_path.empty()) {
    std::cout << doc.dump(1) << std::endl;
  } else {
    std::ofstream out(f.out_path);
    if (!out) throw std::runtime_error("cannot open " + f.out_path);
    out << doc.dump(1) << '\n';
    std::cout << "wrote " << f.out_path << std::endl;
  }
  return solver_failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binary sparse recovery from compressed measurements"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a random instance and write it as JSON");
  int g_n = 100, g_k = 10, g_m = 45;
  double g_eta = 0.0;
  std::uint64_t g_seed = 1;
  std::string g_out = "instance.json";
  gen->add_option("--n", g_n, "signal length");
  gen->add_option("--k", g_k, "number of ones in the signal");
  gen->add_option("--m", g_m, "number of measurements");
  gen->add_option("--eta", g_eta, "uniform noise bound (0 disables noise)");
  gen->add_option("--seed", g_seed, "RNG seed");
  gen->add_option("--out", g_out, "output path");

  // solve
  auto* slv = app.add_subcommand("solve", "recover the signal from one instance");
  SolveFlags sf;
  slv->add_option("--instance", sf.instance_path, "instance JSON path")->required();
  slv->add_option("--method", sf.method,
                  "pop_dense | pop_decomposed | box_bp | rwr | greedy");
  slv->add_option("--out", sf.out_path, "write the result JSON here instead of stdout");
  slv->add_option("--trace", sf.trace_path, "per-iteration residual CSV (conic methods)");
  slv->add_option("--rho", sf.solver.rho, "ADMM penalty");
  slv->add_option("--alpha", sf.solver.alpha, "ADMM over-relaxation");
  slv->add_option("--eps-abs", sf.solver.eps_abs, "absolute tolerance");
  slv->add_option("--eps-rel", sf.solver.eps_rel, "relative tolerance");
  slv->add_option("--max-iters", sf.solver.max_iters, "ADMM iteration cap");
  slv->add_option("--rank-tol", sf.rank_tol, "eigenvalue-ratio bound for rank-1 certification");
  slv->add_option("--lambda", sf.rwr.lambda, "rwr penalty weight (<=0 picks automatically)");
  slv->add_option("--restarts", sf.rwr.restarts, "rwr random restarts");
  slv->add_option("--k-max", sf.greedy.k_max, "greedy support cap (<=0 uses the true k)");
  slv->add_option("--residual-tol", sf.greedy.residual_tol, "greedy stopping residual");
  slv->add_option("--seed", sf.seed, "seed for randomized methods");

  // oracle-check
  auto* orc = app.add_subcommand(
      "oracle-check", "enumerate all binary feasible points and compare with x_true");
  std::string o_instance;
  int o_max_n = 24;
  orc->add_option("--instance", o_instance, "instance JSON path")->required();
  orc->add_option("--max-n", o_max_n, "refuse enumeration beyond this n");

  // bench
  auto* ben = app.add_subcommand("bench", "run a (k, m) grid of recovery trials");
  std::string b_config, b_out = "bench.csv";
  int b_jobs = 1;
  bool b_verbose = false;
  ben->add_option("--config", b_config, "grid config JSON (defaults used when omitted)");
  ben->add_option("--out", b_out, "output CSV path");
  ben->add_option("--jobs", b_jobs, "worker threads");
  ben->add_flag("--verbose", b_verbose, "log each finished trial");

  // plot
  auto* plt = app.add_subcommand("plot", "render a per-cell mean heatmap from a bench CSV");
  std::string p_csv, p_metric = "exact", p_method, p_out;
  plt->add_option("--csv", p_csv, "bench CSV path")->required();
  plt->add_option("--metric", p_metric, "exact | fpr | fnr | runtime_s");
  plt->add_option("--method", p_method, "method column value to plot")->required();
  plt->add_option("--out", p_out, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      bcs::NoiseModel noise;
      noise.eta = g_eta;
      noise.distribution =
          g_eta > 0.0 ? bcs::NoiseDistribution::uniform : bcs::NoiseDistribution::none;
      const bcs::Instance inst = bcs::generate_instance(g_n, g_k, g_m, noise, g_seed);
      bcs::save_instance(inst, g_out);
      std::cout << "wrote " << g_out << " (n=" << g_n << " k=" << g_k << " m=" << g_m
                << " eta=" << g_eta << " seed=" << g_seed << ")" << std::endl;
      return 0;
    }

    if (slv->parsed()) return run_solve(sf);

    if (orc->parsed()) {
      const bcs::Instance inst = bcs::load_instance(o_instance);
      json doc;
      doc["n"] = inst.n;
      doc["m"] = inst.m;
      if (inst.n > o_max_n) {
        std::cerr << "oracle-check: n=" << inst.n << " exceeds --max-n=" << o_max_n
                  << "; enumeration would take 2^n steps" << std::endl;
        return 4;
      }
      const auto sols = bcs::brute_force_solve(inst, o_max_n);
      doc["feasible_binary_count"] = sols.size();
      doc["unique"] = sols.size() == 1;
      bool contains_truth = false;
      if (inst.x_true) {
        for (const auto& s : sols) contains_truth = contains_truth || (s == *inst.x_true);
        doc["contains_x_true"] = contains_truth;
      }
      std::cout << doc.dump(1) << std::endl;
      if (sols.empty() || sols.size() > 1) return 4;
      if (inst.x_true && !contains_truth) return 4;
      return 0;
    }

    if (ben->parsed()) {
      bcs::GridConfig cfg;
      if (!b_config.empty()) cfg = bcs::load_grid_config(b_config);
      const bcs::GridSummary summary =
          bcs::run_grid(cfg, b_out, b_jobs, b_verbose ? &std::cerr : nullptr);
      std::cout << "wrote " << summary.rows_written << " rows to " << b_out << "\n";
      std::cout << "method,k,m,count,mean_exact,mean_runtime_s\n";
      for (const auto& c : summary.cells)
        std::cout << c.method << ',' << c.k << ',' << c.m << ',' << c.count << ','
                  << c.mean_exact << ',' << c.mean_runtime << '\n';
      return 0;
    }

    if (plt->parsed()) {
      std::string out = p_out.empty() ? (p_method + "_" + p_metric + ".svg") : p_out;
      bcs::render_heatmap(p_csv, p_metric, p_method, out);
      std::cout << "wrote " << out << std::endl;
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 2;
}
