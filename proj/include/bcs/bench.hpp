#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bcs/baselines.hpp"
#include "bcs/evaluation.hpp"
#include "bcs/instance.hpp"
#include "bcs/relaxation.hpp"

namespace bcs {

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> k = {"pop_dense", "pop_decomposed", "box_bp", "rwr",
                                             "greedy"};
  return k;
}

struct GridConfig {
  int n = 100;
  std::vector<int> k_values = {10, 15, 20, 25, 30, 35, 40, 45, 50};
  std::vector<int> m_values = {20, 25, 30, 35, 40, 45, 50};
  int trials = 100;
  double eta = 0.0;
  std::vector<std::string> methods = {"pop_decomposed", "box_bp", "rwr", "greedy"};
  std::uint64_t base_seed = 1;
  SolverSettings solver;
  RwrSettings rwr;
  GreedySettings greedy;  // k_max <= 0: use the trial's true k
  double rank_tol = 1e-3;
};

struct TrialRecord {
  std::string method;
  int n = 0, m = 0, k = 0;
  double eta = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<int> exact;
  std::optional<double> fpr, fnr;
  double runtime_s = 0.0;
  std::string solver_status;
  std::optional<int> iterations;
  std::optional<double> rank_ratio, objective_value;
};

inline constexpr const char* kCsvHeader =
    "method,n,m,k,eta,trial,seed,exact,fpr,fnr,runtime_s,solver_status,iterations,"
    "rank_ratio,objective_value";

struct CellAggregate {
  std::string method;
  int k = 0, m = 0;
  int count = 0;
  double mean_exact = 0.0;
  std::optional<double> mean_fpr, mean_fnr;
  double mean_runtime = 0.0;
};

struct GridSummary {
  std::vector<CellAggregate> cells;
  long rows_written = 0;
};

namespace detail {

inline std::string num17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string csv_row(const TrialRecord& r) {
  std::ostringstream os;
  os << r.method << ',' << r.n << ',' << r.m << ',' << r.k << ',' << num17(r.eta) << ','
     << r.trial << ',' << r.seed << ',';
  if (r.exact) os << *r.exact;
  os << ',';
  if (r.fpr) os << num17(*r.fpr);
  os << ',';
  if (r.fnr) os << num17(*r.fnr);
  os << ',' << num17(r.runtime_s) << ',' << r.solver_status << ',';
  if (r.iterations) os << *r.iterations;
  os << ',';
  if (r.rank_ratio) os << num17(*r.rank_ratio);
  os << ',';
  if (r.objective_value) os << num17(*r.objective_value);
  return os.str();
}

struct MethodOutcome {
  Eigen::VectorXd x_cont;
  Eigen::VectorXi x_bin;
  std::string solver_status;
  std::optional<int> iterations;
  std::optional<double> rank_ratio, objective_value;
};

inline MethodOutcome run_method(const std::string& method, const Instance& inst,
                                const GridConfig& cfg, std::uint64_t seed) {
  MethodOutcome out;
  if (method == "pop_dense" || method == "pop_decomposed") {
    ShorProgram shor;
    if (method == "pop_dense")
      shor = (inst.eta > 0.0) ? build_shor_noisy(inst, inst.eta) : build_shor(inst);
    else
      shor = build_decomposed(inst, inst.eta > 0.0);
    SolverSettings ss = cfg.solver;
    if (ss.tie_break && ss.tie_break_dir.size() == 0) ss.tie_break_dir = tie_break_direction(shor);
    ConicSolution sol = solve(shor.program, ss);
    RecoveryResult rec = extract_minimizer(shor, sol, cfg.rank_tol);
    out.x_cont = rec.x_cont;
    out.x_bin = rec.x_bin;
    out.solver_status = to_string(sol.status);
    out.iterations = sol.iterations;
    out.rank_ratio = rec.rank_ratio;
    out.objective_value = rec.objective_value;
  } else if (method == "box_bp") {
    ConicSolution diag;
    out.x_cont = solve_box_bp(inst, cfg.solver, &diag);
    out.x_bin = quantize(out.x_cont, 0.5);
    out.solver_status = to_string(diag.status);
    out.iterations = diag.iterations;
  } else if (method == "rwr") {
    out.x_cont = solve_rwr(inst, cfg.rwr, bcs::detail::hash_combine(seed, 0x727772u));
    out.x_bin = quantize(out.x_cont, 0.5);
  } else if (method == "greedy") {
    GreedySettings gs = cfg.greedy;
    if (gs.k_max <= 0) gs.k_max = std::max(1, inst.x_true ? inst.x_true->sum() : 1);
    out.x_bin = solve_greedy(inst, gs);
    out.x_cont = out.x_bin.cast<double>();
  } else {
    throw std::invalid_argument("unknown method: " + method);
  }
  return out;
}

struct CellAccum {
  long count = 0;
  double exact_sum = 0.0;
  long exact_n = 0;
  double fpr_sum = 0.0;
  long fpr_n = 0;
  double fnr_sum = 0.0;
  long fnr_n = 0;
  double runtime_sum = 0.0;
  long runtime_n = 0;
};

}  // namespace detail

inline void validate_config(const GridConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("grid config: n must be positive");
  if (cfg.k_values.empty() || cfg.m_values.empty())
    throw std::invalid_argument("grid config: k_values and m_values must be nonempty");
  if (cfg.trials < 1) throw std::invalid_argument("grid config: trials must be >= 1");
  if (cfg.eta < 0.0) throw std::invalid_argument("grid config: eta must be nonnegative");
  for (int k : cfg.k_values)
    if (k < 0 || k > cfg.n) throw std::invalid_argument("grid config: every k must be in [0, n]");
  for (int m : cfg.m_values)
    if (m < 1) throw std::invalid_argument("grid config: every m must be >= 1");
  if (cfg.methods.empty()) throw std::invalid_argument("grid config: methods must be nonempty");
  for (const auto& name : cfg.methods) {
    bool ok = false;
    for (const auto& k : known_methods()) ok = ok || (k == name);
    if (!ok) throw std::invalid_argument("grid config: unknown method \"" + name + "\"");
  }
}

// Runs every configured method on the shared per-trial instance, appending one
// CSV row per (method, cell, trial). Single-trial failures become rows with
// solver_status=failed; the sweep continues.
inline GridSummary run_grid(const GridConfig& cfg, const std::string& out_csv, int jobs = 1,
                            std::ostream* log = nullptr) {
  validate_config(cfg);
  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("run_grid: cannot open " + out_csv);
  out << kCsvHeader << '\n';
  out.flush();

  struct Item {
    int k, m, trial;
  };
  std::vector<Item> items;
  for (int k : cfg.k_values)
    for (int m : cfg.m_values)
      for (int t = 0; t < cfg.trials; ++t) items.push_back({k, m, t});

  std::map<std::tuple<std::string, int, int>, detail::CellAccum> accum;
  std::mutex io_mutex;
  std::atomic<size_t> next{0};
  std::atomic<long> rows{0};

  auto worker = [&]() {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= items.size()) return;
      const Item it = items[idx];
      const std::uint64_t seed = derive_seed(cfg.base_seed, cfg.n, it.k, it.m, it.trial);
      NoiseModel noise;
      noise.eta = cfg.eta;
      noise.distribution =
          cfg.eta > 0.0 ? NoiseDistribution::uniform : NoiseDistribution::none;
      const Instance inst = generate_instance(cfg.n, it.k, it.m, noise, seed);

      std::vector<TrialRecord> recs;
      for (const auto& method : cfg.methods) {
        TrialRecord rec;
        rec.method = method;
        rec.n = cfg.n;
        rec.m = it.m;
        rec.k = it.k;
        rec.eta = cfg.eta;
        rec.trial = it.trial;
        rec.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const auto outm = detail::run_method(method, inst, cfg, seed);
          rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
          const Metrics mx = compute_metrics(outm.x_bin, *inst.x_true, rec.runtime_s);
          rec.exact = mx.exact ? 1 : 0;
          rec.fpr = mx.fpr;
          rec.fnr = mx.fnr;
          rec.solver_status = outm.solver_status;
          rec.iterations = outm.iterations;
          rec.rank_ratio = outm.rank_ratio;
          rec.objective_value = outm.objective_value;
        } catch (const std::exception&) {
          rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
          rec.solver_status = "failed";
        }
        recs.push_back(std::move(rec));
      }

      std::lock_guard<std::mutex> lock(io_mutex);
      for (const auto& rec : recs) {
        out << detail::csv_row(rec) << '\n';
        ++rows;
        auto& a = accum[{rec.method, rec.k, rec.m}];
        ++a.count;
        if (rec.exact) {
          a.exact_sum += *rec.exact;
          ++a.exact_n;
        }
        if (rec.fpr) {
          a.fpr_sum += *rec.fpr;
          ++a.fpr_n;
        }
        if (rec.fnr) {
          a.fnr_sum += *rec.fnr;
          ++a.fnr_n;
        }
        a.runtime_sum += rec.runtime_s;
        ++a.runtime_n;
      }
      out.flush();
      if (log)
        (*log) << "cell k=" << it.k << " m=" << it.m << " trial=" << it.trial << " done\n";
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  GridSummary summary;
  summary.rows_written = rows.load();
  for (const auto& [key, a] : accum) {
    CellAggregate c;
    c.method = std::get<0>(key);
    c.k = std::get<1>(key);
    c.m = std::get<2>(key);
    c.count = static_cast<int>(a.count);
    c.mean_exact = a.exact_n > 0 ? a.exact_sum / a.exact_n : 0.0;
    if (a.fpr_n > 0) c.mean_fpr = a.fpr_sum / a.fpr_n;
    if (a.fnr_n > 0) c.mean_fnr = a.fnr_sum / a.fnr_n;
    c.mean_runtime = a.runtime_n > 0 ? a.runtime_sum / a.runtime_n : 0.0;
    summary.cells.push_back(std::move(c));
  }
  return summary;
}

// --- CSV reading and the SVG heatmap -------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("CSV has no column \"" + name + "\"");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
  }
  return t;
}

struct Rgb {
  double r, g, b;
};

inline Rgb ramp(double t) {
  // linear two-color ramp: dark blue (low) to light yellow (high)
  const Rgb lo{27, 44, 98}, hi{255, 240, 130};
  return {lo.r + t * (hi.r - lo.r), lo.g + t * (hi.g - lo.g), lo.b + t * (hi.b - lo.b)};
}

inline std::string rgb_str(const Rgb& c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", static_cast<int>(c.r + 0.5),
                static_cast<int>(c.g + 0.5), static_cast<int>(c.b + 0.5));
  return buf;
}

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace detail

// Per-cell means of one metric for one method, drawn as a k-by-m grid with a
// numeric color scale. Output is deterministic for identical input.
inline void render_heatmap(const std::string& csv_path, const std::string& metric,
                           const std::string& method, const std::string& out_svg) {
  static const std::vector<std::string> metrics = {"exact", "fpr", "fnr", "runtime_s"};
  bool metric_ok = false;
  for (const auto& mname : metrics) metric_ok = metric_ok || (mname == metric);
  if (!metric_ok)
    throw std::invalid_argument(
        "render_heatmap: unknown metric \"" + metric +
        "\"; available: exact, fpr, fnr, runtime_s");

  const auto table = detail::read_csv(csv_path);
  const int c_method = table.column("method");
  const int c_k = table.column("k");
  const int c_m = table.column("m");
  const int c_val = table.column(metric);

  std::map<std::pair<int, int>, std::pair<double, long>> cells;  // (k,m) -> (sum, count)
  std::vector<std::string> methods_seen;
  for (const auto& row : table.rows) {
    const std::string& name = row.at(c_method);
    bool seen = false;
    for (const auto& s : methods_seen) seen = seen || (s == name);
    if (!seen) methods_seen.push_back(name);
    if (name != method) continue;
    const std::string& sval = row.at(c_val);
    if (sval.empty()) continue;
    const int k = std::stoi(row.at(c_k));
    const int m = std::stoi(row.at(c_m));
    auto& cell = cells[{k, m}];
    cell.first += std::stod(sval);
    cell.second += 1;
  }
  if (cells.empty()) {
    std::string avail;
    for (const auto& s : methods_seen) avail += (avail.empty() ? "" : ", ") + s;
    throw std::invalid_argument("render_heatmap: no rows for method \"" + method +
                                "\"; methods present: " + (avail.empty() ? "(none)" : avail));
  }

  std::vector<int> ks, ms;
  for (const auto& [km, sc] : cells) {
    ks.push_back(km.first);
    ms.push_back(km.second);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  std::map<std::pair<int, int>, double> mean;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& [km, sc] : cells) {
    const double v = sc.first / sc.second;
    mean[km] = v;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }

  const int cw = 64, ch = 44;
  const int ml = 70, mt = 46, mb = 52, mr = 110;
  const int gw = cw * static_cast<int>(ks.size());
  const int gh = ch * static_cast<int>(ms.size());
  const int W = ml + gw + mr, H = mt + gh + mb;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << ml + gw / 2 << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\""
      << " text-anchor=\"middle\">" << method << " &#8212; mean " << metric << "</text>\n";

  for (size_t col = 0; col < ks.size(); ++col) {
    for (size_t rowi = 0; rowi < ms.size(); ++rowi) {
      const auto it = mean.find({ks[col], ms[rowi]});
      const int x = ml + static_cast<int>(col) * cw;
      // ascending m from the bottom up
      const int y = mt + gh - ch - static_cast<int>(rowi) * ch;
      if (it == mean.end()) {
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
            << "\" fill=\"rgb(230,230,230)\" stroke=\"white\"/>\n";
        continue;
      }
      const double v = it->second;
      const double t = (vmax - vmin) > 1e-300 ? (v - vmin) / (vmax - vmin) : 0.5;
      const auto c = detail::ramp(t);
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
          << "\" fill=\"" << detail::rgb_str(c) << "\" stroke=\"white\"/>\n";
      const double lum = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
      svg << "<text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" fill=\""
          << (lum < 128 ? "white" : "black") << "\">" << detail::fmt_g(v) << "</text>\n";
    }
  }

  for (size_t col = 0; col < ks.size(); ++col)
    svg << "<text x=\"" << ml + static_cast<int>(col) * cw + cw / 2 << "\" y=\"" << mt + gh + 18
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << ks[col]
        << "</text>\n";
  svg << "<text x=\"" << ml + gw / 2 << "\" y=\"" << mt + gh + 38
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">k</text>\n";
  for (size_t rowi = 0; rowi < ms.size(); ++rowi)
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << mt + gh - static_cast<int>(rowi) * ch - ch / 2 + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << ms[rowi]
        << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + gh / 2
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">m</text>\n";

  // color scale: discretized vertical bar, max at the top
  const int bar_x = ml + gw + 26, bar_w = 16, bar_h = gh;
  const int steps = 40;
  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - static_cast<double>(i) / (steps - 1);
    const int y0 = mt + i * bar_h / steps;
    const int y1 = mt + (i + 1) * bar_h / steps;
    svg << "<rect x=\"" << bar_x << "\" y=\"" << y0 << "\" width=\"" << bar_w << "\" height=\""
        << (y1 - y0 + 1) << "\" fill=\"" << detail::rgb_str(detail::ramp(t)) << "\"/>\n";
  }
  svg << "<text x=\"" << bar_x + bar_w + 6 << "\" y=\"" << mt + 10
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::fmt_g(vmax) << "</text>\n";
  svg << "<text x=\"" << bar_x + bar_w + 6 << "\" y=\"" << mt + bar_h
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::fmt_g(vmin) << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(out_svg);
  if (!out) throw std::runtime_error("render_heatmap: cannot open " + out_svg);
  out << svg.str();
}

// --- config file ----------------------------------------------------------------

inline GridConfig load_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }

  GridConfig cfg;
  if (j.contains("n")) cfg.n = j.at("n").get<int>();
  if (j.contains("k_values")) cfg.k_values = j.at("k_values").get<std::vector<int>>();
  if (j.contains("m_values")) cfg.m_values = j.at("m_values").get<std::vector<int>>();
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (j.contains("eta")) cfg.eta = j.at("eta").get<double>();
  if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("rank_tol")) cfg.rank_tol = j.at("rank_tol").get<double>();
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("rho")) cfg.solver.rho = s.at("rho").get<double>();
    if (s.contains("alpha")) cfg.solver.alpha = s.at("alpha").get<double>();
    if (s.contains("eps_abs")) cfg.solver.eps_abs = s.at("eps_abs").get<double>();
    if (s.contains("eps_rel")) cfg.solver.eps_rel = s.at("eps_rel").get<double>();
    if (s.contains("max_iters")) cfg.solver.max_iters = s.at("max_iters").get<int>();
    if (s.contains("adaptive_rho")) cfg.solver.adaptive_rho = s.at("adaptive_rho").get<bool>();
  }
  if (j.contains("rwr")) {
    const auto& s = j.at("rwr");
    if (s.contains("lambda")) cfg.rwr.lambda = s.at("lambda").get<double>();
    if (s.contains("restarts")) cfg.rwr.restarts = s.at("restarts").get<int>();
    if (s.contains("max_iters")) cfg.rwr.max_iters = s.at("max_iters").get<int>();
    if (s.contains("tol")) cfg.rwr.tol = s.at("tol").get<double>();
    if (s.contains("step_rule")) {
      const std::string rule = s.at("step_rule").get<std::string>();
      if (rule == "fixed_1_over_L")
        cfg.rwr.step_rule = StepRule::fixed_1_over_L;
      else if (rule == "backtracking")
        cfg.rwr.step_rule = StepRule::backtracking;
      else
        throw std::runtime_error("config: unknown rwr.step_rule \"" + rule + "\"");
    }
  }
  if (j.contains("greedy")) {
    const auto& s = j.at("greedy");
    if (s.contains("k_max")) cfg.greedy.k_max = s.at("k_max").get<int>();
    if (s.contains("residual_tol")) cfg.greedy.residual_tol = s.at("residual_tol").get<double>();
  }
  return cfg;
}

}  // namespace bcs
