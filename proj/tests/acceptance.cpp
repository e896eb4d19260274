// Acceptance checks, one per criterion. `acceptance N` runs criterion N,
// `acceptance` runs all of them. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "simrank/diagonal.hpp"
#include "simrank/linear_query.hpp"
#include "simrank/monte_carlo.hpp"
#include "simrank/oracle.hpp"
#include "simrank/parallel.hpp"
#include "simrank/simjoin.hpp"
#include "simrank/topk.hpp"
#include "support.hpp"

using namespace simrank;
using testing::fixture;
using testing::id;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

EstimationConfig exact_sweeps(std::uint32_t L) {
  EstimationConfig est;
  est.mode = EstimationMode::exact;
  est.L = L;
  return est;
}

// ---- 1 --------------------------------------------------------------------
Outcome star_diagonal() {
  const Graph g = fixture("star.txt");
  Config cfg;
  cfg.c = 0.8;
  cfg.T = 100;
  const auto d = estimate_diagonal(g, cfg, exact_sweeps(10));
  const double expect[] = {23.0 / 75.0, 0.2, 0.2, 0.2};
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(d[k] - expect[k]));
  return {worst <= 1e-6, fmt("T=100 L=10, max |D - diag(23/75, .2, .2, .2)| = %.2e", worst)};
}

// ---- 2 --------------------------------------------------------------------
Outcome star_scores() {
  const Graph g = fixture("star.txt");
  Config cfg;
  cfg.c = 0.8;
  cfg.T = 40;
  const auto d = exact_diagonal(g, cfg);
  const double S[4][4] = {{1, 0, 0, 0}, {0, 1, 0.8, 0.8}, {0, 0.8, 1, 0.8}, {0, 0.8, 0.8, 1}};
  const double tol = testing::truncation_slack(cfg) + 1e-9;
  double worst = 0.0;
  for (Vertex i = 0; i < 4; ++i)
    for (Vertex j = 0; j < 4; ++j) worst = std::max(worst, std::abs(single_pair(g, cfg, d.values, i, j) - S[i][j]));
  return {worst <= tol, fmt("max deviation %.2e, allowed %.2e", worst, tol)};
}

// ---- 3 --------------------------------------------------------------------
Outcome figure_scores() {
  const Graph g = fixture("figure7.txt");
  Config cfg;
  cfg.c = 0.6;
  const auto s = converged_simrank(g, cfg);
  const auto d = exact_diagonal(g, cfg);
  struct Row {
    int i, j;
    double s;
  };
  const Row printed[] = {{1, 2, 0.260}, {1, 3, 0.142}, {1, 4, 0.120}, {1, 5, 0.162}, {1, 6, 0.069},
                         {1, 7, 0.219}, {2, 3, 0.121}, {2, 4, 0.141}, {2, 5, 0.132}, {2, 6, 0.069},
                         {2, 7, 0.226}, {3, 4, 0.128}, {3, 5, 0.230}, {3, 6, 0.236}, {3, 7, 0.101},
                         {4, 5, 0.107}, {4, 6, 0.080}, {4, 7, 0.125}, {5, 6, 0.271}, {5, 7, 0.110},
                         {6, 7, 0.061}};
  int matched = 0;
  double worst_table = 0.0, worst_linear = 0.0;
  for (const auto& r : printed) {
    const Vertex a = id(g, r.i), b = id(g, r.j);
    const double err = std::abs(s(a, b) - r.s);
    worst_table = std::max(worst_table, err);
    matched += err <= 5e-4;
    worst_linear = std::max(worst_linear, std::abs(single_pair(g, cfg, d.values, a, b) - s(a, b)));
  }
  const double s12 = s(id(g, 1), id(g, 2)), s56 = s(id(g, 5), id(g, 6));
  return {matched == 21 && worst_linear <= 2e-3,
          fmt("%d/21 printed scores reproduced (s(1,2)=%.3f vs 0.260, s(5,6)=%.3f vs 0.271, max err %.3f); "
              "linearized vs oracle max diff %.2e",
              matched, s12, s56, worst_table, worst_linear)};
}

// ---- 4 --------------------------------------------------------------------
Outcome truncation_bound() {
  std::size_t violations = 0, pairs = 0;
  double tightest = 1.0;
  for (std::size_t k = 0; k < 20; ++k) {
    const Graph g = testing::graph_family(k, 20 + 2 * k);
    Config cfg;
    const auto truth = converged_simrank(g, cfg);
    const auto d = exact_diagonal(g, cfg);
    for (std::uint32_t T : {3u, 6u, 11u}) {
      cfg.T = T;
      const double slack = testing::truncation_slack(cfg) + 1e-9;
      const auto s = all_pairs_dense(g, cfg, d.values, 1);
      for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
          const double gap = truth(i, j) - s(i, j);
          ++pairs;
          if (gap < -1e-9 || gap > slack) ++violations;
          tightest = std::min(tightest, slack - gap);
        }
    }
  }
  return {violations == 0, fmt("%zu violations over %zu pair checks (min headroom %.2e)", violations, pairs, tightest)};
}

// ---- 5 --------------------------------------------------------------------
Outcome perturbation_bound() {
  double worst_ratio = 0.0;
  std::size_t violations = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    const Graph g = testing::graph_family(k + 20, 40);
    Config cfg;
    const auto d = exact_diagonal(g, cfg);
    std::vector<double> moved = d.values;
    std::mt19937_64 rng(k);
    for (double& v : moved) v += (rng() & 1) ? 0.01 : -0.01;
    const double allowed = 0.01 / (1 - cfg.c) + 1e-9;
    const auto a = all_pairs_dense(g, cfg, d.values, 1);
    const auto b = all_pairs_dense(g, cfg, moved, 1);
    const double diff = max_abs_diff(a, b);
    worst_ratio = std::max(worst_ratio, diff / allowed);
    violations += diff > allowed;
  }
  return {violations == 0, fmt("largest change %.3f of the allowed 0.01/(1-c)", worst_ratio)};
}

// ---- 6 --------------------------------------------------------------------
Outcome mc_diagonal_accuracy() {
  const std::uint64_t Rs[] = {100, 1000, 10000};
  const int seeds = 5, graphs = 5;
  struct Case {
    Graph g;
    DenseMatrix truth;
  };
  std::vector<Case> cases;
  for (int k = 0; k < graphs; ++k) {
    Graph g = testing::random_graph(60 + 10 * k, 2.0 + 0.5 * k, 600 + k, k % 2 == 0);
    auto truth = converged_simrank(g, Config{});
    cases.push_back({std::move(g), std::move(truth)});
  }
  std::vector<double> me(graphs * 3 * seeds);
  parallel_for(me.size(), resolve_threads(), [&](std::size_t item) {
    const std::size_t k = item / (3 * seeds), r = item / seeds % 3, s = item % seeds;
    Config cfg;
    cfg.seed = s;
    EstimationConfig est;
    est.L = 3;
    est.R = Rs[r];
    const auto d = estimate_diagonal(cases[k].g, cfg, est);
    me[item] = mean_error(all_pairs_dense(cases[k].g, cfg, d.values, 1), cases[k].truth);
  });
  bool pass = true;
  std::string detail;
  for (int k = 0; k < graphs; ++k) {
    double median[3], worst100 = 0.0;
    for (int r = 0; r < 3; ++r) {
      std::vector<double> v(me.begin() + (k * 3 + r) * seeds, me.begin() + (k * 3 + r + 1) * seeds);
      if (r == 0) worst100 = *std::max_element(v.begin(), v.end());
      std::nth_element(v.begin(), v.begin() + seeds / 2, v.end());
      median[r] = v[seeds / 2];
    }
    pass = pass && worst100 <= 5e-3 && median[1] <= median[0] && median[2] <= median[1];
    detail += fmt("%sg%d ME %.2e/%.2e/%.2e (max@100 %.2e)", k ? "; " : "", k, median[0], median[1], median[2],
                  worst100);
  }
  return {pass, "median ME at R=100/1000/10000: " + detail};
}

// ---- 7 --------------------------------------------------------------------
Outcome bound_soundness() {
  std::size_t violations = 0, checks = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    const Graph g = testing::graph_family(k + 40, 30 + k);
    Config cfg;
    const auto d = exact_diagonal(g, cfg);
    const auto index = build_bounds_index(g, cfg, d.values, EstimationMode::exact, 0, 1);
    const std::uint32_t d_max = 2 * (cfg.T - 1);
    Rng rng = make_rng(0);
    for (Vertex u = 0; u < g.num_vertices(); ++u) {
      const auto dist = distance_map(bfs_distances(g, u, d_max));
      const auto ab = build_alpha_beta(g, cfg, d.values, u, d_max, dist, EstimationMode::exact, 0, rng);
      const auto row = single_source(g, cfg, d.values, u, MemoryMode::fast);
      for (Vertex v = 0; v < g.num_vertices(); ++v) {
        ++checks;
        const double l2 = l2_bound(index.gamma_row(u), index.gamma_row(v), cfg.c);
        auto it = dist.find(v);
        const double l1 = it == dist.end() ? 0.0 : ab.beta(it->second);
        if (row[v] > l2 + 1e-12 || row[v] > l1 + 1e-12) ++violations;
      }
    }
  }
  return {violations == 0, fmt("%zu violations over %zu pairs", violations, checks)};
}

// ---- 8 --------------------------------------------------------------------
Outcome topk_equivalence() {
  std::size_t instances = 0, mismatches = 0;
  for (std::size_t k = 0; k < 20; ++k) {
    const Graph g = testing::graph_family(k + 60, 30 + k);
    Config cfg;
    const auto truth = converged_simrank(g, cfg);
    const auto d = exact_diagonal(g, cfg);
    const auto index = build_bounds_index(g, cfg, d.values, EstimationMode::exact, 0, 1);
    const double gap_needed = 2 * testing::truncation_slack(cfg);
    for (Vertex u = 0; u < g.num_vertices(); ++u) {
      for (std::size_t kk : {1, 5, 10}) {
        const auto oracle = topk_from_scores(truth, u, kk + 1);
        if (oracle.size() < kk + 1 || oracle[kk - 1].score - oracle[kk].score <= gap_needed) continue;
        ++instances;
        TopKOptions opt;
        opt.k = kk;
        opt.theta_floor = 0.0;
        opt.d_max = 2 * (cfg.T - 1);
        opt.scoring = Scoring::deterministic;
        opt.bound_mode = EstimationMode::exact;
        Rng rng = make_rng(0);
        const auto got = topk_query(g, cfg, d.values, &index, u, opt, rng);
        std::vector<Vertex> a, b;
        for (const auto& s : got.ranking) a.push_back(s.vertex);
        for (std::size_t r = 0; r < kk; ++r) b.push_back(oracle[r].vertex);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        mismatches += a != b;
      }
    }
  }
  return {mismatches == 0 && instances > 0,
          fmt("%zu mismatches over %zu well-separated instances", mismatches, instances)};
}

// ---- 9 --------------------------------------------------------------------
Outcome gauss_southwell() {
  std::size_t sandwich = 0, containment = 0, push_count = 0, graphs = 0;
  const double theta = 0.2;
  for (std::size_t k = 0; k < 10; ++k) {
    const Graph g = testing::graph_family(k + 80, 30 + 2 * k);
    const std::size_t n = g.num_vertices();
    Config cfg;
    const auto truth = converged_simrank(g, cfg);
    const auto d = exact_diagonal(g, cfg);
    // scores that tie with theta come out of the oracle a few ulps either side
    const auto J_loose = join_from_scores(truth, theta - 1e-9);
    const auto J_strict = join_from_scores(truth, theta + 1e-9);
    double sigma = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sigma += truth(i, j);
    ++graphs;
    for (double gamma_acc : {0.0, 0.5}) {
      FilterOptions opt;
      opt.theta = theta;
      opt.gamma_acc = gamma_acc;
      opt.beta_skip = 0.0;
      Rng rng = make_rng(0);
      const auto res = gauss_southwell_filter(g, cfg, d.values, opt, rng);
      DenseMatrix approx(n);
      for (const auto& [key, slot] : res.store.slots()) {
        const auto [i, j] = ResidualStore::unkey(key);
        approx(i, j) = approx(j, i) = slot.solution;
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gap = truth(i, j) - approx(i, j);
          sandwich += gap < -1e-9 || gap > (1 - gamma_acc) * theta + 1e-9;
        }
      push_count += static_cast<double>(res.stats.pops) > sigma / res.store.epsilon();

      JoinOptions jo;
      jo.filter = opt;
      const auto r = join(g, cfg, d.values, jo);
      containment += !std::includes(J_loose.begin(), J_loose.end(), r.J_L.begin(), r.J_L.end());
      containment += !std::includes(r.J_H.begin(), r.J_H.end(), J_strict.begin(), J_strict.end());
    }
  }
  return {sandwich + containment + push_count == 0,
          fmt("%zu graphs x 2 gammas: %zu sandwich, %zu containment, %zu push-count violations", graphs, sandwich,
              containment, push_count)};
}

// ---- 10 -------------------------------------------------------------------
Outcome thresholding_tail() {
  const double beta = 100.0;
  const double delta = std::log(10.0) / beta;  // exp(-beta delta) = 0.1
  const int streams = 10000;
  int exceed = 0;
  for (int s = 0; s < streams; ++s) {
    Rng rng = make_rng(1234, s);
    std::uniform_real_distribution<double> value(0.0, 2e-3);
    ResidualStore store(1.0);
    double dropped = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double a = value(rng);
      if (!stochastic_threshold(store, 0, 1, a, beta, rng)) dropped += a;
    }
    exceed += dropped >= delta;
  }
  const double rate = static_cast<double>(exceed) / streams;
  return {rate <= 1.5 * 0.1, fmt("P{A - A~ >= %.4f} = %.4f, bound 0.1 (allowed %.2f)", delta, rate, 0.15)};
}

// ---- 11 -------------------------------------------------------------------
Outcome verification_error() {
  struct Probe {
    const Graph* g;
    Vertex i, j;
    double s;
  };
  const double theta = 0.2, p = 0.01;
  std::vector<Graph> graphs;
  graphs.push_back(fixture("figure7.txt"));
  for (int k = 0; k < 4; ++k) graphs.push_back(testing::random_graph(30, 2.0, 1100 + k, k % 2 == 0));
  std::vector<Probe> probes;
  for (const auto& g : graphs) {
    const auto s = converged_simrank(g, Config{});
    for (Vertex i = 0; i < g.num_vertices(); ++i)
      for (Vertex j = i + 1; j < g.num_vertices(); ++j)
        if (std::abs(s(i, j) - theta) >= 0.05 && (s(i, j) > 0.0 || (i + j) % 7 == 0)) probes.push_back({&g, i, j, s(i, j)});
  }
  // interleave similar and dissimilar pairs
  std::vector<Probe> above, below;
  for (const auto& pr : probes) (pr.s >= theta ? above : below).push_back(pr);
  const int trials = 1000;
  std::vector<char> wrong(trials, 0);
  parallel_for(trials, resolve_threads(), [&](std::size_t t) {
    const auto& pool = (t % 2 == 0 && !above.empty()) ? above : below;
    const auto& pr = pool[(t / 2) % pool.size()];
    Rng rng = make_rng(77, t);
    const auto v = verify_pair(*pr.g, Config{}, pr.i, pr.j, theta, p, 1000, rng);
    wrong[t] = (v.decision == Decision::similar) != (pr.s >= theta);
  });
  const double rate = static_cast<double>(std::count(wrong.begin(), wrong.end(), 1)) / trials;
  const double allowed = p + 3 * std::sqrt(p * (1 - p) / trials);
  return {rate <= allowed, fmt("misclassified %.4f over %d trials (%zu similar / %zu dissimilar pairs), allowed %.4f",
                               rate, trials, above.size(), below.size(), allowed)};
}

// ---- 12 -------------------------------------------------------------------
Outcome join_end_to_end() {
  double precision = 0.0, recall = 0.0;
  int runs = 0;
  std::string per_graph;
  for (int k = 0; k < 10; ++k) {
    const Graph g = testing::random_graph(60 + 4 * k, 1.5 + 0.2 * (k % 4), 1200 + k, k % 3 != 2);
    const auto truth = brute_force_join(g, Config{}, 0.2);
    double gp = 0.0, gr = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Config cfg;
      cfg.seed = seed;
      EstimationConfig est;  // L = 3, R = 100
      const auto d = estimate_diagonal(g, cfg, est);
      JoinOptions opt;
      opt.filter.theta = 0.2;
      opt.filter.gamma_acc = 0.0;
      const auto got = join(g, cfg, d.values, opt).pairs();
      std::vector<VertexPair> hit;
      std::set_intersection(got.begin(), got.end(), truth.begin(), truth.end(), std::back_inserter(hit));
      const double pr = got.empty() ? 1.0 : static_cast<double>(hit.size()) / got.size();
      const double rc = truth.empty() ? 1.0 : static_cast<double>(hit.size()) / truth.size();
      gp += pr;
      gr += rc;
      precision += pr;
      recall += rc;
      ++runs;
    }
    per_graph += fmt("%s%zu:%.2f/%.2f", k ? " " : "", truth.size(), gp / 5, gr / 5);
  }
  precision /= runs;
  recall /= runs;
  return {precision >= 0.95 && recall >= 0.90,
          fmt("precision %.3f recall %.3f (per graph |J|:P/R ", precision, recall) + per_graph + ")"};
}

// ---- 13 -------------------------------------------------------------------
Outcome cli_reproducible() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("simrank_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = SIMRANK_CLI;
  const std::string data = SIMRANK_TEST_DATA;
  const std::string graph = " --graph " + data + "/figure7.txt --seed 7";
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  // each command writes to <run>/...; {d} is replaced by the run directory
  const std::vector<std::string> commands = {
      "estimate-diag" + graph + " --mode mc --out {d}/diag.txt",
      "estimate-diag" + graph + " --mode exact --L 5 --out {d}/diag_exact.txt",
      "query pair 1 2" + graph + " --estimator mc",
      "query pair 1 2" + graph + " --diag {d}/diag.txt",
      "query source 5" + graph,
      "query allpairs" + graph + " --threads 3 --out {d}/all.tsv",
      "index" + graph + " --gamma-mode mc --out {d}/bounds.bin --candidates {d}/cand.txt",
      "topk --source 1 --k 3" + graph + " --index {d}/bounds.bin --candidates {d}/cand.txt",
      "topk --source 4 --k 2" + graph,
      "join" + graph + " --theta 0.25 --gamma 0.5 --out {d}/join.tsv",
      "join" + graph + " --threads 2",
      "oracle" + graph + " --out {d}/oracle.tsv",
      "accuracy" + graph,
  };
  std::size_t failed = 0;
  std::string first_bad;
  // the whole sequence runs twice, later commands read files made by earlier ones
  for (int run = 0; run < 2; ++run) {
    const fs::path rd = dir / ("run" + std::to_string(run));
    fs::create_directories(rd);
    for (std::size_t c = 0; c < commands.size(); ++c) {
      std::string cmd = commands[c];
      for (std::size_t pos; (pos = cmd.find("{d}")) != std::string::npos;) cmd.replace(pos, 3, rd.string());
      const fs::path out = rd / ("stdout_" + std::to_string(c));
      const int status = std::system((cli + " " + cmd + " > " + out.string() + " 2>/dev/null").c_str());
      if (status != 0) {
        ++failed;
        if (first_bad.empty()) first_bad = commands[c];
      }
    }
  }
  auto files_of = [&](int run) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir / ("run" + std::to_string(run))))
      files[entry.path().filename().string()] = slurp(entry.path());
    return files;
  };
  const auto first = files_of(0), second = files_of(1);
  std::size_t differing = 0;
  for (const auto& [name, body] : first) {
    auto it = second.find(name);
    if (it == second.end() || it->second != body || (name.rfind("stdout_", 0) != 0 && body.empty())) {
      ++differing;
      if (first_bad.empty()) first_bad = name;
    }
  }
  differing += second.size() > first.size();
  fs::remove_all(dir);
  return {differing == 0 && failed == 0,
          fmt("%zu commands, %zu differing, %zu failed", commands.size(), differing, failed) +
              (first_bad.empty() ? "" : " (first: " + first_bad + ")")};
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"star-graph diagonal", 1, star_diagonal},
      {"star-graph scores", 1, star_scores},
      {"7-vertex figure scores", 1, figure_scores},
      {"truncation bound", 30, truncation_bound},
      {"perturbation bound", 10, perturbation_bound},
      {"Monte-Carlo diagonal accuracy", 120, mc_diagonal_accuracy},
      {"L1/L2 bound soundness", 30, bound_soundness},
      {"top-k oracle equivalence", 60, topk_equivalence},
      {"Gauss-Southwell sandwich and containment", 60, gauss_southwell},
      {"thresholding tail", 30, thresholding_tail},
      {"verification error rate", 60, verification_error},
      {"join precision and recall", 180, join_end_to_end},
      {"CLI reproducibility", 120, cli_reproducible},
  };
  return all;
}

bool run_one(std::size_t n) {
  const auto& c = criteria()[n - 1];
  const auto start = std::chrono::steady_clock::now();
  Outcome out{false, ""};
  try {
    out = c.run();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < c.budget_s;
  const bool pass = out.pass && in_time;
  std::printf("criterion %2zu %s: %s - %s [%.2f s of %.0f s]\n", n, pass ? "PASS" : "FAIL", c.name, out.detail.c_str(),
              secs, c.budget_s);
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t total = criteria().size();
  if (argc > 1) {
    const long n = std::strtol(argv[1], nullptr, 10);
    if (n < 1 || static_cast<std::size_t>(n) > total) {
      std::fprintf(stderr, "usage: %s [1..%zu]\n", argv[0], total);
      return 2;
    }
    return run_one(static_cast<std::size_t>(n)) ? 0 : 1;
  }
  bool all = true;
  for (std::size_t n = 1; n <= total; ++n) all = run_one(n) && all;
  return all ? 0 : 1;
}
