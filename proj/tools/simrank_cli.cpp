#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "simrank/diagonal.hpp"
#include "simrank/errors.hpp"
#include "simrank/graph.hpp"
#include "simrank/linear_query.hpp"
#include "simrank/monte_carlo.hpp"
#include "simrank/oracle.hpp"
#include "simrank/simjoin.hpp"
#include "simrank/topk.hpp"

using namespace simrank;

namespace {

// Bad flag values that CLI11 cannot see (unknown vertex ids and the like).
struct UsageError : Error {
  using Error::Error;
};

struct Common {
  std::string graph;
  double c = 0.6;
  std::uint32_t T = 11;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

// Where the diagonal comes from: a file, or estimated on the spot.
struct DiagSource {
  std::string path;
  std::string mode = "mc";
  std::uint32_t L = 3;
  std::uint64_t R = 100;
};

void add_common(CLI::App* cmd, Common& opt) {
  cmd->add_option("--graph", opt.graph, "edge list file")->required();
  cmd->add_option("--c", opt.c, "decay factor")->capture_default_str();
  cmd->add_option("--T", opt.T, "truncation depth")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "random seed")->capture_default_str();
  cmd->add_option("--threads", opt.threads, "worker threads (0: SIMRANK_THREADS or all cores)");
}

void add_diag_source(CLI::App* cmd, DiagSource& src) {
  cmd->add_option("--diag", src.path, "diagonal file from estimate-diag");
  cmd->add_option("--diag-mode", src.mode, "exact|mc|oracle when --diag is absent")->capture_default_str();
  cmd->add_option("--L", src.L, "Gauss-Seidel sweeps when estimating")->capture_default_str();
  cmd->add_option("--R", src.R, "walks per estimate")->capture_default_str();
}

Config make_config(const Common& opt) {
  Config cfg;
  cfg.c = opt.c;
  cfg.T = opt.T;
  cfg.seed = opt.seed;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

Graph load_graph(const Common& opt) {
  auto loaded = load_edge_list(std::filesystem::path(opt.graph));
  std::fprintf(stderr, "graph: %zu vertices, %zu edges (%zu self-loops, %zu duplicates dropped)\n",
               loaded.graph.num_vertices(), loaded.graph.num_edges(), loaded.stats.self_loops,
               loaded.stats.duplicates);
  return std::move(loaded.graph);
}

EstimationMode parse_mode(const std::string& text) {
  try {
    return parse_estimation_mode(text);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

DiagonalCorrection estimate(const Graph& g, const Config& cfg, EstimationMode mode, std::uint32_t L,
                            std::uint64_t R) {
  if (mode == EstimationMode::oracle) return exact_diagonal(g, cfg);
  EstimationConfig est;
  est.mode = mode;
  est.L = L;
  est.R = R;
  return estimate_diagonal(g, cfg, est);
}

DiagonalCorrection obtain_diagonal(const Graph& g, const Config& cfg, const DiagSource& src) {
  if (src.path.empty()) return estimate(g, cfg, parse_mode(src.mode), src.L, src.R);
  auto d = load_diagonal(std::filesystem::path(src.path));
  if (d.size() != g.num_vertices())
    throw Error("diagonal file has " + std::to_string(d.size()) + " entries but the graph has " +
                std::to_string(g.num_vertices()) + " vertices");
  return d;
}

Vertex lookup(const Graph& g, std::uint64_t id) {
  auto v = g.find_original(id);
  if (!v) throw UsageError("vertex " + std::to_string(id) + " does not occur in the graph");
  return *v;
}

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

// --out path, or standard output when empty
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw Error("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

DenseMatrix read_score_tsv(const Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  DenseMatrix s(g.num_vertices());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::uint64_t i = 0, j = 0;
    double score = 0.0;
    if (!(fields >> i >> j >> score)) throw ParseError("expected 'i j score'", lineno);
    auto a = g.find_original(i), b = g.find_original(j);
    if (!a || !b) throw ParseError("unknown vertex id", lineno);
    s(*a, *b) = score;
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SimRank via the linearized recurrence: diagonal estimation, queries, top-k and joins"};
  app.require_subcommand(1);

  // estimate-diag
  Common diag_opt;
  std::string diag_mode = "mc", diag_out;
  std::uint32_t diag_L = 3;
  std::uint64_t diag_R = 100;
  auto* cmd_diag = app.add_subcommand("estimate-diag", "estimate the diagonal correction D");
  add_common(cmd_diag, diag_opt);
  cmd_diag->add_option("--L", diag_L, "Gauss-Seidel sweeps")->capture_default_str();
  cmd_diag->add_option("--R", diag_R, "walks per estimate")->capture_default_str();
  cmd_diag->add_option("--mode", diag_mode, "exact|mc|oracle")->capture_default_str();
  cmd_diag->add_option("--out", diag_out, "output file")->required();

  // query
  Common q_opt;
  DiagSource q_src;
  std::string q_estimator = "exact", q_out;
  std::uint64_t q_R_pair = 1000;
  double q_threshold = 1e-4;
  std::vector<std::uint64_t> q_pair;
  std::uint64_t q_source = 0;
  auto* cmd_query = app.add_subcommand("query", "single-pair, single-source or all-pairs scores");
  cmd_query->require_subcommand(1);
  auto* q_pair_cmd = cmd_query->add_subcommand("pair", "score of one pair");
  q_pair_cmd->add_option("ids", q_pair, "i j")->required()->expected(2);
  auto* q_source_cmd = cmd_query->add_subcommand("source", "scores against one vertex");
  q_source_cmd->add_option("id", q_source, "source vertex")->required();
  auto* q_all_cmd = cmd_query->add_subcommand("allpairs", "stream every row");
  q_all_cmd->add_option("--threshold", q_threshold, "drop scores below this (0 keeps all)")->capture_default_str();
  q_all_cmd->add_option("--out", q_out, "output file (default stdout)");
  for (auto* sub : {q_pair_cmd, q_source_cmd, q_all_cmd}) {
    add_common(sub, q_opt);
    add_diag_source(sub, q_src);
  }
  q_pair_cmd->add_option("--estimator", q_estimator, "exact|mc")->capture_default_str();
  q_pair_cmd->add_option("--pair-R", q_R_pair, "walks per endpoint for --estimator mc")->capture_default_str();

  // index
  Common ix_opt;
  DiagSource ix_src;
  std::string ix_out, ix_candidates, ix_mode = "exact";
  std::uint64_t ix_R_gamma = 100;
  CandidateParams ix_walks;
  auto* cmd_index = app.add_subcommand("index", "precompute L2 bounds and the candidate index");
  add_common(cmd_index, ix_opt);
  add_diag_source(cmd_index, ix_src);
  cmd_index->add_option("--out", ix_out, "bounds index file")->required();
  cmd_index->add_option("--candidates", ix_candidates, "candidate index file (built only when given)");
  cmd_index->add_option("--gamma-mode", ix_mode, "exact|mc")->capture_default_str();
  cmd_index->add_option("--gamma-R", ix_R_gamma, "walks per gamma row in mc mode")->capture_default_str();
  cmd_index->add_option("--P", ix_walks.P_walks, "pilot rounds")->capture_default_str();
  cmd_index->add_option("--Q", ix_walks.Q_walks, "probe walks per round")->capture_default_str();

  // topk
  Common tk_opt;
  DiagSource tk_src;
  TopKOptions tk;
  std::uint64_t tk_source = 0;
  std::string tk_index, tk_candidates, tk_scoring = "mc";
  bool tk_no_l1 = false, tk_no_l2 = false;
  auto* cmd_topk = app.add_subcommand("topk", "k most similar vertices");
  add_common(cmd_topk, tk_opt);
  add_diag_source(cmd_topk, tk_src);
  cmd_topk->add_option("--source", tk_source, "query vertex")->required();
  cmd_topk->add_option("--k", tk.k, "result size")->capture_default_str();
  cmd_topk->add_option("--theta-floor", tk.theta_floor, "ignore scores below this")->capture_default_str();
  cmd_topk->add_option("--d-max", tk.d_max, "BFS radius (0: T)")->capture_default_str();
  cmd_topk->add_option("--index", tk_index, "bounds index from 'index'");
  cmd_topk->add_option("--candidates", tk_candidates, "candidate index from 'index'");
  cmd_topk->add_option("--scoring", tk_scoring, "mc|exact")->capture_default_str();
  cmd_topk->add_option("--R-lo", tk.R_lo, "walks for the first estimate")->capture_default_str();
  cmd_topk->add_option("--R-hi", tk.R_hi, "walks when re-scoring")->capture_default_str();
  cmd_topk->add_flag("--no-l1", tk_no_l1, "disable the distance-shell bound");
  cmd_topk->add_flag("--no-l2", tk_no_l2, "disable the L2 bound");
  cmd_topk->add_flag("--distance-bound", tk.use_distance_bound, "also prune shells by c^ceil(d/2)");

  // join
  Common jn_opt;
  DiagSource jn_src;
  JoinOptions jn;
  std::string jn_out;
  bool jn_max_first = false;
  auto* cmd_join = app.add_subcommand("join", "all pairs with similarity at least theta");
  add_common(cmd_join, jn_opt);
  add_diag_source(cmd_join, jn_src);
  cmd_join->add_option("--theta", jn.filter.theta, "similarity threshold")->capture_default_str();
  cmd_join->add_option("--gamma", jn.filter.gamma_acc, "filter accuracy in [0, 1)")->capture_default_str();
  cmd_join->add_option("--beta-skip", jn.filter.beta_skip, "thresholding parameter (0: off)")->capture_default_str();
  cmd_join->add_option("--memory-cap", jn.filter.memory_cap, "max residual entries")->capture_default_str();
  cmd_join->add_option("--p", jn.p, "verification failure probability")->capture_default_str();
  cmd_join->add_option("--rmax", jn.R_max, "max samples per verified pair")->capture_default_str();
  cmd_join->add_option("--out", jn_out, "output file (default stdout)");
  cmd_join->add_flag("--max-residual-first", jn_max_first, "pop the largest residual instead of FIFO");

  // oracle
  Common or_opt;
  std::string or_out;
  bool or_converged = false;
  auto* cmd_oracle = app.add_subcommand("oracle", "naive SimRank matrix (small graphs)");
  add_common(cmd_oracle, or_opt);
  cmd_oracle->add_flag("--converged", or_converged, "iterate to convergence instead of T rounds");
  cmd_oracle->add_option("--out", or_out, "output file (default stdout)");

  // accuracy
  Common ac_opt;
  DiagSource ac_src;
  std::string ac_scores;
  auto* cmd_acc = app.add_subcommand("accuracy", "mean error of all-pairs scores against the oracle");
  add_common(cmd_acc, ac_opt);
  add_diag_source(cmd_acc, ac_src);
  cmd_acc->add_option("--scores", ac_scores, "TSV from 'query allpairs' (computed when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cmd_diag) {
      const Config cfg = make_config(diag_opt);
      const Graph g = load_graph(diag_opt);
      const auto start = std::chrono::steady_clock::now();
      const auto d = estimate(g, cfg, parse_mode(diag_mode), diag_L, diag_R);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      save_diagonal(std::filesystem::path(diag_out), d);
      std::printf("n=%zu mode=%s L=%u R=%llu clamped=%zu\n", d.size(), std::string(to_string(d.params.mode)).c_str(),
                  d.params.L, static_cast<unsigned long long>(d.params.R), d.clamped);
      if (g.num_vertices() <= 5000) std::printf("residual_norm=%.6e\n", residual_norm(g, cfg, d.values));
      std::fprintf(stderr, "estimated in %.3f s\n", elapsed.count());
      return 0;
    }

    if (*cmd_query) {
      const Config cfg = make_config(q_opt);
      const Graph g = load_graph(q_opt);
      const auto d = obtain_diagonal(g, cfg, q_src);
      if (*q_pair_cmd) {
        const Vertex i = lookup(g, q_pair[0]), j = lookup(g, q_pair[1]);
        double score = 0.0;
        if (q_estimator == "exact") {
          score = single_pair(g, cfg, d.values, i, j);
        } else if (q_estimator == "mc") {
          Rng rng = make_rng(cfg.seed);
          score = mc_single_pair(g, cfg, d.values, i, j, q_R_pair, rng);
        } else {
          throw UsageError("--estimator must be exact or mc");
        }
        std::cout << fixed6(score) << '\n';
      } else if (*q_source_cmd) {
        const Vertex i = lookup(g, q_source);
        const auto row = single_source(g, cfg, d.values, i, MemoryMode::fast);
        for (Vertex j = 0; j < g.num_vertices(); ++j) std::cout << g.original_id(j) << '\t' << fixed6(row[j]) << '\n';
      } else {
        Output out(q_out);
        AllPairsOptions opts;
        opts.threshold = q_threshold;
        opts.threads = q_opt.threads;
        all_pairs(g, cfg, d.values, [&](const ScoreRow& row) { write_tsv_row(out.stream(), g, row); }, opts);
        out.close();
      }
      return 0;
    }

    if (*cmd_index) {
      const Config cfg = make_config(ix_opt);
      const Graph g = load_graph(ix_opt);
      const auto d = obtain_diagonal(g, cfg, ix_src);
      const auto mode = parse_mode(ix_mode);
      if (mode == EstimationMode::oracle) throw UsageError("--gamma-mode must be exact or mc");
      auto index = build_bounds_index(g, cfg, d.values, mode, ix_R_gamma, ix_opt.threads);
      index.walk_params = ix_walks;
      {
        std::ofstream out(ix_out, std::ios::binary);
        if (!out) throw Error("cannot open " + ix_out + " for writing");
        write_bounds_index(out, index);
      }
      if (!ix_candidates.empty()) {
        const auto cand = build_candidate_index(g, cfg, ix_walks, ix_opt.threads);
        std::ofstream out(ix_candidates, std::ios::binary);
        if (!out) throw Error("cannot open " + ix_candidates + " for writing");
        cand.write(out);
      }
      return 0;
    }

    if (*cmd_topk) {
      const Config cfg = make_config(tk_opt);
      const Graph g = load_graph(tk_opt);
      const auto d = obtain_diagonal(g, cfg, tk_src);
      const Vertex u = lookup(g, tk_source);
      std::optional<BoundsIndex> index;
      if (!tk_index.empty()) {
        std::ifstream in(tk_index, std::ios::binary);
        if (!in) throw Error("cannot open " + tk_index);
        index = read_bounds_index(in);
        if (index->n != g.num_vertices())
          throw Error("bounds index has " + std::to_string(index->n) + " vertices but the graph has " +
                      std::to_string(g.num_vertices()));
      }
      if (!tk_candidates.empty()) {
        std::ifstream in(tk_candidates);
        if (!in) throw Error("cannot open " + tk_candidates);
        if (!index) index.emplace();
        index->candidates = CandidateIndex::read(in, g.num_vertices());
      }
      if (tk_scoring == "mc") {
        tk.scoring = Scoring::monte_carlo;
      } else if (tk_scoring == "exact") {
        tk.scoring = Scoring::deterministic;
      } else {
        throw UsageError("--scoring must be mc or exact");
      }
      tk.use_l1 = !tk_no_l1;
      tk.use_l2 = !tk_no_l2;
      Rng rng = make_rng(cfg.seed, u);
      const auto result = topk_query(g, cfg, d.values, index ? &*index : nullptr, u, tk, rng);
      for (const auto& [v, score] : result.ranking) std::cout << g.original_id(v) << '\t' << fixed6(score) << '\n';
      std::fprintf(stderr, "scanned=%zu scored=%zu pruned_l2=%zu pruned_shells=%zu\n", result.stats.scanned,
                   result.stats.scored, result.stats.pruned_l2, result.stats.pruned_shells);
      return 0;
    }

    if (*cmd_join) {
      const Config cfg = make_config(jn_opt);
      const Graph g = load_graph(jn_opt);
      const auto d = obtain_diagonal(g, cfg, jn_src);
      jn.threads = jn_opt.threads;
      jn.filter.max_residual_first = jn_max_first;
      const auto result = join(g, cfg, d.values, jn);
      Output out(jn_out);
      write_join_tsv(out.stream(), g, result);
      out.close();
      std::cerr << join_stats_json(result.stats) << '\n';
      return 0;
    }

    if (*cmd_oracle) {
      const Config cfg = make_config(or_opt);
      const Graph g = load_graph(or_opt);
      const auto s = or_converged ? converged_simrank(g, cfg) : naive_simrank(g, cfg);
      Output out(or_out);
      for (Vertex i = 0; i < g.num_vertices(); ++i)
        for (Vertex j = 0; j < g.num_vertices(); ++j)
          out.stream() << g.original_id(i) << '\t' << g.original_id(j) << '\t' << fixed6(s(i, j)) << '\n';
      out.close();
      return 0;
    }

    if (*cmd_acc) {
      const Config cfg = make_config(ac_opt);
      const Graph g = load_graph(ac_opt);
      const auto truth = converged_simrank(g, cfg);
      DenseMatrix approx(g.num_vertices());
      if (!ac_scores.empty()) {
        approx = read_score_tsv(g, ac_scores);
      } else {
        const auto d = obtain_diagonal(g, cfg, ac_src);
        approx = all_pairs_dense(g, cfg, d.values, ac_opt.threads);
      }
      std::printf("%.9f\n", mean_error(approx, truth));
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
