#include "simrank/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simrank/errors.hpp"

namespace simrank {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.n_ != b.n_) throw InvalidArgument("matrix size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data_.size(); ++i) worst = std::max(worst, std::abs(a.data_[i] - b.data_[i]));
  return worst;
}

namespace {

void check_cap(const Graph& g, const OracleOptions& options) {
  if (g.num_vertices() > options.max_vertices)
    throw CapExceeded("oracle vertex cap exceeded: n=" + std::to_string(g.num_vertices()) +
                      " > " + std::to_string(options.max_vertices));
}

DenseMatrix simrank_step(const Graph& g, double c, const DenseMatrix& s) {
  DenseMatrix next = transition_sandwich(g, c, s);
  // mirror the upper triangle so rounding cannot break symmetry
  for (std::size_t i = 0; i < g.num_vertices(); ++i) {
    next(i, i) = 1.0;
    for (std::size_t j = i + 1; j < g.num_vertices(); ++j) next(j, i) = next(i, j);
  }
  return next;
}

}  // namespace

DenseMatrix transition_sandwich(const Graph& g, double c, const DenseMatrix& x) {
  const std::size_t n = g.num_vertices();
  // right(a, j) = (X P)(a, j) = mean over b in I(j) of X(a, b)
  DenseMatrix right(n);
  for (Vertex j = 0; j < n; ++j) {
    auto in = g.in_neighbors(j);
    if (in.empty()) continue;
    const double w = 1.0 / static_cast<double>(in.size());
    for (std::size_t a = 0; a < n; ++a) {
      double sum = 0.0;
      for (Vertex b : in) sum += x(a, b);
      right(a, j) = sum * w;
    }
  }
  DenseMatrix out(n);
  for (Vertex i = 0; i < n; ++i) {
    auto in = g.in_neighbors(i);
    if (in.empty()) continue;
    const double w = c / static_cast<double>(in.size());
    for (Vertex a : in)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += w * right(a, j);
  }
  return out;
}

DenseMatrix naive_simrank(const Graph& g, const Config& cfg, const OracleOptions& options) {
  cfg.validate();
  check_cap(g, options);
  DenseMatrix s = DenseMatrix::identity(g.num_vertices());
  for (std::uint32_t t = 0; t < cfg.T; ++t) s = simrank_step(g, cfg.c, s);
  return s;
}

DenseMatrix converged_simrank(const Graph& g, const Config& cfg, const OracleOptions& options) {
  cfg.validate();
  check_cap(g, options);
  DenseMatrix s = DenseMatrix::identity(g.num_vertices());
  for (std::uint32_t t = 0; t < options.max_iterations; ++t) {
    DenseMatrix next = simrank_step(g, cfg.c, s);
    const double delta = max_abs_diff(next, s);
    s = std::move(next);
    if (delta < options.tolerance) break;
  }
  return s;
}

DiagonalCorrection diagonal_from_scores(const Graph& g, double c, const DenseMatrix& s) {
  const DenseMatrix sandwich = transition_sandwich(g, c, s);
  DiagonalCorrection d;
  d.params.c = c;
  d.params.mode = EstimationMode::oracle;
  d.values.resize(g.num_vertices());
  for (std::size_t k = 0; k < g.num_vertices(); ++k) d.values[k] = s(k, k) - sandwich(k, k);
  return d;
}

DiagonalCorrection exact_diagonal(const Graph& g, const Config& cfg, const OracleOptions& options) {
  DiagonalCorrection d = diagonal_from_scores(g, cfg.c, converged_simrank(g, cfg, options));
  d.params.T = cfg.T;
  d.params.seed = cfg.seed;
  return d;
}

std::vector<VertexPair> join_from_scores(const DenseMatrix& s, double theta) {
  std::vector<VertexPair> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (s(i, j) >= theta) out.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
  return out;
}

std::vector<VertexPair> brute_force_join(const Graph& g, const Config& cfg, double theta,
                                         const OracleOptions& options) {
  return join_from_scores(converged_simrank(g, cfg, options), theta);
}

std::vector<ScoredVertex> topk_from_scores(const DenseMatrix& s, Vertex source, std::size_t k) {
  std::vector<ScoredVertex> all;
  for (std::size_t v = 0; v < s.size(); ++v)
    if (v != source) all.push_back({static_cast<Vertex>(v), s(source, v)});
  std::sort(all.begin(), all.end(), [](const ScoredVertex& a, const ScoredVertex& b) {
    return a.score != b.score ? a.score > b.score : a.vertex < b.vertex;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<ScoredVertex> brute_force_topk(const Graph& g, const Config& cfg, Vertex source, std::size_t k,
                                           const OracleOptions& options) {
  if (source >= g.num_vertices()) throw InvalidArgument("source vertex out of range");
  return topk_from_scores(converged_simrank(g, cfg, options), source, k);
}

double mean_error(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.size() != b.size()) throw InvalidArgument("matrix size mismatch");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sum += std::abs(a(i, j) - b(i, j));
  return sum / static_cast<double>(n * n);
}

}  // namespace simrank
