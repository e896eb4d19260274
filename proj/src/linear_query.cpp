#include "simrank/linear_query.hpp"

#include <cstdio>
#include <ostream>

#include "simrank/errors.hpp"
#include "simrank/parallel.hpp"

namespace simrank {

namespace {

void check_vertex(const Graph& g, Vertex v) {
  if (v >= g.num_vertices()) throw InvalidArgument("vertex " + std::to_string(v) + " out of range");
}

void check_diagonal(const Graph& g, std::span<const double> d) {
  if (d.size() != g.num_vertices())
    throw InvalidArgument("diagonal has " + std::to_string(d.size()) + " entries but graph has " +
                          std::to_string(g.num_vertices()) + " vertices");
}

// out = P^T y: out[j] is the mean of y over I(j).
void apply_transpose(const Graph& g, std::span<const double> y, std::vector<double>& out) {
  const std::size_t n = g.num_vertices();
  out.assign(n, 0.0);
  for (Vertex j = 0; j < n; ++j) {
    auto in = g.in_neighbors(j);
    if (in.empty()) continue;
    double sum = 0.0;
    for (Vertex i : in) sum += y[i];
    out[j] = sum / static_cast<double>(in.size());
  }
}

void add_scaled_diagonal(std::span<const double> d, const Distribution& x, double scale,
                         std::vector<double>& out) {
  for (const auto& [w, m] : x.entries()) out[w] += scale * d[w] * m;
}

}  // namespace

double single_pair(const Graph& g, const Config& cfg, std::span<const double> d, Vertex i, Vertex j,
                   std::size_t max_support) {
  cfg.validate();
  check_vertex(g, i);
  check_vertex(g, j);
  check_diagonal(g, d);
  Propagator work(g.num_vertices(), max_support);
  Distribution x = Distribution::unit(i);
  Distribution y = Distribution::unit(j);
  double score = 0.0;
  double ct = 1.0;
  for (std::uint32_t t = 0; t < cfg.T; ++t, ct *= cfg.c) {
    if (x.empty() || y.empty()) break;
    score += ct * weighted_dot(x, y, d);
    if (t + 1 < cfg.T) {
      x = work.step(g, x);
      y = work.step(g, y);
    }
  }
  return score;
}

std::vector<double> single_source(const Graph& g, const Config& cfg, std::span<const double> d, Vertex i,
                                  MemoryMode mode) {
  cfg.validate();
  check_vertex(g, i);
  check_diagonal(g, d);
  const std::size_t n = g.num_vertices();
  Propagator work(n);
  std::vector<double> scratch;

  if (mode == MemoryMode::fast) {
    std::vector<Distribution> powers;
    powers.reserve(cfg.T);
    powers.push_back(Distribution::unit(i));
    for (std::uint32_t t = 1; t < cfg.T; ++t) powers.push_back(work.step(g, powers.back()));

    // Horner: y = D x_{T-1}; y = c P^T y + D x_t for t = T-2 .. 0
    std::vector<double> y(n, 0.0);
    add_scaled_diagonal(d, powers.back(), 1.0, y);
    for (std::size_t t = powers.size() - 1; t-- > 0;) {
      apply_transpose(g, y, scratch);
      for (std::size_t w = 0; w < n; ++w) y[w] = cfg.c * scratch[w];
      add_scaled_diagonal(d, powers[t], 1.0, y);
    }
    return y;
  }

  std::vector<double> result(n, 0.0);
  std::vector<double> z;
  Distribution x = Distribution::unit(i);
  double ct = 1.0;
  for (std::uint32_t t = 0; t < cfg.T; ++t, ct *= cfg.c) {
    if (x.empty()) break;
    z.assign(n, 0.0);
    add_scaled_diagonal(d, x, 1.0, z);
    for (std::uint32_t r = 0; r < t; ++r) {
      apply_transpose(g, z, scratch);
      z.swap(scratch);
    }
    for (std::size_t w = 0; w < n; ++w) result[w] += ct * z[w];
    if (t + 1 < cfg.T) x = work.step(g, x);
  }
  return result;
}

void all_pairs(const Graph& g, const Config& cfg, std::span<const double> d,
               const std::function<void(const ScoreRow&)>& sink, const AllPairsOptions& options) {
  cfg.validate();
  check_diagonal(g, d);
  const std::size_t n = g.num_vertices();
  const std::size_t threads = resolve_threads(options.threads);
  const std::size_t batch = std::max<std::size_t>(options.batch, 1);
  std::vector<ScoreRow> rows;
  for (std::size_t begin = 0; begin < n; begin += batch) {
    const std::size_t end = std::min(n, begin + batch);
    rows.assign(end - begin, ScoreRow{});
    parallel_for(end - begin, threads, [&](std::size_t offset) {
      const auto source = static_cast<Vertex>(begin + offset);
      const auto scores = single_source(g, cfg, d, source, MemoryMode::fast);
      ScoreRow& row = rows[offset];
      row.source = source;
      for (std::size_t j = 0; j < n; ++j)
        if (scores[j] >= options.threshold)
          row.entries.push_back({static_cast<Vertex>(j), scores[j]});
    });
    for (const auto& row : rows) sink(row);
  }
}

void write_tsv_row(std::ostream& out, const Graph& g, const ScoreRow& row) {
  char buf[96];
  for (const auto& [v, score] : row.entries) {
    std::snprintf(buf, sizeof buf, "%llu\t%llu\t%.6f\n",
                  static_cast<unsigned long long>(g.original_id(row.source)),
                  static_cast<unsigned long long>(g.original_id(v)), score);
    out << buf;
  }
  if (!out) throw Error("failed writing all-pairs output");
}

DenseMatrix all_pairs_dense(const Graph& g, const Config& cfg, std::span<const double> d, std::size_t threads) {
  const std::size_t n = g.num_vertices();
  DenseMatrix s(n);
  AllPairsOptions options;
  options.threshold = 0.0;
  options.threads = threads;
  all_pairs(
      g, cfg, d,
      [&](const ScoreRow& row) {
        for (const auto& [v, score] : row.entries) s(row.source, v) = score;
      },
      options);
  return s;
}

}  // namespace simrank
