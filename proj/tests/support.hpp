#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "simrank/graph.hpp"
#include "simrank/oracle.hpp"

namespace simrank::testing {

inline Graph fixture(const std::string& name) {
  return load_edge_list(std::filesystem::path(SIMRANK_TEST_DATA) / name).graph;
}

// Dense id of an id as written in a fixture file.
inline Vertex id(const Graph& g, std::uint64_t original) { return g.find_original(original).value(); }

// Directed G(n, p)-style graph; `symmetric` mirrors every edge.
inline Graph random_graph(std::size_t n, double avg_degree, std::uint64_t seed, bool symmetric = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Vertex> pick(0, static_cast<Vertex>(n - 1));
  std::vector<Edge> edges;
  const auto m = static_cast<std::size_t>(avg_degree * static_cast<double>(n));
  for (std::size_t e = 0; e < m; ++e) {
    const Vertex a = pick(rng), b = pick(rng);
    edges.emplace_back(a, b);
    if (symmetric) edges.emplace_back(b, a);
  }
  return Graph::from_edges(n, edges);
}

// A mix of shapes for property tests: sparse/dense, directed/symmetric.
inline Graph graph_family(std::size_t index, std::size_t n) {
  const double degrees[] = {1.0, 2.0, 3.0, 1.5};
  return random_graph(n, degrees[index % 4], 1000 + index, index % 3 == 1);
}

// sum_{t<T} c^t (P^t)^T D P^t through the dense sandwich recurrence.
inline DenseMatrix dense_truncated(const Graph& g, const Config& cfg, std::span<const double> d) {
  const std::size_t n = g.num_vertices();
  DenseMatrix diag(n);
  for (std::size_t k = 0; k < n; ++k) diag(k, k) = d[k];
  DenseMatrix x = diag;
  for (std::uint32_t t = 1; t < cfg.T; ++t) {
    x = transition_sandwich(g, cfg.c, x);
    for (std::size_t k = 0; k < n; ++k) x(k, k) += d[k];
  }
  return x;
}

inline double truncation_slack(const Config& cfg) { return std::pow(cfg.c, cfg.T) / (1.0 - cfg.c); }

}  // namespace simrank::testing
