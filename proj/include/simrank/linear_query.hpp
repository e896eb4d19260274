#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "simrank/graph.hpp"
#include "simrank/oracle.hpp"

namespace simrank {

// Deterministic queries on the truncated Neumann series
//   s^(T)(i, j) = sum_{t<T} c^t (P^t e_i)^T D (P^t e_j).

double single_pair(const Graph& g, const Config& cfg, std::span<const double> d, Vertex i, Vertex j,
                   std::size_t max_support = Propagator::kDefaultMaxSupport);

enum class MemoryMode {
  low,   // O(n) extra memory, O(T^2 m) time: recomputes P^t e_i for each term
  fast,  // O(T n) extra memory, O(T m) time: stores all P^t e_i, one Horner pass back
};

// Row i of S^(T), length n.
std::vector<double> single_source(const Graph& g, const Config& cfg, std::span<const double> d, Vertex i,
                                  MemoryMode mode = MemoryMode::fast);

struct ScoreRow {
  Vertex source;
  std::vector<ScoredVertex> entries;  // ascending vertex id, score >= threshold
};

struct AllPairsOptions {
  double threshold = 1e-4;  // 0 keeps every entry
  std::size_t threads = 0;  // 0: resolve_threads()
  std::size_t batch = 256;  // rows computed ahead of the sink
};

/// Streams single_source rows for every vertex to `sink` in ascending source order.
/// Rows are computed in parallel batches; only a batch is ever held in memory.
void all_pairs(const Graph& g, const Config& cfg, std::span<const double> d,
               const std::function<void(const ScoreRow&)>& sink, const AllPairsOptions& options = {});

// Writes "i<TAB>j<TAB>score" lines (score with 6 decimals) using original vertex ids.
void write_tsv_row(std::ostream& out, const Graph& g, const ScoreRow& row);

// Dense S^(T) for small graphs (tests, accuracy command).
DenseMatrix all_pairs_dense(const Graph& g, const Config& cfg, std::span<const double> d,
                            std::size_t threads = 0);

}  // namespace simrank
