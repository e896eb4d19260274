#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "simrank/diagonal.hpp"
#include "simrank/graph.hpp"

namespace simrank {

// Dense row-major n x n matrix, used only by the brute-force oracle.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  // max_ij |a_ij - b_ij|
  friend double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct OracleOptions {
  std::size_t max_vertices = 5000;
  double tolerance = 1e-12;        // convergence: successive max-difference below this
  std::uint32_t max_iterations = 200;
};

// c P^T X P, computed in O(n m).
DenseMatrix transition_sandwich(const Graph& g, double c, const DenseMatrix& x);

/// cfg.T iterations of the original recurrence s(i,j) = c / (|I(i)||I(j)|) sum s(a,b),
/// s(i,i) = 1, from S = I. Throws CapExceeded above options.max_vertices.
DenseMatrix naive_simrank(const Graph& g, const Config& cfg, const OracleOptions& options = {});

// Iterates until the successive max-difference is below options.tolerance or
// options.max_iterations is reached. cfg.T is ignored.
DenseMatrix converged_simrank(const Graph& g, const Config& cfg, const OracleOptions& options = {});

// D = S - c P^T S P from the converged oracle matrix.
DiagonalCorrection exact_diagonal(const Graph& g, const Config& cfg, const OracleOptions& options = {});
DiagonalCorrection diagonal_from_scores(const Graph& g, double c, const DenseMatrix& s);

using VertexPair = std::pair<Vertex, Vertex>;

struct ScoredVertex {
  Vertex vertex;
  double score;
};

// Unordered pairs i < j with s(i,j) >= theta.
std::vector<VertexPair> join_from_scores(const DenseMatrix& s, double theta);
std::vector<VertexPair> brute_force_join(const Graph& g, const Config& cfg, double theta,
                                         const OracleOptions& options = {});

// k best v != source, descending score, ties by ascending vertex id.
std::vector<ScoredVertex> topk_from_scores(const DenseMatrix& s, Vertex source, std::size_t k);
std::vector<ScoredVertex> brute_force_topk(const Graph& g, const Config& cfg, Vertex source, std::size_t k,
                                           const OracleOptions& options = {});

// (1/n^2) sum_ij |a_ij - b_ij|
double mean_error(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace simrank
