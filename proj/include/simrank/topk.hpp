#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "simrank/diagonal.hpp"
#include "simrank/graph.hpp"
#include "simrank/oracle.hpp"

namespace simrank {

// ---------------------------------------------------------------------------
// L2 bound: gamma(u, t) = || sqrt(D) P^t e_u ||, and
//   s^(T)(u, v) <= sum_t c^t gamma(u, t) gamma(v, t)   (Cauchy-Schwarz).
// ---------------------------------------------------------------------------

// Row gamma(u, 0..T-1). Exact mode propagates P^t e_u; Monte-Carlo mode uses R walks.
std::vector<double> build_gamma(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u,
                                EstimationMode mode, std::uint64_t R, Rng& rng);

double l2_bound(std::span<const double> gamma_u, std::span<const double> gamma_v, double c);

// ---------------------------------------------------------------------------
// L1 bound: alpha(u, d, t) = max_{w : dist(u, w) = d} D_ww (P^t e_u)_w and
//   beta(u, d) = sum_t c^t max_{d-t <= d' <= d+t} alpha(u, d', t),
// with s^(T)(u, v) <= beta(u, dist(u, v)).
// ---------------------------------------------------------------------------

class AlphaBeta {
 public:
  AlphaBeta(Vertex u, std::uint32_t T, std::uint32_t max_distance, std::uint32_t d_max);

  Vertex query() const noexcept { return u_; }
  std::uint32_t steps() const noexcept { return T_; }
  std::uint32_t max_distance() const noexcept { return max_distance_; }
  std::uint32_t d_max() const noexcept { return static_cast<std::uint32_t>(beta_.size() - 1); }

  double alpha(std::uint32_t d, std::uint32_t t) const noexcept {
    return d > max_distance_ ? 0.0 : alpha_[d * T_ + t];
  }
  void raise_alpha(std::uint32_t d, std::uint32_t t, double value);

  // beta(u, d) for d <= d_max; 0 beyond.
  double beta(std::uint32_t d) const noexcept { return d < beta_.size() ? beta_[d] : 0.0; }
  // max_{d' >= d} beta(u, d')
  double beta_tail(std::uint32_t d) const noexcept { return d < tail_.size() ? tail_[d] : 0.0; }

  // Rebuilds beta from the alpha table.
  void finalize(double c);
  // Naive evaluation of beta(u, d) from alpha, independent of the cached table.
  double recompute_beta(std::uint32_t d, double c) const;

 private:
  Vertex u_;
  std::uint32_t T_;
  std::uint32_t max_distance_;
  std::vector<double> alpha_;  // (max_distance + 1) x T
  std::vector<double> beta_;   // d_max + 1
  std::vector<double> tail_;
};

// Distance lookup from an undirected BFS around u.
using DistanceMap = std::unordered_map<Vertex, std::uint32_t>;
DistanceMap distance_map(std::span<const VertexDistance> order);

AlphaBeta build_alpha_beta(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u,
                           std::uint32_t d_max, EstimationMode mode, std::uint64_t R, Rng& rng);
AlphaBeta build_alpha_beta(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u,
                           std::uint32_t d_max, const DistanceMap& distances, EstimationMode mode,
                           std::uint64_t R, Rng& rng);

// ---------------------------------------------------------------------------
// Candidate index: bipartite graph u -> anchors. For each u, P_walks rounds of
// one pilot walk W0 and Q_walks probe walks; W0's step-t vertex becomes an
// anchor when at least two probe walks sit on it at step t. Candidates of u are
// the vertices sharing an anchor with u.
// ---------------------------------------------------------------------------

class CandidateIndex {
 public:
  CandidateIndex() = default;
  CandidateIndex(std::vector<std::vector<Vertex>> anchors, std::size_t n);

  std::size_t size() const noexcept { return anchors_.size(); }
  std::span<const Vertex> anchors(Vertex u) const { return anchors_[u]; }
  // Sorted, excludes u.
  std::vector<Vertex> candidates(Vertex u) const;

  // "u: a1 a2 ..." per vertex, dense ids.
  void write(std::ostream& out) const;
  static CandidateIndex read(std::istream& in, std::size_t n);

 private:
  std::vector<std::vector<Vertex>> anchors_;
  std::vector<std::vector<Vertex>> owners_;  // anchor -> vertices that list it
};

struct CandidateParams {
  std::uint32_t P_walks = 10;
  std::uint32_t Q_walks = 5;
};

CandidateIndex build_candidate_index(const Graph& g, const Config& cfg, const CandidateParams& params,
                                     std::size_t threads = 0);

// ---------------------------------------------------------------------------
// Bounds index: precomputed gamma table plus the optional candidate index.
// ---------------------------------------------------------------------------

struct BoundsIndex {
  std::size_t n = 0;
  std::uint32_t T = 0;
  double c = 0.0;
  EstimationMode mode = EstimationMode::exact;
  std::uint64_t R_gamma = 0;
  std::uint64_t seed = 0;
  CandidateParams walk_params;
  std::vector<double> gamma;  // n x T, row-major
  std::optional<CandidateIndex> candidates;

  std::span<const double> gamma_row(Vertex u) const {
    return {gamma.data() + static_cast<std::size_t>(u) * T, T};
  }
  bool has_gamma() const noexcept { return !gamma.empty(); }
};

// gamma rows for every vertex, vertex u drawing from make_rng(cfg.seed, u).
BoundsIndex build_bounds_index(const Graph& g, const Config& cfg, std::span<const double> d,
                               EstimationMode mode, std::uint64_t R_gamma, std::size_t threads = 0);

// Binary: "SRBI" magic, version, n, T, c, mode, R_gamma, seed, P, Q, then the gamma table.
void write_bounds_index(std::ostream& out, const BoundsIndex& index);
BoundsIndex read_bounds_index(std::istream& in);

// ---------------------------------------------------------------------------
// Query
// ---------------------------------------------------------------------------

enum class Scoring {
  monte_carlo,    // mc_single_pair at R_lo, re-scored at R_hi when promising
  deterministic,  // exact truncated series
};

struct TopKOptions {
  std::size_t k = 10;
  double theta_floor = 0.01;
  std::uint32_t d_max = 0;  // 0: T
  bool use_l1 = true;
  bool use_l2 = true;
  bool use_distance_bound = false;  // s(u, v) <= c^ceil(d/2)
  Scoring scoring = Scoring::monte_carlo;
  std::uint64_t R_lo = 10;
  std::uint64_t R_hi = 100;
  double rescore_fraction = 0.5;
  EstimationMode bound_mode = EstimationMode::exact;  // for alpha/beta
  std::uint64_t R_bounds = 100;
};

struct TopKStats {
  std::size_t scanned = 0;
  std::size_t pruned_l2 = 0;
  std::size_t pruned_shells = 0;
  std::size_t scored = 0;
  std::size_t rescored = 0;
};

struct TopKResult {
  std::vector<ScoredVertex> ranking;  // descending score, ties by ascending id
  TopKStats stats;
};

/// Scans vertices around u in ascending undirected distance, keeping the k best
/// in a min-heap. A shell is skipped when beta(u, d) cannot beat the current
/// k-th score (or theta_floor); a vertex is skipped when its L2 bound cannot.
/// With an index carrying candidates, only candidates are scanned.
TopKResult topk_query(const Graph& g, const Config& cfg, std::span<const double> d, const BoundsIndex* index,
                      Vertex u, const TopKOptions& options, Rng& rng);

}  // namespace simrank
