#pragma once

#include <cstdint>
#include <span>

#include "simrank/graph.hpp"
#include "simrank/walks.hpp"

namespace simrank {

// sum_t c^t sum_w D_ww * count_a(w, t) * count_b(w, t) / R^2 over two walk batches
// of equal size.
double batch_pair_score(const WalkBatch& a, const WalkBatch& b, double c, std::span<const double> d);

/// Monte-Carlo single-pair score on the linearized series: R walks from i and R
/// walks from j, T steps each. Returns exactly 1 for i == j.
double mc_single_pair(const Graph& g, const Config& cfg, std::span<const double> d, Vertex i, Vertex j,
                      std::uint64_t R, Rng& rng);

/// One sample of c^tau for the first meeting time tau of two synchronous in-link
/// walks from i and j. 0 if they do not meet within T steps or a walk is absorbed.
double meeting_time_sample(const Graph& g, const Config& cfg, Vertex i, Vertex j, Rng& rng);

enum class Decision { similar, dissimilar };

struct Verdict {
  Decision decision = Decision::dissimilar;  // side of theta the running mean ended on
  bool undecided = false;                    // R_max reached before the stopping rule fired
  std::uint64_t samples = 0;
  double estimate = 0.0;                     // running mean of c^tau
};

// Samples needed before the stopping rule can fire at gap delta:
// R * delta^2 >= log(1/p)/2 * (c/(1-c))^2.
double stopping_constant(double c, double p);

/// Adaptive verification of s(i, j) >= theta: draws meeting-time samples until
/// R * |mean - theta|^2 >= stopping_constant(c, p) or R == R_max.
Verdict verify_pair(const Graph& g, const Config& cfg, Vertex i, Vertex j, double theta, double p,
                    std::uint64_t R_max, Rng& rng);

}  // namespace simrank
