#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simrank/graph.hpp"
#include "simrank/monte_carlo.hpp"
#include "simrank/oracle.hpp"

namespace simrank {

// Sparse symmetric residual / solution pair storage. Only i <= j is kept.
class ResidualStore {
 public:
  struct Slot {
    double residual = 0.0;
    double solution = 0.0;
    bool queued = false;
  };

  explicit ResidualStore(double epsilon, bool max_residual_first = false);

  static std::uint64_t key(Vertex i, Vertex j) noexcept {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }
  static VertexPair unkey(std::uint64_t k) noexcept {
    return {static_cast<Vertex>(k >> 32), static_cast<Vertex>(k & 0xffffffffu)};
  }

  double epsilon() const noexcept { return epsilon_; }
  bool allocated(Vertex i, Vertex j) const { return slots_.contains(key(i, j)); }
  double residual(Vertex i, Vertex j) const;
  double solution(Vertex i, Vertex j) const;
  std::size_t entries() const noexcept { return slots_.size(); }
  const std::unordered_map<std::uint64_t, Slot>& slots() const noexcept { return slots_; }

  // Adds a to an entry, allocating it. Queues it once |residual| >= epsilon.
  void add(Vertex i, Vertex j, double a);
  // Moves the residual of (i, j) into the solution.
  double settle(Vertex i, Vertex j);
  // Next pair whose residual still clears epsilon; stale entries are dropped.
  std::optional<VertexPair> pop();

 private:
  void enqueue(std::uint64_t k, Slot& slot);

  double epsilon_;
  bool max_first_;
  std::unordered_map<std::uint64_t, Slot> slots_;
  std::deque<std::uint64_t> fifo_;
  std::priority_queue<std::pair<double, std::uint64_t>> by_size_;
};

/// Skip allocation: accumulates into an allocated entry; otherwise allocates
/// with probability min(1, beta_skip * a). Returns whether the mass landed.
bool stochastic_threshold(ResidualStore& store, Vertex i, Vertex j, double a, double beta_skip, Rng& rng);

struct FilterOptions {
  double theta = 0.2;
  double gamma_acc = 0.0;
  double beta_skip = 100.0;  // <= 0 turns thresholding off
  std::size_t memory_cap = 200'000'000;
  bool max_residual_first = false;
};

struct FilterStats {
  std::uint64_t pops = 0;
  std::uint64_t pushes = 0;
  std::uint64_t dropped = 0;
  double dropped_mass = 0.0;
  double total_pushed = 0.0;
  std::size_t entries = 0;
  bool cap_exceeded = false;
};

struct FilterResult {
  ResidualStore store;
  FilterStats stats;
};

/// Gauss-Southwell on S = c P^T S P + D from S~ = 0, R~ = D. Stops once every
/// residual is below epsilon = (1-c)(1-gamma_acc) theta, or with
/// stats.cap_exceeded set when the store outgrows memory_cap.
FilterResult gauss_southwell_filter(const Graph& g, const Config& cfg, std::span<const double> d,
                                    const FilterOptions& options, Rng& rng);

struct JoinOptions {
  FilterOptions filter;
  double p = 0.01;
  std::uint64_t R_max = 1000;
  std::size_t threads = 0;
};

struct JoinStats {
  FilterStats filter;
  std::size_t candidates = 0;  // |J_H \ J_L|
  std::size_t undecided = 0;
  std::uint64_t samples = 0;
};

struct JoinResult {
  std::vector<VertexPair> J_L;
  std::vector<VertexPair> J_H;
  std::vector<VertexPair> verified;
  JoinStats stats;

  // J_L and verified, sorted.
  std::vector<VertexPair> pairs() const;
};

/// Filter, then verify J_H \ J_L pair by pair. Pair number k of the sorted
/// candidate list draws from make_rng(cfg.seed, k). Throws CapExceeded.
JoinResult join(const Graph& g, const Config& cfg, std::span<const double> d, const JoinOptions& options);

// "i\tj\tfilter|verified" in original ids, sorted by (i, j).
void write_join_tsv(std::ostream& out, const Graph& g, const JoinResult& result);
std::string join_stats_json(const JoinStats& stats);

}  // namespace simrank
