#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace simrank {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;
using Rng = std::mt19937_64;

// Independent stream for (seed, stream). Every parallel work item gets its own
// stream keyed by item index, so results do not depend on the thread count.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

struct Config {
  double c = 0.6;          // decay factor
  std::uint32_t T = 11;    // truncation depth (number of Neumann terms / walk steps)
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless 0 < c < 1 and T >= 1.
  void validate() const;
};

/// Immutable simple directed graph stored as in- and out-adjacency (CSR).
///
/// The transition operator P of the transposed graph has P(i, j) = 1 / |I(j)|
/// for i in I(j); column j is empty when j has no in-neighbors.
class Graph {
 public:
  Graph() = default;

  // Builds a graph on vertices 0..n-1. Self-loops and duplicate edges are dropped.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t num_vertices() const noexcept { return in_offsets_.empty() ? 0 : in_offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return in_adj_.size(); }

  std::span<const Vertex> in_neighbors(Vertex v) const noexcept {
    return {in_adj_.data() + in_offsets_[v], in_adj_.data() + in_offsets_[v + 1]};
  }
  std::span<const Vertex> out_neighbors(Vertex u) const noexcept {
    return {out_adj_.data() + out_offsets_[u], out_adj_.data() + out_offsets_[u + 1]};
  }
  std::size_t in_degree(Vertex v) const noexcept { return in_offsets_[v + 1] - in_offsets_[v]; }
  std::size_t out_degree(Vertex u) const noexcept { return out_offsets_[u + 1] - out_offsets_[u]; }

  // Id the vertex had in the source file (identity for from_edges graphs).
  std::uint64_t original_id(Vertex v) const { return original_ids_.empty() ? v : original_ids_[v]; }
  std::optional<Vertex> find_original(std::uint64_t id) const;
  void set_original_ids(std::vector<std::uint64_t> ids);

  std::vector<Edge> edges() const;

 private:
  std::vector<std::size_t> in_offsets_;
  std::vector<Vertex> in_adj_;
  std::vector<std::size_t> out_offsets_;
  std::vector<Vertex> out_adj_;
  std::vector<std::uint64_t> original_ids_;
  std::unordered_map<std::uint64_t, Vertex> dense_of_;
};

struct EdgeListStats {
  std::size_t lines = 0;
  std::size_t edges = 0;
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
};

struct LoadedGraph {
  Graph graph;
  EdgeListStats stats;
};

/// Reads "u v" lines (u -> v). '#' lines are comments, blank lines are skipped,
/// CRLF is accepted. Ids are renumbered densely in order of first appearance.
/// Throws ParseError on a malformed line or when no vertex is present.
LoadedGraph load_edge_list(std::istream& in);
LoadedGraph load_edge_list(const std::filesystem::path& path);

struct Entry {
  Vertex vertex;
  double mass;
};

/// Sparse non-negative vector over vertices, sorted by vertex id.
/// total_mass() < 1 means some walks were absorbed at dangling vertices.
class Distribution {
 public:
  Distribution() = default;

  static Distribution unit(Vertex v);
  // Merges repeated vertices, drops zero entries.
  static Distribution from_entries(std::vector<Entry> entries);

  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t support() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  double total_mass() const noexcept { return total_; }
  double mass(Vertex v) const noexcept;

 private:
  std::vector<Entry> entries_;
  double total_ = 0.0;
};

// Sum_w weights[w] * x[w] * y[w].
double weighted_dot(const Distribution& x, const Distribution& y, std::span<const double> weights);

/// Reusable workspace for applying P. Keeps a dense accumulator of size n and
/// switches from sorting the touched list to a dense scan once the support
/// exceeds n/4.
class Propagator {
 public:
  static constexpr std::size_t kDefaultMaxSupport = 1'000'000;

  explicit Propagator(std::size_t n, std::size_t max_support = kDefaultMaxSupport);

  // P * d. Throws CapExceeded if the result has more than max_support nonzeros.
  Distribution step(const Graph& g, const Distribution& d);

 private:
  std::vector<double> acc_;
  std::vector<char> seen_;
  std::vector<Vertex> touched_;
  std::size_t max_support_;
};

Distribution step(const Graph& g, const Distribution& d);

// One reverse step of a walk: uniform in-neighbor of v, nullopt if absorbed.
std::optional<Vertex> sample_step(const Graph& g, Vertex v, Rng& rng);

struct VertexDistance {
  Vertex vertex;
  std::uint32_t distance;
};

// Undirected BFS from source up to max_d hops, in visiting order (ascending distance).
std::vector<VertexDistance> bfs_distances(const Graph& g, Vertex source, std::uint32_t max_d);

}  // namespace simrank
