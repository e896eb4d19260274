#include "simrank/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>

#include "simrank/errors.hpp"

namespace simrank {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

void Config::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw InvalidArgument("decay factor c must lie in (0, 1)");
  if (T < 1) throw InvalidArgument("truncation depth T must be at least 1");
}

namespace {

void build_csr(std::size_t n, const std::vector<Edge>& edges, bool by_target,
               std::vector<std::size_t>& offsets, std::vector<Vertex>& adj) {
  offsets.assign(n + 1, 0);
  for (const auto& [u, v] : edges) ++offsets[(by_target ? v : u) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  adj.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& [u, v] : edges) {
    if (by_target)
      adj[cursor[v]++] = u;
    else
      adj[cursor[u]++] = v;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(adj.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              adj.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
}

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  std::vector<Edge> clean;
  clean.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.first >= n || e.second >= n) throw InvalidArgument("edge endpoint out of range");
    if (e.first != e.second) clean.push_back(e);
  }
  std::sort(clean.begin(), clean.end());
  clean.erase(std::unique(clean.begin(), clean.end()), clean.end());

  Graph g;
  build_csr(n, clean, true, g.in_offsets_, g.in_adj_);
  build_csr(n, clean, false, g.out_offsets_, g.out_adj_);
  return g;
}

std::optional<Vertex> Graph::find_original(std::uint64_t id) const {
  if (original_ids_.empty()) {
    if (id < num_vertices()) return static_cast<Vertex>(id);
    return std::nullopt;
  }
  auto it = dense_of_.find(id);
  if (it == dense_of_.end()) return std::nullopt;
  return it->second;
}

void Graph::set_original_ids(std::vector<std::uint64_t> ids) {
  if (ids.size() != num_vertices()) throw InvalidArgument("original id table size mismatch");
  dense_of_.clear();
  for (std::size_t v = 0; v < ids.size(); ++v) dense_of_.emplace(ids[v], static_cast<Vertex>(v));
  original_ids_ = std::move(ids);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (Vertex u = 0; u < num_vertices(); ++u)
    for (Vertex v : out_neighbors(u)) out.emplace_back(u, v);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool next_id(std::string_view& s, std::uint64_t& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr == s.data()) return false;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return s.empty() || s.front() == ' ' || s.front() == '\t';
}

struct PairHash {
  std::size_t operator()(const Edge& e) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{e.first} << 32) | e.second);
  }
};

}  // namespace

LoadedGraph load_edge_list(std::istream& in) {
  std::vector<std::uint64_t> original;
  std::unordered_map<std::uint64_t, Vertex> dense;
  auto intern = [&](std::uint64_t id) {
    auto [it, inserted] = dense.try_emplace(id, static_cast<Vertex>(original.size()));
    if (inserted) original.push_back(id);
    return it->second;
  };

  EdgeListStats stats;
  std::vector<Edge> edges;
  std::unordered_set<Edge, PairHash> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    ++stats.lines;
    std::uint64_t a = 0, b = 0;
    if (!next_id(s, a) || !next_id(s, b) || !trim(s).empty())
      throw ParseError("expected two non-negative integer ids, got '" + line + "'", lineno);
    Vertex u = intern(a);
    Vertex v = intern(b);
    if (u == v) {
      ++stats.self_loops;
      continue;
    }
    if (!seen.insert({u, v}).second) {
      ++stats.duplicates;
      continue;
    }
    edges.emplace_back(u, v);
  }
  if (original.empty()) throw ParseError("edge list contains no vertices", 0);
  stats.edges = edges.size();

  LoadedGraph result{Graph::from_edges(original.size(), edges), stats};
  result.graph.set_original_ids(std::move(original));
  return result;
}

LoadedGraph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file " + path.string());
  return load_edge_list(in);
}

Distribution Distribution::unit(Vertex v) {
  Distribution d;
  d.entries_.push_back({v, 1.0});
  d.total_ = 1.0;
  return d;
}

Distribution Distribution::from_entries(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.vertex < b.vertex; });
  Distribution d;
  for (const auto& e : entries) {
    if (!d.entries_.empty() && d.entries_.back().vertex == e.vertex)
      d.entries_.back().mass += e.mass;
    else
      d.entries_.push_back(e);
  }
  std::erase_if(d.entries_, [](const Entry& e) { return e.mass == 0.0; });
  for (const auto& e : d.entries_) d.total_ += e.mass;
  return d;
}

double Distribution::mass(Vertex v) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), v,
                             [](const Entry& e, Vertex x) { return e.vertex < x; });
  return it != entries_.end() && it->vertex == v ? it->mass : 0.0;
}

double weighted_dot(const Distribution& x, const Distribution& y, std::span<const double> weights) {
  auto xs = x.entries();
  auto ys = y.entries();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    if (xs[i].vertex < ys[j].vertex) {
      ++i;
    } else if (ys[j].vertex < xs[i].vertex) {
      ++j;
    } else {
      sum += weights[xs[i].vertex] * (xs[i].mass * ys[j].mass);
      ++i;
      ++j;
    }
  }
  return sum;
}

Propagator::Propagator(std::size_t n, std::size_t max_support)
    : acc_(n, 0.0), seen_(n, 0), max_support_(max_support) {}

Distribution Propagator::step(const Graph& g, const Distribution& d) {
  const std::size_t n = g.num_vertices();
  if (acc_.size() < n) {
    acc_.assign(n, 0.0);
    seen_.assign(n, 0);
  }
  touched_.clear();
  for (const auto& [v, m] : d.entries()) {
    auto in = g.in_neighbors(v);
    if (in.empty()) continue;
    const double share = m / static_cast<double>(in.size());
    for (Vertex u : in) {
      if (!seen_[u]) {
        seen_[u] = 1;
        touched_.push_back(u);
      }
      acc_[u] += share;
    }
  }
  if (touched_.size() > max_support_) {
    for (Vertex u : touched_) {
      acc_[u] = 0.0;
      seen_[u] = 0;
    }
    throw CapExceeded("propagation support " + std::to_string(touched_.size()) + " exceeds cap " +
                      std::to_string(max_support_));
  }

  std::vector<Entry> out;
  out.reserve(touched_.size());
  if (touched_.size() > n / 4) {
    for (Vertex u = 0; u < n; ++u) {
      if (!seen_[u]) continue;
      out.push_back({u, acc_[u]});
      acc_[u] = 0.0;
      seen_[u] = 0;
    }
  } else {
    std::sort(touched_.begin(), touched_.end());
    for (Vertex u : touched_) {
      out.push_back({u, acc_[u]});
      acc_[u] = 0.0;
      seen_[u] = 0;
    }
  }
  return Distribution::from_entries(std::move(out));
}

Distribution step(const Graph& g, const Distribution& d) {
  Propagator p(g.num_vertices());
  return p.step(g, d);
}

std::optional<Vertex> sample_step(const Graph& g, Vertex v, Rng& rng) {
  auto in = g.in_neighbors(v);
  if (in.empty()) return std::nullopt;
  if (in.size() == 1) return in.front();
  std::uniform_int_distribution<std::size_t> pick(0, in.size() - 1);
  return in[pick(rng)];
}

std::vector<VertexDistance> bfs_distances(const Graph& g, Vertex source, std::uint32_t max_d) {
  std::vector<VertexDistance> order;
  std::unordered_map<Vertex, std::uint32_t> dist;
  order.push_back({source, 0});
  dist.emplace(source, 0);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const auto [v, d] = order[head];
    if (d == max_d) continue;
    auto visit = [&](Vertex w) {
      if (dist.try_emplace(w, d + 1).second) order.push_back({w, d + 1});
    };
    for (Vertex w : g.out_neighbors(v)) visit(w);
    for (Vertex w : g.in_neighbors(v)) visit(w);
  }
  return order;
}

}  // namespace simrank
