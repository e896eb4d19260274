#include "simrank/topk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "simrank/errors.hpp"
#include "simrank/monte_carlo.hpp"
#include "simrank/parallel.hpp"
#include "simrank/walks.hpp"

namespace simrank {

std::vector<double> build_gamma(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u,
                                EstimationMode mode, std::uint64_t R, Rng& rng) {
  std::vector<double> row(cfg.T, 0.0);
  if (mode == EstimationMode::monte_carlo) {
    if (R < 1) throw InvalidArgument("R must be at least 1");
    const auto batch = WalkBatch::simulate(g, u, R, cfg.T, rng);
    const double R2 = static_cast<double>(R) * static_cast<double>(R);
    for (std::uint32_t t = 0; t < cfg.T; ++t) {
      double mu = 0.0;
      for (const auto& [w, count] : batch.at(t)) {
        const double x = static_cast<double>(count);
        mu += d[w] * x * x;
      }
      row[t] = std::sqrt(mu / R2);
    }
    return row;
  }

  Propagator work(g.num_vertices());
  Distribution x = Distribution::unit(u);
  for (std::uint32_t t = 0; t < cfg.T && !x.empty(); ++t) {
    double mu = 0.0;
    for (const auto& [w, p] : x.entries()) mu += d[w] * p * p;
    row[t] = std::sqrt(mu);
    if (t + 1 < cfg.T) x = work.step(g, x);
  }
  return row;
}

double l2_bound(std::span<const double> gamma_u, std::span<const double> gamma_v, double c) {
  if (gamma_u.size() != gamma_v.size()) throw InvalidArgument("gamma rows differ in length");
  double sum = 0.0;
  double ct = 1.0;
  for (std::size_t t = 0; t < gamma_u.size(); ++t, ct *= c) sum += ct * gamma_u[t] * gamma_v[t];
  return sum;
}

AlphaBeta::AlphaBeta(Vertex u, std::uint32_t T, std::uint32_t max_distance, std::uint32_t d_max)
    : u_(u),
      T_(T),
      max_distance_(max_distance),
      alpha_(static_cast<std::size_t>(max_distance + 1) * T, 0.0),
      beta_(d_max + 1, 0.0),
      tail_(d_max + 1, 0.0) {}

void AlphaBeta::raise_alpha(std::uint32_t d, std::uint32_t t, double value) {
  if (d > max_distance_ || t >= T_) return;
  double& slot = alpha_[d * T_ + t];
  slot = std::max(slot, value);
}

double AlphaBeta::recompute_beta(std::uint32_t d, double c) const {
  double sum = 0.0;
  for (std::uint32_t t = 0; t < T_; ++t) {
    const std::uint32_t lo = d > t ? d - t : 0;
    double best = 0.0;
    for (std::uint32_t dd = lo; dd <= d + t; ++dd) best = std::max(best, alpha(dd, t));
    sum += std::pow(c, t) * best;
  }
  return sum;
}

void AlphaBeta::finalize(double c) {
  for (std::uint32_t d = 0; d < beta_.size(); ++d) {
    double sum = 0.0;
    double ct = 1.0;
    for (std::uint32_t t = 0; t < T_; ++t, ct *= c) {
      const std::uint32_t lo = d > t ? d - t : 0;
      const std::uint32_t hi = std::min(d + t, max_distance_);
      double best = 0.0;
      for (std::uint32_t dd = lo; dd <= hi; ++dd) best = std::max(best, alpha_[dd * T_ + t]);
      sum += ct * best;
    }
    beta_[d] = sum;
  }
  double running = 0.0;
  for (std::size_t d = beta_.size(); d-- > 0;) {
    running = std::max(running, beta_[d]);
    tail_[d] = running;
  }
}

DistanceMap distance_map(std::span<const VertexDistance> order) {
  DistanceMap map;
  map.reserve(order.size());
  for (const auto& [v, dist] : order) map.emplace(v, dist);
  return map;
}

AlphaBeta build_alpha_beta(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u,
                           std::uint32_t d_max, const DistanceMap& distances, EstimationMode mode,
                           std::uint64_t R, Rng& rng) {
  // A walk of t < T steps stays within undirected distance T - 1 of u.
  AlphaBeta ab(u, cfg.T, cfg.T - 1, d_max);
  auto distance_of = [&](Vertex w) {
    auto it = distances.find(w);
    if (it == distances.end()) throw InvalidArgument("distance map does not cover the walk support");
    return it->second;
  };

  if (mode == EstimationMode::monte_carlo) {
    if (R < 1) throw InvalidArgument("R must be at least 1");
    const auto batch = WalkBatch::simulate(g, u, R, cfg.T, rng);
    const double inv = 1.0 / static_cast<double>(R);
    for (std::uint32_t t = 0; t < cfg.T; ++t)
      for (const auto& [w, count] : batch.at(t))
        ab.raise_alpha(distance_of(w), t, d[w] * static_cast<double>(count) * inv);
  } else {
    Propagator work(g.num_vertices());
    Distribution x = Distribution::unit(u);
    for (std::uint32_t t = 0; t < cfg.T && !x.empty(); ++t) {
      for (const auto& [w, p] : x.entries()) ab.raise_alpha(distance_of(w), t, d[w] * p);
      if (t + 1 < cfg.T) x = work.step(g, x);
    }
  }
  ab.finalize(cfg.c);
  return ab;
}

AlphaBeta build_alpha_beta(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u,
                           std::uint32_t d_max, EstimationMode mode, std::uint64_t R, Rng& rng) {
  const auto order = bfs_distances(g, u, std::max(d_max, cfg.T - 1));
  return build_alpha_beta(g, cfg, d, u, d_max, distance_map(order), mode, R, rng);
}

CandidateIndex::CandidateIndex(std::vector<std::vector<Vertex>> anchors, std::size_t n)
    : anchors_(std::move(anchors)), owners_(n) {
  if (anchors_.size() != n) throw InvalidArgument("candidate index size mismatch");
  for (Vertex u = 0; u < anchors_.size(); ++u) {
    auto& list = anchors_[u];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    for (Vertex a : list) {
      if (a >= n) throw InvalidArgument("anchor out of range");
      owners_[a].push_back(u);
    }
  }
}

std::vector<Vertex> CandidateIndex::candidates(Vertex u) const {
  std::vector<Vertex> out;
  for (Vertex a : anchors_[u])
    for (Vertex v : owners_[a])
      if (v != u) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void CandidateIndex::write(std::ostream& out) const {
  for (Vertex u = 0; u < anchors_.size(); ++u) {
    out << u << ':';
    for (Vertex a : anchors_[u]) out << ' ' << a;
    out << '\n';
  }
  if (!out) throw Error("failed writing candidate index");
}

CandidateIndex CandidateIndex::read(std::istream& in, std::size_t n) {
  std::vector<std::vector<Vertex>> anchors(n);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("expected 'u: anchors...'", lineno);
    std::istringstream head(line.substr(0, colon));
    std::uint64_t u = 0;
    if (!(head >> u) || u >= n) throw ParseError("bad vertex id", lineno);
    std::istringstream rest(line.substr(colon + 1));
    std::uint64_t a = 0;
    while (rest >> a) {
      if (a >= n) throw ParseError("anchor out of range", lineno);
      anchors[u].push_back(static_cast<Vertex>(a));
    }
    if (!rest.eof()) throw ParseError("bad anchor list", lineno);
  }
  return CandidateIndex(std::move(anchors), n);
}

namespace {

// Positions W_0..W_steps of one in-link walk; shorter if it gets absorbed.
std::vector<Vertex> walk_path(const Graph& g, Vertex u, std::uint32_t steps, Rng& rng) {
  std::vector<Vertex> path{u};
  for (std::uint32_t t = 0; t < steps; ++t) {
    auto next = sample_step(g, path.back(), rng);
    if (!next) break;
    path.push_back(*next);
  }
  return path;
}

}  // namespace

CandidateIndex build_candidate_index(const Graph& g, const Config& cfg, const CandidateParams& params,
                                     std::size_t threads) {
  cfg.validate();
  const std::size_t n = g.num_vertices();
  std::vector<std::vector<Vertex>> anchors(n);
  parallel_for(n, resolve_threads(threads), [&](std::size_t index) {
    const auto u = static_cast<Vertex>(index);
    Rng rng = make_rng(cfg.seed, n + index);
    std::vector<std::vector<Vertex>> probes(params.Q_walks);
    for (std::uint32_t round = 0; round < params.P_walks; ++round) {
      const auto pilot = walk_path(g, u, cfg.T, rng);
      for (auto& probe : probes) probe = walk_path(g, u, cfg.T, rng);
      for (std::size_t t = 1; t < pilot.size(); ++t) {
        const Vertex v = pilot[t];
        int hits = 0;
        for (const auto& probe : probes)
          if (t < probe.size() && probe[t] == v) ++hits;
        if (hits >= 2) anchors[u].push_back(v);
      }
    }
  });
  return CandidateIndex(std::move(anchors), n);
}

BoundsIndex build_bounds_index(const Graph& g, const Config& cfg, std::span<const double> d,
                               EstimationMode mode, std::uint64_t R_gamma, std::size_t threads) {
  cfg.validate();
  if (d.size() != g.num_vertices()) throw InvalidArgument("diagonal size does not match graph");
  BoundsIndex index;
  index.n = g.num_vertices();
  index.T = cfg.T;
  index.c = cfg.c;
  index.mode = mode;
  index.R_gamma = mode == EstimationMode::monte_carlo ? R_gamma : 0;
  index.seed = cfg.seed;
  index.gamma.assign(index.n * cfg.T, 0.0);
  parallel_for(index.n, resolve_threads(threads), [&](std::size_t u) {
    Rng rng = make_rng(cfg.seed, u);
    const auto row = build_gamma(g, cfg, d, static_cast<Vertex>(u), mode, R_gamma, rng);
    std::copy(row.begin(), row.end(), index.gamma.begin() + static_cast<std::ptrdiff_t>(u * cfg.T));
  });
  return index;
}

namespace {

constexpr char kIndexMagic[4] = {'S', 'R', 'B', 'I'};
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "index format is little-endian");
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) throw ParseError("truncated bounds index", 0);
  return value;
}

}  // namespace

void write_bounds_index(std::ostream& out, const BoundsIndex& index) {
  out.write(kIndexMagic, sizeof kIndexMagic);
  put<std::uint32_t>(out, kIndexVersion);
  put<std::uint64_t>(out, index.n);
  put<std::uint32_t>(out, index.T);
  put<double>(out, index.c);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(index.mode));
  put<std::uint64_t>(out, index.R_gamma);
  put<std::uint64_t>(out, index.seed);
  put<std::uint32_t>(out, index.walk_params.P_walks);
  put<std::uint32_t>(out, index.walk_params.Q_walks);
  for (double v : index.gamma) put<double>(out, v);
  if (!out) throw Error("failed writing bounds index");
}

BoundsIndex read_bounds_index(std::istream& in) {
  char magic[4];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kIndexMagic, sizeof magic) != 0)
    throw ParseError("not a bounds index file", 0);
  if (get<std::uint32_t>(in) != kIndexVersion) throw ParseError("unsupported bounds index version", 0);
  BoundsIndex index;
  index.n = get<std::uint64_t>(in);
  index.T = get<std::uint32_t>(in);
  index.c = get<double>(in);
  const auto mode = get<std::uint8_t>(in);
  if (mode > static_cast<std::uint8_t>(EstimationMode::oracle)) throw ParseError("bad index mode", 0);
  index.mode = static_cast<EstimationMode>(mode);
  index.R_gamma = get<std::uint64_t>(in);
  index.seed = get<std::uint64_t>(in);
  index.walk_params.P_walks = get<std::uint32_t>(in);
  index.walk_params.Q_walks = get<std::uint32_t>(in);
  index.gamma.resize(index.n * index.T);
  for (double& v : index.gamma) v = get<double>(in);
  return index;
}

namespace {

bool better(const ScoredVertex& a, const ScoredVertex& b) {
  return a.score != b.score ? a.score > b.score : a.vertex < b.vertex;
}

// Min-heap of the k best entries; front() is the current k-th best.
class TopKHeap {
 public:
  explicit TopKHeap(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  bool full() const noexcept { return heap_.size() >= k_; }
  double kth_score() const noexcept {
    return full() ? heap_.front().score : -std::numeric_limits<double>::infinity();
  }

  void offer(ScoredVertex candidate) {
    if (full() && !better(candidate, heap_.front())) return;
    heap_.push_back(candidate);
    std::push_heap(heap_.begin(), heap_.end(), better);
    if (heap_.size() > k_) {
      std::pop_heap(heap_.begin(), heap_.end(), better);
      heap_.pop_back();
    }
  }

  std::vector<ScoredVertex> sorted() const {
    auto out = heap_;
    std::sort(out.begin(), out.end(), better);
    return out;
  }

 private:
  std::size_t k_;
  std::vector<ScoredVertex> heap_;
};

// P^t e_u for t < T, reused for every deterministic pair score.
class DeterministicScorer {
 public:
  DeterministicScorer(const Graph& g, const Config& cfg, std::span<const double> d, Vertex u)
      : g_(g), cfg_(cfg), d_(d), work_(g.num_vertices()) {
    powers_.push_back(Distribution::unit(u));
    for (std::uint32_t t = 1; t < cfg.T && !powers_.back().empty(); ++t)
      powers_.push_back(work_.step(g, powers_.back()));
  }

  double score(Vertex v) {
    Distribution y = Distribution::unit(v);
    double sum = 0.0;
    double ct = 1.0;
    for (std::size_t t = 0; t < powers_.size() && !y.empty(); ++t, ct *= cfg_.c) {
      sum += ct * weighted_dot(powers_[t], y, d_);
      if (t + 1 < powers_.size()) y = work_.step(g_, y);
    }
    return sum;
  }

 private:
  const Graph& g_;
  const Config& cfg_;
  std::span<const double> d_;
  Propagator work_;
  std::vector<Distribution> powers_;
};

}  // namespace

TopKResult topk_query(const Graph& g, const Config& cfg, std::span<const double> d, const BoundsIndex* index,
                      Vertex u, const TopKOptions& options, Rng& rng) {
  cfg.validate();
  if (u >= g.num_vertices()) throw InvalidArgument("query vertex out of range");
  if (options.k < 1) throw InvalidArgument("k must be at least 1");
  if (d.size() != g.num_vertices()) throw InvalidArgument("diagonal size does not match graph");
  if (index && index->has_gamma() && (index->n != g.num_vertices() || index->T != cfg.T))
    throw InvalidArgument("bounds index was built for a different graph or T");

  const std::uint32_t d_max = options.d_max ? options.d_max : cfg.T;
  const auto order = bfs_distances(g, u, std::max(d_max, cfg.T - 1));

  std::optional<AlphaBeta> l1;
  if (options.use_l1)
    l1 = build_alpha_beta(g, cfg, d, u, d_max, distance_map(order), options.bound_mode, options.R_bounds, rng);
  const bool l2 = options.use_l2 && index && index->has_gamma();

  std::vector<char> is_candidate;
  if (index && index->candidates) {
    is_candidate.assign(g.num_vertices(), 0);
    for (Vertex v : index->candidates->candidates(u)) is_candidate[v] = 1;
  }

  std::optional<DeterministicScorer> exact;
  std::optional<WalkBatch> lo_batch, hi_batch;
  if (options.scoring == Scoring::deterministic) {
    exact.emplace(g, cfg, d, u);
  } else {
    lo_batch = WalkBatch::simulate(g, u, options.R_lo, cfg.T, rng);
  }

  TopKHeap heap(options.k);
  TopKResult result;
  auto& stats = result.stats;
  std::size_t pos = 1;  // order[0] is u itself
  while (pos < order.size() && order[pos].distance <= d_max) {
    const std::uint32_t shell = order[pos].distance;
    std::size_t end = pos;
    while (end < order.size() && order[end].distance == shell) ++end;

    bool skip = false;
    if (l1) {
      if (heap.full() && l1->beta_tail(shell) <= heap.kth_score()) break;
      const double beta = l1->beta(shell);
      skip = beta <= options.theta_floor || (heap.full() && beta <= heap.kth_score());
    }
    if (!skip && options.use_distance_bound) {
      const double cap = std::pow(cfg.c, (shell + 1) / 2);
      skip = cap < options.theta_floor || (heap.full() && cap <= heap.kth_score());
    }
    if (skip) {
      ++stats.pruned_shells;
      pos = end;
      continue;
    }

    for (; pos < end; ++pos) {
      const Vertex v = order[pos].vertex;
      if (!is_candidate.empty() && !is_candidate[v]) continue;
      ++stats.scanned;
      if (l2 && heap.full() && l2_bound(index->gamma_row(u), index->gamma_row(v), cfg.c) <= heap.kth_score()) {
        ++stats.pruned_l2;
        continue;
      }
      double score = 0.0;
      ++stats.scored;
      if (exact) {
        score = exact->score(v);
      } else {
        const auto vb = WalkBatch::simulate(g, v, options.R_lo, cfg.T, rng);
        score = batch_pair_score(*lo_batch, vb, cfg.c, d);
        const double kth = heap.full() ? heap.kth_score() : 0.0;
        if (options.R_hi > options.R_lo && score > options.rescore_fraction * kth) {
          if (!hi_batch) hi_batch = WalkBatch::simulate(g, u, options.R_hi, cfg.T, rng);
          const auto vb_hi = WalkBatch::simulate(g, v, options.R_hi, cfg.T, rng);
          score = batch_pair_score(*hi_batch, vb_hi, cfg.c, d);
          ++stats.rescored;
        }
      }
      if (score <= 0.0 || score < options.theta_floor) continue;
      heap.offer({v, score});
    }
  }
  result.ranking = heap.sorted();
  return result;
}

}  // namespace simrank
