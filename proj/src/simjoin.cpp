#include "simrank/simjoin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "json.hpp"

#include "simrank/errors.hpp"
#include "simrank/parallel.hpp"

namespace simrank {

ResidualStore::ResidualStore(double epsilon, bool max_residual_first)
    : epsilon_(epsilon), max_first_(max_residual_first) {
  if (!(epsilon > 0.0)) throw InvalidArgument("filter epsilon must be positive");
}

double ResidualStore::residual(Vertex i, Vertex j) const {
  auto it = slots_.find(key(i, j));
  return it == slots_.end() ? 0.0 : it->second.residual;
}

double ResidualStore::solution(Vertex i, Vertex j) const {
  auto it = slots_.find(key(i, j));
  return it == slots_.end() ? 0.0 : it->second.solution;
}

void ResidualStore::enqueue(std::uint64_t k, Slot& slot) {
  if (std::abs(slot.residual) < epsilon_) return;
  if (max_first_) {
    // re-pushed on every increase; pop() discards stale sizes
    by_size_.emplace(std::abs(slot.residual), k);
    slot.queued = true;
    return;
  }
  if (slot.queued) return;
  fifo_.push_back(k);
  slot.queued = true;
}

void ResidualStore::add(Vertex i, Vertex j, double a) {
  const auto k = key(i, j);
  Slot& slot = slots_[k];
  slot.residual += a;
  enqueue(k, slot);
}

double ResidualStore::settle(Vertex i, Vertex j) {
  Slot& slot = slots_.at(key(i, j));
  const double r = slot.residual;
  slot.solution += r;
  slot.residual = 0.0;
  return r;
}

std::optional<VertexPair> ResidualStore::pop() {
  if (max_first_) {
    while (!by_size_.empty()) {
      const auto [size, k] = by_size_.top();
      by_size_.pop();
      Slot& slot = slots_.at(k);
      if (std::abs(slot.residual) != size || std::abs(slot.residual) < epsilon_) continue;
      slot.queued = false;
      return unkey(k);
    }
    return std::nullopt;
  }
  while (!fifo_.empty()) {
    const auto k = fifo_.front();
    fifo_.pop_front();
    Slot& slot = slots_.at(k);
    slot.queued = false;
    if (std::abs(slot.residual) >= epsilon_) return unkey(k);
  }
  return std::nullopt;
}

bool stochastic_threshold(ResidualStore& store, Vertex i, Vertex j, double a, double beta_skip, Rng& rng) {
  if (!store.allocated(i, j)) {
    const double prob = std::min(1.0, beta_skip * a);
    if (prob < 1.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= prob) return false;
  }
  store.add(i, j, a);
  return true;
}

FilterResult gauss_southwell_filter(const Graph& g, const Config& cfg, std::span<const double> d,
                                    const FilterOptions& options, Rng& rng) {
  cfg.validate();
  if (d.size() != g.num_vertices()) throw InvalidArgument("diagonal size does not match graph");
  if (!(options.theta > 0.0)) throw InvalidArgument("theta must be positive");
  if (!(options.gamma_acc >= 0.0 && options.gamma_acc < 1.0)) throw InvalidArgument("gamma must lie in [0, 1)");

  const double eps = (1.0 - cfg.c) * (1.0 - options.gamma_acc) * options.theta;
  FilterResult result{ResidualStore(eps, options.max_residual_first), {}};
  auto& store = result.store;
  auto& stats = result.stats;
  const bool thresholding = options.beta_skip > 0.0;

  auto push = [&](Vertex a, Vertex b, double mass) {
    ++stats.pushes;
    stats.total_pushed += mass;
    if (!thresholding) {
      store.add(a, b, mass);
    } else if (!stochastic_threshold(store, a, b, mass, options.beta_skip, rng)) {
      ++stats.dropped;
      stats.dropped_mass += mass;
    }
  };

  // R~ starts at D; the initial diagonal is exact, not thresholded
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    if (d[v] != 0.0) store.add(v, v, d[v]);

  while (auto next = store.pop()) {
    const auto [i, j] = *next;
    const double r = store.settle(i, j);
    ++stats.pops;
    const double cr = cfg.c * r;
    auto out_i = g.out_neighbors(i);
    if (i == j) {
      for (std::size_t x = 0; x < out_i.size(); ++x)
        for (std::size_t y = x; y < out_i.size(); ++y) {
          const Vertex a = out_i[x], b = out_i[y];
          push(a, b, cr / (static_cast<double>(g.in_degree(a)) * g.in_degree(b)));
        }
    } else {
      // the stored {i,j} stands for both (i,j) and (j,i)
      for (Vertex a : g.out_neighbors(i))
        for (Vertex b : g.out_neighbors(j)) {
          const double w = cr / (static_cast<double>(g.in_degree(a)) * g.in_degree(b));
          push(a, b, a == b ? 2.0 * w : w);
        }
    }
    stats.entries = std::max(stats.entries, store.entries());
    if (store.entries() > options.memory_cap) {
      stats.cap_exceeded = true;
      break;
    }
  }
  stats.entries = std::max(stats.entries, store.entries());
  return result;
}

std::vector<VertexPair> JoinResult::pairs() const {
  std::vector<VertexPair> out = J_L;
  out.insert(out.end(), verified.begin(), verified.end());
  std::sort(out.begin(), out.end());
  return out;
}

JoinResult join(const Graph& g, const Config& cfg, std::span<const double> d, const JoinOptions& options) {
  if (!(options.p > 0.0 && options.p < 1.0)) throw InvalidArgument("p must lie in (0, 1)");
  if (!(options.filter.theta < 1.0)) throw InvalidArgument("theta must lie in (0, 1)");
  Rng filter_rng = make_rng(cfg.seed, std::numeric_limits<std::uint64_t>::max());
  auto filtered = gauss_southwell_filter(g, cfg, d, options.filter, filter_rng);
  JoinResult result;
  result.stats.filter = filtered.stats;
  if (filtered.stats.cap_exceeded)
    throw CapExceeded("residual store exceeded " + std::to_string(options.filter.memory_cap) +
                      " entries after " + std::to_string(filtered.stats.pops) + " pops");

  const double theta = options.filter.theta;
  const double high = options.filter.gamma_acc * theta;
  std::vector<VertexPair> candidates;
  for (const auto& [k, slot] : filtered.store.slots()) {
    const auto pair = ResidualStore::unkey(k);
    if (pair.first == pair.second || slot.solution <= 0.0) continue;
    if (slot.solution >= theta) {
      result.J_L.push_back(pair);
      result.J_H.push_back(pair);
    } else if (slot.solution >= high) {
      result.J_H.push_back(pair);
      candidates.push_back(pair);
    }
  }
  std::sort(result.J_L.begin(), result.J_L.end());
  std::sort(result.J_H.begin(), result.J_H.end());
  std::sort(candidates.begin(), candidates.end());
  result.stats.candidates = candidates.size();

  std::vector<Verdict> verdicts(candidates.size());
  parallel_for(candidates.size(), resolve_threads(options.threads), [&](std::size_t k) {
    Rng rng = make_rng(cfg.seed, k);
    verdicts[k] = verify_pair(g, cfg, candidates[k].first, candidates[k].second, theta, options.p,
                              options.R_max, rng);
  });
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    result.stats.samples += verdicts[k].samples;
    if (verdicts[k].undecided) ++result.stats.undecided;
    if (verdicts[k].decision == Decision::similar) result.verified.push_back(candidates[k]);
  }
  return result;
}

void write_join_tsv(std::ostream& out, const Graph& g, const JoinResult& result) {
  struct Row {
    std::uint64_t i, j;
    const char* source;
  };
  std::vector<Row> rows;
  auto add = [&](const std::vector<VertexPair>& pairs, const char* source) {
    for (const auto& [a, b] : pairs) {
      std::uint64_t x = g.original_id(a), y = g.original_id(b);
      if (x > y) std::swap(x, y);
      rows.push_back({x, y, source});
    }
  };
  add(result.J_L, "filter");
  add(result.verified, "verified");
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (const auto& row : rows) out << row.i << '\t' << row.j << '\t' << row.source << '\n';
  if (!out) throw Error("failed writing join output");
}

std::string join_stats_json(const JoinStats& stats) {
  nlohmann::ordered_json j;
  j["pops"] = stats.filter.pops;
  j["pushes"] = stats.filter.pushes;
  j["dropped"] = stats.filter.dropped;
  j["dropped_mass"] = stats.filter.dropped_mass;
  j["memory_entries"] = stats.filter.entries;
  j["candidates"] = stats.candidates;
  j["undecided"] = stats.undecided;
  j["samples"] = stats.samples;
  return j.dump();
}

}  // namespace simrank
