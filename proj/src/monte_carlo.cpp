#include "simrank/monte_carlo.hpp"

#include <cmath>

#include "simrank/errors.hpp"

namespace simrank {

double batch_pair_score(const WalkBatch& a, const WalkBatch& b, double c, std::span<const double> d) {
  const double R2 = static_cast<double>(a.walks()) * static_cast<double>(b.walks());
  const std::size_t steps = std::min(a.steps(), b.steps());
  double sigma = 0.0;
  double ct = 1.0;
  for (std::size_t t = 0; t < steps; ++t, ct *= c) {
    auto xs = a.at(t);
    auto ys = b.at(t);
    std::size_t p = 0, q = 0;
    double term = 0.0;
    while (p < xs.size() && q < ys.size()) {
      if (xs[p].vertex < ys[q].vertex) {
        ++p;
      } else if (ys[q].vertex < xs[p].vertex) {
        ++q;
      } else {
        term += d[xs[p].vertex] * (static_cast<double>(xs[p].count) * static_cast<double>(ys[q].count));
        ++p;
        ++q;
      }
    }
    sigma += ct * term / R2;
  }
  return sigma;
}

double mc_single_pair(const Graph& g, const Config& cfg, std::span<const double> d, Vertex i, Vertex j,
                      std::uint64_t R, Rng& rng) {
  cfg.validate();
  if (i >= g.num_vertices() || j >= g.num_vertices()) throw InvalidArgument("vertex out of range");
  if (R < 1) throw InvalidArgument("R must be at least 1");
  if (i == j) return 1.0;
  const auto a = WalkBatch::simulate(g, i, R, cfg.T, rng);
  const auto b = WalkBatch::simulate(g, j, R, cfg.T, rng);
  return batch_pair_score(a, b, cfg.c, d);
}

double meeting_time_sample(const Graph& g, const Config& cfg, Vertex i, Vertex j, Rng& rng) {
  if (i == j) return 1.0;
  double ct = 1.0;
  for (std::uint32_t t = 1; t <= cfg.T; ++t) {
    auto a = sample_step(g, i, rng);
    auto b = sample_step(g, j, rng);
    if (!a || !b) return 0.0;
    ct *= cfg.c;
    if (*a == *b) return ct;
    i = *a;
    j = *b;
  }
  return 0.0;
}

double stopping_constant(double c, double p) {
  const double ratio = c / (1.0 - c);
  return std::log(1.0 / p) / 2.0 * ratio * ratio;
}

Verdict verify_pair(const Graph& g, const Config& cfg, Vertex i, Vertex j, double theta, double p,
                    std::uint64_t R_max, Rng& rng) {
  cfg.validate();
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidArgument("theta must lie in (0, 1)");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("p must lie in (0, 1)");
  if (R_max < 1) throw InvalidArgument("R_max must be at least 1");

  const double bound = stopping_constant(cfg.c, p);
  Verdict v;
  double sum = 0.0;
  bool stopped = false;
  while (v.samples < R_max) {
    sum += meeting_time_sample(g, cfg, i, j, rng);
    ++v.samples;
    const double mean = sum / static_cast<double>(v.samples);
    const double gap = mean - theta;
    if (static_cast<double>(v.samples) * gap * gap >= bound) {
      stopped = true;
      break;
    }
  }
  v.estimate = sum / static_cast<double>(v.samples);
  v.decision = v.estimate >= theta ? Decision::similar : Decision::dissimilar;
  v.undecided = !stopped;
  return v;
}

}  // namespace simrank
