#include "simrank/walks.hpp"

#include <algorithm>

namespace simrank {

namespace {

std::vector<Count> histogram(std::vector<Vertex> positions) {
  std::sort(positions.begin(), positions.end());
  std::vector<Count> out;
  for (Vertex v : positions) {
    if (!out.empty() && out.back().vertex == v)
      ++out.back().count;
    else
      out.push_back({v, 1});
  }
  return out;
}

}  // namespace

WalkBatch WalkBatch::simulate(const Graph& g, Vertex source, std::uint64_t R, std::uint32_t steps,
                              Rng& rng) {
  WalkBatch batch;
  batch.source_ = source;
  batch.R_ = R;
  batch.histograms_.reserve(steps);

  std::vector<Vertex> live(R, source);
  for (std::uint32_t t = 0; t < steps; ++t) {
    if (t > 0) {
      std::size_t kept = 0;
      for (Vertex v : live)
        if (auto next = sample_step(g, v, rng)) live[kept++] = *next;
      live.resize(kept);
    }
    batch.histograms_.push_back(histogram(live));
  }
  return batch;
}

}  // namespace simrank
