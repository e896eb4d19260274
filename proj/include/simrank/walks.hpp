#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "simrank/graph.hpp"

namespace simrank {

struct Count {
  Vertex vertex;
  std::uint64_t count;
};

/// R independent in-link walks from one source, recorded as a per-step
/// histogram of live positions (absorbed walks drop out).
class WalkBatch {
 public:
  // Simulates `steps` histograms: step 0 is {source: R}, step t holds positions after t moves.
  static WalkBatch simulate(const Graph& g, Vertex source, std::uint64_t R, std::uint32_t steps, Rng& rng);

  Vertex source() const noexcept { return source_; }
  std::uint64_t walks() const noexcept { return R_; }
  std::size_t steps() const noexcept { return histograms_.size(); }
  // Sorted by vertex.
  std::span<const Count> at(std::size_t t) const { return histograms_[t]; }

 private:
  Vertex source_ = 0;
  std::uint64_t R_ = 0;
  std::vector<std::vector<Count>> histograms_;
};

}  // namespace simrank
