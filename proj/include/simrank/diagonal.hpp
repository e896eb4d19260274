#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "simrank/graph.hpp"

namespace simrank {

enum class EstimationMode { exact, monte_carlo, oracle };

std::string_view to_string(EstimationMode mode);
EstimationMode parse_estimation_mode(std::string_view text);

// Starting point for the Gauss-Seidel sweeps.
enum class InitialGuess {
  in_degree,     // D_kk = 1 - c * sum_i P_ik^2 = 1 - c / |I(k)|
  identity,      // D = I
  one_minus_c,   // D = (1 - c) I
};

struct DiagonalParams {
  double c = 0.6;
  std::uint32_t T = 11;
  std::uint32_t L = 0;
  std::uint64_t R = 0;
  std::uint64_t seed = 0;
  EstimationMode mode = EstimationMode::exact;
};

/// Diagonal correction D with S = c P^T S P + D, stored as its diagonal.
struct DiagonalCorrection {
  std::vector<double> values;
  DiagonalParams params;
  std::size_t clamped = 0;          // updates pulled back into the admissible window
  std::size_t skipped_updates = 0;  // updates skipped because the pivot estimate was <= 0

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
};

struct EstimationConfig {
  std::uint32_t L = 3;
  std::uint64_t R = 100;
  EstimationMode mode = EstimationMode::monte_carlo;
  InitialGuess initial = InitialGuess::in_degree;
  // Values are kept inside [1 - c - slack, 1 + slack]. Negative means the mode default
  // (0.05 for Monte-Carlo, 1e-9 for exact).
  double slack = -1.0;
  std::size_t max_support = Propagator::kDefaultMaxSupport;

  double effective_slack() const noexcept;
  void validate() const;
};

DiagonalCorrection initial_guess(const Graph& g, const Config& cfg,
                                 InitialGuess kind = InitialGuess::in_degree);

struct InnerEstimate {
  double pivot;     // ~ S^L(E^(k,k))_kk, the coefficient of D_kk
  double diagonal;  // ~ S^L(D)_kk
};

// Truncated sums over t < T of c^t (P^t e_k)^T E (P^t e_k) for E = E^(k,k) and E = D.
// Exact mode propagates P^t e_k; Monte-Carlo mode uses R walks drawn from rng.
InnerEstimate inner_estimates(const Graph& g, const Config& cfg, std::span<const double> d, Vertex k,
                              const EstimationConfig& est, Rng& rng);
InnerEstimate inner_estimates(const Graph& g, const Config& cfg, std::span<const double> d, Vertex k,
                              const EstimationConfig& est, Rng& rng, Propagator& work);

/// Gauss-Seidel sweeps enforcing S^L(D)_kk = 1 for every k, visiting k in
/// ascending order. Monte-Carlo mode draws fresh walks for every (sweep, k)
/// from make_rng(cfg.seed, sweep * n + k).
DiagonalCorrection estimate_diagonal(const Graph& g, const Config& cfg, const EstimationConfig& est);

// max_k |S^L(D)_kk - 1| with S^L truncated at cfg.T terms, computed exactly.
double residual_norm(const Graph& g, const Config& cfg, std::span<const double> d);

// Text format: "simrank-diag v1 n=.. c=.. T=.. L=.. R=.. mode=.. seed=.." then n values.
void write_diagonal(std::ostream& out, const DiagonalCorrection& d);
DiagonalCorrection read_diagonal(std::istream& in);
void save_diagonal(const std::filesystem::path& path, const DiagonalCorrection& d);
DiagonalCorrection load_diagonal(const std::filesystem::path& path);

}  // namespace simrank
