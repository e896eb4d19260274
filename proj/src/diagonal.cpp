#include "simrank/diagonal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "simrank/errors.hpp"
#include "simrank/walks.hpp"

namespace simrank {

std::string_view to_string(EstimationMode mode) {
  switch (mode) {
    case EstimationMode::exact: return "exact";
    case EstimationMode::monte_carlo: return "mc";
    case EstimationMode::oracle: return "oracle";
  }
  return "unknown";
}

EstimationMode parse_estimation_mode(std::string_view text) {
  if (text == "exact") return EstimationMode::exact;
  if (text == "mc" || text == "monte-carlo") return EstimationMode::monte_carlo;
  if (text == "oracle") return EstimationMode::oracle;
  throw InvalidArgument("unknown estimation mode '" + std::string(text) + "'");
}

double EstimationConfig::effective_slack() const noexcept {
  if (slack >= 0.0) return slack;
  return mode == EstimationMode::monte_carlo ? 0.05 : 1e-9;
}

void EstimationConfig::validate() const {
  if (L < 1) throw InvalidArgument("number of sweeps L must be at least 1");
  if (mode == EstimationMode::monte_carlo && R < 1)
    throw InvalidArgument("Monte-Carlo estimation needs R >= 1 walks");
  if (mode == EstimationMode::oracle)
    throw InvalidArgument("oracle mode is produced by exact_diagonal, not by estimation");
}

DiagonalCorrection initial_guess(const Graph& g, const Config& cfg, InitialGuess kind) {
  cfg.validate();
  DiagonalCorrection d;
  d.params.c = cfg.c;
  d.params.T = cfg.T;
  d.params.seed = cfg.seed;
  d.values.resize(g.num_vertices());
  for (Vertex k = 0; k < g.num_vertices(); ++k) {
    switch (kind) {
      case InitialGuess::in_degree: {
        // Column k of P holds |I(k)| entries equal to 1/|I(k)|.
        const auto deg = g.in_degree(k);
        d.values[k] = deg == 0 ? 1.0 : 1.0 - cfg.c / static_cast<double>(deg);
        break;
      }
      case InitialGuess::identity: d.values[k] = 1.0; break;
      case InitialGuess::one_minus_c: d.values[k] = 1.0 - cfg.c; break;
    }
  }
  return d;
}

InnerEstimate inner_estimates(const Graph& g, const Config& cfg, std::span<const double> d, Vertex k,
                              const EstimationConfig& est, Rng& rng, Propagator& work) {
  InnerEstimate out{0.0, 0.0};
  double ct = 1.0;
  if (est.mode == EstimationMode::monte_carlo) {
    const auto batch = WalkBatch::simulate(g, k, est.R, cfg.T, rng);
    const double R = static_cast<double>(est.R);
    for (std::uint32_t t = 0; t < cfg.T; ++t, ct *= cfg.c) {
      for (const auto& [w, count] : batch.at(t)) {
        const double p = static_cast<double>(count) / R;
        if (w == k) out.pivot += ct * p * p;
        out.diagonal += ct * p * p * d[w];
      }
    }
    return out;
  }

  Distribution x = Distribution::unit(k);
  for (std::uint32_t t = 0; t < cfg.T; ++t, ct *= cfg.c) {
    if (x.empty()) break;
    for (const auto& [w, p] : x.entries()) {
      if (w == k) out.pivot += ct * p * p;
      out.diagonal += ct * p * p * d[w];
    }
    if (t + 1 < cfg.T) x = work.step(g, x);
  }
  return out;
}

InnerEstimate inner_estimates(const Graph& g, const Config& cfg, std::span<const double> d, Vertex k,
                              const EstimationConfig& est, Rng& rng) {
  Propagator work(g.num_vertices(), est.max_support);
  return inner_estimates(g, cfg, d, k, est, rng, work);
}

DiagonalCorrection estimate_diagonal(const Graph& g, const Config& cfg, const EstimationConfig& est) {
  cfg.validate();
  est.validate();
  DiagonalCorrection d = initial_guess(g, cfg, est.initial);
  d.params.L = est.L;
  d.params.R = est.mode == EstimationMode::monte_carlo ? est.R : 0;
  d.params.mode = est.mode;

  const std::size_t n = g.num_vertices();
  const double lo = 1.0 - cfg.c - est.effective_slack();
  const double hi = 1.0 + est.effective_slack();
  Propagator work(n, est.max_support);
  Rng unused;
  for (std::uint32_t sweep = 0; sweep < est.L; ++sweep) {
    for (Vertex k = 0; k < n; ++k) {
      InnerEstimate e;
      if (est.mode == EstimationMode::monte_carlo) {
        Rng rng = make_rng(cfg.seed, std::uint64_t{sweep} * n + k);
        e = inner_estimates(g, cfg, d.values, k, est, rng, work);
      } else {
        e = inner_estimates(g, cfg, d.values, k, est, unused, work);
      }
      if (!(e.pivot > 0.0)) {
        ++d.skipped_updates;
        continue;
      }
      double updated = d.values[k] + (1.0 - e.diagonal) / e.pivot;
      if (updated < lo || updated > hi) {
        updated = std::clamp(updated, lo, hi);
        ++d.clamped;
      }
      d.values[k] = updated;
    }
  }
  return d;
}

double residual_norm(const Graph& g, const Config& cfg, std::span<const double> d) {
  cfg.validate();
  EstimationConfig exact;
  exact.mode = EstimationMode::exact;
  Propagator work(g.num_vertices());
  Rng unused;
  double worst = 0.0;
  for (Vertex k = 0; k < g.num_vertices(); ++k) {
    const auto e = inner_estimates(g, cfg, d, k, exact, unused, work);
    worst = std::max(worst, std::abs(e.diagonal - 1.0));
  }
  return worst;
}

namespace {

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <typename T>
T parse_field(const std::string& token, std::string_view key) {
  const std::string prefix = std::string(key) + "=";
  if (token.rfind(prefix, 0) != 0) throw ParseError("expected field '" + prefix + "' in header", 1);
  const char* first = token.data() + prefix.size();
  const char* last = token.data() + token.size();
  T value{};
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw ParseError("bad value in header field '" + token + "'", 1);
  return value;
}

}  // namespace

void write_diagonal(std::ostream& out, const DiagonalCorrection& d) {
  const auto& p = d.params;
  out << "simrank-diag v1 n=" << d.values.size() << " c=" << shortest(p.c) << " T=" << p.T
      << " L=" << p.L << " R=" << p.R << " mode=" << to_string(p.mode) << " seed=" << p.seed << '\n';
  char buf[64];
  for (double v : d.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
  if (!out) throw Error("failed writing diagonal correction");
}

DiagonalCorrection read_diagonal(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("missing header", 1);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::istringstream hs(header);
  std::string magic, version, tn, tc, tT, tL, tR, tmode, tseed, extra;
  hs >> magic >> version >> tn >> tc >> tT >> tL >> tR >> tmode >> tseed;
  if (magic != "simrank-diag" || version != "v1") throw ParseError("not a simrank-diag v1 file", 1);
  if (hs >> extra) throw ParseError("trailing header fields", 1);

  DiagonalCorrection d;
  const auto n = parse_field<std::size_t>(tn, "n");
  d.params.c = parse_field<double>(tc, "c");
  d.params.T = parse_field<std::uint32_t>(tT, "T");
  d.params.L = parse_field<std::uint32_t>(tL, "L");
  d.params.R = parse_field<std::uint64_t>(tR, "R");
  if (tmode.rfind("mode=", 0) != 0) throw ParseError("expected field 'mode=' in header", 1);
  try {
    d.params.mode = parse_estimation_mode(std::string_view(tmode).substr(5));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 1);
  }
  d.params.seed = parse_field<std::uint64_t>(tseed, "seed");

  d.values.reserve(n);
  std::string line;
  std::size_t lineno = 1;
  while (d.values.size() < n && std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size())
      throw ParseError("bad diagonal value '" + line + "'", lineno);
    d.values.push_back(v);
  }
  if (d.values.size() != n)
    throw ParseError("expected " + std::to_string(n) + " values, found " + std::to_string(d.values.size()),
                     lineno);
  return d;
}

void save_diagonal(const std::filesystem::path& path, const DiagonalCorrection& d) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_diagonal(out, d);
}

DiagonalCorrection load_diagonal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open diagonal file " + path.string());
  return read_diagonal(in);
}

}  // namespace simrank
