#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fq {

class Spectrum;

// N(0, I_d) measured in the covariance norm |z|^2 = sum_k lambda_k z_k^2,
// equivalently N(0, diag(lambda)) in Euclidean coordinates.
struct WeightedNormal {
  std::vector<double> lambdas;

  std::size_t dim() const { return lambdas.size(); }
  void validate() const;
  // Coordinates offset+1 .. offset+d of a spectrum.
  static WeightedNormal from_spectrum(const Spectrum& spec, std::size_t offset, std::size_t d);
  static WeightedNormal standard(std::size_t d);
};

struct CodebookMeta {
  std::string design = "none";
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  // Stationarity residual (gradient norm) when known, negative otherwise.
  double residual = -1.0;
};

// n points of R^d stored row-major.
struct Codebook {
  std::size_t dim = 1;
  std::vector<double> coords;
  CodebookMeta meta;

  Codebook() = default;
  Codebook(std::size_t d, std::vector<double> c) : dim(d), coords(std::move(c)) {}

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  std::span<double> point(std::size_t i) { return {coords.data() + i * dim, dim}; }
  // Throws DomainError unless n >= 1 and the points are pairwise distinct.
  void validate() const;
};

enum class DistortionMethod { ClosedForm, Quadrature, MonteCarlo };

struct DistortionReport {
  double value = 0.0;
  DistortionMethod method = DistortionMethod::ClosedForm;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::optional<double> std_error;  // present iff method == MonteCarlo
  std::optional<double> grad_norm;
};

struct EvaluationMethod {
  DistortionMethod kind = DistortionMethod::MonteCarlo;
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;

  static EvaluationMethod quadrature() { return {DistortionMethod::Quadrature, 0, 0}; }
  static EvaluationMethod monte_carlo(std::size_t samples, std::uint64_t seed) {
    return {DistortionMethod::MonteCarlo, samples, seed};
  }
};

// argmin_i sum_k lambda_k (x_k - c_ik)^2, lowest index on ties.
std::size_t nearest_index(std::span<const double> x, const Codebook& cb, const WeightedNormal& w);

// Competitive learning from n points drawn from the splitting density.
Codebook clvq_run(const WeightedNormal& w, std::size_t n, std::size_t steps, double c,
                  std::uint64_t seed);
// Competitive learning from a given start: for k = 0..steps-1 the winner of
// Z_{k+1} moves to x + (c/(k+1)) (Z_{k+1} - x).
Codebook clvq_run(const Codebook& init, const WeightedNormal& w, std::size_t steps, double c,
                  std::uint64_t seed);

// Randomized Lloyd I: each round replaces every codeword by the Monte Carlo
// mean of its cell. An empty cell is re-seeded at the round's sample farthest
// from its own nearest codeword. meta.residual holds the gradient norm
// measured during the last round.
Codebook lloyd_run(const Codebook& cb, const WeightedNormal& w, std::size_t rounds,
                   std::size_t samples_per_round, std::uint64_t seed);

// MonteCarlo: any d. Quadrature: exact Voronoi integration, d <= 2 only.
DistortionReport distortion_nd(const Codebook& cb, const WeightedNormal& w,
                               const EvaluationMethod& method);

struct GradientEstimate {
  // g_i = 2 E[(x_i - Z) 1_{C_i}(Z)], row-major like the codebook. The
  // derivative of the distortion along v is sum_i <g_i, v_i>_lambda.
  std::vector<double> grad;
  std::vector<double> std_error;
  double norm = 0.0;  // sqrt(sum_i <g_i, g_i>_lambda)
};

// Uses the same samples as distortion_nd(MonteCarlo) with the same seed.
GradientEstimate gradient_nd(const Codebook& cb, const WeightedNormal& w, std::size_t samples,
                             std::uint64_t seed);

// cb plus nu points drawn from N(0, ((d+2)/d) I_d).
Codebook splitting_init(const Codebook& cb, std::size_t nu, std::size_t d, std::uint64_t seed);

struct PipelineParams {
  std::size_t clvq_steps = 1'000'000;
  double clvq_c = 0.5;
  std::size_t lloyd_rounds = 20;
  std::size_t lloyd_samples = 1'000'000;
};

// splitting_init from the origin -> CLVQ -> Lloyd polish.
Codebook optimize_codebook(const WeightedNormal& w, std::size_t n, const PipelineParams& params,
                           std::uint64_t seed);

// Points mapped between standardized (z) and Euclidean (zeta = sqrt(lambda) z)
// coordinates.
Codebook to_euclidean(const Codebook& cb, const WeightedNormal& w);
Codebook to_standardized(const Codebook& cb, const WeightedNormal& w);

}  // namespace fq
