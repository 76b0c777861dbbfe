#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fq/designs.hpp"
#include "fq/quantnd.hpp"
#include "fq/spectra.hpp"

namespace fq {

// Path functions used to turn coordinates into paths.
enum class PathBasis {
  // sqrt(2/T) sin(t / sqrt(lambda_j)), Brownian eigenfunctions.
  BrownianKL,
  // R_1 u_j(t) = sqrt(2 lambda_j / T) (1 - cos(t / sqrt(lambda_j))), the
  // integrated eigenfunctions; paths of int_0^t W.
  IntegratedKL,
};

// Codebook in standardized Brownian coordinates z_j; the path of a codeword
// is sum_j sqrt(lambda_j) z_j f_j with f_j from `basis`.
struct PathQuantizer {
  Codebook codebook;
  double horizon = 1.0;
  PathBasis basis = PathBasis::BrownianKL;

  double coefficient_scale(std::size_t j) const;  // sqrt(lambda_j), j >= 1
};

// Midpoints t_i = (i + 1/2) T / N.
std::vector<double> midpoint_grid(double horizon, std::size_t points);

// sum_j a_j f_j(t) over the grid, with a_j = sqrt(lambda_j) z_j already
// applied by the caller. Throws DomainError for t outside [0, T].
std::vector<double> reconstruct_path(std::span<const double> coeffs, double horizon, PathBasis basis,
                                     std::span<const double> timegrid);

struct PathSimulation {
  std::size_t modes = 1000;
  std::size_t grid = 10'000;
};

// Monte Carlo E min_g ||X - g||^2_{L^2} over Brownian paths simulated with
// `modes` KL terms on a midpoint grid; the L^2 norm is the midpoint rule.
DistortionReport path_distortion(const PathQuantizer& pq, std::size_t mc_samples, std::uint64_t seed,
                                 const PathSimulation& sim = {});

struct CompanionWeights {
  std::vector<double> probs;
  std::vector<double> std_errors;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

// Voronoi cell frequencies of standardized normal coordinates.
CompanionWeights estimate_weights(const PathQuantizer& pq, std::size_t mc_samples, std::uint64_t seed);

struct ProductWeights {
  std::vector<CompanionWeights> blocks;
  // Products of block weights in the flat order of compose_product.
  std::vector<double> joint;
};

// Per-block cell frequencies (same samples for every block) and their
// products.
ProductWeights estimate_product_weights(const ProductQuantizer& pq, const Spectrum& spec,
                                        std::size_t mc_samples, std::uint64_t seed);

struct SampledPath {
  std::span<const double> grid;
  std::span<const double> values;
  double horizon = 1.0;
  double terminal = 0.0;  // exact value at t = T
};

using PathFunctional = std::function<double(const SampledPath&)>;

// Built-ins: "one", "integral", "sup", "l2norm2", "terminal".
PathFunctional builtin_functional(const std::string& name);

// sum_g w_g Psi(g) over the codeword paths.
double cubature(const PathQuantizer& pq, std::span<const double> weights, const PathFunctional& psi,
                std::size_t grid = 10'000);

struct IntegratedDesign {
  Allocation allocation;
  Codebook codebook;  // standardized coordinates, basis IntegratedKL
  double distortion = 0.0;
};

// Scalar product quantizer of int_0^t W in the R_1 u_j basis: allocation on
// nu_j = T^4 mu_j^2 (3 + 4 sqrt(mu_j)), distortion with the exact
// coefficients T^4 mu_j^2 (3 - 4 (-1)^{j-1} sqrt(mu_j)).
IntegratedDesign rl32_design(std::size_t n, double horizon, std::size_t m_max = 12);

// mu_j = (pi (j - 1/2))^{-2}.
double integrated_mu(std::size_t j);
double integrated_weight(std::size_t j, double horizon);      // nu_j
double integrated_coefficient(std::size_t j, double horizon);  // signed form

}  // namespace fq
