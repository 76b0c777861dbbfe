#include "fq/asympt.hpp"

#include <algorithm>
#include <cmath>

#include "fq/error.hpp"
#include "fq/quant1d.hpp"
#include "fq/voronoi2d.hpp"

namespace fq {

namespace {

void check_index(double b) {
  if (!(b > 1.0)) throw DomainError("regular variation index must exceed 1");
}

}  // namespace

double rate_constant(double b) {
  check_index(b);
  return std::pow(b / 2.0, b - 1.0) * b / (b - 1.0);
}

double asymptotic_rate(double n, const RegularVariation& rv) {
  check_index(rv.b);
  if (!(n > 1.0)) throw DomainError("rate needs n > 1");
  if (!(rv.c > 0.0)) throw DomainError("rate needs c > 0");
  return rate_constant(rv.b) * rv.c * std::pow(std::log(n), 1.0 - rv.b);
}

BlockRule allocation_rule(std::size_t n, std::size_t l, const Spectrum& spec) {
  if (n < 2) throw DomainError("allocation rule needs n >= 2");
  if (l < 1) throw DomainError("block length must be positive");
  const double logn = std::log(static_cast<double>(n));
  const double half_l = 0.5 * static_cast<double>(l);
  auto log_lead = [&](std::size_t j) { return std::log(spec.lambda((j - 1) * l + 1)); };

  // Largest k with log n / k + (l/2) log lambda_{(k-1)l+1} - (l/2k) sum_j log lambda_{(j-1)l+1} >= 0.
  BlockRule r;
  double sum = 0.0;
  const std::size_t k_cap = 64 + static_cast<std::size_t>(8.0 * logn);
  for (std::size_t k = 1; k <= k_cap; ++k) {
    const double lead = log_lead(k);
    sum += lead;
    const double kk = static_cast<double>(k);
    if (logn / kk + half_l * lead - half_l * sum / kk >= 0.0) r.blocks = k;
  }
  const double m = static_cast<double>(r.blocks);
  double prod_log = 0.0;
  for (std::size_t j = 1; j <= r.blocks; ++j) prod_log += log_lead(j);
  std::uint64_t product = 1;
  for (std::size_t j = 1; j <= r.blocks; ++j) {
    const double v = std::exp(logn / m + half_l * log_lead(j) - half_l * prod_log / m);
    auto s = static_cast<std::size_t>(std::floor(v * (1.0 + 1e-14)));
    s = std::max<std::size_t>(1, s);
    r.sizes.push_back(s);
    product *= s;
  }
  // Guard against rounding past the budget.
  for (std::size_t j = r.blocks; product > n && j-- > 0;) {
    while (product > n && r.sizes[j] > 1) {
      product = product / r.sizes[j] * (r.sizes[j] - 1);
      --r.sizes[j];
    }
  }
  return r;
}

std::size_t tuning_l(std::size_t n, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0, 1)");
  if (n == 0) throw DomainError("n must be positive");
  const double base = std::max(1.0, std::log(static_cast<double>(n)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(base, theta))));
}

double dstar_lower_bound(double n, double b) {
  check_index(b);
  if (!(n > 1.0)) throw DomainError("bound needs n > 1");
  return std::pow(b, -1.0 / (b - 1.0)) * 2.0 * std::log(n) / b;
}

ConstantEstimate estimate_CQ(std::size_t l, std::size_t k_max) {
  if (l == 0) throw DomainError("block length must be positive");
  if (l > 2) throw Unsupported("constants beyond l = 2 are not estimated");
  if (k_max == 0 || k_max > 512) throw DomainError("k_max must lie in [1, 512]");
  ConstantEstimate est;
  est.values.reserve(k_max);
  if (l == 1) {
    auto& tab = ScalarQuantizerTable::shared();
    for (std::size_t k = 1; k <= k_max; ++k)
      est.values.push_back(static_cast<double>(k * k) * tab.distortion(k));
  } else {
    const auto chain = planar::optimize_chain({1.0, 1.0}, k_max);
    for (std::size_t k = 1; k <= k_max; ++k) est.values.push_back(static_cast<double>(k) * chain[k - 1].distortion);
  }
  const auto it = std::max_element(est.values.begin(), est.values.end());
  est.c_est = *it;
  est.argmax = static_cast<std::size_t>(it - est.values.begin()) + 1;
  est.q_est = est.values.back();
  return est;
}

double scalar_constant_bound(double b, double c1) {
  check_index(b);
  if (!(c1 > 0.0)) throw DomainError("C(1) must be positive");
  return std::pow(b / 2.0, b - 1.0) * (4.0 * c1 * (b - 1.0) + 1.0) / (b - 1.0);
}

}  // namespace fq
