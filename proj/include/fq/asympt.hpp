#pragma once

#include <cstddef>
#include <vector>

#include "fq/spectra.hpp"

namespace fq {

// (b/2)^{b-1} b/(b-1): the sharp constant in the high-resolution rate.
double rate_constant(double b);

// (b/2)^{b-1} (b/(b-1)) c (log n)^{1-b}, the asymptotic squared quantization
// error for eigenvalues lambda_j ~ c j^{-b}.
double asymptotic_rate(double n, const RegularVariation& rv);

struct BlockRule {
  std::size_t blocks = 0;           // m
  std::vector<std::size_t> sizes;   // n_1 .. n_m, product <= n
};

// Closed-form block count and sizes for block length l.
BlockRule allocation_rule(std::size_t n, std::size_t l, const Spectrum& spec);

// [(max{1, log n})^theta], at least 1.
std::size_t tuning_l(std::size_t n, double theta);

// b^{-1/(b-1)} 2 log n / b.
double dstar_lower_bound(double n, double b);

struct ConstantEstimate {
  double c_est = 0.0;  // max_{k <= k_max} k^{2/l} e_k^2
  double q_est = 0.0;  // value at k = k_max
  std::size_t argmax = 1;
  std::vector<double> values;  // k^{2/l} e_k^2, k = 1..k_max
};

// Lower estimates of C(l) and Q(l) for l = 1 (optimal scalar quantizers) and
// l = 2 (planar Lloyd-Newton codebooks). Throws Unsupported for l > 2.
ConstantEstimate estimate_CQ(std::size_t l, std::size_t k_max);

// (b/2)^{b-1} (4 C1 (b-1) + 1) / (b-1).
double scalar_constant_bound(double b, double c1);

}  // namespace fq
