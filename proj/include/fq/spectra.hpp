#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fq {

enum class ProcessKind { BrownianMotion, RiemannLiouville, FracIntegratedBM };

// A centered Gaussian process on [0, horizon].
//
// `param` is rho for RiemannLiouville and beta for FracIntegratedBM; it is
// ignored for BrownianMotion.
struct ProcessModel {
  ProcessKind kind = ProcessKind::BrownianMotion;
  double param = 0.5;
  double horizon = 1.0;

  static ProcessModel brownian(double T = 1.0);
  static ProcessModel riemann_liouville(double rho, double T = 1.0);
  static ProcessModel frac_integrated(double beta, double T = 1.0);

  // Throws DomainError unless horizon > 0 and param > 0.
  void validate() const;

  // Riemann-Liouville order of the underlying X^rho (W = X^{1/2},
  // Y^beta = X^{beta+1/2} / Gamma(1+beta)).
  double rl_order() const;
  // Multiplier c with K = c * K_{X^rho}.
  double variance_factor() const;
};

enum class Exactness { Closed, Asymptotic };

// lambda_j ~ c * j^{-b}.
struct RegularVariation {
  double b = 2.0;
  double c = 1.0;
};

// Ordered covariance-operator eigenvalues of a process, indexed from 1.
class Spectrum {
 public:
  static Spectrum of(const ProcessModel& model);
  // Arbitrary nonincreasing sequence given by a generator and a tail law;
  // tail sums use the generator up to `exact_terms` and the integral of the
  // law beyond.
  static Spectrum from_function(std::function<double(std::size_t)> value, RegularVariation law,
                                Exactness exactness, std::size_t exact_terms = 1'000'000);

  double lambda(std::size_t j) const;
  // Sum of lambda_j over j > m.
  double tail(std::size_t m) const;
  double trace() const { return tail(0); }
  // lambda_1..lambda_count.
  std::vector<double> head(std::size_t count) const;

  Exactness exactness() const { return exactness_; }
  const RegularVariation& regularity() const { return law_; }

 private:
  std::function<double(std::size_t)> value_;
  std::function<double(std::size_t)> tail_;
  RegularVariation law_;
  Exactness exactness_ = Exactness::Closed;
};

double bm_eigenvalue(std::size_t j, double T);
double bm_eigenfunction(std::size_t j, double T, double t);
double bm_tail(std::size_t m, double T);
double rl_eigenvalue_asymptotic(std::size_t j, double rho, double T);

double covariance_kernel(const ProcessModel& model, double s, double t);

// Eigenvalues (descending) of the midpoint Nystrom matrix (T/N) K(t_i, t_j).
std::vector<double> nystrom_spectrum(const ProcessModel& model, std::size_t gridsize);

}  // namespace fq
