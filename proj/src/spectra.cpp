#include "fq/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fq/error.hpp"

namespace fq {

namespace {

constexpr std::size_t kTailTerms = 1'000'000;

void require_index(std::size_t j) {
  if (j == 0) throw DomainError("eigenvalue index must be >= 1");
}

// Sum of c*x^{-b} over j >= from, approximated by the integral from
// from - 1/2 (midpoint rule correction).
double power_law_remainder(const RegularVariation& law, double from) {
  return law.c * std::pow(from - 0.5, 1.0 - law.b) / (law.b - 1.0);
}

// Covariance of X^rho for s <= t via r = s (1 - u^{q}), q = 1/(rho+1/2):
//   K = s^{rho+1/2} q \int_0^1 (t - s + s u^q)^{rho-1/2} du.
double rl_kernel_ordered(double rho, double s, double t) {
  if (s == 0.0) return 0.0;
  const double p = rho - 0.5;
  if (p == 0.0) return s;
  if (s == t) return std::pow(s, 2.0 * rho) / (2.0 * rho);
  const double q = 1.0 / (p + 1.0);
  const double gap = t - s;
  auto f = [&](double u) { return std::pow(gap + s * std::pow(u, q), p); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 20, 1e-10);
  return std::pow(s, p + 1.0) * q * integral;
}

}  // namespace

ProcessModel ProcessModel::brownian(double T) {
  return {ProcessKind::BrownianMotion, 0.5, T};
}

ProcessModel ProcessModel::riemann_liouville(double rho, double T) {
  return {ProcessKind::RiemannLiouville, rho, T};
}

ProcessModel ProcessModel::frac_integrated(double beta, double T) {
  return {ProcessKind::FracIntegratedBM, beta, T};
}

void ProcessModel::validate() const {
  if (!(horizon > 0.0)) throw DomainError("process horizon T must be positive");
  if (kind != ProcessKind::BrownianMotion && !(param > 0.0))
    throw DomainError("process parameter must be positive");
}

double ProcessModel::rl_order() const {
  switch (kind) {
    case ProcessKind::BrownianMotion: return 0.5;
    case ProcessKind::RiemannLiouville: return param;
    case ProcessKind::FracIntegratedBM: return param + 0.5;
  }
  return 0.5;
}

double ProcessModel::variance_factor() const {
  if (kind != ProcessKind::FracIntegratedBM) return 1.0;
  const double g = std::tgamma(1.0 + param);
  return 1.0 / (g * g);
}

double bm_eigenvalue(std::size_t j, double T) {
  require_index(j);
  const double x = T / (std::numbers::pi * (static_cast<double>(j) - 0.5));
  return x * x;
}

double bm_eigenfunction(std::size_t j, double T, double t) {
  require_index(j);
  if (t < 0.0 || t > T) throw DomainError("time outside [0, T]");
  return std::sqrt(2.0 / T) * std::sin(t / std::sqrt(bm_eigenvalue(j, T)));
}

double bm_tail(std::size_t m, double T) {
  // Partial sums are accumulated smallest-first to limit cancellation.
  double head = 0.0;
  for (std::size_t j = m; j >= 1; --j) head += bm_eigenvalue(j, T);
  return 0.5 * T * T - head;
}

double rl_eigenvalue_asymptotic(std::size_t j, double rho, double T) {
  require_index(j);
  const double b = 2.0 * rho + 1.0;
  const double g = std::tgamma(rho + 0.5);
  return std::pow(T, b) * g * g * std::pow(std::numbers::pi * static_cast<double>(j), -b);
}

Spectrum Spectrum::from_function(std::function<double(std::size_t)> value, RegularVariation law,
                                 Exactness exactness, std::size_t exact_terms) {
  if (!(law.b > 1.0)) throw DomainError("regular variation index b must exceed 1");
  Spectrum s;
  s.law_ = law;
  s.exactness_ = exactness;
  s.value_ = value;
  // Total mass beyond exact_terms comes from the integral remainder.
  double far = power_law_remainder(law, static_cast<double>(exact_terms + 1));
  for (std::size_t j = exact_terms; j >= 1; --j) far += value(j);
  const double total = far;
  s.tail_ = [value, law, exact_terms, total](std::size_t m) {
    if (m <= 10'000) {
      double head = 0.0;
      for (std::size_t j = m; j >= 1; --j) head += value(j);
      return total - head;
    }
    double sum = power_law_remainder(law, static_cast<double>(std::max(m, exact_terms) + 1));
    for (std::size_t j = exact_terms; j > m; --j) sum += value(j);
    return sum;
  };
  return s;
}

Spectrum Spectrum::of(const ProcessModel& model) {
  model.validate();
  const double T = model.horizon;
  if (model.kind == ProcessKind::BrownianMotion) {
    Spectrum s;
    s.law_ = {2.0, T * T / (std::numbers::pi * std::numbers::pi)};
    s.exactness_ = Exactness::Closed;
    s.value_ = [T](std::size_t j) { return bm_eigenvalue(j, T); };
    s.tail_ = [T](std::size_t m) { return bm_tail(m, T); };
    return s;
  }
  const double rho = model.rl_order();
  const double scale = model.variance_factor();
  const double b = 2.0 * rho + 1.0;
  const double g = std::tgamma(rho + 0.5);
  RegularVariation law{b, scale * std::pow(T, b) * g * g * std::pow(std::numbers::pi, -b)};
  return from_function(
      [rho, T, scale](std::size_t j) { return scale * rl_eigenvalue_asymptotic(j, rho, T); }, law,
      Exactness::Asymptotic, kTailTerms);
}

double Spectrum::lambda(std::size_t j) const {
  require_index(j);
  return value_(j);
}

double Spectrum::tail(std::size_t m) const { return tail_(m); }

std::vector<double> Spectrum::head(std::size_t count) const {
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) out[j] = value_(j + 1);
  return out;
}

double covariance_kernel(const ProcessModel& model, double s, double t) {
  model.validate();
  const double T = model.horizon;
  if (s < 0.0 || t < 0.0 || s > T || t > T) throw DomainError("time outside [0, T]");
  if (model.kind == ProcessKind::BrownianMotion) return std::min(s, t);
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  return model.variance_factor() * rl_kernel_ordered(model.rl_order(), lo, hi);
}

std::vector<double> nystrom_spectrum(const ProcessModel& model, std::size_t gridsize) {
  if (gridsize < 16) throw DomainError("Nystrom grid needs at least 16 nodes");
  model.validate();
  const double T = model.horizon;
  const double h = T / static_cast<double>(gridsize);
  const auto n = static_cast<Eigen::Index>(gridsize);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = (static_cast<double>(i) + 0.5) * h;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double tj = (static_cast<double>(j) + 0.5) * h;
      a(i, j) = a(j, i) = h * covariance_kernel(model, ti, tj);
    }
  }
  // Spot check that the kernel is numerically symmetric.
  for (Eigen::Index i = 1; i < n; i += 97) {
    const double ti = (static_cast<double>(i) + 0.5) * h;
    const double tj = 0.5 * h;
    const double asym = std::abs(covariance_kernel(model, ti, tj) - covariance_kernel(model, tj, ti));
    if (asym > 1e-10)
      throw std::logic_error("covariance kernel asymmetric by " + std::to_string(asym));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Nystrom eigensolver failed");
  std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

}  // namespace fq
