#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fq/error.hpp"
#include "fq/quant1d.hpp"
#include "fq/quantnd.hpp"
#include "fq/rng.hpp"

using namespace fq;

namespace {

Codebook from_quant1d(std::size_t n) {
  return Codebook(1, optimal_scalar_quantizer(n).codebook.points);
}

double max_abs_diff(const Codebook& a, const Codebook& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.coords.size(); ++k) m = std::max(m, std::abs(a.coords[k] - b.coords[k]));
  return m;
}

}  // namespace

TEST_CASE("nearest index") {
  const Codebook cb(2, {0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 2.0, 2.0});
  const auto w = WeightedNormal::standard(2);
  CHECK(nearest_index(std::vector<double>{2.0, 2.0}, cb, w) == 3);
  // Equidistant from codewords 1 and 2.
  CHECK(nearest_index(std::vector<double>{0.5, 0.5}, Codebook(2, {1.0, 0.0, 0.0, 1.0}), w) == 0);

  const Codebook pair(2, {1.0, 0.0, 0.0, 1.0});
  const WeightedNormal skew{{4.0, 1.0}};
  const std::vector<double> x{0.6, 0.7};
  CHECK(nearest_index(x, pair, skew) == 0);
  CHECK(nearest_index(x, pair, WeightedNormal::standard(2)) == 1);
  // Uniform rescaling of the weights leaves the winner unchanged.
  CHECK(nearest_index(x, pair, WeightedNormal{{40.0, 10.0}}) == 0);
  CHECK(nearest_index(x, pair, WeightedNormal{{0.004, 0.001}}) == 0);
}

TEST_CASE("closed-form and quadrature distortion") {
  const WeightedNormal w{{0.7, 0.2, 0.05}};
  const auto zero = distortion_nd(Codebook(3, {0.0, 0.0, 0.0}), w, EvaluationMethod::monte_carlo(1000, 1));
  CHECK(zero.value == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(zero.method == DistortionMethod::ClosedForm);
  CHECK_FALSE(zero.std_error.has_value());

  const auto two = distortion_nd(from_quant1d(2), WeightedNormal::standard(1), EvaluationMethod::quadrature());
  CHECK(two.value == doctest::Approx(1.0 - 2.0 / std::numbers::pi).epsilon(1e-12));
  CHECK(*two.grad_norm < 1e-10);

  const auto one = distortion_nd(Codebook(2, {0.0, 0.0}), WeightedNormal::standard(2), EvaluationMethod::quadrature());
  CHECK(one.value == 2.0);

  CHECK_THROWS_AS(distortion_nd(Codebook(3, {0, 0, 0, 1, 1, 1}), w, EvaluationMethod::quadrature()), Unsupported);
}

TEST_CASE("monte carlo distortion agrees with quadrature in the plane") {
  const Codebook cb(2, {0.3, -0.2, -1.1, 0.4, 0.9, 1.2, 0.1, -1.5, 1.6, -0.3});
  const WeightedNormal w{{0.9, 0.3}};
  const auto q = distortion_nd(cb, w, EvaluationMethod::quadrature());
  const auto mc = distortion_nd(cb, w, EvaluationMethod::monte_carlo(1'000'000, 11));
  REQUIRE(mc.std_error.has_value());
  CHECK(std::abs(q.value - mc.value) < 4.0 * *mc.std_error);
}

TEST_CASE("covariance scaling") {
  const Codebook cb(2, {0.3, -0.2, -1.1, 0.4, 0.9, 1.2, 0.1, -1.5});
  const WeightedNormal w{{0.9, 0.3}};
  const WeightedNormal w4{{3.6, 1.2}};
  // Same Euclidean picture scaled by 2: standardized coordinates coincide.
  Codebook e = to_euclidean(cb, w);
  for (double& v : e.coords) v *= 2.0;
  const Codebook scaled = to_standardized(e, w4);
  const auto a = distortion_nd(cb, w, EvaluationMethod::monte_carlo(200'000, 5));
  const auto b = distortion_nd(scaled, w4, EvaluationMethod::monte_carlo(200'000, 5));
  CHECK(b.value == doctest::Approx(4.0 * a.value).epsilon(1e-12));
  const auto qa = distortion_nd(cb, w, EvaluationMethod::quadrature());
  const auto qb = distortion_nd(scaled, w4, EvaluationMethod::quadrature());
  CHECK(qb.value == doctest::Approx(4.0 * qa.value).epsilon(1e-10));
}

TEST_CASE("competitive learning") {
  const auto one = clvq_run(WeightedNormal::standard(2), 1, 1'000'000, 0.5, 3);
  CHECK(std::hypot(one.coords[0], one.coords[1]) < 5e-3);

  const WeightedNormal w{{1.0, 0.5}};
  const Codebook init = splitting_init(Codebook(2, {}), 10, 2, 9);
  const Codebook out = clvq_run(init, w, 1'000'000, 0.5, 9);
  const auto before = distortion_nd(init, w, EvaluationMethod::quadrature());
  const auto after = distortion_nd(out, w, EvaluationMethod::quadrature());
  CHECK(after.value < before.value);

  // Lloyd contracts by roughly 0.92 per round here, so the polish is long.
  const auto w1 = WeightedNormal::standard(1);
  Codebook polished = clvq_run(w1, 5, 1'000'000, 0.5, 4);
  polished = lloyd_run(polished, w1, 100, 1'000'000, 4);
  polished = lloyd_run(polished, w1, 25, 10'000'000, 5);
  std::vector<double> pts = polished.coords;
  std::sort(pts.begin(), pts.end());
  const auto ref = optimal_scalar_quantizer(5).codebook.points;
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(pts[i] - ref[i]) < 1e-3);
}

TEST_CASE("lloyd") {
  const Codebook opt = from_quant1d(5);
  const auto w1 = WeightedNormal::standard(1);
  const Codebook moved = lloyd_run(opt, w1, 1, 10'000'000, 21);
  CHECK(max_abs_diff(opt, moved) < 2e-3);

  const Codebook origin = lloyd_run(Codebook(1, {0.8}), w1, 1, 1'000'000, 2);
  CHECK(std::abs(origin.coords[0]) < 5e-3);

  const WeightedNormal w3{{1.0, 0.6, 0.3}};
  const Codebook start = splitting_init(Codebook(3, {}), 10, 3, 8);
  const Codebook first = lloyd_run(start, w3, 1, 200'000, 8);
  const Codebook last = lloyd_run(start, w3, 20, 200'000, 8);
  CHECK(last.meta.residual < first.meta.residual / 10.0);

  // Lloyd never raises the distortion beyond Monte Carlo noise.
  Codebook cb = start;
  double prev = distortion_nd(cb, w3, EvaluationMethod::monte_carlo(200'000, 77)).value;
  for (int r = 0; r < 5; ++r) {
    cb = lloyd_run(cb, w3, 1, 200'000, 100 + r);
    const auto rep = distortion_nd(cb, w3, EvaluationMethod::monte_carlo(200'000, 77));
    CHECK(rep.value <= prev + 3.0 * std::sqrt(2.0) * *rep.std_error);
    prev = rep.value;
  }
}

TEST_CASE("lloyd repairs empty cells deterministically") {
  // A codeword far out in the tail receives no samples.
  const Codebook cb(1, {-0.5, 0.5, 40.0});
  const auto w = WeightedNormal::standard(1);
  const Codebook a = lloyd_run(cb, w, 1, 50'000, 1);
  const Codebook b = lloyd_run(cb, w, 1, 50'000, 1);
  CHECK(a.coords == b.coords);
  CHECK(a.coords[2] < 10.0);
  CHECK(std::abs(a.coords[2]) > 2.0);

  CHECK_THROWS_AS(lloyd_run(Codebook(1, {0.0, 50.0}), w, 1, 10'000, 1), DegenerateInput);
}

TEST_CASE("gradient") {
  const auto g0 = gradient_nd(Codebook(2, {0.0, 0.0}), WeightedNormal::standard(2), 1'000'000, 6);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(g0.grad[k]) < 3.0 * g0.std_error[k]);

  const auto gopt = gradient_nd(from_quant1d(5), WeightedNormal::standard(1), 10'000'000, 6);
  CHECK(gopt.norm < 1e-3);

  // Finite differences with common random numbers.
  SequentialNormals r(2024, 99, 1);
  std::vector<double> c, v;
  for (int k = 0; k < 8; ++k) c.push_back(r.next()[0]);
  for (int k = 0; k < 8; ++k) v.push_back(r.next()[0]);
  const Codebook cb(2, c);
  const WeightedNormal w{{1.0, 0.45}};
  const std::size_t samples = 1'000'000;
  const auto g = gradient_nd(cb, w, samples, 13);
  double directional = 0.0;
  for (std::size_t k = 0; k < 8; ++k) directional += w.lambdas[k % 2] * g.grad[k] * v[k];
  const double h = 1e-5;
  Codebook up = cb, dn = cb;
  for (std::size_t k = 0; k < 8; ++k) {
    up.coords[k] += h * v[k];
    dn.coords[k] -= h * v[k];
  }
  const auto mc = EvaluationMethod::monte_carlo(samples, 13);
  const double fd = (distortion_nd(up, w, mc).value - distortion_nd(dn, w, mc).value) / (2 * h);
  CHECK(std::abs(fd - directional) < 1e-3 * std::abs(directional));
}

TEST_CASE("splitting initialization") {
  const Codebook base(1, {0.0});
  const Codebook s1 = splitting_init(base, 1'000'000, 1, 17);
  CHECK(s1.size() == 1'000'001);
  double m2 = 0.0;
  for (std::size_t k = 1; k < s1.coords.size(); ++k) m2 += s1.coords[k] * s1.coords[k];
  CHECK(std::abs(m2 / 1e6 - 3.0) < 0.01);

  const Codebook s2 = splitting_init(Codebook(2, {}), 1'000'000, 2, 17);
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < s2.size(); ++k) {
    a += s2.coords[2 * k] * s2.coords[2 * k];
    b += s2.coords[2 * k + 1] * s2.coords[2 * k + 1];
  }
  CHECK(std::abs(a / 1e6 - 2.0) < 0.01);
  CHECK(std::abs(b / 1e6 - 2.0) < 0.01);
}

TEST_CASE("pipeline is deterministic") {
  const WeightedNormal w{{0.4, 0.05}};
  const PipelineParams p{20'000, 0.5, 3, 20'000};
  const Codebook a = optimize_codebook(w, 7, p, 31);
  const Codebook b = optimize_codebook(w, 7, p, 31);
  const Codebook c = optimize_codebook(w, 7, p, 32);
  CHECK(a.coords == b.coords);
  CHECK(a.coords != c.coords);
  CHECK(a.size() == 7);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("codebook validation") {
  CHECK_THROWS_AS(Codebook(2, {}).validate(), DomainError);
  CHECK_THROWS_AS(Codebook(2, {1.0, 2.0, 1.0, 2.0}).validate(), DomainError);
  CHECK_THROWS_AS((WeightedNormal{{1.0, 0.0}}).validate(), DomainError);
}
