#include "fq/pathspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fftw3.h>

#include "fq/error.hpp"
#include "fq/quant1d.hpp"
#include "fq/rng.hpp"

namespace fq {

namespace {

// RODFT11 (DST-IV) of length N; owns its buffers.
class SineTransform {
 public:
  explicit SineTransform(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_real(n)),
        plan_(fftw_plan_r2r_1d(static_cast<int>(n), in_, out_, FFTW_RODFT11, FFTW_ESTIMATE)) {
    if (plan_ == nullptr) throw ResourceError("FFTW could not plan a sine transform");
  }
  ~SineTransform() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  SineTransform(const SineTransform&) = delete;
  SineTransform& operator=(const SineTransform&) = delete;

  std::span<double> input() { return {in_, n_}; }
  // out_k = 2 sum_j in_j sin(pi (j + 1/2)(k + 1/2) / N)
  std::span<const double> run() {
    fftw_execute(plan_);
    return {out_, n_};
  }

 private:
  std::size_t n_;
  double* in_;
  double* out_;
  fftw_plan plan_;
};

double bm_lambda(std::size_t j, double T) { return bm_eigenvalue(j, T); }

std::vector<double> codeword_coeffs(const PathQuantizer& pq, std::size_t i) {
  const auto z = pq.codebook.point(i);
  std::vector<double> a(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) a[k] = pq.coefficient_scale(k + 1) * z[k];
  return a;
}

}  // namespace

double PathQuantizer::coefficient_scale(std::size_t j) const { return std::sqrt(bm_lambda(j, horizon)); }

std::vector<double> midpoint_grid(double horizon, std::size_t points) {
  if (points == 0) throw DomainError("grid needs at least one point");
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i)
    t[i] = (static_cast<double>(i) + 0.5) * horizon / static_cast<double>(points);
  return t;
}

std::vector<double> reconstruct_path(std::span<const double> coeffs, double horizon, PathBasis basis,
                                     std::span<const double> timegrid) {
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  std::vector<double> x(timegrid.size(), 0.0);
  for (std::size_t i = 0; i < timegrid.size(); ++i) {
    const double t = timegrid[i];
    if (!(t >= 0.0 && t <= horizon)) throw DomainError("time outside [0, T]");
    double v = 0.0;
    for (std::size_t j = 1; j <= coeffs.size(); ++j) {
      const double a = coeffs[j - 1];
      if (a == 0.0) continue;
      const double lam = bm_lambda(j, horizon);
      const double arg = t / std::sqrt(lam);
      if (basis == PathBasis::BrownianKL)
        v += a * std::sqrt(2.0 / horizon) * std::sin(arg);
      else
        v += a * std::sqrt(2.0 * lam / horizon) * (1.0 - std::cos(arg));
    }
    x[i] = v;
  }
  return x;
}

DistortionReport path_distortion(const PathQuantizer& pq, std::size_t mc_samples, std::uint64_t seed,
                                 const PathSimulation& sim) {
  if (pq.basis != PathBasis::BrownianKL) throw Unsupported("path simulation is implemented for Brownian paths");
  if (mc_samples < 2) throw DomainError("path distortion needs at least two samples");
  if (sim.modes == 0 || sim.modes > sim.grid) throw DomainError("modes must lie in [1, grid]");
  const std::size_t n = pq.codebook.size(), N = sim.grid;
  const double T = pq.horizon;
  const auto grid = midpoint_grid(T, N);
  std::vector<double> paths(n * N);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = reconstruct_path(codeword_coeffs(pq, i), T, pq.basis, grid);
    std::copy(g.begin(), g.end(), paths.begin() + static_cast<std::ptrdiff_t>(i * N));
  }
  std::vector<double> scale(sim.modes);
  for (std::size_t j = 0; j < sim.modes; ++j) scale[j] = std::sqrt(bm_lambda(j + 1, T));

  SineTransform dst(N);
  SequentialNormals xi(seed, streams::kPaths, sim.modes);
  const double h = T / static_cast<double>(N);
  const double amp = 0.5 * std::sqrt(2.0 / T);
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> x(N);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    auto in = dst.input();
    const auto z = xi.next();
    for (std::size_t j = 0; j < sim.modes; ++j) in[j] = scale[j] * z[j];
    std::fill(in.begin() + static_cast<std::ptrdiff_t>(sim.modes), in.end(), 0.0);
    const auto out = dst.run();
    for (std::size_t k = 0; k < N; ++k) x[k] = amp * out[k];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = paths.data() + i * N;
      double acc = 0.0;
      const double stop = best / h;
      std::size_t k = 0;
      for (; k < N; ++k) {
        const double diff = x[k] - g[k];
        acc += diff * diff;
        if (acc >= stop) break;
      }
      if (k == N) best = std::min(best, h * acc);
    }
    sum += best;
    sum2 += best * best;
  }
  DistortionReport rep;
  const double m = static_cast<double>(mc_samples);
  rep.method = DistortionMethod::MonteCarlo;
  rep.samples = mc_samples;
  rep.seed = seed;
  rep.value = sum / m;
  rep.std_error = std::sqrt(std::max(0.0, (sum2 - sum * sum / m) / (m - 1.0)) / m);
  return rep;
}

CompanionWeights estimate_weights(const PathQuantizer& pq, std::size_t mc_samples, std::uint64_t seed) {
  if (mc_samples < 10'000) throw DomainError("companion weights need at least 10^4 samples");
  const Codebook& cb = pq.codebook;
  const std::size_t d = cb.dim, n = cb.size();
  WeightedNormal w;
  for (std::size_t k = 1; k <= d; ++k) w.lambdas.push_back(bm_lambda(k, pq.horizon));
  std::vector<std::size_t> counts(n, 0);
  SequentialNormals z(seed, streams::kWeights, d);
  for (std::size_t s = 0; s < mc_samples; ++s) ++counts[nearest_index(z.next(), cb, w)];
  CompanionWeights cw;
  cw.samples = mc_samples;
  cw.seed = seed;
  const double m = static_cast<double>(mc_samples);
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / m;
    cw.probs.push_back(p);
    cw.std_errors.push_back(std::sqrt(p * (1.0 - p) / m));
  }
  return cw;
}

ProductWeights estimate_product_weights(const ProductQuantizer& pq, const Spectrum& spec, std::size_t mc_samples,
                                        std::uint64_t seed) {
  if (mc_samples < 10'000) throw DomainError("companion weights need at least 10^4 samples");
  const auto offsets = pq.plan.offsets();
  const std::size_t dim = std::max<std::size_t>(1, pq.plan.coords());
  std::vector<WeightedNormal> ws;
  std::vector<std::vector<std::size_t>> counts;
  for (std::size_t b = 0; b < pq.blocks.size(); ++b) {
    ws.push_back(WeightedNormal::from_spectrum(spec, offsets[b], pq.plan.lengths[b]));
    counts.emplace_back(pq.blocks[b].size(), 0);
  }
  SequentialNormals z(seed, streams::kWeights, dim);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const auto x = z.next();
    for (std::size_t b = 0; b < pq.blocks.size(); ++b)
      ++counts[b][nearest_index(x.subspan(offsets[b], pq.plan.lengths[b]), pq.blocks[b], ws[b])];
  }
  ProductWeights out;
  const double m = static_cast<double>(mc_samples);
  for (const auto& c : counts) {
    CompanionWeights cw;
    cw.samples = mc_samples;
    cw.seed = seed;
    for (std::size_t k : c) {
      const double p = static_cast<double>(k) / m;
      cw.probs.push_back(p);
      cw.std_errors.push_back(std::sqrt(p * (1.0 - p) / m));
    }
    out.blocks.push_back(std::move(cw));
  }
  // Same ordering as compose_product: the first block varies slowest.
  out.joint = {1.0};
  for (const auto& blk : out.blocks) {
    std::vector<double> next;
    next.reserve(out.joint.size() * blk.probs.size());
    for (double p : out.joint)
      for (double q : blk.probs) next.push_back(p * q);
    out.joint = std::move(next);
  }
  return out;
}

PathFunctional builtin_functional(const std::string& name) {
  if (name == "one") return [](const SampledPath&) { return 1.0; };
  if (name == "integral")
    return [](const SampledPath& p) {
      double s = 0.0;
      for (double v : p.values) s += v;
      return s * p.horizon / static_cast<double>(p.values.size());
    };
  if (name == "sup")
    return [](const SampledPath& p) {
      double m = p.terminal;
      for (double v : p.values) m = std::max(m, v);
      return m;
    };
  if (name == "l2norm2")
    return [](const SampledPath& p) {
      double s = 0.0;
      for (double v : p.values) s += v * v;
      return s * p.horizon / static_cast<double>(p.values.size());
    };
  if (name == "terminal") return [](const SampledPath& p) { return p.terminal; };
  throw DomainError("unknown functional '" + name + "' (one, integral, sup, l2norm2, terminal)");
}

double cubature(const PathQuantizer& pq, std::span<const double> weights, const PathFunctional& psi,
                std::size_t grid) {
  const std::size_t n = pq.codebook.size();
  if (weights.size() != n) throw DomainError("weights and codebook sizes differ");
  const auto t = midpoint_grid(pq.horizon, grid);
  const std::vector<double> end{pq.horizon};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    const auto a = codeword_coeffs(pq, i);
    const auto values = reconstruct_path(a, pq.horizon, pq.basis, t);
    const double terminal = reconstruct_path(a, pq.horizon, pq.basis, end)[0];
    total += weights[i] * psi(SampledPath{t, values, pq.horizon, terminal});
  }
  return total;
}

double integrated_mu(std::size_t j) {
  if (j == 0) throw DomainError("index starts at 1");
  const double x = std::numbers::pi * (static_cast<double>(j) - 0.5);
  return 1.0 / (x * x);
}

double integrated_weight(std::size_t j, double horizon) {
  const double mu = integrated_mu(j);
  return std::pow(horizon, 4) * mu * mu * (3.0 + 4.0 * std::sqrt(mu));
}

double integrated_coefficient(std::size_t j, double horizon) {
  const double mu = integrated_mu(j);
  const double sign = j % 2 == 1 ? 1.0 : -1.0;
  return std::pow(horizon, 4) * mu * mu * (3.0 - 4.0 * sign * std::sqrt(mu));
}

IntegratedDesign rl32_design(std::size_t n, double horizon, std::size_t m_max) {
  if (n == 0) throw DomainError("budget must be positive");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  const double pi4 = std::pow(std::numbers::pi, 4);
  const RegularVariation law{4.0, 3.0 * std::pow(horizon, 4) / pi4};
  const Spectrum alloc_seq = Spectrum::from_function(
      [horizon](std::size_t j) { return integrated_weight(j, horizon); }, law, Exactness::Closed);
  const Spectrum exact_seq = Spectrum::from_function(
      [horizon](std::size_t j) { return integrated_coefficient(j, horizon); }, law, Exactness::Closed);

  IntegratedDesign d;
  d.allocation = allocate_scalar(n, alloc_seq, m_max);
  auto& tab = ScalarQuantizerTable::shared();
  const auto& sizes = d.allocation.plan.sizes;
  d.distortion = exact_seq.tail(sizes.size());
  for (std::size_t j = 0; j < sizes.size(); ++j)
    d.distortion += integrated_coefficient(j + 1, horizon) * tab.distortion(sizes[j]);
  d.codebook = compose_product(make_product(d.allocation, nullptr));
  d.codebook.meta.design = "IV";
  return d;
}

}  // namespace fq
