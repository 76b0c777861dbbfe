#include "fq/quantnd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fq/error.hpp"
#include "fq/quant1d.hpp"
#include "fq/rng.hpp"
#include "fq/spectra.hpp"
#include "fq/voronoi2d.hpp"

namespace fq {

void WeightedNormal::validate() const {
  if (lambdas.empty()) throw DomainError("weighted normal needs dimension >= 1");
  for (double l : lambdas)
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("weighted normal variances must be positive");
}

WeightedNormal WeightedNormal::from_spectrum(const Spectrum& spec, std::size_t offset, std::size_t d) {
  WeightedNormal w;
  w.lambdas.reserve(d);
  for (std::size_t k = 1; k <= d; ++k) w.lambdas.push_back(spec.lambda(offset + k));
  w.validate();
  return w;
}

WeightedNormal WeightedNormal::standard(std::size_t d) {
  return WeightedNormal{std::vector<double>(d, 1.0)};
}

void Codebook::validate() const {
  if (dim == 0 || coords.empty() || coords.size() % dim != 0)
    throw DomainError("codebook needs at least one point of matching dimension");
  for (double v : coords)
    if (!std::isfinite(v)) throw DomainError("codebook coordinate is not finite");
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto pa = point(a), pb = point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    auto pa = point(order[k - 1]), pb = point(order[k]);
    if (std::equal(pa.begin(), pa.end(), pb.begin())) throw DomainError("codebook has repeated points");
  }
}

namespace {

void check_dims(const Codebook& cb, const WeightedNormal& w) {
  if (cb.dim != w.dim()) throw DomainError("codebook and distribution dimensions differ");
  if (cb.size() == 0) throw DomainError("empty codebook");
}

// Nearest codeword with partial-distance elimination; returns the index and
// writes the weighted squared distance.
std::size_t nearest(const double* x, const double* coords, std::size_t n, std::size_t d,
                    const double* lam, double& best) {
  best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* c = coords + i * d;
    double acc = 0.0;
    std::size_t k = 0;
    for (; k < d; ++k) {
      const double diff = x[k] - c[k];
      acc += lam[k] * diff * diff;
      if (acc >= best) break;
    }
    if (k == d && acc < best) {
      best = acc;
      arg = i;
    }
  }
  return arg;
}

// Visits samples [0, total) of a stream chunk by chunk.
template <class F>
void for_each_sample(const SampleStream& src, std::size_t dim, std::size_t total, F&& f) {
  std::vector<double> buf(SampleStream::kChunk * dim);
  for (std::uint64_t chunk = 0; chunk * SampleStream::kChunk < total; ++chunk) {
    src.fill_chunk(chunk, dim, buf);
    const std::size_t first = chunk * SampleStream::kChunk;
    const std::size_t count = std::min<std::size_t>(SampleStream::kChunk, total - first);
    for (std::size_t s = 0; s < count; ++s) f(first + s, buf.data() + s * dim);
  }
}

}  // namespace

std::size_t nearest_index(std::span<const double> x, const Codebook& cb, const WeightedNormal& w) {
  check_dims(cb, w);
  if (x.size() != cb.dim) throw DomainError("point dimension differs from codebook");
  double best = 0.0;
  return nearest(x.data(), cb.coords.data(), cb.size(), cb.dim, w.lambdas.data(), best);
}

Codebook clvq_run(const WeightedNormal& w, std::size_t n, std::size_t steps, double c, std::uint64_t seed) {
  w.validate();
  if (n == 0) throw DomainError("codebook size must be positive");
  const Codebook init = splitting_init(Codebook(w.dim(), {}), n, w.dim(), seed);
  return clvq_run(init, w, steps, c, seed);
}

Codebook clvq_run(const Codebook& init, const WeightedNormal& w, std::size_t steps, double c,
                  std::uint64_t seed) {
  w.validate();
  check_dims(init, w);
  if (steps == 0) throw DomainError("competitive learning needs at least one step");
  if (!(c > 0.0 && c <= 1.0)) throw DomainError("step constant must lie in (0, 1]");
  Codebook cb = init;
  const std::size_t d = cb.dim, n = cb.size();
  SequentialNormals z(seed, streams::kClvq, d);
  double best = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto zk = z.next();
    const std::size_t i = nearest(zk.data(), cb.coords.data(), n, d, w.lambdas.data(), best);
    const double gamma = c / static_cast<double>(k + 1);
    double* x = cb.coords.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) x[a] += gamma * (zk[a] - x[a]);
  }
  cb.meta.seed = seed;
  cb.meta.iterations += steps;
  return cb;
}

Codebook lloyd_run(const Codebook& start, const WeightedNormal& w, std::size_t rounds,
                   std::size_t samples_per_round, std::uint64_t seed) {
  w.validate();
  check_dims(start, w);
  if (rounds == 0) throw DomainError("Lloyd needs at least one round");
  if (samples_per_round == 0) throw DomainError("Lloyd needs samples");
  Codebook cb = start;
  const std::size_t d = cb.dim, n = cb.size();
  const double* lam = w.lambdas.data();
  std::vector<double> sums(n * d);
  std::vector<std::size_t> counts(n);
  for (std::size_t r = 0; r < rounds; ++r) {
    const SampleStream src(seed, streams::sub(streams::kLloyd, r));
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    double best = 0.0;
    for_each_sample(src, d, samples_per_round, [&](std::size_t, const double* z) {
      const std::size_t i = nearest(z, cb.coords.data(), n, d, lam, best);
      ++counts[i];
      for (std::size_t a = 0; a < d; ++a) sums[i * d + a] += z[a];
    });

    const double inv = 1.0 / static_cast<double>(samples_per_round);
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < d; ++a) {
        const double g = 2.0 * (static_cast<double>(counts[i]) * cb.coords[i * d + a] - sums[i * d + a]) * inv;
        g2 += lam[a] * g * g;
      }
    cb.meta.residual = std::sqrt(g2);

    std::vector<std::size_t> empty;
    for (std::size_t i = 0; i < n; ++i)
      if (counts[i] == 0) empty.push_back(i);
    if (n >= 2 && empty.size() == n - 1) throw DegenerateInput("all samples fell into one Voronoi cell");

    const std::vector<double> old = cb.coords;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] == 0) continue;
      for (std::size_t a = 0; a < d; ++a)
        cb.coords[i * d + a] = sums[i * d + a] / static_cast<double>(counts[i]);
    }

    if (!empty.empty()) {
      // Second pass over the same samples: the ones farthest from their own
      // codewords re-seed the empty cells, farthest first.
      const std::size_t k = empty.size();
      std::vector<std::pair<double, std::size_t>> far;  // min-heap on (distance, -index)
      auto worse = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
      };
      for_each_sample(src, d, samples_per_round, [&](std::size_t idx, const double* z) {
        double dist = 0.0;
        nearest(z, old.data(), n, d, lam, dist);
        if (far.size() < k) {
          far.emplace_back(dist, idx);
          std::push_heap(far.begin(), far.end(), worse);
        } else if (dist > far.front().first) {
          std::pop_heap(far.begin(), far.end(), worse);
          far.back() = {dist, idx};
          std::push_heap(far.begin(), far.end(), worse);
        }
      });
      std::sort_heap(far.begin(), far.end(), worse);
      std::vector<double> buf(SampleStream::kChunk * d);
      for (std::size_t e = 0; e < k && e < far.size(); ++e) {
        const std::size_t idx = far[e].second;
        src.fill_chunk(idx / SampleStream::kChunk, d, buf);
        const double* z = buf.data() + (idx % SampleStream::kChunk) * d;
        std::copy(z, z + d, cb.coords.begin() + static_cast<std::ptrdiff_t>(empty[e] * d));
      }
    }
    cb.meta.iterations += 1;
  }
  cb.meta.seed = seed;
  return cb;
}

DistortionReport distortion_nd(const Codebook& cb, const WeightedNormal& w,
                               const EvaluationMethod& method) {
  w.validate();
  check_dims(cb, w);
  const std::size_t d = cb.dim, n = cb.size();
  DistortionReport rep;
  if (n == 1) {
    // Second moment about the single codeword.
    rep.method = DistortionMethod::ClosedForm;
    rep.value = 0.0;
    double g2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double c = cb.coords[a];
      rep.value += w.lambdas[a] * (1.0 + c * c);
      g2 += w.lambdas[a] * 4.0 * c * c;
    }
    rep.grad_norm = std::sqrt(g2);
    return rep;
  }
  switch (method.kind) {
    case DistortionMethod::ClosedForm:
      throw Unsupported("closed-form distortion is available for single-point codebooks only");
    case DistortionMethod::Quadrature: {
      rep.method = DistortionMethod::Quadrature;
      if (d == 1) {
        std::vector<double> pts = cb.coords;
        std::sort(pts.begin(), pts.end());
        if (std::adjacent_find(pts.begin(), pts.end()) != pts.end())
          throw DomainError("codebook has repeated points");
        const double lam = w.lambdas[0];
        rep.value = lam * scalar_distortion(pts);
        double g2 = 0.0;
        for (double g : scalar_gradient(pts)) g2 += lam * g * g;
        rep.grad_norm = std::sqrt(g2);
      } else if (d == 2) {
        const Codebook e = to_euclidean(cb, w);
        const auto a = planar::analyze(e.coords, {std::sqrt(w.lambdas[0]), std::sqrt(w.lambdas[1])});
        rep.value = a.distortion;
        rep.grad_norm = a.grad_norm;
      } else {
        throw Unsupported("quadrature distortion is limited to dimension <= 2");
      }
      return rep;
    }
    case DistortionMethod::MonteCarlo:
      break;
  }
  if (method.samples < 2) throw DomainError("Monte Carlo distortion needs at least two samples");
  rep.method = DistortionMethod::MonteCarlo;
  rep.samples = method.samples;
  rep.seed = method.seed;
  const SampleStream src(method.seed, streams::kDistortion);
  double sum = 0.0, sum2 = 0.0, best = 0.0;
  for_each_sample(src, d, method.samples, [&](std::size_t, const double* z) {
    nearest(z, cb.coords.data(), n, d, w.lambdas.data(), best);
    sum += best;
    sum2 += best * best;
  });
  const double m = static_cast<double>(method.samples);
  rep.value = sum / m;
  const double var = std::max(0.0, (sum2 - sum * sum / m) / (m - 1.0));
  rep.std_error = std::sqrt(var / m);
  return rep;
}

GradientEstimate gradient_nd(const Codebook& cb, const WeightedNormal& w, std::size_t samples,
                             std::uint64_t seed) {
  w.validate();
  check_dims(cb, w);
  if (samples < 2) throw DomainError("gradient estimate needs at least two samples");
  const std::size_t d = cb.dim, n = cb.size();
  std::vector<double> s1(n * d), s2(n * d);
  const SampleStream src(seed, streams::kDistortion);
  double best = 0.0;
  for_each_sample(src, d, samples, [&](std::size_t, const double* z) {
    const std::size_t i = nearest(z, cb.coords.data(), n, d, w.lambdas.data(), best);
    for (std::size_t a = 0; a < d; ++a) {
      const double v = 2.0 * (cb.coords[i * d + a] - z[a]);
      s1[i * d + a] += v;
      s2[i * d + a] += v * v;
    }
  });
  const double m = static_cast<double>(samples);
  GradientEstimate g;
  g.grad.resize(n * d);
  g.std_error.resize(n * d);
  double norm2 = 0.0;
  for (std::size_t k = 0; k < n * d; ++k) {
    g.grad[k] = s1[k] / m;
    const double var = std::max(0.0, (s2[k] - s1[k] * s1[k] / m) / (m - 1.0));
    g.std_error[k] = std::sqrt(var / m);
    norm2 += w.lambdas[k % d] * g.grad[k] * g.grad[k];
  }
  g.norm = std::sqrt(norm2);
  return g;
}

Codebook splitting_init(const Codebook& cb, std::size_t nu, std::size_t d, std::uint64_t seed) {
  if (nu == 0) throw DomainError("splitting adds at least one point");
  if (d == 0) throw DomainError("dimension must be positive");
  if (!cb.coords.empty() && cb.dim != d) throw DomainError("codebook dimension differs");
  Codebook out = cb;
  out.dim = d;
  const double scale = std::sqrt(static_cast<double>(d + 2) / static_cast<double>(d));
  SequentialNormals z(seed, streams::kSplitting, d);
  out.coords.reserve(out.coords.size() + nu * d);
  for (std::size_t k = 0; k < nu; ++k)
    for (double v : z.next()) out.coords.push_back(scale * v);
  return out;
}

Codebook optimize_codebook(const WeightedNormal& w, std::size_t n, const PipelineParams& params,
                           std::uint64_t seed) {
  w.validate();
  if (n == 0) throw DomainError("codebook size must be positive");
  Codebook cb(w.dim(), std::vector<double>(w.dim(), 0.0));
  if (n == 1) {
    cb.meta.seed = seed;
    cb.meta.residual = 0.0;
    return cb;
  }
  cb = splitting_init(cb, n - 1, w.dim(), seed);
  if (params.clvq_steps > 0) cb = clvq_run(cb, w, params.clvq_steps, params.clvq_c, seed);
  if (params.lloyd_rounds > 0) cb = lloyd_run(cb, w, params.lloyd_rounds, params.lloyd_samples, seed);
  cb.meta.seed = seed;
  return cb;
}

Codebook to_euclidean(const Codebook& cb, const WeightedNormal& w) {
  check_dims(cb, w);
  Codebook out = cb;
  for (std::size_t k = 0; k < out.coords.size(); ++k) out.coords[k] *= std::sqrt(w.lambdas[k % cb.dim]);
  return out;
}

Codebook to_standardized(const Codebook& cb, const WeightedNormal& w) {
  check_dims(cb, w);
  Codebook out = cb;
  for (std::size_t k = 0; k < out.coords.size(); ++k) out.coords[k] /= std::sqrt(w.lambdas[k % cb.dim]);
  return out;
}

}  // namespace fq
