#include "fq/voronoi2d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss.hpp>

#include "fq/error.hpp"
#include "fq/normal.hpp"

namespace fq::planar {

namespace {

constexpr double kBoxSigmas = 9.0;
// Quadrature pieces span at most this many standard deviations.
constexpr double kPieceWidth = 0.5;
constexpr int kOrder = 15;
using Rule = boost::math::quadrature::gauss<double, kOrder>;

// Gauss-Legendre nodes/weights on [-1, 1].
struct Nodes {
  std::array<double, kOrder> x{};
  std::array<double, kOrder> w{};
  Nodes() {
    const auto& a = Rule::abscissa();
    const auto& wt = Rule::weights();
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      x[k] = a[i];
      w[k++] = wt[i];
      if (a[i] != 0.0) {
        x[k] = -a[i];
        w[k++] = wt[i];
      }
    }
  }
};

const Nodes& nodes() {
  static const Nodes n;
  return n;
}

Cell box_cell(Vec2 half) {
  Cell c;
  c.verts = {{-half.x, -half.y}, {half.x, -half.y}, {half.x, half.y}, {-half.x, half.y}};
  c.owner = {-1, -1, -1, -1};
  return c;
}

// Keeps {p : a.p <= b}; the new edge along the line belongs to `who`.
void clip(Cell& cell, Vec2 a, double b, long who) {
  const std::size_t m = cell.verts.size();
  Cell out;
  out.verts.reserve(m + 1);
  out.owner.reserve(m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const Vec2 p = cell.verts[k];
    const Vec2 q = cell.verts[(k + 1) % m];
    const double sp = a.x * p.x + a.y * p.y - b;
    const double sq = a.x * q.x + a.y * q.y - b;
    const bool pin = sp <= 0.0;
    const bool qin = sq <= 0.0;
    if (pin) {
      out.verts.push_back(p);
      out.owner.push_back(cell.owner[k]);
    }
    if (pin != qin) {
      const double t = sp / (sp - sq);
      const Vec2 i{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
      out.verts.push_back(i);
      out.owner.push_back(pin ? who : cell.owner[k]);
    }
  }
  cell = std::move(out);
}

struct Accum {
  double m0 = 0, mu = 0, mv = 0, muu = 0, muv = 0, mvv = 0;
};

// Adds the standard-normal moments over {ua<u<ub, lo(u)<v<hi(u)} with lo,
// hi linear.
void integrate_strip(double ua, double ub, double lo_a, double lo_b, double hi_a, double hi_b,
                     Accum& acc) {
  const double span = std::max({ub - ua, std::abs(lo_b - lo_a), std::abs(hi_b - hi_a)});
  const int pieces = std::max(1, static_cast<int>(std::ceil(span / kPieceWidth)));
  const auto& nd = nodes();
  const double h = (ub - ua) / pieces;
  for (int p = 0; p < pieces; ++p) {
    const double a = ua + p * h;
    const double half = 0.5 * h;
    const double mid = a + half;
    for (int k = 0; k < kOrder; ++k) {
      const double u = mid + half * nd.x[k];
      const double s = (u - ua) / (ub - ua);
      const double lo = lo_a + s * (lo_b - lo_a);
      const double hi = hi_a + s * (hi_b - hi_a);
      if (!(hi > lo)) continue;
      const double w = half * nd.w[k] * normal::pdf(u);
      const double plo = normal::pdf(lo), phi = normal::pdf(hi);
      const double mass = normal::mass(lo, hi);
      const double first = plo - phi;
      const double second = mass + lo * plo - hi * phi;
      acc.m0 += w * mass;
      acc.mu += w * u * mass;
      acc.muu += w * u * u * mass;
      acc.mv += w * first;
      acc.muv += w * u * first;
      acc.mvv += w * second;
    }
  }
}

// Standard-normal moments over a convex polygon given in (u, v).
Accum polygon_moments(const std::vector<Vec2>& poly) {
  Accum acc;
  const std::size_t m = poly.size();
  if (m < 3) return acc;
  std::vector<double> us(m);
  for (std::size_t k = 0; k < m; ++k) us[k] = poly[k].x;
  std::sort(us.begin(), us.end());
  us.erase(std::unique(us.begin(), us.end()), us.end());
  for (std::size_t s = 0; s + 1 < us.size(); ++s) {
    const double ua = us[s], ub = us[s + 1];
    if (!(ub - ua > 1e-14)) continue;
    const double um = 0.5 * (ua + ub);
    // The two edges crossing the vertical line u = um.
    double best_lo = INFINITY, best_hi = -INFINITY;
    std::size_t e_lo = m, e_hi = m;
    for (std::size_t k = 0; k < m; ++k) {
      const Vec2 p = poly[k], q = poly[(k + 1) % m];
      if ((p.x - um) * (q.x - um) > 0.0 || p.x == q.x) continue;
      const double v = p.y + (um - p.x) / (q.x - p.x) * (q.y - p.y);
      if (v < best_lo) best_lo = v, e_lo = k;
      if (v > best_hi) best_hi = v, e_hi = k;
    }
    if (e_lo == m || e_hi == m || e_lo == e_hi) continue;
    auto at = [&](std::size_t k, double u) {
      const Vec2 p = poly[k], q = poly[(k + 1) % m];
      return p.y + (u - p.x) / (q.x - p.x) * (q.y - p.y);
    };
    integrate_strip(ua, ub, at(e_lo, ua), at(e_lo, ub), at(e_hi, ua), at(e_hi, ub), acc);
  }
  return acc;
}

double gaussian_density(Vec2 p, Vec2 sigma) {
  return normal::pdf(p.x / sigma.x) * normal::pdf(p.y / sigma.y) / (sigma.x * sigma.y);
}

// \int_edge (x - a)(x - b)^T rho ds as a row-major 2x2 block.
std::array<double, 4> edge_outer(Vec2 p, Vec2 q, Vec2 a, Vec2 b, Vec2 sigma) {
  std::array<double, 4> r{};
  const double len = std::hypot(q.x - p.x, q.y - p.y);
  if (len == 0.0) return r;
  const double std_len = std::hypot((q.x - p.x) / sigma.x, (q.y - p.y) / sigma.y);
  const int pieces = std::max(1, static_cast<int>(std::ceil(std_len / kPieceWidth)));
  const auto& nd = nodes();
  for (int s = 0; s < pieces; ++s) {
    const double t0 = static_cast<double>(s) / pieces;
    const double half = 0.5 / pieces;
    for (int k = 0; k < kOrder; ++k) {
      const double t = t0 + half + half * nd.x[k];
      const Vec2 x{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
      const double w = half * nd.w[k] * len * gaussian_density(x, sigma);
      const double ax = x.x - a.x, ay = x.y - a.y, bx = x.x - b.x, by = x.y - b.y;
      r[0] += w * ax * bx;
      r[1] += w * ax * by;
      r[2] += w * ay * bx;
      r[3] += w * ay * by;
    }
  }
  return r;
}

Vec2 pt(std::span<const double> points, std::size_t i) { return {points[2 * i], points[2 * i + 1]}; }

}  // namespace

std::vector<Cell> voronoi_cells(std::span<const double> points, Vec2 half) {
  const std::size_t n = points.size() / 2;
  std::vector<Cell> cells(n);
  std::vector<std::size_t> order(n);
  std::vector<double> dist2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 c = pt(points, i);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 o = pt(points, j);
      dist2[j] = (o.x - c.x) * (o.x - c.x) + (o.y - c.y) * (o.y - c.y);
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist2[a] < dist2[b] || (dist2[a] == dist2[b] && a < b);
    });
    Cell cell = box_cell(half);
    for (std::size_t j : order) {
      if (j == i) continue;
      double reach2 = 0.0;
      for (const Vec2& v : cell.verts)
        reach2 = std::max(reach2, (v.x - c.x) * (v.x - c.x) + (v.y - c.y) * (v.y - c.y));
      if (dist2[j] > 4.0 * reach2 * (1.0 + 1e-12)) break;
      const Vec2 o = pt(points, j);
      if (dist2[j] == 0.0) throw DomainError("coincident codewords");
      const Vec2 a{o.x - c.x, o.y - c.y};
      const double b = 0.5 * ((o.x * o.x + o.y * o.y) - (c.x * c.x + c.y * c.y));
      clip(cell, a, b, static_cast<long>(j));
      if (cell.verts.empty()) break;
    }
    cells[i] = std::move(cell);
  }
  return cells;
}

Moments cell_moments(const Cell& cell, Vec2 sigma) {
  std::vector<Vec2> uv(cell.verts.size());
  for (std::size_t k = 0; k < uv.size(); ++k)
    uv[k] = {cell.verts[k].x / sigma.x, cell.verts[k].y / sigma.y};
  const Accum a = polygon_moments(uv);
  Moments m;
  m.mass = a.m0;
  m.mx = sigma.x * a.mu;
  m.my = sigma.y * a.mv;
  m.mxx = sigma.x * sigma.x * a.muu;
  m.mxy = sigma.x * sigma.y * a.muv;
  m.myy = sigma.y * sigma.y * a.mvv;
  return m;
}

Analysis analyze(std::span<const double> points, Vec2 sigma) {
  Analysis a;
  const std::size_t n = points.size() / 2;
  a.cells = voronoi_cells(points, {kBoxSigmas * sigma.x, kBoxSigmas * sigma.y});
  a.moments.resize(n);
  a.cell_distortion.resize(n);
  a.gradient.resize(2 * n);
  double g2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Moments m = cell_moments(a.cells[i], sigma);
    const Vec2 c = pt(points, i);
    a.moments[i] = m;
    a.cell_distortion[i] = m.mxx + m.myy - 2.0 * (c.x * m.mx + c.y * m.my) + (c.x * c.x + c.y * c.y) * m.mass;
    a.distortion += a.cell_distortion[i];
    a.gradient[2 * i] = 2.0 * (m.mass * c.x - m.mx);
    a.gradient[2 * i + 1] = 2.0 * (m.mass * c.y - m.my);
    g2 += a.gradient[2 * i] * a.gradient[2 * i] + a.gradient[2 * i + 1] * a.gradient[2 * i + 1];
  }
  a.grad_norm = std::sqrt(g2);
  return a;
}

std::array<double, 3> error_covariance(std::span<const double> points, const Analysis& a) {
  std::array<double, 3> e{};
  for (std::size_t i = 0; i < a.moments.size(); ++i) {
    const Moments& m = a.moments[i];
    const Vec2 c = pt(points, i);
    e[0] += m.mxx - 2.0 * c.x * m.mx + c.x * c.x * m.mass;
    e[1] += m.mxy - c.x * m.my - c.y * m.mx + c.x * c.y * m.mass;
    e[2] += m.myy - 2.0 * c.y * m.my + c.y * c.y * m.mass;
  }
  return e;
}

namespace {

// Newton step -H^{-1} g with the exact Hessian of the distortion; empty when
// the Hessian is not positive definite.
std::vector<double> newton_step(std::span<const double> points, const Analysis& a, Vec2 sigma,
                                double shift) {
  const std::size_t n = points.size() / 2;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 16);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 ci = pt(points, i);
    double dxx = 2.0 * a.moments[i].mass, dxy = 0.0, dyy = 2.0 * a.moments[i].mass;
    const Cell& cell = a.cells[i];
    const std::size_t m = cell.verts.size();
    for (std::size_t k = 0; k < m; ++k) {
      const long j = cell.owner[k];
      if (j < 0) continue;
      const Vec2 cj = pt(points, static_cast<std::size_t>(j));
      const Vec2 p = cell.verts[k], q = cell.verts[(k + 1) % m];
      const double scale = 2.0 / std::hypot(cj.x - ci.x, cj.y - ci.y);
      const auto self = edge_outer(p, q, ci, ci, sigma);
      dxx -= scale * self[0];
      dxy -= scale * self[1];
      dyy -= scale * self[3];
      const auto cross = edge_outer(p, q, ci, cj, sigma);
      const auto ii = static_cast<int>(2 * i), jj = static_cast<int>(2 * j);
      trip.emplace_back(ii, jj, scale * cross[0]);
      trip.emplace_back(ii, jj + 1, scale * cross[1]);
      trip.emplace_back(ii + 1, jj, scale * cross[2]);
      trip.emplace_back(ii + 1, jj + 1, scale * cross[3]);
    }
    const auto ii = static_cast<int>(2 * i);
    trip.emplace_back(ii, ii, dxx);
    trip.emplace_back(ii, ii + 1, dxy);
    trip.emplace_back(ii + 1, ii, dxy);
    trip.emplace_back(ii + 1, ii + 1, dyy);
  }
  const auto dim = static_cast<Eigen::Index>(2 * n);
  Eigen::SparseMatrix<double> h(dim, dim);
  h.setFromTriplets(trip.begin(), trip.end());
  // Symmetrize away quadrature round-off.
  Eigen::SparseMatrix<double> ht = h.transpose();
  h = 0.5 * (h + ht);
  if (shift > 0.0) {
    double top = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) top = std::max(top, h.coeff(k, k));
    for (Eigen::Index k = 0; k < dim; ++k) h.coeffRef(k, k) += shift * top;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
  if (solver.info() != Eigen::Success) return {};
  if ((solver.vectorD().array() <= 0.0).any()) return {};
  Eigen::Map<const Eigen::VectorXd> g(a.gradient.data(), dim);
  Eigen::VectorXd step = solver.solve(-g);
  if (solver.info() != Eigen::Success || !step.allFinite()) return {};
  return {step.data(), step.data() + dim};
}

std::vector<double> lloyd_step(const Analysis& a) {
  std::vector<double> next(2 * a.moments.size());
  for (std::size_t i = 0; i < a.moments.size(); ++i) {
    next[2 * i] = a.moments[i].mx / a.moments[i].mass;
    next[2 * i + 1] = a.moments[i].my / a.moments[i].mass;
  }
  return next;
}

}  // namespace

Optimized optimize(std::vector<double> init, Vec2 sigma, const OptimizeOptions& opts) {
  Optimized out;
  out.points = std::move(init);
  Analysis a = analyze(out.points, sigma);
  int it = 0;
  for (; it < opts.max_iterations && a.grad_norm > opts.tol; ++it) {
    bool moved = false;
    // Plain Newton first; on an indefinite Hessian, shifted (damped) steps.
    for (double shift : {0.0, 1e-3, 1e-2, 1e-1}) {
      if (moved || a.grad_norm >= opts.newton_below) break;
      const auto step = newton_step(out.points, a, sigma, shift);
      if (!step.empty()) {
        std::vector<double> trial(out.points);
        for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += step[k];
        Analysis ta = analyze(trial, sigma);
        const bool lower = ta.distortion < a.distortion - 1e-15 * a.distortion;
        const bool flatter = ta.grad_norm < a.grad_norm && ta.distortion <= a.distortion * (1 + 1e-13);
        if (lower || flatter) {
          out.points.swap(trial);
          a = std::move(ta);
          moved = true;
        }
      }
    }
    if (moved) continue;
    out.points = lloyd_step(a);
    a = analyze(out.points, sigma);
  }
  out.distortion = a.distortion;
  out.grad_norm = a.grad_norm;
  out.iterations = it;
  return out;
}

std::vector<double> split_worst(std::span<const double> points, Vec2 sigma) {
  const Analysis a = analyze(points, sigma);
  const auto worst = static_cast<std::size_t>(
      std::max_element(a.cell_distortion.begin(), a.cell_distortion.end()) - a.cell_distortion.begin());
  // Principal axis of the worst cell's error covariance.
  const Moments& m = a.moments[worst];
  const Vec2 c = pt(points, worst);
  const double exx = (m.mxx - 2.0 * c.x * m.mx + c.x * c.x * m.mass) / m.mass;
  const double exy = (m.mxy - c.x * m.my - c.y * m.mx + c.x * c.y * m.mass) / m.mass;
  const double eyy = (m.myy - 2.0 * c.y * m.my + c.y * c.y * m.mass) / m.mass;
  const double tr = exx + eyy;
  const double det = exx * eyy - exy * exy;
  const double big = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  Vec2 axis = std::abs(exy) > 1e-300 ? Vec2{big - eyy, exy} : (exx >= eyy ? Vec2{1, 0} : Vec2{0, 1});
  const double len = std::hypot(axis.x, axis.y);
  const double r = 0.5 * std::sqrt(big);
  axis = {axis.x / len * r, axis.y / len * r};
  std::vector<double> init(points.begin(), points.end());
  init[2 * worst] = c.x - axis.x;
  init[2 * worst + 1] = c.y - axis.y;
  init.push_back(c.x + axis.x);
  init.push_back(c.y + axis.y);
  return init;
}

std::vector<Optimized> optimize_chain(Vec2 sigma, std::size_t max_size, const OptimizeOptions& opts) {
  std::vector<Optimized> chain;
  if (max_size == 0) return chain;
  chain.push_back(optimize({0.0, 0.0}, sigma, opts));
  while (chain.size() < max_size) chain.push_back(optimize(split_worst(chain.back().points, sigma), sigma, opts));
  return chain;
}

}  // namespace fq::planar
