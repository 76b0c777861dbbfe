#include "fq/quant1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "fq/error.hpp"
#include "fq/normal.hpp"
#include "fq/text.hpp"

namespace fq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxNewton = 200;
constexpr double kResidualTol = 1e-12;

void require_sorted(std::span<const double> x) {
  if (x.empty()) throw DomainError("empty scalar codebook");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw DomainError("scalar codebook must be strictly increasing");
}

struct Cell {
  double lo, hi;
  double mass;    // P(lo < Z < hi)
  double first;   // E[Z; cell] = phi(lo) - phi(hi)
  double second;  // E[Z^2; cell]
};

double pdf_or_zero(double x) { return std::isinf(x) ? 0.0 : normal::pdf(x); }
double xpdf_or_zero(double x) { return std::isinf(x) ? 0.0 : x * normal::pdf(x); }

std::vector<Cell> cells_of(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<Cell> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? -kInf : 0.5 * (x[i - 1] + x[i]);
    const double hi = i + 1 == n ? kInf : 0.5 * (x[i] + x[i + 1]);
    const double mass = normal::mass(lo, hi);
    const double first = pdf_or_zero(lo) - pdf_or_zero(hi);
    cells[i] = {lo, hi, mass, first, mass + xpdf_or_zero(lo) - xpdf_or_zero(hi)};
  }
  return cells;
}

std::vector<double> half_gradient(std::span<const double> x, const std::vector<Cell>& cells) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] * cells[i].mass - cells[i].first;
  return g;
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

double two_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

bool strictly_increasing(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) return false;
  return true;
}

// Newton direction for the half gradient; the half Hessian is tridiagonal:
//   H_ii = P_i - (x_{i+1}-x_i)/4 phi(m_i) - (x_i-x_{i-1})/4 phi(m_{i-1}),
//   H_{i,i+1} = -(x_{i+1}-x_i)/4 phi(m_i).
std::vector<double> newton_direction(std::span<const double> x, const std::vector<Cell>& cells,
                                     const std::vector<double>& g) {
  const std::size_t n = x.size();
  std::vector<double> diag(n), off(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = cells[i].mass;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = 0.25 * (x[i + 1] - x[i]) * normal::pdf(cells[i].hi);
    off[i] = -c;
    diag[i] -= c;
    diag[i + 1] -= c;
  }
  // Thomas algorithm.
  std::vector<double> cp(n), dp(n);
  cp[0] = n > 1 ? off[0] / diag[0] : 0.0;
  dp[0] = -g[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double denom = diag[i] - off[i - 1] * cp[i - 1];
    cp[i] = i + 1 < n ? off[i] / denom : 0.0;
    dp[i] = (-g[i] - off[i - 1] * dp[i - 1]) / denom;
  }
  std::vector<double> step(n);
  step[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) step[i] = dp[i] - cp[i] * step[i + 1];
  return step;
}

}  // namespace

double scalar_distortion(std::span<const double> points) {
  require_sorted(points);
  const auto cells = cells_of(points);
  double d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i];
    d += x * x * cells[i].mass - 2.0 * x * cells[i].first + cells[i].second;
  }
  return d;
}

std::vector<double> scalar_cell_weights(std::span<const double> points) {
  require_sorted(points);
  const auto cells = cells_of(points);
  std::vector<double> w(points.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = cells[i].mass;
  return w;
}

std::vector<double> scalar_gradient(std::span<const double> points) {
  require_sorted(points);
  auto g = half_gradient(points, cells_of(points));
  for (double& e : g) e *= 2.0;
  return g;
}

std::vector<double> scalar_cell_means(std::span<const double> points) {
  require_sorted(points);
  const auto cells = cells_of(points);
  std::vector<double> m(points.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = cells[i].first / cells[i].mass;
  return m;
}

ScalarQuantizer optimal_scalar_quantizer(std::size_t n) {
  if (n == 0) throw DomainError("quantizer size must be >= 1");
  ScalarQuantizer out;
  if (n == 1) {
    out.codebook.points = {0.0};
    out.distortion = 1.0;
    return out;
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = normal::quantile((2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));

  auto cells = cells_of(x);
  auto g = half_gradient(x, cells);
  double merit = two_norm(g);
  double last_move = kInf;
  int step = 0;
  std::vector<double> trial(n);
  // Iterate until stationary to tolerance and the iterate has stopped moving.
  for (; step < kMaxNewton; ++step) {
    if (2.0 * sup_norm(g) <= kResidualTol && last_move < 1e-13) break;
    const auto dir = newton_direction(x, cells, g);
    bool accepted = false;
    for (double t = 1.0; t > 1e-4 && !accepted; t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * dir[i];
      if (!strictly_increasing(trial)) continue;
      auto tc = cells_of(trial);
      auto tg = half_gradient(trial, tc);
      const double tm = two_norm(tg);
      if (tm <= merit) {
        last_move = t * sup_norm(dir);
        x.swap(trial);
        cells.swap(tc);
        g.swap(tg);
        merit = tm;
        accepted = true;
      }
    }
    if (accepted) continue;
    if (2.0 * sup_norm(g) <= kResidualTol) break;
    // Lloyd fallback: move every level to its cell mean.
    for (std::size_t i = 0; i < n; ++i) trial[i] = cells[i].first / cells[i].mass;
    last_move = kInf;
    x.swap(trial);
    cells = cells_of(x);
    g = half_gradient(x, cells);
    merit = two_norm(g);
  }
  const double residual = 2.0 * sup_norm(g);
  if (residual > kResidualTol)
    throw ConvergenceError("scalar Newton did not converge for n=" + std::to_string(n), residual);
  // Enforce exact symmetry of the optimum.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double s = 0.5 * (x[n - 1 - i] - x[i]);
    x[i] = -s;
    x[n - 1 - i] = s;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  out.codebook.points = x;
  out.distortion = scalar_distortion(x);
  out.residual = 2.0 * sup_norm(half_gradient(x, cells_of(x)));
  out.newton_steps = step;
  return out;
}

const ScalarQuantizer& ScalarQuantizerTable::get(std::size_t n) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(n);
  if (it == entries_.end()) it = entries_.emplace(n, optimal_scalar_quantizer(n)).first;
  return it->second;
}

double ScalarQuantizerTable::distortion(std::size_t n) {
  if (n <= kKeepPoints) return get(n).distortion;
  std::lock_guard lock(mu_);
  auto it = large_.find(n);
  if (it == large_.end()) it = large_.emplace(n, optimal_scalar_quantizer(n).distortion).first;
  return it->second;
}

void ScalarQuantizerTable::fill(std::size_t n_max) {
  for (std::size_t n = 1; n <= n_max; ++n) get(n);
}

void ScalarQuantizerTable::save(const std::filesystem::path& path) const {
  std::ostringstream os;
  {
    std::lock_guard lock(mu_);
    for (const auto& [n, q] : entries_) {
      os << n << ' ' << format_real(q.distortion);
      for (double x : q.codebook.points) os << ' ' << format_real(x);
      os << '\n';
    }
  }
  write_file_atomic(path, os.str());
}

bool ScalarQuantizerTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  std::size_t lineno = 0;
  std::map<std::size_t, ScalarQuantizer> parsed;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::size_t n = parse_count(fields.at(0), lineno);
    if (fields.size() != n + 2)
      throw ParseError("scalar table line " + std::to_string(lineno) + ": expected " +
                           std::to_string(n + 2) + " fields",
                       lineno);
    ScalarQuantizer q;
    q.distortion = parse_real(fields[1], lineno);
    q.codebook.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) q.codebook.points[i] = parse_real(fields[i + 2], lineno);
    q.residual = sup_norm(scalar_gradient(q.codebook.points));
    parsed.emplace(n, std::move(q));
  }
  std::lock_guard lock(mu_);
  entries_.merge(parsed);
  return true;
}

ScalarQuantizerTable& ScalarQuantizerTable::shared() {
  static ScalarQuantizerTable table;
  static std::once_flag loaded;
  std::call_once(loaded, [] {
    if (const char* dir = std::getenv("FQ_CACHE_DIR"))
      table.load(std::filesystem::path(dir) / "scalar_table.txt");
  });
  return table;
}

}  // namespace fq
