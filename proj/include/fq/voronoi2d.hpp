#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

// Exact Voronoi-cell integration for N(0, diag(sigma_x^2, sigma_y^2)) in the
// plane, and the deterministic (Lloyd + Newton) optimizer built on it.
namespace fq::planar {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Convex cell; owner[k] is the codeword across edge verts[k] -> verts[k+1]
// (-1 on the truncation box).
struct Cell {
  std::vector<Vec2> verts;
  std::vector<long> owner;
};

// Voronoi cells of `points` (n x 2, row-major) clipped to the box
// [-half.x, half.x] x [-half.y, half.y].
std::vector<Cell> voronoi_cells(std::span<const double> points, Vec2 half);

// E[f(X); X in cell] for f = 1, x, y, x^2, xy, y^2.
struct Moments {
  double mass = 0.0;
  double mx = 0.0, my = 0.0;
  double mxx = 0.0, mxy = 0.0, myy = 0.0;
};

Moments cell_moments(const Cell& cell, Vec2 sigma);

struct Analysis {
  std::vector<Cell> cells;
  std::vector<Moments> moments;
  std::vector<double> cell_distortion;  // E[|X - c_i|^2; C_i]
  double distortion = 0.0;
  std::vector<double> gradient;  // 2 (P_i c_i - E[X; C_i]), row-major
  double grad_norm = 0.0;
};

Analysis analyze(std::span<const double> points, Vec2 sigma);

// Error covariance E[(X - c(X))(X - c(X))^T] of the Voronoi quantization,
// as {xx, xy, yy}.
std::array<double, 3> error_covariance(std::span<const double> points, const Analysis& a);

struct Optimized {
  std::vector<double> points;
  double distortion = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

struct OptimizeOptions {
  double tol = 1e-8;
  int max_iterations = 20'000;
  // Newton steps are attempted once the gradient norm is below this.
  double newton_below = 1e-1;
};

// Lloyd iterations followed by Newton steps with the exact Hessian.
Optimized optimize(std::vector<double> init, Vec2 sigma, const OptimizeOptions& opts = {});

// `points` plus one codeword: the highest-distortion cell is split along
// its principal error axis.
std::vector<double> split_worst(std::span<const double> points, Vec2 sigma);

// Optimized quantizers of sizes 1..max_size; size k+1 starts from size k
// with its highest-distortion cell split along the cell's principal error
// axis.
std::vector<Optimized> optimize_chain(Vec2 sigma, std::size_t max_size,
                                      const OptimizeOptions& opts = {});

}  // namespace fq::planar
