#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <vector>

namespace fq {

// Strictly increasing quantization levels of the real line.
struct ScalarCodebook {
  std::vector<double> points;
  std::size_t size() const { return points.size(); }
};

struct ScalarQuantizer {
  ScalarCodebook codebook;
  double distortion = 0.0;
  // sup_i |dD/dx_i| at the returned codebook.
  double residual = 0.0;
  int newton_steps = 0;
};

// L2-optimal n-quantizer of N(0,1). Throws ConvergenceError after 200
// Newton steps without reaching the stationarity tolerance.
ScalarQuantizer optimal_scalar_quantizer(std::size_t n);

// E min_i (Z - x_i)^2 for Z ~ N(0,1); points must be strictly increasing.
double scalar_distortion(std::span<const double> points);
// P(Z in cell_i).
std::vector<double> scalar_cell_weights(std::span<const double> points);
// dD/dx_i = 2 (x_i P_i - E[Z; cell_i]).
std::vector<double> scalar_gradient(std::span<const double> points);
// E[Z | cell_i].
std::vector<double> scalar_cell_means(std::span<const double> points);

// Lazily grown cache of optimal scalar quantizers, keyed by size.
//
// The file form is one line per size: `n distortion x_1 ... x_n`, written
// with 17 significant digits.
class ScalarQuantizerTable {
 public:
  const ScalarQuantizer& get(std::size_t n);
  // Sizes above kKeepPoints only keep their distortion.
  double distortion(std::size_t n);
  static constexpr std::size_t kKeepPoints = 4096;
  // Computes every size in [1, n_max] not yet present.
  void fill(std::size_t n_max);

  void save(const std::filesystem::path& path) const;
  // Merges entries from `path`; returns false when the file does not exist.
  bool load(const std::filesystem::path& path);

  // Process-wide instance; loads/stores `scalar_table.txt` under the
  // directory named by FQ_CACHE_DIR when that variable is set.
  static ScalarQuantizerTable& shared();

 private:
  mutable std::mutex mu_;
  std::map<std::size_t, ScalarQuantizer> entries_;
  std::map<std::size_t, double> large_;
};

}  // namespace fq
