#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fq/quantnd.hpp"
#include "fq/spectra.hpp"

namespace fq {

// Design I: one d-dimensional quantizer of the leading coordinates.
// Design II: optimal quantizers of consecutive blocks of N(0, lambda_j).
// Design III: N(0, I_l) quantizers per block, weighted by sqrt(lambda).
// Design IV: scalar product quantizer.
enum class Design { I = 1, II = 2, III = 3, IV = 4 };

const char* design_tag(Design d);  // "I" .. "IV"
Design parse_design(int number);   // 1..4

// Consecutive blocks of the leading coordinates; block i has lengths[i]
// coordinates and sizes[i] codewords.
struct BlockPlan {
  Design design = Design::IV;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> sizes;

  std::size_t blocks() const { return sizes.size(); }
  std::size_t coords() const;
  std::vector<std::size_t> offsets() const;
  // Product of the sizes (1 for the empty plan).
  std::uint64_t cardinality() const;
  // e.g. "23x7x3x2" or "25x36x11 (1+2+3)" when some length differs from 1.
  std::string describe() const;
};

struct Allocation {
  BlockPlan plan;
  double distortion = 0.0;
  // Combined Monte Carlo error of stochastic block entries (0 when exact).
  double std_error = 0.0;
};

// Exhaustive search over nonincreasing scalar sizes n_1 >= ... >= n_m >= 2
// with prod n_j <= n and m <= m_max, minimizing
// sum_j lambda_j e_{n_j}^2(N(0,1)) + sum_{j>m} lambda_j.
Allocation allocate_scalar(std::size_t n, const Spectrum& spec, std::size_t m_max = 12);

// Per-block distortion of ⊗ N(0, lambda_j) over coordinates
// offset+1 .. offset+length, for a quantizer with `size` codewords.
struct BlockEntry {
  double distortion = 0.0;
  double std_error = 0.0;
  double grad_norm = -1.0;
  // Codebook in standardized coordinates (Euclidean / sqrt(lambda)).
  std::vector<double> points;
};

// Optimal (or best found) N(0, I_l) codebooks, l = 1, 2, 3, with their
// error covariances E[(Z - q(Z))(Z - q(Z))^T].
struct StandardEntry {
  std::size_t length = 1;
  std::vector<double> points;
  std::vector<double> error_cov;  // l x l row-major
  double distortion = 0.0;
  double std_error = 0.0;
  double grad_norm = -1.0;
};

struct TableLimits {
  std::size_t max_offset = 24;
  // Largest 2-D block size at offset 0; deeper offsets shrink with the
  // geometric mean of the block variances, never below planar_floor.
  std::size_t planar_top = 400;
  std::size_t planar_floor = 12;
  std::size_t standard_planar = 128;
  std::size_t standard_cubic = 24;
  std::uint64_t cubic_seed = 20'240'601;
  std::size_t cubic_eval_samples = 10'000'000;
};

// Lazily computed block tables for Designs II and III over one spectrum.
//
// With a cache key and FQ_CACHE_DIR set, tables and codebooks persist as
// text under that directory. The distortion table uses lines
// `design offset length size distortion std_error`.
class BlockTables {
 public:
  explicit BlockTables(Spectrum spec, std::string cache_key = {}, TableLimits limits = {});

  const Spectrum& spectrum() const { return spec_; }
  const TableLimits& limits() const { return limits_; }

  // Largest size searched for (design, offset, length); 0 when the block
  // is not tabulated. Length 1 is unbounded.
  std::size_t capacity(Design design, std::size_t offset, std::size_t length) const;

  // Throws TableMiss outside the tabulated range.
  const BlockEntry& entry(Design design, std::size_t offset, std::size_t length, std::size_t size);
  double distortion(Design design, std::size_t offset, std::size_t length, std::size_t size) {
    return entry(design, offset, length, size).distortion;
  }

  // Writes the distortion table of every computed entry.
  void save_table(const std::filesystem::path& path) const;

 private:
  using Key = std::tuple<int, std::size_t, std::size_t, std::size_t>;

  void build_planar_chain(std::size_t offset, std::size_t upto);
  BlockEntry weighted_standard(std::size_t offset, std::size_t length, std::size_t size);
  void load_cache();
  void store_cache() const;

  Spectrum spec_;
  std::string key_;
  TableLimits limits_;
  std::map<Key, BlockEntry> entries_;
};

// Shared N(0, I_l) codebooks; throws TableMiss past the configured caps.
const StandardEntry& standard_codebook(std::size_t length, std::size_t size,
                                       const TableLimits& limits = {});

// Exact search over block lengths <= l_max and tabulated sizes minimizing
// sum_i blockdist_i + tail. Design must be II or III.
Allocation allocate_blocks(std::size_t n, std::size_t l_max, Design design, BlockTables& tables);

struct ProductQuantizer {
  BlockPlan plan;
  // One standardized codebook per block, dim = lengths[i].
  std::vector<Codebook> blocks;
};

ProductQuantizer make_product(const Allocation& alloc, BlockTables* tables);

// Cartesian product in standardized coordinates, dim = plan.coords().
// Throws ResourceError beyond 10^7 points.
Codebook compose_product(const ProductQuantizer& pq);

struct DesignOneResult {
  Codebook codebook;  // standardized, dim d
  DistortionReport report;  // head Monte Carlo estimate + analytic tail
};

DesignOneResult design1_codebook(std::size_t n, const Spectrum& spec, std::size_t d,
                                 const PipelineParams& params, std::uint64_t seed,
                                 std::size_t eval_samples = 1'000'000);

// max(1, floor(log n)).
std::size_t dstar_shift_rule(std::size_t n);

struct BoundValue {
  double value = 0.0;
  bool exact = false;  // equality holds for scalar blocks
};

// sum_i lambda_{offset_i + 1} e_i + tail, for a plan of uniform block length
// l with block_errors[i] = e_{n_i}^2(N(0, I_l)).
BoundValue block_error_bound(const BlockPlan& plan, const Spectrum& spec,
                        const std::vector<double>& block_errors);

}  // namespace fq
