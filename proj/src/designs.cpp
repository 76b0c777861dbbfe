#include "fq/designs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>


#include "fq/error.hpp"
#include "fq/quant1d.hpp"
#include "fq/rng.hpp"
#include "fq/text.hpp"
#include "fq/voronoi2d.hpp"

namespace fq {

namespace {

constexpr std::uint64_t kMaxFlatPoints = 10'000'000;
constexpr std::size_t kCubicFloor = 8;

std::optional<std::filesystem::path> cache_dir() {
  const char* dir = std::getenv("FQ_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return std::filesystem::path(dir);
}

ScalarQuantizerTable& scalars() { return ScalarQuantizerTable::shared(); }

std::vector<double> scalar_points(std::size_t n) {
  if (n <= ScalarQuantizerTable::kKeepPoints) return scalars().get(n).codebook.points;
  return optimal_scalar_quantizer(n).codebook.points;
}

}  // namespace

const char* design_tag(Design d) {
  switch (d) {
    case Design::I: return "I";
    case Design::II: return "II";
    case Design::III: return "III";
    case Design::IV: return "IV";
  }
  return "?";
}

Design parse_design(int number) {
  if (number < 1 || number > 4) throw DomainError("design must be 1, 2, 3 or 4");
  return static_cast<Design>(number);
}

std::size_t BlockPlan::coords() const {
  std::size_t c = 0;
  for (std::size_t l : lengths) c += l;
  return c;
}

std::vector<std::size_t> BlockPlan::offsets() const {
  std::vector<std::size_t> k(lengths.size());
  std::size_t acc = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    k[i] = acc;
    acc += lengths[i];
  }
  return k;
}

std::uint64_t BlockPlan::cardinality() const {
  std::uint64_t p = 1;
  for (std::size_t s : sizes) {
    if (s != 0 && p > std::numeric_limits<std::uint64_t>::max() / s)
      return std::numeric_limits<std::uint64_t>::max();
    p *= s;
  }
  return p;
}

std::string BlockPlan::describe() const {
  if (sizes.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(sizes[i]);
  }
  if (std::any_of(lengths.begin(), lengths.end(), [](std::size_t l) { return l != 1; })) {
    out += " (";
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (i) out += '+';
      out += std::to_string(lengths[i]);
    }
    out += ')';
  }
  return out;
}

Allocation allocate_scalar(std::size_t n, const Spectrum& spec, std::size_t m_max) {
  if (n == 0) throw DomainError("budget must be positive");
  if (m_max < 1) throw DomainError("at least one block must be allowed");
  const std::vector<double> lam = spec.head(m_max);
  std::vector<double> tails(m_max + 1);
  for (std::size_t m = 0; m <= m_max; ++m) tails[m] = spec.tail(m);

  auto& tab = scalars();
  double best = tails[0];
  std::vector<std::size_t> best_sizes, cur;

  // Only the largest size with a given quotient floor(B/s) can be optimal:
  // it has the smallest error and leaves the same budget downstream.
  std::function<void(std::size_t, std::size_t, std::size_t, double)> dfs =
      [&](std::size_t m, std::size_t budget, std::size_t prev, double partial) {
        if (partial + tails[m] < best) {
          best = partial + tails[m];
          best_sizes = cur;
        }
        if (m == m_max || budget < 2) return;
        const std::size_t cap = std::min(prev, budget);
        if (partial + tab.distortion(cap) * tails[m] >= best) return;
        for (std::size_t q = 1;;) {
          const std::size_t s = std::min(cap, budget / q);
          if (s < 2) break;
          cur.push_back(s);
          dfs(m + 1, budget / s, s, partial + lam[m] * tab.distortion(s));
          cur.pop_back();
          q = budget / s + 1;
        }
      };
  dfs(0, n, n, 0.0);

  Allocation a;
  a.plan.design = Design::IV;
  a.plan.sizes = best_sizes;
  a.plan.lengths.assign(best_sizes.size(), 1);
  a.distortion = best;
  return a;
}

// ---------------------------------------------------------------------------
// Standard N(0, I_l) codebooks.

namespace {

struct StandardStore {
  std::mutex mu;
  std::map<std::pair<std::size_t, std::size_t>, StandardEntry> entries;
  bool loaded = false;
};

StandardStore& standard_store() {
  static StandardStore s;
  return s;
}

std::filesystem::path standard_file(std::size_t length) {
  return *cache_dir() / ("standard_l" + std::to_string(length) + ".txt");
}

void save_standard(const StandardStore& st, std::size_t length) {
  if (!cache_dir()) return;
  std::ostringstream os;
  for (const auto& [key, e] : st.entries) {
    if (key.first != length) continue;
    os << length << ' ' << key.second << ' ' << format_real(e.distortion) << ' '
       << format_real(e.std_error) << ' ' << format_real(e.grad_norm);
    for (double v : e.error_cov) os << ' ' << format_real(v);
    for (double v : e.points) os << ' ' << format_real(v);
    os << '\n';
  }
  std::filesystem::create_directories(*cache_dir());
  write_file_atomic(standard_file(length), os.str());
}

void load_standard(StandardStore& st) {
  if (st.loaded) return;
  st.loaded = true;
  if (!cache_dir()) return;
  for (std::size_t length : {2, 3}) {
    std::ifstream in(standard_file(length));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto f = split_fields(line);
      if (f.size() < 5) continue;
      StandardEntry e;
      e.length = parse_count(f[0], lineno);
      const std::size_t size = parse_count(f[1], lineno);
      if (e.length != length || f.size() != 5 + length * length + length * size)
        throw ParseError("standard codebook cache line " + std::to_string(lineno) + " is malformed", lineno);
      e.distortion = parse_real(f[2], lineno);
      e.std_error = parse_real(f[3], lineno);
      e.grad_norm = parse_real(f[4], lineno);
      std::size_t k = 5;
      for (std::size_t i = 0; i < length * length; ++i) e.error_cov.push_back(parse_real(f[k++], lineno));
      for (std::size_t i = 0; i < length * size; ++i) e.points.push_back(parse_real(f[k++], lineno));
      st.entries[{length, size}] = std::move(e);
    }
  }
}

StandardEntry planar_standard(const planar::Optimized& q) {
  StandardEntry e;
  e.length = 2;
  e.points = q.points;
  const auto a = planar::analyze(q.points, {1.0, 1.0});
  const auto cov = planar::error_covariance(q.points, a);
  e.error_cov = {cov[0], cov[1], cov[1], cov[2]};
  e.distortion = a.distortion;
  e.grad_norm = a.grad_norm;
  return e;
}

StandardEntry cubic_standard(std::size_t size, const TableLimits& limits) {
  const auto w = WeightedNormal::standard(3);
  const std::uint64_t seed = limits.cubic_seed + size;
  const PipelineParams params{200'000, 0.5, 60, 200'000};
  Codebook cb = optimize_codebook(w, size, params, seed);
  if (size > 1) cb = lloyd_run(cb, w, 5, 2'000'000, seed ^ 0x5eed);
  StandardEntry e;
  e.length = 3;
  e.points = cb.coords;
  e.grad_norm = cb.meta.residual;
  // Error covariance and distortion on an independent sample.
  const SampleStream src(seed, streams::kDistortion);
  std::vector<double> buf(SampleStream::kChunk * 3);
  std::array<double, 9> acc{};
  double s1 = 0.0, s2 = 0.0;
  const std::size_t total = limits.cubic_eval_samples;
  for (std::uint64_t chunk = 0; chunk * SampleStream::kChunk < total; ++chunk) {
    src.fill_chunk(chunk, 3, buf);
    const std::size_t count = std::min<std::size_t>(SampleStream::kChunk, total - chunk * SampleStream::kChunk);
    for (std::size_t s = 0; s < count; ++s) {
      const double* z = buf.data() + 3 * s;
      const std::size_t i = nearest_index(std::span<const double>(z, 3), cb, w);
      double r[3];
      for (int a = 0; a < 3; ++a) r[a] = z[a] - cb.coords[3 * i + a];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) acc[3 * a + b] += r[a] * r[b];
      const double d2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
      s1 += d2;
      s2 += d2 * d2;
    }
  }
  const double m = static_cast<double>(total);
  for (double& v : acc) v /= m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < a; ++b) acc[3 * a + b] = acc[3 * b + a] = 0.5 * (acc[3 * a + b] + acc[3 * b + a]);
  e.error_cov.assign(acc.begin(), acc.end());
  e.distortion = s1 / m;
  e.std_error = std::sqrt(std::max(0.0, (s2 - s1 * s1 / m) / (m - 1.0)) / m);
  return e;
}

}  // namespace

const StandardEntry& standard_codebook(std::size_t length, std::size_t size, const TableLimits& limits) {
  if (size == 0) throw TableMiss("standard codebook size must be positive");
  auto& st = standard_store();
  std::lock_guard lock(st.mu);
  load_standard(st);
  const auto key = std::make_pair(length, size);
  if (auto it = st.entries.find(key); it != st.entries.end()) return it->second;

  if (length == 1) {
    const auto& q = scalars().get(size);
    StandardEntry e;
    e.length = 1;
    e.points = q.codebook.points;
    e.distortion = q.distortion;
    e.error_cov = {q.distortion};
    e.grad_norm = q.residual;
    return st.entries.emplace(key, std::move(e)).first->second;
  }
  if (length == 2) {
    if (size > limits.standard_planar)
      throw TableMiss("2-D standard codebook of size " + std::to_string(size) + " is not tabulated");
    const auto chain = planar::optimize_chain({1.0, 1.0}, limits.standard_planar);
    for (std::size_t s = 1; s <= chain.size(); ++s)
      st.entries.try_emplace({2, s}, planar_standard(chain[s - 1]));
    save_standard(st, 2);
    return st.entries.at(key);
  }
  if (length == 3) {
    if (size > limits.standard_cubic)
      throw TableMiss("3-D standard codebook of size " + std::to_string(size) + " is not tabulated");
    st.entries.emplace(key, cubic_standard(size, limits));
    save_standard(st, 3);
    return st.entries.at(key);
  }
  throw TableMiss("standard codebooks exist for lengths 1 to 3 only");
}

// ---------------------------------------------------------------------------
// Block tables.

BlockTables::BlockTables(Spectrum spec, std::string cache_key, TableLimits limits)
    : spec_(std::move(spec)), key_(std::move(cache_key)), limits_(limits) {
  load_cache();
}

std::size_t BlockTables::capacity(Design design, std::size_t offset, std::size_t length) const {
  if (length == 0 || offset + length > limits_.max_offset) return 0;
  if (design != Design::II && design != Design::III) return 0;
  if (length == 1) return std::numeric_limits<std::size_t>::max();
  if (design == Design::II && length > 2) return 0;
  if (length > 3) return 0;
  // Geometric-mean variance of the block relative to the leading block.
  double ratio = 1.0;
  for (std::size_t k = 1; k <= length; ++k) ratio *= spec_.lambda(offset + k) / spec_.lambda(k);
  const double g = std::pow(ratio, 1.0 / static_cast<double>(length));
  std::size_t top, floor;
  if (length == 2) {
    top = design == Design::II ? limits_.planar_top : limits_.standard_planar;
    floor = limits_.planar_floor;
  } else {
    top = limits_.standard_cubic;
    floor = kCubicFloor;
  }
  const auto scaled = static_cast<std::size_t>(std::ceil(3.0 * static_cast<double>(top) * g));
  return std::min(top, std::max(floor, scaled));
}

BlockEntry BlockTables::weighted_standard(std::size_t offset, std::size_t length, std::size_t size) {
  const StandardEntry& st = standard_codebook(length, size, limits_);
  std::vector<double> lam(length);
  for (std::size_t k = 0; k < length; ++k) lam[k] = spec_.lambda(offset + k + 1);
  BlockEntry e;
  if (length == 1) {
    e.distortion = lam[0] * st.distortion;
    e.grad_norm = std::sqrt(lam[0]) * st.grad_norm;
    e.points = st.points;
    return e;
  }
  // Coordinate k of the codebook carries variance lambda_k as stored.
  for (std::size_t k = 0; k < length; ++k) e.distortion += lam[k] * st.error_cov[k * length + k];
  e.std_error = *std::max_element(lam.begin(), lam.end()) * st.std_error;
  e.points = st.points;
  return e;
}

void BlockTables::build_planar_chain(std::size_t offset, std::size_t upto) {
  std::size_t have = 0;
  while (have < upto && entries_.count({2, offset, 2, have + 1}) > 0) ++have;
  if (have >= upto) return;
  const planar::Vec2 sigma{std::sqrt(spec_.lambda(offset + 1)), std::sqrt(spec_.lambda(offset + 2))};
  const std::size_t iii_cap = capacity(Design::III, offset, 2);
  // Grow in steps so every size starts from the previous optimum.
  std::vector<double> points;
  if (have == 0) {
    points = {0.0, 0.0};
  } else {
    points = entries_.at({2, offset, 2, have}).points;
    for (std::size_t k = 0; k < points.size(); ++k) points[k] *= k % 2 == 0 ? sigma.x : sigma.y;
  }
  for (std::size_t s = have + 1; s <= upto; ++s) {
    planar::Optimized q = planar::optimize(s == 1 ? points : planar::split_worst(points, sigma), sigma);
    if (s <= iii_cap && s > 1) {
      // Never worse than the weighted standard codebook of Design III.
      const BlockEntry iii = weighted_standard(offset, 2, s);
      if (iii.distortion < q.distortion) {
        std::vector<double> init(iii.points);
        for (std::size_t k = 0; k < init.size(); ++k) init[k] *= k % 2 == 0 ? sigma.x : sigma.y;
        auto alt = planar::optimize(std::move(init), sigma);
        if (alt.distortion < q.distortion) q = std::move(alt);
      }
    }
    // The next size grows from the stored entry, cached or not.
    points = q.points;
    BlockEntry e;
    e.distortion = q.distortion;
    e.grad_norm = q.grad_norm;
    e.points = q.points;
    for (std::size_t k = 0; k < e.points.size(); ++k) e.points[k] /= k % 2 == 0 ? sigma.x : sigma.y;
    entries_[{2, offset, 2, s}] = std::move(e);
  }
  store_cache();
}

const BlockEntry& BlockTables::entry(Design design, std::size_t offset, std::size_t length, std::size_t size) {
  const std::size_t cap = capacity(design, offset, length);
  if (size == 0 || size > cap)
    throw TableMiss(std::string("no table entry for design ") + design_tag(design) + " offset " +
                    std::to_string(offset) + " length " + std::to_string(length) + " size " +
                    std::to_string(size));
  // Length-1 blocks coincide for both designs.
  const int tag = length == 1 ? 0 : static_cast<int>(design);
  const Key key{tag, offset, length, size};
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;

  if (size == 1) {
    BlockEntry e;
    for (std::size_t k = 1; k <= length; ++k) e.distortion += spec_.lambda(offset + k);
    e.grad_norm = 0.0;
    e.points.assign(length, 0.0);
    return entries_.emplace(key, std::move(e)).first->second;
  }
  if (length == 1) {
    BlockEntry e;
    const double lam = spec_.lambda(offset + 1);
    e.distortion = lam * scalars().distortion(size);
    return entries_.emplace(key, std::move(e)).first->second;
  }
  if (design == Design::II) {
    build_planar_chain(offset, size);
    return entries_.at(key);
  }
  return entries_.emplace(key, weighted_standard(offset, length, size)).first->second;
}

void BlockTables::save_table(const std::filesystem::path& path) const {
  std::ostringstream os;
  for (const auto& [key, e] : entries_) {
    const auto& [tag, offset, length, size] = key;
    const int design = tag == 0 ? 2 : tag;
    os << design << ' ' << offset << ' ' << length << ' ' << size << ' ' << format_real(e.distortion)
       << ' ' << format_real(e.std_error) << '\n';
  }
  write_file_atomic(path, os.str());
}

void BlockTables::store_cache() const {
  const auto dir = cache_dir();
  if (!dir || key_.empty()) return;
  std::filesystem::create_directories(*dir);
  std::ostringstream os;
  for (const auto& [key, e] : entries_) {
    const auto& [tag, offset, length, size] = key;
    if (tag != 2) continue;
    os << tag << ' ' << offset << ' ' << length << ' ' << size << ' ' << format_real(e.distortion) << ' '
       << format_real(e.std_error) << ' ' << format_real(e.grad_norm);
    for (double v : e.points) os << ' ' << format_real(v);
    os << '\n';
  }
  write_file_atomic(*dir / ("blocks-" + key_ + ".txt"), os.str());
}

void BlockTables::load_cache() {
  const auto dir = cache_dir();
  if (!dir || key_.empty()) return;
  std::ifstream in(*dir / ("blocks-" + key_ + ".txt"));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split_fields(line);
    if (f.size() < 7) continue;
    const auto tag = static_cast<int>(parse_count(f[0], lineno));
    const std::size_t offset = parse_count(f[1], lineno);
    const std::size_t length = parse_count(f[2], lineno);
    const std::size_t size = parse_count(f[3], lineno);
    if (f.size() != 7 + length * size)
      throw ParseError("block cache line " + std::to_string(lineno) + " is malformed", lineno);
    BlockEntry e;
    e.distortion = parse_real(f[4], lineno);
    e.std_error = parse_real(f[5], lineno);
    e.grad_norm = parse_real(f[6], lineno);
    for (std::size_t k = 0; k < length * size; ++k) e.points.push_back(parse_real(f[7 + k], lineno));
    entries_[{tag, offset, length, size}] = std::move(e);
  }
}

// ---------------------------------------------------------------------------
// Block allocation by dynamic programming over (offset, remaining budget).

Allocation allocate_blocks(std::size_t n, std::size_t l_max, Design design, BlockTables& tables) {
  if (n == 0) throw DomainError("budget must be positive");
  if (l_max == 0) throw DomainError("block length must be positive");
  if (design != Design::II && design != Design::III)
    throw DomainError("block allocation applies to Designs II and III");
  if (design == Design::II && l_max > 2) throw Unsupported("Design II blocks are limited to length 2");
  if (l_max > 3) throw Unsupported("Design III blocks are limited to length 3");

  const Spectrum& spec = tables.spectrum();
  const std::size_t max_offset = tables.limits().max_offset;
  std::vector<double> tails(max_offset + 1);
  for (std::size_t k = 0; k <= max_offset; ++k) tails[k] = spec.tail(k);

  struct Choice {
    double value = 0.0;
    double var = 0.0;
    std::size_t length = 0;  // 0: stop here
    std::size_t size = 0;
  };
  std::map<std::pair<std::size_t, std::size_t>, Choice> memo;
  // Fast access to tabulated block values per (offset, length).
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<double, double>>> cache;
  auto block = [&](std::size_t offset, std::size_t length, std::size_t size) -> std::pair<double, double> {
    if (length == 1) {
      const auto& e = tables.entry(design, offset, 1, size);
      return {e.distortion, 0.0};
    }
    auto& v = cache[{offset, length}];
    if (v.size() < size) {
      const std::size_t old = v.size();
      v.resize(size);
      for (std::size_t s = old + 1; s <= size; ++s) {
        const auto& e = tables.entry(design, offset, length, s);
        v[s - 1] = {e.distortion, e.std_error * e.std_error};
      }
    }
    return v[size - 1];
  };

  std::function<const Choice&(std::size_t, std::size_t)> solve = [&](std::size_t offset,
                                                                     std::size_t budget) -> const Choice& {
    const auto key = std::make_pair(offset, budget);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    Choice best{tails[offset], 0.0, 0, 0};
    auto consider = [&](std::size_t length, std::size_t size) {
      const auto [d, var] = block(offset, length, size);
      if (d >= best.value) return;
      const Choice& rest = solve(offset + length, budget / size);
      if (d + rest.value < best.value) best = {d + rest.value, var + rest.var, length, size};
    };
    if (budget >= 2) {
      for (std::size_t length = 1; length <= l_max; ++length) {
        const std::size_t cap = tables.capacity(design, offset, length);
        if (cap < 2) continue;
        if (length == 1) {
          for (std::size_t q = 1;;) {
            const std::size_t s = budget / q;
            if (s < 2) break;
            consider(1, s);
            q = budget / s + 1;
          }
        } else {
          for (std::size_t s = std::min(cap, budget); s >= 2; --s) consider(length, s);
        }
      }
    }
    return memo.emplace(key, best).first->second;
  };

  const Choice& root = solve(0, n);
  Allocation a;
  a.plan.design = design;
  a.distortion = root.value;
  a.std_error = std::sqrt(root.var);
  std::size_t offset = 0, budget = n;
  for (;;) {
    const Choice& c = memo.at({offset, budget});
    if (c.length == 0) break;
    a.plan.lengths.push_back(c.length);
    a.plan.sizes.push_back(c.size);
    offset += c.length;
    budget /= c.size;
  }
  // Re-add in plan order, as allocate_scalar does, so equal plans give
  // bit-identical values across designs.
  double forward = 0.0;
  const auto offsets = a.plan.offsets();
  for (std::size_t b = 0; b < a.plan.blocks(); ++b)
    forward += tables.distortion(design, offsets[b], a.plan.lengths[b], a.plan.sizes[b]);
  a.distortion = forward + spec.tail(a.plan.coords());
  return a;
}

// ---------------------------------------------------------------------------
// Products.

ProductQuantizer make_product(const Allocation& alloc, BlockTables* tables) {
  ProductQuantizer pq;
  pq.plan = alloc.plan;
  const auto offsets = alloc.plan.offsets();
  for (std::size_t i = 0; i < alloc.plan.blocks(); ++i) {
    const std::size_t l = alloc.plan.lengths[i], s = alloc.plan.sizes[i];
    std::vector<double> pts;
    if (l == 1) {
      pts = s == 1 ? std::vector<double>{0.0} : scalar_points(s);
    } else {
      if (tables == nullptr) throw DomainError("block tables are required for multi-coordinate blocks");
      pts = tables->entry(alloc.plan.design, offsets[i], l, s).points;
    }
    pq.blocks.emplace_back(l, std::move(pts));
  }
  return pq;
}

Codebook compose_product(const ProductQuantizer& pq) {
  const std::uint64_t card = pq.plan.cardinality();
  if (card > kMaxFlatPoints) throw ResourceError("flat codebook would exceed 10^7 points");
  if (pq.blocks.size() != pq.plan.blocks()) throw DomainError("product quantizer is missing blocks");
  const std::size_t dim = std::max<std::size_t>(1, pq.plan.coords());
  Codebook flat(dim, std::vector<double>(card * dim, 0.0));
  flat.meta.design = design_tag(pq.plan.design);
  const auto offsets = pq.plan.offsets();
  // The first block varies slowest.
  std::uint64_t stride = card;
  for (std::size_t b = 0; b < pq.blocks.size(); ++b) {
    const Codebook& blk = pq.blocks[b];
    if (blk.dim != pq.plan.lengths[b] || blk.size() != pq.plan.sizes[b])
      throw DomainError("block codebook does not match the plan");
    stride /= blk.size();
    for (std::uint64_t p = 0; p < card; ++p) {
      const std::size_t i = static_cast<std::size_t>((p / stride) % blk.size());
      for (std::size_t a = 0; a < blk.dim; ++a) flat.coords[p * dim + offsets[b] + a] = blk.coords[i * blk.dim + a];
    }
  }
  return flat;
}

DesignOneResult design1_codebook(std::size_t n, const Spectrum& spec, std::size_t d,
                                 const PipelineParams& params, std::uint64_t seed, std::size_t eval_samples) {
  if (d == 0) throw DomainError("Design I needs d >= 1");
  if (n == 0) throw DomainError("budget must be positive");
  const WeightedNormal w = WeightedNormal::from_spectrum(spec, 0, d);
  DesignOneResult r;
  r.codebook = optimize_codebook(w, n, params, seed);
  r.codebook.meta.design = "I";
  const EvaluationMethod method =
      d <= 2 ? EvaluationMethod::quadrature() : EvaluationMethod::monte_carlo(eval_samples, seed);
  r.report = distortion_nd(r.codebook, w, method);
  r.report.value += spec.tail(d);
  return r;
}

std::size_t dstar_shift_rule(std::size_t n) {
  if (n == 0) throw DomainError("n must be positive");
  const double d = std::floor(std::log(static_cast<double>(n)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(d));
}

BoundValue block_error_bound(const BlockPlan& plan, const Spectrum& spec, const std::vector<double>& block_errors) {
  if (block_errors.size() != plan.blocks()) throw DomainError("one block error per block is required");
  BoundValue b;
  std::size_t l = 1;
  if (!plan.lengths.empty()) {
    l = plan.lengths.front();
    for (std::size_t li : plan.lengths)
      if (li != l) throw DomainError("the bound needs a uniform block length");
  }
  const auto offsets = plan.offsets();
  for (std::size_t i = 0; i < plan.blocks(); ++i) b.value += spec.lambda(offsets[i] + 1) * block_errors[i];
  b.value += spec.tail(plan.coords());
  b.exact = l == 1;
  return b;
}

}  // namespace fq
