// End-to-end acceptance checks; prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fq/asympt.hpp"
#include "fq/designs.hpp"
#include "fq/error.hpp"
#include "fq/pathspace.hpp"
#include "fq/quant1d.hpp"
#include "fq/rng.hpp"
#include "fq/store.hpp"
#include "fq/text.hpp"

using namespace fq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const Spectrum& bm() {
  static const Spectrum s = Spectrum::of(ProcessModel::brownian(1.0));
  return s;
}

BlockTables& tables() {
  static BlockTables t(bm(), "bm-T1");
  return t;
}

const std::vector<std::size_t> kSizes{1, 5, 10, 50, 100, 500, 1000, 5000, 10000, 100000};

// Published reference distortions, same order as kSizes.
const std::vector<double> kScalarRef{0.5000, 0.1271, 0.0984, 0.0616, 0.0513,
                                     0.0387, 0.0352, 0.0286, 0.0264, 0.0213};
const std::vector<double> kPlanarRef{0.5000, 0.1271, 0.0921, 0.0580, 0.0492, 0.0372, 0.0339};
const std::vector<double> kStandardRef{0.5000, 0.1271, 0.0984, 0.0616, 0.0513, 0.0387, 0.0350};
const std::vector<std::vector<std::size_t>> kScalarPlans{
    {}, {5}, {5, 2}, {12, 4}, {12, 4, 2}, {16, 5, 3, 2}, {23, 7, 3, 2},
    {26, 8, 4, 3, 2}, {26, 8, 4, 3, 2, 2}, {34, 10, 6, 4, 3, 2, 2}};

std::string fmt(double v, int digits = 5) { return format_fixed(v, digits); }

double scalar_plan_distortion(const std::vector<std::size_t>& sizes) {
  auto& tab = ScalarQuantizerTable::shared();
  double v = bm().tail(sizes.size());
  for (std::size_t j = 0; j < sizes.size(); ++j) v += bm().lambda(j + 1) * tab.distortion(sizes[j]);
  return v;
}

Outcome scalar_table() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{true, ""};
  double worst = 0.0;
  for (std::size_t i = 0; i < kSizes.size(); ++i) {
    const Allocation a = allocate_scalar(kSizes[i], bm());
    worst = std::max(worst, std::abs(a.distortion - kScalarRef[i]));
    if (std::abs(a.distortion - kScalarRef[i]) > 5e-4) o.pass = false;
    if (a.distortion > scalar_plan_distortion(kScalarPlans[i]) + 1e-15) {
      o.pass = false;
      o.detail += " n=" + std::to_string(kSizes[i]) + " worse than reference plan;";
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 120.0) o.pass = false;
  o.detail += " max |diff| " + fmt(worst, 6) + ", " + fmt(secs, 1) + " s";
  return o;
}

Outcome planar_table() {
  Outcome o{true, ""};
  double worst = 0.0, worst_grad = 0.0;
  for (std::size_t i = 0; i < kPlanarRef.size(); ++i) {
    const Allocation a = allocate_blocks(kSizes[i], 2, Design::II, tables());
    worst = std::max(worst, std::abs(a.distortion - kPlanarRef[i]));
    const auto offsets = a.plan.offsets();
    for (std::size_t b = 0; b < a.plan.blocks(); ++b) {
      if (a.plan.lengths[b] != 2 || a.plan.sizes[b] == 1) continue;
      const auto& e = tables().entry(Design::II, offsets[b], 2, a.plan.sizes[b]);
      worst_grad = std::max(worst_grad, e.grad_norm);
    }
  }
  o.pass = worst <= 1e-3 && worst_grad <= 1e-8;
  o.detail = " max |diff| " + fmt(worst, 6) + ", max planar grad " + format_real(worst_grad);
  return o;
}

Outcome standard_table() {
  Outcome o{true, ""};
  double worst = 0.0;
  for (std::size_t i = 0; i < kStandardRef.size(); ++i) {
    const Allocation a = allocate_blocks(kSizes[i], 3, Design::III, tables());
    worst = std::max(worst, std::abs(a.distortion - kStandardRef[i]));
    o.detail += " " + std::to_string(kSizes[i]) + ":" + fmt(a.distortion) + "+-" + format_real(a.std_error);
  }
  o.pass = worst <= 1.5e-3;
  o.detail += "; max |diff| " + fmt(worst, 6);
  return o;
}

Outcome single_quantizer() {
  constexpr std::uint64_t kSeed = 1;
  const std::vector<std::size_t> ns{10, 50, 100};
  const std::vector<double> ref{0.0921, 0.0558, 0.0475};
  Outcome o{true, " seed " + std::to_string(kSeed) + ";"};
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const std::size_t d = dstar_shift_rule(ns[i]);
    const auto r = design1_codebook(ns[i], bm(), d, PipelineParams{}, kSeed);
    const double rel = r.report.value / ref[i] - 1.0;
    if (std::abs(rel) > 0.03) o.pass = false;
    o.detail += " n=" + std::to_string(ns[i]) + " d=" + std::to_string(d) + " " + fmt(r.report.value) + " (" +
                fmt(100.0 * rel, 2) + "%)";
  }
  return o;
}

Outcome ordering() {
  Outcome o{true, ""};
  for (std::size_t n : kSizes) {
    const double ii = allocate_blocks(n, 2, Design::II, tables()).distortion;
    const double iii = allocate_blocks(n, 3, Design::III, tables()).distortion;
    const double iv = allocate_scalar(n, bm()).distortion;
    if (!(ii <= iii && iii <= iv)) {
      o.pass = false;
      o.detail += " n=" + std::to_string(n) + " " + fmt(ii, 6) + "/" + fmt(iii, 6) + "/" + fmt(iv, 6);
    }
  }
  if (o.pass) o.detail = " holds at all " + std::to_string(kSizes.size()) + " sizes";
  return o;
}

Outcome rate_curve() {
  const std::string cmd = std::string(FQ_CLI_PATH) + " rate --design 2 --lmax 2 --n 1000,10000,100000";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {false, " cannot run " + cmd};
  std::string csv;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) csv += buf;
  if (pclose(pipe) != 0) return {false, " rate command failed"};
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  if (line != "n,logn_times_dist") return {false, " unexpected header '" + line + "'"};
  std::vector<double> v;
  while (std::getline(in, line)) v.push_back(std::stod(line.substr(line.find(',') + 1)));
  if (v.size() != 3) return {false, " expected three rows"};
  const bool in_band = v[2] >= 0.20 && v[2] <= 0.26;
  const bool decreasing = v[1] < v[0] && v[2] < v[1];
  return {in_band && decreasing, " values " + fmt(v[0]) + ", " + fmt(v[1]) + ", " + fmt(v[2]) +
                                     (in_band ? "; in band" : "; outside band") +
                                     (decreasing ? ", decreasing" : ", not decreasing")};
}

Outcome scalar_consistency() {
  const double v = bm().lambda(1) * ScalarQuantizerTable::shared().distortion(5) + bm().tail(1);
  return {std::abs(v - 0.1271) <= 2e-4, " " + fmt(v, 6)};
}

Outcome scalar_constant() {
  const double q = estimate_CQ(1, 256).q_est;
  const double target = std::numbers::pi * std::sqrt(3.0) / 2.0;
  return {std::abs(q / target - 1.0) <= 0.02, " " + fmt(q) + " vs " + fmt(target)};
}

PathQuantizer scalar_path_quantizer(std::size_t n) {
  return {compose_product(make_product(allocate_scalar(n, bm()), nullptr)), 1.0, PathBasis::BrownianKL};
}

Outcome isometry() {
  const PathSimulation sim{1000, 10'000};
  const auto rep = path_distortion(scalar_path_quantizer(10), 100'000, 42, sim);
  // Paths carry the first sim.modes coordinates only.
  const double coord = allocate_scalar(10, bm()).distortion - bm_tail(sim.modes, 1.0);
  const double tol = 3.0 * *rep.std_error + 1e-4;
  return {std::abs(rep.value - coord) <= tol,
          " path " + fmt(rep.value, 6) + " +- " + format_real(*rep.std_error) + ", coordinates " + fmt(coord, 6)};
}

Outcome gradient_check() {
  SequentialNormals r(7, 1000, 1);
  std::vector<double> c;
  for (int k = 0; k < 8; ++k) c.push_back(r.next()[0]);
  const Codebook cb(2, c);
  const WeightedNormal w = WeightedNormal::from_spectrum(bm(), 0, 2);
  const std::size_t samples = 1'000'000;
  const std::uint64_t seed = 5;
  const auto g = gradient_nd(cb, w, samples, seed);
  const auto mc = EvaluationMethod::monte_carlo(samples, seed);
  const double h = 1e-6;
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t k = 0; k < 8; ++k) {
    Codebook up = cb, dn = cb;
    up.coords[k] += h;
    dn.coords[k] -= h;
    const double fd = (distortion_nd(up, w, mc).value - distortion_nd(dn, w, mc).value) / (2.0 * h);
    const double an = w.lambdas[k % 2] * g.grad[k];
    diff2 += (fd - an) * (fd - an);
    norm2 += fd * fd;
  }
  const double rel = std::sqrt(diff2 / norm2);
  return {rel < 1e-3, " relative error " + format_real(rel)};
}

Outcome nystrom() {
  const auto bm_grid = nystrom_spectrum(ProcessModel::brownian(1.0), 2000);
  double worst_bm = 0.0;
  for (std::size_t j = 1; j <= 5; ++j)
    worst_bm = std::max(worst_bm, std::abs(bm_grid[j - 1] / bm_eigenvalue(j, 1.0) - 1.0));
  const auto rl = ProcessModel::riemann_liouville(1.0, 1.0);
  const auto rl_grid = nystrom_spectrum(rl, 1000);
  const Spectrum rl_spec = Spectrum::of(rl);
  double worst_rl = 0.0;
  for (std::size_t j = 50; j <= 100; ++j)
    worst_rl = std::max(worst_rl, std::abs(rl_grid[j - 1] / rl_spec.lambda(j) - 1.0));
  return {worst_bm <= 5e-3 && worst_rl <= 0.05,
          " BM j<=5 max rel " + format_real(worst_bm) + ", RL rho=1 j=50..100 max rel " + fmt(worst_rl, 4)};
}

Outcome cubature_sanity() {
  const auto path = std::filesystem::temp_directory_path() / "fq-acceptance-n10.txt";
  const Allocation a = allocate_scalar(10, bm());
  CodebookFile f;
  f.design = "IV";
  f.codebook = compose_product(make_product(a, nullptr));
  f.distortion = a.distortion;
  const std::size_t m = 1'000'000;
  f.weights = estimate_weights({f.codebook, 1.0, PathBasis::BrownianKL}, m, 99).probs;
  save_codebook(f, path);
  const CodebookFile g = load_codebook(path);
  const PathQuantizer pq{g.codebook, g.process.horizon, PathBasis::BrownianKL};
  const auto& w = *g.weights;

  auto values = [&](const PathFunctional& psi) {
    std::vector<double> v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      std::vector<double> one(w.size(), 0.0);
      one[i] = 1.0;
      v[i] = cubature(pq, one, psi);
    }
    return v;
  };
  auto sigma = [&](const std::vector<double>& v) {
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mean += w[i] * v[i], second += w[i] * v[i] * v[i];
    return std::sqrt(std::max(0.0, second - mean * mean) / static_cast<double>(m));
  };

  const double one = cubature(pq, w, builtin_functional("one"));
  const auto lin = builtin_functional("integral");
  const double linear = cubature(pq, w, lin);
  const double s_lin = sigma(values(lin));
  const auto sq = builtin_functional("l2norm2");
  const double energy = cubature(pq, w, sq);
  const double s_sq = sigma(values(sq));
  const double target = bm().trace() - g.distortion;
  const bool pass = std::abs(one - 1.0) <= 1e-15 && std::abs(linear) <= 3.0 * s_lin &&
                    std::abs(energy - target) <= 3.0 * s_sq;
  return {pass, " one-1 " + format_real(one - 1.0) + ", linear " + format_real(linear) + " (3 sigma " +
                    format_real(3.0 * s_lin) + "), |x|^2 " + fmt(energy, 6) + " vs " + fmt(target, 6)};
}

Outcome persistence() {
  std::mt19937_64 gen(77);
  const auto path = std::filesystem::temp_directory_path() / "fq-acceptance-roundtrip.txt";
  std::size_t identical = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::normal_distribution<double> normal;
    const std::size_t d = 1 + static_cast<std::size_t>(trial) % 9, n = 1 + gen() % 30;
    CodebookFile f;
    f.process = ProcessModel::brownian(0.5 + static_cast<double>(trial) / 7.0);
    f.codebook.dim = d;
    for (std::size_t i = 0; i < n * d; ++i) f.codebook.coords.push_back(normal(gen) * std::exp(normal(gen) * 5.0));
    f.codebook.meta.seed = gen();
    f.distortion = std::abs(normal(gen));
    if (trial % 2 == 0) {
      std::vector<double> w(n, 1.0 / static_cast<double>(n));
      f.weights = w;
      // Keep the sum within the file's tolerance for any n.
      double s = 0.0;
      for (double x : w) s += x;
      if (std::abs(s - 1.0) > 1e-12) f.weights.reset();
    }
    save_codebook(f, path);
    const CodebookFile g = load_codebook(path);
    if (g.codebook.coords == f.codebook.coords && g.codebook.dim == d && g.weights == f.weights &&
        g.distortion == f.distortion && g.codebook.meta.seed == f.codebook.meta.seed &&
        g.process.horizon == f.process.horizon)
      ++identical;
  }

  const std::string good =
      "fq-codebook 1\nprocess bm\nhorizon 1\ndesign IV\nn 1\nd 1\nseed 0\ngrad_norm -1\ndistortion 0.5\npoints\n0\n";
  struct Corruption {
    std::string from, to;
    std::size_t line;
  };
  const std::vector<Corruption> cases{{"fq-codebook 1", "fq-codebook", 1}, {"process bm", "process xy", 2},
                                      {"horizon 1", "horizon -1", 3},      {"n 1", "n x", 5},
                                      {"d 1", "dims 1", 6},                {"seed 0", "seed", 7}};
  std::size_t named = 0;
  for (const auto& c : cases) {
    std::string text = "\n" + good;
    text.replace(text.find("\n" + c.from + "\n") + 1, c.from.size(), c.to);
    text.erase(0, 1);
    try {
      parse_codebook(text);
    } catch (const ParseError& e) {
      if (e.line() == c.line && std::string(e.what()).find("line " + std::to_string(c.line)) != std::string::npos)
        ++named;
    }
  }
  bool version_rejected = false;
  try {
    parse_codebook("fq-codebook 2\n" + good.substr(good.find('\n') + 1));
  } catch (const UnsupportedVersion& e) {
    version_rejected = e.line() == 1;
  }
  return {identical == 100 && named == cases.size() && version_rejected,
          " " + std::to_string(identical) + "/100 identical, " + std::to_string(named) + "/" +
              std::to_string(cases.size()) + " corruptions named, version check " +
              (version_rejected ? "ok" : "missing")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scalar product design reference distortions", scalar_table},
      {"planar block design reference distortions", planar_table},
      {"standard block design reference distortions", standard_table},
      {"single quantizer reference distortions", single_quantizer},
      {"design ordering", ordering},
      {"rate constant curve", rate_curve},
      {"five-point scalar consistency", scalar_consistency},
      {"scalar high-resolution constant", scalar_constant},
      {"path space isometry", isometry},
      {"gradient against finite differences", gradient_check},
      {"Nystrom oracle", nystrom},
      {"cubature sanity", cubature_sanity},
      {"codebook persistence", persistence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string(" threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ":" << o.detail
              << " [" << format_fixed(secs, 1) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
