// fq: build, evaluate and tabulate functional quantizers.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fq/designs.hpp"
#include "fq/error.hpp"
#include "fq/pathspace.hpp"
#include "fq/store.hpp"
#include "fq/text.hpp"

using namespace fq;

namespace {

struct Options {
  int design = 4;
  std::vector<std::size_t> n;
  std::string process = "bm";
  double horizon = 1.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> lmax;
  std::optional<std::size_t> d;
  std::string in, out, csv;
  std::optional<int> precision;
  std::string method;
  std::size_t samples = 1'000'000;
  std::string functional = "one";
  std::size_t jmax = 20;
  std::size_t nystrom = 0;
};

// Distinguishes a usage problem (exit 2) from a numerical one (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t need_seed(const Options& o, const char* what) {
  if (!o.seed) throw UsageError(std::string(what) + " is stochastic and needs --seed");
  return *o.seed;
}

ProcessModel model_of(const Options& o) {
  try {
    return parse_process(o.process, o.horizon);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

std::string cache_key(const ProcessModel& m) {
  std::string key = process_tag(m) + "-T" + format_real(m.horizon);
  for (char& c : key)
    if (c == ':') c = '-';
  return key;
}

std::size_t default_lmax(Design d) { return d == Design::II ? 2 : 3; }

Design design_of(const Options& o) {
  try {
    return parse_design(o.design);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

std::size_t single_n(const Options& o) {
  if (o.n.size() != 1) throw UsageError("this command takes exactly one --n");
  return o.n.front();
}

struct Row {
  std::size_t n = 0;
  Design design = Design::IV;
  double distortion = 0.0;
  std::string plan;
  Codebook codebook;
};

Row design_row(const Options& o, const ProcessModel& model, const Spectrum& spec, std::optional<BlockTables>& tables,
               std::size_t n, Design design, bool want_codebook) {
  if (n == 0) throw UsageError("--n must be positive");
  Row r;
  r.n = n;
  r.design = design;
  if (design == Design::I) {
    const std::size_t d = o.d.value_or(dstar_shift_rule(n));
    const auto res = design1_codebook(n, spec, d, PipelineParams{}, need_seed(o, "design 1"));
    r.distortion = res.report.value;
    r.plan = "d=" + std::to_string(d);
    r.codebook = res.codebook;
    return r;
  }
  Allocation alloc;
  if (design == Design::IV) {
    alloc = allocate_scalar(n, spec);
    if (want_codebook) r.codebook = compose_product(make_product(alloc, nullptr));
  } else {
    if (!tables) tables.emplace(spec, cache_key(model));
    alloc = allocate_blocks(n, o.lmax.value_or(default_lmax(design)), design, *tables);
    if (want_codebook) r.codebook = compose_product(make_product(alloc, &*tables));
  }
  r.distortion = alloc.distortion;
  r.plan = alloc.plan.describe();
  return r;
}

void emit(const Options& o, const std::string& text) {
  if (o.csv.empty()) {
    std::cout << text;
    return;
  }
  write_file_atomic(o.csv, text);
}

int run_build(const Options& o) {
  if (o.out.empty()) throw UsageError("build needs --out");
  const ProcessModel model = model_of(o);
  const Spectrum spec = Spectrum::of(model);
  std::optional<BlockTables> tables;
  const Design design = design_of(o);
  Row r = design_row(o, model, spec, tables, single_n(o), design, true);
  CodebookFile f;
  f.process = model;
  f.design = design_tag(design);
  f.codebook = std::move(r.codebook);
  f.codebook.meta.seed = design == Design::I ? *o.seed : 0;
  f.distortion = r.distortion;
  save_codebook(f, o.out);
  std::cout << "wrote " << o.out << ": n=" << f.codebook.size() << " d=" << f.codebook.dim << " plan " << r.plan
            << " distortion " << format_real(r.distortion) << '\n';
  return 0;
}

std::string number(const Options& o, double v) {
  return o.precision ? format_fixed(v, *o.precision) : format_real(v);
}

int run_distortion(const Options& o) {
  const CodebookFile f = load_codebook(o.in);
  const Spectrum spec = Spectrum::of(f.process);
  const std::size_t d = f.codebook.dim;
  const std::string method = o.method.empty() ? (d <= 2 ? "quadrature" : "mc") : o.method;
  DistortionReport rep;
  if (method == "quadrature") {
    rep = distortion_nd(f.codebook, WeightedNormal::from_spectrum(spec, 0, d), EvaluationMethod::quadrature());
    rep.value += spec.tail(d);
  } else if (method == "mc") {
    rep = distortion_nd(f.codebook, WeightedNormal::from_spectrum(spec, 0, d),
                        EvaluationMethod::monte_carlo(o.samples, need_seed(o, "mc")));
    rep.value += spec.tail(d);
  } else if (method == "path") {
    if (f.process.kind != ProcessKind::BrownianMotion) throw Unsupported("path simulation needs process bm");
    rep = path_distortion(PathQuantizer{f.codebook, f.process.horizon, PathBasis::BrownianKL}, o.samples,
                          need_seed(o, "path"));
  } else {
    throw UsageError("--method must be quadrature, mc or path");
  }
  std::ostringstream os;
  os << "method,distortion,std_error\n"
     << method << ',' << number(o, rep.value) << ',' << (rep.std_error ? number(o, *rep.std_error) : "") << '\n';
  emit(o, os.str());
  return 0;
}

int run_weights(const Options& o) {
  CodebookFile f = load_codebook(o.in);
  if (f.process.kind != ProcessKind::BrownianMotion) throw Unsupported("companion weights need process bm");
  const auto w = estimate_weights(PathQuantizer{f.codebook, f.process.horizon, PathBasis::BrownianKL}, o.samples,
                                  need_seed(o, "weights"));
  f.weights = w.probs;
  const std::string out = o.out.empty() ? o.in : o.out;
  save_codebook(f, out);
  std::cout << "wrote " << out << ": " << w.probs.size() << " weights from " << w.samples << " samples\n";
  return 0;
}

int run_cubature(const Options& o) {
  const CodebookFile f = load_codebook(o.in);
  if (!f.weights) throw UsageError(o.in + " has no weights section; run `weights` first");
  PathFunctional psi;
  try {
    psi = builtin_functional(o.functional);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const PathQuantizer pq{f.codebook, f.process.horizon, PathBasis::BrownianKL};
  if (f.process.kind != ProcessKind::BrownianMotion) throw Unsupported("cubature needs process bm");
  std::cout << number(o, cubature(pq, *f.weights, psi)) << '\n';
  return 0;
}

int run_table(const Options& o) {
  if (o.n.empty()) throw UsageError("table needs --n");
  const ProcessModel model = model_of(o);
  const Spectrum spec = Spectrum::of(model);
  const Design design = design_of(o);
  std::optional<BlockTables> tables;
  const int digits = o.precision.value_or(4);
  std::ostringstream os;
  os << "n,design,distortion,plan\n";
  for (std::size_t n : o.n) {
    const Row r = design_row(o, model, spec, tables, n, design, false);
    os << n << ',' << design_tag(design) << ',' << format_fixed(r.distortion, digits) << ',' << r.plan << '\n';
  }
  emit(o, os.str());
  return 0;
}

int run_rate(const Options& o) {
  if (o.n.empty()) throw UsageError("rate needs --n");
  const ProcessModel model = model_of(o);
  const Spectrum spec = Spectrum::of(model);
  const Design design = design_of(o);
  std::optional<BlockTables> tables;
  const int digits = o.precision.value_or(5);
  std::ostringstream os;
  os << "n,logn_times_dist\n";
  for (std::size_t n : o.n) {
    const Row r = design_row(o, model, spec, tables, n, design, false);
    os << n << ',' << format_fixed(std::log(static_cast<double>(n)) * r.distortion, digits) << '\n';
  }
  emit(o, os.str());
  return 0;
}

int run_spectrum(const Options& o) {
  const ProcessModel model = model_of(o);
  const Spectrum spec = Spectrum::of(model);
  std::vector<double> grid;
  if (o.nystrom > 0) grid = nystrom_spectrum(model, o.nystrom);
  std::ostringstream os;
  os << "j,lambda" << (grid.empty() ? "" : ",nystrom") << '\n';
  for (std::size_t j = 1; j <= o.jmax; ++j) {
    os << j << ',' << format_real17(spec.lambda(j));
    if (!grid.empty()) os << ',' << (j <= grid.size() ? format_real17(grid[j - 1]) : "");
    os << '\n';
  }
  emit(o, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional quantization of Gaussian processes"};
  app.require_subcommand(1);
  Options o;

  auto add_process = [&](CLI::App* c) {
    c->add_option("--process", o.process, "bm, rl:<rho> or fibm:<beta>")->capture_default_str();
    c->add_option("--T", o.horizon, "time horizon")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto add_design = [&](CLI::App* c) {
    c->add_option("--design", o.design, "1, 2, 3 or 4")->check(CLI::Range(1, 4))->capture_default_str();
    c->add_option("--lmax", o.lmax, "largest block length (designs 2 and 3)")->check(CLI::Range(1, 3));
    c->add_option("--d", o.d, "dimension of design 1 (default max(1, floor(log n)))")->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "random seed"); };
  auto add_n = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--n", o.n, "codebook size(s), comma separated")->delimiter(',');
    if (required) opt->required();
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--csv", o.csv, "write CSV here instead of stdout");
    c->add_option("--precision", o.precision, "decimals in printed values")->check(CLI::Range(0, 17));
  };

  auto* build = app.add_subcommand("build", "build a quantizer and store it");
  add_design(build), add_process(build), add_seed(build), add_n(build, true);
  build->add_option("--out", o.out, "codebook file")->required();

  auto* dist = app.add_subcommand("distortion", "evaluate a stored quantizer");
  dist->add_option("--in", o.in, "codebook file")->required()->check(CLI::ExistingFile);
  dist->add_option("--method", o.method, "quadrature (d <= 2), mc or path");
  dist->add_option("--samples", o.samples, "Monte Carlo samples")->capture_default_str();
  add_seed(dist), add_out(dist);

  auto* weights = app.add_subcommand("weights", "estimate Voronoi cell probabilities");
  weights->add_option("--in", o.in, "codebook file")->required()->check(CLI::ExistingFile);
  weights->add_option("--out", o.out, "output file (default: overwrite --in)");
  weights->add_option("--samples", o.samples, "Monte Carlo samples")->capture_default_str();
  add_seed(weights);

  auto* cub = app.add_subcommand("cubature", "sum_g w_g Psi(g) over a weighted quantizer");
  cub->add_option("--in", o.in, "codebook file with weights")->required()->check(CLI::ExistingFile);
  cub->add_option("--functional", o.functional, "one, integral, sup, l2norm2 or terminal")->capture_default_str();
  cub->add_option("--precision", o.precision, "decimals in the printed value")->check(CLI::Range(0, 17));

  auto* table = app.add_subcommand("table", "distortion table, CSV n,design,distortion,plan");
  add_design(table), add_process(table), add_seed(table), add_n(table, true), add_out(table);

  auto* rate = app.add_subcommand("rate", "log n times the distortion, CSV n,logn_times_dist");
  add_design(rate), add_process(rate), add_seed(rate), add_n(rate, true), add_out(rate);
  rate->preparse_callback([&](std::size_t) { o.design = 2; });

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues, CSV j,lambda");
  add_process(spectrum), add_out(spectrum);
  spectrum->add_option("--jmax", o.jmax, "number of eigenvalues")->check(CLI::PositiveNumber)->capture_default_str();
  spectrum->add_option("--nystrom", o.nystrom, "also print a Nystrom estimate on this many grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (build->parsed()) return run_build(o);
    if (dist->parsed()) return run_distortion(o);
    if (weights->parsed()) return run_weights(o);
    if (cub->parsed()) return run_cubature(o);
    if (table->parsed()) return run_table(o);
    if (rate->parsed()) return run_rate(o);
    if (spectrum->parsed()) return run_spectrum(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
