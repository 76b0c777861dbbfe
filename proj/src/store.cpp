#include "fq/store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "fq/error.hpp"
#include "fq/text.hpp"

namespace fq {

namespace {

constexpr std::string_view kMagic = "fq-codebook";

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what, line);
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : text_(text) {}

  bool done() {
    skip_blank();
    return pos_ >= text_.size();
  }

  // Next non-blank line split into fields.
  std::vector<std::string_view> next(const char* expecting) {
    skip_blank();
    if (pos_ >= text_.size()) fail(line_ + 1, std::string("unexpected end of file, expected ") + expecting);
    const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
    std::string_view line(text_.data() + pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    return split_fields(line);
  }

  std::size_t line() const { return line_; }

 private:
  void skip_blank() {
    while (pos_ < text_.size()) {
      const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
      std::string_view line(text_.data() + pos_, end - pos_);
      if (!split_fields(line).empty()) return;
      pos_ = end + 1;
      ++line_;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::string_view keyed(LineReader& in, std::string_view key) {
  const auto f = in.next(std::string(key).c_str());
  if (f.size() != 2 || f[0] != key)
    fail(in.line(), "expected '" + std::string(key) + " <value>'");
  return f[1];
}

double keyed_real(LineReader& in, std::string_view key) {
  const auto v = keyed(in, key);
  return parse_real(v, in.line());
}

std::size_t keyed_count(LineReader& in, std::string_view key) {
  const auto v = keyed(in, key);
  return parse_count(v, in.line());
}

std::uint64_t keyed_u64(LineReader& in, std::string_view key) {
  const auto v = keyed(in, key);
  return parse_u64(v, in.line());
}

void check_weights(const std::vector<double>& w, std::size_t first_line) {
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0 && w[i] <= 1.0)) fail(first_line + i, "weight outside [0, 1]");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(first_line, "weights sum to " + format_real(sum) + ", not 1");
}

}  // namespace

std::string process_tag(const ProcessModel& model) {
  switch (model.kind) {
    case ProcessKind::BrownianMotion: return "bm";
    case ProcessKind::RiemannLiouville: return "rl:" + format_real(model.param);
    case ProcessKind::FracIntegratedBM: return "fibm:" + format_real(model.param);
  }
  throw DomainError("unknown process kind");
}

ProcessModel parse_process(const std::string& tag, double horizon) {
  auto param = [&](std::size_t skip) {
    const std::string_view v = std::string_view(tag).substr(skip);
    try {
      return parse_real(v, 0);
    } catch (const ParseError&) {
      throw DomainError("bad process parameter in '" + tag + "'");
    }
  };
  ProcessModel m;
  if (tag == "bm")
    m = ProcessModel::brownian(horizon);
  else if (tag.rfind("rl:", 0) == 0)
    m = ProcessModel::riemann_liouville(param(3), horizon);
  else if (tag.rfind("fibm:", 0) == 0)
    m = ProcessModel::frac_integrated(param(5), horizon);
  else
    throw DomainError("unknown process '" + tag + "' (bm, rl:<rho>, fibm:<beta>)");
  m.validate();
  return m;
}

std::string serialize(const CodebookFile& file) {
  const Codebook& cb = file.codebook;
  std::ostringstream os;
  os << kMagic << ' ' << CodebookFile::kVersion << '\n';
  os << "process " << process_tag(file.process) << '\n';
  os << "horizon " << format_real17(file.process.horizon) << '\n';
  os << "design " << file.design << '\n';
  os << "n " << cb.size() << '\n';
  os << "d " << cb.dim << '\n';
  os << "seed " << cb.meta.seed << '\n';
  os << "grad_norm " << format_real17(cb.meta.residual) << '\n';
  os << "distortion " << format_real17(file.distortion) << '\n';
  os << "points\n";
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const auto p = cb.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) os << (k == 0 ? "" : " ") << format_real17(p[k]);
    os << '\n';
  }
  if (file.weights) {
    os << "weights\n";
    for (double w : *file.weights) os << format_real17(w) << '\n';
  }
  return os.str();
}

CodebookFile parse_codebook(const std::string& text) {
  LineReader in(text);
  CodebookFile f;

  const auto head = in.next("header");
  if (head.size() != 2 || head[0] != kMagic) fail(in.line(), "not a codebook file (expected 'fq-codebook <version>')");
  const auto version = parse_u64(head[1], in.line());
  if (version != CodebookFile::kVersion)
    throw UnsupportedVersion("line " + std::to_string(in.line()) + ": unsupported format version " +
                                 std::to_string(version),
                             in.line());

  const std::string process(keyed(in, "process"));
  const std::size_t process_line = in.line();
  const double horizon = keyed_real(in, "horizon");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail(in.line(), "horizon must be positive");
  try {
    f.process = parse_process(process, horizon);
  } catch (const DomainError& e) {
    fail(process_line, e.what());
  }
  f.design = std::string(keyed(in, "design"));
  if (f.design != "I" && f.design != "II" && f.design != "III" && f.design != "IV" && f.design != "none")
    fail(in.line(), "unknown design '" + f.design + "'");
  const std::size_t n = keyed_count(in, "n");
  if (n == 0) fail(in.line(), "n must be positive");
  const std::size_t d = keyed_count(in, "d");
  if (d == 0) fail(in.line(), "d must be positive");
  f.codebook.dim = d;
  f.codebook.meta.design = f.design;
  f.codebook.meta.seed = keyed_u64(in, "seed");
  f.codebook.meta.residual = keyed_real(in, "grad_norm");
  f.distortion = keyed_real(in, "distortion");

  const auto marker = in.next("'points'");
  if (marker.size() != 1 || marker[0] != "points") fail(in.line(), "expected 'points'");
  f.codebook.coords.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = in.next("codebook row");
    if (row.size() == 1 && (row[0] == "weights")) fail(in.line(), "header declares " + std::to_string(n) + " points, body has " + std::to_string(i));
    if (row.size() != d) fail(in.line(), "expected " + std::to_string(d) + " coordinates, found " + std::to_string(row.size()));
    for (auto field : row) {
      const double v = parse_real(field, in.line());
      if (!std::isfinite(v)) fail(in.line(), "coordinate is not finite");
      f.codebook.coords.push_back(v);
    }
  }
  try {
    f.codebook.validate();
  } catch (const DomainError& e) {
    fail(in.line(), e.what());
  }

  if (!in.done()) {
    const auto next = in.next("'weights'");
    if (next.size() != 1 || next[0] != "weights")
      fail(in.line(), next.size() == d ? "header declares " + std::to_string(n) + " points, body has more"
                                      : std::string("expected 'weights' or end of file"));
    const std::size_t first = in.line() + 1;
    std::vector<double> w;
    w.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = in.next("weight");
      if (row.size() != 1) fail(in.line(), "expected one weight per line");
      w.push_back(parse_real(row[0], in.line()));
    }
    check_weights(w, first);
    if (!in.done()) {
      in.next("end of file");
      fail(in.line(), "trailing content after " + std::to_string(n) + " weights");
    }
    f.weights = std::move(w);
  }
  return f;
}

void save_codebook(const CodebookFile& file, const std::filesystem::path& path) {
  file.codebook.validate();
  if (file.weights) {
    if (file.weights->size() != file.codebook.size()) throw DomainError("one weight per codeword required");
    try {
      check_weights(*file.weights, 0);
    } catch (const ParseError&) {
      throw DomainError("weights must be probabilities summing to 1");
    }
  }
  write_file_atomic(path, serialize(file));
}

CodebookFile load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  try {
    return parse_codebook(buf.str());
  } catch (const UnsupportedVersion& e) {
    throw UnsupportedVersion(path.string() + ": " + e.what(), e.line());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace fq
