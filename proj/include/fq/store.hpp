#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fq/quantnd.hpp"
#include "fq/spectra.hpp"

namespace fq {

// A stored quantizer of a process in standardized KL coordinates.
//
// Text layout, one item per line:
//
//   fq-codebook 1
//   process bm            (or rl:<rho>, fibm:<beta>)
//   horizon <T>
//   design <I|II|III|IV|none>
//   n <count>
//   d <dim>
//   seed <u64>
//   grad_norm <real>      (negative when unknown)
//   distortion <real>
//   points
//   <n lines of d reals>
//   weights               (optional)
//   <n lines of one real>
//
// Reals use 17 significant digits and '.' as the decimal point.
struct CodebookFile {
  ProcessModel process;
  std::string design = "none";
  Codebook codebook;  // meta.seed and meta.residual mirror seed and grad_norm
  double distortion = 0.0;
  std::optional<std::vector<double>> weights;

  static constexpr int kVersion = 1;
};

// "bm", "rl:<rho>" or "fibm:<beta>".
std::string process_tag(const ProcessModel& model);
// Throws DomainError for anything else.
ProcessModel parse_process(const std::string& tag, double horizon = 1.0);

std::string serialize(const CodebookFile& file);
// Throws ParseError naming the offending line, UnsupportedVersion for an
// unknown format version.
CodebookFile parse_codebook(const std::string& text);

// Validates, then writes through a temporary file and a rename.
void save_codebook(const CodebookFile& file, const std::filesystem::path& path);
// Throws IoError when the file cannot be read.
CodebookFile load_codebook(const std::filesystem::path& path);

}  // namespace fq
