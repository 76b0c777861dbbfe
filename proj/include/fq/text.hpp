#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fq {

// Shortest decimal text that round-trips to the same double (never uses the
// locale; '.' is the only decimal separator).
std::string format_real(double v);
// 17 significant digits, the archival form of stored codebooks.
std::string format_real17(double v);
// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

std::vector<std::string_view> split_fields(std::string_view line);
double parse_real(std::string_view field, std::size_t line);
std::size_t parse_count(std::string_view field, std::size_t line);
std::uint64_t parse_u64(std::string_view field, std::size_t line);

// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace fq
