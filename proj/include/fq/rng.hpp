#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fq {

// Seeded normal sample source addressed by (stream, chunk).
//
// Every chunk of kChunk consecutive samples is drawn from its own
// std::mt19937_64 seeded through std::seed_seq{seed, stream, chunk}, so the
// sample with a given global index never depends on how a loop is split
// across chunks or workers.
class SampleStream {
 public:
  static constexpr std::size_t kChunk = 4096;

  SampleStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  // Fills `out` (rows of `dim` normals) with samples [chunk*kChunk, ...).
  void fill_chunk(std::uint64_t chunk, std::size_t dim, std::span<double> out) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(chunk),
                      static_cast<std::uint32_t>(chunk >> 32), static_cast<std::uint32_t>(dim)};
    std::mt19937_64 gen(seq);
    std::normal_distribution<double> nd;
    for (double& v : out) v = nd(gen);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

// Walks a SampleStream sequentially, one dim-vector at a time.
class SequentialNormals {
 public:
  SequentialNormals(std::uint64_t seed, std::uint64_t stream, std::size_t dim)
      : src_(seed, stream), dim_(dim), buf_(SampleStream::kChunk * dim) {}

  std::span<const double> next() {
    if (pos_ == SampleStream::kChunk) {
      src_.fill_chunk(chunk_++, dim_, buf_);
      pos_ = 0;
    }
    return {buf_.data() + dim_ * pos_++, dim_};
  }

 private:
  SampleStream src_;
  std::size_t dim_;
  std::vector<double> buf_;
  std::uint64_t chunk_ = 0;
  std::size_t pos_ = SampleStream::kChunk;
};

// Stream identifiers, one per consumer, so different procedures seeded with
// the same user seed never share samples.
namespace streams {
inline constexpr std::uint64_t kClvq = 1;
inline constexpr std::uint64_t kLloyd = 2;
inline constexpr std::uint64_t kDistortion = 3;
inline constexpr std::uint64_t kGradient = 4;
inline constexpr std::uint64_t kSplitting = 5;
inline constexpr std::uint64_t kWeights = 6;
inline constexpr std::uint64_t kPaths = 7;

// Sub-stream for repeated invocations (e.g. one per Lloyd round).
constexpr std::uint64_t sub(std::uint64_t stream, std::uint64_t index) {
  return (stream << 40) ^ (index + 1);
}
}  // namespace streams

}  // namespace fq
