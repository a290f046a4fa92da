#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlnmem/cstln.hpp"
#include "tlnmem/dynamics.hpp"
#include "tlnmem/memory.hpp"

// Dataset ingestion, the corruption model, and artifact persistence.  File
// formats: IDX (big-endian, magic-tagged) for image/label data, a checksummed
// JSON-header-plus-binary container for memory models, and plain CSV for
// trajectories.

namespace tlnmem {

struct DataIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadMagicError : DataIoError {
  using DataIoError::DataIoError;
};

struct TruncatedFileError : DataIoError {
  TruncatedFileError(const std::string& what, std::size_t at)
      : DataIoError(what), offset(at) {}
  std::size_t offset = 0;  // byte position where the read ran out
};

struct CountMismatchError : DataIoError {
  using DataIoError::DataIoError;
};

struct VersionError : DataIoError {
  using DataIoError::DataIoError;
};

struct ChecksumError : DataIoError {
  using DataIoError::DataIoError;
};

enum class PatternSource { Idx, Synthetic };

struct PatternSet {
  std::vector<Eigen::VectorXd> patterns;
  std::vector<int> labels;  // empty when no label file was given
  PatternSource source = PatternSource::Synthetic;

  int count() const { return static_cast<int>(patterns.size()); }
  int dim() const { return patterns.empty() ? 0 : static_cast<int>(patterns[0].size()); }
};

// Reads an IDX unsigned-byte image file (magic 0x00000803, then big-endian
// count/rows/cols) and optionally the matching label file (magic 0x00000801).
// Pixels are scaled to [0, 1]; unless raw_scale is set, each image is then
// normalized to unit length.  Label and image counts must agree.
PatternSet load_idx(const std::string& images_path, const std::string& labels_path = "",
                    bool raw_scale = false);

// Deterministic pseudorandom unit-norm patterns with pairwise cosine
// similarity below 0.5, enforced by rejection.  Throws DataIoError when
// 10000 draws cannot satisfy the spacing (d too small for count).
PatternSet synthetic_patterns(int count, int d, std::uint64_t seed);

// p plus a perturbation drawn uniformly from the sphere of the given radius.
Eigen::VectorXd corrupt(const Eigen::VectorXd& p, double radius, std::uint64_t seed);

// 28x28 grayscale stand-ins for handwritten digits: a shared centre blob
// plus one distinct blob per class on a surrounding ring, with seeded jitter.
// Pairwise cosine similarity of the loaded patterns lands well inside
// (0, s_th), like a small digit corpus.
std::vector<std::vector<std::uint8_t>> blob_digit_images(int count, std::uint64_t seed);

// IDX writers for fixtures and exported datasets.
void write_idx_images(const std::string& path,
                      const std::vector<std::vector<std::uint8_t>>& images, int rows,
                      int cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// IEEE CRC-32 (the zlib/PNG polynomial).
std::uint32_t crc32(const void* data, std::size_t len);

// Model container: "TLNM" magic, little-endian u32 header length, JSON
// header (format tag, version, n, d, chain parameters, counts), raw
// little-endian doubles for W_E and W_D plus the registry records, and a
// trailing CRC-32 over header and payload.  Writes are atomic
// (temp-then-rename); loads verify the checksum before decoding.
void save_model(const std::string& path, const MemoryModel& model,
                const CstlnParams& params);

struct LoadedModel {
  MemoryModel model;
  CstlnParams params;
};

LoadedModel load_model(const std::string& path);

// Trajectory CSV: header `t,x1..xn` plus one column per auxiliary channel,
// then one row per sample.  Values are printed with 17 significant digits so
// a write/read/write cycle is byte-identical.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace tlnmem
