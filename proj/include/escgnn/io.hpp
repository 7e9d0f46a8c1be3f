#pragma once

#include "escgnn/diffusion_ops.hpp"
#include "escgnn/nn_model.hpp"
#include "escgnn/synthetic_data.hpp"
#include "escgnn/training.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace escgnn::io {

using Magic = std::array<char, 8>;

inline constexpr Magic kRecordMagic{'E', 'S', 'C', 'G', 'R', 'E', 'C', '1'};
inline constexpr Magic kCacheMagic{'E', 'S', 'C', 'G', 'O', 'P', 'S', '1'};
inline constexpr Magic kModelMagic{'E', 'S', 'C', 'G', 'M', 'D', 'L', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class DType : std::uint8_t { F64 = 0, I32 = 1, U8 = 2 };

/// One named, shaped array. Exactly the vector matching `dtype` is used.
struct Array {
  std::string name;
  DType dtype = DType::F64;
  std::vector<std::uint64_t> shape;
  std::vector<double> f64;
  std::vector<std::int32_t> i32;
  std::vector<std::uint8_t> u8;

  std::uint64_t element_count() const;
};

/// A file: 8-byte magic, u32 version, u32 array count, then the arrays.
struct ArrayFile {
  Magic magic{};
  std::uint32_t version = kFormatVersion;
  std::vector<Array> arrays;

  const Array* find(std::string_view name) const;
  const Array& get(std::string_view name) const;  // FormatError when missing

  void add_f64(std::string name, std::vector<std::uint64_t> shape, std::vector<double> data);
  void add_i32(std::string name, std::vector<std::uint64_t> shape, std::vector<std::int32_t> data);
  void add_text(std::string name, std::string_view text);
  void add_matrix(std::string name, const Eigen::MatrixXd& m);  // row-major on disk

  Eigen::MatrixXd matrix(std::string_view name) const;
  std::string text(std::string_view name) const;
};

std::vector<std::uint8_t> encode(const ArrayFile& file);
/// Throws FormatError on a bad magic, version or truncated payload.
ArrayFile decode(std::span<const std::uint8_t> bytes, const Magic& expected);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::vector<std::uint8_t> encode_record(const DatasetRecord& record);
DatasetRecord decode_record(std::span<const std::uint8_t> bytes);

/// Per-graph precomputed operators and scattering features.
struct FeatureCache {
  SparseOperator p;
  std::optional<LocalFrameSet> frames;
  std::optional<BlockSparseOperator> q;
  GraphFeatures features;
};

std::vector<std::uint8_t> encode_cache(const FeatureCache& cache);
FeatureCache decode_cache(std::span<const std::uint8_t> bytes);

/// Builds P, frames, Q and both scattering tensors.
FeatureCache compute_cache(const GeometricGraph& graph, const FeatureConfig& config);

/// Key of a record under a feature configuration: FNV-1a over the encoded
/// record followed by a canonical description of the configuration.
std::uint64_t cache_key(std::span<const std::uint8_t> record_bytes, const FeatureConfig& config);
std::string describe(const FeatureConfig& config);
/// Inverse of describe().
FeatureConfig parse_feature_config(std::string_view text);

struct ModelFile {
  ModelConfig config;
  FeatureConfig features;
  TaskKind task = TaskKind::Diameter;
  int fold = 0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_val_mse = 0.0;
  Eigen::VectorXd params;
  std::vector<ParamBlock> manifest;
};

std::vector<std::uint8_t> encode_model(const ModelFile& model);
/// Throws ConfigMismatch when the stored manifest disagrees with the
/// configuration.
ModelFile decode_model(std::span<const std::uint8_t> bytes);

}  // namespace escgnn::io
