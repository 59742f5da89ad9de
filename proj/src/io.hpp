#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "model.hpp"
#include "space.hpp"
#include "tensor.hpp"

namespace must {

enum class Split { train, val_seen, val_unseen, test_seen, test_unseen };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct Sample {
  int64_t feature_row = -1;
  int32_t state = -1;
  int32_t object = -1;
  Split split = Split::train;
};

// A loaded dataset: precomputed features, labeled samples, the composition
// space, and the frozen word vectors (states first, then objects).
struct DatasetBundle {
  Tensor features;  // [n, feat_dim]; values are exactly representable in f32
  std::vector<Sample> samples;
  CompositionSpace space;
  Tensor word_states;
  Tensor word_objects;

  std::vector<size_t> split_indices(Split s) const;
  int32_t feat_dim() const { return static_cast<int32_t>(features.cols()); }
  int32_t word_dim() const { return static_cast<int32_t>(word_states.cols()); }
};

// MUSTFEAT container: magic, version u32, n u64, dim u32, then n*dim
// little-endian f32 row-major.
void write_float_matrix(const std::filesystem::path& path, const Tensor& m);
Tensor read_float_matrix(const std::filesystem::path& path);

// Bundle directory layout: metadata.txt + features.bin + embeddings.bin.
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);

// MUSTCKPT container: space, model dims, config snapshot, word vectors and
// all parameters as length-prefixed named f64 tensors, integrity-hashed.
void save_checkpoint(const MustModel& model, const std::filesystem::path& path,
                     const std::string& config_text);
MustModel load_checkpoint(const std::filesystem::path& path, std::string* config_text_out = nullptr);

// Eval-time binding check; the checkpoint must have been trained against an
// identical space and feature width.
void check_compat(const MustModel& model, const DatasetBundle& bundle);

}  // namespace must
