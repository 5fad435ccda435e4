#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omrn/geometry.hpp"
#include "omrn/metrics.hpp"
#include "omrn/tensor.hpp"

namespace omrn {

// One annotated video: per-frame region features and boxes, the sentence as
// token ids plus word embeddings, the noun positions (first entry names the
// queried object), and the ground-truth tube.  Frames are 1-based throughout;
// word and region indices are 0-based.
struct VideoSample {
  std::string id;
  int frames = 0;   // N
  int regions = 0;  // K per frame

  Tensor<float> features;    // [N, K, region_dim]
  Tensor<float> boxes;       // [N, K, 4] as (x, y, w, h), center/size
  Tensor<float> embeddings;  // [M, word_dim]
  std::vector<int> words;    // token ids, length M
  std::vector<int> nouns;    // word positions, nouns[0] = queried object

  Segment gt_segment;
  std::vector<BoundingBox> gt_boxes;  // one per frame in gt_segment

  int sentence_len() const { return static_cast<int>(words.size()); }
  int num_objects() const { return static_cast<int>(nouns.size()); }
  BoundingBox box(int n, int k) const;  // n is 1-based, k is 0-based
};

struct DatasetManifest {
  std::string dir;  // directory holding the manifest, base for relative paths
  int region_dim = 0;
  int word_dim = 0;
  std::vector<VideoSample> samples;
};

struct SynthConfig {
  int num_samples = 4;
  int frames = 12;       // N
  int regions = 5;       // K
  int objects = 3;       // T, must be <= regions
  int feature_dim = 64;  // region and word embedding width
  double noise_std = 0.0;
  std::uint64_t seed = 1;
};

// Builds a synthetic dataset in memory.  Each sample plants `objects`
// prototype feature vectors: inside the ground-truth segment exactly one
// region per frame carries the main prototype (plus Gaussian noise of
// `noise_std`) and its box is the ground-truth box; auxiliary prototypes ride
// at a fixed spatial offset from the main box; all remaining slots are
// distractors whose features stay away from the prototypes and whose boxes
// never overlap the ground-truth box.  Identical configs produce identical
// datasets.  Throws ValidationError on objects > regions or non-positive dims.
DatasetManifest generate_synthetic(const SynthConfig& cfg);

// Writes manifest.json plus one tensor file per sample array into `dir`
// (created if needed); paths inside the manifest are relative to it.
void write_dataset(const DatasetManifest& ds, const std::string& dir);

// Loads and validates a dataset.  Validation failures name the sample and
// index involved.
DatasetManifest load_dataset(const std::string& manifest_path);

std::vector<GroundTruthTube> ground_truth_tubes(const DatasetManifest& ds);

}  // namespace omrn
