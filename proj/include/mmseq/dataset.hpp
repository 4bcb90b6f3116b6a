#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mmseq/classifier.hpp"
#include "mmseq/linalg.hpp"
#include "mmseq/metrics.hpp"

namespace mmseq {

// One video: per-frame visual/audio feature rows plus their column means.
struct FrameExample {
  std::string video_id;
  LabelSet labels;
  Matrix visual;  // T x D_v
  Matrix audio;   // T x D_a
  Vec mean_visual;
  Vec mean_audio;
};

struct DatasetSpec {
  std::size_t num_videos = 2500;
  double train_fraction = 0.8;  // 2000 train / 500 test at the default size
  std::size_t num_classes = 10;
  std::size_t frames = 20;
  std::size_t visual_dim = 16;
  std::size_t audio_dim = 4;
  double labels_per_video = 2.0;
  double signal_strength = 3.0;
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  std::vector<FrameExample> train;
  std::vector<FrameExample> test;
};

// Planted-signal corpus. Every class owns a cross-modal pattern direction
// and a class-specific frame-position band; classes sharing a direction
// differ only in where the pattern appears, so per-video feature means do
// not separate them while the frame order does. signal_strength 0 makes
// features independent of the labels.
SyntheticDataset generate_synthetic(const DatasetSpec& spec);

struct DatasetHeader {
  std::size_t num_classes = 0;
  std::size_t frames = 0;
  std::size_t visual_dim = 0;
  std::size_t audio_dim = 0;
};

enum class FileFormat { text, binary };

// Text records are one video per line with '|'-separated sections and
// shortest-roundtrip float printing; the binary format is length-prefixed
// with raw doubles. Both roundtrip bit-exactly; the loader sniffs the
// format from the leading bytes.
void write_dataset(const std::vector<FrameExample>& examples, const DatasetHeader& header,
                   const std::string& path, FileFormat format = FileFormat::text);
std::vector<FrameExample> load_dataset(const std::string& path, DatasetHeader* header = nullptr);

GroundTruth ground_truth_of(const std::vector<FrameExample>& examples);

// Submission-shaped CSV: header `VideoId,LabelConfidencePairs`, one row per
// video, pairs in descending confidence with 6-decimal confidences.
void write_predictions(const PredictionSet& preds, const std::string& path);
PredictionSet read_predictions(const std::string& path);

// Nearest multiple of 1e-6, the resolution of the prediction CSV. Scores
// quantized this way survive a CSV roundtrip bit-exactly.
double quantize_confidence(double conf);

}  // namespace mmseq
