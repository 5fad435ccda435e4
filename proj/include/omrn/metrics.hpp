#pragma once

#include <string>
#include <vector>

#include "omrn/geometry.hpp"

namespace omrn {

// One predicted tube.  The raw candidate segment, offsets and confidence that
// produced the final segment are kept for diagnostics.
struct TubePrediction {
  std::string id;
  Segment segment;                  // refined segment, 1-based inclusive
  std::vector<BoundingBox> boxes;   // one per frame in `segment`
  double confidence = 0.0;
  Segment raw_segment;              // candidate before offset refinement
  double offset_s = 0.0;
  double offset_e = 0.0;
};

struct GroundTruthTube {
  std::string id;
  Segment segment;
  std::vector<BoundingBox> boxes;
};

struct Metrics {
  std::size_t samples = 0;
  double m_tiou = 0.0;
  double m_viou = 0.0;
  double viou_at_03 = 0.0;  // fraction with vIoU strictly above 0.3
  double viou_at_05 = 0.0;  // fraction with vIoU strictly above 0.5
};

// Mean tIoU / vIoU and strict-threshold accuracies over pairs matched by id.
// Throws ValidationError when the id sets differ or a prediction is malformed.
Metrics evaluate(const std::vector<TubePrediction>& preds,
                 const std::vector<GroundTruthTube>& gts);

// JSON serialization of predictions and metrics (schemas in the README).
void write_predictions(const std::string& path, const std::vector<TubePrediction>& preds);
std::vector<TubePrediction> read_predictions(const std::string& path);
void write_metrics(const std::string& path, const Metrics& m);

}  // namespace omrn
