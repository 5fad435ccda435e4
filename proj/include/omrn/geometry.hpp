#pragma once

#include <vector>

#include "omrn/tensor.hpp"

namespace omrn {

// Axis-aligned box in pixel coordinates, stored as center plus size.
struct BoundingBox {
  double x = 0;  // center x
  double y = 0;  // center y
  double w = 0;  // width,  must be > 0
  double h = 0;  // height, must be > 0
};

// Inclusive frame interval with 1-based indices: [s, e] covers e - s + 1 frames.
struct Segment {
  int s = 1;
  int e = 1;

  int length() const { return e - s + 1; }
};

// Relative geometry encoding between a main box and an auxiliary box:
// offsets normalized by the auxiliary size, log-ratio scales.
struct RelGeometry {
  double dx = 0;  // (main.x - aux.x) / aux.w
  double dy = 0;  // (main.y - aux.y) / aux.h
  double dw = 0;  // log(main.w / aux.w)
  double dh = 0;  // log(main.h / aux.h)
};

// Intersection-over-union of two boxes.  Throws ValidationError on
// non-positive width/height.
double box_iou(const BoundingBox& a, const BoundingBox& b);

// Relative geometry of `main` with respect to `aux` (see RelGeometry).
RelGeometry rel_geometry(const BoundingBox& main, const BoundingBox& aux);

// Temporal IoU of two inclusive frame intervals.  Throws ValidationError if
// either interval has e < s.
double temporal_iou(const Segment& a, const Segment& b);

// Spatio-temporal tube overlap: mean box IoU over the frame intersection,
// normalized by the size of the frame union.  `pred_boxes` aligns with
// pred.s..pred.e, `gt_boxes` with gt.s..gt.e; lengths must match the segments.
double viou(const Segment& pred, const std::vector<BoundingBox>& pred_boxes, const Segment& gt,
            const std::vector<BoundingBox>& gt_boxes);

}  // namespace omrn
