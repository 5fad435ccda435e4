#include "omrn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace omrn {

namespace {

void require_valid(const BoundingBox& b, const char* which) {
  if (!(b.w > 0) || !(b.h > 0))
    throw ValidationError(std::string(which) + ": box width/height must be positive (w=" +
                          std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")");
}

void require_valid(const Segment& s, const char* which) {
  if (s.e < s.s)
    throw ValidationError(std::string(which) + ": segment end precedes start ([" +
                          std::to_string(s.s) + ", " + std::to_string(s.e) + "])");
}

}  // namespace

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a, "box_iou");
  require_valid(b, "box_iou");
  double ax1 = a.x - a.w / 2, ax2 = a.x + a.w / 2;
  double ay1 = a.y - a.h / 2, ay2 = a.y + a.h / 2;
  double bx1 = b.x - b.w / 2, bx2 = b.x + b.w / 2;
  double by1 = b.y - b.h / 2, by2 = b.y + b.h / 2;
  double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
  double ih = std::min(ay2, by2) - std::max(ay1, by1);
  if (iw <= 0 || ih <= 0) return 0.0;
  double inter = iw * ih;
  double uni = a.w * a.h + b.w * b.h - inter;
  return inter / uni;
}

RelGeometry rel_geometry(const BoundingBox& main, const BoundingBox& aux) {
  require_valid(main, "rel_geometry");
  require_valid(aux, "rel_geometry");
  RelGeometry g;
  g.dx = (main.x - aux.x) / aux.w;
  g.dy = (main.y - aux.y) / aux.h;
  g.dw = std::log(main.w / aux.w);
  g.dh = std::log(main.h / aux.h);
  return g;
}

double temporal_iou(const Segment& a, const Segment& b) {
  require_valid(a, "temporal_iou");
  require_valid(b, "temporal_iou");
  int inter = std::min(a.e, b.e) - std::max(a.s, b.s) + 1;
  if (inter < 0) inter = 0;
  int uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double viou(const Segment& pred, const std::vector<BoundingBox>& pred_boxes, const Segment& gt,
            const std::vector<BoundingBox>& gt_boxes) {
  require_valid(pred, "viou");
  require_valid(gt, "viou");
  if (pred_boxes.size() != static_cast<std::size_t>(pred.length()))
    throw ValidationError("viou: prediction box count does not match segment length");
  if (gt_boxes.size() != static_cast<std::size_t>(gt.length()))
    throw ValidationError("viou: ground-truth box count does not match segment length");
  int inter_s = std::max(pred.s, gt.s);
  int inter_e = std::min(pred.e, gt.e);
  int uni = pred.length() + gt.length() - std::max(0, inter_e - inter_s + 1);
  double acc = 0.0;
  for (int n = inter_s; n <= inter_e; ++n)
    acc += box_iou(pred_boxes[static_cast<std::size_t>(n - pred.s)],
                   gt_boxes[static_cast<std::size_t>(n - gt.s)]);
  return acc / static_cast<double>(uni);
}

}  // namespace omrn
