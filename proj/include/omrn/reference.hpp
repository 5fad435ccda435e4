#pragma once

#include "omrn/config.hpp"
#include "omrn/data.hpp"
#include "omrn/params.hpp"
#include "omrn/relation.hpp"

// Serial reference implementations of the kernels that the main library
// parallelizes or algebraically refactors, plus independent oracles used by
// the tests.  Everything here favors the most literal formulation over speed.
namespace omrn::ref {

// Box IoU by rasterization: counts cells of size `cell` whose centers fall
// inside either box over the joint bounding rectangle.
double box_iou_raster(const BoundingBox& a, const BoundingBox& b, double cell);

// Temporal IoU by explicit frame-set counting (ascending frame walk).
double temporal_iou_sets(const Segment& a, const Segment& b);

// Tube overlap by explicit frame-set counting; per-frame overlaps use the
// library box_iou, the tube logic is independent.
double viou_sets(const Segment& pred, const std::vector<BoundingBox>& pred_boxes,
                 const Segment& gt, const std::vector<BoundingBox>& gt_boxes);

// Serial, exhaustive region pooling (same semantics as pool_regions).
template <typename T>
void pool_regions_serial(const VideoSample& s, const AggregationConfig& cfg, Tensor<T>& pooled);

// Matching distributions computed the literal way: build the concatenated
// vector [r; s; r*s; r-s] and apply the full [d x 4d] matrix per region.
// Reads trace.modulated, fills trace.match_tanh / match_logits / dist.
template <typename T>
void match_concat(const Tensor<T>& objects, const ModelParams<T>& p, const ModelDims& dims,
                  RelationTrace<T>& trace);

// Relation reasoning with no shared projections: every (main, aux) pair
// recomputes its three matrix-vector products.  Reads trace.modulated and
// trace.dist, fills trace.rel_tanh / rel_attn / fused_pre / fused.
template <typename T>
void relate_literal(const Tensor<T>& relgeo, const ModelParams<T>& p, const ModelDims& dims,
                    RelationTrace<T>& trace);

}  // namespace omrn::ref
