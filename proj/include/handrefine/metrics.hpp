#pragma once

#include <vector>

#include "handrefine/types.hpp"

namespace handrefine {

struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation{Mat3::Identity()};
  Vec3 translation{Vec3::Zero()};

  Points3 apply(const Points3& points) const;
};

struct ProcrustesResult {
  SimilarityTransform transform;
  Points3 aligned;
};

// Least-squares similarity alignment (Umeyama) of source onto target.
ProcrustesResult procrustes_align(const Points3& source, const Points3& target);

// Mean per-vertex Euclidean distance in millimeters (inputs in meters),
// optionally after Procrustes alignment of pred onto gt.
double mpve(const Points3& pred, const Points3& gt, bool aligned);

// Harmonic mean of precision and recall at a threshold in millimeters.
double fscore(const Points3& pred, const Points3& gt, double threshold_mm);

// AUC of PCK over thresholds [0, max_threshold_mm], trapezoid rule,
// normalized by the threshold range.
double pck_auc(const Points3& pred, const Points3& gt, double max_threshold_mm,
               int steps);

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> values;  // 0 or 1
};

double mask_iou(const BinaryMask& a, const BinaryMask& b);
double pixel_accuracy(const BinaryMask& a, const BinaryMask& b);

}  // namespace handrefine
