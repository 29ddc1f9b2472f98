#include "handrefine/metrics.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace handrefine {

Points3 SimilarityTransform::apply(const Points3& points) const {
  Points3 out(points.rows(), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.row(i) = (scale * (rotation * Vec3(points.row(i))) + translation).transpose();
  return out;
}

ProcrustesResult procrustes_align(const Points3& source, const Points3& target) {
  const Eigen::Index n = source.rows();
  if (n != target.rows()) throw std::runtime_error("procrustes: size mismatch");
  if (n < 3) throw std::runtime_error("procrustes: need at least 3 points");

  const Vec3 mu_s = source.colwise().mean();
  const Vec3 mu_t = target.colwise().mean();
  const Points3 cs = source.rowwise() - mu_s.transpose();
  const Points3 ct = target.rowwise() - mu_t.transpose();

  const double var_s = cs.squaredNorm() / double(n);
  const Mat3 cov = (ct.transpose() * cs) / double(n);

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.rank() < 2)
    throw std::runtime_error("procrustes: degenerate point configuration");

  Mat3 s_fix = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
    s_fix(2, 2) = -1.0;

  ProcrustesResult result;
  result.transform.rotation = svd.matrixU() * s_fix * svd.matrixV().transpose();
  result.transform.scale =
      (svd.singularValues().asDiagonal() * s_fix).trace() / var_s;
  result.transform.translation =
      mu_t - result.transform.scale * (result.transform.rotation * mu_s);
  result.aligned = result.transform.apply(source);
  return result;
}

double mpve(const Points3& pred, const Points3& gt, bool aligned) {
  if (pred.rows() != gt.rows()) throw std::runtime_error("mpve: size mismatch");
  const Points3 p = aligned ? procrustes_align(pred, gt).aligned : pred;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    sum += (p.row(i) - gt.row(i)).norm();
  return 1000.0 * sum / double(p.rows());
}

double fscore(const Points3& pred, const Points3& gt, double threshold_mm) {
  if (pred.rows() < 1 || gt.rows() < 1)
    throw std::runtime_error("fscore: empty point set");
  const double thresh_m = threshold_mm / 1000.0;

  auto covered = [&](const Points3& a, const Points3& b) {
    int hits = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < b.rows(); ++j)
        best = std::min(best, (a.row(i) - b.row(j)).norm());
      if (best <= thresh_m) ++hits;
    }
    return double(hits) / double(a.rows());
  };

  const double precision = covered(pred, gt);
  const double recall = covered(gt, pred);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double pck_auc(const Points3& pred, const Points3& gt, double max_threshold_mm,
               int steps) {
  if (pred.rows() != gt.rows()) throw std::runtime_error("pck_auc: size mismatch");
  if (steps < 2) throw std::runtime_error("pck_auc: steps must be >= 2");
  VecX errors(pred.rows());
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    errors[i] = 1000.0 * (pred.row(i) - gt.row(i)).norm();

  auto pck = [&](double tau) {
    int hits = 0;
    for (Eigen::Index i = 0; i < errors.size(); ++i)
      if (errors[i] <= tau) ++hits;
    return double(hits) / double(errors.size());
  };

  double auc = 0.0;
  double prev_tau = 0.0, prev_pck = pck(0.0);
  for (int s = 1; s < steps; ++s) {
    const double tau = max_threshold_mm * double(s) / double(steps - 1);
    const double p = pck(tau);
    auc += 0.5 * (p + prev_pck) * (tau - prev_tau);
    prev_tau = tau;
    prev_pck = p;
  }
  return auc / max_threshold_mm;
}

namespace {

void check_masks(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::runtime_error("mask: dimension mismatch");
  if (a.values.size() != size_t(a.width) * a.height ||
      b.values.size() != size_t(b.width) * b.height)
    throw std::runtime_error("mask: malformed mask");
}

}  // namespace

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  check_masks(a, b);
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const bool av = a.values[i] != 0, bv = b.values[i] != 0;
    inter += av && bv;
    uni += av || bv;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

double pixel_accuracy(const BinaryMask& a, const BinaryMask& b) {
  check_masks(a, b);
  size_t agree = 0;
  for (size_t i = 0; i < a.values.size(); ++i)
    agree += (a.values[i] != 0) == (b.values[i] != 0);
  return double(agree) / double(a.values.size());
}

}  // namespace handrefine
