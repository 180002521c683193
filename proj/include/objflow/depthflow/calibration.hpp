#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "objflow/depthflow/types.hpp"
#include "objflow/error.hpp"

namespace objflow {

struct CalibrationOptions {
  // Predicted depths outside [lower, upper] percentiles of the usable pixels are dropped.
  double lower_percentile = 1.0;
  double upper_percentile = 99.0;
};

/// Value at percentile `pct` of sorted values, nearest-rank on index (m - 1) * pct / 100.
inline double percentile_sorted(const std::vector<double>& sorted, double pct, bool round_up) {
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * pct / 100.0;
  const auto idx = static_cast<std::size_t>(round_up ? std::ceil(pos) : std::floor(pos));
  return sorted[std::min(idx, sorted.size() - 1)];
}

/// Pixels used for alignment: caller mask, both depths finite and positive,
/// predicted depth inside the percentile band.
inline PixelMask calibration_pixels(const DepthMap& pred, const DepthMap& ref, const PixelMask& valid,
                                    const CalibrationOptions& opts = {}) {
  if (pred.rows() != ref.rows() || pred.cols() != ref.cols() || valid.rows() != ref.rows() ||
      valid.cols() != ref.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "calibration inputs differ in resolution");
  }
  PixelMask usable = valid && pred.isFinite() && ref.isFinite() && pred > 0.0f && ref > 0.0f;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(usable.count()));
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    for (Eigen::Index c = 0; c < pred.cols(); ++c)
      if (usable(r, c)) values.push_back(pred(r, c));
  if (values.empty()) return usable;
  std::sort(values.begin(), values.end());
  const double lo = percentile_sorted(values, opts.lower_percentile, false);
  const double hi = percentile_sorted(values, opts.upper_percentile, true);
  return usable && pred >= static_cast<float>(lo) && pred <= static_cast<float>(hi);
}

/// Closed-form least squares for (s, b) minimizing sum_p (s pred(p) + b - ref(p))^2
/// over the calibration pixels.
inline ScaleShift calibrate_scale_shift(const DepthMap& pred, const DepthMap& ref, const PixelMask& valid,
                                        const CalibrationOptions& opts = {}) {
  const PixelMask use = calibration_pixels(pred, ref, valid, opts);
  const Eigen::Index m = use.count();
  if (m < 2) {
    std::ostringstream os;
    os << "only " << m << " usable pixels for scale-shift alignment";
    throw Error(ErrorKind::kRankDeficient, os.str());
  }
  // Two passes with centered sums keep the 2x2 solve well conditioned.
  double mean_p = 0.0, mean_r = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    for (Eigen::Index c = 0; c < pred.cols(); ++c)
      if (use(r, c)) {
        mean_p += pred(r, c);
        mean_r += ref(r, c);
      }
  mean_p /= static_cast<double>(m);
  mean_r /= static_cast<double>(m);
  double spp = 0.0, spr = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    for (Eigen::Index c = 0; c < pred.cols(); ++c)
      if (use(r, c)) {
        const double dp = pred(r, c) - mean_p;
        spp += dp * dp;
        spr += dp * (ref(r, c) - mean_r);
      }
  if (!(spp > 1e-12 * static_cast<double>(m) * std::max(1.0, mean_p * mean_p))) {
    throw Error(ErrorKind::kRankDeficient, "predicted depth is constant over the usable pixels");
  }
  const double s = spr / spp;
  const double b = mean_r - s * mean_p;
  if (!(s > 0.0)) {
    std::ostringstream os;
    os << "alignment produced non-positive scale " << s;
    throw Error(ErrorKind::kCalibrationFailure, os.str());
  }
  return {s, b};
}

inline ScaleShift calibrate_scale_shift(const DepthMap& pred, const DepthMap& ref) {
  return calibrate_scale_shift(pred, ref, PixelMask::Constant(ref.rows(), ref.cols(), true));
}

}  // namespace objflow
