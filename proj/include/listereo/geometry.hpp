#ifndef LISTEREO_GEOMETRY_HPP_
#define LISTEREO_GEOMETRY_HPP_

#include <cstdint>
#include <vector>

#include "listereo/ops.hpp"
#include "listereo/tensor.hpp"

namespace listereo {

// Rectified stereo calibration. depth = focal_px * baseline_m / disparity.
struct CameraRig {
  double focal_px = 100.0;
  double baseline_m = 0.28;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double max_depth_m = 100.0;  // depth cap for (near-)zero disparity

  double fb() const { return focal_px * baseline_m; }
  // Disparity at the depth cap; anything below maps to max_depth_m.
  double min_disparity() const { return fb() / max_depth_m; }
  void validate() const {
    check_shape(focal_px > 0 && baseline_m > 0 && width >= 1 && height >= 1 &&
                    max_depth_m > 0,
                "invalid camera rig");
  }
};

// Per-pixel depth in meters plus validity mask. depth > 0 wherever valid,
// depth == 0 wherever invalid. "Sparse" and "dense" are density states of
// this one type.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> depth;   // h*w, row major
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int h, int w)
      : height(h), width(w), depth(std::size_t(h) * w, 0.0),
        valid(std::size_t(h) * w, 0) {}

  std::size_t idx(int y, int x) const { return std::size_t(y) * width + x; }
  std::int64_t valid_count() const {
    std::int64_t n = 0;
    for (auto v : valid) n += v ? 1 : 0;
    return n;
  }
  void set(int y, int x, double d) {
    depth[idx(y, x)] = d;
    valid[idx(y, x)] = 1;
  }
};

// Per-pixel disparity in pixels, in [0, D_max]; 0 doubles as "invalid"
// when derived from a masked depth map.
struct DisparityMap {
  int height = 0;
  int width = 0;
  std::vector<double> disparity;

  DisparityMap() = default;
  DisparityMap(int h, int w)
      : height(h), width(w), disparity(std::size_t(h) * w, 0.0) {}
  std::size_t idx(int y, int x) const { return std::size_t(y) * width + x; }
};

// disparity -> depth with the zero-disparity cap rule: disparity below
// f*B/max_depth maps to max_depth_m and stays valid.
DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig);

// depth -> disparity on valid pixels, 0 on invalid ones.
DisparityMap depth_to_disparity(const DepthMap& depth, const CameraRig& rig);

// Pinhole projection of left-camera-frame points; z <= 0 and out-of-image
// points are dropped, nearest depth wins per pixel.
struct LidarPoint {
  double x, y, z;
};
DepthMap project_lidar(const std::vector<LidarPoint>& points,
                       const CameraRig& rig);

// Keeps round(level_of_sparsity * V) valid pixels, uniformly without
// replacement; deterministic per seed.
DepthMap subsample_depth(const DepthMap& map, double level_of_sparsity,
                         std::uint64_t seed);

// LIDAR-branch preprocessing: valid pixels -> cap - depth, invalid -> 0.
// Creates a buffer gap between valid values and the 0 of empty pixels.
std::vector<double> depth_inversion(const DepthMap& map, double cap_m);

// Differentiable disparity -> depth on tensors, same cap rule.
template <class T>
Tensor<T> disparity_to_depth_tensor(const Tensor<T>& disp,
                                    const CameraRig& rig) {
  const T fb = T(rig.fb());
  const T dmin = T(rig.min_disparity());
  return ops::scale(ops::reciprocal(ops::max_scalar(disp, dmin)), fb);
}

}  // namespace listereo

#endif  // LISTEREO_GEOMETRY_HPP_
