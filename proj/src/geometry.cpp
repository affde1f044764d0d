#include "listereo/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "listereo/rng.hpp"

namespace listereo {

DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig) {
  rig.validate();
  DepthMap out(disp.height, disp.width);
  const double fb = rig.fb();
  const double dmin = rig.min_disparity();
  for (std::size_t i = 0; i < disp.disparity.size(); ++i) {
    const double d = disp.disparity[i];
    out.depth[i] = d > dmin ? fb / d : rig.max_depth_m;
    out.valid[i] = 1;
  }
  return out;
}

DisparityMap depth_to_disparity(const DepthMap& depth, const CameraRig& rig) {
  rig.validate();
  DisparityMap out(depth.height, depth.width);
  const double fb = rig.fb();
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    if (depth.valid[i]) {
      check_numeric(depth.depth[i] > 0.0, "depth_to_disparity: valid pixel "
                                          "with non-positive depth");
      out.disparity[i] = fb / depth.depth[i];
    }
  }
  return out;
}

DepthMap project_lidar(const std::vector<LidarPoint>& points,
                       const CameraRig& rig) {
  rig.validate();
  DepthMap out(rig.height, rig.width);
  for (const auto& p : points) {
    if (p.z <= 0.0) continue;
    const int u = int(std::lround(rig.focal_px * p.x / p.z + rig.cx));
    const int v = int(std::lround(rig.focal_px * p.y / p.z + rig.cy));
    if (u < 0 || u >= rig.width || v < 0 || v >= rig.height) continue;
    const std::size_t i = out.idx(v, u);
    if (!out.valid[i] || p.z < out.depth[i]) {
      out.depth[i] = p.z;
      out.valid[i] = 1;
    }
  }
  return out;
}

DepthMap subsample_depth(const DepthMap& map, double level_of_sparsity,
                         std::uint64_t seed) {
  check_shape(level_of_sparsity > 0.0 && level_of_sparsity <= 1.0,
              "subsample_depth: level of sparsity must be in (0,1]");
  if (level_of_sparsity == 1.0) return map;
  std::vector<std::size_t> valid_idx;
  valid_idx.reserve(map.depth.size());
  for (std::size_t i = 0; i < map.valid.size(); ++i)
    if (map.valid[i]) valid_idx.push_back(i);
  const std::int64_t keep =
      std::llround(level_of_sparsity * double(valid_idx.size()));
  Rng rng(seed);
  rng.shuffle(valid_idx);
  DepthMap out(map.height, map.width);
  for (std::int64_t k = 0; k < keep; ++k) {
    const std::size_t i = valid_idx[std::size_t(k)];
    out.depth[i] = map.depth[i];
    out.valid[i] = 1;
  }
  return out;
}

std::vector<double> depth_inversion(const DepthMap& map, double cap_m) {
  std::vector<double> out(map.depth.size(), 0.0);
  for (std::size_t i = 0; i < map.depth.size(); ++i) {
    if (!map.valid[i]) continue;
    check_shape(map.depth[i] <= cap_m,
                "depth_inversion: valid depth exceeds the cap");
    out[i] = cap_m - map.depth[i];
  }
  return out;
}

}  // namespace listereo
