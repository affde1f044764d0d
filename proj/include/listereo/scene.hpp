#ifndef LISTEREO_SCENE_HPP_
#define LISTEREO_SCENE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "listereo/geometry.hpp"

namespace listereo {

// Interleaved RGB image with values in [0,1].
struct ColorImage {
  int height = 0;
  int width = 0;
  std::vector<double> rgb;  // h*w*3

  ColorImage() = default;
  ColorImage(int h, int w)
      : height(h), width(w), rgb(std::size_t(h) * w * 3, 0.0) {}
  std::size_t idx(int y, int x, int c) const {
    return (std::size_t(y) * width + x) * 3 + c;
  }
};

struct SceneSpec {
  std::uint64_t seed = 1;
  int num_planes = 4;  // backdrop plus num_planes-1 foreground objects
  double depth_near_m = 1.0;
  double depth_far_m = 7.0;
  double slant_min_deg = 0.0;
  double slant_max_deg = 25.0;
  int texture_octaves = 3;
  double texture_contrast = 0.35;
  bool low_texture = false;  // demonstrates the low-texture failure mode
  CameraRig rig{100.0, 0.28, 64.0, 32.0, 128, 64, 100.0};
  int lidar_beams = 8;
  int lidar_azimuth_step = 2;

  void validate() const;
};

// One generated stereo sample with exact ground truth. The occlusion mask
// marks left pixels that are not cleanly visible in the right view: their
// warp coordinate leaves the image or a different surface wins the
// right-view depth test at one of the bilinear support columns.
struct SceneSample {
  ColorImage left_image;
  ColorImage right_image;
  DepthMap gt_depth;       // dense
  DisparityMap gt_disparity;
  DepthMap sparse_depth;   // simulated LIDAR
  std::vector<std::uint8_t> occlusion;  // h*w, 1 = occluded
  std::uint64_t seed = 0;
};

// Ray-casts textured slanted planes and axis-aligned boxes against both
// camera centers. Deterministic per seed.
SceneSample generate_scene(const SceneSpec& spec);

// Samples gt depth on evenly spaced scan rows (sub-pixel jitter from the
// seed) at every lidar_azimuth_step-th column.
DepthMap simulate_lidar(const DepthMap& gt_depth, const SceneSpec& spec);

// Dataset directory layout:
//   left/NNNN.ppm right/NNNN.ppm sparse/NNNN.png gt/NNNN.png occ/NNNN.pgm
//   manifest.txt with one record per line: id f B cx cy width height
struct DatasetRecord {
  std::string id;
  CameraRig rig;
};

std::string write_dataset(const std::vector<SceneSpec>& specs,
                          const std::string& directory);

struct LoadedSample {
  ColorImage left_image;
  ColorImage right_image;
  DepthMap sparse_depth;
  CameraRig rig;
  // Present only when requested; self-supervised training never loads them.
  std::optional<DepthMap> gt_depth;
  std::vector<std::uint8_t> occlusion;
};

class Dataset {
 public:
  static Dataset open(const std::string& directory);

  std::size_t size() const { return records_.size(); }
  const DatasetRecord& record(std::size_t i) const { return records_[i]; }
  LoadedSample load(std::size_t i, bool with_gt) const;

  // Test seam: invoked with every file path before it is opened.
  void set_open_hook(std::function<void(const std::string&)> hook) {
    on_open_ = std::move(hook);
  }

 private:
  std::string dir_;
  std::vector<DatasetRecord> records_;
  std::function<void(const std::string&)> on_open_;
};

ColorImage image_from_u8(const ImageU8& img);
ImageU8 image_to_u8(const ColorImage& img);

}  // namespace listereo

#endif  // LISTEREO_SCENE_HPP_
