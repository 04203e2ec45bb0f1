#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "facedyn/core.hpp"

namespace facedyn {

struct TrackedPoints {
  std::vector<Point2> positions;
  std::vector<std::uint8_t> valid;  // one flag per position

  std::size_t size() const { return positions.size(); }
  std::size_t valid_count() const;
};

// Shi-Tomasi corner selection.
struct FeatureDetectorParams {
  double quality = 0.01;     // fraction of the strongest response in the box
  double min_distance = 5.0;  // pixels between accepted corners
  int window = 7;             // Gaussian integration window
  double sigma = 1.5;
};

// Pyramidal Lucas-Kanade.
struct LkParams {
  int levels = 3;                 // finest level included
  int window = 15;                // integration window side
  int max_iterations = 30;        // per level
  double epsilon = 0.01;          // convergence threshold on the update, px
  double max_condition = 1e4;     // of the window gradient matrix
  double max_residual = 0.1;      // mean |I - J| over the final window
};

struct TrackingParams {
  int max_points = 200;
  int redetect_below = 50;
  FeatureDetectorParams detector;
  LkParams lk;
};

struct TrackFrame {
  std::array<Point2, 4> face_corners;  // frame-0 box corners mapped into this frame
  Point2 left_eye_center;
  Point2 right_eye_center;
  AffineTransform frame_transform;       // previous frame -> this frame
  AffineTransform cumulative_transform;  // frame 0 -> this frame
  std::size_t tracked_points = 0;

  Point2 face_center() const;
};

struct TrackResult {
  std::vector<TrackFrame> frames;
  BoundingBox initial_face_box;
  BoundingBox initial_left_eye_box;
  BoundingBox initial_right_eye_box;
};

TrackedPoints detect_features(const Frame& frame, const BoundingBox& box, int max_n,
                              const FeatureDetectorParams& params = {});

TrackedPoints lk_track(const Frame& prev, const Frame& next, const TrackedPoints& pts, const LkParams& params = {});

// Least-squares affine fit with one trimming pass (drop residuals > 3x median, refit).
AffineTransform estimate_affine(std::span<const Point2> old_pts, std::span<const Point2> new_pts);

TrackResult track_sequence(const VideoSequence& video, const BoundingBox& face_box, const BoundingBox& left_eye_box,
                           const BoundingBox& right_eye_box, const TrackingParams& params = {});

// JSON dump: {"initial": {...boxes}, "frames": [{"face_corners", "left_eye", "right_eye", "frame_transform",
// "cumulative_transform", "points"}]}. Reals are written losslessly.
std::string track_to_json(const TrackResult& track);
TrackResult track_from_json(const std::string& text);

}  // namespace facedyn
