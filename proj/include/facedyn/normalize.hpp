#pragma once

#include <string_view>
#include <vector>

#include "facedyn/core.hpp"
#include "facedyn/tracking.hpp"

namespace facedyn {

enum class NormalizationMode { EyeLocation, FaceOrientation, NoNormalization };

std::string_view to_string(NormalizationMode mode);
NormalizationMode parse_normalization_mode(std::string_view text);  // throws ConfigError

// Output geometry of the three cropping strategies. Defaults reproduce the
// 400x500 / 234 px interocular layout and the 720x900 control crop.
struct CanonicalLayout {
  int out_w = 400;
  int out_h = 500;
  int crop_w = 720;  // NoNormalization
  int crop_h = 900;
  double interocular = 234.0;
  Point2 left_eye_anchor{83.0, 165.0};
  Point2 right_eye_anchor{317.0, 165.0};
  double face_width_target = 360.0;  // FaceOrientation: frame-0 box width in output pixels

  // Every length multiplied by `factor`; sizes rounded to whole pixels.
  CanonicalLayout scaled(double factor) const;
  void validate() const;  // throws ConfigError
};

struct NormalizedVideo {
  VideoSequence video;
  std::vector<AffineTransform> transforms;  // source frame -> output frame, per frame
};

// Similarity mapping the two eye centers onto the layout anchors.
AffineTransform eye_similarity(Point2 left_eye, Point2 right_eye, const CanonicalLayout& layout);

// Rotation angle atan2(c, a) of the linear part.
double rotation_angle(const AffineTransform& t);

NormalizedVideo normalize_eye_location(const VideoSequence& video, const TrackResult& track,
                                       const CanonicalLayout& layout = {});
NormalizedVideo normalize_face_orientation(const VideoSequence& video, const TrackResult& track,
                                           const CanonicalLayout& layout = {});
NormalizedVideo crop_no_normalization(const VideoSequence& video, const BoundingBox& face_box_frame0,
                                      const CanonicalLayout& layout = {});

NormalizedVideo normalize(NormalizationMode mode, const VideoSequence& video, const TrackResult& track,
                          const CanonicalLayout& layout = {});

}  // namespace facedyn
