#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facedyn/core.hpp"

namespace facedyn {

inline constexpr int kFoldCount = 10;
inline constexpr double kDefaultFps = 50.0;

struct ManifestRecord {
  std::string video_id;
  std::string path;  // frame directory, relative to the manifest file unless absolute
  SmileLabel label = SmileLabel::Posed;
  int fold = 1;  // 1..10
  double fps = kDefaultFps;
  BoundingBox face_box;
  BoundingBox left_eye_box;
  BoundingBox right_eye_box;
  std::optional<std::string> external_features_path;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  // Directory used to resolve relative paths; not part of the serialized form.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  const ManifestRecord& find(const std::string& video_id) const;  // throws ManifestError

  friend bool operator==(const Manifest& x, const Manifest& y) { return x.records == y.records; }
};

// JSON document: {"records": [ {...}, ... ]}. Validation failures name the record.
Manifest parse_manifest(const std::filesystem::path& path);
Manifest parse_manifest_text(const std::string& json_text, std::filesystem::path base_dir = {});
std::string serialize_manifest(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Checks ids, folds, boxes and eye containment; throws ManifestError.
void validate_manifest(const Manifest& manifest);

}  // namespace facedyn
