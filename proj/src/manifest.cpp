#include "facedyn/manifest.hpp"

#include <set>

#include "facedyn/image_io.hpp"
#include "json.hpp"

namespace facedyn {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json box_to_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

BoundingBox box_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw ManifestError(what + " must be an object {x,y,w,h}");
  BoundingBox b;
  try {
    b.x = j.at("x").get<double>();
    b.y = j.at("y").get<double>();
    b.w = j.at("w").get<double>();
    b.h = j.at("h").get<double>();
  } catch (const json::exception& e) {
    throw ManifestError(what + ": " + e.what());
  }
  return b;
}

std::string record_name(const json& r, std::size_t index) {
  if (r.is_object() && r.contains("video_id") && r["video_id"].is_string()) {
    return "record '" + r["video_id"].get<std::string>() + "'";
  }
  return "record #" + std::to_string(index);
}

}  // namespace

fs::path Manifest::resolve(const std::string& path) const {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

const ManifestRecord& Manifest::find(const std::string& video_id) const {
  for (const auto& r : records)
    if (r.video_id == video_id) return r;
  throw ManifestError("no record with video_id '" + video_id + "'");
}

void validate_manifest(const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& r : manifest.records) {
    const std::string name = "record '" + r.video_id + "'";
    if (r.video_id.empty()) throw ManifestError("record with empty video_id");
    if (!seen.insert(r.video_id).second) throw ManifestError(name + ": duplicate video_id");
    if (r.fold < 1 || r.fold > kFoldCount) {
      throw ManifestError(name + ": fold " + std::to_string(r.fold) + " outside 1.." + std::to_string(kFoldCount));
    }
    if (!(r.fps > 0.0)) throw ManifestError(name + ": fps must be positive");
    if (!r.face_box.valid()) throw ManifestError(name + ": face_box must have positive size");
    if (!r.left_eye_box.valid() || !r.right_eye_box.valid()) throw ManifestError(name + ": eye boxes must have positive size");
    if (!r.face_box.contains(r.left_eye_box) || !r.face_box.contains(r.right_eye_box)) {
      throw ManifestError(name + ": eye boxes must lie inside the face box");
    }
  }
}

Manifest parse_manifest_text(const std::string& json_text, fs::path base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    throw ManifestError("manifest must be an object with a \"records\" array");
  }
  Manifest m;
  m.base_dir = std::move(base_dir);
  std::size_t index = 0;
  for (const auto& r : doc["records"]) {
    const std::string name = record_name(r, index++);
    if (!r.is_object()) throw ManifestError(name + ": must be an object");
    ManifestRecord rec;
    try {
      rec.video_id = r.at("video_id").get<std::string>();
      rec.path = r.at("path").get<std::string>();
      rec.label = parse_smile_label(r.at("label").get<std::string>());
      rec.fold = r.at("fold").get<int>();
      rec.fps = r.value("fps", kDefaultFps);
      if (r.contains("external_features_path") && !r["external_features_path"].is_null()) {
        rec.external_features_path = r["external_features_path"].get<std::string>();
      }
    } catch (const ManifestError& e) {
      throw ManifestError(name + ": " + e.what());
    } catch (const json::exception& e) {
      throw ManifestError(name + ": " + e.what());
    }
    if (!r.contains("face_box") || !r.contains("left_eye_box") || !r.contains("right_eye_box")) {
      throw ManifestError(name + ": face_box, left_eye_box and right_eye_box are required");
    }
    rec.face_box = box_from_json(r["face_box"], name + " face_box");
    rec.left_eye_box = box_from_json(r["left_eye_box"], name + " left_eye_box");
    rec.right_eye_box = box_from_json(r["right_eye_box"], name + " right_eye_box");
    m.records.push_back(std::move(rec));
  }
  validate_manifest(m);
  return m;
}

Manifest parse_manifest(const fs::path& path) {
  return parse_manifest_text(read_file(path), path.parent_path());
}

std::string serialize_manifest(const Manifest& manifest) {
  json records = json::array();
  for (const auto& r : manifest.records) {
    json j = {{"video_id", r.video_id},
              {"path", r.path},
              {"label", std::string(to_string(r.label))},
              {"fold", r.fold},
              {"fps", r.fps},
              {"face_box", box_to_json(r.face_box)},
              {"left_eye_box", box_to_json(r.left_eye_box)},
              {"right_eye_box", box_to_json(r.right_eye_box)}};
    if (r.external_features_path) j["external_features_path"] = *r.external_features_path;
    records.push_back(std::move(j));
  }
  return json{{"records", records}}.dump(2) + "\n";
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_file_atomic(path, serialize_manifest(manifest));
}

}  // namespace facedyn
