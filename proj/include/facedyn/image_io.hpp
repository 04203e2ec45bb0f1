#pragma once

#include <filesystem>
#include <string>

#include "facedyn/core.hpp"

namespace facedyn {

enum class ImageFormat { Png, Pgm };

// 8-bit or 16-bit PNG (gray, gray+alpha, RGB, RGBA) or binary/ASCII PGM.
// Color images are reduced to luma.
Frame read_image(const std::filesystem::path& path);
// Quantizes to 8 bits.
void write_image(const Frame& frame, const std::filesystem::path& path, ImageFormat format);

// Loads `frame_%06d.png|pgm` files from a directory, ordered by index.
VideoSequence load_sequence(const std::filesystem::path& dir, double fps);
// Writes frame_%06d.<ext>, creating the directory if needed.
void save_sequence(const VideoSequence& video, const std::filesystem::path& dir, ImageFormat format = ImageFormat::Png);

// Lossless float32 container used by the artifact cache:
// "FSQ1", u32 width, u32 height, u32 frames, f64 fps, then frames of f32.
void write_sequence_binary(const VideoSequence& video, const std::filesystem::path& path);
VideoSequence read_sequence_binary(const std::filesystem::path& path);

// Writes `bytes` to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace facedyn
