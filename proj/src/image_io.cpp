#include "facedyn/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

#include "binary.hpp"

namespace facedyn {
namespace fs = std::filesystem;
using detail::get_le;
using detail::put_le;

namespace {

Frame read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  if (color) {
    RgbFrame rgb{w, h, std::vector<float>(buffer.size())};
    std::transform(buffer.begin(), buffer.end(), rgb.data.begin(), [](png_byte v) { return v / 255.0f; });
    return to_grayscale(rgb);
  }
  std::vector<float> px(buffer.size());
  std::transform(buffer.begin(), buffer.end(), px.begin(), [](png_byte v) { return v / 255.0f; });
  return Frame(w, h, std::move(px));
}

void write_png(const Frame& frame, const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(frame.pixels().size());
  std::transform(frame.pixels().begin(), frame.pixels().end(), buffer.begin(),
                 [](float v) { return static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); });
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

// Reads the next whitespace/comment separated header token of a PNM file.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Frame read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P2") throw FormatError(path.string() + ": not a PGM file");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(in));
    h = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw FormatError(path.string() + ": bad PGM header values");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<float> px(n);
  if (magic == "P2") {
    for (auto& v : px) {
      int value;
      if (!(in >> value)) throw FormatError(path.string() + ": truncated PGM data");
      v = static_cast<float>(value) / maxval;
    }
  } else if (maxval < 256) {
    std::vector<unsigned char> raw(n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n)))
      throw FormatError(path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < n; ++i) px[i] = static_cast<float>(raw[i]) / maxval;
  } else {
    std::vector<unsigned char> raw(2 * n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n)))
      throw FormatError(path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < n; ++i) px[i] = static_cast<float>((raw[2 * i] << 8) | raw[2 * i + 1]) / maxval;
  }
  for (auto& v : px) v = std::min(v, 1.0f);
  return Frame(w, h, std::move(px));
}

void write_pgm(const Frame& frame, const fs::path& path) {
  std::ostringstream out;
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  std::string body(frame.pixels().size(), '\0');
  std::transform(frame.pixels().begin(), frame.pixels().end(), body.begin(), [](float v) {
    return static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  });
  out << body;
  write_file_atomic(path, out.str());
}

}  // namespace

Frame read_image(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw FormatError("unsupported image extension: " + path.string());
}

void write_image(const Frame& frame, const fs::path& path, ImageFormat format) {
  if (format == ImageFormat::Png) {
    write_png(frame, path);
  } else {
    write_pgm(frame, path);
  }
}

VideoSequence load_sequence(const fs::path& dir, double fps) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  static const std::regex pattern(R"(frame_(\d{6})\.(png|pgm|PNG|PGM))");
  std::map<long, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) files.emplace(std::stol(m[1].str()), entry.path());
  }
  if (files.size() < 2) {
    throw DimensionError(dir.string() + ": need at least 2 frame_%06d images, found " + std::to_string(files.size()));
  }
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& [index, path] : files) frames.push_back(read_image(path));
  return VideoSequence(std::move(frames), fps);
}

void save_sequence(const VideoSequence& video, const fs::path& dir, ImageFormat format) {
  fs::create_directories(dir);
  const char* ext = format == ImageFormat::Png ? ".png" : ".pgm";
  for (std::size_t i = 0; i < video.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu%s", i, ext);
    write_image(video[i], dir / name, format);
  }
}

void write_sequence_binary(const VideoSequence& video, const fs::path& path) {
  std::string out = "FSQ1";
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(video.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(video.height()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(video.size()));
  put_le<double>(out, video.fps());
  out.reserve(out.size() + video.size() * video[0].pixels().size() * sizeof(float));
  for (const auto& f : video) {
    out.append(reinterpret_cast<const char*>(f.pixels().data()), f.pixels().size_bytes());
  }
  write_file_atomic(path, out);
}

VideoSequence read_sequence_binary(const fs::path& path) {
  const std::string in = read_file(path);
  if (in.size() < 4 || in.compare(0, 4, "FSQ1") != 0) throw FormatError(path.string() + ": bad sequence magic");
  std::size_t pos = 4;
  const auto w = get_le<std::uint32_t>(in, pos);
  const auto h = get_le<std::uint32_t>(in, pos);
  const auto n = get_le<std::uint32_t>(in, pos);
  const auto fps = get_le<double>(in, pos);
  const std::size_t px = static_cast<std::size_t>(w) * h;
  if (in.size() != pos + px * n * sizeof(float)) throw FormatError(path.string() + ": sequence size mismatch");
  std::vector<Frame> frames;
  frames.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<float> data(px);
    std::memcpy(data.data(), in.data() + pos, px * sizeof(float));
    pos += px * sizeof(float);
    frames.emplace_back(static_cast<int>(w), static_cast<int>(h), std::move(data));
  }
  return VideoSequence(std::move(frames), fps);
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(tid % 1000003) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace facedyn
