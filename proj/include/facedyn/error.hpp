#pragma once

#include <stdexcept>
#include <string>

namespace facedyn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SingularTransformError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Training data the classifier cannot learn from (one class, non-finite values).
class TrainingError : public Error {
 public:
  using Error::Error;
};

class TrackingLostError : public Error {
 public:
  TrackingLostError(int frame, const std::string& what)
      : Error("tracking lost at frame " + std::to_string(frame) + ": " + what), frame_(frame) {}
  int frame() const { return frame_; }

 private:
  int frame_;
};

}  // namespace facedyn
