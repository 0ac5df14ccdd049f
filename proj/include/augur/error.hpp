#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace augur {

// Base of every error raised for bad input (descriptor, profile, model file,
// configuration). The CLI maps these to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourcePos {
  std::size_t line = 0;
  std::size_t column = 0;

  bool valid() const { return line > 0; }
  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

enum class ParseErrorKind {
  Syntax,
  UnknownLayerKind,
  UnknownKey,
  DanglingBottom,
  DuplicateLayerName,
  MissingRequiredParam,
  InvalidLayer,
};

inline const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Syntax: return "SyntaxError";
    case ParseErrorKind::UnknownLayerKind: return "UnknownLayerKind";
    case ParseErrorKind::UnknownKey: return "UnknownKey";
    case ParseErrorKind::DanglingBottom: return "DanglingBottom";
    case ParseErrorKind::DuplicateLayerName: return "DuplicateLayerName";
    case ParseErrorKind::MissingRequiredParam: return "MissingRequiredParam";
    case ParseErrorKind::InvalidLayer: return "InvalidLayer";
  }
  return "ParseError";
}

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, SourcePos pos, const std::string& message)
      : Error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " +
              to_string(kind) + ": " + message),
        kind_(kind),
        pos_(pos) {}

  ParseErrorKind kind() const { return kind_; }
  SourcePos position() const { return pos_; }

 private:
  ParseErrorKind kind_;
  SourcePos pos_;
};

enum class ShapeErrorKind { KernelExceedsInput, ShapeMismatch };

class ShapeError : public Error {
 public:
  ShapeError(ShapeErrorKind kind, std::string layer, const std::string& message)
      : Error((layer.empty() ? std::string() : "layer '" + layer + "': ") + message),
        kind_(kind),
        layer_(std::move(layer)) {}

  ShapeErrorKind kind() const { return kind_; }
  const std::string& layer() const { return layer_; }

 private:
  ShapeErrorKind kind_;
  std::string layer_;
};

enum class FitErrorKind { InsufficientSamples, DegenerateDesign, EmptyRegion, WrongProcessorKind };

class FitError : public Error {
 public:
  FitError(FitErrorKind kind, const std::string& message) : Error(message), kind_(kind) {}
  FitErrorKind kind() const { return kind_; }

 private:
  FitErrorKind kind_;
};

// Profile CSV, grid config or model file rejected.
class FormatError : public Error {
 public:
  using Error::Error;
};

class AllocationFailure : public Error {
 public:
  using Error::Error;
};

// A second benchmark was started while one is already running in this process.
class BenchBusy : public Error {
 public:
  using Error::Error;
};

}  // namespace augur
