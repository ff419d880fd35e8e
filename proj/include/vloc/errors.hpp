#pragma once

#include <stdexcept>
#include <string>

namespace vloc {

// Base of every recoverable error raised by the library. kind() carries a
// stable machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define VLOC_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                     \
   public:                                                        \
    explicit NAME(const std::string& what) : Error(#NAME, what) {} \
  }

VLOC_DEFINE_ERROR(OutOfRange);
VLOC_DEFINE_ERROR(BadLength);
VLOC_DEFINE_ERROR(BadBand);
VLOC_DEFINE_ERROR(ShapeMismatch);
VLOC_DEFINE_ERROR(EmptySequence);
VLOC_DEFINE_ERROR(MissingCache);
VLOC_DEFINE_ERROR(BadConfig);
VLOC_DEFINE_ERROR(BadInput);
VLOC_DEFINE_ERROR(BadWindows);
VLOC_DEFINE_ERROR(BadVelocities);
VLOC_DEFINE_ERROR(TooFewStations);
VLOC_DEFINE_ERROR(EmptyList);
VLOC_DEFINE_ERROR(OutOfFrame);
VLOC_DEFINE_ERROR(TooFewEvents);
VLOC_DEFINE_ERROR(EmptySplit);
VLOC_DEFINE_ERROR(DegenerateTargets);
VLOC_DEFINE_ERROR(EmptySpace);
VLOC_DEFINE_ERROR(BadFile);

#undef VLOC_DEFINE_ERROR

}  // namespace vloc
