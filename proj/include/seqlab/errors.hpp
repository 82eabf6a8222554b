#ifndef SEQLAB_ERRORS_HPP
#define SEQLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace seqlab {

// Base class of all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dimension mismatch, out-of-range index, non-finite input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Malformed data or model file. line() is 1-based, 0 when unknown.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// An online update produced a non-finite weight; lower the learning rate.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// Every candidate learning rate diverged during calibration.
class CalibrationFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace seqlab

#endif  // SEQLAB_ERRORS_HPP
