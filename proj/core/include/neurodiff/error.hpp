#pragma once

#include <stdexcept>
#include <string>

namespace neurodiff {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Thrown by fit() when a loss evaluates to NaN or infinity.
class TrainingAborted : public Error {
 public:
  TrainingAborted(std::string message, long epoch, long batch, std::string loss_kind)
      : Error(std::move(message)), epoch_(epoch), batch_(batch), loss_kind_(std::move(loss_kind)) {}

  long epoch() const noexcept { return epoch_; }
  long batch() const noexcept { return batch_; }
  const std::string& loss_kind() const noexcept { return loss_kind_; }

 private:
  long epoch_;
  long batch_;
  std::string loss_kind_;
};

}  // namespace neurodiff
