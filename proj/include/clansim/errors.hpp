#pragma once

#include <stdexcept>
#include <string>

namespace clansim {

/// Two animals (or an animal and a model) belong to different models.
class ModelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its precondition (e.g. cleaning a clan that did not close).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A requested box does not fit inside the environment window.
class RegionMarginError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Total birth rate over a window is not finite.
class RateOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `pointer` is the JSON pointer of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)), message_(message) {}
  const std::string& pointer() const { return pointer_; }
  const std::string& message() const { return message_; }

 private:
  std::string pointer_;
  std::string message_;
};

}  // namespace clansim
