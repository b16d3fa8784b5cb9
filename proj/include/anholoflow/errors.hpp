#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace anholoflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class SingularMetricError : public Error {
 public:
  SingularMetricError(const std::string& what, double det) : Error(what), det_(det) {}
  double det() const { return det_; }

 private:
  double det_;
};

class RegularityError : public Error {
 public:
  using Error::Error;
};

class SignatureError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class FlowSingularityError : public Error {
 public:
  FlowSingularityError(const std::string& what, double chi, int node)
      : Error(what), chi_(chi), node_(node) {}
  double chi() const { return chi_; }
  int node() const { return node_; }

 private:
  double chi_;
  int node_;
};

class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class NeedsNeighborsError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double tau) : Error(what), tau_(tau) {}
  double tau() const { return tau_; }

 private:
  double tau_;
};

class HyperbolicityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path) : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace anholoflow
