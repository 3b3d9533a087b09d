#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace fingersim {

enum class ErrorKind {
  Parse,
  Validation,
  InfeasibleGeometry,
  NonConvergence,
  SingularConfiguration,
  UnstableEquilibrium,
  RankDeficientData,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error(ErrorKind::Parse, message) {}
};

// field is the dotted path of the offending entry, e.g. "object.width".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& constraint)
      : Error(ErrorKind::Validation, field + ": " + constraint), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class InfeasibleGeometry : public Error {
 public:
  explicit InfeasibleGeometry(const std::string& message)
      : Error(ErrorKind::InfeasibleGeometry, message) {}
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& message, std::optional<std::size_t> sample = std::nullopt)
      : Error(ErrorKind::NonConvergence,
              sample ? message + " (sample " + std::to_string(*sample) + ")" : message),
        sample_(sample) {}

  std::optional<std::size_t> sample() const { return sample_; }

 private:
  std::optional<std::size_t> sample_;
};

class SingularConfiguration : public Error {
 public:
  explicit SingularConfiguration(const std::string& message)
      : Error(ErrorKind::SingularConfiguration, message) {}
};

class UnstableEquilibrium : public Error {
 public:
  UnstableEquilibrium(const std::string& message, double min_eigenvalue)
      : Error(ErrorKind::UnstableEquilibrium, message), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class RankDeficientData : public Error {
 public:
  RankDeficientData(const std::string& message, Eigen::VectorXd null_direction)
      : Error(ErrorKind::RankDeficientData, message), null_direction_(std::move(null_direction)) {}

  const Eigen::VectorXd& null_direction() const { return null_direction_; }

 private:
  Eigen::VectorXd null_direction_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

}  // namespace fingersim
