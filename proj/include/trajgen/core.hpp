#ifndef TRAJGEN_CORE_HPP_
#define TRAJGEN_CORE_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace trajgen {

/// Dense row-major 2-D array; the storage type for every tensor and parameter.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-agent trajectory, one row per time step.
using Trajectory = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

template <typename Scalar>
std::string shape_string(const Matrix<Scalar>& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

/// A named trainable array together with its accumulated gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)) {}

  void zero_grad() { grad = Matrix<Scalar>::Zero(value.rows(), value.cols()); }
};

}  // namespace trajgen

#endif  // TRAJGEN_CORE_HPP_
