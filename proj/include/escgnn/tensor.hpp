#pragma once

#include <Eigen/Dense>

#include <vector>

namespace escgnn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense n x C x S array, last axis fastest. Viewed as an (n*C) x S
/// row-major matrix, each row is one (node, channel) fiber.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Eigen::Index n, Eigen::Index channels, Eigen::Index depth, double fill = 0.0)
      : n_(n), c_(channels), s_(depth), data_(static_cast<std::size_t>(n * channels * depth), fill) {}

  Eigen::Index dim0() const { return n_; }
  Eigen::Index dim1() const { return c_; }
  Eigen::Index dim2() const { return s_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(Eigen::Index i, Eigen::Index c, Eigen::Index s) {
    return data_[static_cast<std::size_t>((i * c_ + c) * s_ + s)];
  }
  double operator()(Eigen::Index i, Eigen::Index c, Eigen::Index s) const {
    return data_[static_cast<std::size_t>((i * c_ + c) * s_ + s)];
  }

  Eigen::Map<RowMatrix> rows() { return {data_.data(), n_ * c_, s_}; }
  Eigen::Map<const RowMatrix> rows() const { return {data_.data(), n_ * c_, s_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Tensor3&) const = default;

 private:
  Eigen::Index n_ = 0;
  Eigen::Index c_ = 0;
  Eigen::Index s_ = 0;
  std::vector<double> data_;
};

}  // namespace escgnn
