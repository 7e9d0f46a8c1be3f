#pragma once

#include "escgnn/diffusion_ops.hpp"
#include "escgnn/geometry.hpp"
#include "escgnn/tensor.hpp"
#include "escgnn/wavelets.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace escgnn {

/// order 0: indices {}; order 1: {b} (low_pass: b == num_bands);
/// order m >= 2: non-decreasing band indices j_1 <= ... <= j_m.
struct ScatteringPath {
  int order = 0;
  std::vector<int> indices;
  bool low_pass = false;

  std::string label() const;
  bool operator==(const ScatteringPath&) const = default;
};

struct ScatteringConfig {
  int max_order = 2;
  bool include_diagonal = true;  // keep j == j' pairs
};

/// Path list in output order: zeroth, first-order bands then low-pass,
/// then higher orders lexicographically.
std::vector<ScatteringPath> scattering_paths(int num_bands, const ScatteringConfig& config = {});

/// Closed form of the default order-2 path count: 1 + (B+1) + B(B+1)/2.
int order2_path_count(int num_bands);

enum class ScalarActivation { Identity, Abs, Tanh };
enum class RadialFn { Identity, Tanh };

double apply_scalar_activation(ScalarActivation act, double x);

/// f(|w|) w / |w|, zero for w = 0.
Eigen::VectorXd radial_activation(const Eigen::VectorXd& w, RadialFn f);

enum class Track { Scalar, Vector };

/// values: n x F x S (scalar track) or n x d x S (vector track).
struct ScatteringTensor {
  Tensor3 values;
  std::vector<ScatteringPath> paths;
  Track track = Track::Scalar;
};

ScatteringTensor scalar_scattering(const SparseOperator& p, const WaveletBank& bank,
                                   const Eigen::MatrixXd& x, const ScatteringConfig& config = {},
                                   ScalarActivation activation = ScalarActivation::Identity);

/// `w` is one vector signal as an n x d array.
ScatteringTensor vector_scattering(const BlockSparseOperator& q, const WaveletBank& bank,
                                   const Eigen::MatrixXd& w, const ScatteringConfig& config = {},
                                   RadialFn radial = RadialFn::Identity);

/// sum_i |value(i, c, s)|^q ordered (channel, path, q).
Eigen::VectorXd scattering_moments(const ScatteringTensor& tensor, const std::vector<double>& qs);

/// Per node and channel: |w|, mean and max cosine with the neighbors' vectors
/// in the same channel. Cosines involving a zero vector are 0. Input is
/// n x d x K, output n x 3 x K.
Tensor3 vector_invariants(const Tensor3& wmix, const GeometricGraph& graph);

/// Reverse pass of vector_invariants: given dL/d(output), returns dL/d(wmix).
/// Max-cosine ties resolve to the lowest neighbor index.
Tensor3 vector_invariants_backward(const Tensor3& wmix, const GeometricGraph& graph,
                                   const Tensor3& grad_out);

}  // namespace escgnn
