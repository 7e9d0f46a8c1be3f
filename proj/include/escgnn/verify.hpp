#pragma once

#include "escgnn/geometry.hpp"
#include "escgnn/scattering.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace escgnn {

/// One property check. `measured` is compared against `threshold`: at most
/// the threshold for ordinary checks, above it for negative controls.
struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  bool expect_above = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool all_passed() const;
  const CheckResult* find(const std::string& name) const;
};

struct VerifyOptions {
  bool canonicalize_signs = true;
  double tolerance_scale = 1.0;  // multiplies every tolerance
};

/// Anisotropic Gaussian cloud (axis scales 1, 0.75, 0.5, ...).
Eigen::MatrixXd random_cloud(std::uint64_t seed, int n, int d);

/// k-NN graph with Gaussian kernel weights, the Dirac pair as scalar signals
/// and the coordinates as the vector signal.
GeometricGraph graph_from_points(const Eigen::MatrixXd& points, int k);

struct EquivarianceOptions {
  int graphs = 20;
  int n = 64;
  int d = 3;
  int k = 5;
  int rotations = 5;
  bool canonicalize_signs = true;
  double tolerance = 1e-9;
};

/// max over graphs, rotations and m in {1,2,4,8} of
/// |Q_rot^m (R w) - R (Q^m w)|_inf / |w|_inf, with Q_rot rebuilt from the
/// rotated raw points. Graphs with flagged frames are skipped.
CheckResult check_operator_equivariance(std::uint64_t seed, const EquivarianceOptions& options);

/// Vector wavelets and all scattering paths up to order 2 on a dyadic J = 3
/// bank, for identity and tanh radial activations.
CheckResult check_scattering_equivariance(std::uint64_t seed, const EquivarianceOptions& options);

/// Frame covariance of the local frames: U_i(rotated) = R U_i on unflagged nodes.
CheckResult check_frame_covariance(std::uint64_t seed, const EquivarianceOptions& options);

/// Upper bound d_max/d_min for Q (and P) and positivity of the frame operator.
CheckResult check_frame_bounds(std::uint64_t seed, int graphs, int n, int k, int trials,
                               double tolerance = 1e-9);

/// dense(Q)^m block (i,j) against dense(P)^m (i,j) U_i U_j^T for m = 1..max_power.
CheckResult check_q_powers(std::uint64_t seed, int n, int k, int max_power,
                           double tolerance = 1e-11);

/// Identity frames: dense(Q) = dense(P) (x) I, and vector wavelets and linear
/// vector scattering equal the scalar versions per coordinate.
CheckResult check_kronecker_reduction(std::uint64_t seed, int n, int k, double tolerance = 1e-13);

/// Sum of all band outputs and the low-pass output reproduces the input, for
/// P and Q with dyadic and InfoGain banks.
CheckResult check_telescoping(std::uint64_t seed, int n, int k, int signals,
                              double tolerance = 1e-12);

/// Central finite differences over every parameter of randomly sized models.
CheckResult check_model_gradients(std::uint64_t seed, int configs, double tolerance = 1e-4);

/// Graph-scalar invariance and node-vector equivariance of the full forward
/// pass under random parameters and rotations.
CheckResult check_model_equivariance(std::uint64_t seed, int param_draws, int rotations,
                                     double tolerance = 1e-8);

/// Negative control: an ablated graph-scalar model changes under rotation.
CheckResult check_ablation_breaks_invariance(std::uint64_t seed, double threshold = 1e-3);

/// Runs every module property at suite sizes.
VerifyReport verify_suite(std::uint64_t seed, const VerifyOptions& options = {});

}  // namespace escgnn
