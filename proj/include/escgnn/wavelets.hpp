#pragma once

#include "escgnn/diffusion_ops.hpp"
#include "escgnn/error.hpp"
#include "escgnn/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace escgnn {

enum class BankMode { Dyadic, InfoGain, Custom };

std::string_view bank_mode_name(BankMode mode);
BankMode parse_bank_mode(std::string_view name);

/// Diffusion scales 0 = t_0 < t_1 < ... < t_J. Band b (0 <= b < J) is
/// op^{t_b} - op^{t_{b+1}}; the low-pass filter is op^{t_J}.
struct WaveletBank {
  std::vector<int> scales;
  BankMode mode = BankMode::Custom;

  int num_bands() const { return static_cast<int>(scales.size()) - 1; }
  int num_filters() const { return static_cast<int>(scales.size()); }
  int max_scale() const { return scales.back(); }

  /// Throws InvalidArgument unless t_0 = 0 and scales strictly increase.
  void validate() const;
  static WaveletBank custom(std::vector<int> scales);

  bool operator==(const WaveletBank&) const = default;
};

/// Scales {0, 1, 2, 4, ..., 2^J}: J+1 band-pass filters and one low-pass.
WaveletBank dyadic_scales(int J);

struct InfoGainOptions {
  int t_max = 16;
  std::vector<double> quantiles{0.25, 0.5, 0.75};
};

/// Per-signal quantile crossing times of the l1 decay toward op^{t_max} x.
/// Empty when the signal is already stationary (flat decay).
std::vector<int> quantile_crossings(const std::vector<double>& decay,
                                    const std::vector<double>& quantiles);

/// Merges per-signal crossing times (median per quantile, round half up)
/// into a bank that always contains 0, 1 and t_max.
WaveletBank merge_infogain_scales(const std::vector<std::vector<int>>& per_signal,
                                  const InfoGainOptions& options);

/// c(t) = |op^t x - op^{t_max} x|_1 for t = 0..t_max, one row per column of x.
template <DiffusionOperator Op>
std::vector<std::vector<double>> diffusion_decay(const Op& op, const Eigen::MatrixXd& signals,
                                                 int t_max) {
  if (signals.rows() != op.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length does not match operator");
  }
  std::vector<Eigen::MatrixXd> powers;
  powers.reserve(t_max + 1);
  powers.push_back(signals);
  Eigen::MatrixXd next;
  for (int t = 1; t <= t_max; ++t) {
    op.apply(powers.back(), next);
    powers.push_back(next);
  }
  std::vector<std::vector<double>> decay(signals.cols(), std::vector<double>(t_max + 1));
  for (Eigen::Index f = 0; f < signals.cols(); ++f) {
    for (int t = 0; t <= t_max; ++t) {
      decay[f][t] = (powers[t].col(f) - powers[t_max].col(f)).template lpNorm<1>();
    }
  }
  return decay;
}

/// Data-driven diffusion scales from the decay of the given signals.
/// Throws AllSignalsFlat when every signal is stationary.
template <DiffusionOperator Op>
WaveletBank infogain_scales(const Op& op, const Eigen::MatrixXd& signals,
                            const InfoGainOptions& options = {}) {
  if (options.t_max < 2) throw Error(ErrorCode::InvalidArgument, "t_max must be >= 2");
  const auto decay = diffusion_decay(op, signals, options.t_max);
  std::vector<std::vector<int>> crossings;
  for (Eigen::Index f = 0; f < signals.cols(); ++f) {
    const auto& curve = decay[f];
    // Stationary up to rounding.
    if (curve.front() <= 1e-12 * signals.col(f).template lpNorm<1>()) continue;
    auto c = quantile_crossings(curve, options.quantiles);
    if (!c.empty()) crossings.push_back(std::move(c));
  }
  return merge_infogain_scales(crossings, options);
}

/// [band_0 x, ..., band_{J-1} x, lowpass x], using exactly t_J operator
/// applications.
template <DiffusionOperator Op>
std::vector<Eigen::MatrixXd> wavelet_transform(const Op& op, const WaveletBank& bank,
                                               const Eigen::MatrixXd& x) {
  if (x.rows() != op.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length does not match operator");
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(bank.num_filters());
  Eigen::MatrixXd prev = x;
  Eigen::MatrixXd cur = x;
  Eigen::MatrixXd next;
  int t = 0;
  for (int b = 1; b < bank.num_filters(); ++b) {
    while (t < bank.scales[b]) {
      op.apply(cur, next);
      cur.swap(next);
      ++t;
    }
    out.push_back(prev - cur);
    prev = cur;
  }
  out.push_back(std::move(cur));
  return out;
}

struct FrameBoundReport {
  double min_energy_ratio = 0.0;  // min over trials of E(w)/|w|^2
  double max_energy_ratio = 0.0;
  double upper_bound = 0.0;       // d_max / d_min
  double frame_operator_min_eig = 0.0;
  int trials = 0;

  bool upper_bound_holds(double slack = 1e-9) const {
    return max_energy_ratio <= upper_bound + slack;
  }
};

/// Degree ratio d_max / d_min of the (weighted) degrees.
double degree_ratio(const GeometricGraph& graph, bool weighted = true);

/// Energy of `trials` random unit signals through the bank, plus the
/// smallest eigenvalue of the dense frame operator sum_j F_j^T F_j.
template <DiffusionOperator Op>
FrameBoundReport verify_frame_bounds(const Op& op, const WaveletBank& bank, double upper_bound,
                                     int trials, std::uint64_t seed) {
  const Eigen::Index dim = op.dim();
  const Eigen::MatrixXd dense = dense_materialize(op);  // guards size
  FrameBoundReport report;
  report.upper_bound = upper_bound;
  report.trials = trials;
  report.min_energy_ratio = std::numeric_limits<double>::infinity();

  Rng rng = make_rng(seed, 0x46524dULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd w(dim);
    for (Eigen::Index i = 0; i < dim; ++i) w[i] = normal(rng);
    w.normalize();
    double energy = 0.0;
    for (const auto& y : wavelet_transform(op, bank, w)) energy += y.squaredNorm();
    report.min_energy_ratio = std::min(report.min_energy_ratio, energy);
    report.max_energy_ratio = std::max(report.max_energy_ratio, energy);
  }

  // Each filter is a polynomial in the dense operator.
  Eigen::MatrixXd frame_op = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd prev = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd cur = prev;
  int t = 0;
  for (int b = 1; b < bank.num_filters(); ++b) {
    while (t < bank.scales[b]) {
      cur = dense * cur;
      ++t;
    }
    const Eigen::MatrixXd band = prev - cur;
    frame_op.noalias() += band.transpose() * band;
    prev = cur;
  }
  frame_op.noalias() += cur.transpose() * cur;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(frame_op, Eigen::EigenvaluesOnly);
  report.frame_operator_min_eig = eig.eigenvalues().minCoeff();
  return report;
}

}  // namespace escgnn
