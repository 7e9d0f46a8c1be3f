#include "escgnn/scattering.hpp"

#include "escgnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>

namespace escgnn {

std::string ScatteringPath::label() const {
  if (order == 0) return "()";
  if (low_pass) return "(low)";
  std::string out = "(";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(indices[i]);
  }
  return out + ")";
}

std::vector<ScatteringPath> scattering_paths(int num_bands, const ScatteringConfig& config) {
  if (config.max_order < 0) throw Error(ErrorCode::InvalidArgument, "max_order must be >= 0");
  std::vector<ScatteringPath> paths;
  paths.push_back({0, {}, false});
  if (config.max_order == 0) return paths;
  std::vector<ScatteringPath> frontier;
  for (int b = 0; b < num_bands; ++b) {
    paths.push_back({1, {b}, false});
    frontier.push_back(paths.back());
  }
  paths.push_back({1, {num_bands}, true});
  for (int order = 2; order <= config.max_order; ++order) {
    std::vector<ScatteringPath> next;
    for (const auto& parent : frontier) {
      const int last = parent.indices.back();
      for (int b = config.include_diagonal ? last : last + 1; b < num_bands; ++b) {
        ScatteringPath child{order, parent.indices, false};
        child.indices.push_back(b);
        next.push_back(child);
      }
    }
    paths.insert(paths.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return paths;
}

int order2_path_count(int num_bands) {
  return 1 + (num_bands + 1) + num_bands * (num_bands + 1) / 2;
}

double apply_scalar_activation(ScalarActivation act, double x) {
  switch (act) {
    case ScalarActivation::Identity: return x;
    case ScalarActivation::Abs: return std::abs(x);
    case ScalarActivation::Tanh: return std::tanh(x);
  }
  return x;
}

Eigen::VectorXd radial_activation(const Eigen::VectorXd& w, RadialFn f) {
  const double r = w.norm();
  if (r == 0.0) return Eigen::VectorXd::Zero(w.size());
  switch (f) {
    case RadialFn::Identity: return w;
    case RadialFn::Tanh: return (std::tanh(r) / r) * w;
  }
  return w;
}

namespace {

using Activate = std::function<void(Eigen::MatrixXd&)>;

/// Coefficient signal per path, same order as scattering_paths().
template <DiffusionOperator Op>
std::vector<Eigen::MatrixXd> scatter(const Op& op, const WaveletBank& bank,
                                     const Eigen::MatrixXd& x, const ScatteringConfig& config,
                                     const Activate& activate) {
  bank.validate();
  const int nb = bank.num_bands();
  std::vector<Eigen::MatrixXd> coeffs;
  coeffs.push_back(x);
  if (config.max_order == 0) return coeffs;

  auto first = wavelet_transform(op, bank, x);
  for (auto& y : first) activate(y);
  // frontier: (last band index, coefficient) for band-pass paths of the
  // current order.
  std::vector<std::pair<int, Eigen::MatrixXd>> frontier;
  for (int b = 0; b < nb; ++b) frontier.emplace_back(b, first[b]);
  for (auto& y : first) coeffs.push_back(std::move(y));

  for (int order = 2; order <= config.max_order; ++order) {
    std::vector<std::pair<int, Eigen::MatrixXd>> next;
    for (const auto& [last, signal] : frontier) {
      auto bands = wavelet_transform(op, bank, signal);
      for (int b = config.include_diagonal ? last : last + 1; b < nb; ++b) {
        activate(bands[b]);
        next.emplace_back(b, std::move(bands[b]));
      }
    }
    for (const auto& entry : next) coeffs.push_back(entry.second);
    frontier = std::move(next);
  }
  return coeffs;
}

}  // namespace

ScatteringTensor scalar_scattering(const SparseOperator& p, const WaveletBank& bank,
                                   const Eigen::MatrixXd& x, const ScatteringConfig& config,
                                   ScalarActivation activation) {
  if (x.rows() != p.n) throw Error(ErrorCode::DimensionMismatch, "signal rows do not match P");
  const Activate act = [activation](Eigen::MatrixXd& m) {
    if (activation == ScalarActivation::Identity) return;
    m = m.unaryExpr([activation](double v) { return apply_scalar_activation(activation, v); });
  };
  const auto coeffs = scatter(p, bank, x, config, act);
  ScatteringTensor out;
  out.track = Track::Scalar;
  out.paths = scattering_paths(bank.num_bands(), config);
  out.values = Tensor3(x.rows(), x.cols(), static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t s = 0; s < coeffs.size(); ++s) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index f = 0; f < x.cols(); ++f) out.values(i, f, s) = coeffs[s](i, f);
    }
  }
  return out;
}

ScatteringTensor vector_scattering(const BlockSparseOperator& q, const WaveletBank& bank,
                                   const Eigen::MatrixXd& w, const ScatteringConfig& config,
                                   RadialFn radial) {
  const int n = q.n;
  const int d = q.d;
  if (w.rows() != n || w.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "vector signal must be n x d");
  }
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(n) * d, 1);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) flat(static_cast<Eigen::Index>(i) * d + c, 0) = w(i, c);
  }
  const Activate act = [radial, n, d](Eigen::MatrixXd& m) {
    if (radial == RadialFn::Identity) return;
    for (int i = 0; i < n; ++i) {
      auto seg = m.col(0).segment(static_cast<Eigen::Index>(i) * d, d);
      seg = radial_activation(seg, radial);
    }
  };
  const auto coeffs = scatter(q, bank, flat, config, act);
  ScatteringTensor out;
  out.track = Track::Vector;
  out.paths = scattering_paths(bank.num_bands(), config);
  out.values = Tensor3(n, d, static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t s = 0; s < coeffs.size(); ++s) {
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        out.values(i, c, s) = coeffs[s](static_cast<Eigen::Index>(i) * d + c, 0);
      }
    }
  }
  return out;
}

Eigen::VectorXd scattering_moments(const ScatteringTensor& tensor, const std::vector<double>& qs) {
  for (double q : qs) {
    if (!(q > 0.0)) throw Error(ErrorCode::NonpositiveQ, "moment order must be positive");
  }
  const auto& v = tensor.values;
  const Eigen::Index nq = static_cast<Eigen::Index>(qs.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.dim1() * v.dim2() * nq);
  for (Eigen::Index c = 0; c < v.dim1(); ++c) {
    for (Eigen::Index s = 0; s < v.dim2(); ++s) {
      for (Eigen::Index k = 0; k < nq; ++k) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.dim0(); ++i) acc += std::pow(std::abs(v(i, c, s)), qs[k]);
        out[(c * v.dim2() + s) * nq + k] = acc;
      }
    }
  }
  return out;
}

namespace {

struct ChannelView {
  const Tensor3& t;
  Eigen::Index k;
  double dot(Eigen::Index i, Eigen::Index j) const {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < t.dim1(); ++c) acc += t(i, c, k) * t(j, c, k);
    return acc;
  }
};

}  // namespace

Tensor3 vector_invariants(const Tensor3& wmix, const GeometricGraph& graph) {
  const Eigen::Index n = wmix.dim0();
  const Eigen::Index K = wmix.dim2();
  if (n != graph.num_nodes()) throw Error(ErrorCode::ShapeMismatch, "invariants: node count");
  Tensor3 out(n, 3, K);
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < K; ++k) {
    const ChannelView view{wmix, k};
    for (Eigen::Index i = 0; i < n; ++i) norms[i] = std::sqrt(view.dot(i, i));
    for (Eigen::Index i = 0; i < n; ++i) {
      out(i, 0, k) = norms[i];
      const auto& nbrs = graph.adjacency[i];
      double sum = 0.0;
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& nb : nbrs) {
        const double denom = norms[i] * norms[nb.index];
        const double cos = denom > 0.0 ? view.dot(i, nb.index) / denom : 0.0;
        sum += cos;
        best = std::max(best, cos);
      }
      out(i, 1, k) = nbrs.empty() ? 0.0 : sum / static_cast<double>(nbrs.size());
      out(i, 2, k) = nbrs.empty() ? 0.0 : best;
    }
  }
  return out;
}

Tensor3 vector_invariants_backward(const Tensor3& wmix, const GeometricGraph& graph,
                                   const Tensor3& grad_out) {
  const Eigen::Index n = wmix.dim0();
  const Eigen::Index d = wmix.dim1();
  const Eigen::Index K = wmix.dim2();
  Tensor3 grad(n, d, K);
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < K; ++k) {
    const ChannelView view{wmix, k};
    for (Eigen::Index i = 0; i < n; ++i) norms[i] = std::sqrt(view.dot(i, i));

    // d cos(a, b) / d a = b / (|a||b|) - cos a / |a|^2, and symmetrically for b.
    auto add_cos_grad = [&](Eigen::Index i, Eigen::Index j, double g) {
      const double denom = norms[i] * norms[j];
      if (!(denom > 0.0) || g == 0.0) return;
      const double cos = view.dot(i, j) / denom;
      for (Eigen::Index c = 0; c < d; ++c) {
        grad(i, c, k) += g * (wmix(j, c, k) / denom - cos * wmix(i, c, k) / (norms[i] * norms[i]));
        grad(j, c, k) += g * (wmix(i, c, k) / denom - cos * wmix(j, c, k) / (norms[j] * norms[j]));
      }
    };

    for (Eigen::Index i = 0; i < n; ++i) {
      if (norms[i] > 0.0) {
        const double g = grad_out(i, 0, k);
        for (Eigen::Index c = 0; c < d; ++c) grad(i, c, k) += g * wmix(i, c, k) / norms[i];
      }
      const auto& nbrs = graph.adjacency[i];
      if (nbrs.empty()) continue;
      const double g_mean = grad_out(i, 1, k) / static_cast<double>(nbrs.size());
      int arg = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& nb : nbrs) {
        add_cos_grad(i, nb.index, g_mean);
        const double denom = norms[i] * norms[nb.index];
        const double cos = denom > 0.0 ? view.dot(i, nb.index) / denom : 0.0;
        if (cos > best) {
          best = cos;
          arg = nb.index;
        }
      }
      add_cos_grad(i, arg, grad_out(i, 2, k));
    }
  }
  return grad;
}

}  // namespace escgnn
