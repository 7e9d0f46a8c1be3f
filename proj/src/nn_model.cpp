#include "escgnn/nn_model.hpp"

#include "escgnn/error.hpp"
#include "escgnn/scattering.hpp"

#include <cmath>
#include <string>

namespace escgnn {

std::string_view model_mode_name(ModelMode mode) {
  return mode == ModelMode::Equivariant ? "equivariant" : "ablated";
}

ModelMode parse_model_mode(std::string_view name) {
  if (name == "equivariant") return ModelMode::Equivariant;
  if (name == "ablated") return ModelMode::Ablated;
  throw Error(ErrorCode::InvalidArgument, "unknown mode: " + std::string(name));
}

std::string_view head_kind_name(HeadKind head) {
  switch (head) {
    case HeadKind::GraphScalar: return "graph_scalar";
    case HeadKind::NodeScalar: return "node_scalar";
    case HeadKind::NodeVector: return "node_vector";
  }
  return "graph_scalar";
}

HeadKind parse_head_kind(std::string_view name) {
  if (name == "graph_scalar") return HeadKind::GraphScalar;
  if (name == "node_scalar") return HeadKind::NodeScalar;
  if (name == "node_vector") return HeadKind::NodeVector;
  throw Error(ErrorCode::InvalidArgument, "unknown head: " + std::string(name));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double silu(double z) { return z * sigmoid(z); }

namespace {

double silu_grad(double z) {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

}  // namespace

int ModelConfig::invariant_width() const {
  int w = scalar_k * scalar_channels;
  if (uses_vector_track()) w += 3 * vector_k;
  return w;
}

int ModelConfig::output_dim() const { return head == HeadKind::NodeVector ? d : 1; }

int ModelConfig::head_input_width() const {
  return head == HeadKind::GraphScalar ? 2 * invariant_width() : invariant_width();
}

void ModelConfig::validate() const {
  auto positive = [](int v) { return v > 0; };
  bool ok = positive(d) && positive(scalar_channels) && positive(scalar_paths) &&
            positive(scalar_k) && (!uses_vector_track() || (positive(vector_paths) && positive(vector_k)));
  for (int w : scalar_hidden) ok = ok && positive(w);
  for (int w : vector_hidden) ok = ok && positive(w);
  for (int w : head_hidden) ok = ok && positive(w);
  for (int w : gate_hidden) ok = ok && positive(w);
  if (!ok) throw Error(ErrorCode::ConfigMismatch, "model widths must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::ConfigMismatch, "dropout must lie in [0, 1)");
  }
  if (head == HeadKind::NodeVector && mode == ModelMode::Equivariant &&
      (output_scale != 1.0 || output_shift != 0.0)) {
    throw Error(ErrorCode::ConfigMismatch, "equivariant vector head takes no output affine map");
  }
  if (head_input_shift.size() != head_input_scale.size() ||
      (!head_input_scale.empty() &&
       static_cast<int>(head_input_scale.size()) != head_input_width())) {
    throw Error(ErrorCode::ConfigMismatch, "head input standardization has the wrong width");
  }
  for (double s : head_input_scale) {
    if (!(s > 0.0)) throw Error(ErrorCode::ConfigMismatch, "head input scales must be positive");
  }
}

EscGnn::EscGnn(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;

  std::vector<int> widths{c.scalar_paths};
  widths.insert(widths.end(), c.scalar_hidden.begin(), c.scalar_hidden.end());
  widths.push_back(c.scalar_k);
  scalar_mix_ = make_stack("scalar_mix", widths, true, true, 0.0);

  if (c.uses_vector_track()) {
    int in = c.vector_paths;
    std::vector<int> vw = c.vector_hidden;
    vw.push_back(c.vector_k);
    for (std::size_t l = 0; l < vw.size(); ++l) {
      vector_maps_.push_back(add_block("vector_mix." + std::to_string(l) + ".weight", vw[l], in));
      in = vw[l];
    }
    gate_logits_ = add_block("vector_mix.gate_logits", 1, c.vector_k);
  }

  const int width = c.invariant_width();
  if (c.head == HeadKind::NodeVector && c.mode == ModelMode::Equivariant) {
    std::vector<int> gw{width};
    gw.insert(gw.end(), c.gate_hidden.begin(), c.gate_hidden.end());
    gw.push_back(c.vector_k);
    head_ = make_stack("gate_head", gw, true, true, 0.0);
  } else {
    std::vector<int> hw{c.head == HeadKind::GraphScalar ? 2 * width : width};
    hw.insert(hw.end(), c.head_hidden.begin(), c.head_hidden.end());
    hw.push_back(c.output_dim());
    head_ = make_stack("head", hw, true, true, c.dropout);
  }
  params_ = Eigen::VectorXd::Zero(total_);
}

int EscGnn::add_block(const std::string& name, int rows, int cols) {
  manifest_.push_back(ParamBlock{name, rows, cols, total_});
  total_ += manifest_.back().size();
  return static_cast<int>(manifest_.size()) - 1;
}

EscGnn::DenseStack EscGnn::make_stack(const std::string& prefix, const std::vector<int>& widths,
                                      bool bias, bool hidden_silu, double dropout) {
  DenseStack stack;
  stack.hidden_silu = hidden_silu;
  stack.dropout = dropout;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    stack.weights.push_back(add_block(base + ".weight", widths[l + 1], widths[l]));
    stack.biases.push_back(bias ? add_block(base + ".bias", 1, widths[l + 1]) : -1);
  }
  return stack;
}

const ParamBlock& EscGnn::block(std::string_view name) const {
  for (const auto& b : manifest_) {
    if (b.name == name) return b;
  }
  throw Error(ErrorCode::InvalidArgument, "no parameter block named " + std::string(name));
}

Eigen::Map<const RowMatrix> EscGnn::view(const ParamBlock& b) const {
  return {params_.data() + b.offset, b.rows, b.cols};
}

void EscGnn::initialize(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x494e4954ULL);
  params_.setZero();
  for (const auto& b : manifest_) {
    const bool is_weight = b.name.size() > 7 && b.name.ends_with(".weight");
    if (!is_weight) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::int64_t k = 0; k < b.size(); ++k) params_[b.offset + k] = dist(rng);
  }
}

RowMatrix EscGnn::run_stack(const DenseStack& stack, const RowMatrix& input, DenseTrace* trace,
                            Rng* rng) const {
  const std::size_t layers = stack.weights.size();
  if (trace) {
    trace->activations.clear();
    trace->preactivations.clear();
    trace->dropout_masks.assign(layers, RowMatrix());
  }
  RowMatrix h = input;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto w = view(manifest_[stack.weights[l]]);
    RowMatrix z = h * w.transpose();
    if (stack.biases[l] >= 0) z.rowwise() += view(manifest_[stack.biases[l]]).row(0);
    if (trace) {
      trace->activations.push_back(std::move(h));
      trace->preactivations.push_back(z);
    }
    if (l + 1 == layers) {
      h = std::move(z);
      break;
    }
    h = stack.hidden_silu ? RowMatrix(z.unaryExpr([](double v) { return silu(v); })) : z;
    if (rng && stack.dropout > 0.0) {
      const double keep = 1.0 - stack.dropout;
      std::bernoulli_distribution coin(keep);
      RowMatrix mask(h.rows(), h.cols());
      for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = coin(*rng) ? 1.0 / keep : 0.0;
      h = h.cwiseProduct(mask);
      if (trace) trace->dropout_masks[l] = std::move(mask);
    }
  }
  if (trace) trace->activations.push_back(h);
  return h;
}

RowMatrix EscGnn::backprop_stack(const DenseStack& stack, const DenseTrace& trace,
                                 const RowMatrix& grad_out, Eigen::VectorXd& grad) const {
  const std::size_t layers = stack.weights.size();
  RowMatrix dh = grad_out;
  for (std::size_t l = layers; l-- > 0;) {
    RowMatrix dz;
    if (l + 1 == layers) {
      dz = std::move(dh);
    } else {
      if (trace.dropout_masks[l].size() > 0) dh = dh.cwiseProduct(trace.dropout_masks[l]);
      const auto& z = trace.preactivations[l];
      dz = stack.hidden_silu ? RowMatrix(dh.cwiseProduct(z.unaryExpr([](double v) { return silu_grad(v); })))
                             : dh;
    }
    const ParamBlock& wb = manifest_[stack.weights[l]];
    Eigen::Map<RowMatrix> gw(grad.data() + wb.offset, wb.rows, wb.cols);
    gw.noalias() += dz.transpose() * trace.activations[l];
    if (stack.biases[l] >= 0) {
      const ParamBlock& bb = manifest_[stack.biases[l]];
      Eigen::Map<RowMatrix> gb(grad.data() + bb.offset, 1, bb.cols);
      gb += dz.colwise().sum();
    }
    dh = dz * view(wb);
  }
  return dh;
}

RowMatrix EscGnn::head_input(const RowMatrix& raw) const {
  const auto& c = config_;
  if (c.head_input_scale.empty()) return raw;
  RowMatrix x = raw;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    x.col(k) = (x.col(k).array() - c.head_input_shift[k]) / c.head_input_scale[k];
  }
  return x;
}

void EscGnn::head_input_backward(RowMatrix& grad) const {
  const auto& c = config_;
  if (c.head_input_scale.empty()) return;
  for (Eigen::Index k = 0; k < grad.cols(); ++k) grad.col(k) /= c.head_input_scale[k];
}

void EscGnn::calibrate_head_input(const std::vector<ModelInput>& inputs) {
  config_.head_input_shift.clear();
  config_.head_input_scale.clear();
  const int width = config_.head_input_width();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(width);
  double rows = 0.0;
  ForwardCache fc;
  for (const auto& in : inputs) {
    forward(in, &fc, nullptr);
    // The head trace starts with the (unstandardized) head input.
    const RowMatrix& x = fc.head.activations.front();
    sum += x.colwise().sum().transpose();
    sum2 += x.array().square().matrix().colwise().sum().transpose();
    rows += static_cast<double>(x.rows());
  }
  if (rows == 0.0) return;
  config_.head_input_shift.resize(width);
  config_.head_input_scale.resize(width);
  for (int k = 0; k < width; ++k) {
    const double mean = sum[k] / rows;
    const double var = std::max(sum2[k] / rows - mean * mean, 0.0);
    config_.head_input_shift[k] = mean;
    config_.head_input_scale[k] = std::sqrt(var) > 1e-8 ? std::sqrt(var) : 1.0;
  }
}

RowMatrix EscGnn::vector_theta() const {
  RowMatrix theta = view(manifest_[vector_maps_.front()]);
  for (std::size_t l = 1; l < vector_maps_.size(); ++l) {
    theta = view(manifest_[vector_maps_[l]]) * theta;
  }
  return theta;
}

Prediction EscGnn::forward(const ModelInput& input, ForwardCache* cache, Rng* rng) const {
  const auto& c = config_;
  if (!input.scalar_scattering || !input.graph) {
    throw Error(ErrorCode::ConfigMismatch, "model input needs scalar scattering and a graph");
  }
  const Tensor3& xs = *input.scalar_scattering;
  const int n = input.graph->num_nodes();
  if (xs.dim0() != n || xs.dim1() != c.scalar_channels || xs.dim2() != c.scalar_paths) {
    throw Error(ErrorCode::ShapeMismatch, "scalar scattering tensor does not match the model");
  }
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.n = n;

  const RowMatrix xp = run_stack(scalar_mix_, RowMatrix(xs.rows()), &fc.scalar_mix, nullptr);
  const int width = c.invariant_width();
  fc.features.resize(n, width);
  const int scalar_width = c.scalar_channels * c.scalar_k;
  fc.features.leftCols(scalar_width) = Eigen::Map<const RowMatrix>(xp.data(), n, scalar_width);

  if (c.uses_vector_track()) {
    if (!input.vector_scattering) {
      throw Error(ErrorCode::ConfigMismatch, "equivariant mode needs vector scattering");
    }
    const Tensor3& ws = *input.vector_scattering;
    if (ws.dim0() != n || ws.dim1() != c.d || ws.dim2() != c.vector_paths) {
      throw Error(ErrorCode::ShapeMismatch, "vector scattering tensor does not match the model");
    }
    fc.vector_rows = ws.rows();
    fc.theta = vector_theta();
    fc.gates.resize(c.vector_k);
    const auto logits = view(manifest_[gate_logits_]);
    for (int k = 0; k < c.vector_k; ++k) fc.gates[k] = sigmoid(logits(0, k));
    fc.mixed_ungated = fc.vector_rows * fc.theta.transpose();
    fc.wmix = Tensor3(n, c.d, c.vector_k);
    fc.wmix.rows() = fc.mixed_ungated * fc.gates.asDiagonal();
    const Tensor3 inv = vector_invariants(fc.wmix, *input.graph);
    fc.features.rightCols(3 * c.vector_k) =
        Eigen::Map<const RowMatrix>(inv.data().data(), n, 3 * c.vector_k);
  }

  Prediction out;
  switch (c.head) {
    case HeadKind::GraphScalar: {
      RowMatrix pooled(1, 2 * width);
      fc.max_arg.assign(width, 0);
      for (int k = 0; k < width; ++k) {
        pooled(0, k) = fc.features.col(k).sum();
        Eigen::Index arg = 0;
        pooled(0, width + k) = fc.features.col(k).maxCoeff(&arg);
        fc.max_arg[k] = arg;
      }
      out = run_stack(head_, head_input(pooled), &fc.head, rng);
      break;
    }
    case HeadKind::NodeScalar:
      out = run_stack(head_, head_input(fc.features), &fc.head, rng);
      break;
    case HeadKind::NodeVector:
      if (c.mode == ModelMode::Equivariant) {
        fc.beta = run_stack(head_, head_input(fc.features), &fc.head, rng);
        out = RowMatrix::Zero(n, c.d);
        for (int i = 0; i < n; ++i) {
          for (int k = 0; k < c.vector_k; ++k) {
            const double g = sigmoid(fc.beta(i, k));
            for (int a = 0; a < c.d; ++a) out(i, a) += g * fc.wmix(i, a, k);
          }
        }
        return out;
      }
      out = run_stack(head_, head_input(fc.features), &fc.head, rng);
      break;
  }
  out = (out.array() * c.output_scale + c.output_shift).matrix();
  return out;
}

void EscGnn::backward(const ModelInput& input, const ForwardCache& fc, const Prediction& grad_out,
                      Eigen::VectorXd& grad) const {
  const auto& c = config_;
  if (grad.size() != total_) grad = Eigen::VectorXd::Zero(total_);
  const int n = fc.n;
  const int width = c.invariant_width();
  RowMatrix dfeat = RowMatrix::Zero(n, width);
  Tensor3 dwmix;
  if (c.uses_vector_track()) dwmix = Tensor3(n, c.d, c.vector_k);

  switch (c.head) {
    case HeadKind::GraphScalar: {
      RowMatrix dpooled = backprop_stack(head_, fc.head, grad_out * c.output_scale, grad);
      head_input_backward(dpooled);
      for (int k = 0; k < width; ++k) {
        dfeat.col(k).array() += dpooled(0, k);
        dfeat(fc.max_arg[k], k) += dpooled(0, width + k);
      }
      break;
    }
    case HeadKind::NodeScalar:
      dfeat = backprop_stack(head_, fc.head, grad_out * c.output_scale, grad);
      head_input_backward(dfeat);
      break;
    case HeadKind::NodeVector:
      if (c.mode == ModelMode::Equivariant) {
        RowMatrix dbeta(n, c.vector_k);
        for (int i = 0; i < n; ++i) {
          for (int k = 0; k < c.vector_k; ++k) {
            const double g = sigmoid(fc.beta(i, k));
            double dot = 0.0;
            for (int a = 0; a < c.d; ++a) {
              dot += grad_out(i, a) * fc.wmix(i, a, k);
              dwmix(i, a, k) += g * grad_out(i, a);
            }
            dbeta(i, k) = dot * g * (1.0 - g);
          }
        }
        dfeat = backprop_stack(head_, fc.head, dbeta, grad);
      } else {
        dfeat = backprop_stack(head_, fc.head, grad_out * c.output_scale, grad);
      }
      head_input_backward(dfeat);
      break;
  }

  const int scalar_width = c.scalar_channels * c.scalar_k;
  const RowMatrix scalar_part = dfeat.leftCols(scalar_width);
  const RowMatrix dxp =
      Eigen::Map<const RowMatrix>(scalar_part.data(), n * c.scalar_channels, c.scalar_k);
  backprop_stack(scalar_mix_, fc.scalar_mix, dxp, grad);

  if (!c.uses_vector_track()) return;

  Tensor3 dinv(n, 3, c.vector_k);
  Eigen::Map<RowMatrix>(dinv.data().data(), n, 3 * c.vector_k) = dfeat.rightCols(3 * c.vector_k);
  const Tensor3 dw_inv = vector_invariants_backward(fc.wmix, *input.graph, dinv);
  RowMatrix dmix = dwmix.rows() + dw_inv.rows();  // (n d) x K_v, w.r.t. gated output

  // Gates: wmix = mixed_ungated * diag(g), g = sigmoid(alpha).
  const ParamBlock& gb = manifest_[gate_logits_];
  for (int k = 0; k < c.vector_k; ++k) {
    const double g = fc.gates[k];
    grad[gb.offset + k] += dmix.col(k).dot(fc.mixed_ungated.col(k)) * g * (1.0 - g);
  }
  const RowMatrix dmixed = dmix * fc.gates.asDiagonal();
  // mixed = rows * theta^T  =>  dtheta = dmixed^T rows.
  RowMatrix dtheta = dmixed.transpose() * fc.vector_rows;  // K_v x S_v

  // theta = M_L ... M_1; dM_l = (M_L..M_{l+1})^T dtheta (M_{l-1}..M_1)^T.
  const std::size_t layers = vector_maps_.size();
  std::vector<RowMatrix> prefix(layers + 1);  // prefix[l] = M_{l}..M_1 (0-based: first l maps)
  prefix[0] = RowMatrix::Identity(c.vector_paths, c.vector_paths);
  for (std::size_t l = 0; l < layers; ++l) prefix[l + 1] = view(manifest_[vector_maps_[l]]) * prefix[l];
  RowMatrix suffix_t_dtheta = dtheta;  // (M_L..M_{l+1})^T dtheta
  for (std::size_t l = layers; l-- > 0;) {
    const ParamBlock& mb = manifest_[vector_maps_[l]];
    Eigen::Map<RowMatrix> gm(grad.data() + mb.offset, mb.rows, mb.cols);
    gm.noalias() += suffix_t_dtheta * prefix[l].transpose();
    suffix_t_dtheta = view(mb).transpose() * suffix_t_dtheta;
  }
}

double squared_error(const Prediction& pred, const Eigen::MatrixXd& target, double normalizer,
                     Prediction* grad_out) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and target shapes differ");
  }
  const RowMatrix diff = pred - RowMatrix(target);
  if (grad_out) *grad_out = diff * (2.0 / normalizer);
  return diff.squaredNorm();
}

}  // namespace escgnn
