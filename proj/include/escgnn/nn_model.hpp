#pragma once

#include "escgnn/geometry.hpp"
#include "escgnn/rng.hpp"
#include "escgnn/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace escgnn {

enum class ModelMode { Equivariant, Ablated };
enum class HeadKind { GraphScalar, NodeScalar, NodeVector };

std::string_view model_mode_name(ModelMode mode);
ModelMode parse_model_mode(std::string_view name);
std::string_view head_kind_name(HeadKind head);
HeadKind parse_head_kind(std::string_view name);

double silu(double z);
double sigmoid(double z);

struct ModelConfig {
  ModelMode mode = ModelMode::Equivariant;
  HeadKind head = HeadKind::GraphScalar;
  int d = 3;
  int scalar_channels = 2;  // scalar input signals (Diracs, plus d coordinates when ablated)
  int scalar_paths = 1;     // S of the scalar track
  int vector_paths = 1;     // S of the vector track (unused when ablated)
  int scalar_k = 16;
  std::vector<int> scalar_hidden{64, 64};
  int vector_k = 32;
  std::vector<int> vector_hidden{128, 128};
  std::vector<int> head_hidden{128, 64, 32, 16};
  std::vector<int> gate_hidden{128, 128};
  double dropout = 0.0;  // drop probability between head layers
  // Fixed affine map on scalar-head outputs: y = raw * scale + shift.
  double output_scale = 1.0;
  double output_shift = 0.0;
  // Fixed per-column standardization of the head input (empty: none).
  std::vector<double> head_input_shift;
  std::vector<double> head_input_scale;

  bool uses_vector_track() const { return mode == ModelMode::Equivariant; }
  /// Per-node flattened invariant width: K_s F_s (+ 3 K_v when equivariant).
  int invariant_width() const;
  int output_dim() const;
  /// Width of the head (or gate head) input row.
  int head_input_width() const;
  void validate() const;
};

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::int64_t offset = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(rows) * cols; }
};

/// Per-graph inputs: scattering tensors and the graph (for neighbor cosines).
struct ModelInput {
  const Tensor3* scalar_scattering = nullptr;  // n x F_s x S_s
  const Tensor3* vector_scattering = nullptr;  // n x d x S_v (equivariant mode)
  const GeometricGraph* graph = nullptr;
};

struct DenseTrace {
  std::vector<RowMatrix> activations;     // input of each layer, then final output
  std::vector<RowMatrix> preactivations;  // per layer
  std::vector<RowMatrix> dropout_masks;   // per hidden layer, empty when off
};

/// Intermediates kept by forward() for backward().
struct ForwardCache {
  int n = 0;
  DenseTrace scalar_mix;
  RowMatrix vector_rows;  // (n d) x S_v
  RowMatrix theta;        // K_v x S_v
  Eigen::VectorXd gates;  // sigmoid(alpha)
  RowMatrix mixed_ungated;  // (n d) x K_v
  Tensor3 wmix;             // n x d x K_v
  RowMatrix features;       // n x invariant_width
  std::vector<Eigen::Index> max_arg;  // graph head: argmax node per pooled column
  DenseTrace head;
  RowMatrix beta;           // n x K_v (equivariant vector head)
};

/// Prediction: 1 x 1 (graph scalar), n x 1 (node scalar) or n x d.
using Prediction = RowMatrix;

/// The scattering GNN with exact reverse-mode gradients. Parameters live in
/// one flat vector described by manifest().
class EscGnn {
 public:
  explicit EscGnn(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const std::vector<ParamBlock>& manifest() const { return manifest_; }
  const ParamBlock& block(std::string_view name) const;
  std::int64_t parameter_count() const { return total_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  /// Glorot-uniform weights, zero biases, zero gate logits.
  void initialize(std::uint64_t seed);

  /// Sets the head-input standardization to the column means and standard
  /// deviations seen on `inputs` under the current parameters.
  void calibrate_head_input(const std::vector<ModelInput>& inputs);

  /// `rng` enables dropout (training mode); pass nullptr for evaluation.
  Prediction forward(const ModelInput& input, ForwardCache* cache = nullptr,
                     Rng* rng = nullptr) const;

  /// Accumulates dL/dparams into `grad` given dL/dprediction.
  void backward(const ModelInput& input, const ForwardCache& cache, const Prediction& grad_out,
                Eigen::VectorXd& grad) const;

 private:
  struct DenseStack {
    std::vector<int> weights;  // manifest indices
    std::vector<int> biases;   // -1 when bias-free
    bool hidden_silu = true;
    double dropout = 0.0;
  };

  int add_block(const std::string& name, int rows, int cols);
  DenseStack make_stack(const std::string& prefix, const std::vector<int>& widths, bool bias,
                        bool hidden_silu, double dropout);
  Eigen::Map<const RowMatrix> view(const ParamBlock& b) const;

  RowMatrix run_stack(const DenseStack& stack, const RowMatrix& input, DenseTrace* trace,
                      Rng* rng) const;
  RowMatrix backprop_stack(const DenseStack& stack, const DenseTrace& trace,
                           const RowMatrix& grad_out, Eigen::VectorXd& grad) const;
  RowMatrix vector_theta() const;
  RowMatrix head_input(const RowMatrix& raw) const;
  void head_input_backward(RowMatrix& grad) const;

  ModelConfig config_;
  std::vector<ParamBlock> manifest_;
  std::int64_t total_ = 0;
  Eigen::VectorXd params_;
  DenseStack scalar_mix_;
  std::vector<int> vector_maps_;  // applied first to last
  int gate_logits_ = -1;
  DenseStack head_;
};

/// Loss = mean over all target entries of the squared error. Returns the
/// sum of squared errors and writes 2 (pred - target) / normalizer.
double squared_error(const Prediction& pred, const Eigen::MatrixXd& target, double normalizer,
                     Prediction* grad_out);

}  // namespace escgnn
