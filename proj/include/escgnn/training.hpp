#pragma once

#include "escgnn/nn_model.hpp"
#include "escgnn/scattering.hpp"
#include "escgnn/synthetic_data.hpp"
#include "escgnn/wavelets.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace escgnn {

struct Schedule {
  double lr0 = 1e-3;
  int batch = 32;
  int burn_in = 50;
  int patience = 50;
  int check_every = 5;
  int restarts_max = 2;
  int epochs_max = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

/// Decoupled weight decay Adam over a flat parameter vector.
class AdamW {
 public:
  AdamW(std::int64_t size, const Schedule& schedule);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
  std::int64_t steps() const { return t_; }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  double beta1_, beta2_, eps_, weight_decay_;
  std::int64_t t_ = 0;
};

/// Five folds; step s tests on fold s, validates on fold (s+1) mod 5 and
/// trains on the other three.
struct CvPlan {
  static constexpr int kFolds = 5;
  std::vector<int> fold_of;  // per record

  static CvPlan make(int num_records, std::uint64_t seed);

  struct Split {
    std::vector<int> train, val, test;
  };
  Split split(int step) const;
};

struct MetricsRow {
  int fold = 0;
  int epoch = 0;
  SplitTag split = SplitTag::Train;
  double mse = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
  bool is_best = false;
};

inline constexpr const char* kMetricsHeader = "fold,epoch,split,mse,lr,wall_seconds,is_best";
std::string metrics_csv_line(const MetricsRow& row);

struct BankSelection {
  BankMode mode = BankMode::InfoGain;
  int dyadic_J = 3;
  InfoGainOptions infogain;
};

/// Everything needed to turn a graph into model inputs.
struct FeatureConfig {
  ModelMode mode = ModelMode::Equivariant;
  WaveletBank scalar_bank;
  WaveletBank vector_bank;
  ScatteringConfig scattering;
  bool canonicalize_signs = true;
};

struct GraphFeatures {
  Tensor3 scalar;  // n x F_s x S_s
  Tensor3 vector;  // n x d x S_v (equivariant mode only)
};

/// Scalar input signals for a mode: the graph's scalar signals, plus the
/// coordinates of its vector signal as extra channels when ablated.
Eigen::MatrixXd scalar_inputs(const GeometricGraph& graph, ModelMode mode);

/// Banks picked from the given graphs: dyadic, or InfoGain over the scalar
/// inputs (with P) and the vector signal (with Q).
std::pair<WaveletBank, WaveletBank> select_banks(const std::vector<const GeometricGraph*>& graphs,
                                                 ModelMode mode, const BankSelection& selection);

/// Builds P, local frames, Q and both scattering tensors for one graph.
GraphFeatures compute_features(const GeometricGraph& graph, const FeatureConfig& config);

struct Example {
  GeometricGraph graph;
  GraphFeatures features;
  Eigen::MatrixXd target;  // 1 x 1 or n x d

  ModelInput input() const { return {&features.scalar, &features.vector, &graph}; }
};

Example make_example(const DatasetRecord& record, const FeatureConfig& config);

/// Mean squared error over all target entries of the examples.
double evaluate_mse(const EscGnn& model, const std::vector<Example>& examples);

/// Model configuration for a task and feature setup (paper widths).
ModelConfig default_model_config(TaskKind task, ModelMode mode, const FeatureConfig& features,
                                 int scalar_channels, int d = 3);

struct TrainResult {
  Eigen::VectorXd best_params;
  double best_val_mse = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  int restarts = 0;
  double train_seconds_per_epoch = 0.0;
  std::vector<MetricsRow> metrics;
  std::vector<double> lr_history;  // learning rate per epoch
};

/// AdamW on MSE with burn-in, patience-based lr halving with reload of the
/// best weights, and a restart cap. Leaves `model` at the best weights.
TrainResult train_fold(EscGnn& model, const std::vector<Example>& train,
                       const std::vector<Example>& val, const Schedule& schedule,
                       std::uint64_t seed, int fold = 0);

struct FoldSummary {
  int fold = 0;
  double best_val_mse = 0.0;
  double test_mse = 0.0;            // rotated test fold
  double test_mse_unrotated = 0.0;  // same weights, original orientation
  int best_epoch = 0;
  int epochs_run = 0;
  int restarts = 0;
  double train_seconds_per_epoch = 0.0;
  double inference_seconds = 0.0;
  std::vector<int> scalar_scales;
  std::vector<int> vector_scales;
};

struct CvSummary {
  TaskKind task = TaskKind::Diameter;
  ModelMode mode = ModelMode::Equivariant;
  std::int64_t parameter_count = 0;
  std::vector<FoldSummary> folds;
  std::vector<MetricsRow> metrics;
  double mean_val = 0.0, std_val = 0.0, mean_test = 0.0, std_test = 0.0;
};

struct CvOptions {
  BankSelection banks;
  ScatteringConfig scattering;
  std::vector<int> folds{0, 1, 2, 3, 4};
  bool standardize_targets = true;
  bool standardize_head_input = true;
  std::optional<double> dropout;  // default: 0.7 for graph targets, 0 otherwise
  // Fixed banks instead of selecting them on the training graphs.
  std::optional<std::pair<WaveletBank, WaveletBank>> fixed_banks;
  // Feature source; compute_features when empty (e.g. a disk cache).
  std::function<GraphFeatures(const DatasetRecord&, const FeatureConfig&)> features;
};

/// Initializes the weights and, when asked, calibrates the head-input
/// standardization on the training examples.
void initialize_model(EscGnn& model, std::uint64_t seed, const std::vector<Example>& train,
                      bool standardize_head_input);

/// A model ready to train for one CV step, with its features.
struct FoldSetup {
  FeatureConfig features;
  ModelConfig model;
  std::vector<int> train, val, test;
  std::vector<Example> train_examples, val_examples, test_examples, test_rotated_examples;
};

FoldSetup prepare_fold(const std::vector<DatasetRecord>& records, TaskKind task, ModelMode mode,
                       const CvPlan& plan, int step, const CvOptions& options,
                       const Rotation& test_rotation = default_test_rotation());

struct FoldRun {
  FoldSummary summary;
  std::vector<MetricsRow> metrics;
  std::int64_t parameter_count = 0;
};

/// Trains and evaluates one CV step. Independent steps may run concurrently.
FoldRun run_cv_fold(const std::vector<DatasetRecord>& records, TaskKind task, ModelMode mode,
                    const CvPlan& plan, int step, const Schedule& schedule, std::uint64_t seed,
                    const CvOptions& options = {});

/// Collects fold runs (in the given order) and computes mean and sample
/// standard deviation of the validation and rotated-test MSE.
CvSummary summarize_cv(TaskKind task, ModelMode mode, std::vector<FoldRun> runs);

CvSummary run_cv(const std::vector<DatasetRecord>& records, TaskKind task, ModelMode mode,
                 const Schedule& schedule, std::uint64_t seed, const CvOptions& options = {});

}  // namespace escgnn
