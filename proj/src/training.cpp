#include "escgnn/training.hpp"

#include "escgnn/diffusion_ops.hpp"
#include "escgnn/error.hpp"
#include "escgnn/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace escgnn {

void Schedule::validate() const {
  const bool ok = lr0 >= 0.0 && batch > 0 && burn_in >= 0 && patience > 0 && check_every > 0 &&
                  restarts_max >= 0 && epochs_max > 0 && patience % check_every == 0;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "invalid training schedule");
}

AdamW::AdamW(std::int64_t size, const Schedule& s)
    : m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)),
      beta1_(s.beta1),
      beta2_(s.beta2),
      eps_(s.adam_eps),
      weight_decay_(s.weight_decay) {}

void AdamW::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params *= (1.0 - lr * weight_decay_);
  params.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

CvPlan CvPlan::make(int num_records, std::uint64_t seed) {
  if (num_records < kFolds) {
    throw Error(ErrorCode::InvalidArgument, "need at least 5 records for 5-fold CV");
  }
  std::vector<int> order(num_records);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0x43564650ULL);
  std::shuffle(order.begin(), order.end(), rng);
  CvPlan plan;
  plan.fold_of.assign(num_records, 0);
  for (int r = 0; r < num_records; ++r) plan.fold_of[order[r]] = r % kFolds;
  return plan;
}

CvPlan::Split CvPlan::split(int step) const {
  if (step < 0 || step >= kFolds) throw Error(ErrorCode::InvalidArgument, "fold out of range");
  Split s;
  const int val_fold = (step + 1) % kFolds;
  for (int r = 0; r < static_cast<int>(fold_of.size()); ++r) {
    if (fold_of[r] == step) {
      s.test.push_back(r);
    } else if (fold_of[r] == val_fold) {
      s.val.push_back(r);
    } else {
      s.train.push_back(r);
    }
  }
  return s;
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return {buf, res.ptr};
}

}  // namespace

std::string metrics_csv_line(const MetricsRow& row) {
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.6f", row.wall_seconds);
  return std::to_string(row.fold) + ',' + std::to_string(row.epoch) + ',' +
         std::string(split_tag_name(row.split)) + ',' + shortest(row.mse) + ',' + shortest(row.lr) +
         ',' + wall + ',' + (row.is_best ? '1' : '0');
}

Eigen::MatrixXd scalar_inputs(const GeometricGraph& graph, ModelMode mode) {
  if (mode == ModelMode::Equivariant || graph.vector_signals.empty()) return graph.scalar_signals;
  const auto& w = graph.vector_signals.front();
  Eigen::MatrixXd x(graph.num_nodes(), graph.scalar_signals.cols() + w.cols());
  x << graph.scalar_signals, w;
  return x;
}

namespace {

Eigen::MatrixXd flatten_vector_signal(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd flat(w.size(), 1);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) flat(i * w.cols() + c, 0) = w(i, c);
  }
  return flat;
}

}  // namespace

std::pair<WaveletBank, WaveletBank> select_banks(const std::vector<const GeometricGraph*>& graphs,
                                                 ModelMode mode, const BankSelection& selection) {
  if (selection.mode != BankMode::InfoGain) {
    const auto bank = dyadic_scales(selection.dyadic_J);
    return {bank, bank};
  }
  std::vector<std::vector<int>> scalar_crossings;
  std::vector<std::vector<int>> vector_crossings;
  for (const auto* g : graphs) {
    const SparseOperator p = build_lazy_walk(*g);
    for (const auto& curve : diffusion_decay(p, scalar_inputs(*g, mode), selection.infogain.t_max)) {
      auto c = quantile_crossings(curve, selection.infogain.quantiles);
      if (!c.empty()) scalar_crossings.push_back(std::move(c));
    }
    if (mode == ModelMode::Equivariant && !g->vector_signals.empty()) {
      const BlockSparseOperator q = build_vector_diffusion(p, build_local_frames(*g));
      for (const auto& curve :
           diffusion_decay(q, flatten_vector_signal(g->vector_signals.front()), selection.infogain.t_max)) {
        auto c = quantile_crossings(curve, selection.infogain.quantiles);
        if (!c.empty()) vector_crossings.push_back(std::move(c));
      }
    }
  }
  const WaveletBank scalar_bank = merge_infogain_scales(scalar_crossings, selection.infogain);
  const WaveletBank vector_bank = mode == ModelMode::Equivariant
                                      ? merge_infogain_scales(vector_crossings, selection.infogain)
                                      : scalar_bank;
  return {scalar_bank, vector_bank};
}

GraphFeatures compute_features(const GeometricGraph& graph, const FeatureConfig& config) {
  GraphFeatures out;
  const SparseOperator p = build_lazy_walk(graph);
  out.scalar = scalar_scattering(p, config.scalar_bank, scalar_inputs(graph, config.mode),
                                 config.scattering)
                   .values;
  if (config.mode == ModelMode::Equivariant) {
    if (graph.vector_signals.empty()) {
      throw Error(ErrorCode::ConfigMismatch, "equivariant features need a vector signal");
    }
    FrameOptions fo;
    fo.canonicalize_signs = config.canonicalize_signs;
    const BlockSparseOperator q = build_vector_diffusion(p, build_local_frames(graph, fo));
    out.vector = vector_scattering(q, config.vector_bank, graph.vector_signals.front(),
                                   config.scattering)
                     .values;
  }
  return out;
}

Example make_example(const DatasetRecord& record, const FeatureConfig& config) {
  Example ex;
  ex.graph = record.graph;
  ex.features = compute_features(record.graph, config);
  if (record.graph_target) {
    ex.target = Eigen::MatrixXd::Constant(1, 1, *record.graph_target);
  } else if (record.node_targets) {
    ex.target = *record.node_targets;
  } else {
    throw Error(ErrorCode::ConfigMismatch, "record has no target");
  }
  return ex;
}

double evaluate_mse(const EscGnn& model, const std::vector<Example>& examples) {
  double sse = 0.0;
  double count = 0.0;
  for (const auto& ex : examples) {
    const Prediction pred = model.forward(ex.input());
    sse += squared_error(pred, ex.target, 1.0, nullptr);
    count += static_cast<double>(ex.target.size());
  }
  return count > 0.0 ? sse / count : 0.0;
}

ModelConfig default_model_config(TaskKind task, ModelMode mode, const FeatureConfig& features,
                                 int scalar_channels, int d) {
  ModelConfig c;
  c.mode = mode;
  c.head = task == TaskKind::Diameter ? HeadKind::GraphScalar : HeadKind::NodeVector;
  c.d = d;
  c.scalar_channels = scalar_channels;
  c.scalar_paths = static_cast<int>(scattering_paths(features.scalar_bank.num_bands(), features.scattering).size());
  c.vector_paths = static_cast<int>(scattering_paths(features.vector_bank.num_bands(), features.scattering).size());
  c.dropout = task == TaskKind::Diameter ? 0.7 : 0.0;
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

TrainResult train_fold(EscGnn& model, const std::vector<Example>& train,
                       const std::vector<Example>& val, const Schedule& schedule,
                       std::uint64_t seed, int fold) {
  schedule.validate();
  if (train.empty() || val.empty()) {
    throw Error(ErrorCode::InvalidArgument, "training needs non-empty train and val sets");
  }
  const auto start = Clock::now();
  Rng rng = make_rng(seed, 0x5452414eULL, static_cast<std::uint64_t>(fold));
  AdamW opt(model.parameter_count(), schedule);

  TrainResult result;
  result.best_params = model.params();
  result.best_val_mse = std::numeric_limits<double>::infinity();
  double lr = schedule.lr0;
  int reference_epoch = 0;  // last improvement or restart
  double train_seconds = 0.0;

  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd grad(model.parameter_count());
  ForwardCache cache;
  Prediction dpred;

  for (int epoch = 1; epoch <= schedule.epochs_max; ++epoch) {
    const auto epoch_start = Clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sse = 0.0;
    double epoch_count = 0.0;
    for (std::size_t first = 0; first < order.size(); first += schedule.batch) {
      const std::size_t last = std::min(order.size(), first + schedule.batch);
      double normalizer = 0.0;
      for (std::size_t b = first; b < last; ++b) normalizer += static_cast<double>(train[order[b]].target.size());
      grad.setZero();
      for (std::size_t b = first; b < last; ++b) {
        const Example& ex = train[order[b]];
        const Prediction pred = model.forward(ex.input(), &cache, &rng);
        epoch_sse += squared_error(pred, ex.target, normalizer, &dpred);
        model.backward(ex.input(), cache, dpred, grad);
      }
      epoch_count += normalizer;
      if (!grad.allFinite()) {
        throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient in fold " + std::to_string(fold));
      }
      opt.step(model.params(), grad, lr);
    }
    train_seconds += seconds_since(epoch_start);
    const double train_mse = epoch_sse / epoch_count;
    if (!std::isfinite(train_mse)) {
      throw Error(ErrorCode::NonFiniteLoss, "non-finite training loss in fold " + std::to_string(fold));
    }

    const double val_mse = evaluate_mse(model, val);
    const bool improved = val_mse < result.best_val_mse - 1e-12;
    if (improved) {
      result.best_val_mse = val_mse;
      result.best_epoch = epoch;
      result.best_params = model.params();
      reference_epoch = epoch;
    }
    const double wall = seconds_since(start);
    result.metrics.push_back({fold, epoch, SplitTag::Train, train_mse, lr, wall, false});
    result.metrics.push_back({fold, epoch, SplitTag::Val, val_mse, lr, wall, improved});
    result.lr_history.push_back(lr);
    result.epochs_run = epoch;

    if (epoch >= schedule.burn_in && epoch % schedule.check_every == 0 &&
        epoch - reference_epoch >= schedule.patience) {
      if (result.restarts >= schedule.restarts_max) break;
      ++result.restarts;
      lr *= 0.5;
      model.params() = result.best_params;
      reference_epoch = epoch;
    }
  }
  model.params() = result.best_params;
  result.train_seconds_per_epoch = train_seconds / std::max(1, result.epochs_run);
  return result;
}

void initialize_model(EscGnn& model, std::uint64_t seed, const std::vector<Example>& train,
                      bool standardize_head_input) {
  model.initialize(seed);
  if (!standardize_head_input) return;
  std::vector<ModelInput> inputs;
  inputs.reserve(train.size());
  for (const auto& ex : train) inputs.push_back(ex.input());
  model.calibrate_head_input(inputs);
}

FoldSetup prepare_fold(const std::vector<DatasetRecord>& records, TaskKind task, ModelMode mode,
                       const CvPlan& plan, int step, const CvOptions& options,
                       const Rotation& test_rotation) {
  FoldSetup setup;
  const auto split = plan.split(step);
  setup.train = split.train;
  setup.val = split.val;
  setup.test = split.test;

  std::pair<WaveletBank, WaveletBank> banks;
  if (options.fixed_banks) {
    banks = *options.fixed_banks;
  } else {
    std::vector<const GeometricGraph*> train_graphs;
    for (int r : split.train) train_graphs.push_back(&records[r].graph);
    banks = select_banks(train_graphs, mode, options.banks);
  }
  const auto& [sbank, vbank] = banks;
  setup.features.mode = mode;
  setup.features.scalar_bank = sbank;
  setup.features.vector_bank = vbank;
  setup.features.scattering = options.scattering;

  auto build = [&](const std::vector<int>& idx, SplitTag tag, bool rotate) {
    std::vector<Example> out;
    out.reserve(idx.size());
    for (int r : idx) {
      DatasetRecord rec = rotate ? rotate_record(records[r], test_rotation) : records[r];
      rec.split = tag;
      if (options.features) {
        Example ex;
        ex.features = options.features(rec, setup.features);
        ex.target = rec.graph_target ? Eigen::MatrixXd::Constant(1, 1, *rec.graph_target)
                                     : rec.node_targets.value();
        ex.graph = std::move(rec.graph);
        out.push_back(std::move(ex));
      } else {
        out.push_back(make_example(rec, setup.features));
      }
    }
    return out;
  };
  setup.train_examples = build(split.train, SplitTag::Train, false);
  setup.val_examples = build(split.val, SplitTag::Val, false);
  setup.test_examples = build(split.test, SplitTag::Test, false);
  setup.test_rotated_examples = build(split.test, SplitTag::Test, true);

  const int channels = static_cast<int>(scalar_inputs(records.front().graph, mode).cols());
  setup.model = default_model_config(task, mode, setup.features, channels,
                                     records.front().graph.dim());
  if (options.dropout) setup.model.dropout = *options.dropout;
  const bool scalar_head = setup.model.head != HeadKind::NodeVector;
  if (options.standardize_targets && (scalar_head || mode == ModelMode::Ablated)) {
    double sum = 0.0, sum2 = 0.0, count = 0.0;
    for (const auto& ex : setup.train_examples) {
      sum += ex.target.sum();
      sum2 += ex.target.squaredNorm();
      count += static_cast<double>(ex.target.size());
    }
    const double mean = sum / count;
    const double var = std::max(sum2 / count - mean * mean, 1e-12);
    setup.model.output_scale = std::sqrt(var);
    setup.model.output_shift = scalar_head ? mean : 0.0;
  }
  return setup;
}

FoldRun run_cv_fold(const std::vector<DatasetRecord>& records, TaskKind task, ModelMode mode,
                    const CvPlan& plan, int step, const Schedule& schedule, std::uint64_t seed,
                    const CvOptions& options) {
  FoldSetup setup = prepare_fold(records, task, mode, plan, step, options);
  EscGnn model(setup.model);
  initialize_model(model, derive_seed(seed, 0x4d4f44ULL, static_cast<std::uint64_t>(step)),
                   setup.train_examples, options.standardize_head_input);
  TrainResult tr = train_fold(model, setup.train_examples, setup.val_examples, schedule, seed, step);

  FoldRun run;
  run.parameter_count = model.parameter_count();
  FoldSummary& fs = run.summary;
  fs.fold = step;
  fs.best_val_mse = tr.best_val_mse;
  fs.best_epoch = tr.best_epoch;
  fs.epochs_run = tr.epochs_run;
  fs.restarts = tr.restarts;
  fs.train_seconds_per_epoch = tr.train_seconds_per_epoch;
  const auto t0 = Clock::now();
  fs.test_mse = evaluate_mse(model, setup.test_rotated_examples);
  fs.inference_seconds = seconds_since(t0);
  fs.test_mse_unrotated = evaluate_mse(model, setup.test_examples);
  fs.scalar_scales = setup.features.scalar_bank.scales;
  fs.vector_scales = setup.features.vector_bank.scales;
  run.metrics = std::move(tr.metrics);
  const double wall = run.metrics.empty() ? 0.0 : run.metrics.back().wall_seconds;
  run.metrics.push_back({step, tr.best_epoch, SplitTag::Test, fs.test_mse, 0.0,
                         wall + fs.inference_seconds, true});
  return run;
}

CvSummary summarize_cv(TaskKind task, ModelMode mode, std::vector<FoldRun> runs) {
  CvSummary summary;
  summary.task = task;
  summary.mode = mode;
  for (auto& run : runs) {
    summary.parameter_count = run.parameter_count;
    summary.metrics.insert(summary.metrics.end(), run.metrics.begin(), run.metrics.end());
    summary.folds.push_back(std::move(run.summary));
  }
  if (summary.folds.empty()) return summary;
  auto stats = [&](auto field, double& mean, double& stddev) {
    const double k = static_cast<double>(summary.folds.size());
    mean = 0.0;
    for (const auto& f : summary.folds) mean += field(f);
    mean /= k;
    double acc = 0.0;
    for (const auto& f : summary.folds) acc += (field(f) - mean) * (field(f) - mean);
    stddev = k > 1 ? std::sqrt(acc / (k - 1.0)) : 0.0;
  };
  stats([](const FoldSummary& f) { return f.best_val_mse; }, summary.mean_val, summary.std_val);
  stats([](const FoldSummary& f) { return f.test_mse; }, summary.mean_test, summary.std_test);
  return summary;
}

CvSummary run_cv(const std::vector<DatasetRecord>& records, TaskKind task, ModelMode mode,
                 const Schedule& schedule, std::uint64_t seed, const CvOptions& options) {
  const CvPlan plan = CvPlan::make(static_cast<int>(records.size()), seed);
  std::vector<FoldRun> runs;
  for (int step : options.folds) {
    runs.push_back(run_cv_fold(records, task, mode, plan, step, schedule, seed, options));
  }
  return summarize_cv(task, mode, std::move(runs));
}

}  // namespace escgnn
