#include "escgnn/cli.hpp"

#include "escgnn/error.hpp"
#include "escgnn/io.hpp"
#include "escgnn/training.hpp"
#include "escgnn/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace escgnn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int worker_cap() {
  const char* env = std::getenv("THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<int>(v);
    throw Error(ErrorCode::InvalidArgument, "THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, count) on up to `workers` threads; rethrows the
// first failure.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) os << metrics_csv_line(r) << '\n';
  write_text(path, os.str());
}

// ---------------------------------------------------------------- dataset

struct Dataset {
  fs::path dir;
  json manifest;
  TaskKind task = TaskKind::Diameter;
  std::uint64_t seed = 0;
  CvPlan plan;
  std::vector<DatasetRecord> records;
  std::vector<std::vector<std::uint8_t>> bytes;
};

SplitTag split_for_fold(int fold, int step) {
  if (fold == step) return SplitTag::Test;
  if (fold == (step + 1) % CvPlan::kFolds) return SplitTag::Val;
  return SplitTag::Train;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  ds.dir = dir;
  try {
    ds.manifest = json::parse(read_text(dir / "manifest.json"));
    if (ds.manifest.at("format_version").get<int>() != static_cast<int>(io::kFormatVersion)) {
      throw Error(ErrorCode::FormatError, "unsupported dataset format version");
    }
    ds.task = parse_task(ds.manifest.at("task").get<std::string>());
    ds.seed = ds.manifest.at("seed").get<std::uint64_t>();
    for (const auto& entry : ds.manifest.at("records")) {
      const fs::path file = dir / entry.at("file").get<std::string>();
      auto bytes = io::read_bytes(file);
      if (io::hex64(io::fnv1a64(bytes)) != entry.at("fnv1a64").get<std::string>()) {
        throw Error(ErrorCode::FormatError, "checksum mismatch for " + file.string());
      }
      ds.records.push_back(io::decode_record(bytes));
      ds.plan.fold_of.push_back(entry.at("fold").get<int>());
      ds.bytes.push_back(std::move(bytes));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad manifest: ") + e.what());
  }
  if (ds.records.size() != ds.manifest.at("N").get<std::size_t>()) {
    throw Error(ErrorCode::FormatError, "manifest record count does not match N");
  }
  return ds;
}

int cmd_gen_data(const std::string& task_name_arg, int n_graphs, int n_points, int k,
                 std::uint64_t seed, const fs::path& out, int n_large, int k_large, int num_eigs,
                 double a_mag) {
  const TaskKind task = parse_task(task_name_arg);
  std::vector<DatasetRecord> records;
  json manifest = {{"format_version", io::kFormatVersion}, {"task", task_name(task)}, {"d", 3},
                   {"N", n_graphs}, {"n_points", n_points}, {"k", k}, {"seed", seed}};
  if (task == TaskKind::Diameter) {
    DiameterDatasetConfig c;
    c.num_graphs = n_graphs;
    c.n_points = n_points;
    c.k = k;
    c.seed = seed;
    records = make_diameter_dataset(c);
  } else {
    VectorFieldDatasetConfig c;
    c.num_graphs = n_graphs;
    c.n_small = n_points;
    c.k_small = k;
    c.n_large = n_large;
    c.k_large = k_large;
    c.num_eigs = num_eigs;
    c.a_mag = a_mag;
    c.seed = seed;
    records = make_vector_target_dataset(c);
    manifest["n_large"] = n_large;
    manifest["k_large"] = k_large;
    manifest["num_eigs"] = num_eigs;
    manifest["a_mag"] = a_mag;
  }
  manifest["epsilon"] = records.front().graph.epsilon.value_or(0.0);

  const CvPlan plan = CvPlan::make(n_graphs, seed);
  fs::create_directories(out / "records");
  json entries = json::array();
  json seeds = json::array();
  for (int r = 0; r < n_graphs; ++r) {
    DatasetRecord& rec = records[r];
    rec.split = split_for_fold(plan.fold_of[r], 0);
    char name[64];
    std::snprintf(name, sizeof(name), "records/record_%05d.bin", r);
    const auto bytes = io::encode_record(rec);
    io::write_bytes(out / name, bytes);
    entries.push_back({{"file", name},
                       {"fnv1a64", io::hex64(io::fnv1a64(bytes))},
                       {"fold", plan.fold_of[r]},
                       {"split", split_tag_name(rec.split)},
                       {"sample_seed", rec.sample_seed},
                       {"axes", {rec.provenance.a, rec.provenance.b, rec.provenance.c}}});
    seeds.push_back(rec.sample_seed);
  }
  manifest["seeds"] = seeds;
  manifest["records"] = entries;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << n_graphs << " records to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- features

fs::path cache_dir(const Dataset& ds) { return ds.dir / "cache"; }

fs::path feature_config_path(const Dataset& ds, ModelMode mode, int fold) {
  return cache_dir(ds) / ("features_" + std::string(model_mode_name(mode)) + "_fold" +
                          std::to_string(fold) + ".json");
}

// Cached features when present, computed otherwise.
GraphFeatures cached_features(const fs::path& dir, const DatasetRecord& rec, const FeatureConfig& cfg) {
  const auto bytes = io::encode_record(rec);
  const fs::path file = dir / (io::hex64(io::cache_key(bytes, cfg)) + ".bin");
  if (fs::exists(file)) return io::decode_cache(io::read_bytes(file)).features;
  return compute_features(rec.graph, cfg);
}

BankSelection bank_selection(const std::string& scales, int J, int t_max,
                             const std::vector<double>& quantiles) {
  BankSelection sel;
  sel.mode = parse_bank_mode(scales);
  if (sel.mode == BankMode::Custom) throw Error(ErrorCode::InvalidArgument, "--scales must be dyadic or infogain");
  sel.dyadic_J = J;
  sel.infogain.t_max = t_max;
  sel.infogain.quantiles = quantiles;
  return sel;
}

std::vector<ModelMode> modes_from(const std::string& arg) {
  if (arg == "both") return {ModelMode::Equivariant, ModelMode::Ablated};
  return {parse_model_mode(arg)};
}

int cmd_precompute(const fs::path& data, const BankSelection& sel, int jobs, const std::string& modes_arg,
                   int fold, bool no_canonicalize) {
  const Dataset ds = load_dataset(data);
  fs::create_directories(cache_dir(ds));
  const int workers = std::min(jobs, worker_cap());
  const auto split = ds.plan.split(fold);
  for (ModelMode mode : modes_from(modes_arg)) {
    std::vector<const GeometricGraph*> train_graphs;
    for (int r : split.train) train_graphs.push_back(&ds.records[r].graph);
    const auto [sbank, vbank] = select_banks(train_graphs, mode, sel);
    FeatureConfig cfg;
    cfg.mode = mode;
    cfg.scalar_bank = sbank;
    cfg.vector_bank = vbank;
    cfg.canonicalize_signs = !no_canonicalize;
    write_text(feature_config_path(ds, mode, fold), io::describe(cfg) + "\n");

    // Every record as stored, plus the rotated copy of each test record.
    std::vector<DatasetRecord> jobs_list = ds.records;
    for (int r : split.test) jobs_list.push_back(rotate_record(ds.records[r], default_test_rotation()));
    std::atomic<int> written{0};
    parallel_for(static_cast<int>(jobs_list.size()), workers, [&](int i) {
      const auto bytes = io::encode_record(jobs_list[i]);
      const fs::path file = cache_dir(ds) / (io::hex64(io::cache_key(bytes, cfg)) + ".bin");
      if (fs::exists(file)) return;
      const fs::path tmp = file.string() + ".tmp" + std::to_string(i);
      io::write_bytes(tmp, io::encode_cache(io::compute_cache(jobs_list[i].graph, cfg)));
      fs::rename(tmp, file);
      ++written;
    });
    std::cout << model_mode_name(mode) << ": scalar scales";
    for (int t : sbank.scales) std::cout << ' ' << t;
    std::cout << ", vector scales";
    for (int t : vbank.scales) std::cout << ' ' << t;
    std::cout << "; " << written.load() << " cache files written with " << workers << " workers\n";
  }
  return 0;
}

// ---------------------------------------------------------------- training

CvOptions cv_options(const Dataset& ds, ModelMode mode, int fold, const BankSelection& sel,
                     bool banks_given, std::optional<double> dropout) {
  CvOptions opts;
  opts.banks = sel;
  opts.dropout = dropout;
  const fs::path cfg_path = feature_config_path(ds, mode, fold);
  if (!banks_given && fs::exists(cfg_path)) {
    const FeatureConfig cfg = io::parse_feature_config(read_text(cfg_path));
    opts.fixed_banks = std::make_pair(cfg.scalar_bank, cfg.vector_bank);
  }
  const fs::path dir = cache_dir(ds);
  opts.features = [dir](const DatasetRecord& rec, const FeatureConfig& cfg) {
    return cached_features(dir, rec, cfg);
  };
  return opts;
}

json fold_json(const FoldSummary& f) {
  return {{"fold", f.fold},
          {"best_val_mse", f.best_val_mse},
          {"test_mse", f.test_mse},
          {"test_mse_unrotated", f.test_mse_unrotated},
          {"best_epoch", f.best_epoch},
          {"epochs_run", f.epochs_run},
          {"restarts", f.restarts},
          {"train_seconds_per_epoch", f.train_seconds_per_epoch},
          {"inference_seconds", f.inference_seconds},
          {"scalar_scales", f.scalar_scales},
          {"vector_scales", f.vector_scales}};
}

json summary_json(const CvSummary& s) {
  json folds = json::array();
  for (const auto& f : s.folds) folds.push_back(fold_json(f));
  return {{"task", task_name(s.task)},
          {"mode", model_mode_name(s.mode)},
          {"parameter_count", s.parameter_count},
          {"mean_val_mse", s.mean_val},
          {"std_val_mse", s.std_val},
          {"mean_test_mse", s.mean_test},
          {"std_test_mse", s.std_test},
          {"folds", folds}};
}

void check_task(const Dataset& ds, const std::string& task_arg) {
  if (!task_arg.empty() && parse_task(task_arg) != ds.task) {
    throw Error(ErrorCode::ConfigMismatch, "dataset holds " + std::string(task_name(ds.task)) +
                                               " records, not " + task_arg);
  }
}

struct TrainArgs {
  fs::path data;
  std::string mode = "equivariant";
  std::string task;
  int epochs_max = 500;
  std::uint64_t seed = 0;
  fs::path out;
  int fold = 0;
  double lr = 1e-3;
  int batch = 32;
  std::optional<double> dropout;
  fs::path metrics;
  fs::path summary;
};

int cmd_train(const TrainArgs& a, const BankSelection& sel, bool banks_given) {
  const Dataset ds = load_dataset(a.data);
  check_task(ds, a.task);
  const ModelMode mode = parse_model_mode(a.mode);
  Schedule sched;
  sched.epochs_max = a.epochs_max;
  sched.lr0 = a.lr;
  sched.batch = a.batch;
  const CvOptions opts = cv_options(ds, mode, a.fold, sel, banks_given, a.dropout);
  FoldSetup setup = prepare_fold(ds.records, ds.task, mode, ds.plan, a.fold, opts);
  EscGnn model(setup.model);
  initialize_model(model, derive_seed(a.seed, 0x4d4f44ULL, static_cast<std::uint64_t>(a.fold)),
                   setup.train_examples, opts.standardize_head_input);
  const TrainResult tr = train_fold(model, setup.train_examples, setup.val_examples, sched, a.seed, a.fold);

  io::ModelFile mf;
  mf.config = model.config();
  mf.features = setup.features;
  mf.task = ds.task;
  mf.fold = a.fold;
  mf.seed = a.seed;
  mf.best_epoch = tr.best_epoch;
  mf.best_val_mse = tr.best_val_mse;
  mf.params = model.params();
  mf.manifest = model.manifest();
  io::write_bytes(a.out, io::encode_model(mf));
  if (!a.metrics.empty()) write_metrics(a.metrics, tr.metrics);
  const json summary = {{"task", task_name(ds.task)},
                        {"mode", model_mode_name(mode)},
                        {"fold", a.fold},
                        {"parameter_count", model.parameter_count()},
                        {"best_val_mse", tr.best_val_mse},
                        {"best_epoch", tr.best_epoch},
                        {"epochs_run", tr.epochs_run},
                        {"restarts", tr.restarts},
                        {"train_seconds_per_epoch", tr.train_seconds_per_epoch},
                        {"scalar_scales", setup.features.scalar_bank.scales},
                        {"vector_scales", setup.features.vector_bank.scales}};
  if (!a.summary.empty()) write_text(a.summary, summary.dump(2) + "\n");
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_eval(const fs::path& data, const fs::path& model_path, const std::string& rotate,
             const fs::path& metrics, const fs::path& summary_path) {
  if (rotate != "on" && rotate != "off") throw Error(ErrorCode::InvalidArgument, "--rotate-test takes on|off");
  const Dataset ds = load_dataset(data);
  const io::ModelFile mf = io::decode_model(io::read_bytes(model_path));
  if (mf.task != ds.task) throw Error(ErrorCode::ConfigMismatch, "model and dataset tasks differ");
  EscGnn model(mf.config);
  model.params() = mf.params;
  const auto split = ds.plan.split(mf.fold);
  const fs::path dir = cache_dir(ds);

  auto examples = [&](const std::vector<int>& idx, bool rotated) {
    std::vector<Example> out;
    for (int r : idx) {
      DatasetRecord rec = rotated ? rotate_record(ds.records[r], default_test_rotation()) : ds.records[r];
      Example ex;
      ex.features = cached_features(dir, rec, mf.features);
      ex.target = rec.graph_target ? Eigen::MatrixXd::Constant(1, 1, *rec.graph_target) : rec.node_targets.value();
      ex.graph = std::move(rec.graph);
      out.push_back(std::move(ex));
    }
    return out;
  };
  const auto t0 = std::chrono::steady_clock::now();
  const double val = evaluate_mse(model, examples(split.val, false));
  const double t_val = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double test = evaluate_mse(model, examples(split.test, rotate == "on"));
  const double t_all = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!metrics.empty()) {
    write_metrics(metrics, {{mf.fold, mf.best_epoch, SplitTag::Val, val, 0.0, t_val, true},
                            {mf.fold, mf.best_epoch, SplitTag::Test, test, 0.0, t_all, true}});
  }
  const json summary = {{"task", task_name(ds.task)},
                        {"mode", model_mode_name(mf.config.mode)},
                        {"fold", mf.fold},
                        {"rotate_test", rotate == "on"},
                        {"val_mse", val},
                        {"test_mse", test},
                        {"best_epoch", mf.best_epoch},
                        {"inference_seconds", t_all}};
  if (!summary_path.empty()) write_text(summary_path, summary.dump(2) + "\n");
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_cv(const TrainArgs& a, const BankSelection& sel, bool banks_given, const std::vector<int>& folds) {
  const Dataset ds = load_dataset(a.data);
  check_task(ds, a.task);
  const ModelMode mode = parse_model_mode(a.mode);
  Schedule sched;
  sched.epochs_max = a.epochs_max;
  sched.lr0 = a.lr;
  sched.batch = a.batch;
  std::vector<FoldRun> runs(folds.size());
  parallel_for(static_cast<int>(folds.size()), worker_cap(), [&](int i) {
    const CvOptions opts = cv_options(ds, mode, folds[i], sel, banks_given, a.dropout);
    runs[i] = run_cv_fold(ds.records, ds.task, mode, ds.plan, folds[i], sched, a.seed, opts);
    std::clog << "[escgnn] fold " << folds[i] << " done: val " << runs[i].summary.best_val_mse
              << " test " << runs[i].summary.test_mse << "\n";
  });
  const CvSummary s = summarize_cv(ds.task, mode, std::move(runs));
  if (!a.metrics.empty()) write_metrics(a.metrics, s.metrics);
  const json j = summary_json(s);
  if (!a.summary.empty()) write_text(a.summary, j.dump(2) + "\n");
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_verify(std::uint64_t seed, const fs::path& report_path, bool no_canonicalize, double tol_scale) {
  VerifyOptions opts;
  opts.canonicalize_signs = !no_canonicalize;
  opts.tolerance_scale = tol_scale;
  const VerifyReport report = verify_suite(seed, opts);
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"measured", c.measured},
                      {"threshold", c.threshold},
                      {"comparison", c.expect_above ? ">" : "<="},
                      {"detail", c.detail},
                      {"seconds", c.seconds}});
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured
              << (c.expect_above ? " > " : " <= ") << c.threshold << "\n";
  }
  const json j = {{"seed", seed}, {"all_passed", report.all_passed()}, {"checks", checks}};
  if (!report_path.empty()) write_text(report_path, j.dump(2) + "\n");
  if (!report.all_passed()) {
    const auto failed = std::count_if(report.checks.begin(), report.checks.end(),
                                      [](const CheckResult& c) { return !c.passed; });
    std::cerr << "error: VerifyFailed: " << failed << " check(s) failed\n";
    return 1;
  }
  return 0;
}

std::vector<double> parse_quantiles(const std::string& s) {
  std::vector<double> q;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      q.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad quantile '" + item + "'");
    }
  }
  return q;
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Rotation-equivariant geometric scattering (ESc-GNN)"};
  app.require_subcommand(1);

  // gen-data
  std::string task = "diameter";
  int n_graphs = 512, n_points = 128, k = 5, n_large = 1024, k_large = 10, num_eigs = 16;
  double a_mag = 0.5;
  std::uint64_t seed = 0;
  fs::path out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic ellipsoid dataset");
  gen->add_option("--task", task, "diameter | vectorfield")->capture_default_str();
  gen->add_option("--n-graphs", n_graphs)->capture_default_str();
  gen->add_option("--n-points", n_points)->capture_default_str();
  gen->add_option("--k", k)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out)->required();
  gen->add_option("--n-large", n_large, "vectorfield: points of the eigenvector graph")->capture_default_str();
  gen->add_option("--k-large", k_large)->capture_default_str();
  gen->add_option("--num-eigs", num_eigs)->capture_default_str();
  gen->add_option("--a-mag", a_mag)->capture_default_str();

  // shared bank selection
  std::string scales = "infogain", quantiles = "0.25,0.5,0.75";
  int J = 3, t_max = 16;
  auto add_bank_opts = [&](CLI::App* sub) {
    sub->add_option("--scales", scales, "dyadic | infogain")->capture_default_str();
    sub->add_option("--J", J, "dyadic bank size")->capture_default_str();
    sub->add_option("--t-max", t_max)->capture_default_str();
    sub->add_option("--quantiles", quantiles)->capture_default_str();
  };

  fs::path data;
  int jobs = 1, fold = 0;
  std::string modes = "both";
  bool no_canon = false;
  auto* pre = app.add_subcommand("precompute", "Cache operators and scattering features");
  pre->add_option("--data", data)->required();
  add_bank_opts(pre);
  pre->add_option("--jobs", jobs, "workers, capped by THREADS")->capture_default_str();
  pre->add_option("--mode", modes, "equivariant | ablated | both")->capture_default_str();
  pre->add_option("--fold", fold, "CV step whose training graphs pick the scales")->capture_default_str();
  pre->add_flag("--no-sign-canonicalization", no_canon);

  TrainArgs ta;
  std::string dropout_arg;
  auto add_train_opts = [&](CLI::App* sub) {
    sub->add_option("--data", ta.data)->required();
    sub->add_option("--mode", ta.mode, "equivariant | ablated")->capture_default_str();
    sub->add_option("--task", ta.task, "must match the dataset");
    sub->add_option("--epochs-max", ta.epochs_max)->capture_default_str();
    sub->add_option("--seed", ta.seed)->capture_default_str();
    sub->add_option("--lr", ta.lr)->capture_default_str();
    sub->add_option("--batch", ta.batch)->capture_default_str();
    sub->add_option("--dropout", dropout_arg, "override the head dropout");
    sub->add_option("--metrics", ta.metrics, "metrics CSV");
    sub->add_option("--summary", ta.summary, "summary JSON");
    add_bank_opts(sub);
  };
  auto* train = app.add_subcommand("train", "Train one CV step");
  add_train_opts(train);
  train->add_option("--out", ta.out, "model file")->required();
  train->add_option("--fold", ta.fold)->capture_default_str();

  std::string folds_arg = "0,1,2,3,4";
  auto* cv = app.add_subcommand("cv", "Five-fold cross-validation with rotated test folds");
  add_train_opts(cv);
  cv->add_option("--folds", folds_arg)->capture_default_str();

  fs::path model_path, metrics_path, summary_path;
  std::string rotate = "on";
  auto* ev = app.add_subcommand("eval", "Evaluate a model on its validation and test folds");
  ev->add_option("--data", data)->required();
  ev->add_option("--model", model_path)->required();
  ev->add_option("--rotate-test", rotate, "on | off")->capture_default_str();
  ev->add_option("--metrics", metrics_path, "metrics CSV");
  ev->add_option("--summary", summary_path, "summary JSON");

  std::uint64_t verify_seed = 7;
  fs::path report;
  double tol_scale = 1.0;
  auto* ver = app.add_subcommand("verify", "Run the property verification suite");
  ver->add_option("--seed", verify_seed)->capture_default_str();
  ver->add_option("--report", report, "JSON report");
  ver->add_flag("--no-sign-canonicalization", no_canon);
  ver->add_option("--tolerance-scale", tol_scale)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: InvalidArgument: " << e.what() << "\n";
    return 2;
  }

  try {
    const BankSelection sel = bank_selection(scales, J, t_max, parse_quantiles(quantiles));
    if (!dropout_arg.empty()) ta.dropout = std::stod(dropout_arg);
    if (*gen) return cmd_gen_data(task, n_graphs, n_points, k, seed, out, n_large, k_large, num_eigs, a_mag);
    if (*pre) return cmd_precompute(data, sel, jobs, modes, fold, no_canon);
    const bool banks_given = (*train && train->count("--scales") > 0) || (*cv && cv->count("--scales") > 0);
    if (*train) return cmd_train(ta, sel, banks_given);
    if (*cv) {
      std::vector<int> folds;
      for (double f : parse_quantiles(folds_arg)) folds.push_back(static_cast<int>(f));
      return cmd_cv(ta, sel, banks_given, folds);
    }
    if (*ev) return cmd_eval(data, model_path, rotate, metrics_path, summary_path);
    if (*ver) return cmd_verify(verify_seed, report, no_canon, tol_scale);
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace escgnn
