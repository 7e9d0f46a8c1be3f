#include "escgnn/synthetic_data.hpp"

#include "escgnn/error.hpp"
#include "escgnn/rng.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

namespace escgnn {

std::string_view split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "train";
}

std::string_view task_name(TaskKind task) {
  return task == TaskKind::Diameter ? "diameter" : "vectorfield";
}

TaskKind parse_task(std::string_view name) {
  if (name == "diameter") return TaskKind::Diameter;
  if (name == "vectorfield") return TaskKind::VectorField;
  throw Error(ErrorCode::InvalidArgument, "unknown task: " + std::string(name));
}

Eigen::MatrixXd sample_ellipsoid_cloud(const EllipsoidSpec& spec, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one point");
  if (!(spec.a > 0 && spec.b > 0 && spec.c > 0)) {
    throw Error(ErrorCode::InvalidArgument, "semi-axes must be positive");
  }
  Rng rng = make_rng(spec.seed, 0x454c4cULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd pts(n, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d g;
    do {
      for (int c = 0; c < 3; ++c) g[c] = normal(rng);
    } while (g.norm() < 1e-12);
    g.normalize();
    pts(i, 0) = spec.a * g[0];
    pts(i, 1) = spec.b * g[1];
    pts(i, 2) = spec.c * g[2];
  }
  return pts;
}

namespace {

double positive_normal(Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  double v = 0.0;
  do {
    v = dist(rng);
  } while (!(v > 0.0));
  return v;
}

EllipsoidSpec draw_ellipsoid(std::uint64_t seed, std::uint64_t index, std::uint64_t attempt) {
  Rng rng = make_rng(seed, 0x415845ULL, (index << 16) ^ attempt);
  EllipsoidSpec spec;
  spec.a = positive_normal(rng, 3.0, 0.5);
  spec.b = positive_normal(rng, 1.0, 0.2);
  spec.c = positive_normal(rng, 1.0, 0.2);
  spec.seed = derive_seed(seed, 0x505453ULL, (index << 16) ^ attempt);
  return spec;
}

void log_regeneration(std::uint64_t index, std::uint64_t attempt) {
  std::clog << "[escgnn] record " << index << ": disconnected k-NN graph, regenerating (attempt "
            << attempt + 1 << ")\n";
}

void finalize_signals(std::vector<DatasetRecord>& records) {
  std::vector<GeometricGraph> graphs;
  graphs.reserve(records.size());
  for (const auto& r : records) graphs.push_back(r.graph);
  const double eps = mean_neighbor_distance_sq(graphs);
  for (auto& r : records) {
    r.graph = kernel_weights(std::move(r.graph), ExplicitEpsilon{eps});
    r.graph.scalar_signals = dirac_signals(r.graph);
    r.graph.vector_signals = {r.graph.coords};
  }
}

}  // namespace

std::vector<DatasetRecord> make_diameter_dataset(const DiameterDatasetConfig& config) {
  if (config.num_graphs < 1) throw Error(ErrorCode::InvalidArgument, "need at least one graph");
  std::vector<DatasetRecord> records;
  records.reserve(config.num_graphs);
  for (int j = 0; j < config.num_graphs; ++j) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      const EllipsoidSpec spec = draw_ellipsoid(config.seed, j, attempt);
      const Eigen::MatrixXd pts = sample_ellipsoid_cloud(spec, config.n_points);
      try {
        DatasetRecord rec;
        rec.graph = build_knn_graph(pts, config.k);
        rec.graph_target = point_cloud_diameter(pts);
        rec.provenance = spec;
        rec.sample_seed = spec.seed;
        records.push_back(std::move(rec));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DisconnectedGraph || attempt > 1000) throw;
        log_regeneration(j, attempt);
      }
    }
  }
  finalize_signals(records);
  return records;
}

Eigenpairs sym_laplacian_eigs(const GeometricGraph& graph, int K) {
  const int n = graph.num_nodes();
  if (K < 0 || K + 1 > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= K < n");
  Eigen::VectorXd inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    if (graph.degree(i) == 0) throw Error(ErrorCode::ZeroDegree, "isolated vertex");
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(graph.degree(i)));
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& nb : graph.adjacency[i]) lap(i, nb.index) -= inv_sqrt_deg[i] * inv_sqrt_deg[nb.index];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::EigensolverNoConvergence, "Laplacian eigensolver did not converge");
  }
  Eigenpairs out;
  out.values = eig.eigenvalues().head(K + 1);
  out.vectors = eig.eigenvectors().leftCols(K + 1);
  for (int c = 0; c <= K; ++c) {
    Eigen::Index arg = 0;
    out.vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, c) < 0.0) out.vectors.col(c) *= -1.0;
  }
  return out;
}

Eigen::MatrixXd ellipsoid_normals(const EllipsoidSpec& spec, const Eigen::MatrixXd& points) {
  Eigen::MatrixXd normals(points.rows(), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Vector3d grad(2.0 * points(i, 0) / (spec.a * spec.a), 2.0 * points(i, 1) / (spec.b * spec.b),
                         2.0 * points(i, 2) / (spec.c * spec.c));
    normals.row(i) = grad.normalized().transpose();
  }
  return normals;
}

std::vector<DatasetRecord> make_vector_target_dataset(const VectorFieldDatasetConfig& config) {
  if (config.num_graphs < 1) throw Error(ErrorCode::InvalidArgument, "need at least one graph");
  if (config.n_small > config.n_large) {
    throw Error(ErrorCode::InvalidArgument, "n_small must not exceed n_large");
  }
  if (!(config.a_mag > 0.0 && config.a_mag < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "a_mag must lie in (0, 1)");
  }
  std::vector<DatasetRecord> records;
  records.reserve(config.num_graphs);
  for (int j = 0; j < config.num_graphs; ++j) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      const EllipsoidSpec spec = draw_ellipsoid(config.seed, j, attempt);
      const Eigen::MatrixXd large = sample_ellipsoid_cloud(spec, config.n_large);
      const Eigen::MatrixXd small = large.topRows(config.n_small);
      try {
        DatasetRecord rec;
        rec.graph = build_knn_graph(small, config.k_small);
        const GeometricGraph big = build_knn_graph(large, config.k_large);
        const Eigenpairs eig = sym_laplacian_eigs(big, config.num_eigs);

        Rng rng = make_rng(spec.seed, 0x434f4546ULL);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(config.n_large);
        for (int e = 1; e <= config.num_eigs; ++e) g += normal(rng) * eig.vectors.col(e);
        const double gmax = g.cwiseAbs().maxCoeff();
        const Eigen::VectorXd magnitude =
            (Eigen::VectorXd::Ones(config.n_large) + (config.a_mag / gmax) * g).head(config.n_small);

        const Eigen::MatrixXd normals = ellipsoid_normals(spec, small);
        rec.node_targets = normals.array().colwise() * magnitude.array();
        rec.provenance = spec;
        rec.sample_seed = spec.seed;
        records.push_back(std::move(rec));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DisconnectedGraph || attempt > 1000) throw;
        log_regeneration(j, attempt);
      }
    }
  }
  finalize_signals(records);
  return records;
}

Rotation default_test_rotation() { return Rotation::about_z(std::numbers::pi / 2.0, 3); }

DatasetRecord rotate_record(const DatasetRecord& record, const Rotation& rotation) {
  DatasetRecord out = record;
  out.graph = rotate_graph(record.graph, rotation);
  if (record.node_targets) out.node_targets = rotate_rows(*record.node_targets, rotation);
  return out;
}

std::vector<DatasetRecord> rotate_test_fold(std::vector<DatasetRecord> records,
                                            const Rotation& rotation) {
  for (auto& r : records) {
    if (r.split == SplitTag::Test) r = rotate_record(r, rotation);
  }
  return records;
}

}  // namespace escgnn
