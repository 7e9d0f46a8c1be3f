#include "escgnn/geometry.hpp"

#include "escgnn/error.hpp"
#include "escgnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>

namespace escgnn {

double GeometricGraph::weighted_degree(int i) const {
  double total = 0.0;
  for (const auto& nb : adjacency[i]) total += nb.weight;
  return total;
}

std::int64_t GeometricGraph::num_edges() const {
  std::int64_t directed = 0;
  for (const auto& row : adjacency) directed += static_cast<std::int64_t>(row.size());
  return directed / 2;
}

bool GeometricGraph::has_edge(int i, int j) const {
  const auto& row = adjacency[i];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const Neighbor& nb, int idx) { return nb.index < idx; });
  return it != row.end() && it->index == j;
}

bool GeometricGraph::is_connected() const {
  const int n = num_nodes();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int visited = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (const auto& nb : adjacency[i]) {
      if (!seen[nb.index]) {
        seen[nb.index] = 1;
        ++visited;
        frontier.push(nb.index);
      }
    }
  }
  return visited == n;
}

Rotation::Rotation(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "rotation matrix must be square");
  }
  const auto d = matrix_.rows();
  const double ortho =
      (matrix_.transpose() * matrix_ - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  const double det = matrix_.determinant();
  if (ortho > 1e-12 || std::abs(det - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not in SO(d)");
  }
}

Rotation Rotation::identity(int d) { return Rotation(Eigen::MatrixXd::Identity(d, d)); }

Rotation Rotation::about_z(double radians, int d) {
  if (d != 2 && d != 3) {
    throw Error(ErrorCode::UnsupportedDimension, "about_z needs d in {2,3}");
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d, d);
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  return Rotation(std::move(r));
}

namespace {

struct Candidate {
  double dist2;
  int index;
  bool operator<(const Candidate& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
};

void insert_sorted(std::vector<Neighbor>& row, int j, double w) {
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const Neighbor& nb, int idx) { return nb.index < idx; });
  if (it == row.end() || it->index != j) row.insert(it, Neighbor{j, w});
}

}  // namespace

GeometricGraph build_knn_graph(const Eigen::MatrixXd& points, int k) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (k < 1 || n <= k) {
    throw Error(ErrorCode::InvalidArgument,
                "k-NN needs n > k >= 1 (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }

  // Sorted candidate lists per vertex; reused for degree augmentation.
  std::vector<std::vector<Candidate>> order(n);
  for (int i = 0; i < n; ++i) {
    auto& cand = order[i];
    cand.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist2 = (points.row(i) - points.row(j)).squaredNorm();
      if (dist2 == 0.0) {
        throw Error(ErrorCode::DegeneratePoints,
                    "duplicate points at indices " + std::to_string(std::min(i, j)) + " and " +
                        std::to_string(std::max(i, j)));
      }
      cand.push_back({dist2, j});
    }
    std::sort(cand.begin(), cand.end());
  }

  GeometricGraph g;
  g.coords = points;
  g.adjacency.assign(n, {});
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < k; ++r) {
      const int j = order[i][r].index;
      insert_sorted(g.adjacency[i], j, 1.0);
      insert_sorted(g.adjacency[j], i, 1.0);
    }
  }
  if (!g.is_connected()) {
    throw Error(ErrorCode::DisconnectedGraph, "symmetrized k-NN graph is not connected");
  }

  if (n <= d) {
    throw Error(ErrorCode::InvalidArgument, "need n > d to reach the degree floor");
  }
  for (int i = 0; i < n; ++i) {
    for (const auto& c : order[i]) {
      if (g.degree(i) >= d) break;
      if (!g.has_edge(i, c.index)) {
        insert_sorted(g.adjacency[i], c.index, 1.0);
        insert_sorted(g.adjacency[c.index], i, 1.0);
      }
    }
  }
  return g;
}

double mean_neighbor_distance_sq(std::span<const GeometricGraph> graphs) {
  double total = 0.0;
  std::int64_t count = 0;
  for (const auto& g : graphs) {
    for (int i = 0; i < g.num_nodes(); ++i) {
      if (g.adjacency[i].empty()) continue;
      double acc = 0.0;
      for (const auto& nb : g.adjacency[i]) {
        acc += (g.coords.row(i) - g.coords.row(nb.index)).norm();
      }
      total += acc / static_cast<double>(g.adjacency[i].size());
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorCode::InvalidArgument, "mean neighbor distance needs at least one edge");
  }
  const double mean = total / static_cast<double>(count);
  return mean * mean;
}

double gaussian_kernel(double squared_distance, double epsilon) {
  return std::exp(-squared_distance / epsilon);
}

GeometricGraph kernel_weights(GeometricGraph graph, const EpsilonMode& mode) {
  double eps = 0.0;
  if (const auto* e = std::get_if<ExplicitEpsilon>(&mode)) {
    eps = e->value;
  } else {
    eps = mean_neighbor_distance_sq(std::span<const GeometricGraph>(&graph, 1));
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::NonpositiveEpsilon, "kernel scale must be positive and finite");
  }
  for (int i = 0; i < graph.num_nodes(); ++i) {
    for (auto& nb : graph.adjacency[i]) {
      const double dist2 = (graph.coords.row(i) - graph.coords.row(nb.index)).squaredNorm();
      nb.weight = gaussian_kernel(dist2, eps);
    }
  }
  graph.epsilon = eps;
  return graph;
}

DiracPlacement place_dirac_signals(const GeometricGraph& graph) {
  const int n = graph.num_nodes();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "Dirac placement needs n >= 2");
  const Eigen::RowVectorXd centroid = graph.coords.colwise().mean();
  Eigen::VectorXd dist2(n);
  for (int i = 0; i < n; ++i) dist2[i] = (graph.coords.row(i) - centroid).squaredNorm();

  DiracPlacement out{0, -1};
  for (int i = 1; i < n; ++i) {
    if (dist2[i] < dist2[out.nearest]) out.nearest = i;
  }
  for (int i = 0; i < n; ++i) {
    if (i == out.nearest) continue;
    if (out.farthest < 0 || dist2[i] > dist2[out.farthest]) out.farthest = i;
  }
  return out;
}

Eigen::MatrixXd dirac_signals(const GeometricGraph& graph) {
  const auto placement = place_dirac_signals(graph);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(graph.num_nodes(), 2);
  x(placement.nearest, 0) = 1.0;
  x(placement.farthest, 1) = 1.0;
  return x;
}

Eigen::MatrixXd rotate_rows(const Eigen::MatrixXd& rows, const Rotation& rotation) {
  if (rows.cols() != rotation.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "row width does not match rotation dimension");
  }
  return rows * rotation.matrix().transpose();
}

GeometricGraph rotate_graph(const GeometricGraph& graph, const Rotation& rotation) {
  GeometricGraph out = graph;
  out.coords = rotate_rows(graph.coords, rotation);
  for (auto& w : out.vector_signals) w = rotate_rows(w, rotation);
  return out;
}

Rotation random_rotation(std::uint64_t seed, int d) {
  Rng rng = make_rng(seed, 0x524f54ULL);
  if (d == 2) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    return Rotation::about_z(angle(rng), 2);
  }
  if (d == 3) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector4d q;
    do {
      for (int i = 0; i < 4; ++i) q[i] = normal(rng);
    } while (q.norm() < 1e-8);
    q.normalize();
    Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
    Eigen::MatrixXd r = quat.toRotationMatrix();
    // Re-orthonormalize so the 1e-12 invariants hold with headroom.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    return Rotation(std::move(r));
  }
  throw Error(ErrorCode::UnsupportedDimension, "random rotations only for d in {2,3}");
}

double point_cloud_diameter(const Eigen::MatrixXd& points) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

}  // namespace escgnn
