#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace escgnn {

struct Neighbor {
  int index;
  double weight;

  bool operator==(const Neighbor&) const = default;
};

/// Points in R^d joined by symmetric, positively weighted edges, plus node
/// signals. Neighbor lists are kept sorted by ascending neighbor index.
struct GeometricGraph {
  Eigen::MatrixXd coords;                         // n x d
  std::vector<std::vector<Neighbor>> adjacency;   // per node, ascending index
  std::optional<double> epsilon;                  // unset: unit weights
  Eigen::MatrixXd scalar_signals;                 // n x F_scalar
  std::vector<Eigen::MatrixXd> vector_signals;    // F_vec slices, each n x d

  int num_nodes() const { return static_cast<int>(coords.rows()); }
  int dim() const { return static_cast<int>(coords.cols()); }
  int degree(int i) const { return static_cast<int>(adjacency[i].size()); }
  double weighted_degree(int i) const;
  /// Number of undirected edges.
  std::int64_t num_edges() const;
  bool has_edge(int i, int j) const;
  bool is_connected() const;
};

/// Validated element of SO(d).
class Rotation {
 public:
  /// Throws InvalidArgument unless R^T R = I and det R = 1 within 1e-12.
  explicit Rotation(Eigen::MatrixXd matrix);

  static Rotation identity(int d);
  /// Rotation by `radians` about the z-axis (d = 3) or the origin (d = 2).
  static Rotation about_z(double radians, int d = 3);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  Eigen::MatrixXd matrix_;
};

/// Symmetrized k-NN graph with unit weights. Distance ties go to the lower
/// index. Vertices of degree < d afterwards are joined to their nearest
/// non-neighbors until the floor is met.
GeometricGraph build_knn_graph(const Eigen::MatrixXd& points, int k);

struct ExplicitEpsilon {
  double value;
};
struct MeanNeighborSq {};
using EpsilonMode = std::variant<ExplicitEpsilon, MeanNeighborSq>;

/// (mean over all nodes of all graphs of the mean neighbor distance)^2.
double mean_neighbor_distance_sq(std::span<const GeometricGraph> graphs);

double gaussian_kernel(double squared_distance, double epsilon);

/// Sets every edge weight to exp(-|v_i - v_j|^2 / eps).
GeometricGraph kernel_weights(GeometricGraph graph, const EpsilonMode& mode);

struct DiracPlacement {
  int nearest;   // vertex closest to the centroid
  int farthest;  // vertex farthest from the centroid, never equal to nearest
};

DiracPlacement place_dirac_signals(const GeometricGraph& graph);

/// n x 2 matrix of the two one-hot signals from place_dirac_signals.
Eigen::MatrixXd dirac_signals(const GeometricGraph& graph);

/// v_i -> R v_i and every vector signal value w(v_i) -> R w(v_i). Edges,
/// weights and scalar signals are untouched.
GeometricGraph rotate_graph(const GeometricGraph& graph, const Rotation& rotation);

/// Haar-distributed rotation: uniform angle for d = 2, normalized Gaussian
/// quaternion for d = 3.
Rotation random_rotation(std::uint64_t seed, int d);

/// Rotates each row of an n x d array.
Eigen::MatrixXd rotate_rows(const Eigen::MatrixXd& rows, const Rotation& rotation);

/// Largest pairwise Euclidean distance, exact O(n^2) scan.
double point_cloud_diameter(const Eigen::MatrixXd& points);

}  // namespace escgnn
