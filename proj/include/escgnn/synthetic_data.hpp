#pragma once

#include "escgnn/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace escgnn {

struct EllipsoidSpec {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  std::uint64_t seed = 0;
};

enum class SplitTag { Train, Val, Test };
std::string_view split_tag_name(SplitTag tag);

enum class TaskKind { Diameter, VectorField };
std::string_view task_name(TaskKind task);
TaskKind parse_task(std::string_view name);

/// One graph plus its target. Exactly one of graph_target / node_targets is
/// set. The graph carries the two Dirac signals as scalar signals and the
/// vertex coordinates as its single vector signal.
struct DatasetRecord {
  GeometricGraph graph;
  std::optional<double> graph_target;
  std::optional<Eigen::MatrixXd> node_targets;  // n x d
  EllipsoidSpec provenance;
  std::uint64_t sample_seed = 0;
  SplitTag split = SplitTag::Train;
};

/// Points exactly on x^2/a^2 + y^2/b^2 + z^2/c^2 = 1: standard Gaussians
/// projected to the unit sphere, then scaled per axis.
Eigen::MatrixXd sample_ellipsoid_cloud(const EllipsoidSpec& spec, int n);

struct DiameterDatasetConfig {
  int num_graphs = 512;
  int n_points = 128;
  int k = 5;
  std::uint64_t seed = 0;
};

/// Ellipsoids with a ~ N(3, 0.5), b, c ~ N(1, 0.2) (non-positive draws are
/// redrawn). Disconnected k-NN graphs are regenerated with a new sub-seed.
/// Edge weights use one dataset-wide kernel scale.
std::vector<DatasetRecord> make_diameter_dataset(const DiameterDatasetConfig& config);

struct Eigenpairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, orthonormal
};

/// First K+1 eigenpairs of L_sym = I - D^{-1/2} A D^{-1/2} on the 0/1
/// adjacency. Each eigenvector's largest-magnitude entry is made positive.
Eigenpairs sym_laplacian_eigs(const GeometricGraph& graph, int K);

struct VectorFieldDatasetConfig {
  int num_graphs = 512;
  int n_small = 128;
  int n_large = 1024;
  int k_small = 5;
  int k_large = 10;
  int num_eigs = 16;
  double a_mag = 0.5;
  std::uint64_t seed = 0;
};

/// Outward unit normal of the ellipsoid at each row of `points`.
Eigen::MatrixXd ellipsoid_normals(const EllipsoidSpec& spec, const Eigen::MatrixXd& points);

/// Node targets h(v) = (1 + g~(v)) n(v), g~ = a_mag g / |g|_inf with g a
/// random combination of the K nontrivial L_sym eigenvectors of the large
/// graph. The training graph uses the first n_small points.
std::vector<DatasetRecord> make_vector_target_dataset(const VectorFieldDatasetConfig& config);

/// 90 degrees about z: the x-stretched ellipsoids end up stretched along y.
Rotation default_test_rotation();

/// Rotates graphs (coords, vector signals) and node targets of test-tagged
/// records; train and val records are returned untouched.
std::vector<DatasetRecord> rotate_test_fold(std::vector<DatasetRecord> records,
                                            const Rotation& rotation = default_test_rotation());

/// Rotates a single record (graph and node targets).
DatasetRecord rotate_record(const DatasetRecord& record, const Rotation& rotation);

}  // namespace escgnn
