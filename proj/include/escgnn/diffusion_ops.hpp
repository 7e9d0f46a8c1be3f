#pragma once

#include "escgnn/error.hpp"
#include "escgnn/geometry.hpp"

#include <Eigen/Dense>

#include <concepts>
#include <cstdint>
#include <vector>

namespace escgnn {

/// Row-compressed n x n operator. For the lazy walk every row holds the
/// diagonal plus the node's neighbors, columns ascending.
struct SparseOperator {
  int n = 0;
  std::vector<int> row_ptr;  // n + 1
  std::vector<int> col_idx;
  std::vector<double> values;
  bool row_stochastic = false;

  Eigen::Index dim() const { return n; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(values.size()); }
  double at(int i, int j) const;

  /// out = op * x for an n x F block of signals.
  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Block-row-compressed operator on R^{nd} whose d x d blocks sit on the
/// sparsity pattern of a SparseOperator. Signals are node-major: entry
/// (i*d + c) is coordinate c of the vector at node i.
struct BlockSparseOperator {
  int n = 0;
  int d = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> blocks;  // nnz_blocks * d * d, each block row-major

  Eigen::Index dim() const { return static_cast<Eigen::Index>(n) * d; }
  std::int64_t nnz_blocks() const { return static_cast<std::int64_t>(col_idx.size()); }
  std::int64_t nnz() const { return nnz_blocks() * d * d; }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(
      std::int64_t k) const {
    return {blocks.data() + k * d * d, d, d};
  }

  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

template <class Op>
concept DiffusionOperator = requires(const Op& op, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  { op.dim() } -> std::convertible_to<Eigen::Index>;
  op.apply(x, y);
};

/// P = (I + D^{-1} A) / 2. `weighted = false` uses the 0/1 adjacency.
SparseOperator build_lazy_walk(const GeometricGraph& graph, bool weighted = true);

enum class SignProvenance : std::uint8_t { Skewness, FallbackFlagged };

struct LocalFrame {
  Eigen::MatrixXd basis;            // d x d, orthonormal columns u_{i,k}
  Eigen::VectorXd singular_values;  // non-increasing
  std::vector<SignProvenance> signs;
  bool gap_flagged = false;  // two singular values within 1e-6 relative

  bool flagged() const;
};

struct LocalFrameSet {
  int d = 0;
  std::vector<LocalFrame> frames;

  int num_nodes() const { return static_cast<int>(frames.size()); }
  /// Nodes with a spectral-gap flag or a fallback sign.
  std::vector<int> flagged_nodes() const;
  bool any_flagged() const { return !flagged_nodes().empty(); }

  /// Every U_i = I; reduces Q to P (x) I.
  static LocalFrameSet identity(int n, int d);
};

struct FrameOptions {
  bool canonicalize_signs = true;
};

/// Left singular vectors of B_i = C_i D_i via the eigendecomposition of
/// B_i B_i^T. Throws RankDeficientFrame (with the node index) when
/// sigma_d < 1e-12 sigma_1. Fully isotropic neighborhoods get U_i = I.
LocalFrameSet build_local_frames(const GeometricGraph& graph, const FrameOptions& options = {});

/// Flips u_{i,k} so that sum_j K(v_i, v_j) <v_j - v_i, u_{i,k}>^3 >= 0.
/// Near-zero moments (<= 1e-9 of the weighted cubed neighbor distances)
/// keep their incoming sign and are marked FallbackFlagged.
LocalFrameSet canonicalize_signs(LocalFrameSet frames, const GeometricGraph& graph);

/// Q[i,j] = P[i,j] U_i U_j^T on P's pattern; diagonal blocks are I/2.
BlockSparseOperator build_vector_diffusion(const SparseOperator& p, const LocalFrameSet& frames);

/// op^t x by t successive sparse applications.
template <DiffusionOperator Op>
Eigen::MatrixXd apply_power(const Op& op, const Eigen::MatrixXd& x, int t) {
  if (x.rows() != op.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length does not match operator");
  }
  if (t < 0) throw Error(ErrorCode::InvalidArgument, "power must be nonnegative");
  Eigen::MatrixXd cur = x;
  Eigen::MatrixXd next(x.rows(), x.cols());
  for (int s = 0; s < t; ++s) {
    op.apply(cur, next);
    cur.swap(next);
  }
  return cur;
}

inline constexpr Eigen::Index kMaxMaterializeDim = 4096;

Eigen::MatrixXd dense_materialize(const SparseOperator& op);
Eigen::MatrixXd dense_materialize(const BlockSparseOperator& op);

/// Reads the blocks of a dense nd x nd matrix back onto `pattern`.
BlockSparseOperator block_sparsify(const Eigen::MatrixXd& dense, const SparseOperator& pattern,
                                   int d);

}  // namespace escgnn
