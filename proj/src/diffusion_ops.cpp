#include "escgnn/diffusion_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace escgnn {

double SparseOperator::at(int i, int j) const {
  auto first = col_idx.begin() + row_ptr[i];
  auto last = col_idx.begin() + row_ptr[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

void SparseOperator::apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const {
  if (x.rows() != n) throw Error(ErrorCode::DimensionMismatch, "signal length does not match P");
  out.resize(n, x.cols());
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    const double* src = x.col(f).data();
    double* dst = out.col(f).data();
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += values[k] * src[col_idx[k]];
      dst[i] = acc;
    }
  }
}

Eigen::MatrixXd SparseOperator::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out;
  apply(x, out);
  return out;
}

void BlockSparseOperator::apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const {
  if (x.rows() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length does not match Q");
  }
  out.resize(dim(), x.cols());
  const int dd = d * d;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    const double* src = x.col(f).data();
    double* dst = out.col(f).data();
    for (int i = 0; i < n; ++i) {
      double* yi = dst + static_cast<std::ptrdiff_t>(i) * d;
      for (int r = 0; r < d; ++r) yi[r] = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        const double* b = blocks.data() + static_cast<std::ptrdiff_t>(k) * dd;
        const double* xj = src + static_cast<std::ptrdiff_t>(col_idx[k]) * d;
        for (int r = 0; r < d; ++r) {
          double acc = 0.0;
          for (int c = 0; c < d; ++c) acc += b[r * d + c] * xj[c];
          yi[r] += acc;
        }
      }
    }
  }
}

Eigen::MatrixXd BlockSparseOperator::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out;
  apply(x, out);
  return out;
}

SparseOperator build_lazy_walk(const GeometricGraph& graph, bool weighted) {
  const int n = graph.num_nodes();
  SparseOperator p;
  p.n = n;
  p.row_stochastic = true;
  p.row_ptr.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) p.row_ptr[i + 1] = p.row_ptr[i] + graph.degree(i) + 1;
  p.col_idx.resize(p.row_ptr[n]);
  p.values.resize(p.row_ptr[n]);

  for (int i = 0; i < n; ++i) {
    const auto& row = graph.adjacency[i];
    double deg = 0.0;
    for (const auto& nb : row) deg += weighted ? nb.weight : 1.0;
    if (!(deg > 0.0)) {
      throw Error(ErrorCode::ZeroDegree, "node " + std::to_string(i) + " has zero degree");
    }
    int k = p.row_ptr[i];
    bool diag_done = false;
    for (const auto& nb : row) {
      if (!diag_done && i < nb.index) {
        p.col_idx[k] = i;
        p.values[k++] = 0.5;
        diag_done = true;
      }
      p.col_idx[k] = nb.index;
      p.values[k++] = 0.5 * (weighted ? nb.weight : 1.0) / deg;
    }
    if (!diag_done) {
      p.col_idx[k] = i;
      p.values[k] = 0.5;
    }
  }
  return p;
}

bool LocalFrame::flagged() const {
  if (gap_flagged) return true;
  return std::any_of(signs.begin(), signs.end(),
                     [](SignProvenance s) { return s == SignProvenance::FallbackFlagged; });
}

std::vector<int> LocalFrameSet::flagged_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i) {
    if (frames[i].flagged()) out.push_back(i);
  }
  return out;
}

LocalFrameSet LocalFrameSet::identity(int n, int d) {
  LocalFrameSet set;
  set.d = d;
  set.frames.resize(n);
  for (auto& f : set.frames) {
    f.basis = Eigen::MatrixXd::Identity(d, d);
    f.singular_values = Eigen::VectorXd::Ones(d);
    f.signs.assign(d, SignProvenance::Skewness);
  }
  return set;
}

LocalFrameSet build_local_frames(const GeometricGraph& graph, const FrameOptions& options) {
  const int n = graph.num_nodes();
  const int d = graph.dim();
  LocalFrameSet set;
  set.d = d;
  set.frames.resize(n);

  for (int i = 0; i < n; ++i) {
    if (graph.degree(i) < d) {
      throw Error(ErrorCode::RankDeficientFrame,
                  "node " + std::to_string(i) + " has fewer than d neighbors");
    }
    // B_i B_i^T = sum_j K(v_i, v_j) (v_j - v_i)(v_j - v_i)^T
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    for (const auto& nb : graph.adjacency[i]) {
      const Eigen::VectorXd offset = (graph.coords.row(nb.index) - graph.coords.row(i)).transpose();
      gram.noalias() += nb.weight * offset * offset.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorCode::EigensolverNoConvergence,
                  "frame eigensolver failed at node " + std::to_string(i));
    }
    auto& frame = set.frames[i];
    frame.basis.resize(d, d);
    frame.singular_values.resize(d);
    for (int k = 0; k < d; ++k) {
      const int src = d - 1 - k;  // Eigen sorts ascending
      frame.singular_values[k] = std::sqrt(std::max(eig.eigenvalues()[src], 0.0));
      frame.basis.col(k) = eig.eigenvectors().col(src);
    }
    const auto& sigma = frame.singular_values;
    if (!(sigma[d - 1] >= 1e-12 * sigma[0]) || sigma[0] == 0.0) {
      throw Error(ErrorCode::RankDeficientFrame,
                  "rank-deficient neighborhood at node " + std::to_string(i));
    }
    for (int k = 0; k + 1 < d; ++k) {
      if (sigma[k] - sigma[k + 1] < 1e-6 * sigma[k]) frame.gap_flagged = true;
    }
    if (sigma[0] - sigma[d - 1] < 1e-6 * sigma[0]) {
      frame.basis = Eigen::MatrixXd::Identity(d, d);
    }
    frame.signs.assign(d, SignProvenance::Skewness);
  }
  if (options.canonicalize_signs) return canonicalize_signs(std::move(set), graph);
  return set;
}

LocalFrameSet canonicalize_signs(LocalFrameSet frames, const GeometricGraph& graph) {
  const int d = frames.d;
  for (int i = 0; i < frames.num_nodes(); ++i) {
    auto& frame = frames.frames[i];
    frame.signs.assign(d, SignProvenance::Skewness);
    double scale3 = 0.0;
    for (const auto& nb : graph.adjacency[i]) {
      const double r = (graph.coords.row(nb.index) - graph.coords.row(i)).norm();
      scale3 += nb.weight * r * r * r;
    }
    for (int k = 0; k < d; ++k) {
      double moment = 0.0;
      for (const auto& nb : graph.adjacency[i]) {
        const double proj =
            (graph.coords.row(nb.index) - graph.coords.row(i)).dot(frame.basis.col(k).transpose());
        moment += nb.weight * proj * proj * proj;
      }
      if (std::abs(moment) <= 1e-9 * scale3) {
        frame.signs[k] = SignProvenance::FallbackFlagged;
      } else if (moment < 0.0) {
        frame.basis.col(k) *= -1.0;
      }
    }
  }
  return frames;
}

BlockSparseOperator build_vector_diffusion(const SparseOperator& p, const LocalFrameSet& frames) {
  if (frames.num_nodes() != p.n) {
    throw Error(ErrorCode::DimensionMismatch, "frame count does not match P");
  }
  const int d = frames.d;
  BlockSparseOperator q;
  q.n = p.n;
  q.d = d;
  q.row_ptr = p.row_ptr;
  q.col_idx = p.col_idx;
  q.blocks.assign(static_cast<std::size_t>(p.nnz()) * d * d, 0.0);
  for (int i = 0; i < p.n; ++i) {
    for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      const int j = p.col_idx[k];
      double* b = q.blocks.data() + static_cast<std::ptrdiff_t>(k) * d * d;
      if (i == j) {
        for (int r = 0; r < d; ++r) b[r * d + r] = p.values[k];
        continue;
      }
      const Eigen::MatrixXd o = frames.frames[i].basis * frames.frames[j].basis.transpose();
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) b[r * d + c] = p.values[k] * o(r, c);
      }
    }
  }
  return q;
}

Eigen::MatrixXd dense_materialize(const SparseOperator& op) {
  if (op.dim() > kMaxMaterializeDim) {
    throw Error(ErrorCode::TooLargeToMaterialize, "operator too large to materialize");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(op.n, op.n);
  for (int i = 0; i < op.n; ++i) {
    for (int k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) m(i, op.col_idx[k]) = op.values[k];
  }
  return m;
}

Eigen::MatrixXd dense_materialize(const BlockSparseOperator& op) {
  if (op.dim() > kMaxMaterializeDim) {
    throw Error(ErrorCode::TooLargeToMaterialize, "operator too large to materialize");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(op.dim(), op.dim());
  for (int i = 0; i < op.n; ++i) {
    for (int k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
      m.block(static_cast<Eigen::Index>(i) * op.d, static_cast<Eigen::Index>(op.col_idx[k]) * op.d,
              op.d, op.d) = op.block(k);
    }
  }
  return m;
}

BlockSparseOperator block_sparsify(const Eigen::MatrixXd& dense, const SparseOperator& pattern,
                                   int d) {
  const Eigen::Index nd = static_cast<Eigen::Index>(pattern.n) * d;
  if (dense.rows() != nd || dense.cols() != nd) {
    throw Error(ErrorCode::DimensionMismatch, "dense matrix does not match pattern");
  }
  BlockSparseOperator q;
  q.n = pattern.n;
  q.d = d;
  q.row_ptr = pattern.row_ptr;
  q.col_idx = pattern.col_idx;
  q.blocks.resize(static_cast<std::size_t>(pattern.nnz()) * d * d);
  for (int i = 0; i < pattern.n; ++i) {
    for (int k = pattern.row_ptr[i]; k < pattern.row_ptr[i + 1]; ++k) {
      const int j = pattern.col_idx[k];
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          q.blocks[static_cast<std::size_t>(k) * d * d + r * d + c] =
              dense(static_cast<Eigen::Index>(i) * d + r, static_cast<Eigen::Index>(j) * d + c);
        }
      }
    }
  }
  return q;
}

}  // namespace escgnn
