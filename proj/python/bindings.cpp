#include "escgnn/cli.hpp"
#include "escgnn/io.hpp"
#include "escgnn/training.hpp"
#include "escgnn/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace escgnn;

namespace {

GeometricGraph make_graph(const Eigen::MatrixXd& points, int k, std::optional<double> epsilon) {
  GeometricGraph g = build_knn_graph(points, k);
  if (epsilon) {
    g = kernel_weights(std::move(g), ExplicitEpsilon{*epsilon});
  } else {
    g = kernel_weights(std::move(g), MeanNeighborSq{});
  }
  g.scalar_signals = dirac_signals(g);
  g.vector_signals = {points};
  return g;
}

py::dict record_dict(const DatasetRecord& rec) {
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;
  for (int i = 0; i < rec.graph.num_nodes(); ++i) {
    for (const auto& nb : rec.graph.adjacency[i]) {
      if (nb.index > i) {
        edges.emplace_back(i, nb.index);
        weights.push_back(nb.weight);
      }
    }
  }
  py::dict d;
  d["coords"] = rec.graph.coords;
  d["edges"] = edges;
  d["weights"] = weights;
  d["scalar_signals"] = rec.graph.scalar_signals;
  d["axes"] = std::vector<double>{rec.provenance.a, rec.provenance.b, rec.provenance.c};
  if (rec.graph_target) d["target"] = *rec.graph_target;
  if (rec.node_targets) d["target"] = *rec.node_targets;
  return d;
}

}  // namespace

PYBIND11_MODULE(_escgnn, m) {
  m.doc() = "Rotation-equivariant geometric scattering";

  py::register_exception<Error>(m, "EscgnnError");

  m.def("lazy_walk", [](const Eigen::MatrixXd& points, int k, std::optional<double> epsilon) {
    return dense_materialize(build_lazy_walk(make_graph(points, k, epsilon)));
  }, py::arg("points"), py::arg("k") = 5, py::arg("epsilon") = py::none(),
        "Dense lazy random walk (I + D^-1 A)/2 of the kernel-weighted k-NN graph.");

  m.def("vector_diffusion", [](const Eigen::MatrixXd& points, int k, std::optional<double> epsilon) {
    const GeometricGraph g = make_graph(points, k, epsilon);
    const SparseOperator p = build_lazy_walk(g);
    return dense_materialize(build_vector_diffusion(p, build_local_frames(g)));
  }, py::arg("points"), py::arg("k") = 5, py::arg("epsilon") = py::none(),
        "Dense vector diffusion operator Q (nd x nd, node-major).");

  m.def("local_frames", [](const Eigen::MatrixXd& points, int k) {
    const LocalFrameSet f = build_local_frames(make_graph(points, k, std::nullopt));
    std::vector<Eigen::MatrixXd> out;
    for (const auto& frame : f.frames) out.push_back(frame.basis);
    return out;
  }, py::arg("points"), py::arg("k") = 5);

  m.def("scattering", [](const Eigen::MatrixXd& points, int k, int J) {
    const GeometricGraph g = make_graph(points, k, std::nullopt);
    FeatureConfig fc;
    fc.scalar_bank = dyadic_scales(J);
    fc.vector_bank = dyadic_scales(J);
    const GraphFeatures f = compute_features(g, fc);
    auto as_array = [](const Tensor3& t) {
      return py::array_t<double>({t.dim0(), t.dim1(), t.dim2()}, t.data().data());
    };
    return py::make_tuple(as_array(f.scalar), as_array(f.vector));
  }, py::arg("points"), py::arg("k") = 5, py::arg("J") = 3,
        "Scalar (n x 2 x S) and vector (n x d x S) scattering of the Dirac and coordinate signals.");

  m.def("diameter_dataset", [](int num_graphs, int n_points, int k, std::uint64_t seed) {
    DiameterDatasetConfig c{num_graphs, n_points, k, seed};
    py::list out;
    for (const auto& rec : make_diameter_dataset(c)) out.append(record_dict(rec));
    return out;
  }, py::arg("num_graphs"), py::arg("n_points") = 128, py::arg("k") = 5, py::arg("seed") = 0);

  m.def("vectorfield_dataset", [](int num_graphs, int n_small, int n_large, int num_eigs, std::uint64_t seed) {
    VectorFieldDatasetConfig c;
    c.num_graphs = num_graphs;
    c.n_small = n_small;
    c.n_large = n_large;
    c.num_eigs = num_eigs;
    c.seed = seed;
    py::list out;
    for (const auto& rec : make_vector_target_dataset(c)) out.append(record_dict(rec));
    return out;
  }, py::arg("num_graphs"), py::arg("n_small") = 128, py::arg("n_large") = 1024, py::arg("num_eigs") = 16,
        py::arg("seed") = 0);

  m.def("verify", [](std::uint64_t seed, bool canonicalize_signs) {
    VerifyOptions o;
    o.canonicalize_signs = canonicalize_signs;
    py::list out;
    for (const auto& c : verify_suite(seed, o).checks) {
      py::dict d;
      d["name"] = c.name;
      d["passed"] = c.passed;
      d["measured"] = c.measured;
      d["threshold"] = c.threshold;
      d["detail"] = c.detail;
      out.append(d);
    }
    return out;
  }, py::arg("seed") = 7, py::arg("canonicalize_signs") = true);

  m.def("cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "escgnn");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    py::gil_scoped_release release;
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
  }, py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");

  m.attr("METRICS_HEADER") = kMetricsHeader;
}
