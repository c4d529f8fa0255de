// Python bindings over the core operations: clouds and distance matrices move
// across the boundary as contiguous float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <vector>

#include "escape/anchors.hpp"
#include "escape/codec.hpp"
#include "escape/completion.hpp"
#include "escape/errors.hpp"
#include "escape/escd.hpp"
#include "escape/io.hpp"
#include "escape/metrics.hpp"
#include "escape/normals.hpp"
#include "escape/point_cloud.hpp"

namespace py = pybind11;
using namespace escape;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_vectors(const Array& arr, const char* name) {
    const auto buf = arr.request();
    if (buf.ndim != 2 || buf.shape[1] != 3)
        throw py::value_error(std::string(name) + " must be an (n, 3) float array");
    const double* data = static_cast<const double*>(buf.ptr);
    std::vector<Vec3> out;
    out.reserve(buf.shape[0]);
    for (py::ssize_t i = 0; i < buf.shape[0]; ++i)
        out.emplace_back(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
    return out;
}

Array from_vectors(const std::vector<Vec3>& pts) {
    Array out({static_cast<py::ssize_t>(pts.size()), py::ssize_t(3)});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int c = 0; c < 3; ++c) view(i, c) = pts[i](c);
    return out;
}

PointCloud to_cloud(const Array& points, const std::optional<Array>& normals) {
    PointCloud cloud(to_vectors(points, "points"));
    if (normals) cloud.normals = to_vectors(*normals, "normals");
    return cloud;
}

Mat3 to_rotation(const Array& arr) {
    const auto buf = arr.request();
    if (buf.ndim != 2 || buf.shape[0] != 3 || buf.shape[1] != 3)
        throw py::value_error("rotation must be a (3, 3) float array");
    Mat3 r;
    const double* data = static_cast<const double*>(buf.ptr);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = data[3 * i + j];
    return r;
}

Array from_rotation(const Mat3& r) {
    Array out({py::ssize_t(3), py::ssize_t(3)});
    auto view = out.mutable_unchecked<2>();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) view(i, j) = r(i, j);
    return out;
}

Vec3 to_vec3(const Array& arr, const char* name) {
    const auto buf = arr.request();
    if (buf.size != 3) throw py::value_error(std::string(name) + " must have 3 entries");
    const double* data = static_cast<const double*>(buf.ptr);
    return Vec3(data[0], data[1], data[2]);
}

AnchorSet to_anchors(const Array& arr) {
    AnchorSet anchors;
    anchors.anchors = to_vectors(arr, "anchors");
    return anchors;
}

DistanceMatrix to_matrix(const Array& values, const Array& anchors) {
    const auto buf = values.request();
    if (buf.ndim != 2) throw py::value_error("distances must be an (n, k) float array");
    DistanceMatrix m;
    m.rows = static_cast<int>(buf.shape[0]);
    m.cols = static_cast<int>(buf.shape[1]);
    m.anchors = to_anchors(anchors);
    const double* data = static_cast<const double*>(buf.ptr);
    m.values.assign(data, data + buf.shape[0] * buf.shape[1]);
    if (m.cols != m.anchors.k())
        throw py::value_error("distances and anchors disagree on k");
    return m;
}

Array matrix_values(const DistanceMatrix& m) {
    Array out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
    auto view = out.mutable_unchecked<2>();
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) view(i, j) = m.at(i, j);
    return out;
}

CompletionConfig make_config(int k, int n_in, int m_out, const std::string& strategy,
                             double radius, double threshold, int k_nn,
                             const std::string& predictor, bool normalize, int workers,
                             double timeout, int max_iters, double tol) {
    CompletionConfig config;
    config.k = k;
    config.n_in = n_in;
    config.m_out = m_out;
    config.strategy = anchor_strategy_from_string(strategy);
    config.anchor_params.radius = radius;
    config.anchor_params.threshold = threshold;
    config.k_nn = k_nn;
    config.predictor = PredictorSpec::parse(predictor);
    config.normalize = normalize;
    config.workers = workers;
    config.predictor_timeout_seconds = timeout;
    config.solver.max_iters = max_iters;
    config.solver.residual_tol = tol;
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rotation-equivariant anchor-distance encoding for point clouds";

    py::register_exception<Error>(m, "EscapeError");

    m.def(
        "load_cloud",
        [](const std::string& path) {
            const PointCloud cloud = load_cloud(path);
            py::object normals = py::none();
            if (cloud.has_normals()) normals = from_vectors(cloud.normals);
            return py::make_tuple(from_vectors(cloud.points), normals);
        },
        py::arg("path"), "Load an xyz or ply cloud; returns (points, normals or None)");

    m.def(
        "save_cloud",
        [](const Array& points, const std::string& path,
           const std::optional<Array>& normals) {
            save_cloud(to_cloud(points, normals), path);
        },
        py::arg("points"), py::arg("path"), py::arg("normals") = py::none());

    m.def(
        "estimate_normals",
        [](const Array& points, int k_nn, int workers) {
            return from_vectors(estimate_normals(to_cloud(points, {}), k_nn, workers).normals);
        },
        py::arg("points"), py::arg("k_nn") = 16, py::arg("workers") = 0);

    m.def(
        "apply_rigid",
        [](const Array& points, const Array& rotation, const Array& translation) {
            RigidTransform t;
            t.rotation = to_rotation(rotation);
            t.translation = to_vec3(translation, "translation");
            return from_vectors(apply_rigid(to_cloud(points, {}), t).points);
        },
        py::arg("points"), py::arg("rotation"), py::arg("translation"));

    m.def(
        "random_rotation",
        [](std::uint64_t seed) { return from_rotation(random_rotation(seed).rotation); },
        py::arg("seed"), "Three-axis rotation with angles uniform in [0, 180] degrees");

    m.def(
        "euler_rotation_deg",
        [](double rx, double ry, double rz) {
            return from_rotation(euler_rotation_deg(rx, ry, rz).rotation);
        },
        py::arg("rx"), py::arg("ry"), py::arg("rz"));

    m.def(
        "kabsch_align",
        [](const Array& source, const Array& target) {
            const KabschResult r = kabsch_align(to_cloud(source, {}), to_cloud(target, {}));
            py::dict out;
            out["rotation"] = from_rotation(r.transform.rotation);
            out["translation"] = from_vectors({r.transform.translation});
            out["rmsd"] = r.rmsd;
            return out;
        },
        py::arg("source"), py::arg("target"));

    m.def(
        "deterministic_fps",
        [](const Array& points, int k) {
            return deterministic_fps(to_cloud(points, {}), k);
        },
        py::arg("points"), py::arg("k"));

    m.def(
        "curvature",
        [](const Array& points, const Array& normals, int k_nn, int workers) {
            const CurvatureField field =
                curvature(to_cloud(points, normals), k_nn, workers);
            return py::make_tuple(py::cast(field.kappa), from_vectors(field.laplacian));
        },
        py::arg("points"), py::arg("normals"), py::arg("k_nn") = 16,
        py::arg("workers") = 0, "Returns (kappa, normal_laplacian)");

    m.def(
        "select_anchors",
        [](const Array& points, int k, const std::string& strategy, double radius,
           double threshold, int k_nn, int workers) {
            AnchorParams params;
            params.radius = radius;
            params.threshold = threshold;
            const AnchorSet anchors =
                select_anchors(to_cloud(points, {}), k,
                               anchor_strategy_from_string(strategy), params, k_nn, workers);
            py::dict out;
            out["anchors"] = from_vectors(anchors.anchors);
            out["source_indices"] = anchors.source_indices;
            out["selection_margin"] = anchors.selection_margin;
            out["strategy"] = to_string(anchors.strategy);
            return out;
        },
        py::arg("points"), py::arg("k") = 8, py::arg("strategy") = "fps",
        py::arg("radius") = 0.075, py::arg("threshold") = 0.0, py::arg("k_nn") = 16,
        py::arg("workers") = 0);

    m.def(
        "encode",
        [](const Array& points, const Array& anchors) {
            return matrix_values(encode(to_cloud(points, {}), to_anchors(anchors)));
        },
        py::arg("points"), py::arg("anchors"),
        "Distances of every point to every anchor, shape (n, k)");

    m.def(
        "decode",
        [](const Array& distances, const Array& anchors, int max_iters, double tol,
           int workers) {
            SolverOptions opts;
            opts.max_iters = max_iters;
            opts.residual_tol = tol;
            const DecodeResult result = decode(to_matrix(distances, anchors), opts, workers);
            py::dict out;
            out["points"] = from_vectors(result.cloud.points);
            out["residuals"] = result.residuals;
            py::list failures;
            for (const RowFailure& f : result.failures)
                failures.append(py::make_tuple(f.row, f.message));
            out["failures"] = failures;
            return out;
        },
        py::arg("distances"), py::arg("anchors"), py::arg("max_iters") = 100,
        py::arg("tol") = 1e-10, py::arg("workers") = 0);

    m.def(
        "decode_point",
        [](const std::vector<double>& row, const Array& anchors,
           const std::optional<Array>& init) {
            std::optional<Vec3> start;
            if (init) start = to_vec3(*init, "init");
            const DecodedPoint dp = decode_point(row, to_anchors(anchors), {}, start);
            return py::make_tuple(from_vectors({dp.point}), dp.residual);
        },
        py::arg("row"), py::arg("anchors"), py::arg("init") = py::none());

    m.def(
        "dmcd",
        [](const Array& d1, const Array& a1, const Array& d2, const Array& a2,
           int workers) { return dmcd(to_matrix(d1, a1), to_matrix(d2, a2), workers); },
        py::arg("d1"), py::arg("anchors1"), py::arg("d2"), py::arg("anchors2"),
        py::arg("workers") = 0);

    m.def(
        "chamfer_l1",
        [](const Array& a, const Array& b, int workers) {
            return chamfer_l1(to_cloud(a, {}), to_cloud(b, {}), workers);
        },
        py::arg("a"), py::arg("b"), py::arg("workers") = 0, "CD-L1, x1000 convention");

    m.def(
        "chamfer_l2",
        [](const Array& a, const Array& b, int workers) {
            return chamfer_l2(to_cloud(a, {}), to_cloud(b, {}), workers);
        },
        py::arg("a"), py::arg("b"), py::arg("workers") = 0, "CD-L2, x1000 convention");

    m.def(
        "fidelity",
        [](const Array& input, const Array& output, int workers) {
            return fidelity(to_cloud(input, {}), to_cloud(output, {}), workers);
        },
        py::arg("input"), py::arg("output"), py::arg("workers") = 0);

    m.def(
        "pca_canonicalize",
        [](const Array& points) {
            const PcaCanonical r = pca_canonicalize(to_cloud(points, {}));
            py::dict out;
            out["points"] = from_vectors(r.cloud.points);
            out["rotation"] = from_rotation(r.transform.rotation);
            out["translation"] = from_vectors({r.transform.translation});
            out["eigenvalues"] = from_vectors({r.eigenvalues});
            out["stable"] = r.stable;
            return out;
        },
        py::arg("points"));

    m.def(
        "add_gaussian_noise",
        [](const Array& points, double sigma, std::uint64_t seed) {
            return from_vectors(add_gaussian_noise(to_cloud(points, {}), sigma, seed).points);
        },
        py::arg("points"), py::arg("sigma"), py::arg("seed"));

    m.def(
        "remove_points",
        [](const Array& points, double ratio, std::uint64_t seed) {
            return from_vectors(remove_points(to_cloud(points, {}), ratio, seed).points);
        },
        py::arg("points"), py::arg("ratio"), py::arg("seed"));

    m.def(
        "resample",
        [](const Array& points, int n_target, std::uint64_t seed) {
            return from_vectors(resample(to_cloud(points, {}), n_target, seed).points);
        },
        py::arg("points"), py::arg("n_target"), py::arg("seed") = 0);

    m.def(
        "write_escd",
        [](const std::string& path, const Array& distances, const Array& anchors) {
            write_escd_auto(to_matrix(distances, anchors), path);
        },
        py::arg("path"), py::arg("distances"), py::arg("anchors"));

    m.def(
        "read_escd",
        [](const std::string& path) {
            const DistanceMatrix m = read_escd_auto(path);
            return py::make_tuple(matrix_values(m), from_vectors(m.anchors.anchors));
        },
        py::arg("path"), "Returns (distances, anchors)");

    m.def(
        "complete",
        [](const Array& points, int k, int n_in, int m_out, const std::string& strategy,
           double radius, double threshold, int k_nn, const std::string& predictor,
           bool normalize, std::uint64_t seed, int workers, double timeout,
           int max_iters, double tol) {
            const CompletionConfig config =
                make_config(k, n_in, m_out, strategy, radius, threshold, k_nn, predictor,
                            normalize, workers, timeout, max_iters, tol);
            const CompletionResult result = complete(to_cloud(points, {}), config, seed);
            py::dict out;
            out["points"] = from_vectors(result.cloud.points);
            out["anchors"] = from_vectors(result.report.anchors.anchors);
            out["selection_margin"] = result.report.anchors.selection_margin;
            out["residuals"] = result.report.residuals;
            out["max_residual"] = result.report.max_residual;
            py::dict timings;
            for (const StageTiming& t : result.report.timings)
                timings[py::str(t.stage)] = t.seconds;
            out["timings"] = timings;
            return out;
        },
        py::arg("points"), py::arg("k") = 8, py::arg("n_in") = 2048,
        py::arg("m_out") = 16384, py::arg("strategy") = "fps", py::arg("radius") = 0.075,
        py::arg("threshold") = 0.0, py::arg("k_nn") = 16,
        py::arg("predictor") = "identity", py::arg("normalize") = false,
        py::arg("seed") = 0, py::arg("workers") = 0, py::arg("timeout") = 300.0,
        py::arg("max_iters") = 100, py::arg("tol") = 1e-10,
        "Full pipeline: resample, select anchors, encode, predict, decode");
}
