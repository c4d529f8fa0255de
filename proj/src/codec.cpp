#include "escape/codec.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "escape/errors.hpp"
#include "escape/parallel.hpp"

namespace escape {

void DistanceMatrix::validate() const {
    if (rows < 0 || cols < 1) throw Error("distance matrix: bad shape");
    if (values.size() != static_cast<std::size_t>(rows) * cols)
        throw Error("distance matrix: value count does not match shape");
    if (cols != anchors.k()) throw Error("distance matrix: cols != anchor count");
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0)
            throw Error("distance matrix: values must be finite and nonnegative");
    }
}

DistanceMatrix encode(const PointCloud& cloud, const AnchorSet& anchors) {
    if (anchors.k() < 1) throw TooFewAnchors("encode: need at least one anchor");
    DistanceMatrix out;
    out.rows = static_cast<int>(cloud.size());
    out.cols = anchors.k();
    out.anchors = anchors;
    out.values.resize(static_cast<std::size_t>(out.rows) * out.cols);
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j)
            out.at(i, j) = (cloud.points[i] - anchors.anchors[j]).norm();
    }
    return out;
}

double dmcd(const DistanceMatrix& a, const DistanceMatrix& b, int workers) {
    if (a.cols != b.cols)
        throw ColsMismatch("dmcd: column counts differ (" + std::to_string(a.cols) +
                           " vs " + std::to_string(b.cols) + ")");
    if (a.rows == 0 || b.rows == 0) throw EmptyCloud("dmcd: empty distance matrix");

    const int k = a.cols;
    auto directed = [&](const DistanceMatrix& from, const DistanceMatrix& to) {
        std::vector<double> best(from.rows);
        parallel_for(from.rows, workers, [&](std::size_t i) {
            const auto ri = from.row(static_cast<int>(i));
            double min_l1 = std::numeric_limits<double>::infinity();
            for (int j = 0; j < to.rows; ++j) {
                const auto rj = to.row(j);
                double l1 = 0.0;
                for (int c = 0; c < k; ++c) l1 += std::abs(ri[c] - rj[c]);
                min_l1 = std::min(min_l1, l1);
            }
            best[i] = min_l1;
        });
        double sum = 0.0;
        for (double v : best) sum += v;
        return sum / static_cast<double>(from.rows);
    };

    return directed(a, b) + directed(b, a);
}

void check_decodable_anchors(const AnchorSet& anchors) {
    const int k = anchors.k();
    if (k < 4)
        throw TooFewAnchors("decode: need k >= 4 anchors, got " + std::to_string(k));

    double diameter = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j)
            diameter = std::max(diameter,
                                (anchors.anchors[i] - anchors.anchors[j]).norm());
    }
    if (diameter <= 0.0) throw DegenerateAnchors("decode: anchors coincide");

    Eigen::MatrixXd diff(3, k - 1);
    for (int j = 1; j < k; ++j) diff.col(j - 1) = anchors.anchors[j] - anchors.anchors[0];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff);
    const double smallest = svd.singularValues()(svd.singularValues().size() - 1);
    if (smallest <= 1e-9 * diameter)
        throw DegenerateAnchors("decode: anchors not in general position (s_min=" +
                                std::to_string(smallest) + ")");
}

namespace {

double objective(const Vec3& p, const AnchorSet& anchors, std::span<const double> row) {
    double obj = 0.0;
    for (int j = 0; j < anchors.k(); ++j) {
        const double r = (p - anchors.anchors[j]).norm() - row[j];
        obj += r * r;
    }
    return obj;
}

}  // namespace

DecodedPoint decode_point(std::span<const double> row, const AnchorSet& anchors,
                          const SolverOptions& opts, std::optional<Vec3> init) {
    check_decodable_anchors(anchors);
    const int k = anchors.k();
    if (static_cast<int>(row.size()) != k)
        throw ColsMismatch("decode_point: row length does not match anchor count");
    for (double d : row) {
        if (!std::isfinite(d) || d < 0.0)
            throw Error("decode_point: distances must be finite and nonnegative");
    }

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& a : anchors.anchors) centroid += a;
    centroid /= static_cast<double>(k);

    Vec3 p = init.value_or(centroid);
    double obj = objective(p, anchors, row);
    double lambda = opts.damping_init;

    Eigen::MatrixXd jac(k, 3);
    Eigen::VectorXd res(k);

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        for (int j = 0; j < k; ++j) {
            const Vec3 d = p - anchors.anchors[j];
            const double dist = d.norm();
            res(j) = dist - row[j];
            jac.row(j) = d.transpose() / std::max(dist, opts.singular_guard);
        }
        const Mat3 hess = jac.transpose() * jac;
        const Vec3 grad = jac.transpose() * res;
        if (grad.cwiseAbs().maxCoeff() < 1e-15) break;

        bool accepted = false;
        while (!accepted) {
            const Mat3 damped = hess + lambda * Mat3::Identity();
            const Vec3 step = damped.ldlt().solve(-grad);
            const Vec3 candidate = p + step;
            if (!candidate.allFinite())
                throw SolverDiverged("decode_point: non-finite iterate");
            const double cand_obj = objective(candidate, anchors, row);
            if (cand_obj < obj) {
                const double improvement = std::sqrt(obj) - std::sqrt(cand_obj);
                p = candidate;
                obj = cand_obj;
                lambda = std::max(lambda / opts.damping_scale, 1e-18);
                accepted = true;
                if (improvement < opts.residual_tol) return {p, obj};
            } else {
                lambda *= opts.damping_scale;
                if (lambda > 1e15) return {p, obj};  // no further descent possible
            }
        }
    }
    if (!p.allFinite()) throw SolverDiverged("decode_point: non-finite result");
    return {p, obj};
}

DecodeResult decode(const DistanceMatrix& matrix, const SolverOptions& opts, int workers) {
    check_decodable_anchors(matrix.anchors);

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& a : matrix.anchors.anchors) centroid += a;
    centroid /= static_cast<double>(matrix.anchors.k());

    DecodeResult out;
    out.cloud.points.assign(matrix.rows, centroid);
    out.residuals.assign(matrix.rows, 0.0);

    std::vector<std::string> errors(matrix.rows);
    parallel_for(matrix.rows, workers, [&](std::size_t i) {
        try {
            const DecodedPoint dp = decode_point(matrix.row(static_cast<int>(i)),
                                                 matrix.anchors, opts);
            if (!dp.point.allFinite() || !std::isfinite(dp.residual))
                throw SolverDiverged("decode: non-finite row result");
            out.cloud.points[i] = dp.point;
            out.residuals[i] = dp.residual;
        } catch (const Error& e) {
            errors[i] = e.what();  // row keeps the centroid placeholder
        }
    });

    for (int i = 0; i < matrix.rows; ++i) {
        if (!errors[i].empty()) out.failures.push_back({i, errors[i]});
    }
    return out;
}

}  // namespace escape
