#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "escape/anchors.hpp"
#include "escape/point_cloud.hpp"

namespace escape {

/// n×k matrix of point-to-anchor Euclidean distances plus the anchors that
/// define it. Row-major storage.
struct DistanceMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // rows*cols, row-major
    AnchorSet anchors;

    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }

    std::span<const double> row(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * cols,
                static_cast<std::size_t>(cols)};
    }

    /// All values finite and nonnegative, cols == anchors.k(). Throws on violation.
    void validate() const;
};

struct SolverOptions {
    int max_iters = 100;
    double residual_tol = 1e-10;
    double damping_init = 1e-3;
    double damping_scale = 10.0;   // decrease on accepted step, increase on rejected
    double singular_guard = 1e-12;
};

/// values[i][j] = ‖pᵢ − aⱼ‖₂.
DistanceMatrix encode(const PointCloud& cloud, const AnchorSet& anchors);

/// Chamfer distance between the row multisets of two distance matrices under
/// the L1 row metric. Symmetric, zero for equal row multisets.
/// Throws ColsMismatch when the column counts differ.
double dmcd(const DistanceMatrix& a, const DistanceMatrix& b, int workers = 0);

/// Validates the anchor geometry for decoding: k ≥ 4 (TooFewAnchors) and the
/// smallest singular value of the 3×(k−1) anchor-difference matrix exceeding
/// 1e-9 times the anchor-set diameter (DegenerateAnchors otherwise).
void check_decodable_anchors(const AnchorSet& anchors);

struct DecodedPoint {
    Vec3 point = Vec3::Zero();
    double residual = 0.0;  // final objective value Σ(‖p−aⱼ‖ − dⱼ)²
};

/// Levenberg-Marquardt multilateration of one distance row against the
/// anchors. Starts at the anchor centroid unless `init` is given. Throws
/// TooFewAnchors / DegenerateAnchors per check_decodable_anchors and
/// SolverDiverged on a non-finite iterate.
DecodedPoint decode_point(std::span<const double> row, const AnchorSet& anchors,
                          const SolverOptions& opts = {},
                          std::optional<Vec3> init = std::nullopt);

struct RowFailure {
    int row = 0;
    std::string message;
};

struct DecodeResult {
    PointCloud cloud;
    std::vector<double> residuals;
    std::vector<RowFailure> failures;  // diverged rows, reported not dropped
};

/// Row-wise decode_point over a worker pool. Output order equals row order and
/// is identical for any worker count. Diverged rows keep the anchor-centroid
/// initialization and are listed in failures; only DegenerateAnchors fails the
/// whole call.
DecodeResult decode(const DistanceMatrix& matrix, const SolverOptions& opts = {},
                    int workers = 0);

}  // namespace escape
