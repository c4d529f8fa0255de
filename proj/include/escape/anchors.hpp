#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "escape/point_cloud.hpp"

namespace escape {

enum class AnchorStrategy { fps, cluster, ball_query };

std::string to_string(AnchorStrategy strategy);
AnchorStrategy anchor_strategy_from_string(const std::string& name);

/// Strategy parameters. `threshold` gates curvature refinement for the
/// cluster strategy; `radius` bounds how far a ball-query anchor may move
/// from its FPS seed.
struct AnchorParams {
    double threshold = 0.0;
    double radius = 0.075;
};

/// k anchor coordinates with their source indices and selection metadata.
struct AnchorSet {
    std::vector<Vec3> anchors;
    std::vector<int> source_indices;  // empty when loaded from a file
    AnchorStrategy strategy = AnchorStrategy::fps;
    AnchorParams params;

    /// Smallest argmax gap seen during selection (FPS steps, cluster
    /// assignment, curvature elections). Selections with a tiny margin are
    /// not guaranteed rotation-equivariant; equivariance checks gate on it.
    double selection_margin = std::numeric_limits<double>::infinity();

    int k() const { return static_cast<int>(anchors.size()); }

    /// Checks source indices against the originating cloud. Throws on violation.
    void validate(const PointCloud& cloud) const;
};

/// Per-point curvature (min eigenvalue of the neighbor-normal covariance,
/// clamped at zero) together with the normal Laplacian vectors.
struct CurvatureField {
    std::vector<double> kappa;
    std::vector<Vec3> laplacian;
};

/// Deterministic farthest point sampling: seeded with the point farthest from
/// the centroid, then the usual max-min recursion; every argmax tie is broken
/// by ascending point index. Optionally reports the smallest argmax margin.
std::vector<int> deterministic_fps(const PointCloud& cloud, int k,
                                   double* min_margin = nullptr);

/// Δnᵢ = nᵢ − mean of the k_nn neighbor normals (self excluded).
std::vector<Vec3> normal_laplacian(const PointCloud& cloud, int k_nn, int workers = 0);

/// Neighbor-normal covariance curvature plus the normal Laplacian.
/// Requires normals; k_nn ≥ 3.
CurvatureField curvature(const PointCloud& cloud, int k_nn, int workers = 0);

/// Anchor selection.
///  - fps: the deterministic_fps indices, unchanged.
///  - cluster: FPS seeds define k nearest-seed clusters; a seed is replaced by
///    its cluster's max-curvature point when that curvature exceeds
///    params.threshold.
///  - ball_query: like cluster, but candidates are restricted to cluster
///    members within params.radius of the seed.
/// If two clusters elect the same point, the later cluster (by seed order)
/// falls back to its seed. Requires k ≤ n; cluster and ball_query need normals.
AnchorSet select_anchors(const PointCloud& cloud, int k, AnchorStrategy strategy,
                         const AnchorParams& params = {}, int k_nn = 16,
                         int workers = 0);

/// XYZ text with a `# strategy=<s> k=<k> radius=<r> threshold=<t>` header line.
void save_anchors(const AnchorSet& anchors, const std::filesystem::path& path);
AnchorSet load_anchors(const std::filesystem::path& path);

}  // namespace escape
