#pragma once

#include <cstddef>
#include <vector>

#include "escape/geometry.hpp"

namespace escape {

/// Ordered list of 3D points with optional per-point unit normals.
/// Value object: no operation in this library mutates its input cloud.
class PointCloud {
public:
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or one unit vector per point

    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}
    PointCloud(std::vector<Vec3> pts, std::vector<Vec3> nrm)
        : points(std::move(pts)), normals(std::move(nrm)) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    Vec3 centroid() const;

    /// Checks the type invariants: finite coordinates, and when normals are
    /// present, one per point and unit length within 1e-9. Throws on violation.
    void validate() const;
};

/// p -> R p + t for points, n -> R n for normals.
PointCloud apply_rigid(const PointCloud& cloud, const RigidTransform& transform);

}  // namespace escape
