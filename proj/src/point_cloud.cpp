#include "escape/point_cloud.hpp"

#include <cmath>

#include "escape/errors.hpp"

namespace escape {

Vec3 PointCloud::centroid() const {
    Vec3 c = Vec3::Zero();
    if (points.empty()) return c;
    for (const Vec3& p : points) c += p;
    return c / static_cast<double>(points.size());
}

void PointCloud::validate() const {
    for (const Vec3& p : points) {
        if (!p.allFinite()) throw Error("point cloud contains non-finite coordinates");
    }
    if (!normals.empty()) {
        if (normals.size() != points.size())
            throw Error("normals cardinality does not match points");
        for (const Vec3& n : normals) {
            if (!n.allFinite()) throw Error("point cloud contains non-finite normals");
            if (std::abs(n.norm() - 1.0) > 1e-9)
                throw Error("normals must be unit length within 1e-9");
        }
    }
}

PointCloud apply_rigid(const PointCloud& cloud, const RigidTransform& transform) {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) out.points.push_back(transform.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const Vec3& n : cloud.normals) out.normals.push_back(transform.rotation * n);
    return out;
}

}  // namespace escape
