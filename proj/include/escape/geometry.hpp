#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

namespace escape {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rigid motion: p -> rotation * p + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    RigidTransform inverse() const {
        RigidTransform inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(rotation.transpose() * translation);
        return inv;
    }

    /// this ∘ other, i.e. apply `other` first.
    RigidTransform compose(const RigidTransform& other) const {
        RigidTransform out;
        out.rotation = rotation * other.rotation;
        out.translation = rotation * other.translation + translation;
        return out;
    }

    /// RᵀR = I and det R = +1, both within `tol`.
    bool is_valid(double tol = 1e-12) const;
};

Mat3 rotation_about_x(double radians);
Mat3 rotation_about_y(double radians);
Mat3 rotation_about_z(double radians);

/// Rz(rz)·Ry(ry)·Rx(rx), angles in degrees; the x rotation is applied first.
RigidTransform euler_rotation_deg(double rx_deg, double ry_deg, double rz_deg);

/// Rotation composed from three axis rotations with angles drawn uniformly
/// from [0°, 180°]; translation zero. Same seed, same transform.
RigidTransform random_rotation(std::uint64_t seed);

class PointCloud;

struct KabschResult {
    RigidTransform transform;  // maps source onto target
    double rmsd = 0.0;
};

/// Least-squares rigid alignment of `source` onto `target` (correspondence by
/// index). Throws DegenerateConfiguration for collinear or coincident inputs.
KabschResult kabsch_align(const PointCloud& source, const PointCloud& target);

}  // namespace escape
