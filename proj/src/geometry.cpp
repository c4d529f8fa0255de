#include "escape/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "escape/errors.hpp"
#include "escape/point_cloud.hpp"
#include "escape/rng.hpp"

namespace escape {

bool RigidTransform::is_valid(double tol) const {
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rotation.determinant() - 1.0) > tol) return false;
    return translation.allFinite();
}

Mat3 rotation_about_x(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    Mat3 r;
    r << 1, 0, 0,
         0, c, -s,
         0, s, c;
    return r;
}

Mat3 rotation_about_y(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    Mat3 r;
    r << c, 0, s,
         0, 1, 0,
         -s, 0, c;
    return r;
}

Mat3 rotation_about_z(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    Mat3 r;
    r << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return r;
}

RigidTransform euler_rotation_deg(double rx_deg, double ry_deg, double rz_deg) {
    constexpr double deg = M_PI / 180.0;
    RigidTransform t;
    t.rotation = rotation_about_z(rz_deg * deg) * rotation_about_y(ry_deg * deg) *
                 rotation_about_x(rx_deg * deg);
    return t;
}

RigidTransform random_rotation(std::uint64_t seed) {
    Rng rng(seed);
    const double rx = rng.uniform(0.0, 180.0);
    const double ry = rng.uniform(0.0, 180.0);
    const double rz = rng.uniform(0.0, 180.0);
    return euler_rotation_deg(rx, ry, rz);
}

KabschResult kabsch_align(const PointCloud& source, const PointCloud& target) {
    const std::size_t n = source.size();
    if (n != target.size())
        throw DegenerateConfiguration("kabsch: clouds must have equal cardinality");
    if (n < 3) throw DegenerateConfiguration("kabsch: need at least 3 points");

    const Vec3 sc = source.centroid();
    const Vec3 tc = target.centroid();

    Mat3 cross = Mat3::Zero();
    for (std::size_t i = 0; i < n; ++i)
        cross += (target.points[i] - tc) * (source.points[i] - sc).transpose();
    cross /= static_cast<double>(n);

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    // rank < 2 leaves the rotation underdetermined
    if (sv(0) <= 0.0 || sv(1) <= 1e-12 * sv(0))
        throw DegenerateConfiguration("kabsch: collinear or coincident input");

    Mat3 flip = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) flip(2, 2) = -1.0;

    KabschResult out;
    out.transform.rotation = svd.matrixU() * flip * svd.matrixV().transpose();
    out.transform.translation = tc - out.transform.rotation * sc;

    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sq += (out.transform.apply(source.points[i]) - target.points[i]).squaredNorm();
    out.rmsd = std::sqrt(sq / static_cast<double>(n));
    return out;
}

}  // namespace escape
