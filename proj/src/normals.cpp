#include "escape/normals.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "escape/errors.hpp"
#include "escape/knn.hpp"
#include "escape/parallel.hpp"

namespace escape {

namespace {

// make the first nonzero component positive; components below 1e-9 of a unit
// vector are round-off, not signal
Vec3 canonical_sign(const Vec3& n) {
    for (int c = 0; c < 3; ++c) {
        if (std::abs(n(c)) > 1e-9) return n(c) > 0.0 ? n : Vec3(-n);
    }
    return n;
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, int k_nn, int workers) {
    const std::size_t n = cloud.size();
    if (k_nn < 1) throw KTooLarge("estimate_normals: k_nn must be positive");
    if (n < static_cast<std::size_t>(k_nn) + 1)
        throw KTooLarge("estimate_normals: cloud needs at least k_nn+1 points");

    const KnnIndex index(cloud);
    const Vec3 centroid = cloud.centroid();

    PointCloud out;
    out.points = cloud.points;
    out.normals.assign(n, Vec3::Zero());

    parallel_for(n, workers, [&](std::size_t i) {
        const auto neighbors = index.knn(cloud.points[i], k_nn, static_cast<int>(i));

        // covariance of the point plus its neighbors
        Vec3 mean = cloud.points[i];
        for (int j : neighbors) mean += cloud.points[j];
        mean /= static_cast<double>(neighbors.size() + 1);

        Mat3 cov = (cloud.points[i] - mean) * (cloud.points[i] - mean).transpose();
        for (int j : neighbors) {
            const Vec3 d = cloud.points[j] - mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(neighbors.size() + 1);

        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        const Vec3 evals = eig.eigenvalues();  // ascending
        if (evals(2) <= 0.0 || evals(1) <= 1e-12 * evals(2))
            throw DegenerateNeighborhood("estimate_normals: degenerate neighborhood at point " +
                                         std::to_string(i));

        Vec3 normal = eig.eigenvectors().col(0).normalized();
        const double outward = normal.dot(cloud.points[i] - centroid);
        const double tie_tol = 1e-12 * std::max(1.0, (cloud.points[i] - centroid).norm());
        if (outward < -tie_tol)
            normal = -normal;
        else if (std::abs(outward) <= tie_tol)
            normal = canonical_sign(normal);
        out.normals[i] = normal;
    });

    return out;
}

}  // namespace escape
