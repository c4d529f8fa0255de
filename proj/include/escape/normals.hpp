#pragma once

#include "escape/point_cloud.hpp"

namespace escape {

/// Per-point unit normals from PCA of the neighborhood coordinate covariance
/// (the point plus its k_nn nearest neighbors). The normal is the eigenvector
/// of the smallest eigenvalue, signed to point away from the cloud centroid;
/// when that dot product is zero the first nonzero component is made positive.
///
/// Throws DegenerateNeighborhood when a neighborhood is collinear or
/// coincident, KTooLarge when the cloud has fewer than k_nn+1 points.
PointCloud estimate_normals(const PointCloud& cloud, int k_nn, int workers = 0);

}  // namespace escape
