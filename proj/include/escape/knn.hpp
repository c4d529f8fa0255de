#pragma once

#include <optional>
#include <vector>

#include "escape/geometry.hpp"
#include "escape/point_cloud.hpp"

namespace escape {

/// kd-tree over a fixed point set.
///
/// Queries return exactly the neighbor sets a brute-force distance sort would,
/// with ties broken by the smaller point index. The index is immutable after
/// construction and safe for concurrent queries.
class KnnIndex {
public:
    explicit KnnIndex(const PointCloud& cloud);
    explicit KnnIndex(std::vector<Vec3> points);

    std::size_t size() const { return pts_.size(); }

    /// Indices of the k nearest points, ascending distance, ties by ascending
    /// index. `exclude_index` removes that point from consideration (used when
    /// the query is itself a member of the indexed cloud).
    /// Throws KTooLarge when k exceeds the number of candidates.
    std::vector<int> knn(const Vec3& query, int k,
                         std::optional<int> exclude_index = std::nullopt) const;

    /// Index of the single nearest point (ties by ascending index).
    int nearest(const Vec3& query) const;

    /// Squared distance to the nearest point.
    double nearest_distance2(const Vec3& query) const;

private:
    struct Node {
        int axis = -1;        // -1 marks a leaf
        double split = 0.0;
        int begin = 0, end = 0;  // range into order_ for leaves
        int left = -1, right = -1;
    };

    int build(int begin, int end);

    std::vector<Vec3> pts_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace escape
