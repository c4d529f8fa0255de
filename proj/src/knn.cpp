#include "escape/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "escape/errors.hpp"

namespace escape {

namespace {

constexpr int kLeafSize = 16;

// candidate ordering: nearer distance first, then smaller index
struct Candidate {
    double d2;
    int index;
    bool operator<(const Candidate& o) const {
        if (d2 != o.d2) return d2 < o.d2;
        return index < o.index;
    }
};

}  // namespace

KnnIndex::KnnIndex(const PointCloud& cloud) : KnnIndex(cloud.points) {}

KnnIndex::KnnIndex(std::vector<Vec3> points) : pts_(std::move(points)) {
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    if (!pts_.empty()) {
        nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
        root_ = build(0, static_cast<int>(pts_.size()));
    }
}

int KnnIndex::build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    if (end - begin <= kLeafSize) return id;

    Vec3 lo = pts_[order_[begin]], hi = pts_[order_[begin]];
    for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(pts_[order_[i]]);
        hi = hi.cwiseMax(pts_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi(axis) == lo(axis)) return id;  // all points coincide on every axis

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         if (pts_[a](axis) != pts_[b](axis))
                             return pts_[a](axis) < pts_[b](axis);
                         return a < b;
                     });

    nodes_[id].axis = axis;
    nodes_[id].split = pts_[order_[mid]](axis);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<int> KnnIndex::knn(const Vec3& query, int k,
                               std::optional<int> exclude_index) const {
    const int available =
        static_cast<int>(pts_.size()) - (exclude_index.has_value() ? 1 : 0);
    if (k < 1) throw KTooLarge("knn: k must be positive");
    if (k > available)
        throw KTooLarge("knn: k=" + std::to_string(k) + " exceeds " +
                        std::to_string(available) + " candidates");

    // bounded worst-first heap of the current best k
    std::vector<Candidate> heap;
    heap.reserve(k);
    auto worse = [](const Candidate& a, const Candidate& b) { return a < b; };
    const int excl = exclude_index.value_or(-1);

    auto offer = [&](int idx) {
        if (idx == excl) return;
        const Candidate c{(pts_[idx] - query).squaredNorm(), idx};
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), worse);
        } else if (c < heap.front()) {
            std::pop_heap(heap.begin(), heap.end(), worse);
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end(), worse);
        }
    };

    // recursive descent; a subtree is skipped only when its slab is strictly
    // farther than the current worst candidate (equal distance may still win a tie)
    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) offer(order_[i]);
            return;
        }
        const double delta = query(node.axis) - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().d2)
            self(self, far);
    };
    if (root_ >= 0) visit(visit, root_);

    std::vector<int> out;
    out.reserve(heap.size());
    std::sort(heap.begin(), heap.end());
    for (const Candidate& c : heap) out.push_back(c.index);
    return out;
}

int KnnIndex::nearest(const Vec3& query) const {
    if (pts_.empty()) throw EmptyCloud("nearest: empty index");
    Candidate best{std::numeric_limits<double>::infinity(),
                   std::numeric_limits<int>::max()};

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[i];
                const Candidate c{(pts_[idx] - query).squaredNorm(), idx};
                if (c < best) best = c;
            }
            return;
        }
        const double delta = query(node.axis) - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (delta * delta <= best.d2) self(self, far);
    };
    visit(visit, root_);
    return best.index;
}

double KnnIndex::nearest_distance2(const Vec3& query) const {
    return (pts_[nearest(query)] - query).squaredNorm();
}

}  // namespace escape
