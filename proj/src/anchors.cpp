#include "escape/anchors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "escape/errors.hpp"
#include "escape/knn.hpp"
#include "escape/normals.hpp"
#include "escape/parallel.hpp"

namespace escape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void track_margin(double& margin, double best, double runner_up) {
    if (runner_up > -kInf) margin = std::min(margin, best - runner_up);
}

}  // namespace

std::string to_string(AnchorStrategy strategy) {
    switch (strategy) {
        case AnchorStrategy::fps: return "fps";
        case AnchorStrategy::cluster: return "cluster";
        case AnchorStrategy::ball_query: return "ballquery";
    }
    return "fps";
}

AnchorStrategy anchor_strategy_from_string(const std::string& name) {
    if (name == "fps") return AnchorStrategy::fps;
    if (name == "cluster" || name == "clustering") return AnchorStrategy::cluster;
    if (name == "ballquery" || name == "ball_query") return AnchorStrategy::ball_query;
    throw ConfigError("unknown anchor strategy '" + name + "'");
}

void AnchorSet::validate(const PointCloud& cloud) const {
    if (anchors.empty()) throw Error("anchor set is empty");
    if (source_indices.size() != anchors.size())
        throw Error("anchor set: source index count mismatch");
    std::set<int> seen;
    for (std::size_t j = 0; j < anchors.size(); ++j) {
        const int idx = source_indices[j];
        if (idx < 0 || static_cast<std::size_t>(idx) >= cloud.size())
            throw Error("anchor set: source index out of range");
        if (!seen.insert(idx).second) throw Error("anchor set: duplicate source index");
        if (!(cloud.points[idx].array() == anchors[j].array()).all())
            throw Error("anchor set: coordinates do not match source point");
    }
}

std::vector<int> deterministic_fps(const PointCloud& cloud, int k, double* min_margin) {
    const int n = static_cast<int>(cloud.size());
    if (n < 1) throw EmptyCloud("fps: empty cloud");
    if (k < 1 || k > n)
        throw KTooLarge("fps: k=" + std::to_string(k) + " out of range for n=" +
                        std::to_string(n));

    double margin = kInf;
    const Vec3 centroid = cloud.centroid();

    // seed: farthest from the centroid, ties by ascending index
    int best = 0;
    double best_val = -kInf, second_val = -kInf;
    for (int i = 0; i < n; ++i) {
        const double d = (cloud.points[i] - centroid).norm();
        if (d > best_val) {
            second_val = best_val;
            best_val = d;
            best = i;
        } else if (d > second_val) {
            second_val = d;
        }
    }
    track_margin(margin, best_val, second_val);

    std::vector<int> selected;
    selected.reserve(k);
    selected.push_back(best);

    std::vector<double> min_dist(n);
    std::vector<char> taken(n, 0);
    taken[best] = 1;
    for (int i = 0; i < n; ++i)
        min_dist[i] = (cloud.points[i] - cloud.points[best]).norm();

    while (static_cast<int>(selected.size()) < k) {
        best = -1;
        best_val = -kInf;
        second_val = -kInf;
        for (int i = 0; i < n; ++i) {
            if (taken[i]) continue;
            if (min_dist[i] > best_val) {
                second_val = best_val;
                best_val = min_dist[i];
                best = i;
            } else if (min_dist[i] > second_val) {
                second_val = min_dist[i];
            }
        }
        track_margin(margin, best_val, second_val);
        selected.push_back(best);
        taken[best] = 1;
        for (int i = 0; i < n; ++i) {
            if (taken[i]) continue;
            min_dist[i] = std::min(min_dist[i], (cloud.points[i] - cloud.points[best]).norm());
        }
    }

    if (min_margin) *min_margin = margin;
    return selected;
}

std::vector<Vec3> normal_laplacian(const PointCloud& cloud, int k_nn, int workers) {
    if (!cloud.has_normals()) throw Error("normal_laplacian: cloud has no normals");
    const std::size_t n = cloud.size();
    const KnnIndex index(cloud);
    std::vector<Vec3> out(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto neighbors = index.knn(cloud.points[i], k_nn, static_cast<int>(i));
        Vec3 mean = Vec3::Zero();
        for (int j : neighbors) mean += cloud.normals[j];
        mean /= static_cast<double>(neighbors.size());
        out[i] = cloud.normals[i] - mean;
    });
    return out;
}

CurvatureField curvature(const PointCloud& cloud, int k_nn, int workers) {
    if (!cloud.has_normals()) throw Error("curvature: cloud has no normals");
    if (k_nn < 3) throw KTooLarge("curvature: k_nn must be at least 3");
    const std::size_t n = cloud.size();
    const KnnIndex index(cloud);

    CurvatureField field;
    field.kappa.assign(n, 0.0);
    field.laplacian.assign(n, Vec3::Zero());

    parallel_for(n, workers, [&](std::size_t i) {
        const auto neighbors = index.knn(cloud.points[i], k_nn, static_cast<int>(i));
        Vec3 mean = Vec3::Zero();
        for (int j : neighbors) mean += cloud.normals[j];
        mean /= static_cast<double>(neighbors.size());
        field.laplacian[i] = cloud.normals[i] - mean;

        Mat3 cov = Mat3::Zero();
        for (int j : neighbors) {
            const Vec3 d = cloud.normals[j] - mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(neighbors.size());

        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        field.kappa[i] = std::max(0.0, eig.eigenvalues()(0));
    });
    return field;
}

AnchorSet select_anchors(const PointCloud& cloud, int k, AnchorStrategy strategy,
                         const AnchorParams& params, int k_nn, int workers) {
    const int n = static_cast<int>(cloud.size());
    if (k > n) throw KTooLarge("select_anchors: k exceeds cloud size");

    AnchorSet out;
    out.strategy = strategy;
    out.params = params;

    double fps_margin = kInf;
    const std::vector<int> seeds = deterministic_fps(cloud, k, &fps_margin);
    out.selection_margin = fps_margin;

    if (strategy == AnchorStrategy::fps) {
        out.source_indices = seeds;
    } else {
        // curvature refinement needs normals; estimate them when absent
        PointCloud with_normals = cloud;
        if (!with_normals.has_normals())
            with_normals = estimate_normals(cloud, std::min(k_nn, n - 1), workers);
        const CurvatureField field = curvature(with_normals, std::min(k_nn, n - 1), workers);

        // nearest-seed assignment, ties to the earlier seed
        std::vector<int> assignment(n, 0);
        for (int i = 0; i < n; ++i) {
            double best = kInf, second = kInf;
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                const double d = (cloud.points[i] - cloud.points[seeds[c]]).norm();
                if (d < best) {
                    second = best;
                    best = d;
                    best_c = c;
                } else if (d < second) {
                    second = d;
                }
            }
            assignment[i] = best_c;
            if (second < kInf)
                out.selection_margin = std::min(out.selection_margin, second - best);
        }

        std::vector<std::vector<int>> clusters(k);
        for (int i = 0; i < n; ++i) clusters[assignment[i]].push_back(i);

        std::vector<char> used(n, 0);
        out.source_indices.reserve(k);
        for (int c = 0; c < k; ++c) {
            const int seed = seeds[c];
            int elected = seed;
            double best_kappa = -kInf, second_kappa = -kInf;
            int best_idx = -1;
            for (int i : clusters[c]) {
                if (strategy == AnchorStrategy::ball_query &&
                    (cloud.points[i] - cloud.points[seed]).norm() > params.radius)
                    continue;
                if (field.kappa[i] > best_kappa) {
                    second_kappa = best_kappa;
                    best_kappa = field.kappa[i];
                    best_idx = i;
                } else if (field.kappa[i] > second_kappa) {
                    second_kappa = field.kappa[i];
                }
            }
            if (best_idx >= 0) {
                track_margin(out.selection_margin, best_kappa, second_kappa);
                if (strategy == AnchorStrategy::ball_query)
                    elected = best_idx;
                else if (best_kappa > params.threshold)
                    elected = best_idx;
            }

            // duplicate elections fall back to the seed, then to the lowest
            // unused cluster member, then to the lowest unused point
            if (used[elected]) elected = seed;
            if (used[elected]) {
                elected = -1;
                for (int i : clusters[c]) {
                    if (!used[i]) {
                        elected = i;
                        break;
                    }
                }
                if (elected < 0) {
                    for (int i = 0; i < n; ++i) {
                        if (!used[i]) {
                            elected = i;
                            break;
                        }
                    }
                }
            }
            used[elected] = 1;
            out.source_indices.push_back(elected);
        }
    }

    out.anchors.reserve(k);
    for (int idx : out.source_indices) out.anchors.push_back(cloud.points[idx]);
    return out;
}

void save_anchors(const AnchorSet& anchors, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# strategy=%s k=%d radius=%.17g threshold=%.17g\n",
                  to_string(anchors.strategy).c_str(), anchors.k(), anchors.params.radius,
                  anchors.params.threshold);
    out << buf;
    for (const Vec3& a : anchors.anchors) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", a.x(), a.y(), a.z());
        out << buf;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

AnchorSet load_anchors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    AnchorSet out;
    int header_k = -1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream iss(line.substr(1));
            std::string token;
            while (iss >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq);
                const std::string value = token.substr(eq + 1);
                if (key == "strategy") out.strategy = anchor_strategy_from_string(value);
                else if (key == "k") header_k = std::stoi(value);
                else if (key == "radius") out.params.radius = std::stod(value);
                else if (key == "threshold") out.params.threshold = std::stod(value);
            }
            continue;
        }
        std::istringstream iss(line);
        double x, y, z;
        if (!(iss >> x >> y >> z)) throw ParseError(line_no, "expected anchor coordinates");
        out.anchors.emplace_back(x, y, z);
    }
    if (out.anchors.empty()) throw EmptyCloud("no anchors in " + path.string());
    if (header_k >= 0 && header_k != out.k())
        throw ParseError(line_no, "header k does not match anchor count");
    return out;
}

}  // namespace escape
