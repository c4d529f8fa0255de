#include "escape/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "escape/errors.hpp"
#include "escape/knn.hpp"
#include "escape/parallel.hpp"
#include "escape/rng.hpp"

namespace escape {

namespace {

double directed_mean(const PointCloud& from, const KnnIndex& to_index, bool squared,
                     int workers) {
    std::vector<double> dist(from.size());
    parallel_for(from.size(), workers, [&](std::size_t i) {
        const double d2 = to_index.nearest_distance2(from.points[i]);
        dist[i] = squared ? d2 : std::sqrt(d2);
    });
    double sum = 0.0;
    for (double d : dist) sum += d;
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_l1(const PointCloud& a, const PointCloud& b, int workers) {
    if (a.empty() || b.empty()) throw EmptyCloud("chamfer_l1: empty cloud");
    const KnnIndex ia(a), ib(b);
    return 1000.0 * (directed_mean(a, ib, false, workers) +
                     directed_mean(b, ia, false, workers));
}

double chamfer_l2(const PointCloud& a, const PointCloud& b, int workers) {
    if (a.empty() || b.empty()) throw EmptyCloud("chamfer_l2: empty cloud");
    const KnnIndex ia(a), ib(b);
    return 1000.0 * (directed_mean(a, ib, true, workers) +
                     directed_mean(b, ia, true, workers));
}

double fidelity(const PointCloud& input, const PointCloud& output, int workers) {
    if (input.empty() || output.empty()) throw EmptyCloud("fidelity: empty cloud");
    const KnnIndex io(output);
    return 1000.0 * directed_mean(input, io, true, workers);
}

PcaCanonical pca_canonicalize(const PointCloud& cloud) {
    const std::size_t n = cloud.size();
    if (n < 3) throw DegenerateConfiguration("pca_canonicalize: need at least 3 points");

    const Vec3 centroid = cloud.centroid();
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : cloud.points) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals_asc = eig.eigenvalues();  // ascending
    if (evals_asc(2) <= 0.0 || evals_asc(1) <= 1e-12 * evals_asc(2))
        throw DegenerateConfiguration("pca_canonicalize: collinear or coincident points");

    // axes by descending eigenvalue
    Mat3 axes;
    for (int j = 0; j < 3; ++j) axes.col(j) = eig.eigenvectors().col(2 - j);

    // sign by nonnegative coordinate skewness; tie falls back to a positive
    // first nonzero component
    for (int j = 0; j < 3; ++j) {
        double skew = 0.0;
        for (const Vec3& p : cloud.points) {
            const double t = (p - centroid).dot(axes.col(j));
            skew += t * t * t;
        }
        if (skew < 0.0) {
            axes.col(j) = -axes.col(j);
        } else if (skew == 0.0) {
            for (int c = 0; c < 3; ++c) {
                if (axes(c, j) != 0.0) {
                    if (axes(c, j) < 0.0) axes.col(j) = -axes.col(j);
                    break;
                }
            }
        }
    }
    if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);

    PcaCanonical out;
    out.transform.rotation = axes.transpose();
    out.transform.translation = -(axes.transpose() * centroid);
    out.eigenvalues = Vec3(evals_asc(2), evals_asc(1), evals_asc(0));

    // advisory flag: near-equal eigenvalues (sphere-like spectra) make the
    // axis assignment an artifact of sampling noise
    const double top = std::max(out.eigenvalues(0), 1e-300);
    out.stable = (out.eigenvalues(0) - out.eigenvalues(1)) > 0.05 * top &&
                 (out.eigenvalues(1) - out.eigenvalues(2)) > 0.05 * top;

    out.cloud = apply_rigid(cloud, out.transform);
    return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("add_gaussian_noise: sigma must be nonnegative");
    Rng rng(seed);
    PointCloud out = cloud;
    // the unit draw is independent of sigma so one seed scales coherently
    for (Vec3& p : out.points) {
        p.x() += sigma * rng.gaussian();
        p.y() += sigma * rng.gaussian();
        p.z() += sigma * rng.gaussian();
    }
    return out;
}

PointCloud remove_points(const PointCloud& cloud, double ratio, std::uint64_t seed) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw ConfigError("remove_points: ratio must be in [0, 1)");
    const std::size_t n = cloud.size();
    const std::size_t n_remove = static_cast<std::size_t>(ratio * static_cast<double>(n));
    if (n_remove >= n) throw TooFewRemaining("remove_points: nothing would remain");

    // partial Fisher-Yates over the index array; the first n_remove slots are removed
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < n_remove; ++i) {
        const std::size_t j = i + rng.integer(n - i);
        std::swap(indices[i], indices[j]);
    }
    std::vector<char> removed(n, 0);
    for (std::size_t i = 0; i < n_remove; ++i) removed[indices[i]] = 1;

    PointCloud out;
    out.points.reserve(n - n_remove);
    if (cloud.has_normals()) out.normals.reserve(n - n_remove);
    for (std::size_t i = 0; i < n; ++i) {
        if (removed[i]) continue;
        out.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

std::vector<EvalReport> equivariance_report(const PointCloud& cloud,
                                            const CompletionConfig& config,
                                            int trials, std::uint64_t seed) {
    std::vector<EvalReport> reports;
    if (trials <= 0) return reports;

    std::ostringstream cfg;
    cfg << "k=" << config.k << " n_in=" << config.n_in << " m_out=" << config.m_out
        << " strategy=" << to_string(config.strategy)
        << " predictor=" << config.predictor.to_string();
    const std::string config_echo = cfg.str();

    const CompletionResult base = complete(cloud, config, seed);

    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = seed + 1000003ull * static_cast<std::uint64_t>(t + 1);
        RigidTransform transform = random_rotation(trial_seed);
        Rng rng(trial_seed ^ 0x9e3779b97f4a7c15ull);
        transform.translation =
            Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

        const PointCloud rotated = apply_rigid(cloud, transform);
        const CompletionResult moved = complete(rotated, config, seed);

        const bool margin_ok = base.report.anchors.selection_margin > 1e-9 &&
                               moved.report.anchors.selection_margin > 1e-9;

        double max_dev = 0.0;
        for (std::size_t i = 0; i < base.cloud.size(); ++i) {
            const Vec3 expected = transform.apply(base.cloud.points[i]);
            max_dev = std::max(max_dev, (moved.cloud.points[i] - expected).norm());
        }

        double anchor_agreement = 1.0;
        if (base.report.anchors.source_indices != moved.report.anchors.source_indices)
            anchor_agreement = 0.0;

        // encodings of matched inputs must agree entrywise
        const PointCloud resampled_base = resample(cloud, config.n_in, seed);
        const DistanceMatrix enc_base = encode(resampled_base, base.report.anchors);
        const PointCloud resampled_moved = resample(rotated, config.n_in, seed);
        const DistanceMatrix enc_moved = encode(resampled_moved, moved.report.anchors);
        double enc_dev = 0.0;
        if (enc_base.values.size() == enc_moved.values.size()) {
            for (std::size_t i = 0; i < enc_base.values.size(); ++i)
                enc_dev = std::max(enc_dev,
                                   std::abs(enc_base.values[i] - enc_moved.values[i]));
        }

        EvalReport dev{"equivariance_max_deviation", max_dev, "max pointwise L2",
                       config_echo, trial_seed, t, margin_ok};
        EvalReport agree{"anchor_index_agreement", anchor_agreement, "1.0 = identical",
                         config_echo, trial_seed, t, margin_ok};
        EvalReport enc{"encode_max_deviation", enc_dev, "max entrywise abs",
                       config_echo, trial_seed, t, margin_ok};
        reports.push_back(dev);
        reports.push_back(agree);
        reports.push_back(enc);
    }
    return reports;
}

void write_reports_kv(std::ostream& out, const std::vector<EvalReport>& reports) {
    for (const EvalReport& r : reports) {
        out << "trial=" << r.trial << " metric=" << r.metric << " value=" << r.value
            << " convention=\"" << r.convention << "\" seed=" << r.seed
            << " margin_ok=" << (r.margin_ok ? 1 : 0) << "\n";
    }
}

void write_reports_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
    out << "trial,metric,value,convention,seed,margin_ok,config\n";
    for (const EvalReport& r : reports) {
        out << r.trial << "," << r.metric << "," << r.value << ",\"" << r.convention
            << "\"," << r.seed << "," << (r.margin_ok ? 1 : 0) << ",\"" << r.config
            << "\"\n";
    }
}

}  // namespace escape
