#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "escape/completion.hpp"
#include "escape/geometry.hpp"
#include "escape/point_cloud.hpp"

namespace escape {

/// Chamfer distance, PCN convention: mean Euclidean nearest-neighbor distance
/// in both directions, reported ×1000. Throws EmptyCloud.
double chamfer_l1(const PointCloud& a, const PointCloud& b, int workers = 0);

/// Same aggregation with squared Euclidean per-pair terms, ×1000.
double chamfer_l2(const PointCloud& a, const PointCloud& b, int workers = 0);

/// Mean squared distance from each input point to its nearest output point,
/// ×1000. One-directional: measures how well the output preserves the input.
double fidelity(const PointCloud& input, const PointCloud& output, int workers = 0);

struct PcaCanonical {
    PointCloud cloud;
    RigidTransform transform;  // the applied transform: out = R·p + t
    Vec3 eigenvalues = Vec3::Zero();  // descending
    /// Advisory: false when eigenvalue gaps fall under 5% of the spectrum,
    /// i.e. sphere-like clouds whose axes are sampling artifacts.
    bool stable = true;
};

/// Centers at the centroid and rotates the principal axes (descending
/// eigenvalue) onto x,y,z. Axis signs are fixed by nonnegative coordinate
/// skewness (ties: positive first component); a reflection is corrected to
/// det +1 by flipping the last axis. Throws DegenerateConfiguration.
PcaCanonical pca_canonicalize(const PointCloud& cloud);

/// Adds independent zero-mean Gaussian noise with std `sigma` per coordinate.
/// A fixed seed yields the same unit perturbation at every sigma.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

/// Removes ⌊ratio·n⌋ uniformly sampled indices without replacement; remaining
/// points keep their relative order. Throws TooFewRemaining.
PointCloud remove_points(const PointCloud& cloud, double ratio, std::uint64_t seed);

struct EvalReport {
    std::string metric;
    double value = 0.0;
    std::string convention;  // e.g. "CD-L1 x1000"
    std::string config;      // config echo
    std::uint64_t seed = 0;
    int trial = 0;
    bool margin_ok = true;  // false: anchor-selection margin violated, excluded from pass/fail
};

/// Per trial: sample a random rigid transform T, run the pipeline on P and on
/// T·P, and report the max pointwise deviation between T·complete(P) and
/// complete(T·P), anchor source-index agreement, and the max entrywise
/// deviation of the two encodings. Trials whose anchor-selection margin is
/// below 1e-9 are flagged margin_ok=false.
std::vector<EvalReport> equivariance_report(const PointCloud& cloud,
                                            const CompletionConfig& config,
                                            int trials, std::uint64_t seed);

/// Line-oriented `key=value` text, one line per report.
void write_reports_kv(std::ostream& out, const std::vector<EvalReport>& reports);

/// CSV with header `trial,metric,value,convention,seed,margin_ok,config`.
void write_reports_csv(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace escape
