#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "escape/anchors.hpp"
#include "escape/codec.hpp"
#include "escape/point_cloud.hpp"

namespace escape {

enum class PredictorKind { identity, external };

/// Distance predictor plugged into the pipeline. `identity` cycles the input
/// rows to the requested output size; `external` runs an executable speaking
/// the ESCD protocol: argv `<input.escd> <output.escd> <m_out>`, exit 0 on
/// success, stderr captured into the report.
struct PredictorSpec {
    PredictorKind kind = PredictorKind::identity;
    std::filesystem::path external;

    /// Parses "identity" or "external:<path>". Throws ConfigError.
    static PredictorSpec parse(const std::string& text);
    std::string to_string() const;
};

struct CompletionConfig {
    int k = 8;
    int n_in = 2048;
    int m_out = 16384;
    AnchorStrategy strategy = AnchorStrategy::fps;
    AnchorParams anchor_params;
    int k_nn = 16;
    SolverOptions solver;
    PredictorSpec predictor;
    bool normalize = false;
    int workers = 0;
    double predictor_timeout_seconds = 300.0;

    /// k ≥ 4, n_in ≥ k, m_out ≥ 1, k_nn ≥ 3. Throws ConfigError.
    void validate() const;
};

/// Deterministic FPS when downsampling; round-robin index duplication when
/// upsampling (pure duplication, no jitter). Identity when sizes match.
PointCloud resample(const PointCloud& cloud, int n_target, std::uint64_t seed);

/// Runs the predictor on a partial-cloud distance matrix. The output has
/// m_out rows and the input's columns and anchors. External predictor output
/// is validated: matching shape, bit-identical anchors, finite nonnegative
/// values (BadExternalOutput otherwise); abnormal exit raises ExternalFailed.
DistanceMatrix predict_distances(const DistanceMatrix& partial, int m_out,
                                 const PredictorSpec& spec, std::uint64_t seed,
                                 double timeout_seconds = 300.0);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct CompletionReport {
    AnchorSet anchors;
    std::vector<double> residuals;
    std::vector<RowFailure> failures;
    std::vector<StageTiming> timings;
    double max_residual = 0.0;
    std::string predictor_stderr;
};

struct CompletionResult {
    PointCloud cloud;
    CompletionReport report;
};

/// resample → select_anchors → encode → predict_distances → decode.
/// Output has m_out points in row order; errors from stages carry stage
/// labels. With normalize set, the input is centered and scaled so the
/// farthest point sits 0.5 from the centroid, and the output is mapped back.
CompletionResult complete(const PointCloud& partial, const CompletionConfig& config,
                          std::uint64_t seed);

}  // namespace escape
