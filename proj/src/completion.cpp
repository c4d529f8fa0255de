#include "escape/completion.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include "escape/errors.hpp"
#include "escape/escd.hpp"
#include "escape/subprocess.hpp"

namespace escape {

namespace fs = std::filesystem;

PredictorSpec PredictorSpec::parse(const std::string& text) {
    PredictorSpec spec;
    if (text == "identity") {
        spec.kind = PredictorKind::identity;
        return spec;
    }
    if (text.rfind("external:", 0) == 0) {
        spec.kind = PredictorKind::external;
        spec.external = text.substr(9);
        if (spec.external.empty())
            throw ConfigError("external predictor needs a path: external:<path>");
        return spec;
    }
    throw ConfigError("unknown predictor '" + text + "' (identity or external:<path>)");
}

std::string PredictorSpec::to_string() const {
    if (kind == PredictorKind::identity) return "identity";
    return "external:" + external.string();
}

void CompletionConfig::validate() const {
    if (k < 4) throw ConfigError("config: k must be at least 4");
    if (n_in < k) throw ConfigError("config: n_in must be at least k");
    if (m_out < 1) throw ConfigError("config: m_out must be positive");
    if (k_nn < 3) throw ConfigError("config: k_nn must be at least 3");
    if (solver.max_iters < 1) throw ConfigError("config: max_iters must be positive");
    if (solver.residual_tol <= 0.0) throw ConfigError("config: residual_tol must be positive");
    if (predictor.kind == PredictorKind::external && predictor.external.empty())
        throw ConfigError("config: external predictor path missing");
}

PointCloud resample(const PointCloud& cloud, int n_target, std::uint64_t seed) {
    (void)seed;  // upsampling is pure duplication; the seed is kept for interface stability
    if (cloud.empty()) throw EmptyCloud("resample: empty cloud");
    const int n = static_cast<int>(cloud.size());
    if (n == n_target) return cloud;

    PointCloud out;
    if (n > n_target) {
        const auto indices = deterministic_fps(cloud, n_target);
        out.points.reserve(n_target);
        if (cloud.has_normals()) out.normals.reserve(n_target);
        for (int idx : indices) {
            out.points.push_back(cloud.points[idx]);
            if (cloud.has_normals()) out.normals.push_back(cloud.normals[idx]);
        }
    } else {
        out = cloud;
        out.points.reserve(n_target);
        if (cloud.has_normals()) out.normals.reserve(n_target);
        int next = 0;
        while (static_cast<int>(out.points.size()) < n_target) {
            out.points.push_back(cloud.points[next]);
            if (cloud.has_normals()) out.normals.push_back(cloud.normals[next]);
            next = (next + 1) % n;
        }
    }
    return out;
}

namespace {

DistanceMatrix cycle_rows(const DistanceMatrix& in, int m_out) {
    DistanceMatrix out;
    out.rows = m_out;
    out.cols = in.cols;
    out.anchors = in.anchors;
    out.values.resize(static_cast<std::size_t>(m_out) * in.cols);
    for (int i = 0; i < m_out; ++i) {
        const auto src = in.row(i % in.rows);
        std::copy(src.begin(), src.end(),
                  out.values.begin() + static_cast<std::size_t>(i) * in.cols);
    }
    return out;
}

fs::path temp_dir() {
    const fs::path base = fs::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    const fs::path dir = base / ("escape-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

DistanceMatrix run_external(const DistanceMatrix& partial, int m_out,
                            const PredictorSpec& spec, double timeout_seconds,
                            std::string* captured_stderr) {
    const fs::path dir = temp_dir();
    const fs::path in_path = dir / "in.escd";
    const fs::path out_path = dir / "out.escd";
    write_escd(partial, in_path);

    ProcessResult proc;
    try {
        proc = run_process({spec.external.string(), in_path.string(), out_path.string(),
                            std::to_string(m_out)},
                           timeout_seconds);
    } catch (const IoError& e) {
        fs::remove_all(dir);
        throw ExternalFailed(-1, e.what());
    }
    if (captured_stderr) *captured_stderr = proc.stderr_text;

    if (proc.timed_out) {
        fs::remove_all(dir);
        throw ExternalFailed(proc.exit_code, "timed out after " +
                                                 std::to_string(timeout_seconds) + " s");
    }
    if (proc.exit_code != 0) {
        fs::remove_all(dir);
        throw ExternalFailed(proc.exit_code, proc.stderr_text);
    }

    DistanceMatrix out;
    try {
        out = read_escd(out_path);
    } catch (const Error& e) {
        fs::remove_all(dir);
        throw BadExternalOutput(std::string("predictor output unreadable: ") + e.what());
    }
    fs::remove_all(dir);

    if (out.rows != m_out)
        throw BadExternalOutput("predictor returned " + std::to_string(out.rows) +
                                " rows, expected " + std::to_string(m_out));
    if (out.cols != partial.cols)
        throw BadExternalOutput("predictor changed the anchor count");
    for (int j = 0; j < partial.cols; ++j) {
        if (!(out.anchors.anchors[j].array() == partial.anchors.anchors[j].array()).all())
            throw BadExternalOutput("predictor changed anchor coordinates");
    }
    // carry over the selection metadata the file does not store
    out.anchors = partial.anchors;
    return out;
}

}  // namespace

DistanceMatrix predict_distances(const DistanceMatrix& partial, int m_out,
                                 const PredictorSpec& spec, std::uint64_t seed,
                                 double timeout_seconds) {
    (void)seed;  // reserved for stochastic predictors
    partial.validate();
    if (m_out < 1) throw ConfigError("predict_distances: m_out must be positive");
    if (partial.rows < 1) throw EmptyCloud("predict_distances: empty input matrix");

    if (spec.kind == PredictorKind::identity) return cycle_rows(partial, m_out);
    return run_external(partial, m_out, spec, timeout_seconds, nullptr);
}

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) -> decltype(fn()) {
        const auto start = std::chrono::steady_clock::now();
        try {
            auto result = fn();
            record(stage, start);
            return result;
        } catch (Error& e) {
            record(stage, start);
            e.set_stage(stage);
            throw;
        }
    }

private:
    void record(const std::string& stage,
                std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        sink_.push_back({stage, dt.count()});
    }

    std::vector<StageTiming>& sink_;
};

}  // namespace

CompletionResult complete(const PointCloud& partial, const CompletionConfig& config,
                          std::uint64_t seed) {
    config.validate();
    if (partial.empty()) throw EmptyCloud("complete: empty input");

    CompletionResult result;
    StageClock clock(result.report.timings);

    // optional normalization: center at the centroid, scale the farthest
    // point to radius 0.5, undo on the way out
    PointCloud working = partial;
    Vec3 center = Vec3::Zero();
    double scale = 1.0;
    if (config.normalize) {
        center = partial.centroid();
        double r_max = 0.0;
        for (const Vec3& p : partial.points)
            r_max = std::max(r_max, (p - center).norm());
        if (r_max <= 0.0)
            throw DegenerateConfiguration("complete: cannot normalize a zero-extent cloud");
        scale = 0.5 / r_max;
        working.points.clear();
        working.points.reserve(partial.size());
        for (const Vec3& p : partial.points) working.points.push_back((p - center) * scale);
        working.normals = partial.normals;
    }

    const PointCloud resampled = clock.run("resample", [&] {
        return resample(working, config.n_in, seed);
    });
    if (static_cast<int>(resampled.size()) < config.k)
        throw ConfigError("complete: fewer points than anchors after resampling");

    const AnchorSet anchors = clock.run("select_anchors", [&] {
        return select_anchors(resampled, config.k, config.strategy, config.anchor_params,
                              config.k_nn, config.workers);
    });
    result.report.anchors = anchors;

    const DistanceMatrix encoded = clock.run("encode", [&] {
        return encode(resampled, anchors);
    });

    std::string predictor_stderr;
    const DistanceMatrix predicted = clock.run("predict", [&]() -> DistanceMatrix {
        if (config.predictor.kind == PredictorKind::identity)
            return predict_distances(encoded, config.m_out, config.predictor, seed,
                                     config.predictor_timeout_seconds);
        DistanceMatrix out = run_external(encoded, config.m_out, config.predictor,
                                          config.predictor_timeout_seconds,
                                          &predictor_stderr);
        return out;
    });
    result.report.predictor_stderr = predictor_stderr;

    DecodeResult decoded = clock.run("decode", [&] {
        return decode(predicted, config.solver, config.workers);
    });

    result.cloud = std::move(decoded.cloud);
    result.report.residuals = std::move(decoded.residuals);
    result.report.failures = std::move(decoded.failures);
    result.report.max_residual = 0.0;
    for (double r : result.report.residuals)
        result.report.max_residual = std::max(result.report.max_residual, r);

    if (config.normalize) {
        for (Vec3& p : result.cloud.points) p = p / scale + center;
        for (Vec3& a : result.report.anchors.anchors) a = a / scale + center;
    }
    return result;
}

}  // namespace escape
