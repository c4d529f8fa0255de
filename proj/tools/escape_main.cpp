// escape - batch front end for anchor-distance encoding, decoding, completion,
// perturbation, and metrics. All subcommands are seed-reproducible and print
// machine-parseable key=value lines on stdout.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "escape/anchors.hpp"
#include "escape/codec.hpp"
#include "escape/completion.hpp"
#include "escape/errors.hpp"
#include "escape/escd.hpp"
#include "escape/io.hpp"
#include "escape/metrics.hpp"
#include "escape/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 2 config, 3 i/o, 4 algorithm, 5 decode divergence, 6 external predictor
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitAlgorithm = 4;
constexpr int kExitDiverged = 5;
constexpr int kExitExternal = 6;

struct CommonOptions {
    int workers = 0;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--workers", opts.workers, "Decode worker pool size (0 = auto)")
        ->envname("ESCAPE_WORKERS");
    cmd->add_option("--seed", opts.seed, "Random seed")->default_val(0);
    // documented here; the value is consumed before CLI11 parsing
    cmd->add_option("--config", "Key=value config file; explicit flags win");
}

// Applies a simple key=value config file: each key maps to a long option of
// the chosen subcommand, defaults < config < explicit flags. Unknown keys are
// ignored so one file can serve several subcommands.
std::vector<std::string> apply_config_file(CLI::App& app, int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    std::string config_path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw escape::ConfigError("--config requires a file path");
            config_path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + i);
        } else {
            ++i;
        }
    }
    if (config_path.empty()) return args;

    std::string subcommand;
    for (const std::string& a : args) {
        if (!a.empty() && a[0] != '-') {
            subcommand = a;
            break;
        }
    }
    CLI::App* sub = nullptr;
    if (!subcommand.empty()) {
        try {
            sub = app.get_subcommand(subcommand);
        } catch (const CLI::OptionNotFound&) {
            return args;  // CLI11 reports the unknown subcommand itself
        }
    }
    if (sub == nullptr) return args;

    std::ifstream in(config_path);
    if (!in) throw escape::ConfigError("cannot open config file " + config_path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw escape::ConfigError("config line is not key=value: " + line);
        const std::string key = line.substr(first, eq - first);
        const std::string value = line.substr(eq + 1);
        const std::string flag = "--" + key;

        if (sub->get_option_no_throw(flag) == nullptr) continue;
        bool given_explicitly = false;
        for (const std::string& a : args) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) {
                given_explicitly = true;
                break;
            }
        }
        if (!given_explicitly) args.push_back(flag + "=" + value);
    }
    return args;
}

int run_anchors(const std::string& input, const std::string& out, int k,
                const std::string& strategy, double radius, double threshold, int knn,
                const CommonOptions& common) {
    if (k < 1) throw escape::ConfigError("--k must be positive");
    const escape::PointCloud cloud = escape::load_cloud(input);
    escape::AnchorParams params;
    params.radius = radius;
    params.threshold = threshold;
    const escape::AnchorSet anchors = escape::select_anchors(
        cloud, k, escape::anchor_strategy_from_string(strategy), params, knn,
        common.workers);
    escape::save_anchors(anchors, out);
    std::printf("k=%d strategy=%s margin=%.6g out=%s\n", anchors.k(),
                escape::to_string(anchors.strategy).c_str(), anchors.selection_margin,
                out.c_str());
    return 0;
}

int run_encode(const std::string& input, const std::string& anchors_path,
               const std::string& out) {
    const escape::PointCloud cloud = escape::load_cloud(input);
    const escape::AnchorSet anchors = escape::load_anchors(anchors_path);
    const escape::DistanceMatrix matrix = escape::encode(cloud, anchors);
    escape::write_escd_auto(matrix, out);
    std::printf("n=%d k=%d out=%s\n", matrix.rows, matrix.cols, out.c_str());
    return 0;
}

int run_decode(const std::string& input, const std::string& out, int max_iters, double tol,
               const CommonOptions& common) {
    const escape::DistanceMatrix matrix = escape::read_escd_auto(input);
    escape::SolverOptions opts;
    opts.max_iters = max_iters;
    opts.residual_tol = tol;
    const escape::DecodeResult result = escape::decode(matrix, opts, common.workers);
    escape::save_cloud(result.cloud, out);

    double max_residual = 0.0;
    for (double r : result.residuals) max_residual = std::max(max_residual, r);
    std::printf("n=%d max_residual=%.17g diverged_rows=%zu out=%s\n", matrix.rows,
                max_residual, result.failures.size(), out.c_str());
    return result.failures.empty() ? 0 : kExitDiverged;
}

int run_complete(const std::string& input, const std::string& out,
                 const std::string& report_path, const escape::CompletionConfig& config,
                 const CommonOptions& common) {
    const escape::PointCloud cloud = escape::load_cloud(input);
    const escape::CompletionResult result = escape::complete(cloud, config, common.seed);
    escape::save_cloud(result.cloud, out);

    if (!report_path.empty()) {
        std::ofstream report(report_path);
        if (!report) throw escape::IoError("cannot write " + report_path);
        json anchors_line;
        anchors_line["record"] = "anchors";
        anchors_line["strategy"] = escape::to_string(result.report.anchors.strategy);
        anchors_line["k"] = result.report.anchors.k();
        anchors_line["selection_margin"] = result.report.anchors.selection_margin;
        json coords = json::array();
        for (const escape::Vec3& a : result.report.anchors.anchors)
            coords.push_back({a.x(), a.y(), a.z()});
        anchors_line["coordinates"] = coords;
        report << anchors_line.dump() << "\n";

        for (const escape::StageTiming& t : result.report.timings) {
            json line;
            line["record"] = "timing";
            line["stage"] = t.stage;
            line["seconds"] = t.seconds;
            report << line.dump() << "\n";
        }

        json residuals;
        residuals["record"] = "residuals";
        residuals["max"] = result.report.max_residual;
        residuals["rows"] = result.report.residuals.size();
        residuals["diverged"] = result.report.failures.size();
        report << residuals.dump() << "\n";
        for (const escape::RowFailure& f : result.report.failures) {
            json line;
            line["record"] = "row_failure";
            line["row"] = f.row;
            line["message"] = f.message;
            report << line.dump() << "\n";
        }
    }

    std::printf("n_out=%zu max_residual=%.17g diverged_rows=%zu out=%s\n",
                result.cloud.size(), result.report.max_residual,
                result.report.failures.size(), out.c_str());
    return result.report.failures.empty() ? 0 : kExitDiverged;
}

int run_eval(const std::string& pred, const std::string& gt, const std::string& metric,
             const CommonOptions& common) {
    double value = 0.0;
    if (metric == "dmcd") {
        const escape::DistanceMatrix a = escape::read_escd_auto(pred);
        const escape::DistanceMatrix b = escape::read_escd_auto(gt);
        value = escape::dmcd(a, b, common.workers);
    } else {
        const escape::PointCloud p = escape::load_cloud(pred);
        const escape::PointCloud g = escape::load_cloud(gt);
        if (metric == "cdl1")
            value = escape::chamfer_l1(p, g, common.workers);
        else if (metric == "cdl2")
            value = escape::chamfer_l2(p, g, common.workers);
        else if (metric == "fidelity")
            value = escape::fidelity(p, g, common.workers);
        else
            throw escape::ConfigError("unknown metric '" + metric + "'");
    }
    std::printf("metric=%s value=%.17g\n", metric.c_str(), value);
    return 0;
}

int run_perturb(const std::string& input, const std::string& out,
                std::optional<double> noise_sigma, std::optional<double> remove_ratio,
                const std::string& rotate, const CommonOptions& common) {
    const int chosen = int(noise_sigma.has_value()) + int(remove_ratio.has_value()) +
                       int(!rotate.empty());
    if (chosen != 1)
        throw escape::ConfigError(
            "perturb needs exactly one of --noise-sigma, --remove-ratio, --rotate");

    const escape::PointCloud cloud = escape::load_cloud(input);
    escape::PointCloud result;
    if (noise_sigma) {
        result = escape::add_gaussian_noise(cloud, *noise_sigma, common.seed);
        std::printf("perturb=noise sigma=%.17g seed=%llu\n", *noise_sigma,
                    static_cast<unsigned long long>(common.seed));
    } else if (remove_ratio) {
        result = escape::remove_points(cloud, *remove_ratio, common.seed);
        std::printf("perturb=remove ratio=%.17g kept=%zu seed=%llu\n", *remove_ratio,
                    result.size(), static_cast<unsigned long long>(common.seed));
    } else {
        escape::RigidTransform transform;
        if (rotate == "random") {
            transform = escape::random_rotation(common.seed);
        } else {
            double rx = 0, ry = 0, rz = 0;
            if (std::sscanf(rotate.c_str(), "%lf,%lf,%lf", &rx, &ry, &rz) != 3)
                throw escape::ConfigError("--rotate expects 'random' or rx,ry,rz degrees");
            transform = escape::euler_rotation_deg(rx, ry, rz);
        }
        result = escape::apply_rigid(cloud, transform);
        std::printf("perturb=rotate spec=%s seed=%llu\n", rotate.c_str(),
                    static_cast<unsigned long long>(common.seed));
    }
    escape::save_cloud(result, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anchor-distance point cloud encoding, completion, and evaluation"};
    app.require_subcommand(1);

    CommonOptions common;

    // anchors
    auto* anchors_cmd = app.add_subcommand("anchors", "Select anchor points");
    std::string an_input, an_out, an_strategy = "fps";
    int an_k = 8, an_knn = 16;
    double an_radius = 0.075, an_threshold = 0.0;
    anchors_cmd->add_option("--input", an_input)->required();
    anchors_cmd->add_option("--out", an_out)->required();
    anchors_cmd->add_option("--k", an_k);
    anchors_cmd->add_option("--strategy", an_strategy)
        ->check(CLI::IsMember({"fps", "cluster", "ballquery"}));
    anchors_cmd->add_option("--radius", an_radius);
    anchors_cmd->add_option("--threshold", an_threshold);
    anchors_cmd->add_option("--knn", an_knn);
    add_common(anchors_cmd, common);

    // encode
    auto* encode_cmd = app.add_subcommand("encode", "Encode a cloud against anchors");
    std::string en_input, en_anchors, en_out;
    encode_cmd->add_option("--input", en_input)->required();
    encode_cmd->add_option("--anchors", en_anchors)->required();
    encode_cmd->add_option("--out", en_out)->required();
    add_common(encode_cmd, common);

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "Decode an ESCD file to a cloud");
    std::string de_input, de_out;
    int de_max_iters = 100;
    double de_tol = 1e-10;
    decode_cmd->add_option("--input", de_input)->required();
    decode_cmd->add_option("--out", de_out)->required();
    decode_cmd->add_option("--max-iters", de_max_iters);
    decode_cmd->add_option("--tol", de_tol);
    add_common(decode_cmd, common);

    // complete
    auto* complete_cmd = app.add_subcommand("complete", "Run the completion pipeline");
    std::string co_input, co_out, co_report, co_predictor = "identity",
                co_strategy = "fps";
    escape::CompletionConfig config;
    complete_cmd->add_option("--input", co_input)->required();
    complete_cmd->add_option("--out", co_out)->required();
    complete_cmd->add_option("--report", co_report);
    complete_cmd->add_option("--m", config.m_out);
    complete_cmd->add_option("--n", config.n_in);
    complete_cmd->add_option("--k", config.k);
    complete_cmd->add_option("--knn", config.k_nn);
    complete_cmd->add_option("--strategy", co_strategy)
        ->check(CLI::IsMember({"fps", "cluster", "ballquery"}));
    complete_cmd->add_option("--radius", config.anchor_params.radius);
    complete_cmd->add_option("--threshold", config.anchor_params.threshold);
    complete_cmd->add_option("--predictor", co_predictor);
    complete_cmd->add_flag("--normalize", config.normalize);
    complete_cmd->add_option("--timeout", config.predictor_timeout_seconds);
    complete_cmd->add_option("--max-iters", config.solver.max_iters);
    complete_cmd->add_option("--tol", config.solver.residual_tol);
    add_common(complete_cmd, common);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a metric");
    std::string ev_pred, ev_gt, ev_metric;
    eval_cmd->add_option("--pred", ev_pred)->required();
    eval_cmd->add_option("--gt", ev_gt)->required();
    eval_cmd->add_option("--metric", ev_metric)
        ->required()
        ->check(CLI::IsMember({"cdl1", "cdl2", "fidelity", "dmcd"}));
    add_common(eval_cmd, common);

    // perturb
    auto* perturb_cmd = app.add_subcommand("perturb", "Perturb a cloud");
    std::string pe_input, pe_out, pe_rotate;
    std::optional<double> pe_sigma, pe_ratio;
    double pe_sigma_val = 0.0, pe_ratio_val = 0.0;
    perturb_cmd->add_option("--input", pe_input)->required();
    perturb_cmd->add_option("--out", pe_out)->required();
    auto* sigma_opt = perturb_cmd->add_option("--noise-sigma", pe_sigma_val);
    auto* ratio_opt = perturb_cmd->add_option("--remove-ratio", pe_ratio_val);
    perturb_cmd->add_option("--rotate", pe_rotate,
                            "'random' or rx,ry,rz in degrees (x applied first)");
    add_common(perturb_cmd, common);

    try {
        std::vector<std::string> args = apply_config_file(app, argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 vector parse pops from the back
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "error=config message=\"%s\"\n", e.what());
        return kExitConfig;
    } catch (const escape::ConfigError& e) {
        std::fprintf(stderr, "error=config message=\"%s\"\n", e.what());
        return kExitConfig;
    }

    try {
        if (anchors_cmd->parsed())
            return run_anchors(an_input, an_out, an_k, an_strategy, an_radius,
                               an_threshold, an_knn, common);
        if (encode_cmd->parsed()) return run_encode(en_input, en_anchors, en_out);
        if (decode_cmd->parsed())
            return run_decode(de_input, de_out, de_max_iters, de_tol, common);
        if (complete_cmd->parsed()) {
            config.strategy = escape::anchor_strategy_from_string(co_strategy);
            config.predictor = escape::PredictorSpec::parse(co_predictor);
            config.workers = common.workers;
            return run_complete(co_input, co_out, co_report, config, common);
        }
        if (eval_cmd->parsed()) return run_eval(ev_pred, ev_gt, ev_metric, common);
        if (perturb_cmd->parsed()) {
            if (sigma_opt->count() > 0) pe_sigma = pe_sigma_val;
            if (ratio_opt->count() > 0) pe_ratio = pe_ratio_val;
            return run_perturb(pe_input, pe_out, pe_sigma, pe_ratio, pe_rotate, common);
        }
    } catch (const escape::ConfigError& e) {
        std::fprintf(stderr, "error=config message=\"%s\"\n", e.what());
        return kExitConfig;
    } catch (const escape::ExternalFailed& e) {
        std::fprintf(stderr, "error=external message=\"%s\"\n", e.what());
        return kExitExternal;
    } catch (const escape::BadExternalOutput& e) {
        std::fprintf(stderr, "error=external message=\"%s\"\n", e.what());
        return kExitExternal;
    } catch (const escape::ParseError& e) {
        std::fprintf(stderr, "error=io message=\"%s\"\n", e.what());
        return kExitIo;
    } catch (const escape::IoError& e) {
        std::fprintf(stderr, "error=io message=\"%s\"\n", e.what());
        return kExitIo;
    } catch (const escape::EmptyCloud& e) {
        std::fprintf(stderr, "error=io message=\"%s\"\n", e.what());
        return kExitIo;
    } catch (const escape::Error& e) {
        std::fprintf(stderr, "error=algorithm message=\"%s\"\n", e.what());
        return kExitAlgorithm;
    }
    return kExitConfig;
}
