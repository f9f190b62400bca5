#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fracedge/edgepipe.hpp"
#include "fracedge/evalbench.hpp"
#include "fracedge/fracgrad.hpp"
#include "fracedge/imgcore.hpp"
#include "fracedge/parallel.hpp"
#include "fracedge/serialize.hpp"

namespace fracedge::cli {

namespace fs = std::filesystem;

namespace {

/// Argument or input-pairing problem; maps to exit code 2.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct DetectorFlags {
    double order = 0.6;
    std::size_t terms = kDefaultTerms;
    double sigma = 2.0;
    std::string combine = "sum";
    bool no_nms = false;

    DetectorConfig config() const {
        DetectorConfig cfg;
        cfg.order = order;
        cfg.terms = terms;
        cfg.sigma = sigma;
        try {
            cfg.combine = parse_combine_mode(combine);
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        cfg.nms = !no_nms;
        return cfg;
    }
};

void add_detector_flags(CLI::App* cmd, DetectorFlags& flags, bool with_order) {
    if (with_order) {
        cmd->add_option("--order", flags.order, "Fractional derivative order v (> 0)")->capture_default_str();
    }
    cmd->add_option("--terms", flags.terms, "Number of Grunwald-Letnikov terms kept")->capture_default_str();
    cmd->add_option("--sigma", flags.sigma, "Gaussian pre-smoothing sigma in pixels (0 disables)")
        ->capture_default_str();
    cmd->add_option("--combine", flags.combine, "Gradient combination")
        ->check(CLI::IsMember({"sum", "magnitude"}))
        ->capture_default_str();
    cmd->add_flag("--no-nms", flags.no_nms, "Disable non-maximal suppression");
}

struct EvalFlags {
    std::size_t levels = kDefaultLevels;
    std::optional<double> tol;
    double de_threshold = kDefaultDeThreshold;
    bool labels_as_gt = false;

    EvalParams params() const {
        if (levels < 2) throw UsageError("--levels must be >= 2");
        if (tol && !(*tol >= 0.0)) throw UsageError("--tol must be >= 0");
        if (!(de_threshold >= 0.0 && de_threshold <= 1.0)) {
            throw UsageError("--de-threshold must lie in [0, 1]");
        }
        EvalParams p;
        p.levels = levels;
        p.tol = tol;
        p.de_threshold = de_threshold;
        return p;
    }
};

void add_eval_flags(CLI::App* cmd, EvalFlags& flags) {
    cmd->add_option("--levels", flags.levels, "Number of thresholds on the PR curve")->capture_default_str();
    cmd->add_option("--tol", flags.tol, "Match tolerance in pixels (default 0.0075 x image diagonal)");
    cmd->add_option("--de-threshold", flags.de_threshold, "Edge threshold for Pm/Pf")->capture_default_str();
    cmd->add_flag("--labels-as-gt", flags.labels_as_gt, "Derive ground truth from label maps");
}

void require_inputs_exist(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) throw UsageError("input not found: " + p);
    }
}

std::string format_ms(double ms) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << ms << " ms";
    return s.str();
}

bool is_image_extension(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".png" || ext == ".pgm";
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    DetectorFlags detector;
    std::vector<std::string> inputs;
    std::string out_dir = ".";
    std::string format = "pgm";
    std::size_t jobs = 1;
    bool dump_kernel = false;
};

int cmd_detect(const DetectArgs& a, std::ostream& out) {
    const DetectorConfig cfg = a.detector.config();
    if (a.dump_kernel) {
        out << kernel_to_json(gl_coefficients(cfg.order, cfg.terms)) << "\n";
        if (a.inputs.empty()) return kExitOk;
    }
    if (a.inputs.empty()) throw UsageError("detect: no input images");
    require_inputs_exist(a.inputs);

    std::vector<std::string> lines(a.inputs.size());
    const auto batch_start = Clock::now();
    parallel_for(a.inputs.size(), a.jobs, [&](std::size_t i) {
        const fs::path in = a.inputs[i];
        const auto t0 = Clock::now();
        const RasterImage img = load_image(in);
        const double t_load = ms_since(t0);
        StageTimings st;
        const EdgeMap edges = detect_edges(img, cfg, &st);
        const auto t1 = Clock::now();
        const fs::path stem = fs::path(a.out_dir) / in.stem();
        if (a.format == "pgm" || a.format == "both") save_edge_pgm(edges, fs::path(stem) += ".pgm");
        if (a.format == "fedg" || a.format == "both") save_edge_fedg(edges, fs::path(stem) += ".fedg");
        const double t_save = ms_since(t1);
        lines[i] = in.filename().string() + ": load " + format_ms(t_load) + ", smooth " + format_ms(st.smooth * 1e3) +
                   ", gradient " + format_ms(st.gradient * 1e3) + ", nms " + format_ms(st.nms * 1e3) + ", save " +
                   format_ms(t_save);
    });
    for (const auto& l : lines) out << l << "\n";
    out << "processed " << a.inputs.size() << " image(s) in " << format_ms(ms_since(batch_start)) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    DetectorFlags detector;
    EvalFlags eval;
    std::string dataset;
    std::string image;
    std::vector<std::string> truth;
    std::string edges;
    std::string out;
    std::size_t jobs = 1;
};

std::vector<BinaryBoundaryMap> load_truths(const std::vector<std::string>& paths, bool labels_as_gt) {
    std::vector<BinaryBoundaryMap> truths;
    for (const auto& p : paths) {
        truths.push_back(labels_as_gt ? label_boundaries(load_label_map(p)) : load_boundary_map(p));
    }
    return truths;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    const DetectorConfig cfg = a.detector.config();
    const EvalParams params = a.eval.params();

    std::vector<DatasetItem> items;
    std::vector<std::optional<EdgeMap>> given_edges;
    if (!a.dataset.empty()) {
        if (!a.image.empty() || !a.truth.empty() || !a.edges.empty()) {
            throw UsageError("evaluate: give either a dataset directory or --image/--truth, not both");
        }
        items = load_dataset(a.dataset, a.eval.labels_as_gt);
        given_edges.resize(items.size());
    } else {
        if (a.image.empty()) throw UsageError("evaluate: need a dataset directory or --image");
        if (a.truth.empty()) throw UsageError("evaluate: --image needs at least one --truth");
        require_inputs_exist({a.image});
        require_inputs_exist(a.truth);
        if (!a.edges.empty()) require_inputs_exist({a.edges});
        DatasetItem item;
        item.name = fs::path(a.image).stem().string();
        item.image = load_image(a.image);
        item.truths = load_truths(a.truth, a.eval.labels_as_gt);
        for (const auto& t : item.truths) {
            if (!t.same_shape(item.image)) throw UsageError("evaluate: truth and image sizes differ");
        }
        given_edges.emplace_back();
        if (!a.edges.empty()) {
            given_edges.back() = load_edge_map(a.edges);
            if (!given_edges.back()->same_shape(item.image)) {
                throw UsageError("evaluate: edge map and image sizes differ");
            }
        }
        items.push_back(std::move(item));
    }
    if (items.empty()) throw UsageError("evaluate: dataset is empty");

    std::vector<EvalReport> reports(items.size());
    std::vector<std::string> timing(items.size());
    parallel_for(items.size(), a.jobs, [&](std::size_t i) {
        StageTimings st;
        const EdgeMap edges = given_edges[i] ? *given_edges[i] : detect_edges(items[i].image, cfg, &st);
        const auto t0 = Clock::now();
        reports[i] = evaluate_edges(items[i].image, edges, items[i].truths, params);
        const double t_eval = ms_since(t0);
        reports[i].name = items[i].name;
        reports[i].order = cfg.order;
        reports[i].sigma = cfg.sigma;
        timing[i] = items[i].name + ": smooth " + format_ms(st.smooth * 1e3) + ", gradient " +
                    format_ms(st.gradient * 1e3) + ", nms " + format_ms(st.nms * 1e3) + ", eval " +
                    format_ms(t_eval);
    });
    for (const auto& t : timing) err << t << "\n";

    std::vector<std::vector<PrPoint>> curves;
    double sum_j = 0.0, sum_psnr = 0.0;
    std::size_t scored = 0, finite_psnr = 0;
    Json images = Json::array();
    for (const auto& r : reports) {
        curves.push_back(r.pr);
        if (r.j) {
            sum_j += *r.j;
            ++scored;
        }
        if (!r.psnr.infinite) {
            sum_psnr += r.psnr.db;
            ++finite_psnr;
        }
        images.push_back(report_json(r));
    }
    const SweepSummary summary = summarize_sweep(curves);
    Json doc;
    doc["images"] = std::move(images);
    Json agg;
    agg["count"] = reports.size();
    agg["order"] = cfg.order;
    agg["sigma"] = cfg.sigma;
    agg["mean_j"] = scored ? Json(sum_j / static_cast<double>(scored)) : Json(nullptr);
    agg["mean_psnr_db"] = finite_psnr ? Json(sum_psnr / static_cast<double>(finite_psnr)) : Json(nullptr);
    agg["ods"] = summary.ods;
    agg["ois"] = summary.ois;
    agg["ap"] = summary.ap;
    agg["pr"] = pr_json(summary.aggregate);
    doc["aggregate"] = std::move(agg);

    const std::string text = doc.dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        const fs::path dir = a.out;
        write_file_atomically(dir / "report.json", text);
        for (const auto& r : reports) write_file_atomically(dir / (r.name + ".pr.csv"), pr_to_csv(r.pr));
        write_file_atomically(dir / "aggregate.pr.csv", pr_to_csv(summary.aggregate));
        out << "wrote " << (dir / "report.json").string() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    DetectorFlags detector;
    EvalFlags eval;
    std::string dataset;
    std::string grid = "0.1:2.0:0.1";
    std::string out_dir = "sweep";
    std::size_t jobs = 1;
};

std::string order_label(double order) {
    std::ostringstream s;
    s << std::setprecision(10) << order;
    return s.str();
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    SweepOptions opts;
    opts.detector = a.detector.config();
    opts.eval = a.eval.params();
    opts.jobs = a.jobs;
    std::vector<double> grid;
    try {
        grid = parse_order_grid(a.grid);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto items = load_dataset(a.dataset, a.eval.labels_as_gt);
    if (items.empty()) throw UsageError("sweep: dataset is empty");

    const auto t0 = Clock::now();
    const OrderSweepResult result = sweep_orders(items, grid, opts);
    err << "sweep: " << grid.size() << " orders x " << result.image_names.size() << " images in "
        << format_ms(ms_since(t0)) << "\n";

    const fs::path dir = a.out_dir;
    write_file_atomically(dir / "order_scores.csv", sweep_report(result));
    write_file_atomically(dir / "pr_table.csv", sweep_table(result));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        write_file_atomically(dir / ("pr_order_" + order_label(grid[i]) + ".csv"), pr_to_csv(result.pr[i].aggregate));
    }
    write_file_atomically(dir / "summary.json", sweep_to_json(result) + "\n");
    out << "best_order " << order_label(result.best_order) << " mean_j " << result.mean_j[result.best_index] << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// addnoise

struct AddNoiseArgs {
    std::vector<std::string> inputs;
    double noise = 0.0;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

RasterImage add_gaussian_noise(const RasterImage& img, double sigma, std::uint64_t seed, std::uint64_t stream) {
    RasterImage noisy = img;
    if (sigma == 0.0) return noisy;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> dist(0.0, sigma);
    for (double& v : noisy.values()) v = std::clamp(v + dist(rng), 0.0, 255.0);
    return noisy;
}

int cmd_addnoise(const AddNoiseArgs& a, std::ostream& out) {
    if (!(a.noise >= 0.0) || !std::isfinite(a.noise)) throw UsageError("addnoise: --noise must be >= 0");
    if (!a.seed) throw UsageError("addnoise: --seed is required");
    if (a.inputs.empty()) throw UsageError("addnoise: no input images");
    require_inputs_exist(a.inputs);
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        const fs::path in = a.inputs[i];
        const RasterImage noisy = add_gaussian_noise(load_image(in), a.noise, *a.seed, i);
        const fs::path target = fs::path(a.out_dir) / in.filename();
        if (in.extension() == ".png") {
            save_png(noisy, target);
        } else {
            save_pgm(noisy, target);
        }
        out << target.string() << "\n";
    }
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<DatasetItem> load_dataset(const fs::path& root, bool labels_as_gt) {
    std::error_code ec;
    const fs::path image_dir = root / "images";
    if (!fs::is_directory(image_dir, ec)) {
        throw UsageError("dataset: missing directory " + image_dir.string());
    }
    std::map<std::string, fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        if (entry.is_regular_file() && is_image_extension(entry.path())) {
            const std::string name = entry.path().stem().string();
            if (!images.emplace(name, entry.path()).second) {
                throw UsageError("dataset: duplicate image name " + name);
            }
        }
    }

    std::map<std::string, std::vector<fs::path>> truths;
    const fs::path truth_dir = root / (labels_as_gt ? "labels" : "truth");
    if (fs::is_directory(truth_dir, ec)) {
        for (const auto& entry : fs::directory_iterator(truth_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
            std::string stem = entry.path().stem().string();
            if (!labels_as_gt) {
                // NAME.K.pgm carries annotator K.
                const auto dot = stem.rfind('.');
                if (dot != std::string::npos && dot + 1 < stem.size() &&
                    std::all_of(stem.begin() + static_cast<std::ptrdiff_t>(dot) + 1, stem.end(),
                                [](unsigned char c) { return std::isdigit(c); })) {
                    stem = stem.substr(0, dot);
                }
            }
            truths[stem].push_back(entry.path());
        }
    }

    std::vector<DatasetItem> items;
    for (const auto& [name, path] : images) {
        auto it = truths.find(name);
        if (it == truths.end()) {
            throw UsageError("dataset: no ground truth for image " + name + " in " + truth_dir.string());
        }
        std::sort(it->second.begin(), it->second.end());
        DatasetItem item;
        item.name = name;
        item.image = load_image(path);
        for (const auto& t : it->second) {
            item.truths.push_back(labels_as_gt ? label_boundaries(load_label_map(t)) : load_boundary_map(t));
            if (!item.truths.back().same_shape(item.image)) {
                throw UsageError("dataset: ground truth " + t.string() + " does not match image size");
            }
        }
        items.push_back(std::move(item));
    }
    return items;
}

void configure_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("fracedge");
        spdlog::set_default_logger(logger);
    });
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("FRACEDGE_LOG")) {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();

    CLI::App app{"Fractional-order derivative-of-Gaussian edge detection and evaluation"};
    app.name("fracedge");
    app.require_subcommand(1);

    DetectArgs detect;
    auto* detect_cmd = app.add_subcommand("detect", "Detect edges and write edge maps");
    add_detector_flags(detect_cmd, detect.detector, true);
    detect_cmd->add_option("inputs", detect.inputs, "Input images (PGM or PNG)");
    detect_cmd->add_option("-o,--out", detect.out_dir, "Output directory")->capture_default_str();
    detect_cmd->add_option("--format", detect.format, "Edge map format")
        ->check(CLI::IsMember({"pgm", "fedg", "both"}))
        ->capture_default_str();
    detect_cmd->add_option("--jobs", detect.jobs, "Images processed in parallel")->capture_default_str();
    detect_cmd->add_flag("--dump-kernel", detect.dump_kernel, "Print the difference kernel as JSON");

    EvaluateArgs evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score edge maps against ground truth");
    add_detector_flags(eval_cmd, evaluate.detector, true);
    add_eval_flags(eval_cmd, evaluate.eval);
    eval_cmd->add_option("dataset", evaluate.dataset, "Dataset directory (images/, truth/ or labels/)");
    eval_cmd->add_option("--image", evaluate.image, "Single image to evaluate");
    eval_cmd->add_option("--truth", evaluate.truth, "Ground truth map(s) for --image");
    eval_cmd->add_option("--edges", evaluate.edges, "Precomputed edge map (PGM, PNG or FEDG) for --image");
    eval_cmd->add_option("-o,--out", evaluate.out, "Output directory (default: JSON on stdout)");
    eval_cmd->add_option("--jobs", evaluate.jobs, "Images processed in parallel")->capture_default_str();

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid search over the derivative order");
    add_detector_flags(sweep_cmd, sweep.detector, false);
    add_eval_flags(sweep_cmd, sweep.eval);
    sweep_cmd->add_option("dataset", sweep.dataset, "Dataset directory")->required();
    sweep_cmd->add_option("--grid", sweep.grid, "Orders as lo:hi:step")->capture_default_str();
    sweep_cmd->add_option("-o,--out", sweep.out_dir, "Output directory")->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep.jobs, "Parallel workers")->capture_default_str();

    AddNoiseArgs noise;
    auto* noise_cmd = app.add_subcommand("addnoise", "Add seeded Gaussian white noise");
    noise_cmd->add_option("inputs", noise.inputs, "Input images");
    noise_cmd->add_option("--noise", noise.noise, "Noise standard deviation in grey levels")->capture_default_str();
    noise_cmd->add_option("--seed", noise.seed, "Random seed");
    noise_cmd->add_option("-o,--out", noise.out_dir, "Output directory")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*detect_cmd) return cmd_detect(detect, out);
        if (*eval_cmd) return cmd_evaluate(evaluate, out, err);
        if (*sweep_cmd) return cmd_sweep(sweep, out, err);
        if (*noise_cmd) return cmd_addnoise(noise, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace fracedge::cli
