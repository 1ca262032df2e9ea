// Command-line front end: segment, eval, phantom, trace-dump.
//
// Exit codes: 0 success, 1 I/O or usage error, 2 segmentation error. Every
// failure that has a report path still gets a report naming the error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "cusumseg/cusumseg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cusumseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitSegmentation = 2;

bool is_io_error(const Error& e) {
    return e.name() == "MalformedFile" || e.name() == "IoError" ||
           e.name() == "IndexOutOfRange" || e.name() == "DimensionMismatch" ||
           e.name() == "InvalidSpec";
}

int exit_code_for(const Error& e) { return is_io_error(e) ? kExitIo : kExitSegmentation; }

json error_json(const std::string& name, const std::string& message) {
    return {{"name", name}, {"message", message}};
}

/// Options shared by `segment` and `trace-dump`.
struct InputArgs {
    std::string input;
    int slice = 0;
    bool all_slices = false;
    int timepoint = kDefaultWorkingTimepoint;
    std::string seed;
    std::string corner = "bottom-left";
    std::optional<double> heading;
    double step_factor = kDefaultStepFactor;
    int window = kDefaultWindowSize;
    double turn_region = std::numbers::pi / 4;
    double turn_boundary = std::numbers::pi / 2;
    double loop_shift = std::numbers::pi / 3;
    int loop_lag = 8;
    std::optional<long> max_steps;
    std::string reset_mode = "half-current";

    void add_to(CLI::App* app) {
        app->add_option("-i,--input", input, "PGM image or stack directory")->required();
        app->add_option("--slice", slice, "Slice index in a stack")->check(CLI::NonNegativeNumber);
        app->add_option("--timepoint", timepoint, "Timepoint used as working image")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--seed", seed, "Manual initial point 'x,y' (skips the diagonal scan)");
        app->add_option("--corner", corner, "Seed scan corner")
            ->check(CLI::IsMember({"bottom-left", "bottom-right", "top-left", "top-right"}));
        app->add_option("--heading", heading, "Initial heading in radians");
        app->add_option("--step-factor", step_factor, "Step length in pixel sides");
        app->add_option("--window", window, "CUSUM region window length q")
            ->check(CLI::PositiveNumber);
        app->add_option("--turn-region", turn_region, "In-region turn (rad)");
        app->add_option("--turn-boundary", turn_boundary, "Turn on a detected crossing (rad)");
        app->add_option("--loop-shift", loop_shift, "Loop-escape turn (rad)");
        app->add_option("--loop-lag", loop_lag, "Steps back for loop detection")
            ->check(CLI::Range(2, 1000));
        app->add_option("--max-steps", max_steps, "Tracker step limit");
        app->add_option("--reset-mode", reset_mode, "CUSUM restart after alarms")
            ->check(CLI::IsMember({"zero", "half-current", "half-previous"}));
    }

    SegmentOptions options() const {
        SegmentOptions o;
        if (!seed.empty()) {
            double x = 0, y = 0;
            char comma = 0;
            std::istringstream ss(seed);
            if (!(ss >> x >> comma >> y) || comma != ',')
                throw std::invalid_argument("--seed expects 'x,y', got '" + seed + "'");
            o.seed = Point2D{x, y};
        }
        o.corner = corner_from_string(corner);
        o.initial_heading = heading;
        o.step_factor = step_factor;
        o.window_size = window;
        o.turn_in_region = turn_region;
        o.turn_at_boundary = turn_boundary;
        o.loop_shift = loop_shift;
        o.loop_lag = loop_lag;
        o.max_steps = max_steps;
        o.reset_mode = reset_mode_from_string(reset_mode);
        return o;
    }
};

/// Loads the stack (directory) or single image (file).
struct LoadedInput {
    std::optional<PerfusionStack> stack;
    std::optional<GrayImage> image;

    int num_slices() const { return stack ? stack->num_slices() : 1; }

    GrayImage working(int slice, int timepoint) const {
        if (stack) return working_image(*stack, slice, timepoint);
        if (slice != 0) throw IndexOutOfRange("single image input has only slice 0");
        return *image;
    }
};

LoadedInput load_input(const std::string& path) {
    if (!fs::exists(path)) throw IoError("input does not exist: " + path);
    LoadedInput in;
    if (fs::is_directory(path))
        in.stack = load_stack(path);
    else
        in.image = load_image(path);
    return in;
}

/// Segments one slice; returns the report and the mask (if successful).
struct SliceOutcome {
    json report;
    std::optional<BinaryMask> mask;
    int exit_code = kExitOk;
};

SliceOutcome segment_slice(const LoadedInput& in, const InputArgs& args,
                           const SegmentOptions& opt, int slice) {
    SliceOutcome out;
    json& r = out.report;
    r["input"] = args.input;
    r["slice"] = slice;
    r["timepoint"] = in.stack ? json(args.timepoint) : json(nullptr);
    r["params"] = to_json(opt);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const GrayImage img = in.working(slice, args.timepoint);
        const SegmentResult res = segment_image(img, opt);
        r["status"] = "ok";
        r["error"] = nullptr;
        r["otsu_threshold"] = res.otsu;
        r["seed"] = {res.seed.x, res.seed.y};
        r["termination"] = std::string(to_string(res.trace.termination));
        r["num_change_points"] = res.trace.change_points.size();
        r["num_steps"] = res.trace.steps.size();
        r["mask_pixels"] = res.mask.mask.count();
        r["degenerate_contour"] = res.mask.degenerate_contour;
        out.mask = res.mask.mask;
    } catch (const TrackerDiverged& e) {
        r["status"] = "error";
        r["error"] = error_json(e.name(), e.what());
        r["num_steps"] = e.partial_trace().steps.size();
        out.exit_code = kExitSegmentation;
    } catch (const Error& e) {
        r["status"] = "error";
        r["error"] = error_json(e.name(), e.what());
        out.exit_code = exit_code_for(e);
    } catch (const std::invalid_argument& e) {
        r["status"] = "error";
        r["error"] = error_json("InvalidArgument", e.what());
        out.exit_code = kExitIo;
    }
    const auto t1 = std::chrono::steady_clock::now();
    r["wall_time_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return out;
}

fs::path default_report_path(const fs::path& output) {
    fs::path p = output;
    p.replace_extension(".report.json");
    return p;
}

int cmd_segment(const InputArgs& args, const std::string& output, std::string report_path,
                int jobs) {
    if (!args.all_slices) {
        if (report_path.empty()) report_path = default_report_path(output).string();
        SliceOutcome res;
        try {
            const SegmentOptions opt = args.options();
            const LoadedInput in = load_input(args.input);
            res = segment_slice(in, args, opt, args.slice);
        } catch (const Error& e) {
            res.report = {{"input", args.input},
                          {"status", "error"},
                          {"error", error_json(e.name(), e.what())}};
            res.exit_code = exit_code_for(e);
        } catch (const std::invalid_argument& e) {
            res.report = {{"input", args.input},
                          {"status", "error"},
                          {"error", error_json("InvalidArgument", e.what())}};
            res.exit_code = kExitIo;
        }
        if (res.mask) {
            try {
                save_mask(*res.mask, output);
            } catch (const Error& e) {
                res.report["status"] = "error";
                res.report["error"] = error_json(e.name(), e.what());
                res.exit_code = kExitIo;
            }
        }
        write_json_file(report_path, res.report);
        if (res.exit_code != kExitOk)
            std::cerr << "segment: " << res.report["error"]["name"].get<std::string>() << ": "
                      << res.report["error"]["message"].get<std::string>() << '\n';
        return res.exit_code;
    }

    // Every slice of a stack; `output` is a directory of mask_s{n}.pgm.
    const SegmentOptions opt = args.options();
    fs::create_directories(output);
    if (report_path.empty()) report_path = (fs::path(output) / "report.json").string();
    json report = {{"input", args.input}, {"slices", json::array()}};
    try {
        const LoadedInput in = load_input(args.input);
        const int n = in.num_slices();
        std::vector<SliceOutcome> results(static_cast<std::size_t>(n));
        const int workers = std::max(1, std::min(jobs, n));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int s = w; s < n; s += workers)
                    results[static_cast<std::size_t>(s)] = segment_slice(in, args, opt, s);
            });
        for (std::thread& t : pool) t.join();

        int code = kExitOk;
        for (int s = 0; s < n; ++s) {
            SliceOutcome& res = results[static_cast<std::size_t>(s)];
            if (res.mask) {
                const fs::path mask_path =
                    fs::path(output) / ("mask_s" + std::to_string(s) + ".pgm");
                save_mask(*res.mask, mask_path);
                res.report["mask"] = mask_path.filename().string();
            }
            code = std::max(code, res.exit_code);
            report["slices"].push_back(res.report);
        }
        report["status"] = code == kExitOk ? "ok" : "error";
        write_json_file(report_path, report);
        return code;
    } catch (const Error& e) {
        report["status"] = "error";
        report["error"] = error_json(e.name(), e.what());
        write_json_file(report_path, report);
        std::cerr << "segment: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_trace_dump(const InputArgs& args, const std::string& output) {
    const SegmentOptions opt = args.options();
    try {
        const LoadedInput in = load_input(args.input);
        const GrayImage img = in.working(args.slice, args.timepoint);
        CusumConfig cusum = CusumConfig::from_image(img);
        cusum.window_size = opt.window_size;
        cusum.reset_mode = opt.reset_mode;
        const Point2D seed =
            opt.seed ? *opt.seed
                     : find_initial_point(img, cusum.fallback_threshold, SeedConfig{opt.corner});
        int code = kExitOk;
        BoundaryTrace trace;
        try {
            trace = run_tracker(img, seed, opt.planner_params(img), cusum, opt.heading());
        } catch (const TrackerDiverged& e) {
            trace = e.partial_trace();
            std::cerr << "trace-dump: " << e.what() << " (partial trace written)\n";
            code = kExitSegmentation;
        }
        std::ofstream out(output);
        if (!out) throw IoError("cannot create " + output);
        write_trace_csv(out, trace);
        return code;
    } catch (const Error& e) {
        std::cerr << "trace-dump: " << e.name() << ": " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_eval(const std::string& mask_path, const std::string& reference_path,
             const std::string& baseline_path, int slice, int timepoint,
             const std::string& report_path) {
    json report;
    int code = kExitOk;
    try {
        const BinaryMask mask = load_mask(mask_path);
        const BinaryMask reference = load_mask(reference_path);
        report["cusum"] = to_json(derive_metrics(confusion(mask, reference)));
        if (!baseline_path.empty()) {
            LoadedInput in = load_input(baseline_path);
            const GrayImage img = in.working(slice, timepoint);
            report["best_threshold"] = to_json(best_threshold_baseline(img, reference));
        }
    } catch (const Error& e) {
        report = {{"status", "error"}, {"error", error_json(e.name(), e.what())}};
        std::cerr << "eval: " << e.name() << ": " << e.what() << '\n';
        code = exit_code_for(e);
    }
    if (report_path.empty())
        std::cout << report.dump(2) << '\n';
    else
        write_json_file(report_path, report);
    return code;
}

int cmd_phantom(const std::string& output, const std::string& preset, std::optional<double> sigma,
                std::optional<std::uint64_t> rng_seed, std::optional<int> timepoints,
                std::optional<int> slices, const std::string& truth) {
    try {
        PhantomSpec spec = preset == "overlap" ? overlapping_ring_phantom() : default_head_phantom();
        if (sigma) spec.noise_sigma = *sigma;
        if (rng_seed) spec.rng_seed = *rng_seed;
        if (timepoints) spec.num_timepoints = *timepoints;
        if (slices) spec.num_slices = *slices;
        spec.truth = truth == "inner" ? TruthRegion::InnerEllipse : TruthRegion::OuterEllipse;
        const Phantom ph = generate(spec);
        save_stack(ph.stack, output);
        save_mask(ph.ground_truth, fs::path(output) / "ground_truth.pgm");
        json lesions = json::array();
        for (const Lesion& l : spec.lesions)
            lesions.push_back({{"x", l.center.x}, {"y", l.center.y}, {"radius", l.radius},
                               {"delta", l.delta}});
        const auto ellipse = [](const Ellipse& e) {
            return json{{"cx", e.cx}, {"cy", e.cy}, {"ax", e.ax}, {"ay", e.ay}};
        };
        write_json_file(fs::path(output) / "phantom.json",
                        {{"preset", preset},
                         {"width", spec.width},
                         {"height", spec.height},
                         {"background_mean", spec.background_mean},
                         {"interior_mean", spec.interior_mean},
                         {"ring_mean", spec.ring_mean},
                         {"outer", ellipse(spec.outer)},
                         {"inner", ellipse(spec.inner)},
                         {"lesions", lesions},
                         {"noise_sigma", spec.noise_sigma},
                         {"num_timepoints", spec.num_timepoints},
                         {"num_slices", spec.num_slices},
                         {"bolus_dip_fraction", spec.bolus_dip_fraction},
                         {"rng_seed", spec.rng_seed},
                         {"truth", truth}});
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "phantom: " << e.name() << ": " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary-tracking CUSUM segmentation of T2-weighted perfusion images"};
    app.require_subcommand(1);

    InputArgs seg_args;
    std::string seg_output, seg_report;
    int jobs = 1;
    CLI::App* segment = app.add_subcommand("segment", "Segment a slice and write its mask");
    seg_args.add_to(segment);
    segment->add_option("-o,--output", seg_output, "Mask PGM (directory with --all-slices)")
        ->required();
    segment->add_option("-r,--report", seg_report, "JSON report path");
    segment->add_flag("--all-slices", seg_args.all_slices, "Segment every slice of a stack");
    segment->add_option("-j,--jobs", jobs, "Slices processed concurrently")
        ->check(CLI::PositiveNumber);

    InputArgs dump_args;
    std::string dump_output;
    CLI::App* dump = app.add_subcommand("trace-dump", "Write per-step tracker diagnostics as CSV");
    dump_args.add_to(dump);
    dump->add_option("-o,--output", dump_output, "CSV path")->required();

    std::string eval_mask, eval_ref, eval_baseline, eval_report;
    int eval_slice = 0, eval_timepoint = kDefaultWorkingTimepoint;
    CLI::App* eval = app.add_subcommand("eval", "Compare a mask with a reference mask");
    eval->add_option("-m,--mask", eval_mask, "Mask PGM")->required();
    eval->add_option("--reference", eval_ref, "Reference mask PGM")->required();
    eval->add_option("--baseline-image", eval_baseline,
                     "Image or stack for the best-threshold baseline");
    eval->add_option("--slice", eval_slice, "Baseline stack slice");
    eval->add_option("--timepoint", eval_timepoint, "Baseline stack timepoint");
    eval->add_option("-r,--report", eval_report, "JSON report path (stdout if omitted)");

    std::string ph_output, ph_preset = "default", ph_truth = "outer";
    std::optional<double> ph_sigma;
    std::optional<std::uint64_t> ph_seed;
    std::optional<int> ph_timepoints, ph_slices;
    CLI::App* phantom = app.add_subcommand("phantom", "Write a synthetic head phantom stack");
    phantom->add_option("-o,--output", ph_output, "Output stack directory")->required();
    phantom->add_option("--preset", ph_preset, "Phantom preset")
        ->check(CLI::IsMember({"default", "overlap"}));
    phantom->add_option("--noise-sigma", ph_sigma, "Gaussian noise sigma");
    phantom->add_option("--rng-seed", ph_seed, "Noise generator seed");
    phantom->add_option("--timepoints", ph_timepoints, "Number of timepoints");
    phantom->add_option("--slices", ph_slices, "Number of slices");
    phantom->add_option("--truth", ph_truth, "Ground-truth region")
        ->check(CLI::IsMember({"outer", "inner"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitIo;
    }

    try {
        if (*segment) return cmd_segment(seg_args, seg_output, seg_report, jobs);
        if (*dump) return cmd_trace_dump(dump_args, dump_output);
        if (*eval)
            return cmd_eval(eval_mask, eval_ref, eval_baseline, eval_slice, eval_timepoint,
                            eval_report);
        if (*phantom)
            return cmd_phantom(ph_output, ph_preset, ph_sigma, ph_seed, ph_timepoints, ph_slices,
                               ph_truth);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitIo;
}
