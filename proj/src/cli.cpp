#include "camokit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <thread>

#include "camokit/adapter.hpp"
#include "camokit/error.hpp"
#include "camokit/fusion.hpp"
#include "camokit/gradcheck.hpp"
#include "camokit/losses.hpp"
#include "camokit/metrics.hpp"
#include "camokit/raster_io.hpp"
#include "camokit/sketch_augment.hpp"
#include "camokit/synth.hpp"

namespace camokit {

unsigned thread_count() {
    if (const char* env = std::getenv("CAMOKIT_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 1024) {
            throw ParameterError("CAMOKIT_THREADS must be an integer in [1, 1024]");
        }
        return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Options that can also come from a --config file. Keys double as the
// "config" section of the run manifest.
class Settings {
public:
    template <class T>
    CLI::Option* bind(CLI::App* app, const std::string& flag, const std::string& key, T& ref, const std::string& help) {
        fields_.push_back({key, [&ref](const json& j) { ref = j.get<T>(); }, [&ref]() { return json(ref); }});
        return app->add_option(flag, ref, help)->capture_default_str();
    }

    void apply(const json& config) const {
        for (const auto& [key, value] : config.items()) {
            const auto it = std::find_if(fields_.begin(), fields_.end(), [&](const Field& f) { return f.key == key; });
            if (it == fields_.end()) {
                throw ValidationError("unknown config key '" + key + "'");
            }
            try {
                it->set(value);
            } catch (const json::exception&) {
                throw ValidationError("config key '" + key + "' has the wrong type");
            }
        }
    }

    json resolved() const {
        json j = json::object();
        for (const Field& f : fields_) {
            j[f.key] = f.get();
        }
        return j;
    }

private:
    struct Field {
        std::string key;
        std::function<void(const json&)> set;
        std::function<json()> get;
    };
    std::vector<Field> fields_;
};

struct Outcome {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    std::vector<std::string> lines;  // human-readable summary
    std::optional<json> stdout_json;  // printed when no report file was requested
    json extra = json::object();      // additional manifest fields
    bool failed = false;              // e.g. a gradient check above tolerance
};

struct Command {
    CLI::App* app = nullptr;
    Settings settings;
    std::string config_path;
    std::string manifest_path;
    bool quiet = false;
    std::uint64_t seed = 0;
    std::function<Outcome()> body;
    std::function<std::string()> default_manifest;
};

void add_common(Command& c) {
    c.app->add_option("--config", c.config_path, "JSON file whose keys override the flags");
    c.app->add_option("--manifest", c.manifest_path, "where to write the run manifest");
    c.app->add_flag("--quiet", c.quiet, "suppress human-readable output");
    c.settings.bind(c.app, "--seed", "seed", c.seed, "master seed");
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

// Runs fn(0..n-1) on the configured worker count. Every item runs even when
// another fails; the error of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t first) {
        for (std::size_t i = first; i < n; i += workers) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back(work, t);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string sample_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return buf;
}

std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Files of `dir` named <key><suffix>, keyed and sorted by <key>.
std::map<std::string, fs::path> list_keyed(const fs::path& dir, const std::string& suffix) {
    if (!fs::is_directory(dir)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::map<std::string, fs::path> out;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && ends_with(name, suffix) && name.size() > suffix.size()) {
            out.emplace(name.substr(0, name.size() - suffix.size()), e.path());
        }
    }
    return out;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

json loss_config_json(const LossConfig& c) {
    return {{"gamma", c.gamma},
            {"alpha", c.alpha},
            {"theta1", c.theta1},
            {"theta2", c.theta2},
            {"lambda_mask", c.lambda_mask},
            {"lambda_dice", c.lambda_dice},
            {"lambda_adaptive", c.lambda_adaptive},
            {"lambda_boundary", c.lambda_boundary},
            {"eps", c.eps}};
}

json loss_report_json(const LossReport& r) {
    return {{"bce", r.bce},
            {"dice", r.dice},
            {"focal", r.focal},
            {"focal_mean", r.focal_mean},
            {"afl", r.afl},
            {"afl_mean", r.afl_mean},
            {"gamma_a", r.gamma_a},
            {"boundary",
             {{"precision", r.bf1_precision}, {"recall", r.bf1_recall}, {"bf1", r.bf1}, {"loss", r.boundary_loss}}},
            {"total", r.total},
            {"degenerate", {{"afl", r.afl_degenerate}, {"boundary", r.boundary_degenerate}}},
            {"config", loss_config_json(r.config)}};
}

json image_metrics_json(const ImageMetrics& m) {
    return {{"name", m.name}, {"mae", m.mae}, {"iou", m.iou}, {"f_beta", m.f_beta}, {"boundary_f1", m.boundary_f1}};
}

json grad_report_json(const GradCheckReport& r) {
    json j = {{"op", r.op},     {"seed", r.seed},       {"h", r.h},         {"tol", r.tol},
              {"max_rel_err", std::isfinite(r.max_rel_err) ? json(r.max_rel_err) : json("inf")},
              {"worst", r.worst}, {"checked", r.checked}, {"pass", r.pass}};
    if (!r.failure.empty()) {
        j["failure"] = r.failure;
    }
    return j;
}

// --- synth -------------------------------------------------------------------

struct SynthOptions {
    std::string out;
    std::size_t count = 1;
    SynthConfig config;
};

void setup_synth(Command& c, SynthOptions& o) {
    add_common(c);
    c.settings.bind(c.app, "--out", "out", o.out, "output directory")->required();
    c.settings.bind(c.app, "--count", "count", o.count, "number of samples");
    c.settings.bind(c.app, "--height", "height", o.config.height, "image height");
    c.settings.bind(c.app, "--width", "width", o.config.width, "image width");
    c.settings.bind(c.app, "--blobs", "blob_count", o.config.blob_count, "disks per object");
    c.settings.bind(c.app, "--delta", "delta", o.config.delta, "texture bias inside the object");
    c.settings.bind(c.app, "--noise-scale", "noise_scale", o.config.noise_scale, "value-noise lattice spacing");
    c.default_manifest = [&o] { return (fs::path(o.out) / "manifest.json").string(); };
    c.body = [&c, &o] {
        if (o.count < 1) {
            throw ParameterError("--count must be >= 1");
        }
        SynthConfig base = o.config;
        base.seed = c.seed;
        base.validate();
        make_dir(o.out);
        Outcome out;
        std::vector<std::string> files;
        json samples = json::array();
        for (std::size_t i = 0; i < o.count; ++i) {
            const std::string id = sample_id(i);
            for (const char* suffix : {"_img.pf32", "_gt.pgm", "_sketch.pgm"}) {
                out.outputs.push_back((fs::path(o.out) / (id + suffix)).string());
            }
            samples.push_back({{"id", id}, {"seed", derive_seed(c.seed, i)}});
        }
        parallel_for(o.count, [&](std::size_t i) {
            SynthConfig cfg = base;
            cfg.seed = derive_seed(c.seed, i);
            const SynthSample s = gen_sample(cfg);
            save_prob(s.image, out.outputs[3 * i]);
            save_mask(s.mask, out.outputs[3 * i + 1]);
            save_mask(s.sketch, out.outputs[3 * i + 2]);
        });
        out.extra["samples"] = samples;
        out.lines.push_back("synth: wrote " + std::to_string(o.count) + " samples to " + o.out);
        return out;
    };
}

// --- augment -----------------------------------------------------------------

struct AugmentOptions {
    std::string in, out, emit_json, in_dir, out_dir;
    std::string suffix = "_sketch.pgm";
    AugmentConfig config;
};

void setup_augment(Command& c, AugmentOptions& o) {
    add_common(c);
    c.settings.bind(c.app, "--in", "in", o.in, "input sketch (PGM)");
    c.settings.bind(c.app, "--out", "out", o.out, "augmented raster (PGM)");
    c.settings.bind(c.app, "--emit-json", "emit_json", o.emit_json, "SketchVector JSON output");
    c.settings.bind(c.app, "--in-dir", "in_dir", o.in_dir, "batch mode: directory of sketches");
    c.settings.bind(c.app, "--out-dir", "out_dir", o.out_dir, "batch mode: output directory");
    c.settings.bind(c.app, "--suffix", "suffix", o.suffix, "batch mode: input file suffix");
    c.settings.bind(c.app, "--n", "n", o.config.n, "patch count (perfect square)");
    c.settings.bind(c.app, "--C", "C", o.config.C, "rows per displacement unit");
    c.settings.bind(c.app, "--K", "K", o.config.K, "pixels of displacement per unit");
    c.settings.bind(c.app, "--min-pixels", "min_pixels", o.config.min_pixels, "smallest curve kept");
    c.settings.bind(c.app, "--thickness", "thickness", o.config.thickness, "stroke width");
    c.default_manifest = [&o] {
        return o.out_dir.empty() ? o.out + ".manifest.json" : (fs::path(o.out_dir) / "manifest.json").string();
    };
    c.body = [&c, &o] {
        const bool single = !o.in.empty() || !o.out.empty();
        const bool batch = !o.in_dir.empty() || !o.out_dir.empty();
        if (single == batch || (single && (o.in.empty() || o.out.empty())) ||
            (batch && (o.in_dir.empty() || o.out_dir.empty()))) {
            throw ParameterError("augment needs either --in and --out, or --in-dir and --out-dir");
        }
        if (batch && !o.emit_json.empty()) {
            throw ParameterError("--emit-json applies to single-file mode; batch mode always writes JSON");
        }
        AugmentConfig base = o.config;
        base.seed = c.seed;
        base.validate();
        Outcome out;
        if (single) {
            const AugmentResult r = augment(load_mask(o.in), base);
            save_mask(r.raster, o.out);
            out.inputs.push_back(o.in);
            out.outputs.push_back(o.out);
            if (!o.emit_json.empty()) {
                write_file(o.emit_json, sketch_vector_to_json(r.vector));
                out.outputs.push_back(o.emit_json);
            }
            if (r.no_curves) {
                out.warnings.push_back(o.in + ": no patch yielded a curve; the raster is empty");
            }
            out.extra["delta"] = r.delta;
            out.extra["curves"] = r.vector.curves.size();
            out.lines.push_back("augment: " + std::to_string(r.vector.curves.size()) + " curves, delta " +
                                std::to_string(r.delta));
            return out;
        }
        const auto items = list_keyed(o.in_dir, o.suffix);
        make_dir(o.out_dir);
        std::vector<std::string> keys;
        for (const auto& [key, path] : items) {
            keys.push_back(key);
            out.inputs.push_back(path.string());
        }
        std::vector<char> empty(keys.size(), 0);
        std::vector<double> deltas(keys.size(), 0.0);
        parallel_for(keys.size(), [&](std::size_t i) {
            AugmentConfig cfg = base;
            cfg.seed = derive_seed(c.seed, i);
            const AugmentResult r = augment(load_mask(out.inputs[i]), cfg);
            save_mask(r.raster, fs::path(o.out_dir) / (keys[i] + "_aug.pgm"));
            write_file(fs::path(o.out_dir) / (keys[i] + "_aug.json"), sketch_vector_to_json(r.vector));
            empty[i] = r.no_curves ? 1 : 0;
            deltas[i] = r.delta;
        });
        json per_item = json::array();
        for (std::size_t i = 0; i < keys.size(); ++i) {
            out.outputs.push_back((fs::path(o.out_dir) / (keys[i] + "_aug.pgm")).string());
            out.outputs.push_back((fs::path(o.out_dir) / (keys[i] + "_aug.json")).string());
            per_item.push_back({{"id", keys[i]}, {"seed", derive_seed(c.seed, i)}, {"delta", deltas[i]}});
            if (empty[i]) {
                out.warnings.push_back(out.inputs[i] + ": no patch yielded a curve; the raster is empty");
            }
        }
        out.extra["items"] = per_item;
        out.lines.push_back("augment: processed " + std::to_string(keys.size()) + " sketches into " + o.out_dir);
        return out;
    };
}

// --- loss --------------------------------------------------------------------

struct LossOptions {
    std::string pred, gt, report;
    LossConfig config;
};

void bind_loss_config(Command& c, LossConfig& cfg) {
    c.settings.bind(c.app, "--gamma", "gamma", cfg.gamma, "focal exponent");
    c.settings.bind(c.app, "--alpha", "alpha", cfg.alpha, "adaptive focal extra-term weight");
    c.settings.bind(c.app, "--theta1", "theta1", cfg.theta1, "boundary extraction window");
    c.settings.bind(c.app, "--theta2", "theta2", cfg.theta2, "boundary extension window");
    c.settings.bind(c.app, "--lambda-mask", "lambda_mask", cfg.lambda_mask, "BCE weight");
    c.settings.bind(c.app, "--lambda-dice", "lambda_dice", cfg.lambda_dice, "Dice weight");
    c.settings.bind(c.app, "--lambda-adaptive", "lambda_adaptive", cfg.lambda_adaptive, "adaptive focal weight");
    c.settings.bind(c.app, "--lambda-boundary", "lambda_boundary", cfg.lambda_boundary, "boundary loss weight");
    c.settings.bind(c.app, "--eps", "eps", cfg.eps, "probability clamp");
}

void setup_loss(Command& c, LossOptions& o) {
    add_common(c);
    c.settings.bind(c.app, "--pred", "pred", o.pred, "prediction (PF32 or PGM)")->required();
    c.settings.bind(c.app, "--gt", "gt", o.gt, "ground truth mask (PGM)")->required();
    c.settings.bind(c.app, "--report", "report", o.report, "LossReport JSON output");
    bind_loss_config(c, o.config);
    c.default_manifest = [&o] { return o.report.empty() ? std::string("loss.manifest.json") : o.report + ".manifest.json"; };
    c.body = [&o] {
        o.config.validate();
        const LossReport r = total_loss(load_as_prob(o.pred), load_mask(o.gt), o.config);
        Outcome out;
        out.inputs = {o.pred, o.gt};
        const json j = loss_report_json(r);
        if (o.report.empty()) {
            out.stdout_json = j;
        } else {
            write_json(o.report, j);
            out.outputs.push_back(o.report);
        }
        out.lines.push_back("loss: total " + std::to_string(r.total));
        return out;
    };
}

// --- eval --------------------------------------------------------------------

struct EvalOptions {
    std::string pred, gt, pred_dir, gt_dir, report;
    std::string pred_suffix = "_pred.pf32";
    std::string gt_suffix = "_gt.pgm";
    double beta2 = kDefaultBeta2;
    int theta1 = 3;
    int theta2 = 3;
};

void setup_eval(Command& c, EvalOptions& o) {
    add_common(c);
    c.settings.bind(c.app, "--pred", "pred", o.pred, "prediction (PF32 or PGM)");
    c.settings.bind(c.app, "--gt", "gt", o.gt, "ground truth mask (PGM)");
    c.settings.bind(c.app, "--pred-dir", "pred_dir", o.pred_dir, "batch mode: prediction directory");
    c.settings.bind(c.app, "--gt-dir", "gt_dir", o.gt_dir, "batch mode: ground-truth directory");
    c.settings.bind(c.app, "--pred-suffix", "pred_suffix", o.pred_suffix, "batch mode: prediction file suffix");
    c.settings.bind(c.app, "--gt-suffix", "gt_suffix", o.gt_suffix, "batch mode: ground-truth file suffix");
    c.settings.bind(c.app, "--beta2", "beta2", o.beta2, "beta^2 of the F-measure");
    c.settings.bind(c.app, "--theta1", "theta1", o.theta1, "boundary extraction window");
    c.settings.bind(c.app, "--theta2", "theta2", o.theta2, "boundary extension window");
    c.settings.bind(c.app, "--report", "report", o.report, "MetricReport JSON output");
    c.default_manifest = [&o] { return o.report.empty() ? std::string("eval.manifest.json") : o.report + ".manifest.json"; };
    c.body = [&o] {
        const bool single = !o.pred.empty() || !o.gt.empty();
        const bool batch = !o.pred_dir.empty() || !o.gt_dir.empty();
        if (single == batch || (single && (o.pred.empty() || o.gt.empty())) ||
            (batch && (o.pred_dir.empty() || o.gt_dir.empty()))) {
            throw ParameterError("eval needs either --pred and --gt, or --pred-dir and --gt-dir");
        }
        if (!(o.beta2 > 0.0) || !std::isfinite(o.beta2)) {
            throw ParameterError("--beta2 must be positive");
        }
        std::vector<std::string> names, preds, gts;
        if (single) {
            names.push_back(fs::path(o.pred).stem().string());
            preds.push_back(o.pred);
            gts.push_back(o.gt);
        } else {
            const auto p = list_keyed(o.pred_dir, o.pred_suffix);
            const auto g = list_keyed(o.gt_dir, o.gt_suffix);
            for (const auto& [key, path] : p) {
                const auto it = g.find(key);
                if (it == g.end()) {
                    throw ValidationError("no ground truth for prediction '" + key + "'");
                }
                names.push_back(key);
                preds.push_back(path.string());
                gts.push_back(it->second.string());
            }
            for (const auto& [key, path] : g) {
                if (p.find(key) == p.end()) {
                    throw ValidationError("no prediction for ground truth '" + key + "'");
                }
            }
        }
        std::vector<ImageMetrics> metrics(names.size());
        parallel_for(names.size(), [&](std::size_t i) {
            metrics[i] = evaluate_image(load_as_prob(preds[i]), load_mask(gts[i]), o.beta2, o.theta1, o.theta2);
            metrics[i].name = names[i];
        });
        const MetricReport r = aggregate(metrics);
        json per_image = json::array();
        for (const ImageMetrics& m : r.per_image) {
            per_image.push_back(image_metrics_json(m));
        }
        const json j = {{"count", r.count},
                        {"mean", {{"mae", r.mae}, {"iou", r.iou}, {"f_beta", r.f_beta}, {"boundary_f1", r.boundary_f1}}},
                        {"beta2", o.beta2},
                        {"per_image", per_image}};
        Outcome out;
        for (std::size_t i = 0; i < names.size(); ++i) {
            out.inputs.push_back(preds[i]);
            out.inputs.push_back(gts[i]);
        }
        if (o.report.empty()) {
            out.stdout_json = j;
        } else {
            write_json(o.report, j);
            out.outputs.push_back(o.report);
        }
        out.lines.push_back("eval: " + std::to_string(r.count) + " images, mean IoU " + std::to_string(r.iou));
        return out;
    };
}

// --- fusion-demo -------------------------------------------------------------

struct FusionDemoOptions {
    std::string image, sketch, out, in_dir, sketch_dir, out_dir, report;
    std::string image_suffix = "_img.pf32";
    std::string sketch_suffix = "_sketch.pgm";
    int patch = 8;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t tokens = 16;
};

json token_demo(const FusionDemoOptions& o, std::uint64_t seed) {
    Rng rng(seed);
    const Tensor image = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    const Tensor sketch = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    FusionParams p = FusionParams::random(o.d_model, o.n_heads, rng, 0.1);
    const Tensor fused = fusion_forward(image, sketch, p);

    const AttentionTrace t = cross_attention_trace(image, sketch, p);
    double row_dev = 0.0;
    for (const Tensor& w : t.weights) {
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < w.cols(); ++j) {
                s += w(i, j);
            }
            row_dev = std::max(row_dev, std::abs(s - 1.0));
        }
    }
    // Reversing the sketch tokens permutes keys and values together.
    Tensor reversed = sketch;
    for (std::size_t r = 0; r < sketch.rows(); ++r) {
        for (std::size_t c = 0; c < sketch.cols(); ++c) {
            reversed(r, c) = sketch(sketch.rows() - 1 - r, c);
        }
    }
    const Tensor permuted = fusion_forward(image, reversed, p);
    double perm_diff = 0.0;
    for (std::size_t i = 0; i < fused.size(); ++i) {
        perm_diff = std::max(perm_diff, std::abs(fused[i] - permuted[i]));
    }
    // Zero gate rows of the film projection make alpha identically 0.
    FusionParams gated = p;
    for (std::size_t r = 0; r < o.d_model; ++r) {
        for (std::size_t c = 2 * o.d_model; c < 3 * o.d_model; ++c) {
            gated.film.weight(r, c) = 0.0;
        }
    }
    for (std::size_t c = 2 * o.d_model; c < 3 * o.d_model; ++c) {
        gated.film.bias[c] = 0.0;
    }
    const Tensor identity = fusion_forward(image, sketch, gated);
    const bool alpha_zero_exact = identity.values() == image.values();
    double norm = 0.0;
    for (double v : fused.values()) {
        norm += v * v;
    }
    GradCheckOptions check;
    check.seed = seed;
    check.tokens = o.tokens;
    check.d_model = o.d_model;
    check.n_heads = o.n_heads;
    const GradCheckReport grad = run_grad_check("fusion", check);
    const bool pass = grad.pass && alpha_zero_exact && row_dev <= 1e-12 && perm_diff <= 1e-12;
    return {{"op", "fusion"},
            {"mode", "tokens"},
            {"seed", seed},
            {"max_rel_err", grad.max_rel_err},
            {"pass", pass},
            {"tokens", o.tokens},
            {"d_model", o.d_model},
            {"n_heads", o.n_heads},
            {"fused_norm", std::sqrt(norm)},
            {"softmax_row_sum_max_dev", row_dev},
            {"kv_permutation_max_diff", perm_diff},
            {"alpha_zero_identity", alpha_zero_exact}};
}

void setup_fusion_demo(Command& c, FusionDemoOptions& o) {
    add_common(c);
    c.settings.bind(c.app, "--image", "image", o.image, "input image (PF32 or PGM)");
    c.settings.bind(c.app, "--sketch", "sketch", o.sketch, "input sketch (PGM)");
    c.settings.bind(c.app, "--out", "out", o.out, "soft prediction (PF32)");
    c.settings.bind(c.app, "--in-dir", "in_dir", o.in_dir, "batch mode: image directory");
    c.settings.bind(c.app, "--sketch-dir", "sketch_dir", o.sketch_dir, "batch mode: sketch directory (default: in-dir)");
    c.settings.bind(c.app, "--out-dir", "out_dir", o.out_dir, "batch mode: output directory");
    c.settings.bind(c.app, "--image-suffix", "image_suffix", o.image_suffix, "batch mode: image suffix");
    c.settings.bind(c.app, "--sketch-suffix", "sketch_suffix", o.sketch_suffix, "batch mode: sketch suffix");
    c.settings.bind(c.app, "--patch", "patch", o.patch, "patch side of the toy model");
    c.settings.bind(c.app, "--d-model", "d_model", o.d_model, "token width");
    c.settings.bind(c.app, "--heads", "n_heads", o.n_heads, "attention heads");
    c.settings.bind(c.app, "--tokens", "tokens", o.tokens, "token count of the random-token demo");
    c.settings.bind(c.app, "--report", "report", o.report, "JSON summary output");
    c.default_manifest = [&o] {
        if (!o.out_dir.empty()) {
            return (fs::path(o.out_dir) / "manifest.json").string();
        }
        if (!o.out.empty()) {
            return o.out + ".manifest.json";
        }
        return o.report.empty() ? std::string("fusion-demo.manifest.json") : o.report + ".manifest.json";
    };
    c.body = [&c, &o] {
        const bool single = !o.image.empty() || !o.sketch.empty() || !o.out.empty();
        const bool batch = !o.in_dir.empty() || !o.out_dir.empty() || !o.sketch_dir.empty();
        if (single && batch) {
            throw ParameterError("fusion-demo takes single-file flags or batch flags, not both");
        }
        if ((single && (o.image.empty() || o.sketch.empty() || o.out.empty())) ||
            (batch && (o.in_dir.empty() || o.out_dir.empty()))) {
            throw ParameterError("fusion-demo needs --image, --sketch and --out, or --in-dir and --out-dir");
        }
        Outcome out;
        json summary;
        if (!single && !batch) {
            summary = token_demo(o, c.seed);
            out.failed = !summary["pass"].get<bool>();
            out.lines.push_back("fusion-demo: random-token identities computed");
        } else {
            Rng rng(c.seed);
            const ToyModel model = ToyModel::random(o.patch, o.d_model, o.n_heads, rng);
            std::vector<std::string> images, sketches, outputs;
            if (single) {
                images.push_back(o.image);
                sketches.push_back(o.sketch);
                outputs.push_back(o.out);
            } else {
                const auto imgs = list_keyed(o.in_dir, o.image_suffix);
                const auto sks = list_keyed(o.sketch_dir.empty() ? o.in_dir : o.sketch_dir, o.sketch_suffix);
                make_dir(o.out_dir);
                for (const auto& [key, path] : imgs) {
                    const auto it = sks.find(key);
                    if (it == sks.end()) {
                        throw ValidationError("no sketch for image '" + key + "'");
                    }
                    images.push_back(path.string());
                    sketches.push_back(it->second.string());
                    outputs.push_back((fs::path(o.out_dir) / (key + "_pred.pf32")).string());
                }
            }
            std::vector<double> coverage(images.size(), 0.0);
            parallel_for(images.size(), [&](std::size_t i) {
                const ToyPrediction p = toy_predict(model, load_as_prob(images[i]), load_as_prob(sketches[i]));
                save_prob(p.soft, outputs[i]);
                coverage[i] = static_cast<double>(count_foreground(p.mask)) / static_cast<double>(p.mask.size());
            });
            json items = json::array();
            for (std::size_t i = 0; i < images.size(); ++i) {
                out.inputs.push_back(images[i]);
                out.inputs.push_back(sketches[i]);
                out.outputs.push_back(outputs[i]);
                items.push_back({{"output", outputs[i]}, {"foreground_fraction", coverage[i]}});
            }
            summary = {{"op", "fusion-demo"}, {"mode", "images"}, {"seed", c.seed}, {"items", items}};
            out.lines.push_back("fusion-demo: wrote " + std::to_string(images.size()) + " predictions");
        }
        if (o.report.empty()) {
            if (!single && !batch) {
                out.stdout_json = summary;
            }
        } else {
            write_json(o.report, summary);
            out.outputs.push_back(o.report);
        }
        return out;
    };
}

// --- gradcheck ---------------------------------------------------------------

struct GradOptions {
    std::string target = "fusion";
    std::string report;
    GradCheckOptions check;
};

void setup_gradcheck(Command& c, GradOptions& o) {
    add_common(c);
    c.settings.bind(c.app, "--target", "target", o.target, "operation to check, or 'all'");
    c.settings.bind(c.app, "--step", "h", o.check.h, "central-difference step in [1e-6, 1e-3]");
    c.settings.bind(c.app, "--tol", "tol", o.check.tol, "max relative error allowed");
    c.settings.bind(c.app, "--tokens", "tokens", o.check.tokens, "token count");
    c.settings.bind(c.app, "--d-model", "d_model", o.check.d_model, "token width");
    c.settings.bind(c.app, "--heads", "n_heads", o.check.n_heads, "attention heads");
    c.settings.bind(c.app, "--report", "report", o.report, "JSON result output");
    c.default_manifest = [&o] {
        return o.report.empty() ? std::string("gradcheck.manifest.json") : o.report + ".manifest.json";
    };
    c.body = [&c, &o] {
        if (!(o.check.tol > 0.0)) {
            throw ParameterError("--tol must be positive");
        }
        o.check.seed = c.seed;
        std::vector<std::string> targets;
        if (o.target == "all") {
            targets = grad_check_targets();
        } else {
            const auto known = grad_check_targets();
            if (std::find(known.begin(), known.end(), o.target) == known.end()) {
                throw ParameterError("unknown gradcheck target '" + o.target + "'");
            }
            targets.push_back(o.target);
        }
        Outcome out;
        json checks = json::array();
        bool all_pass = true;
        for (const std::string& t : targets) {
            const GradCheckReport r = run_grad_check(t, o.check);
            checks.push_back(grad_report_json(r));
            all_pass = all_pass && r.pass;
            out.lines.push_back("gradcheck " + t + ": max_rel_err " + format_sci(r.max_rel_err) +
                                (r.pass ? " pass" : " FAIL"));
        }
        const json j = targets.size() == 1 ? checks[0] : json{{"pass", all_pass}, {"checks", checks}};
        if (o.report.empty()) {
            out.stdout_json = j;
        } else {
            write_json(o.report, j);
            out.outputs.push_back(o.report);
        }
        out.failed = !all_pass;
        return out;
    };
}

int finish(Command& c, const std::string& name, Outcome& out, double seconds) {
    std::sort(out.inputs.begin(), out.inputs.end());
    std::sort(out.outputs.begin(), out.outputs.end());
    json m = {{"tool", "camokit"},
              {"version", kVersion},
              {"subcommand", name},
              {"seed", c.seed},
              {"config", c.settings.resolved()},
              {"inputs", out.inputs},
              {"outputs", out.outputs},
              {"warnings", out.warnings},
              {"runtime", {{"wall_clock_s", seconds}, {"threads", thread_count()}}}};
    for (const auto& [key, value] : out.extra.items()) {
        m[key] = value;
    }
    write_json(c.manifest_path.empty() ? c.default_manifest() : c.manifest_path, m);
    if (out.stdout_json) {
        std::cout << out.stdout_json->dump(2) << "\n";
    } else if (!c.quiet) {
        for (const std::string& line : out.lines) {
            std::cout << line << "\n";
        }
    }
    if (!c.quiet) {
        for (const std::string& w : out.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
    }
    if (out.failed) {
        std::cerr << name << ": check failed\n";
        return 1;
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"camokit: sketch augmentation, segmentation losses and toy fusion blocks", "camokit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::map<std::string, Command> commands;
    SynthOptions synth;
    AugmentOptions aug;
    LossOptions loss;
    EvalOptions eval;
    FusionDemoOptions fusion;
    GradOptions grad;
    const std::vector<std::pair<std::string, std::string>> names = {
        {"synth", "generate synthetic camouflage samples"},
        {"augment", "perturb a sketch through its Bezier refit"},
        {"loss", "evaluate every training loss on one prediction"},
        {"eval", "region and boundary metrics"},
        {"fusion-demo", "run the toy fusion model"},
        {"gradcheck", "finite-difference gradient checks"}};
    for (const auto& [name, help] : names) {
        commands[name].app = app.add_subcommand(name, help);
    }
    setup_synth(commands["synth"], synth);
    setup_augment(commands["augment"], aug);
    setup_loss(commands["loss"], loss);
    setup_eval(commands["eval"], eval);
    setup_fusion_demo(commands["fusion-demo"], fusion);
    setup_gradcheck(commands["gradcheck"], grad);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* failing = &app;
        for (const auto& [name, c] : commands) {
            if (c.app->parsed()) {
                failing = c.app;
            }
        }
        std::cerr << failing->help();
        return 1;
    }

    for (auto& [name, c] : commands) {
        if (!c.app->parsed()) {
            continue;
        }
        try {
            if (!c.config_path.empty()) {
                json j;
                try {
                    j = json::parse(read_file(c.config_path));
                } catch (const json::parse_error& e) {
                    throw FormatError("cannot parse config " + c.config_path + ": " + e.what());
                }
                if (j.is_object() && j.contains("config") && j["config"].is_object()) {
                    j = j["config"];
                }
                if (!j.is_object()) {
                    throw FormatError("config " + c.config_path + " must hold a JSON object");
                }
                c.settings.apply(j);
            }
            const auto start = std::chrono::steady_clock::now();
            Outcome out = c.body();
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return finish(c, name, out, seconds);
        } catch (const IoError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const FormatError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 1;
}

}  // namespace camokit
