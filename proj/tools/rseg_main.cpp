// rseg: dataset generation, training, evaluation and interpretation in one
// binary. Exit codes: 0 ok, 1 runtime failure, 2 configuration error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rseg/eval.hpp"
#include "rseg/hsdata.hpp"
#include "rseg/interpret.hpp"
#include "rseg/models.hpp"
#include "rseg/prototypes.hpp"
#include "rseg/svg.hpp"
#include "rseg/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rseg;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// run.json makes every run replayable; the output directory is always "."
// so reruns into different directories stay byte-identical.
void write_run_json(const std::string& out_dir, const std::string& command, json options) {
    json j;
    j["command"] = command;
    options["out"] = ".";
    j["options"] = std::move(options);
    write_text_file(out_dir + "/run.json", j.dump(2) + "\n");
}

void reject_unknown_keys(const json& given, const json& known, const std::string& prefix) {
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!known.contains(it.key())) throw ConfigError("unknown config key: " + path);
        if (it.value().is_object() && known[it.key()].is_object())
            reject_unknown_keys(it.value(), known[it.key()], path);
    }
}

DatasetManifest load_manifest_resolved(const std::string& path) {
    DatasetManifest m = read_manifest(path);
    const fs::path base = fs::path(path).parent_path();
    for (auto& e : m.entries) {
        if (fs::path(e.cube_path).is_relative()) e.cube_path = (base / e.cube_path).string();
        if (fs::path(e.mask_path).is_relative()) e.mask_path = (base / e.mask_path).string();
    }
    return m;
}

std::vector<Sample> load_split(const DatasetManifest& manifest, const std::string& split) {
    std::vector<Sample> samples;
    for (const auto& e : manifest.split(split)) {
        Sample s = load_sample(e);
        preprocess_sample(s);
        samples.push_back(std::move(s));
    }
    return samples;
}

void clamp_patch_size(TrainConfig& cfg, const DatasetManifest& manifest) {
    if (manifest.entries.empty()) return;
    const MaskRaster probe = read_mask(manifest.entries.front().mask_path);
    cfg.patch_size = std::min(cfg.patch_size, std::min(probe.height, probe.width));
}

TrainConfig resolve_train_config(const std::string& model_name, const std::string& config_path,
                                 long long seed, int epochs, int folds) {
    ModelVariant variant;
    try {
        variant = model_variant_from_string(model_name);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    TrainConfig cfg = TrainConfig::defaults_for(variant);
    if (!config_path.empty()) {
        json file = json::parse(read_text_file(config_path));
        json base = json::parse(cfg.to_json());
        reject_unknown_keys(file, base, "");
        base.merge_patch(file);
        cfg = TrainConfig::from_json(base.dump());
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (epochs > 0) cfg.epochs = epochs;
    if (folds > 0) cfg.folds = folds;
    return cfg;
}

std::vector<std::unique_ptr<Model>> load_models(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ConfigError("no checkpoints given");
    std::vector<std::unique_ptr<Model>> models;
    for (const auto& p : paths) models.push_back(load_checkpoint(p));
    return models;
}

std::vector<Model*> raw_pointers(const std::vector<std::unique_ptr<Model>>& models) {
    std::vector<Model*> out;
    for (const auto& m : models) out.push_back(m.get());
    return out;
}

Sample pick_sample(const DatasetManifest& manifest, const std::string& split,
                   const std::string& sample_id) {
    auto entries = manifest.split(split);
    if (entries.empty()) entries = manifest.entries;
    if (entries.empty()) throw ConfigError("manifest has no samples");
    const ManifestEntry* chosen = &entries.front();
    if (!sample_id.empty()) {
        chosen = nullptr;
        for (const auto& e : entries)
            if (e.sample_id == sample_id) chosen = &e;
        if (!chosen) throw ConfigError("sample not in split: " + sample_id);
    }
    Sample s = load_sample(*chosen);
    preprocess_sample(s);
    return s;
}

std::string csv_grid(const Tensor<float>& raster) {
    std::ostringstream os;
    for (int y = 0; y < raster.shape[0]; ++y) {
        for (int x = 0; x < raster.shape[1]; ++x) {
            if (x) os << ",";
            os << raster.at2(y, x);
        }
        os << "\n";
    }
    return os.str();
}

// ---- subcommands --------------------------------------------------------

int cmd_generate(const std::string& out, int samples, int size, long long seed, double overlap,
                 double noise, double drift) {
    if (samples < 0 || size < 8) throw ConfigError("need samples >= 0 and size >= 8");
    fs::create_directories(out);
    SyntheticConfig gen;
    gen.overlap = overlap;
    gen.noise_sigma = noise;
    gen.drift_amplitude = drift;
    const std::uint64_t s = seed < 0 ? 0 : static_cast<std::uint64_t>(seed);

    DatasetManifest manifest;
    manifest.seed = s;
    manifest.generator_config_json = gen.to_json();
    const auto data = generate_synthetic(samples, size, size, s, gen);
    for (const auto& sample : data) {
        ManifestEntry e;
        e.sample_id = sample.sample_id;
        e.patient_id = sample.patient_id;
        e.cube_path = sample.sample_id + ".hsc";
        e.mask_path = sample.sample_id + ".msk";
        e.split = "train";
        write_cube(out + "/" + e.cube_path, sample.cube);
        write_mask(out + "/" + e.mask_path, sample.mask);
        manifest.entries.push_back(std::move(e));
    }
    std::set<std::string> patients;
    for (const auto& e : manifest.entries) patients.insert(e.patient_id);
    if (patients.size() >= 3) split_by_patient(manifest, {0.6, 0.2, 0.2}, s);
    write_manifest(out + "/manifest.json", manifest);

    json opts;
    opts["samples"] = samples;
    opts["size"] = size;
    opts["seed"] = s;
    opts["generator"] = json::parse(gen.to_json());
    write_run_json(out, "generate", opts);
    std::cout << "wrote " << manifest.entries.size() << " samples to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& out,
              const std::string& model_name, const std::string& config_path, long long seed,
              int epochs, int folds) {
    TrainConfig cfg = resolve_train_config(model_name, config_path, seed, epochs, folds);
    fs::create_directories(out);
    const DatasetManifest manifest = load_manifest_resolved(manifest_path);
    clamp_patch_size(cfg, manifest);

    std::vector<TrainResult> results;
    if (cfg.folds <= 1) {
        auto train_samples = load_split(manifest, "train");
        auto val_samples = load_split(manifest, "val");
        if (val_samples.empty() && !train_samples.empty()) {
            // no val split in the manifest: hold out the last patient
            const std::string last = train_samples.back().patient_id;
            std::vector<Sample> tr, va;
            for (auto& s : train_samples)
                (s.patient_id == last ? va : tr).push_back(std::move(s));
            train_samples = std::move(tr);
            val_samples = std::move(va);
        }
        results.push_back(train_model(train_samples, val_samples, cfg));
    } else {
        std::vector<Sample> pool = load_split(manifest, "train");
        for (auto& s : load_split(manifest, "val")) pool.push_back(std::move(s));
        results = train_kfold(pool, cfg, cfg.folds);
    }

    json summary;
    summary["folds"] = json::array();
    json ensemble = json::array();
    for (std::size_t f = 0; f < results.size(); ++f) {
        const std::string stem = "fold_" + std::to_string(f);
        save_checkpoint(out + "/" + stem + ".rsg1", *results[f].best_model);
        write_text_file(out + "/" + stem + "_steps.csv", results[f].step_csv());
        write_text_file(out + "/" + stem + "_epochs.csv", results[f].epoch_csv());
        json row;
        row["fold"] = f;
        row["best_val_dice"] = results[f].best_val_dice;
        row["best_epoch"] = results[f].best_epoch;
        row["aborted_on_nan"] = results[f].aborted_on_nan;
        summary["folds"].push_back(row);
        ensemble.push_back(stem + ".rsg1");
    }
    write_text_file(out + "/summary.json", summary.dump(2) + "\n");
    if (results.size() > 1) {
        json desc;
        desc["checkpoints"] = ensemble;
        write_text_file(out + "/ensemble.json", desc.dump(2) + "\n");
    }

    json opts;
    opts["manifest"] = manifest_path;
    opts["config"] = json::parse(cfg.to_json());
    write_run_json(out, "train", opts);
    for (std::size_t f = 0; f < results.size(); ++f)
        std::cout << "fold " << f << ": best val dice " << results[f].best_val_dice
                  << " at epoch " << results[f].best_epoch << "\n";
    return 0;
}

int cmd_eval(const std::vector<std::string>& checkpoints, const std::string& manifest_path,
             const std::string& out, const std::string& split, int patch, int stride) {
    fs::create_directories(out);
    const auto models = load_models(checkpoints);
    const DatasetManifest manifest = load_manifest_resolved(manifest_path);
    const auto samples = load_split(manifest, split);
    if (samples.empty()) throw ConfigError("split '" + split + "' is empty");
    const EvalReport report =
        evaluate_samples(raw_pointers(models), samples, patch, stride > 0 ? stride : patch);
    write_text_file(out + "/report.json", report.to_json());
    write_text_file(out + "/report.csv", report.to_csv());

    json opts;
    opts["checkpoints"] = checkpoints;
    opts["manifest"] = manifest_path;
    opts["split"] = split;
    opts["patch"] = patch;
    opts["stride"] = stride;
    write_run_json(out, "eval", opts);
    std::cout << "dice " << report.dice.mean << " +- " << report.dice.stddev << " over "
              << report.per_sample.size() << " samples\n";
    return 0;
}

int cmd_bottleneck(const std::string& manifest_path, const std::string& out,
                   std::vector<int> sizes) {
    if (sizes.empty()) throw ConfigError("need at least one size");
    fs::create_directories(out);
    const DatasetManifest manifest = load_manifest_resolved(manifest_path);
    if (manifest.entries.empty()) throw ConfigError("manifest has no samples");
    std::vector<Tensor<std::uint8_t>> masks;
    for (const auto& e : manifest.entries) masks.push_back(mask_tensor(read_mask(e.mask_path)));

    sizes.insert(sizes.begin(), masks.front().shape[0]);  // baseline row
    const auto rows = bottleneck_experiment(masks, sizes);

    std::ostringstream csv;
    csv << "size,mean_dice\n";
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        csv << r.size << "," << r.mean_dice << "\n";
        xs.push_back(r.size);
        ys.push_back(r.mean_dice);
    }
    write_text_file(out + "/bottleneck.csv", csv.str());
    write_text_file(out + "/bottleneck.svg",
                    svg_line_chart(xs, ys, "mean dice vs bottleneck size"));

    json opts;
    opts["manifest"] = manifest_path;
    opts["sizes"] = sizes;
    write_run_json(out, "bottleneck", opts);
    std::cout << csv.str();
    return 0;
}

int cmd_interpret(const std::string& method, const std::vector<std::string>& checkpoints,
                  const std::string& manifest_path, const std::string& out,
                  const std::string& sample_id, int ty, int tx, int tcls, int steps,
                  const std::string& layer, int k_max, double quantile, bool normalize) {
    fs::create_directories(out);
    const auto models = load_models(checkpoints);
    Model& model = *models.front();

    json opts;
    opts["method"] = method;
    opts["checkpoints"] = checkpoints;
    opts["manifest"] = manifest_path;

    if (method == "proto-proportions" || method == "inertia") {
        auto* ps = dynamic_cast<RamanSeg*>(&model);
        if (!ps) throw ConfigError(method + " needs a prototype model checkpoint");
        if (method == "inertia") {
            const Tensor<float>& protos = ps->prototypes_param().value;
            const int km = k_max > 0 ? k_max : protos.shape[0];
            const auto rows = prototype_inertia_curve(protos, km);
            std::ostringstream csv;
            csv << "k,inertia\n";
            std::vector<double> xs, ys;
            for (const auto& r : rows) {
                csv << r.k << "," << r.inertia << "\n";
                xs.push_back(r.k);
                ys.push_back(r.inertia);
            }
            write_text_file(out + "/inertia.csv", csv.str());
            write_text_file(out + "/inertia.svg", svg_line_chart(xs, ys, "prototype inertia"));
            opts["k_max"] = km;
        } else {
            if (manifest_path.empty()) throw ConfigError("proto-proportions needs --manifest");
            const auto manifest = load_manifest_resolved(manifest_path);
            const auto train_samples = load_split(manifest, "train");
            const auto table = prototype_class_proportions(*ps, train_samples, quantile);
            std::ostringstream csv;
            csv << "prototype,class,sample_id";
            for (std::size_t c = 0; c < table.front().class_proportions.size(); ++c)
                csv << ",p_class" << c;
            csv << ",majority_other\n";
            std::vector<std::vector<double>> bars;
            for (const auto& row : table) {
                csv << row.id << "," << row.class_id << "," << row.sample_id;
                for (double p : row.class_proportions) csv << "," << p;
                csv << "," << (row.majority_other_class ? 1 : 0) << "\n";
                bars.push_back(row.class_proportions);
            }
            write_text_file(out + "/proto_proportions.csv", csv.str());
            write_text_file(out + "/proto_proportions.svg",
                            svg_stacked_bars(bars, "class proportions per prototype region"));
            opts["quantile"] = quantile;
        }
    } else if (method == "ig" || method == "ablation" || method == "gradcam") {
        if (manifest_path.empty()) throw ConfigError(method + " needs --manifest");
        const auto manifest = load_manifest_resolved(manifest_path);
        const Sample sample = pick_sample(manifest, "test", sample_id);
        AttributionTarget target;
        target.y = ty >= 0 ? ty : sample.cube.height / 2;
        target.x = tx >= 0 ? tx : sample.cube.width / 2;
        target.cls = tcls;
        opts["sample"] = sample.sample_id;
        opts["target"] = {{"y", target.y}, {"x", target.x}, {"class", target.cls}};

        if (method == "ig") {
            Tensor<float> baseline(sample.cube.data.shape);
            const auto res =
                integrated_gradients(model, sample.cube.data, target, baseline, steps);
            std::ostringstream csv;
            csv << "channel,abs_attribution\n";
            std::vector<std::string> labels;
            for (std::size_t c = 0; c < res.channel.values.size(); ++c) {
                csv << c << "," << res.channel.values[c] << "\n";
                labels.push_back(std::to_string(c));
            }
            write_text_file(out + "/ig_channels.csv", csv.str());
            write_text_file(out + "/ig_channels.svg",
                            svg_bar_chart(labels, res.channel.values, "|IG| per channel"));
            Tensor<float> pixel({sample.cube.height, sample.cube.width});
            const std::size_t plane = pixel.data.size();
            for (std::size_t i = 0; i < res.attributions.data.size(); ++i)
                pixel.data[i % plane] += res.attributions.data[i];
            write_text_file(out + "/ig_map.svg", svg_heatmap(pixel, "IG attribution map"));
            json comp;
            comp["sum_attributions"] = res.completeness_lhs;
            comp["logit_delta"] = res.completeness_rhs;
            write_text_file(out + "/ig_completeness.json", comp.dump(2) + "\n");
            opts["steps"] = steps;
        } else if (method == "ablation") {
            const Tensor<std::uint8_t> region = mask_tensor(sample.mask);
            const auto attr = feature_ablation(model, sample.cube.data, region, target);
            std::ostringstream csv;
            csv << "channel,logit_drop\n";
            std::vector<std::string> labels;
            for (std::size_t c = 0; c < attr.values.size(); ++c) {
                csv << c << "," << attr.values[c] << "\n";
                labels.push_back(std::to_string(c));
            }
            write_text_file(out + "/ablation.csv", csv.str());
            write_text_file(out + "/ablation.svg",
                            svg_bar_chart(labels, attr.values, "logit drop per ablated channel"));
        } else {
            const Tensor<float> heat =
                gradcam_ensemble(raw_pointers(models), sample.cube.data, target, layer, normalize);
            write_text_file(out + "/gradcam.csv", csv_grid(heat));
            write_text_file(out + "/gradcam.svg", svg_heatmap(heat, "grad-cam: " + layer));
            opts["layer"] = layer;
            opts["normalize"] = normalize;
        }
    } else {
        throw ConfigError("unknown method: " + method);
    }

    write_run_json(out, "interpret", opts);
    return 0;
}

int cmd_sweep(const std::string& manifest_path, const std::string& out,
              const std::string& model_name, const std::string& config_path,
              const std::string& param, const std::vector<double>& values, long long seed,
              int epochs) {
    if (values.empty()) throw ConfigError("need at least one value");
    TrainConfig base = resolve_train_config(model_name, config_path, seed, epochs, 1);
    fs::create_directories(out);
    const DatasetManifest manifest = load_manifest_resolved(manifest_path);
    clamp_patch_size(base, manifest);
    const auto train_samples = load_split(manifest, "train");
    const auto val_samples = load_split(manifest, "val");

    const auto rows = grid_sweep(train_samples, val_samples, base, param, values);
    std::ostringstream csv;
    csv << "value,val_dice\n";
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        csv << r.value << "," << r.val_dice << "\n";
        xs.push_back(r.value);
        ys.push_back(r.val_dice);
    }
    write_text_file(out + "/sweep.csv", csv.str());
    write_text_file(out + "/sweep.svg", svg_line_chart(xs, ys, "val dice vs " + param));

    json opts;
    opts["manifest"] = manifest_path;
    opts["param"] = param;
    opts["values"] = values;
    opts["config"] = json::parse(base.to_json());
    write_run_json(out, "sweep", opts);
    std::cout << csv.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperspectral segmentation toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic dataset + manifest");
    std::string g_out;
    int g_samples = 20, g_size = 128;
    long long g_seed = 0;
    double g_overlap = 0.0, g_noise = 0.05, g_drift = 0.0;
    gen->add_option("--out", g_out, "output directory")->required();
    gen->add_option("--samples", g_samples, "sample count");
    gen->add_option("--size", g_size, "image height and width");
    gen->add_option("--seed", g_seed, "rng seed");
    gen->add_option("--overlap", g_overlap, "spectral overlap in [0,1]");
    gen->add_option("--noise", g_noise, "per-pixel noise sigma");
    gen->add_option("--drift", g_drift, "multiplicative column drift amplitude");

    // train
    auto* tr = app.add_subcommand("train", "train a model, write checkpoints + logs");
    std::string t_manifest, t_out, t_model = "ramanseg", t_config;
    long long t_seed = -1;
    int t_epochs = 0, t_folds = 0;
    tr->add_option("--manifest", t_manifest, "dataset manifest")->required();
    tr->add_option("--out", t_out, "output directory")->required();
    tr->add_option("--model", t_model, "unet | ramanseg | ramanseg-pf");
    tr->add_option("--config", t_config, "training config JSON overlay");
    tr->add_option("--seed", t_seed, "overrides the config seed");
    tr->add_option("--epochs", t_epochs, "overrides the config epoch count");
    tr->add_option("--folds", t_folds, "patient-grouped folds");

    // eval
    auto* ev = app.add_subcommand("eval", "holdout metrics for one or more checkpoints");
    std::vector<std::string> e_ckpts;
    std::string e_manifest, e_out, e_split = "test";
    int e_patch = 0, e_stride = 0;
    ev->add_option("--checkpoints", e_ckpts, "checkpoint files (ensemble if several)")
        ->required();
    ev->add_option("--manifest", e_manifest, "dataset manifest")->required();
    ev->add_option("--out", e_out, "output directory")->required();
    ev->add_option("--split", e_split, "manifest split to score");
    ev->add_option("--patch", e_patch, "tile size, 0 = whole image");
    ev->add_option("--stride", e_stride, "tile stride, 0 = patch");

    // bottleneck
    auto* bn = app.add_subcommand("bottleneck", "best-possible dice per bottleneck size");
    std::string b_manifest, b_out;
    std::vector<int> b_sizes = {32, 16, 8, 4};
    bn->add_option("--manifest", b_manifest, "dataset manifest")->required();
    bn->add_option("--out", b_out, "output directory")->required();
    bn->add_option("--sizes", b_sizes, "bottleneck sizes")->delimiter(',');

    // interpret
    auto* in = app.add_subcommand("interpret", "attribution and prototype reports");
    std::string i_method, i_manifest, i_out, i_sample, i_layer = "backbone.out";
    std::vector<std::string> i_ckpts;
    int i_ty = -1, i_tx = -1, i_tcls = 1, i_steps = 64, i_kmax = 0;
    double i_quantile = 0.95;
    bool i_normalize = false;
    in->add_option("--method", i_method,
                   "proto-proportions | inertia | ig | ablation | gradcam")
        ->required();
    in->add_option("--checkpoints", i_ckpts, "checkpoint files")->required();
    in->add_option("--manifest", i_manifest, "dataset manifest");
    in->add_option("--out", i_out, "output directory")->required();
    in->add_option("--sample", i_sample, "sample id, default: first test sample");
    in->add_option("--target-y", i_ty, "target pixel row");
    in->add_option("--target-x", i_tx, "target pixel column");
    in->add_option("--target-class", i_tcls, "target class logit");
    in->add_option("--steps", i_steps, "integration steps");
    in->add_option("--layer", i_layer, "grad-cam layer name");
    in->add_option("--k-max", i_kmax, "inertia curve upper k");
    in->add_option("--quantile", i_quantile, "activation quantile for region audit");
    in->add_flag("--normalize", i_normalize, "max-normalize grad-cam maps before averaging");

    // sweep
    auto* sw = app.add_subcommand("sweep", "grid sweep of one hyperparameter");
    std::string s_manifest, s_out, s_model = "ramanseg", s_config,
                s_param = "prototypes_per_class";
    std::vector<double> s_values;
    long long s_seed = -1;
    int s_epochs = 0;
    sw->add_option("--manifest", s_manifest, "dataset manifest")->required();
    sw->add_option("--out", s_out, "output directory")->required();
    sw->add_option("--model", s_model, "unet | ramanseg | ramanseg-pf");
    sw->add_option("--config", s_config, "training config JSON overlay");
    sw->add_option("--param", s_param, "parameter to sweep");
    sw->add_option("--values", s_values, "grid values")->delimiter(',')->required();
    sw->add_option("--seed", s_seed, "overrides the config seed");
    sw->add_option("--epochs", s_epochs, "overrides the config epoch count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_generate(g_out, g_samples, g_size, g_seed, g_overlap, g_noise, g_drift);
        if (tr->parsed())
            return cmd_train(t_manifest, t_out, t_model, t_config, t_seed, t_epochs, t_folds);
        if (ev->parsed()) return cmd_eval(e_ckpts, e_manifest, e_out, e_split, e_patch, e_stride);
        if (bn->parsed()) return cmd_bottleneck(b_manifest, b_out, b_sizes);
        if (in->parsed())
            return cmd_interpret(i_method, i_ckpts, i_manifest, i_out, i_sample, i_ty, i_tx,
                                 i_tcls, i_steps, i_layer, i_kmax, i_quantile, i_normalize);
        if (sw->parsed())
            return cmd_sweep(s_manifest, s_out, s_model, s_config, s_param, s_values, s_seed,
                             s_epochs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
