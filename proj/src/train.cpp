#include "rseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rseg/eval.hpp"
#include "rseg/prototypes.hpp"
#include "rseg/resample.hpp"

namespace rseg {

using json = nlohmann::json;

std::string TrainConfig::to_json() const {
    json j;
    j["model"] = json::parse(model.to_json());
    j["loss"] = {{"alpha", loss.alpha}, {"beta", loss.beta}, {"gamma", loss.gamma}};
    j["learning_rate"] = learning_rate;
    j["weight_decay"] = weight_decay;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["patch_size"] = patch_size;
    j["patch_stride"] = patch_stride;
    j["augment_flip_p"] = augment_flip_p;
    j["seed"] = seed;
    j["folds"] = folds;
    j["projection_epoch_fraction"] = projection_epoch_fraction;
    j["final_phase_fraction"] = final_phase_fraction;
    j["early_stop_patience"] = early_stop_patience;
    j["overlap_ordered_pairs"] = overlap_ordered_pairs;
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    TrainConfig c;
    if (j.contains("model")) c.model = ModelConfig::from_json(j["model"].dump());
    if (j.contains("loss")) {
        c.loss.alpha = j["loss"].value("alpha", c.loss.alpha);
        c.loss.beta = j["loss"].value("beta", c.loss.beta);
        c.loss.gamma = j["loss"].value("gamma", c.loss.gamma);
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.patch_stride = j.value("patch_stride", c.patch_stride);
    c.augment_flip_p = j.value("augment_flip_p", c.augment_flip_p);
    c.seed = j.value("seed", c.seed);
    c.folds = j.value("folds", c.folds);
    c.projection_epoch_fraction = j.value("projection_epoch_fraction", c.projection_epoch_fraction);
    c.final_phase_fraction = j.value("final_phase_fraction", c.final_phase_fraction);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.overlap_ordered_pairs = j.value("overlap_ordered_pairs", c.overlap_ordered_pairs);
    return c;
}

TrainConfig TrainConfig::defaults_for(ModelVariant variant, int in_channels) {
    TrainConfig c;
    switch (variant) {
        case ModelVariant::unet:
            c.model = ModelConfig::unet_defaults(in_channels);
            c.learning_rate = 1e-4;
            c.weight_decay = 1e-3;
            break;
        case ModelVariant::ramanseg:
            c.model = ModelConfig::ramanseg_defaults(in_channels);
            break;
        case ModelVariant::ramanseg_projection_free:
            c.model = ModelConfig::projection_free_defaults(in_channels);
            break;
    }
    return c;
}

void hflip_cube(Tensor<float>& cube) {
    const int c = cube.shape[0], h = cube.shape[1], w = cube.shape[2];
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w / 2; ++x)
                std::swap(cube.at3(ci, y, x), cube.at3(ci, y, w - 1 - x));
}

void hflip_mask(Tensor<std::uint8_t>& mask) {
    const int h = mask.shape[0], w = mask.shape[1];
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w / 2; ++x) std::swap(mask.at2(y, x), mask.at2(y, w - 1 - x));
}

bool augment(Tensor<float>& cube, Tensor<std::uint8_t>& mask, double flip_p,
             std::mt19937_64& rng) {
    if (cube.shape[1] != mask.shape[0] || cube.shape[2] != mask.shape[1])
        throw std::invalid_argument("augment: cube/mask shape mismatch");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) >= flip_p) return false;
    hflip_cube(cube);
    hflip_mask(mask);
    return true;
}

std::string TrainResult::step_csv() const {
    std::ostringstream os;
    os << "step,L,L_CE,L_Dice,L_A,L_L1\n";
    for (const auto& r : steps)
        os << r.step << "," << r.total << "," << r.ce << "," << r.dice << "," << r.overlap << ","
           << r.l1 << "\n";
    return os.str();
}

std::string TrainResult::epoch_csv() const {
    std::ostringstream os;
    os << "epoch,val_dice\n";
    for (const auto& r : epochs) os << r.epoch << "," << r.val_dice << "\n";
    return os.str();
}

namespace {

// AdamW with decoupled weight decay.
struct AdamW {
    double lr, wd;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;
    std::vector<Tensor<float>> m, v;

    void init(const std::vector<Param>& params) {
        for (const auto& p : params) {
            m.emplace_back(p.value.shape);
            v.emplace_back(p.value.shape);
        }
    }

    void step(std::vector<Param>& params, const std::vector<Tensor<float>>& grads,
              const std::vector<bool>& update_mask) {
        t++;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t p = 0; p < params.size(); ++p) {
            if (!update_mask[p]) continue;
            auto& val = params[p].value.data;
            auto& mp = m[p].data;
            auto& vp = v[p].data;
            const auto& g = grads[p].data;
            for (std::size_t i = 0; i < val.size(); ++i) {
                const double gi = g[i];
                mp[i] = static_cast<float>(beta1 * mp[i] + (1.0 - beta1) * gi);
                vp[i] = static_cast<float>(beta2 * vp[i] + (1.0 - beta2) * gi * gi);
                const double mhat = mp[i] / bc1;
                const double vhat = vp[i] / bc2;
                double x = val[i];
                x -= lr * (mhat / (std::sqrt(vhat) + eps));
                x -= lr * wd * x;
                val[i] = static_cast<float>(x);
            }
        }
    }
};

struct TrainPatch {
    Tensor<float> cube;
    Tensor<std::uint8_t> mask;
};

double mean_val_dice(Model& model, const std::vector<Sample>& val_samples,
                     const TrainConfig& cfg) {
    std::vector<Model*> models{&model};
    const int stride = cfg.patch_stride > 0 ? cfg.patch_stride : cfg.patch_size;
    const EvalReport rep = evaluate_samples(models, val_samples, cfg.patch_size, stride);
    return rep.dice.mean;
}

std::unique_ptr<Model> clone_model(const Model& model) {
    auto copy = make_model(model.config(), 0);
    for (std::size_t i = 0; i < model.params().size(); ++i)
        copy->params()[i].value = model.params()[i].value;
    return copy;
}

}  // namespace

TrainResult train_model(const std::vector<Sample>& train_samples,
                        const std::vector<Sample>& val_samples, const TrainConfig& cfg) {
    if (train_samples.empty() || val_samples.empty())
        throw std::invalid_argument("train_model: need non-empty train and val sets");
    if (cfg.learning_rate < 0) throw std::invalid_argument("train_model: learning_rate >= 0");
    if (cfg.epochs < 1) throw std::invalid_argument("train_model: epochs >= 1");

    const bool is_unet = cfg.model.variant == ModelVariant::unet;
    const bool is_pf = cfg.model.variant == ModelVariant::ramanseg_projection_free;
    const bool uses_projection = cfg.model.variant == ModelVariant::ramanseg;

    auto model = make_model(cfg.model, cfg.seed);
    auto& params = model->params();

    const int stride = cfg.patch_stride > 0 ? cfg.patch_stride : cfg.patch_size;
    std::vector<TrainPatch> patches;
    for (const auto& s : train_samples)
        for (auto& pp : extract_patches(s, cfg.patch_size, stride))
            patches.push_back({std::move(pp.cube), std::move(pp.mask)});
    if (patches.empty()) throw std::invalid_argument("train_model: no training patches");

    AdamW opt;
    opt.lr = cfg.learning_rate;
    opt.wd = cfg.weight_decay;
    opt.init(params);

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainResult result;
    result.best_model = clone_model(*model);
    result.best_val_dice = mean_val_dice(*model, val_samples, cfg);
    result.best_epoch = -1;

    const int projection_epoch =
        uses_projection ? static_cast<int>(cfg.projection_epoch_fraction * cfg.epochs) : -1;
    const int final_phase_start =
        uses_projection ? cfg.epochs - std::max(1, static_cast<int>(cfg.final_phase_fraction *
                                                                    cfg.epochs))
                        : cfg.epochs + 1;

    const int num_classes = cfg.model.num_classes;
    const auto proto_classes =
        is_unet ? std::vector<int>{}
                : static_cast<RamanSeg*>(model.get())->prototype_classes();

    long long step = 0;
    int epochs_since_improvement = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch == projection_epoch && uses_projection)
            project_prototypes(*static_cast<RamanSeg*>(model.get()), train_samples);
        const bool last_layer_only = uses_projection && epoch >= final_phase_start;

        std::vector<std::size_t> order(patches.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);

        bool nan_abort = false;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Tensor<float>> grad_acc;
            for (const auto& p : params) grad_acc.emplace_back(p.value.shape);
            TrainLogRow row;
            row.step = step;
            for (std::size_t bi = start; bi < end; ++bi) {
                Tensor<float> cube = patches[order[bi]].cube;
                Tensor<std::uint8_t> mask = patches[order[bi]].mask;
                augment(cube, mask, cfg.augment_flip_p, rng);

                ad::Tape<float> tape;
                auto art = model->forward(tape, cube, /*training=*/true, rng);
                ad::Var<float> loss_var;
                double ce_v = 0, dice_v = 0, la_v = 0, l1_v = 0;
                try {
                    if (is_unet) {
                        const auto onehot = onehot_labels<float>(mask, num_classes);
                        auto dl = losses::dice_loss(art.full_probs, onehot);
                        dice_v = dl.value().data[0];
                        if (!std::isfinite(dice_v))
                            throw std::runtime_error("non-finite loss");
                        loss_var = dl;
                    } else {
                        const int hd = art.latent_logits.shape()[1];
                        const int wdim = art.latent_logits.shape()[2];
                        const auto ds = nn_downsample_labels(mask, hd, wdim);
                        auto ce = losses::cross_entropy(art.latent_logits, labels_to_int(ds));
                        ce_v = ce.value().data[0];
                        auto ce_part = ce;
                        if (is_pf) {
                            auto probs = ad::softmax_channels(art.latent_logits);
                            auto dl = losses::dice_loss(probs, onehot_labels<float>(ds, num_classes));
                            dice_v = dl.value().data[0];
                            ce_part = ad::add(ce, dl);
                        }
                        auto la = losses::activation_overlap(art.similarity, proto_classes,
                                                             num_classes);
                        la_v = la.value().data[0];
                        ad::Var<float> l1;
                        {
                            // the per-point fully connected layer is the L1 target
                            std::size_t fi = 0;
                            for (; fi < params.size(); ++fi)
                                if (params[fi].final_layer) break;
                            l1 = losses::l1_penalty(
                                ad::Var<float>{&tape, art.param_ids[fi]});
                        }
                        l1_v = l1.value().data[0];
                        loss_var = losses::combined_objective(ce_part, la, l1, cfg.loss);
                    }
                } catch (const std::runtime_error& e) {
                    std::cerr << "train_model: aborting on non-finite loss at step " << step
                              << ": " << e.what() << "\n";
                    nan_abort = true;
                    break;
                }
                const double total = loss_var.value().data[0];
                if (!std::isfinite(total)) {
                    std::cerr << "train_model: aborting on non-finite loss at step " << step
                              << "\n";
                    nan_abort = true;
                    break;
                }
                row.total += total;
                row.ce += ce_v;
                row.dice += dice_v;
                row.overlap += la_v;
                row.l1 += l1_v;

                tape.backward(loss_var.id);
                for (std::size_t p = 0; p < params.size(); ++p) {
                    const auto& g = tape.grad(art.param_ids[p]);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        grad_acc[p].data[i] += g.data[i];
                }
            }
            if (nan_abort) break;
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : grad_acc)
                for (auto& v : g.data) v = static_cast<float>(v * inv);
            row.total *= inv;
            row.ce *= inv;
            row.dice *= inv;
            row.overlap *= inv;
            row.l1 *= inv;
            result.steps.push_back(row);

            std::vector<bool> update_mask(params.size(), !last_layer_only);
            if (last_layer_only)
                for (std::size_t p = 0; p < params.size(); ++p)
                    if (params[p].final_layer) update_mask[p] = true;
            opt.step(params, grad_acc, update_mask);
            step++;
        }
        if (nan_abort) {
            result.aborted_on_nan = true;
            break;
        }

        const double vd = mean_val_dice(*model, val_samples, cfg);
        result.epochs.push_back({epoch, vd});
        if (vd > result.best_val_dice) {
            result.best_val_dice = vd;
            result.best_epoch = epoch;
            result.best_model = clone_model(*model);
            epochs_since_improvement = 0;
        } else {
            epochs_since_improvement++;
            if (epochs_since_improvement >= cfg.early_stop_patience) break;
        }
    }
    return result;
}

std::vector<std::vector<std::string>> kfold_patient_partition(const std::vector<Sample>& pool,
                                                              int k, std::uint64_t seed) {
    std::vector<std::string> patients;
    std::set<std::string> seen;
    for (const auto& s : pool)
        if (seen.insert(s.patient_id).second) patients.push_back(s.patient_id);
    if (static_cast<int>(patients.size()) < k)
        throw std::invalid_argument("train_kfold: fewer patients than folds");
    std::sort(patients.begin(), patients.end());
    std::mt19937_64 rng(seed ^ 0xabcdef12345ULL);
    std::shuffle(patients.begin(), patients.end(), rng);
    std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < patients.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].push_back(patients[i]);
    return folds;
}

std::vector<TrainResult> train_kfold(const std::vector<Sample>& pool, const TrainConfig& cfg,
                                     int k) {
    if (k < 1) throw std::invalid_argument("train_kfold: k >= 1");
    if (k == 1) {
        // degenerate case: split the pool by patient 80/20 for validation
        auto folds = kfold_patient_partition(pool, std::max(2, 2), cfg.seed);
        std::vector<TrainResult> out;
        std::set<std::string> val_pat(folds[0].begin(), folds[0].end());
        std::vector<Sample> tr, va;
        for (const auto& s : pool)
            (val_pat.count(s.patient_id) ? va : tr).push_back(s);
        out.push_back(train_model(tr, va, cfg));
        return out;
    }
    const auto folds = kfold_patient_partition(pool, k, cfg.seed);
    std::vector<TrainResult> out;
    for (int f = 0; f < k; ++f) {
        std::set<std::string> val_pat(folds[static_cast<std::size_t>(f)].begin(),
                                      folds[static_cast<std::size_t>(f)].end());
        std::vector<Sample> tr, va;
        for (const auto& s : pool)
            (val_pat.count(s.patient_id) ? va : tr).push_back(s);
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = cfg.seed + static_cast<std::uint64_t>(f);
        out.push_back(train_model(tr, va, fold_cfg));
    }
    return out;
}

std::vector<SweepRow> grid_sweep(const std::vector<Sample>& train_samples,
                                 const std::vector<Sample>& val_samples, const TrainConfig& base,
                                 const std::string& param, const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("grid_sweep: empty grid");
    std::vector<SweepRow> rows;
    for (double v : values) {
        TrainConfig cfg = base;
        if (param == "prototypes_per_class")
            cfg.model.prototypes_per_class = static_cast<int>(v);
        else if (param == "addon_channels")
            cfg.model.addon_channels = static_cast<int>(v);
        else if (param == "dropout_p")
            cfg.model.dropout_p = v;
        else if (param == "learning_rate")
            cfg.learning_rate = v;
        else if (param == "beta")
            cfg.loss.beta = v;
        else
            throw std::invalid_argument("grid_sweep: unknown parameter " + param);
        const TrainResult res = train_model(train_samples, val_samples, cfg);
        rows.push_back({v, res.best_val_dice});
    }
    return rows;
}

}  // namespace rseg
