#ifndef RSEG_TRAIN_HPP
#define RSEG_TRAIN_HPP

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rseg/hsdata.hpp"
#include "rseg/losses.hpp"
#include "rseg/models.hpp"

namespace rseg {

struct TrainConfig {
    ModelConfig model;
    LossWeights loss;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    int epochs = 100;
    int batch_size = 4;
    int patch_size = 128;
    int patch_stride = 0;  // 0 -> patch_size
    double augment_flip_p = 0.5;
    std::uint64_t seed = 0;
    int folds = 1;
    double projection_epoch_fraction = 0.5;
    double final_phase_fraction = 0.1;  // last-layer-only tail (L1 active)
    int early_stop_patience = 20;
    bool overlap_ordered_pairs = false;  // records the pair convention; i<j when false

    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);

    // per-variant recipes: unet lr 1e-4 / wd 1e-3, ramanseg lr 1e-3 / wd 1e-4
    static TrainConfig defaults_for(ModelVariant variant, int in_channels = 24);
};

// Horizontal flip with probability flip_p; cube and mask are mirrored
// together. Deterministic in the RNG state.
void hflip_cube(Tensor<float>& cube);
void hflip_mask(Tensor<std::uint8_t>& mask);
bool augment(Tensor<float>& cube, Tensor<std::uint8_t>& mask, double flip_p,
             std::mt19937_64& rng);

struct TrainLogRow {
    long long step = 0;
    double total = 0.0, ce = 0.0, dice = 0.0, overlap = 0.0, l1 = 0.0;
};

struct EpochLogRow {
    int epoch = 0;
    double val_dice = 0.0;
};

struct TrainResult {
    std::unique_ptr<Model> best_model;
    double best_val_dice = 0.0;
    int best_epoch = -1;
    std::vector<TrainLogRow> steps;
    std::vector<EpochLogRow> epochs;
    bool aborted_on_nan = false;

    std::string step_csv() const;
    std::string epoch_csv() const;
};

// Mini-batch AdamW training (decoupled weight decay); deterministic given
// the config seed. Samples must already be preprocessed.
TrainResult train_model(const std::vector<Sample>& train_samples,
                        const std::vector<Sample>& val_samples, const TrainConfig& config);

// Patient-grouped k-fold over the given pool; returns one result per fold.
std::vector<TrainResult> train_kfold(const std::vector<Sample>& pool, const TrainConfig& config,
                                     int k);

// Deterministic patient partition used by train_kfold; exposed for tests.
std::vector<std::vector<std::string>> kfold_patient_partition(
    const std::vector<Sample>& pool, int k, std::uint64_t seed);

struct SweepRow {
    double value = 0.0;
    double val_dice = 0.0;
};

// One training run per grid value of the named parameter
// (prototypes_per_class, addon_channels, dropout_p, learning_rate, beta).
std::vector<SweepRow> grid_sweep(const std::vector<Sample>& train_samples,
                                 const std::vector<Sample>& val_samples,
                                 const TrainConfig& base, const std::string& param,
                                 const std::vector<double>& values);

}  // namespace rseg

#endif
