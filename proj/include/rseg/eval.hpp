#ifndef RSEG_EVAL_HPP
#define RSEG_EVAL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rseg/hsdata.hpp"
#include "rseg/models.hpp"
#include "rseg/tensor.hpp"

namespace rseg {

struct ConfusionCounts {
    long long tp = 0, fp = 0, tn = 0, fn = 0;
};

ConfusionCounts confusion_counts(const Tensor<std::uint8_t>& pred,
                                 const Tensor<std::uint8_t>& truth);

// 2|P∩T| / (|P|+|T|); both masks empty -> 1.0 by convention.
double dice(const Tensor<std::uint8_t>& pred, const Tensor<std::uint8_t>& truth);

// Sensitivity tp/(tp+fn), specificity tn/(tn+fp); nullopt when undefined.
std::pair<std::optional<double>, std::optional<double>> sensitivity_specificity(
    const ConfusionCounts& c);

struct SampleMetrics {
    std::string sample_id;
    double dice = 0.0;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
};

struct EvalReport {
    std::vector<SampleMetrics> per_sample;
    Aggregate dice;
    Aggregate sensitivity;
    Aggregate specificity;

    std::string to_json() const;
    std::string to_csv() const;
};

Aggregate aggregate(const std::vector<double>& values);

// Full-image ensemble inference: edge-anchored tiling, overlapping tiles
// averaged in probability space. patch <= 0 means single-shot on the whole
// image.
Tensor<float> stitched_probabilities(const std::vector<Model*>& models,
                                     const Tensor<float>& cube, int patch, int stride);

Tensor<std::uint8_t> argmax_mask(const Tensor<float>& probs);

Tensor<std::uint8_t> mask_tensor(const MaskRaster& mask);

// Per-sample metrics over preloaded (already preprocessed) samples.
EvalReport evaluate_samples(const std::vector<Model*>& models,
                            const std::vector<Sample>& samples, int patch, int stride);

EvalReport evaluate_holdout(const std::vector<Model*>& models, const DatasetManifest& manifest,
                            int patch, int stride, const PreprocessOptions& pre = {});

// Best-possible-bottleneck experiment: average-pool the mask to size x size,
// binarize at 0.5 (ties to foreground), bilinearly upsample back, binarize,
// Dice against the original. Returns mean Dice per requested size; the
// baseline (original size) row is the caller's first entry when requested.
struct BottleneckRow {
    int size = 0;
    double mean_dice = 0.0;
};

double bottleneck_dice(const Tensor<std::uint8_t>& mask, int size);
std::vector<BottleneckRow> bottleneck_experiment(const std::vector<Tensor<std::uint8_t>>& masks,
                                                 const std::vector<int>& sizes);

}  // namespace rseg

#endif
