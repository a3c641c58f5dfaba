#ifndef RSEG_INTERPRET_HPP
#define RSEG_INTERPRET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rseg/hsdata.hpp"
#include "rseg/models.hpp"
#include "rseg/tensor.hpp"

namespace rseg {

struct AttributionTarget {
    int y = 0;
    int x = 0;
    int cls = 1;
};

struct ChannelAttribution {
    std::vector<double> values;  // length == input channel count
};

struct IntegratedGradientsResult {
    Tensor<float> attributions;  // (C, H, W), element-wise
    ChannelAttribution channel;  // sum of |attribution| per channel
    double completeness_lhs = 0.0;  // sum of attributions
    double completeness_rhs = 0.0;  // f(input) - f(baseline)
};

// Riemann-midpoint Integrated Gradients along the straight path from
// baseline to input, for the target pixel's class logit.
IntegratedGradientsResult integrated_gradients(Model& model, const Tensor<float>& input,
                                               const AttributionTarget& target,
                                               const Tensor<float>& baseline, int steps);

// Per-channel logit change (original - ablated) when the region's values in
// that channel are replaced by baseline_value.
ChannelAttribution feature_ablation(Model& model, const Tensor<float>& input,
                                    const Tensor<std::uint8_t>& region,
                                    const AttributionTarget& target, float baseline_value = 0.0f);

// Layer Grad-CAM: rectified channel-weighted activation sum with weights from
// the spatial mean of the target-logit gradient.
Tensor<float> gradcam(Model& model, const Tensor<float>& input, const AttributionTarget& target,
                      const std::string& layer);

// Fold ensemble: raw per-model maps averaged (optionally max-normalized
// before averaging).
Tensor<float> gradcam_ensemble(const std::vector<Model*>& models, const Tensor<float>& input,
                               const AttributionTarget& target, const std::string& layer,
                               bool normalize = false);

struct PrototypeAudit {
    int id = 0;
    int class_id = 0;
    std::string sample_id;
    std::vector<double> class_proportions;
    bool majority_other_class = false;
};

// Region audit for every prototype: where it fires and what lives there.
std::vector<PrototypeAudit> prototype_class_proportions(RamanSeg& model,
                                                        const std::vector<Sample>& train_samples,
                                                        double activation_quantile = 0.95);

struct InertiaRow {
    int k = 0;
    double inertia = 0.0;
};

// k-means inertia over flattened prototype vectors for k = 1..k_max,
// non-increasing by nested initialization.
std::vector<InertiaRow> prototype_inertia_curve(const Tensor<float>& prototypes, int k_max,
                                                std::uint64_t seed = 0, int restarts = 10);

}  // namespace rseg

#endif
