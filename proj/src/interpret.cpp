#include "rseg/interpret.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rseg/kmeans.hpp"
#include "rseg/prototypes.hpp"

namespace rseg {

namespace {

std::size_t target_index(const Tensor<float>& logits, const AttributionTarget& t) {
    const int c = logits.shape[0], h = logits.shape[1], w = logits.shape[2];
    if (t.cls < 0 || t.cls >= c || t.y < 0 || t.y >= h || t.x < 0 || t.x >= w)
        throw std::invalid_argument("attribution target out of range");
    return (static_cast<std::size_t>(t.cls) * h + t.y) * w + t.x;
}

double target_logit(Model& model, const Tensor<float>& input, const AttributionTarget& t) {
    ad::Tape<float> tape;
    std::mt19937_64 rng(0);
    auto art = model.forward(tape, input, false, rng);
    return art.full_logits.value().data[target_index(art.full_logits.value(), t)];
}

}  // namespace

IntegratedGradientsResult integrated_gradients(Model& model, const Tensor<float>& input,
                                               const AttributionTarget& target,
                                               const Tensor<float>& baseline, int steps) {
    if (steps < 2) throw std::invalid_argument("integrated_gradients: steps >= 2");
    if (!same_shape(baseline.shape, input.shape))
        throw std::invalid_argument("integrated_gradients: baseline shape mismatch");

    std::vector<double> grad_sum(input.data.size(), 0.0);
    std::mt19937_64 rng(0);
    // Composite two-point Gauss-Legendre along the path (equal weights, so the
    // average below is unchanged); falls back to midpoints for odd step counts.
    const bool gauss = (steps % 2 == 0);
    const double gl_lo = 0.5 - 0.5 / std::sqrt(3.0);
    const double gl_hi = 0.5 + 0.5 / std::sqrt(3.0);
    for (int s = 0; s < steps; ++s) {
        const double offset = gauss ? (s % 2 == 0 ? gl_lo : gl_hi) : 0.5;
        const int interval = gauss ? s / 2 : s;
        const int intervals = gauss ? steps / 2 : steps;
        const float alpha =
            static_cast<float>((static_cast<double>(interval) + offset) / intervals);
        Tensor<float> point = baseline;
        for (std::size_t i = 0; i < point.data.size(); ++i)
            point.data[i] += alpha * (input.data[i] - baseline.data[i]);
        ad::Tape<float> tape;
        auto art = model.forward(tape, point, false, rng);
        auto scalar = ad::pick(art.full_logits, target_index(art.full_logits.value(), target));
        tape.backward(scalar.id);
        const auto& g = art.input.grad();
        for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += g.data[i];
    }

    IntegratedGradientsResult res;
    res.attributions = Tensor<float>(input.shape);
    double total = 0.0;
    for (std::size_t i = 0; i < input.data.size(); ++i) {
        const double a = static_cast<double>(input.data[i] - baseline.data[i]) * grad_sum[i] /
                         static_cast<double>(steps);
        res.attributions.data[i] = static_cast<float>(a);
        total += a;
    }
    res.completeness_lhs = total;
    res.completeness_rhs =
        target_logit(model, input, target) - target_logit(model, baseline, target);

    const int c = input.shape[0];
    const std::size_t plane = input.data.size() / static_cast<std::size_t>(c);
    res.channel.values.assign(static_cast<std::size_t>(c), 0.0);
    for (int ci = 0; ci < c; ++ci)
        for (std::size_t i = 0; i < plane; ++i)
            res.channel.values[static_cast<std::size_t>(ci)] +=
                std::abs(static_cast<double>(res.attributions.data[ci * plane + i]));
    return res;
}

ChannelAttribution feature_ablation(Model& model, const Tensor<float>& input,
                                    const Tensor<std::uint8_t>& region,
                                    const AttributionTarget& target, float baseline_value) {
    if (region.shape != std::vector<int>{input.shape[1], input.shape[2]})
        throw std::invalid_argument("feature_ablation: region shape mismatch");
    bool any = false;
    for (auto v : region.data) any |= (v != 0);
    if (!any) throw std::invalid_argument("feature_ablation: empty region");

    const double original = target_logit(model, input, target);
    const int c = input.shape[0];
    const std::size_t plane = input.data.size() / static_cast<std::size_t>(c);
    ChannelAttribution attr;
    for (int ci = 0; ci < c; ++ci) {
        Tensor<float> ablated = input;
        for (std::size_t i = 0; i < plane; ++i)
            if (region.data[i]) ablated.data[ci * plane + i] = baseline_value;
        attr.values.push_back(original - target_logit(model, ablated, target));
    }
    return attr;
}

Tensor<float> gradcam(Model& model, const Tensor<float>& input, const AttributionTarget& target,
                      const std::string& layer) {
    ad::Tape<float> tape;
    std::mt19937_64 rng(0);
    auto art = model.forward(tape, input, false, rng);
    ad::Var<float> act;
    bool found = false;
    for (const auto& [name, var] : art.activations)
        if (name == layer) {
            act = var;
            found = true;
        }
    if (!found) {
        std::ostringstream os;
        os << "gradcam: unknown layer '" << layer << "'; available:";
        for (const auto& [name, var] : art.activations) os << " " << name;
        throw std::invalid_argument(os.str());
    }
    auto scalar = ad::pick(art.full_logits, target_index(art.full_logits.value(), target));
    tape.backward(scalar.id);

    const auto& a = act.value();
    const auto& g = act.grad();
    const int c = a.shape[0], h = a.shape[1], w = a.shape[2];
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor<float> heat({h, w});
    for (int ci = 0; ci < c; ++ci) {
        double wsum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) wsum += g.data[ci * plane + i];
        const float weight = static_cast<float>(wsum / static_cast<double>(plane));
        for (std::size_t i = 0; i < plane; ++i) heat.data[i] += weight * a.data[ci * plane + i];
    }
    for (auto& v : heat.data) v = std::max(v, 0.0f);  // rectification
    return heat;
}

Tensor<float> gradcam_ensemble(const std::vector<Model*>& models, const Tensor<float>& input,
                               const AttributionTarget& target, const std::string& layer,
                               bool normalize) {
    if (models.empty()) throw std::invalid_argument("gradcam_ensemble: no models");
    Tensor<float> acc;
    for (std::size_t i = 0; i < models.size(); ++i) {
        Tensor<float> m = gradcam(*models[i], input, target, layer);
        if (normalize) {
            float mx = 0.0f;
            for (float v : m.data) mx = std::max(mx, v);
            if (mx > 0)
                for (auto& v : m.data) v /= mx;
        }
        if (i == 0)
            acc = std::move(m);
        else {
            if (!same_shape(acc.shape, m.shape))
                throw std::invalid_argument("gradcam_ensemble: map shape mismatch");
            for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += m.data[k];
        }
    }
    const float inv = 1.0f / static_cast<float>(models.size());
    for (auto& v : acc.data) v *= inv;
    return acc;
}

std::vector<PrototypeAudit> prototype_class_proportions(RamanSeg& model,
                                                        const std::vector<Sample>& train_samples,
                                                        double activation_quantile) {
    const int m = model.config().total_prototypes();
    const auto classes = model.prototype_classes();
    std::vector<PrototypeAudit> table;
    for (int p = 0; p < m; ++p) {
        const PrototypeRegion region =
            prototype_region(model, p, train_samples, activation_quantile);
        PrototypeAudit row;
        row.id = p;
        row.class_id = classes[static_cast<std::size_t>(p)];
        row.sample_id = region.sample_id;
        row.class_proportions = region.class_proportions;
        double own = region.class_proportions[static_cast<std::size_t>(row.class_id)];
        row.majority_other_class = own < 0.5;
        table.push_back(std::move(row));
    }
    return table;
}

std::vector<InertiaRow> prototype_inertia_curve(const Tensor<float>& prototypes, int k_max,
                                                std::uint64_t seed, int restarts) {
    const int m = prototypes.shape[0];
    if (k_max < 1 || k_max > m)
        throw std::invalid_argument("prototype_inertia_curve: k_max out of range");
    const std::size_t block = prototypes.data.size() / static_cast<std::size_t>(m);
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        pts[static_cast<std::size_t>(i)].assign(prototypes.data.begin() + i * block,
                                                prototypes.data.begin() + (i + 1) * block);
    const std::vector<double> curve = kmeans_inertia_curve(pts, k_max, restarts, seed);
    std::vector<InertiaRow> rows;
    for (int k = 1; k <= k_max; ++k)
        rows.push_back({k, curve[static_cast<std::size_t>(k - 1)]});
    return rows;
}

}  // namespace rseg
