#include "rseg/eval.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rseg/resample.hpp"

namespace rseg {

using json = nlohmann::json;

ConfusionCounts confusion_counts(const Tensor<std::uint8_t>& pred,
                                 const Tensor<std::uint8_t>& truth) {
    if (!same_shape(pred.shape, truth.shape))
        throw std::invalid_argument("confusion_counts: shape mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0, t = truth.data[i] != 0;
        if (p && t)
            c.tp++;
        else if (p && !t)
            c.fp++;
        else if (!p && t)
            c.fn++;
        else
            c.tn++;
    }
    return c;
}

double dice(const Tensor<std::uint8_t>& pred, const Tensor<std::uint8_t>& truth) {
    const ConfusionCounts c = confusion_counts(pred, truth);
    const long long denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;  // both empty
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::pair<std::optional<double>, std::optional<double>> sensitivity_specificity(
    const ConfusionCounts& c) {
    std::optional<double> sens, spec;
    if (c.tp + c.fn > 0) sens = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) spec = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return {sens, spec};
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    return a;
}

Tensor<std::uint8_t> mask_tensor(const MaskRaster& mask) {
    Tensor<std::uint8_t> t({mask.height, mask.width});
    t.data.assign(mask.labels.begin(), mask.labels.end());
    return t;
}

Tensor<std::uint8_t> argmax_mask(const Tensor<float>& probs) {
    const int c = probs.shape[0], h = probs.shape[1], w = probs.shape[2];
    Tensor<std::uint8_t> out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int best = 0;
            float bv = probs.at3(0, y, x);
            for (int ci = 1; ci < c; ++ci)
                if (probs.at3(ci, y, x) > bv) {
                    bv = probs.at3(ci, y, x);
                    best = ci;
                }
            out.at2(y, x) = static_cast<std::uint8_t>(best);
        }
    return out;
}

Tensor<float> stitched_probabilities(const std::vector<Model*>& models,
                                     const Tensor<float>& cube, int patch, int stride) {
    if (models.empty()) throw std::invalid_argument("stitched_probabilities: no models");
    const int h = cube.shape[1], w = cube.shape[2];
    if (patch <= 0 || (patch >= h && patch >= w)) {
        return ensemble_predict(models, cube);
    }
    const int num_classes = models[0]->config().num_classes;
    Tensor<float> acc({num_classes, h, w});
    Tensor<float> weight({1, h, w});
    for (auto [y, x] : patch_anchors(h, w, patch, stride)) {
        const Tensor<float> tile = crop_cube(cube, y, x, patch);
        const Tensor<float> probs = ensemble_predict(models, tile);
        for (int c = 0; c < num_classes; ++c)
            for (int py = 0; py < patch; ++py)
                for (int px = 0; px < patch; ++px)
                    acc.at3(c, y + py, x + px) += probs.at3(c, py, px);
        for (int py = 0; py < patch; ++py)
            for (int px = 0; px < patch; ++px) weight.at3(0, y + py, x + px) += 1.0f;
    }
    for (int c = 0; c < num_classes; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) acc.at3(c, y, x) /= weight.at3(0, y, x);
    return acc;
}

EvalReport evaluate_samples(const std::vector<Model*>& models,
                            const std::vector<Sample>& samples, int patch, int stride) {
    EvalReport report;
    std::vector<double> dices, senss, specs;
    for (const auto& s : samples) {
        const Tensor<float> probs = stitched_probabilities(models, s.cube.data, patch, stride);
        const Tensor<std::uint8_t> pred = argmax_mask(probs);
        const Tensor<std::uint8_t> truth = mask_tensor(s.mask);
        SampleMetrics m;
        m.sample_id = s.sample_id;
        m.dice = dice(pred, truth);
        auto [sens, spec] = sensitivity_specificity(confusion_counts(pred, truth));
        m.sensitivity = sens;
        m.specificity = spec;
        dices.push_back(m.dice);
        if (sens) senss.push_back(*sens);
        if (spec) specs.push_back(*spec);
        report.per_sample.push_back(std::move(m));
    }
    report.dice = aggregate(dices);
    report.sensitivity = aggregate(senss);
    report.specificity = aggregate(specs);
    return report;
}

EvalReport evaluate_holdout(const std::vector<Model*>& models, const DatasetManifest& manifest,
                            int patch, int stride, const PreprocessOptions& pre) {
    const auto entries = manifest.split("test");
    if (entries.empty()) throw std::invalid_argument("evaluate_holdout: empty test split");
    std::vector<Sample> samples;
    for (const auto& e : entries) {
        Sample s = load_sample(e);
        preprocess_sample(s, pre);
        samples.push_back(std::move(s));
    }
    return evaluate_samples(models, samples, patch, stride);
}

std::string EvalReport::to_json() const {
    json j;
    json rows = json::array();
    for (const auto& m : per_sample) {
        json r;
        r["sample_id"] = m.sample_id;
        r["dice"] = m.dice;
        r["sensitivity"] = m.sensitivity ? json(*m.sensitivity) : json(nullptr);
        r["specificity"] = m.specificity ? json(*m.specificity) : json(nullptr);
        rows.push_back(r);
    }
    j["per_sample"] = rows;
    j["dice"] = {{"mean", dice.mean}, {"std", dice.stddev}};
    j["sensitivity"] = {{"mean", sensitivity.mean}, {"std", sensitivity.stddev}};
    j["specificity"] = {{"mean", specificity.mean}, {"std", specificity.stddev}};
    return j.dump(2);
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "sample_id,dice,sensitivity,specificity\n";
    for (const auto& m : per_sample) {
        os << m.sample_id << "," << m.dice << ",";
        if (m.sensitivity) os << *m.sensitivity;
        else os << "NA";
        os << ",";
        if (m.specificity) os << *m.specificity;
        else os << "NA";
        os << "\n";
    }
    return os.str();
}

double bottleneck_dice(const Tensor<std::uint8_t>& mask, int size) {
    const int h = mask.shape[0], w = mask.shape[1];
    if (size > h || size > w) throw std::invalid_argument("bottleneck_dice: size > mask");
    if (size == h && size == w) return 1.0;
    const Tensor<double> pooled = avgpool_mask(mask, size, size);
    Tensor<float> small({1, size, size});
    for (std::size_t i = 0; i < pooled.data.size(); ++i)
        small.data[i] = pooled.data[i] >= 0.5 ? 1.0f : 0.0f;  // ties round to foreground
    const Tensor<float> up = ad::bilinear_resize(small, h, w);
    Tensor<std::uint8_t> rec({h, w});
    for (std::size_t i = 0; i < rec.data.size(); ++i)
        rec.data[i] = up.data[i] >= 0.5f ? 1 : 0;
    return dice(rec, mask);
}

std::vector<BottleneckRow> bottleneck_experiment(const std::vector<Tensor<std::uint8_t>>& masks,
                                                 const std::vector<int>& sizes) {
    if (masks.empty()) throw std::invalid_argument("bottleneck_experiment: no masks");
    std::vector<BottleneckRow> rows;
    for (int s : sizes) {
        double sum = 0.0;
        for (const auto& m : masks) sum += bottleneck_dice(m, s);
        rows.push_back({s, sum / static_cast<double>(masks.size())});
    }
    return rows;
}

}  // namespace rseg
