#include "rseg/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rseg/resample.hpp"

namespace rseg {

Tensor<float> xavier_init_prototype(int d, int hp, int wp, std::mt19937_64& rng) {
    if (d < 1 || hp < 1 || wp < 1) throw std::invalid_argument("xavier_init_prototype: dims >= 1");
    const double b = 1.0 / std::sqrt(static_cast<double>(d) * hp * wp);
    Tensor<float> t({d, hp, wp});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : t.data) {
        double x;
        do {
            x = u(rng);
        } while (x == 0.0);  // keep the interval open on both sides
        v = static_cast<float>((2.0 * x - 1.0) * b);
    }
    return t;
}

void xavier_init_prototypes(Tensor<float>& prototypes, std::mt19937_64& rng) {
    const int m = prototypes.shape[0], d = prototypes.shape[1];
    const int hp = prototypes.shape[2], wp = prototypes.shape[3];
    const std::size_t block = static_cast<std::size_t>(d) * hp * wp;
    for (int i = 0; i < m; ++i) {
        Tensor<float> p = xavier_init_prototype(d, hp, wp, rng);
        std::copy(p.data.begin(), p.data.end(), prototypes.data.begin() + i * block);
    }
}

Tensor<float> latent_patch(const Tensor<float>& latent, int y, int x, int hp, int wp) {
    const int d = latent.shape[0], h = latent.shape[1], w = latent.shape[2];
    const int cy = (hp - 1) / 2, cx = (wp - 1) / 2;
    Tensor<float> out({d, hp, wp});
    for (int di = 0; di < d; ++di)
        for (int i = 0; i < hp; ++i) {
            const int sy = y + i - cy;
            if (sy < 0 || sy >= h) continue;
            for (int j = 0; j < wp; ++j) {
                const int sx = x + j - cx;
                if (sx < 0 || sx >= w) continue;
                out.at3(di, i, j) = latent.at3(di, sy, sx);
            }
        }
    return out;
}

std::vector<PrototypeInfo> project_prototypes(RamanSeg& model,
                                              const std::vector<Sample>& train_samples) {
    const auto& cfg = model.config();
    const int m = cfg.total_prototypes();
    const int hp = cfg.prototype_h, wp = cfg.prototype_w;
    auto& protos = model.prototypes_param().value;
    const std::size_t block = static_cast<std::size_t>(protos.shape[1]) * hp * wp;
    const auto classes = model.prototype_classes();

    std::vector<const Sample*> ordered;
    for (const auto& s : train_samples) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const Sample* a, const Sample* b) { return a->sample_id < b->sample_id; });

    std::vector<double> best(static_cast<std::size_t>(m),
                             std::numeric_limits<double>::infinity());
    std::vector<PrototypeInfo> infos(static_cast<std::size_t>(m));
    std::vector<Tensor<float>> best_patch(static_cast<std::size_t>(m));
    std::vector<bool> class_seen(static_cast<std::size_t>(cfg.num_classes), false);

    for (const Sample* s : ordered) {
        const Tensor<float> latent = model.latent_map(s->cube.data);
        const int hd = latent.shape[1], wd = latent.shape[2];
        Tensor<std::uint8_t> mask_labels({s->mask.height, s->mask.width});
        mask_labels.data.assign(s->mask.labels.begin(), s->mask.labels.end());
        const Tensor<std::uint8_t> ds = nn_downsample_labels(mask_labels, hd, wd);
        for (int y = 0; y < hd; ++y)
            for (int x = 0; x < wd; ++x) {
                const int cls = ds.at2(y, x);
                class_seen[static_cast<std::size_t>(cls)] = true;
                const Tensor<float> patch = latent_patch(latent, y, x, hp, wp);
                for (int p = 0; p < m; ++p) {
                    if (classes[static_cast<std::size_t>(p)] != cls) continue;
                    double d2 = 0.0;
                    const float* pv = protos.data.data() + p * block;
                    for (std::size_t k = 0; k < block; ++k) {
                        const double diff = static_cast<double>(pv[k]) - patch.data[k];
                        d2 += diff * diff;
                    }
                    // strict improvement keeps the first (lexicographic) winner
                    if (d2 < best[static_cast<std::size_t>(p)]) {
                        best[static_cast<std::size_t>(p)] = d2;
                        best_patch[static_cast<std::size_t>(p)] = patch;
                        infos[static_cast<std::size_t>(p)].provenance =
                            PrototypeProvenance{s->sample_id, y, x};
                    }
                }
            }
    }
    for (int cls = 0; cls < cfg.num_classes; ++cls)
        if (!class_seen[static_cast<std::size_t>(cls)])
            throw std::runtime_error("project_prototypes: no latent positions for class " +
                                     std::to_string(cls));
    for (int p = 0; p < m; ++p) {
        auto& info = infos[static_cast<std::size_t>(p)];
        info.id = p;
        info.class_id = classes[static_cast<std::size_t>(p)];
        info.projected = true;
        std::copy(best_patch[static_cast<std::size_t>(p)].data.begin(),
                  best_patch[static_cast<std::size_t>(p)].data.end(),
                  protos.data.begin() + p * block);
    }
    return infos;
}

PrototypeRegion prototype_region(RamanSeg& model, int prototype_index,
                                 const std::vector<Sample>& train_samples,
                                 double activation_quantile) {
    if (activation_quantile <= 0.0 || activation_quantile >= 1.0)
        throw std::invalid_argument("prototype_region: quantile in (0,1)");
    if (train_samples.empty()) throw std::invalid_argument("prototype_region: empty training set");

    std::vector<const Sample*> ordered;
    for (const auto& s : train_samples) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const Sample* a, const Sample* b) { return a->sample_id < b->sample_id; });

    const Sample* best_sample = nullptr;
    float best_act = -std::numeric_limits<float>::infinity();
    ad::Tape<float> tape;
    std::mt19937_64 rng(0);
    for (const Sample* s : ordered) {
        tape.clear();
        auto art = model.forward(tape, s->cube.data, false, rng);
        const auto& sim = art.similarity.value();
        const int hd = sim.shape[1], wd = sim.shape[2];
        for (int y = 0; y < hd; ++y)
            for (int x = 0; x < wd; ++x) {
                const float v = sim.at3(prototype_index, y, x);
                if (v > best_act) {
                    best_act = v;
                    best_sample = s;
                }
            }
    }

    tape.clear();
    auto art = model.forward(tape, best_sample->cube.data, false, rng);
    const auto& sim = art.similarity.value();
    const int hd = sim.shape[1], wd = sim.shape[2];
    Tensor<float> chan({1, hd, wd});
    for (int y = 0; y < hd; ++y)
        for (int x = 0; x < wd; ++x) chan.at3(0, y, x) = sim.at3(prototype_index, y, x);
    const int h = best_sample->cube.height, w = best_sample->cube.width;
    Tensor<float> up = ad::bilinear_resize(chan, h, w);

    std::vector<double> vals(up.data.begin(), up.data.end());
    const double thresh = percentile(vals, activation_quantile * 100.0);

    PrototypeRegion region;
    region.sample_id = best_sample->sample_id;
    region.heatmap = Tensor<float>::from({h, w}, std::vector<float>(up.data.begin(), up.data.end()));
    int y0 = h, x0 = w, y1 = -1, x1 = -1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (static_cast<double>(up.at3(0, y, x)) >= thresh) {
                y0 = std::min(y0, y);
                x0 = std::min(x0, x);
                y1 = std::max(y1, y);
                x1 = std::max(x1, x);
            }
    region.y0 = y0;
    region.x0 = x0;
    region.y1 = y1;
    region.x1 = x1;

    const int num_classes = model.config().num_classes;
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    double total = 0.0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const int lbl = best_sample->mask.labels[static_cast<std::size_t>(y) * w + x];
            counts[static_cast<std::size_t>(lbl)] += 1.0;
            total += 1.0;
        }
    for (auto& c : counts) c /= total;
    region.class_proportions = counts;
    return region;
}

}  // namespace rseg
