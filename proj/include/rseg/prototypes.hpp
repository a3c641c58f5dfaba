#ifndef RSEG_PROTOTYPES_HPP
#define RSEG_PROTOTYPES_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rseg/hsdata.hpp"
#include "rseg/models.hpp"
#include "rseg/tensor.hpp"

namespace rseg {

// Uniform prototype init on (-b, b) with b = 1/sqrt(D*H_P*W_P). Values are
// strictly inside the open interval.
Tensor<float> xavier_init_prototype(int d, int hp, int wp, std::mt19937_64& rng);
void xavier_init_prototypes(Tensor<float>& prototypes, std::mt19937_64& rng);  // (M,D,Hp,Wp)

struct PrototypeProvenance {
    std::string sample_id;
    int row = 0;
    int col = 0;
};

struct PrototypeInfo {
    int id = 0;
    int class_id = 0;
    bool projected = false;
    std::optional<PrototypeProvenance> provenance;
};

// Zero-padded (D, hp, wp) latent patch centered at (y, x).
Tensor<float> latent_patch(const Tensor<float>& latent, int y, int x, int hp, int wp);

// Replaces each prototype with the nearest same-class latent patch over the
// whole training set (class taken from the nearest-neighbor-downsampled
// mask). Samples are scanned in sample_id order, positions row-major; strict
// improvement keeps the lexicographically first minimizer.
std::vector<PrototypeInfo> project_prototypes(RamanSeg& model,
                                              const std::vector<Sample>& train_samples);

struct PrototypeRegion {
    std::string sample_id;
    int y0 = 0, x0 = 0, y1 = 0, x1 = 0;  // inclusive bounding box
    std::vector<double> class_proportions;
    Tensor<float> heatmap;  // upsampled similarity channel on the best sample
};

// Finds the training position with maximal similarity to the prototype,
// upsamples that similarity channel to input resolution, thresholds at the
// activation quantile and reports the bounding box plus ground-truth class
// proportions inside it.
PrototypeRegion prototype_region(RamanSeg& model, int prototype_index,
                                 const std::vector<Sample>& train_samples,
                                 double activation_quantile = 0.95);

}  // namespace rseg

#endif
