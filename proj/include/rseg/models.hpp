#ifndef RSEG_MODELS_HPP
#define RSEG_MODELS_HPP

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rseg/autodiff.hpp"
#include "rseg/tensor.hpp"

namespace rseg {

enum class ModelVariant { unet, ramanseg, ramanseg_projection_free };

std::string to_string(ModelVariant v);
ModelVariant model_variant_from_string(const std::string& s);

enum class AddonPosition { pre, post };

struct ModelConfig {
    ModelVariant variant = ModelVariant::ramanseg;
    int in_channels = 24;
    int num_classes = 2;
    int prototypes_per_class = 15;
    int prototype_depth = 64;
    int prototype_h = 1;
    int prototype_w = 1;
    int addon_channels = 64;
    double dropout_p = 0.35;
    int downsample_factor = 16;  // power of two
    double similarity_epsilon = 1e-4;
    AddonPosition addon_position = AddonPosition::post;
    int unet_base_channels = 16;

    int total_prototypes() const { return prototypes_per_class * num_classes; }
    int prototype_class(int index) const { return index / prototypes_per_class; }

    static ModelConfig ramanseg_defaults(int in_channels = 24);
    static ModelConfig projection_free_defaults(int in_channels = 24);
    static ModelConfig unet_defaults(int in_channels = 24);

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// Patch-wise squared-L2 distance to every prototype, inverted to similarity
// log((d^2+1)/(d^2+eps)). latent: (D, H_d, W_d); prototypes: (M, D, H_P, W_P)
// with odd spatial dims, compared against zero-padded latent patches.
template <typename T>
ad::Var<T> compute_similarity(ad::Var<T> latent, ad::Var<T> prototypes, T eps) {
    const auto& ls = latent.shape();
    const auto& ps = prototypes.shape();
    if (ls.size() != 3 || ps.size() != 4 || ps[1] != ls[0])
        throw std::invalid_argument("compute_similarity: bad shapes");
    if (ps[2] % 2 == 0 || ps[3] % 2 == 0)
        throw std::invalid_argument("compute_similarity: prototype spatial dims must be odd");
    if (ps[2] != ps[3])
        throw std::invalid_argument("compute_similarity: prototypes must be square");
    const int d = ls[0], hd = ls[1], wd = ls[2];
    const int m = ps[0], ph = ps[2], pw = ps[3];
    const int pad_x = (ph - 1) / 2;
    const int n = hd * wd;

    ad::Tape<T>* tp = latent.tape;
    // d^2 = |patch|^2 - 2 <patch, p> + |p|^2; the cross term is a correlation,
    // done as one GEMM over the unfolded latent.
    ad::detail::MatRM<T> col =
        ad::detail::im2col(latent.value(), ph, pw, /*stride=*/1, pad_x, hd, wd);
    ad::detail::CMapRM<T> pm(prototypes.value().data.data(), m, d * ph * pw);

    Eigen::Matrix<T, Eigen::Dynamic, 1> patch_norm =
        col.array().square().matrix().colwise().sum().transpose();
    Eigen::Matrix<T, Eigen::Dynamic, 1> proto_norm =
        pm.array().square().matrix().rowwise().sum();

    Tensor<T> d2({m, hd, wd});
    ad::detail::MapRM<T> d2m(d2.data.data(), m, n);
    d2m.noalias() = T(-2) * (pm * col);
    d2m.rowwise() += patch_norm.transpose();
    d2m.colwise() += proto_norm;
    for (auto& v : d2.data) v = std::max(v, T(0));  // clip numeric negatives

    Tensor<T> out({m, hd, wd});
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::log(d2.data[i] + T(1)) - std::log(d2.data[i] + eps);

    const int il = latent.id, ip = prototypes.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, il, ip, d2 = std::move(d2), eps, m, d, hd, wd, ph, pw, n,
                          pad_x] {
        const auto& g = tp->grad(id);
        // G = g * dsim/dd2
        ad::detail::MatRM<T> gm(m, n);
        for (int i = 0; i < m * n; ++i) {
            const T dd = d2.data[static_cast<std::size_t>(i)];
            gm(i / n, i % n) =
                g.data[static_cast<std::size_t>(i)] * (T(1) / (dd + T(1)) - T(1) / (dd + eps));
        }
        ad::detail::MatRM<T> col2 =
            ad::detail::im2col(tp->value(il), ph, pw, 1, pad_x, hd, wd);
        ad::detail::CMapRM<T> pm2(tp->value(ip).data.data(), m, d * ph * pw);

        // dL/dP = 2 P .* rowsum(G) - 2 G col^T
        Eigen::Matrix<T, Eigen::Dynamic, 1> grow = gm.rowwise().sum();
        ad::detail::MapRM<T> gp(tp->grad(ip).data.data(), m, d * ph * pw);
        gp.noalias() += T(2) * (grow.asDiagonal() * ad::detail::MatRM<T>(pm2)) - T(2) * (gm * col2.transpose());

        // dL/dcol = 2 col .* colsum(G) - 2 P^T G
        Eigen::Matrix<T, 1, Eigen::Dynamic> gcolsum = gm.colwise().sum();
        ad::detail::MatRM<T> gcol = T(-2) * (pm2.transpose() * gm);
        for (int r = 0; r < gcol.rows(); ++r)
            gcol.row(r).array() += T(2) * col2.row(r).array() * gcolsum.array();
        ad::detail::col2im_accumulate(gcol, tp->grad(il), ph, pw, 1, pad_x, hd, wd);
    });
    return {tp, id};
}

struct Param {
    std::string name;
    Tensor<float> value;
    bool final_layer = false;  // L1 target / last-layer-only training phase
};

struct ForwardArtifacts {
    ad::Var<float> input;          // input leaf (gradients w.r.t. input)
    ad::Var<float> full_logits;    // (C, H, W)
    ad::Var<float> full_probs;     // (C, H, W), rows of the simplex per pixel
    ad::Var<float> latent_logits;  // (C, H_d, W_d); unet: same as full_logits
    ad::Var<float> similarity;     // (M, H_d, W_d); unet: unset (id < 0)
    std::vector<int> param_ids;    // leaf id per Param, same order as params()
    std::vector<std::pair<std::string, ad::Var<float>>> activations;  // for grad-cam
};

class Model {
  public:
    explicit Model(ModelConfig config) : config_(std::move(config)) {}
    virtual ~Model() = default;

    virtual ForwardArtifacts forward(ad::Tape<float>& tape, const Tensor<float>& input,
                                     bool training, std::mt19937_64& rng) = 0;

    const ModelConfig& config() const { return config_; }
    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }

    // Inference without gradient bookkeeping: full-resolution probabilities.
    Tensor<float> predict_probabilities(const Tensor<float>& input);

    std::vector<std::string> activation_names(const Tensor<float>& probe_input);

  protected:
    ModelConfig config_;
    std::vector<Param> params_;
};

std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed);

class UNet : public Model {
  public:
    UNet(ModelConfig config, std::uint64_t seed);
    ForwardArtifacts forward(ad::Tape<float>& tape, const Tensor<float>& input, bool training,
                             std::mt19937_64& rng) override;
};

class RamanSeg : public Model {
  public:
    RamanSeg(ModelConfig config, std::uint64_t seed);
    ForwardArtifacts forward(ad::Tape<float>& tape, const Tensor<float>& input, bool training,
                             std::mt19937_64& rng) override;

    // Latent feature map only (backbone output), used by projection.
    Tensor<float> latent_map(const Tensor<float>& input);

    Param& prototypes_param();
    Param& final_layer_param();
    std::vector<int> prototype_classes() const;
};

// Mean of per-model probability maps. All outputs must share one shape.
Tensor<float> ensemble_predict(const std::vector<Model*>& models, const Tensor<float>& input);

// Checkpoint container: magic "RSG1", u32 JSON header length, JSON header
// (config + parameter names/shapes), then f32 little-endian blobs in order.
void save_checkpoint(const std::string& path, const Model& model);
std::unique_ptr<Model> load_checkpoint(const std::string& path);

}  // namespace rseg

#endif
