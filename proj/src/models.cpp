#include "rseg/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rseg/prototypes.hpp"

namespace rseg {

using json = nlohmann::json;

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::unet: return "unet";
        case ModelVariant::ramanseg: return "ramanseg";
        case ModelVariant::ramanseg_projection_free: return "ramanseg-pf";
    }
    throw std::logic_error("bad ModelVariant");
}

ModelVariant model_variant_from_string(const std::string& s) {
    if (s == "unet") return ModelVariant::unet;
    if (s == "ramanseg") return ModelVariant::ramanseg;
    if (s == "ramanseg-pf" || s == "ramanseg_projection_free")
        return ModelVariant::ramanseg_projection_free;
    throw std::invalid_argument("unknown model variant: " + s);
}

ModelConfig ModelConfig::ramanseg_defaults(int in_channels) {
    ModelConfig c;
    c.variant = ModelVariant::ramanseg;
    c.in_channels = in_channels;
    c.prototypes_per_class = 15;
    c.prototype_h = c.prototype_w = 1;
    c.addon_channels = 64;
    c.dropout_p = 0.35;
    return c;
}

ModelConfig ModelConfig::projection_free_defaults(int in_channels) {
    ModelConfig c;
    c.variant = ModelVariant::ramanseg_projection_free;
    c.in_channels = in_channels;
    c.prototypes_per_class = 60;
    c.prototype_h = c.prototype_w = 3;
    c.addon_channels = 128;
    c.dropout_p = 0.5;
    return c;
}

ModelConfig ModelConfig::unet_defaults(int in_channels) {
    ModelConfig c;
    c.variant = ModelVariant::unet;
    c.in_channels = in_channels;
    return c;
}

std::string ModelConfig::to_json() const {
    json j;
    j["variant"] = to_string(variant);
    j["in_channels"] = in_channels;
    j["num_classes"] = num_classes;
    j["prototypes_per_class"] = prototypes_per_class;
    j["prototype_depth"] = prototype_depth;
    j["prototype_h"] = prototype_h;
    j["prototype_w"] = prototype_w;
    j["addon_channels"] = addon_channels;
    j["dropout_p"] = dropout_p;
    j["downsample_factor"] = downsample_factor;
    j["similarity_epsilon"] = similarity_epsilon;
    j["addon_position"] = addon_position == AddonPosition::post ? "post" : "pre";
    j["unet_base_channels"] = unet_base_channels;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    ModelConfig c;
    c.variant = model_variant_from_string(j.at("variant").get<std::string>());
    c.in_channels = j.value("in_channels", c.in_channels);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.prototypes_per_class = j.value("prototypes_per_class", c.prototypes_per_class);
    c.prototype_depth = j.value("prototype_depth", c.prototype_depth);
    c.prototype_h = j.value("prototype_h", c.prototype_h);
    c.prototype_w = j.value("prototype_w", c.prototype_w);
    c.addon_channels = j.value("addon_channels", c.addon_channels);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    c.downsample_factor = j.value("downsample_factor", c.downsample_factor);
    c.similarity_epsilon = j.value("similarity_epsilon", c.similarity_epsilon);
    c.addon_position =
        j.value("addon_position", std::string("post")) == "pre" ? AddonPosition::pre
                                                                : AddonPosition::post;
    c.unet_base_channels = j.value("unet_base_channels", c.unet_base_channels);
    return c;
}

// ---- shared construction helpers ---------------------------------------

namespace {

Tensor<float> he_uniform(std::vector<int> shape, int fan_in, std::mt19937_64& rng) {
    Tensor<float> t(std::move(shape));
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : t.data) v = static_cast<float>(u(rng));
    return t;
}

int check_divisible(const std::vector<int>& shape, int factor) {
    if (shape.size() != 3) throw std::invalid_argument("forward: want (C,H,W) input");
    if (shape[1] % factor != 0 || shape[2] % factor != 0)
        throw std::invalid_argument("forward: spatial dims must be divisible by " +
                                    std::to_string(factor));
    return factor;
}

int log2_exact(int v) {
    int n = 0;
    while (v > 1) {
        if (v % 2 != 0) throw std::invalid_argument("downsample_factor must be a power of two");
        v /= 2;
        n++;
    }
    return n;
}

}  // namespace

Tensor<float> Model::predict_probabilities(const Tensor<float>& input) {
    ad::Tape<float> tape;
    std::mt19937_64 rng(0);
    return forward(tape, input, /*training=*/false, rng).full_probs.value();
}

std::vector<std::string> Model::activation_names(const Tensor<float>& probe_input) {
    ad::Tape<float> tape;
    std::mt19937_64 rng(0);
    auto art = forward(tape, probe_input, false, rng);
    std::vector<std::string> names;
    for (const auto& [n, v] : art.activations) names.push_back(n);
    return names;
}

// ---- U-Net ---------------------------------------------------------------

namespace {
constexpr int kUNetLevels = 4;  // downsampling stages

int unet_width(int base, int level) { return std::min(base << level, base * 8); }
}  // namespace

UNet::UNet(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
    std::mt19937_64 rng(seed);
    const int base = config_.unet_base_channels;
    auto add_conv = [&](const std::string& name, int cout, int cin, int k, bool final = false) {
        params_.push_back({name + ".w", he_uniform({cout, cin, k, k}, cin * k * k, rng), final});
        params_.push_back({name + ".b", Tensor<float>({cout}), final});
    };
    add_conv("enc0.conv1", base, config_.in_channels, 3);
    add_conv("enc0.conv2", base, base, 3);
    for (int l = 1; l <= kUNetLevels; ++l) {
        const int cin = unet_width(base, l - 1), cout = unet_width(base, l);
        add_conv("enc" + std::to_string(l) + ".down", cout, cin, 3);
        add_conv("enc" + std::to_string(l) + ".conv", cout, cout, 3);
    }
    for (int l = kUNetLevels; l >= 1; --l) {
        const int skip = unet_width(base, l - 1), cin = unet_width(base, l);
        add_conv("dec" + std::to_string(l) + ".conv1", skip, cin + skip, 3);
        add_conv("dec" + std::to_string(l) + ".conv2", skip, skip, 3);
    }
    add_conv("head", config_.num_classes, base, 1);
}

ForwardArtifacts UNet::forward(ad::Tape<float>& tape, const Tensor<float>& input, bool,
                               std::mt19937_64&) {
    check_divisible(input.shape, 1 << kUNetLevels);
    ForwardArtifacts art;
    art.input = ad::leaf(tape, input);

    art.param_ids.reserve(params_.size());
    std::vector<ad::Var<float>> pv;
    for (auto& p : params_) {
        pv.push_back(ad::leaf(tape, p.value));
        art.param_ids.push_back(pv.back().id);
    }
    std::size_t pi = 0;
    auto conv = [&](ad::Var<float> x, int stride) {
        auto w = pv[pi++];
        auto b = pv[pi++];
        const int k = w.shape()[2];
        return ad::relu(ad::conv2d(x, w, &b, stride, (k - 1) / 2));
    };

    auto x = conv(art.input, 1);
    x = conv(x, 1);
    art.activations.emplace_back("enc0", x);
    std::vector<ad::Var<float>> skips{x};
    for (int l = 1; l <= kUNetLevels; ++l) {
        x = conv(x, 2);
        x = conv(x, 1);
        art.activations.emplace_back("enc" + std::to_string(l), x);
        skips.push_back(x);
    }
    for (int l = kUNetLevels; l >= 1; --l) {
        const auto& skip = skips[static_cast<std::size_t>(l - 1)];
        x = ad::bilinear_upsample(x, skip.shape()[1], skip.shape()[2]);
        x = ad::concat_channels(x, skip);
        x = conv(x, 1);
        x = conv(x, 1);
        art.activations.emplace_back("dec" + std::to_string(l), x);
    }
    // head: 1x1 conv without relu
    auto w = pv[pi++];
    auto b = pv[pi++];
    auto logits = ad::conv2d(x, w, &b, 1, 0);
    art.activations.emplace_back("logits", logits);
    art.full_logits = logits;
    art.latent_logits = logits;
    art.full_probs = ad::softmax_channels(logits);
    return art;
}

// ---- RamanSeg -------------------------------------------------------------

namespace {
constexpr int kBackboneWidth = 64;
}

RamanSeg::RamanSeg(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
    std::mt19937_64 rng(seed);
    const int stages = log2_exact(config_.downsample_factor);
    auto add_conv = [&](const std::string& name, int cout, int cin, int k) {
        params_.push_back({name + ".w", he_uniform({cout, cin, k, k}, cin * k * k, rng), false});
        params_.push_back({name + ".b", Tensor<float>({cout}), false});
    };
    add_conv("backbone.stem", kBackboneWidth, config_.in_channels, 3);
    for (int s = 1; s < stages; ++s)
        add_conv("backbone.down" + std::to_string(s), kBackboneWidth, kBackboneWidth, 3);
    add_conv("backbone.out", config_.prototype_depth, kBackboneWidth, 3);

    const int m = config_.total_prototypes();
    Tensor<float> protos({m, config_.prototype_depth, config_.prototype_h, config_.prototype_w});
    xavier_init_prototypes(protos, rng);
    params_.push_back({"prototypes", std::move(protos), false});

    int fc_in;
    if (config_.addon_position == AddonPosition::post) {
        add_conv("addon.conv1", config_.addon_channels, m, 3);
        add_conv("addon.conv2", config_.addon_channels, config_.addon_channels, 3);
        fc_in = config_.addon_channels;
    } else {
        add_conv("addon.conv1", config_.addon_channels, kBackboneWidth, 3);
        add_conv("addon.conv2", config_.prototype_depth, config_.addon_channels, 3);
        fc_in = m;
    }
    // per-point fully connected layer, bias-free; the L1 target
    params_.push_back({"final.w",
                       he_uniform({config_.num_classes, fc_in, 1, 1}, fc_in, rng),
                       /*final_layer=*/true});
}

Param& RamanSeg::prototypes_param() {
    for (auto& p : params_)
        if (p.name == "prototypes") return p;
    throw std::logic_error("prototypes param missing");
}

Param& RamanSeg::final_layer_param() {
    for (auto& p : params_)
        if (p.name == "final.w") return p;
    throw std::logic_error("final.w param missing");
}

std::vector<int> RamanSeg::prototype_classes() const {
    std::vector<int> cls(static_cast<std::size_t>(config_.total_prototypes()));
    for (std::size_t i = 0; i < cls.size(); ++i)
        cls[i] = config_.prototype_class(static_cast<int>(i));
    return cls;
}

ForwardArtifacts RamanSeg::forward(ad::Tape<float>& tape, const Tensor<float>& input,
                                   bool training, std::mt19937_64& rng) {
    check_divisible(input.shape, config_.downsample_factor);
    const int h = input.shape[1], w = input.shape[2];
    const int stages = log2_exact(config_.downsample_factor);

    ForwardArtifacts art;
    art.input = ad::leaf(tape, input);
    std::vector<ad::Var<float>> pv;
    for (auto& p : params_) {
        pv.push_back(ad::leaf(tape, p.value));
        art.param_ids.push_back(pv.back().id);
    }
    auto find = [&](const std::string& name) -> ad::Var<float> {
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].name == name) return pv[i];
        throw std::logic_error("missing param: " + name);
    };

    auto conv = [&](ad::Var<float> x, const std::string& name, int stride, bool act) {
        auto wv = find(name + ".w");
        auto bv = find(name + ".b");
        const int k = wv.shape()[2];
        auto y = ad::conv2d(x, wv, &bv, stride, (k - 1) / 2);
        return act ? ad::relu(y) : y;
    };

    // encoder: strided convolutions, one stage per factor of two
    auto x = conv(art.input, "backbone.stem", 2, true);
    art.activations.emplace_back("backbone.stem", x);
    for (int s = 1; s < stages; ++s) {
        x = conv(x, "backbone.down" + std::to_string(s), 2, true);
        art.activations.emplace_back("backbone.down" + std::to_string(s), x);
    }
    auto latent_in = x;

    ad::Var<float> features;  // input of the final per-point layer
    if (config_.addon_position == AddonPosition::post) {
        auto latent = conv(latent_in, "backbone.out", 1, false);
        art.activations.emplace_back("backbone.out", latent);
        auto sim = compute_similarity(latent, find("prototypes"),
                                      static_cast<float>(config_.similarity_epsilon));
        art.similarity = sim;
        art.activations.emplace_back("similarity", sim);
        auto a = conv(sim, "addon.conv1", 1, true);
        a = ad::spatial_dropout(a, config_.dropout_p, rng, training);
        art.activations.emplace_back("addon.conv1", a);
        a = conv(a, "addon.conv2", 1, true);
        a = ad::spatial_dropout(a, config_.dropout_p, rng, training);
        art.activations.emplace_back("addon.conv2", a);
        features = a;
    } else {
        auto pre = conv(latent_in, "backbone.out", 1, true);
        art.activations.emplace_back("backbone.out", pre);
        auto a = conv(pre, "addon.conv1", 1, true);
        a = ad::spatial_dropout(a, config_.dropout_p, rng, training);
        art.activations.emplace_back("addon.conv1", a);
        auto latent = conv(a, "addon.conv2", 1, false);
        art.activations.emplace_back("addon.conv2", latent);
        auto sim = compute_similarity(latent, find("prototypes"),
                                      static_cast<float>(config_.similarity_epsilon));
        art.similarity = sim;
        art.activations.emplace_back("similarity", sim);
        features = sim;
    }

    auto fw = find("final.w");
    auto latent_logits = ad::conv2d(features, fw, static_cast<const ad::Var<float>*>(nullptr), 1, 0);
    art.latent_logits = latent_logits;
    art.activations.emplace_back("latent_logits", latent_logits);
    auto latent_probs = ad::softmax_channels(latent_logits);
    art.full_probs = ad::bilinear_upsample(latent_probs, h, w);
    art.full_logits = ad::bilinear_upsample(latent_logits, h, w);
    return art;
}

Tensor<float> RamanSeg::latent_map(const Tensor<float>& input) {
    ad::Tape<float> tape;
    std::mt19937_64 rng(0);
    auto art = forward(tape, input, false, rng);
    for (const auto& [name, var] : art.activations)
        if ((config_.addon_position == AddonPosition::post && name == "backbone.out") ||
            (config_.addon_position == AddonPosition::pre && name == "addon.conv2"))
            return var.value();
    throw std::logic_error("latent activation not found");
}

std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed) {
    if (config.variant == ModelVariant::unet) return std::make_unique<UNet>(config, seed);
    return std::make_unique<RamanSeg>(config, seed);
}

Tensor<float> ensemble_predict(const std::vector<Model*>& models, const Tensor<float>& input) {
    if (models.empty()) throw std::invalid_argument("ensemble_predict: no models");
    Tensor<float> acc = models[0]->predict_probabilities(input);
    for (std::size_t i = 1; i < models.size(); ++i) {
        Tensor<float> p = models[i]->predict_probabilities(input);
        if (!same_shape(p.shape, acc.shape))
            throw std::invalid_argument("ensemble_predict: output shape mismatch");
        for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += p.data[k];
    }
    const float inv = 1.0f / static_cast<float>(models.size());
    for (auto& v : acc.data) v *= inv;
    return acc;
}

// ---- checkpoints -----------------------------------------------------------

void save_checkpoint(const std::string& path, const Model& model) {
    json header;
    header["format"] = "RSG1";
    header["config"] = json::parse(model.config().to_json());
    json params = json::array();
    for (const auto& p : model.params()) {
        json jp;
        jp["name"] = p.name;
        jp["shape"] = p.value.shape;
        jp["final_layer"] = p.final_layer;
        params.push_back(jp);
    }
    header["params"] = params;
    const std::string htext = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("RSG1", 4);
    const std::uint32_t len = static_cast<std::uint32_t>(htext.size());
    unsigned char lb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16),
                           static_cast<unsigned char>(len >> 24)};
    os.write(reinterpret_cast<const char*>(lb), 4);
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& p : model.params())
        os.write(reinterpret_cast<const char*>(p.value.data.data()),
                 static_cast<std::streamsize>(p.value.data.size() * sizeof(float)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RSG1", 4) != 0)
        throw std::runtime_error("not an RSG1 checkpoint: " + path);
    unsigned char lb[4];
    is.read(reinterpret_cast<char*>(lb), 4);
    const std::uint32_t len = static_cast<std::uint32_t>(lb[0]) |
                              (static_cast<std::uint32_t>(lb[1]) << 8) |
                              (static_cast<std::uint32_t>(lb[2]) << 16) |
                              (static_cast<std::uint32_t>(lb[3]) << 24);
    std::string htext(len, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(len));
    if (!is) throw std::runtime_error("truncated checkpoint header: " + path);
    json header = json::parse(htext);

    auto model = make_model(ModelConfig::from_json(header.at("config").dump()), /*seed=*/0);
    auto& params = model->params();
    const auto& jparams = header.at("params");
    if (jparams.size() != params.size())
        throw std::runtime_error("checkpoint parameter count mismatch: " + path);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& jp = jparams[i];
        if (jp.at("name").get<std::string>() != params[i].name)
            throw std::runtime_error("checkpoint parameter order mismatch: " + path);
        const auto shape = jp.at("shape").get<std::vector<int>>();
        if (shape != params[i].value.shape)
            throw std::runtime_error("checkpoint shape mismatch for " + params[i].name);
        is.read(reinterpret_cast<char*>(params[i].value.data.data()),
                static_cast<std::streamsize>(params[i].value.data.size() * sizeof(float)));
    }
    if (!is) throw std::runtime_error("truncated checkpoint blobs: " + path);
    return model;
}

}  // namespace rseg
