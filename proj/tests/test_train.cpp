#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "rseg/eval.hpp"
#include "rseg/train.hpp"

using namespace rseg;

namespace {

std::vector<Sample> tiny_dataset(int n, std::uint64_t seed, double overlap = 0.0) {
    SyntheticConfig cfg;
    cfg.overlap = overlap;
    auto samples = generate_synthetic(n, 64, 64, seed, cfg);
    for (auto& s : samples) preprocess_sample(s);
    return samples;
}

TrainConfig tiny_config(ModelVariant variant) {
    TrainConfig cfg = TrainConfig::defaults_for(variant);
    cfg.model.downsample_factor = 8;
    cfg.model.prototypes_per_class = 3;
    cfg.patch_size = 64;
    cfg.epochs = 2;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("horizontal flip is an involution and mirrors columns") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor<float> cube({3, 4, 5});
    for (auto& v : cube.data) v = u(rng);
    Tensor<std::uint8_t> mask({4, 5});
    for (auto& v : mask.data) v = u(rng) < 0.5f ? 1 : 0;

    const auto cube0 = cube;
    const auto mask0 = mask;
    hflip_cube(cube);
    hflip_mask(mask);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) CHECK(mask.at2(y, x) == mask0.at2(y, 4 - x));
    hflip_cube(cube);
    hflip_mask(mask);
    CHECK(cube.data == cube0.data);
    CHECK(mask.data == mask0.data);

    // flip_p = 0 never flips
    std::mt19937_64 rng2(2);
    for (int i = 0; i < 10; ++i) {
        CHECK(!augment(cube, mask, 0.0, rng2));
        CHECK(cube.data == cube0.data);
    }
}

TEST_CASE("zero learning rate and weight decay leave parameters unchanged") {
    auto samples = tiny_dataset(4, 3);
    std::vector<Sample> train(samples.begin(), samples.begin() + 2);
    std::vector<Sample> val(samples.begin() + 2, samples.end());

    TrainConfig cfg = tiny_config(ModelVariant::ramanseg_projection_free);
    cfg.learning_rate = 0.0;
    cfg.weight_decay = 0.0;
    cfg.epochs = 2;
    const auto result = train_model(train, val, cfg);

    auto reference = make_model(cfg.model, cfg.seed);
    REQUIRE(result.best_model->params().size() == reference->params().size());
    for (std::size_t i = 0; i < reference->params().size(); ++i)
        CHECK(result.best_model->params()[i].value.data == reference->params()[i].value.data);
}

TEST_CASE("training is deterministic under a fixed seed") {
    auto samples = tiny_dataset(4, 4);
    std::vector<Sample> train(samples.begin(), samples.begin() + 2);
    std::vector<Sample> val(samples.begin() + 2, samples.end());

    TrainConfig cfg = tiny_config(ModelVariant::ramanseg);
    const auto a = train_model(train, val, cfg);
    const auto b = train_model(train, val, cfg);
    REQUIRE(a.best_model->params().size() == b.best_model->params().size());
    for (std::size_t i = 0; i < a.best_model->params().size(); ++i)
        CHECK(a.best_model->params()[i].value.data == b.best_model->params()[i].value.data);
    CHECK(a.step_csv() == b.step_csv());
    CHECK(a.epoch_csv() == b.epoch_csv());
}

TEST_CASE("training on separable data improves validation dice over the initial model") {
    auto samples = tiny_dataset(6, 5, 0.0);
    std::vector<Sample> train(samples.begin(), samples.begin() + 4);
    std::vector<Sample> val(samples.begin() + 4, samples.end());

    TrainConfig cfg = tiny_config(ModelVariant::ramanseg_projection_free);
    cfg.epochs = 6;
    auto init_model = make_model(cfg.model, cfg.seed);
    std::vector<Model*> init{init_model.get()};
    const double before = evaluate_samples(init, val, 0, 0).dice.mean;

    const auto result = train_model(train, val, cfg);
    CHECK(result.best_val_dice > before);
}

TEST_CASE("checkpoint round-trip preserves validation dice") {
    auto samples = tiny_dataset(4, 6);
    std::vector<Sample> train(samples.begin(), samples.begin() + 2);
    std::vector<Sample> val(samples.begin() + 2, samples.end());

    TrainConfig cfg = tiny_config(ModelVariant::ramanseg);
    const auto result = train_model(train, val, cfg);
    std::vector<Model*> trained{result.best_model.get()};
    const double direct = evaluate_samples(trained, val, 0, 0).dice.mean;

    const std::string path =
        (std::filesystem::temp_directory_path() / "train_rt.rsg1").string();
    save_checkpoint(path, *result.best_model);
    auto loaded = load_checkpoint(path);
    std::vector<Model*> back{loaded.get()};
    CHECK(evaluate_samples(back, val, 0, 0).dice.mean == direct);
}

TEST_CASE("kfold partitions patients evenly and exhaustively") {
    SyntheticConfig gen;
    gen.samples_per_patient = 2;
    auto pool = generate_synthetic(20, 64, 64, 7, gen);  // 10 patients
    const auto partition = kfold_patient_partition(pool, 5, 0);
    REQUIRE(partition.size() == 5);
    std::set<std::string> all;
    for (const auto& fold : partition) {
        CHECK(fold.size() == 2);
        for (const auto& p : fold) CHECK(all.insert(p).second);  // no repeats
    }
    CHECK(all.size() == 10);

    CHECK_THROWS_AS((void)kfold_patient_partition(pool, 11, 0), std::invalid_argument);
}

TEST_CASE("train_kfold yields one result per fold") {
    auto pool = tiny_dataset(6, 8);  // 3 patients
    TrainConfig cfg = tiny_config(ModelVariant::ramanseg_projection_free);
    cfg.epochs = 1;
    const auto results = train_kfold(pool, cfg, 3);
    REQUIRE(results.size() == 3);
    for (const auto& r : results) CHECK(r.best_model != nullptr);
}

TEST_CASE("grid sweep rows match the grid and are deterministic") {
    auto samples = tiny_dataset(4, 9);
    std::vector<Sample> train(samples.begin(), samples.begin() + 2);
    std::vector<Sample> val(samples.begin() + 2, samples.end());
    TrainConfig cfg = tiny_config(ModelVariant::ramanseg_projection_free);
    cfg.epochs = 1;

    const auto one = grid_sweep(train, val, cfg, "prototypes_per_class", {4.0});
    REQUIRE(one.size() == 1);
    CHECK(one[0].value == 4.0);

    const auto rows = grid_sweep(train, val, cfg, "learning_rate", {1e-3, 1e-2});
    const auto rows2 = grid_sweep(train, val, cfg, "learning_rate", {1e-3, 1e-2});
    REQUIRE(rows.size() == 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].value == rows2[i].value);
        CHECK(rows[i].val_dice == rows2[i].val_dice);
    }

    CHECK_THROWS_AS((void)grid_sweep(train, val, cfg, "nonsense", {1.0}),
                    std::invalid_argument);
}

TEST_CASE("train config json round-trip") {
    TrainConfig cfg = TrainConfig::defaults_for(ModelVariant::unet);
    cfg.loss.beta = 0.25;
    cfg.epochs = 17;
    const auto back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.model.variant == ModelVariant::unet);
    CHECK(back.loss.beta == 0.25);
    CHECK(back.epochs == 17);
    CHECK(back.learning_rate == cfg.learning_rate);
}
