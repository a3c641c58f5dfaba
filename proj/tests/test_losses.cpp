#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rseg/losses.hpp"
#include "rseg/substrate.hpp"

using namespace rseg;

namespace {

// naive reference: flatten channels, loop over unordered same-class pairs
double overlap_oracle(const Tensor<double>& s, const std::vector<int>& classes,
                      int num_classes) {
    const int m = s.shape[0];
    const std::size_t plane = s.data.size() / static_cast<std::size_t>(m);
    double total = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < m; ++i)
            if (classes[static_cast<std::size_t>(i)] == c) members.push_back(i);
        const int k = static_cast<int>(members.size());
        if (k < 2) continue;
        double pair_sum = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < plane; ++i)
                    dot += s.data[members[a] * plane + i] * s.data[members[b] * plane + i];
                pair_sum += dot;
            }
        total += pair_sum / (k * (k - 1) / 2.0);
    }
    return total / num_classes;
}

double overlap_value(const Tensor<double>& s, const std::vector<int>& classes, int num_classes) {
    ad::Tape<double> tape;
    auto v = losses::activation_overlap(ad::leaf(tape, s), classes, num_classes);
    return v.value().data[0];
}

}  // namespace

TEST_CASE("cross entropy hand values") {
    ad::Tape<double> tape;
    // confident correct predictions: loss ~ 0
    auto confident = ad::leaf(
        tape, Tensor<double>::from({2, 1, 2}, {30.0, -30.0, -30.0, 30.0}));
    Tensor<int> labels01 = Tensor<int>::from({1, 2}, {0, 1});
    CHECK(losses::cross_entropy(confident, labels01).value().data[0] ==
          doctest::Approx(0.0).epsilon(1e-9));

    // uniform logits, two classes: ln 2
    auto uniform = ad::leaf(tape, Tensor<double>({2, 1, 2}));
    CHECK(losses::cross_entropy(uniform, labels01).value().data[0] ==
          doctest::Approx(std::log(2.0)));

    // target probabilities 0.9 and 0.5
    const double z0 = std::log(0.9 / 0.1);
    auto two_px = ad::leaf(tape, Tensor<double>::from({2, 1, 2}, {z0, 0.0, 0.0, 0.0}));
    Tensor<int> labels00 = Tensor<int>::from({1, 2}, {0, 0});
    CHECK(losses::cross_entropy(two_px, labels00).value().data[0] ==
          doctest::Approx(-(std::log(0.9) + std::log(0.5)) / 2.0));

    Tensor<int> bad = Tensor<int>::from({1, 2}, {0, 2});
    CHECK_THROWS_AS((void)losses::cross_entropy(uniform, bad), std::invalid_argument);
}

TEST_CASE("dice loss hand values and range") {
    ad::Tape<double> tape;
    // p = t = 0.5 on 4 pixels: soft dice (2*1+1)/(2+2+1) = 0.6, loss 0.4
    Tensor<double> probs({2, 2, 2}, 0.5);
    Tensor<double> onehot({2, 2, 2}, 0.5);
    CHECK(losses::dice_loss(ad::leaf(tape, probs), onehot).value().data[0] ==
          doctest::Approx(0.4));

    // empty prediction on empty target: smoothing gives loss 0
    Tensor<double> zero_p({2, 2, 2});
    Tensor<double> zero_t({2, 2, 2});
    CHECK(losses::dice_loss(ad::leaf(tape, zero_p), zero_t).value().data[0] ==
          doctest::Approx(0.0));

    // random simplex inputs stay within [0, 1]
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor<double> p({2, 3, 3});
        Tensor<double> t({2, 3, 3});
        for (int i = 0; i < 9; ++i) {
            const double a = u(rng);
            p.data[i] = a;
            p.data[9 + i] = 1.0 - a;
            const int lab = u(rng) < 0.5 ? 0 : 1;
            t.data[lab * 9 + i] = 1.0;
        }
        const double loss = losses::dice_loss(ad::leaf(tape, p), t).value().data[0];
        CHECK(loss >= 0.0);
        CHECK(loss <= 1.0);
    }
}

TEST_CASE("activation overlap hand values") {
    const std::vector<int> one_class{0, 0};
    // orthogonal activations
    CHECK(overlap_value(Tensor<double>::from({2, 1, 2}, {1, 0, 0, 1}), one_class, 1) ==
          doctest::Approx(0.0));
    // identical all-ones activations: pair dot 2, one pair
    CHECK(overlap_value(Tensor<double>::from({2, 1, 2}, {1, 1, 1, 1}), one_class, 1) ==
          doctest::Approx(2.0));
    // three pairwise-orthogonal activations
    CHECK(overlap_value(Tensor<double>::from({3, 1, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}),
                        {0, 0, 0}, 1) == doctest::Approx(0.0));
    // single prototype per class contributes zero
    CHECK(overlap_value(Tensor<double>::from({2, 1, 1}, {3, 4}), {0, 1}, 2) ==
          doctest::Approx(0.0));
}

TEST_CASE("activation overlap equals the double-loop oracle") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> md(2, 8), hd(1, 4), cd(1, 2);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int m = md(rng), h = hd(rng), w = hd(rng);
        const int num_classes = cd(rng);
        std::vector<int> classes(static_cast<std::size_t>(m));
        for (auto& c : classes) c = std::uniform_int_distribution<int>(0, num_classes - 1)(rng);
        Tensor<double> s({m, h, w});
        for (auto& v : s.data) v = u(rng);
        CHECK(std::abs(overlap_value(s, classes, num_classes) -
                       overlap_oracle(s, classes, num_classes)) < 1e-10);
    }
}

TEST_CASE("activation overlap is permutation symmetric and nonnegative on nonnegative maps") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Tensor<double> s({4, 2, 2});
    for (auto& v : s.data) v = u(rng);
    const std::vector<int> classes{0, 0, 0, 1};
    const double base = overlap_value(s, classes, 2);
    CHECK(base >= 0.0);

    // swap prototypes 0 and 2 (same class)
    Tensor<double> swapped = s;
    for (int i = 0; i < 4; ++i) std::swap(swapped.data[i], swapped.data[8 + i]);
    CHECK(overlap_value(swapped, classes, 2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("l1 penalty") {
    ad::Tape<double> tape;
    CHECK(losses::l1_penalty(ad::leaf(tape, Tensor<double>({3}))).value().data[0] == 0.0);
    auto w = ad::leaf(tape, Tensor<double>::from({3}, {1, -2, 3}));
    CHECK(losses::l1_penalty(w).value().data[0] == doctest::Approx(6.0));
    auto scaled = ad::scale(w, -2.5);
    CHECK(losses::l1_penalty(scaled).value().data[0] == doctest::Approx(15.0));
}

TEST_CASE("combined objective arithmetic and error handling") {
    ad::Tape<double> tape;
    auto one = ad::constant_scalar(tape, 1.0);
    LossWeights w;  // defaults 1.0 / 0.1 / 1e-4
    CHECK(losses::combined_objective(one, one, one, w).value().data[0] ==
          doctest::Approx(1.1001));

    LossWeights only_ce{2.0, 0.0, 0.0};
    auto ce = ad::constant_scalar(tape, 0.7);
    CHECK(losses::combined_objective(ce, one, one, only_ce).value().data[0] ==
          doctest::Approx(1.4));

    LossWeights zeros{0.0, 0.0, 0.0};
    CHECK(losses::combined_objective(one, one, one, zeros).value().data[0] ==
          doctest::Approx(0.0));

    auto nan = ad::constant_scalar(tape, std::nan(""));
    CHECK_THROWS_AS((void)losses::combined_objective(nan, one, one, w), std::runtime_error);
}

TEST_CASE("loss gradients pass finite difference checks in f64") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    std::vector<double> logits(2 * 2 * 2);
    for (auto& v : logits) v = u(rng);
    Tensor<int> labels = Tensor<int>::from({2, 2}, {0, 1, 1, 0});
    const double ece = finite_difference_check_graph<double>(
        [&](ad::Tape<double>& t, const std::vector<double>& p) {
            return losses::cross_entropy(ad::leaf(t, Tensor<double>::from({2, 2, 2}, p)),
                                         labels);
        },
        logits, 1e-6);
    CHECK(ece < 1e-4);

    std::vector<double> probs(2 * 2 * 2);
    for (auto& v : probs) v = 0.2 + 0.6 * std::abs(u(rng));
    Tensor<double> onehot = Tensor<double>::from({2, 2, 2}, {1, 0, 0, 1, 0, 1, 1, 0});
    const double edice = finite_difference_check_graph<double>(
        [&](ad::Tape<double>& t, const std::vector<double>& p) {
            return losses::dice_loss(ad::leaf(t, Tensor<double>::from({2, 2, 2}, p)), onehot);
        },
        probs, 1e-6);
    CHECK(edice < 1e-4);
}
