#ifndef RSEG_LOSSES_HPP
#define RSEG_LOSSES_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rseg/autodiff.hpp"

namespace rseg {

// Coefficients of the combined objective L = alpha*L_CE + beta*L_A + gamma*L_L1.
struct LossWeights {
    double alpha = 1.0;
    double beta = 0.1;
    double gamma = 1e-4;
};

namespace losses {

// Mean over positions of -log softmax(logits)[target]. logits: (C, H, W),
// labels: (H, W) with values in [0, C).
template <typename T>
ad::Var<T> cross_entropy(ad::Var<T> logits, const Tensor<int>& labels) {
    ad::Tape<T>* tp = logits.tape;
    const int c = logits.shape()[0], h = logits.shape()[1], w = logits.shape()[2];
    if (labels.shape != std::vector<int>{h, w})
        throw std::invalid_argument("cross_entropy: label shape mismatch");
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const auto& z = logits.value();

    // softmax probabilities, kept for the backward pass
    std::vector<T> probs(z.data.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        const int t = labels.data[i];
        if (t < 0 || t >= c) throw std::invalid_argument("cross_entropy: label out of range");
        T mx = z.data[i];
        for (int ci = 1; ci < c; ++ci) mx = std::max(mx, z.data[ci * plane + i]);
        T sum = T(0);
        for (int ci = 0; ci < c; ++ci) {
            const T e = std::exp(z.data[ci * plane + i] - mx);
            probs[ci * plane + i] = e;
            sum += e;
        }
        for (int ci = 0; ci < c; ++ci) probs[ci * plane + i] /= sum;
        loss -= std::log(static_cast<double>(probs[t * plane + i]));
    }
    loss /= static_cast<double>(plane);

    Tensor<T> out({1});
    out.data[0] = static_cast<T>(loss);
    const int iz = logits.id;
    Tensor<int> lab = labels;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, iz, probs = std::move(probs), lab = std::move(lab), c, plane] {
        const T g = tp->grad(id).data[0];
        auto& gz = tp->grad(iz);
        const T inv_n = T(1) / static_cast<T>(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            const int t = lab.data[i];
            for (int ci = 0; ci < c; ++ci) {
                T d = probs[ci * plane + i];
                if (ci == t) d -= T(1);
                gz.data[ci * plane + i] += g * d * inv_n;
            }
        }
    });
    return {tp, id};
}

// Soft Dice loss with smoothing s=1, averaged over foreground classes
// (c >= 1). probs and one-hot targets are both (C, H, W).
template <typename T>
ad::Var<T> dice_loss(ad::Var<T> probs, const Tensor<T>& onehot, T smooth = T(1)) {
    ad::Tape<T>* tp = probs.tape;
    if (!same_shape(probs.shape(), onehot.shape))
        throw std::invalid_argument("dice_loss: shape mismatch");
    const int c = probs.shape()[0];
    if (c < 2) throw std::invalid_argument("dice_loss: need at least 2 classes");
    const std::size_t plane = probs.value().data.size() / static_cast<std::size_t>(c);
    const auto& p = probs.value();

    std::vector<T> inter(c, T(0)), psum(c, T(0)), tsum(c, T(0));
    for (int ci = 0; ci < c; ++ci)
        for (std::size_t i = 0; i < plane; ++i) {
            const T pv = p.data[ci * plane + i];
            const T tv = onehot.data[ci * plane + i];
            inter[ci] += pv * tv;
            psum[ci] += pv;
            tsum[ci] += tv;
        }
    const int n_fg = c - 1;
    T mean_dice = T(0);
    for (int ci = 1; ci < c; ++ci)
        mean_dice += (T(2) * inter[ci] + smooth) / (psum[ci] + tsum[ci] + smooth);
    mean_dice /= static_cast<T>(n_fg);

    Tensor<T> out({1});
    out.data[0] = T(1) - mean_dice;
    const int ip = probs.id;
    Tensor<T> oh = onehot;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ip, oh = std::move(oh), inter, psum, tsum, c, plane, smooth,
                          n_fg] {
        const T g = tp->grad(id).data[0];
        auto& gp = tp->grad(ip);
        for (int ci = 1; ci < c; ++ci) {
            const T denom = psum[ci] + tsum[ci] + smooth;
            const T num = T(2) * inter[ci] + smooth;
            for (std::size_t i = 0; i < plane; ++i) {
                const T tv = oh.data[ci * plane + i];
                // d dice_c / d p_c(i) = (2 t - num/denom) / denom
                const T d = (T(2) * tv - num / denom) / denom;
                gp.data[ci * plane + i] += g * (-d / static_cast<T>(n_fg));
            }
        }
    });
    return {tp, id};
}

// Activation overlap: mean over classes of the average pairwise (unordered,
// i<j) dot product between flattened same-class similarity channels,
// normalized by C(K,2). Classes with a single prototype contribute zero.
// similarity: (M, H_d, W_d); class_of_prototype: length M.
template <typename T>
ad::Var<T> activation_overlap(ad::Var<T> similarity, const std::vector<int>& class_of_prototype,
                              int num_classes) {
    ad::Tape<T>* tp = similarity.tape;
    const int m = similarity.shape()[0];
    if (static_cast<int>(class_of_prototype.size()) != m)
        throw std::invalid_argument("activation_overlap: class map size mismatch");
    const std::size_t plane = similarity.value().data.size() / static_cast<std::size_t>(m);
    const auto& s = similarity.value();

    // per-class channel sums and per-channel squared norms; the pair sum is
    // (|sum|^2 - sum of |S_i|^2) / 2
    std::vector<std::vector<T>> class_sum(static_cast<std::size_t>(num_classes),
                                          std::vector<T>(plane, T(0)));
    std::vector<int> class_count(static_cast<std::size_t>(num_classes), 0);
    std::vector<T> sq_norm_sum(static_cast<std::size_t>(num_classes), T(0));
    for (int i = 0; i < m; ++i) {
        const int cls = class_of_prototype[static_cast<std::size_t>(i)];
        if (cls < 0 || cls >= num_classes)
            throw std::invalid_argument("activation_overlap: class id out of range");
        class_count[cls]++;
        auto& cs = class_sum[cls];
        for (std::size_t k = 0; k < plane; ++k) {
            const T v = s.data[i * plane + k];
            cs[k] += v;
            sq_norm_sum[cls] += v * v;
        }
    }
    T total = T(0);
    std::vector<T> class_scale(static_cast<std::size_t>(num_classes), T(0));
    for (int cls = 0; cls < num_classes; ++cls) {
        const int k = class_count[cls];
        if (k < 2) continue;
        const T pairs = static_cast<T>(k) * static_cast<T>(k - 1) / T(2);
        T sumsq = T(0);
        for (std::size_t i = 0; i < plane; ++i) sumsq += class_sum[cls][i] * class_sum[cls][i];
        const T pair_dot_sum = (sumsq - sq_norm_sum[cls]) / T(2);
        total += pair_dot_sum / pairs;
        class_scale[cls] = T(1) / (pairs * static_cast<T>(num_classes));
    }
    total /= static_cast<T>(num_classes);

    Tensor<T> out({1});
    out.data[0] = total;
    const int is = similarity.id;
    std::vector<int> cls_map = class_of_prototype;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, is, cls_map = std::move(cls_map),
                          class_sum = std::move(class_sum), class_scale, m, plane] {
        const T g = tp->grad(id).data[0];
        const auto& s0 = tp->value(is);
        auto& gs = tp->grad(is);
        for (int i = 0; i < m; ++i) {
            const int cls = cls_map[static_cast<std::size_t>(i)];
            const T sc = class_scale[static_cast<std::size_t>(cls)];
            if (sc == T(0)) continue;
            const auto& cs = class_sum[static_cast<std::size_t>(cls)];
            for (std::size_t k = 0; k < plane; ++k)
                gs.data[i * plane + k] += g * sc * (cs[k] - s0.data[i * plane + k]);
        }
    });
    return {tp, id};
}

template <typename T>
ad::Var<T> l1_penalty(ad::Var<T> weights) {
    return ad::sum_abs(weights);
}

// L = alpha*ce + beta*overlap + gamma*l1. Non-finite parts abort training, so
// they are rejected here with a diagnostic.
template <typename T>
ad::Var<T> combined_objective(ad::Var<T> ce, ad::Var<T> overlap, ad::Var<T> l1,
                              const LossWeights& w) {
    for (const auto* part : {&ce, &overlap, &l1})
        if (!std::isfinite(static_cast<double>(part->value().data[0])))
            throw std::runtime_error("combined_objective: non-finite loss term");
    return ad::add(ad::add(ad::scale(ce, static_cast<T>(w.alpha)),
                           ad::scale(overlap, static_cast<T>(w.beta))),
                   ad::scale(l1, static_cast<T>(w.gamma)));
}

}  // namespace losses
}  // namespace rseg

#endif
