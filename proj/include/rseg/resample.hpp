#ifndef RSEG_RESAMPLE_HPP
#define RSEG_RESAMPLE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "rseg/tensor.hpp"

namespace rseg {

// Nearest-neighbor label downsampling (pixel-center convention); keeps labels
// hard.
inline Tensor<std::uint8_t> nn_downsample_labels(const Tensor<std::uint8_t>& labels, int hd,
                                                 int wd) {
    const int h = labels.shape[0], w = labels.shape[1];
    Tensor<std::uint8_t> out({hd, wd});
    for (int y = 0; y < hd; ++y) {
        int sy = static_cast<int>((y + 0.5) * h / hd);
        sy = std::min(sy, h - 1);
        for (int x = 0; x < wd; ++x) {
            int sx = static_cast<int>((x + 0.5) * w / wd);
            sx = std::min(sx, w - 1);
            out.at2(y, x) = labels.at2(sy, sx);
        }
    }
    return out;
}

// Adaptive average pooling of a binary mask to (hd, wd).
inline Tensor<double> avgpool_mask(const Tensor<std::uint8_t>& labels, int hd, int wd) {
    const int h = labels.shape[0], w = labels.shape[1];
    if (hd > h || wd > w) throw std::invalid_argument("avgpool_mask: target larger than input");
    Tensor<double> out({hd, wd});
    for (int y = 0; y < hd; ++y) {
        const int y0 = y * h / hd, y1 = (y + 1) * h / hd;
        for (int x = 0; x < wd; ++x) {
            const int x0 = x * w / wd, x1 = (x + 1) * w / wd;
            double s = 0.0;
            for (int sy = y0; sy < y1; ++sy)
                for (int sx = x0; sx < x1; ++sx) s += labels.at2(sy, sx);
            out.at2(y, x) = s / ((y1 - y0) * (x1 - x0));
        }
    }
    return out;
}

template <typename T>
Tensor<T> onehot_labels(const Tensor<std::uint8_t>& labels, int num_classes) {
    const int h = labels.shape[0], w = labels.shape[1];
    Tensor<T> out({num_classes, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at3(labels.at2(y, x), y, x) = T(1);
    return out;
}

inline Tensor<int> labels_to_int(const Tensor<std::uint8_t>& labels) {
    Tensor<int> out;
    out.shape = labels.shape;
    out.data.assign(labels.data.begin(), labels.data.end());
    return out;
}

}  // namespace rseg

#endif
