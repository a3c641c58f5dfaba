#ifndef RSEG_TENSOR_HPP
#define RSEG_TENSOR_HPP

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rseg {

// Dense row-major tensor. Channel-first convention for rasters: (C, H, W).
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, T fill = T(0))
        : shape(std::move(s)), data(count(shape), fill) {}

    static Tensor from(std::vector<int> s, std::vector<T> d) {
        if (count(s) != static_cast<std::int64_t>(d.size()))
            throw std::invalid_argument("tensor: shape/data size mismatch");
        Tensor t;
        t.shape = std::move(s);
        t.data = std::move(d);
        return t;
    }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("tensor: negative dim");
            n *= d;
        }
        return n;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

    // (C, H, W) indexing
    T& at3(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    const T& at3(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    // (H, W) indexing
    T& at2(int y, int x) { return data[static_cast<std::size_t>(y) * shape[1] + x]; }
    const T& at2(int y, int x) const { return data[static_cast<std::size_t>(y) * shape[1] + x]; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

inline bool same_shape(const std::vector<int>& a, const std::vector<int>& b) { return a == b; }

}  // namespace rseg

#endif
