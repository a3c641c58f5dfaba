#ifndef RSEG_AUTODIFF_HPP
#define RSEG_AUTODIFF_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rseg/tensor.hpp"

namespace rseg::ad {

// Reverse-mode tape. Nodes own their value; gradients are materialized by
// backward(). Backward closures address nodes through the tape by id, so the
// node vector may reallocate while the graph is being built.
template <typename T>
class Tape {
  public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::function<void()> backward;
    };

    int push(Tensor<T> value) {
        nodes_.push_back(Node{std::move(value), Tensor<T>{}, nullptr});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void set_backward(int id, std::function<void()> fn) {
        nodes_[static_cast<std::size_t>(id)].backward = std::move(fn);
    }

    Tensor<T>& value(int id) { return nodes_[static_cast<std::size_t>(id)].value; }
    Tensor<T>& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::size_t size() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and propagates to every node created at or
    // before root. root must be scalar.
    void backward(int root) {
        if (value(root).size() != 1)
            throw std::invalid_argument("backward: root must be scalar");
        for (auto& n : nodes_) n.grad = Tensor<T>(n.value.shape);
        grad(root).data[0] = T(1);
        for (int i = root; i >= 0; --i) {
            auto& n = nodes_[static_cast<std::size_t>(i)];
            if (n.backward) n.backward();
        }
    }

    void clear() { nodes_.clear(); }

  private:
    std::vector<Node> nodes_;
};

template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    int id = -1;

    Tensor<T>& value() const { return tape->value(id); }
    Tensor<T>& grad() const { return tape->grad(id); }
    const std::vector<int>& shape() const { return tape->value(id).shape; }
};

template <typename T>
Var<T> leaf(Tape<T>& tape, Tensor<T> value) {
    return {&tape, tape.push(std::move(value))};
}

template <typename T>
Var<T> constant_scalar(Tape<T>& tape, T v) {
    Tensor<T> t({1});
    t.data[0] = v;
    return leaf(tape, std::move(t));
}

namespace detail {

template <typename T>
void axpy(Tensor<T>& dst, const Tensor<T>& src, T a = T(1)) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += a * src.data[i];
}

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

// Unrolls (C,H,W) into a (C*kh*kw, Hout*Wout) matrix with zero padding.
template <typename T>
MatRM<T> im2col(const Tensor<T>& x, int kh, int kw, int stride, int pad, int hout, int wout) {
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    MatRM<T> col(c * kh * kw, hout * wout);
    col.setZero();
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const int row = (ci * kh + ki) * kw + kj;
                for (int oy = 0; oy < hout; ++oy) {
                    const int sy = oy * stride + ki - pad;
                    if (sy < 0 || sy >= h) continue;
                    for (int ox = 0; ox < wout; ++ox) {
                        const int sx = ox * stride + kj - pad;
                        if (sx < 0 || sx >= w) continue;
                        col(row, oy * wout + ox) = x.at3(ci, sy, sx);
                    }
                }
            }
    return col;
}

template <typename T>
void col2im_accumulate(const MatRM<T>& col, Tensor<T>& dx, int kh, int kw, int stride, int pad,
                       int hout, int wout) {
    const int c = dx.shape[0], h = dx.shape[1], w = dx.shape[2];
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const int row = (ci * kh + ki) * kw + kj;
                for (int oy = 0; oy < hout; ++oy) {
                    const int sy = oy * stride + ki - pad;
                    if (sy < 0 || sy >= h) continue;
                    for (int ox = 0; ox < wout; ++ox) {
                        const int sx = ox * stride + kj - pad;
                        if (sx < 0 || sx >= w) continue;
                        dx.at3(ci, sy, sx) += col(row, oy * wout + ox);
                    }
                }
            }
}

}  // namespace detail

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    if (!same_shape(a.shape(), b.shape())) throw std::invalid_argument("add: shape mismatch");
    Tape<T>* tp = a.tape;
    Tensor<T> out = a.value();
    detail::axpy(out, b.value());
    const int ia = a.id, ib = b.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ia, ib] {
        detail::axpy(tp->grad(ia), tp->grad(id));
        detail::axpy(tp->grad(ib), tp->grad(id));
    });
    return {tp, id};
}

template <typename T>
Var<T> scale(Var<T> a, T k) {
    Tape<T>* tp = a.tape;
    Tensor<T> out = a.value();
    for (auto& v : out.data) v *= k;
    const int ia = a.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ia, k] { detail::axpy(tp->grad(ia), tp->grad(id), k); });
    return {tp, id};
}

template <typename T>
Var<T> relu(Var<T> a) {
    Tape<T>* tp = a.tape;
    Tensor<T> out = a.value();
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    const int ia = a.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ia] {
        const auto& x = tp->value(ia);
        const auto& g = tp->grad(id);
        auto& gx = tp->grad(ia);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            if (x.data[i] > T(0)) gx.data[i] += g.data[i];
    });
    return {tp, id};
}

// 2-D convolution, same dilation-1 semantics as the usual NCHW conv with a
// single image: x (Cin,H,W), weight (Cout, Cin, kh, kw), bias (Cout) optional.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, const Var<T>* bias, int stride, int pad) {
    const auto& xs = x.shape();
    const auto& ws = weight.shape();
    if (xs.size() != 3 || ws.size() != 4 || ws[1] != xs[0])
        throw std::invalid_argument("conv2d: bad shapes");
    const int cin = xs[0], h = xs[1], w = xs[2];
    const int cout = ws[0], kh = ws[2], kw = ws[3];
    const int hout = (h + 2 * pad - kh) / stride + 1;
    const int wout = (w + 2 * pad - kw) / stride + 1;
    if (hout <= 0 || wout <= 0) throw std::invalid_argument("conv2d: empty output");

    Tape<T>* tp = x.tape;
    detail::MatRM<T> col = detail::im2col(x.value(), kh, kw, stride, pad, hout, wout);
    detail::CMapRM<T> wm(weight.value().data.data(), cout, cin * kh * kw);

    Tensor<T> out({cout, hout, wout});
    detail::MapRM<T> om(out.data.data(), cout, hout * wout);
    om.noalias() = wm * col;
    if (bias)
        for (int c = 0; c < cout; ++c) om.row(c).array() += bias->value().data[static_cast<std::size_t>(c)];

    const int ix = x.id, iw = weight.id, ib = bias ? bias->id : -1;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ix, iw, ib, cin, cout, kh, kw, stride, pad, hout, wout] {
        detail::CMapRM<T> gy(tp->grad(id).data.data(), cout, hout * wout);
        detail::MatRM<T> colb =
            detail::im2col(tp->value(ix), kh, kw, stride, pad, hout, wout);
        detail::MapRM<T> gw(tp->grad(iw).data.data(), cout, cin * kh * kw);
        gw.noalias() += gy * colb.transpose();
        if (ib >= 0) {
            auto& gb = tp->grad(ib);
            for (int c = 0; c < cout; ++c) gb.data[static_cast<std::size_t>(c)] += gy.row(c).sum();
        }
        detail::CMapRM<T> wm2(tp->value(iw).data.data(), cout, cin * kh * kw);
        detail::MatRM<T> gcol = wm2.transpose() * gy;
        detail::col2im_accumulate(gcol, tp->grad(ix), kh, kw, stride, pad, hout, wout);
    });
    return {tp, id};
}

namespace detail {

struct LerpAxis {
    std::vector<int> lo, hi;
    std::vector<double> whi;  // weight on hi; weight on lo is 1-whi
};

// align_corners=false source coordinates, clamped to the valid range.
inline LerpAxis bilinear_axis(int src, int dst) {
    LerpAxis a;
    a.lo.resize(static_cast<std::size_t>(dst));
    a.hi.resize(static_cast<std::size_t>(dst));
    a.whi.resize(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        if (s < 0) s = 0;
        if (s > src - 1) s = src - 1;
        const int lo = static_cast<int>(std::floor(s));
        const int hi = std::min(lo + 1, src - 1);
        a.lo[static_cast<std::size_t>(i)] = lo;
        a.hi[static_cast<std::size_t>(i)] = hi;
        a.whi[static_cast<std::size_t>(i)] = s - lo;
    }
    return a;
}

}  // namespace detail

// Plain-tensor bilinear resize (align_corners=false); shared by the
// differentiable op, mask resampling, and evaluation code.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int hout, int wout) {
    if (x.shape.size() != 3) throw std::invalid_argument("bilinear_resize: want (C,H,W)");
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    const auto ay = detail::bilinear_axis(h, hout);
    const auto ax = detail::bilinear_axis(w, wout);
    Tensor<T> out({c, hout, wout});
    for (int ci = 0; ci < c; ++ci)
        for (int oy = 0; oy < hout; ++oy) {
            const int y0 = ay.lo[oy], y1 = ay.hi[oy];
            const T wy = static_cast<T>(ay.whi[oy]);
            for (int ox = 0; ox < wout; ++ox) {
                const int x0 = ax.lo[ox], x1 = ax.hi[ox];
                const T wx = static_cast<T>(ax.whi[ox]);
                const T v00 = x.at3(ci, y0, x0), v01 = x.at3(ci, y0, x1);
                const T v10 = x.at3(ci, y1, x0), v11 = x.at3(ci, y1, x1);
                out.at3(ci, oy, ox) = (T(1) - wy) * ((T(1) - wx) * v00 + wx * v01) +
                                      wy * ((T(1) - wx) * v10 + wx * v11);
            }
        }
    return out;
}

template <typename T>
Var<T> bilinear_upsample(Var<T> x, int hout, int wout) {
    Tape<T>* tp = x.tape;
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    Tensor<T> out = bilinear_resize(x.value(), hout, wout);
    const int ix = x.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ix, c, h, w, hout, wout] {
        const auto ay = detail::bilinear_axis(h, hout);
        const auto ax = detail::bilinear_axis(w, wout);
        const auto& g = tp->grad(id);
        auto& gx = tp->grad(ix);
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < hout; ++oy) {
                const int y0 = ay.lo[oy], y1 = ay.hi[oy];
                const T wy = static_cast<T>(ay.whi[oy]);
                for (int ox = 0; ox < wout; ++ox) {
                    const int x0 = ax.lo[ox], x1 = ax.hi[ox];
                    const T wx = static_cast<T>(ax.whi[ox]);
                    const T gv = g.at3(ci, oy, ox);
                    gx.at3(ci, y0, x0) += (T(1) - wy) * (T(1) - wx) * gv;
                    gx.at3(ci, y0, x1) += (T(1) - wy) * wx * gv;
                    gx.at3(ci, y1, x0) += wy * (T(1) - wx) * gv;
                    gx.at3(ci, y1, x1) += wy * wx * gv;
                }
            }
    });
    return {tp, id};
}

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.size() != 3 || bs.size() != 3 || as[1] != bs[1] || as[2] != bs[2])
        throw std::invalid_argument("concat_channels: spatial mismatch");
    Tape<T>* tp = a.tape;
    Tensor<T> out({as[0] + bs[0], as[1], as[2]});
    std::copy(a.value().data.begin(), a.value().data.end(), out.data.begin());
    std::copy(b.value().data.begin(), b.value().data.end(),
              out.data.begin() + a.value().size());
    const int ia = a.id, ibb = b.id;
    const std::size_t na = a.value().data.size();
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ia, ibb, na] {
        const auto& g = tp->grad(id);
        auto& ga = tp->grad(ia);
        auto& gb = tp->grad(ibb);
        for (std::size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[na + i];
    });
    return {tp, id};
}

// Inverted spatial dropout: whole channels are zeroed, survivors are scaled
// by 1/(1-p). The channel mask comes from the caller's RNG so training stays
// deterministic under a fixed seed.
template <typename T>
Var<T> spatial_dropout(Var<T> x, double p, std::mt19937_64& rng, bool training) {
    if (!training || p <= 0.0) return x;
    if (p >= 1.0) throw std::invalid_argument("spatial_dropout: p must be < 1");
    Tape<T>* tp = x.tape;
    const int c = x.shape()[0];
    std::vector<T> mask(static_cast<std::size_t>(c));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (auto& m : mask) m = (u(rng) < p) ? T(0) : keep_scale;
    Tensor<T> out = x.value();
    const std::size_t plane = out.data.size() / static_cast<std::size_t>(c);
    for (int ci = 0; ci < c; ++ci)
        for (std::size_t i = 0; i < plane; ++i) out.data[ci * plane + i] *= mask[ci];
    const int ix = x.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ix, mask, plane, c] {
        const auto& g = tp->grad(id);
        auto& gx = tp->grad(ix);
        for (int ci = 0; ci < c; ++ci)
            for (std::size_t i = 0; i < plane; ++i)
                gx.data[ci * plane + i] += g.data[ci * plane + i] * mask[ci];
    });
    return {tp, id};
}

// Softmax over the channel axis of (C, H, W), independently per position.
template <typename T>
Var<T> softmax_channels(Var<T> x) {
    Tape<T>* tp = x.tape;
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    Tensor<T> out = x.value();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i) {
        T mx = out.data[i];
        for (int ci = 1; ci < c; ++ci) mx = std::max(mx, out.data[ci * plane + i]);
        T sum = T(0);
        for (int ci = 0; ci < c; ++ci) {
            T e = std::exp(out.data[ci * plane + i] - mx);
            out.data[ci * plane + i] = e;
            sum += e;
        }
        for (int ci = 0; ci < c; ++ci) out.data[ci * plane + i] /= sum;
    }
    const int ix = x.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ix, c, plane] {
        const auto& s = tp->value(id);
        const auto& g = tp->grad(id);
        auto& gx = tp->grad(ix);
        for (std::size_t i = 0; i < plane; ++i) {
            T dot = T(0);
            for (int ci = 0; ci < c; ++ci) dot += g.data[ci * plane + i] * s.data[ci * plane + i];
            for (int ci = 0; ci < c; ++ci)
                gx.data[ci * plane + i] += s.data[ci * plane + i] * (g.data[ci * plane + i] - dot);
        }
    });
    return {tp, id};
}

template <typename T>
Var<T> sum_abs(Var<T> x) {
    Tape<T>* tp = x.tape;
    T s = T(0);
    for (T v : x.value().data) s += std::abs(v);
    Tensor<T> out({1});
    out.data[0] = s;
    const int ix = x.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ix] {
        const T g = tp->grad(id).data[0];
        const auto& x0 = tp->value(ix);
        auto& gx = tp->grad(ix);
        for (std::size_t i = 0; i < x0.data.size(); ++i)
            gx.data[i] += g * (x0.data[i] > T(0) ? T(1) : (x0.data[i] < T(0) ? T(-1) : T(0)));
    });
    return {tp, id};
}

// Extracts the value of the scalar var at index 'pos' of a tensor var.
template <typename T>
Var<T> pick(Var<T> x, std::size_t pos) {
    Tape<T>* tp = x.tape;
    Tensor<T> out({1});
    out.data[0] = x.value().data[pos];
    const int ix = x.id;
    const int id = tp->push(std::move(out));
    tp->set_backward(id, [tp, id, ix, pos] { tp->grad(ix).data[pos] += tp->grad(id).data[0]; });
    return {tp, id};
}

}  // namespace rseg::ad

#endif
