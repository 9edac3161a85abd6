#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mpvad/fastmath.hpp"
#include "mpvad/kernels.hpp"
#include "mpvad/tensor.hpp"

namespace mpvad {

// ============================================================================
// Reverse-mode autodiff on a per-evaluation tape.
//
// A Tape owns every intermediate tensor of one forward pass; backward() walks
// the nodes in reverse creation order (which is a topological order by
// construction). Parameters enter a tape once via param() and their gradients
// are read back with accumulate_param_grads(), so tapes never mutate shared
// state and concurrent evaluation with shared parameters is safe.
// ============================================================================

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;

    void ensure_grad() {
        if (grad.shape != value.shape) grad = Tensor<T>(value.shape);
    }
    void zero_grad() {
        ensure_grad();
        grad.fill(T(0));
    }
};

template <typename T>
class Tape;

template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    int id = -1;

    const Tensor<T>& val() const { return tape->value(id); }
    const std::vector<int>& shape() const { return tape->value(id).shape; }
    bool defined() const { return tape != nullptr && id >= 0; }
};

template <typename T>
class Tape {
public:
    int add(Tensor<T> value, bool requires_grad) {
        nodes_.push_back(Node{std::move(value), Tensor<T>(), nullptr, requires_grad});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void set_backward(int id, std::function<void()> fn) {
        nodes_[static_cast<size_t>(id)].backward = std::move(fn);
    }

    Var<T> constant(Tensor<T> v) { return {this, add(std::move(v), false)}; }
    Var<T> input(Tensor<T> v, bool requires_grad = true) {
        return {this, add(std::move(v), requires_grad)};
    }

    // One leaf per parameter per tape regardless of how often it is used.
    Var<T> param(Parameter<T>& p) {
        auto it = leaf_cache_.find(&p);
        if (it != leaf_cache_.end()) return {this, it->second};
        int id = add(p.value, p.trainable);
        leaf_cache_.emplace(&p, id);
        param_leaves_.emplace_back(&p, id);
        return {this, id};
    }

    const Tensor<T>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
    bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.empty(); }

    // Gradient buffer, zero-initialized on first touch.
    Tensor<T>& grad(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.empty() && !n.value.empty()) n.grad = Tensor<T>(n.value.shape);
        return n.grad;
    }

    void backward(Var<T> root) {
        if (value(root.id).numel() != 1)
            throw ValidationError("backward: root must be a scalar");
        grad(root.id).fill(T(1));
        for (int id = root.id; id >= 0; --id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (n.backward && !n.grad.empty()) n.backward();
        }
    }

    // Adds scale * dL/dp into each trainable parameter's grad buffer.
    void accumulate_param_grads(T scale = T(1)) {
        for (auto& [p, id] : param_leaves_) {
            if (!p->trainable || !has_grad(id)) continue;
            p->ensure_grad();
            const Tensor<T>& g = nodes_[static_cast<size_t>(id)].grad;
            T* dst = p->grad.ptr();
            const T* src = g.ptr();
            for (size_t i = 0; i < g.numel(); ++i) dst[i] += scale * src[i];
        }
    }

    const std::vector<std::pair<Parameter<T>*, int>>& param_leaves() const {
        return param_leaves_;
    }

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::function<void()> backward;
        bool requires_grad = false;
    };
    std::vector<Node> nodes_;
    std::vector<std::pair<Parameter<T>*, int>> param_leaves_;
    std::unordered_map<const void*, int> leaf_cache_;
};

// ----------------------------------------------------------------------------
// Elementwise ops
// ----------------------------------------------------------------------------

template <typename T, typename Fwd, typename Bwd>
Var<T> unary_op(Var<T> x, Fwd fwd, Bwd bwd) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    Tensor<T> y(xv.shape);
    for (size_t i = 0; i < xv.numel(); ++i) y[i] = fwd(xv[i]);
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id, bwd]() {
            const Tensor<T>& yv = tp.value(id);
            const Tensor<T>& xv2 = tp.value(xid);
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (size_t i = 0; i < yv.numel(); ++i) gx[i] += gy[i] * bwd(xv2[i], yv[i]);
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> relu(Var<T> x) {
    return unary_op(
        x, [](T v) { return v > T(0) ? v : T(0); },
        [](T, T y) { return y > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> tanh_act(Var<T> x) {
    return unary_op(
        x, [](T v) { return fast_tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
    return unary_op(
        x, [](T v) { return fast_sigmoid(v); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    require_same_shape(av, bv, "add");
    Tensor<T> y(av.shape);
    for (size_t i = 0; i < av.numel(); ++i) y[i] = av[i] + bv[i];
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id]() {
            const Tensor<T>& gy = tp.grad(id);
            if (tp.requires_grad(aid)) {
                Tensor<T>& ga = tp.grad(aid);
                for (size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i];
            }
            if (tp.requires_grad(bid)) {
                Tensor<T>& gb = tp.grad(bid);
                for (size_t i = 0; i < gy.numel(); ++i) gb[i] += gy[i];
            }
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    require_same_shape(av, bv, "sub");
    Tensor<T> y(av.shape);
    for (size_t i = 0; i < av.numel(); ++i) y[i] = av[i] - bv[i];
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id]() {
            const Tensor<T>& gy = tp.grad(id);
            if (tp.requires_grad(aid)) {
                Tensor<T>& ga = tp.grad(aid);
                for (size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i];
            }
            if (tp.requires_grad(bid)) {
                Tensor<T>& gb = tp.grad(bid);
                for (size_t i = 0; i < gy.numel(); ++i) gb[i] -= gy[i];
            }
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    require_same_shape(av, bv, "mul");
    Tensor<T> y(av.shape);
    for (size_t i = 0; i < av.numel(); ++i) y[i] = av[i] * bv[i];
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id]() {
            const Tensor<T>& gy = tp.grad(id);
            const Tensor<T>& av2 = tp.value(aid);
            const Tensor<T>& bv2 = tp.value(bid);
            if (tp.requires_grad(aid)) {
                Tensor<T>& ga = tp.grad(aid);
                for (size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i] * bv2[i];
            }
            if (tp.requires_grad(bid)) {
                Tensor<T>& gb = tp.grad(bid);
                for (size_t i = 0; i < gy.numel(); ++i) gb[i] += gy[i] * av2[i];
            }
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> scale(Var<T> x, T c) {
    return unary_op(
        x, [c](T v) { return c * v; }, [c](T, T) { return c; });
}

// Per-channel affine on [C,H,W]: y[c] = x[c] * s[c] + o[c] with constant s, o.
template <typename T>
Var<T> channel_affine(Var<T> x, std::vector<T> s, std::vector<T> o) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    const int c = xv.dim(0);
    const size_t plane = xv.numel() / static_cast<size_t>(c);
    Tensor<T> y(xv.shape);
    for (int ch = 0; ch < c; ++ch)
        for (size_t i = 0; i < plane; ++i)
            y.data[ch * plane + i] = xv.data[ch * plane + i] * s[ch] + o[ch];
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id, s, plane, c]() {
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (int ch = 0; ch < c; ++ch)
                for (size_t i = 0; i < plane; ++i)
                    gx.data[ch * plane + i] += gy.data[ch * plane + i] * s[ch];
        });
    }
    return {&tp, id};
}

// [1,H,W] -> [3,H,W]
template <typename T>
Var<T> replicate_ch3(Var<T> x) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    const size_t plane = xv.numel();
    Tensor<T> y({3, xv.dim(1), xv.dim(2)});
    for (int ch = 0; ch < 3; ++ch)
        std::copy(xv.data.begin(), xv.data.end(), y.data.begin() + ch * plane);
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id, plane]() {
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (int ch = 0; ch < 3; ++ch)
                for (size_t i = 0; i < plane; ++i) gx[i] += gy.data[ch * plane + i];
        });
    }
    return {&tp, id};
}

// ----------------------------------------------------------------------------
// Shape ops
// ----------------------------------------------------------------------------

template <typename T>
Var<T> view(Var<T> x, std::vector<int> new_shape) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    if (Tensor<T>::count(new_shape) != xv.numel())
        throw ValidationError("view: element count mismatch");
    Tensor<T> y;
    y.shape = std::move(new_shape);
    y.data = xv.data;
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id]() {
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (size_t i = 0; i < gy.numel(); ++i) gx[i] += gy[i];
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> concat_ch(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    if (av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2))
        throw ValidationError("concat_ch: spatial shape mismatch");
    Tensor<T> y({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
    std::copy(av.data.begin(), av.data.end(), y.data.begin());
    std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + av.numel());
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id]() {
            const Tensor<T>& gy = tp.grad(id);
            const size_t na = tp.value(aid).numel();
            if (tp.requires_grad(aid)) {
                Tensor<T>& ga = tp.grad(aid);
                for (size_t i = 0; i < na; ++i) ga[i] += gy[i];
            }
            if (tp.requires_grad(bid)) {
                Tensor<T>& gb = tp.grad(bid);
                for (size_t i = 0; i < gy.numel() - na; ++i) gb[i] += gy[i + na];
            }
        });
    }
    return {&tp, id};
}

// ----------------------------------------------------------------------------
// Linear algebra
// ----------------------------------------------------------------------------

namespace detail_ad {
template <typename T>
inline std::pair<int, int> as_matrix(const Tensor<T>& t) {
    int rows = t.dim(0);
    int cols = static_cast<int>(t.numel()) / rows;
    return {rows, cols};
}
}  // namespace detail_ad

// C[m,n] = A[m,k] * B[k,n]; trailing dims are flattened.
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    auto [m, k] = detail_ad::as_matrix(av);
    auto [k2, n] = detail_ad::as_matrix(bv);
    if (k != k2) throw ValidationError("matmul: inner dimension mismatch");
    Tensor<T> y({m, n});
    mat_mul(y.ptr(), av.ptr(), bv.ptr(), m, k, n, false);
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id, m = m, k = k, n = n]() {
            const Tensor<T>& gy = tp.grad(id);
            if (tp.requires_grad(aid))
                mat_mul_nt(tp.grad(aid).ptr(), gy.ptr(), tp.value(bid).ptr(), m, n, k, true);
            if (tp.requires_grad(bid))
                mat_mul_tn(tp.grad(bid).ptr(), tp.value(aid).ptr(), gy.ptr(), k, m, n, true);
        });
    }
    return {&tp, id};
}

// C[m,n] = A^T * B with A stored [k,m], B stored [k,n].
template <typename T>
Var<T> matmul_tn(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    auto [k, m] = detail_ad::as_matrix(av);
    auto [k2, n] = detail_ad::as_matrix(bv);
    if (k != k2) throw ValidationError("matmul_tn: inner dimension mismatch");
    Tensor<T> y({m, n});
    mat_mul_tn(y.ptr(), av.ptr(), bv.ptr(), m, k, n, false);
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id, m = m, k = k, n = n]() {
            const Tensor<T>& gy = tp.grad(id);
            // dA[k,m] = B[k,n] * gy^T[n,m]; dB[k,n] = A[k,m] * gy[m,n]
            if (tp.requires_grad(aid))
                mat_mul_nt(tp.grad(aid).ptr(), tp.value(bid).ptr(), gy.ptr(), k, n, m, true);
            if (tp.requires_grad(bid))
                mat_mul(tp.grad(bid).ptr(), tp.value(aid).ptr(), gy.ptr(), k, m, n, true);
        });
    }
    return {&tp, id};
}

// C[m,n] = A * B^T with A [m,k], B stored [n,k].
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
    Tape<T>& tp = *a.tape;
    const Tensor<T>& av = tp.value(a.id);
    const Tensor<T>& bv = tp.value(b.id);
    auto [m, k] = detail_ad::as_matrix(av);
    auto [n, k2] = detail_ad::as_matrix(bv);
    if (k != k2) throw ValidationError("matmul_nt: inner dimension mismatch");
    Tensor<T> y({m, n});
    mat_mul_nt(y.ptr(), av.ptr(), bv.ptr(), m, k, n, false);
    bool rg = tp.requires_grad(a.id) || tp.requires_grad(b.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, aid = a.id, bid = b.id, m = m, k = k, n = n]() {
            const Tensor<T>& gy = tp.grad(id);
            // dA[m,k] = gy[m,n] * B[n,k]; dB[n,k] = gy^T[n,m] * A[m,k]
            if (tp.requires_grad(aid))
                mat_mul(tp.grad(aid).ptr(), gy.ptr(), tp.value(bid).ptr(), m, n, k, true);
            if (tp.requires_grad(bid))
                mat_mul_tn(tp.grad(bid).ptr(), gy.ptr(), tp.value(aid).ptr(), n, m, k, true);
        });
    }
    return {&tp, id};
}

// ----------------------------------------------------------------------------
// Convolution, pooling, resampling
// ----------------------------------------------------------------------------

// x [Ci,H,W], w [Co,Ci,k,k], optional bias [Co].
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, int stride = 1, int pad = -1) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    const Tensor<T>& wv = tp.value(w.id);
    const int ci = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
    const int co = wv.dim(0), k = wv.dim(2);
    if (wv.dim(1) != ci)
        throw ValidationError("conv2d: weight expects " + std::to_string(wv.dim(1)) +
                              " input channels, got " + std::to_string(ci));
    if (pad < 0) pad = k / 2;
    const int ho = conv_out_size(h, k, stride, pad);
    const int wo = conv_out_size(wd, k, stride, pad);
    const int cols = ho * wo;
    const int krows = ci * k * k;

    Tensor<T> y({co, ho, wo});
    if (k == 1 && stride == 1 && pad == 0) {
        mat_mul(y.ptr(), wv.ptr(), xv.ptr(), co, ci, cols, false);
    } else {
        std::vector<T> colbuf(static_cast<size_t>(krows) * cols);
        im2col(xv.ptr(), ci, h, wd, k, stride, pad, colbuf.data());
        mat_mul(y.ptr(), wv.ptr(), colbuf.data(), co, krows, cols, false);
    }
    if (b.defined()) {
        const Tensor<T>& bv = tp.value(b.id);
        for (int c = 0; c < co; ++c) {
            T* plane = y.ptr() + static_cast<size_t>(c) * cols;
            for (int i = 0; i < cols; ++i) plane[i] += bv[static_cast<size_t>(c)];
        }
    }

    bool rg = tp.requires_grad(x.id) || tp.requires_grad(w.id) ||
              (b.defined() && tp.requires_grad(b.id));
    int id = tp.add(std::move(y), rg);
    if (rg) {
        int bid = b.defined() ? b.id : -1;
        tp.set_backward(id, [&tp, id, xid = x.id, wid = w.id, bid, ci, h, wd, co, k, stride,
                             pad, ho, wo, cols, krows]() {
            const Tensor<T>& gy = tp.grad(id);
            const Tensor<T>& xv2 = tp.value(xid);
            const Tensor<T>& wv2 = tp.value(wid);
            if (bid >= 0 && tp.requires_grad(bid)) {
                Tensor<T>& gb = tp.grad(bid);
                for (int c = 0; c < co; ++c) {
                    const T* plane = gy.ptr() + static_cast<size_t>(c) * cols;
                    T s = T(0);
                    for (int i = 0; i < cols; ++i) s += plane[i];
                    gb[static_cast<size_t>(c)] += s;
                }
            }
            if (k == 1 && stride == 1 && pad == 0) {
                if (tp.requires_grad(wid))
                    mat_mul_nt(tp.grad(wid).ptr(), gy.ptr(), xv2.ptr(), co, cols, ci, true);
                if (tp.requires_grad(xid))
                    mat_mul_tn(tp.grad(xid).ptr(), wv2.ptr(), gy.ptr(), ci, co, cols, true);
                return;
            }
            std::vector<T> colbuf(static_cast<size_t>(krows) * cols);
            if (tp.requires_grad(wid)) {
                im2col(xv2.ptr(), ci, h, wd, k, stride, pad, colbuf.data());
                mat_mul_nt(tp.grad(wid).ptr(), gy.ptr(), colbuf.data(), co, cols, krows, true);
            }
            if (tp.requires_grad(xid)) {
                mat_mul_tn(colbuf.data(), wv2.ptr(), gy.ptr(), krows, co, cols, false);
                col2im_add(colbuf.data(), ci, h, wd, k, stride, pad, tp.grad(xid).ptr());
            }
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> upsample_nearest2(Var<T> x) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    Tensor<T> y({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                T v = xv.at(ch, i, j);
                y.at(ch, 2 * i, 2 * j) = v;
                y.at(ch, 2 * i, 2 * j + 1) = v;
                y.at(ch, 2 * i + 1, 2 * j) = v;
                y.at(ch, 2 * i + 1, 2 * j + 1) = v;
            }
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id, c, h, w]() {
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (int ch = 0; ch < c; ++ch)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j)
                        gx.at(ch, i, j) += gy.at(ch, 2 * i, 2 * j) + gy.at(ch, 2 * i, 2 * j + 1) +
                                           gy.at(ch, 2 * i + 1, 2 * j) +
                                           gy.at(ch, 2 * i + 1, 2 * j + 1);
        });
    }
    return {&tp, id};
}

// 2x2 max pooling, stride 2; a trailing odd row/column is dropped.
template <typename T>
Var<T> maxpool2(Var<T> x) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    if (h < 2 || w < 2) throw ValidationError("maxpool2: spatial size below 2x2");
    Tensor<T> y({c, h / 2, w / 2});
    auto argmax = std::make_shared<std::vector<int>>(y.numel());
    size_t o = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i + 1 < h; i += 2)
            for (int j = 0; j + 1 < w; j += 2, ++o) {
                int base = (ch * h + i) * w + j;
                int cand[4] = {base, base + 1, base + w, base + w + 1};
                int best = cand[0];
                for (int t = 1; t < 4; ++t)
                    if (xv[static_cast<size_t>(cand[t])] > xv[static_cast<size_t>(best)])
                        best = cand[t];
                y[o] = xv[static_cast<size_t>(best)];
                (*argmax)[o] = best;
            }
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id, argmax]() {
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (size_t i = 0; i < gy.numel(); ++i)
                gx[static_cast<size_t>((*argmax)[i])] += gy[i];
        });
    }
    return {&tp, id};
}

// Row-wise softmax on [R,C]. Backward only needs the output.
template <typename T>
Var<T> softmax_rows(Var<T> x) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    const int r = xv.dim(0);
    const int c = static_cast<int>(xv.numel()) / r;
    Tensor<T> y(xv.shape);
    for (int i = 0; i < r; ++i) {
        const T* row = xv.ptr() + static_cast<size_t>(i) * c;
        T* out = y.ptr() + static_cast<size_t>(i) * c;
        T m = row[0];
        for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
        T sum = T(0);
        for (int j = 0; j < c; ++j) {
            out[j] = fast_exp(row[j] - m);
            sum += out[j];
        }
        T inv = T(1) / sum;
        for (int j = 0; j < c; ++j) out[j] *= inv;
    }
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id, r, c]() {
            const Tensor<T>& yv = tp.value(id);
            const Tensor<T>& gy = tp.grad(id);
            Tensor<T>& gx = tp.grad(xid);
            for (int i = 0; i < r; ++i) {
                const T* yr = yv.ptr() + static_cast<size_t>(i) * c;
                const T* gr = gy.ptr() + static_cast<size_t>(i) * c;
                T* go = gx.ptr() + static_cast<size_t>(i) * c;
                T dot = T(0);
                for (int j = 0; j < c; ++j) dot += yr[j] * gr[j];
                for (int j = 0; j < c; ++j) go[j] += yr[j] * (gr[j] - dot);
            }
        });
    }
    return {&tp, id};
}

template <typename T>
Var<T> sum_all(Var<T> x) {
    Tape<T>& tp = *x.tape;
    const Tensor<T>& xv = tp.value(x.id);
    Tensor<T> y({1});
    T s = T(0);
    for (size_t i = 0; i < xv.numel(); ++i) s += xv[i];
    y[0] = s;
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        tp.set_backward(id, [&tp, id, xid = x.id]() {
            const T g = tp.grad(id)[0];
            Tensor<T>& gx = tp.grad(xid);
            for (size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
        });
    }
    return {&tp, id};
}

}  // namespace mpvad
