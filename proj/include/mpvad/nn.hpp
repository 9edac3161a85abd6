#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpvad/autodiff.hpp"
#include "mpvad/rng.hpp"

namespace mpvad {

// ============================================================================
// Network building blocks. Every block registers its parameters under a
// canonical dotted name so checkpoints are stable and self-describing.
// ============================================================================

template <typename T>
struct ParamBag {
    std::vector<Parameter<T>*> params;

    void add(Parameter<T>* p) { params.push_back(p); }
    size_t total_count() const {
        size_t n = 0;
        for (auto* p : params) n += p->value.numel();
        return n;
    }
    Parameter<T>* find(const std::string& name) const {
        for (auto* p : params)
            if (p->name == name) return p;
        return nullptr;
    }
};

// Kaiming-style fan-in uniform init: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <typename T>
void kaiming_init(Parameter<T>& p, int fan_in, Rng& rng) {
    double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : p.value.data) v = static_cast<T>(rng.next_uniform(-bound, bound));
}

template <typename T>
struct Conv2dLayer {
    Parameter<T> w, b;
    int stride = 1;
    int pad = 1;
    bool has_bias = true;

    void init(const std::string& name, int in_ch, int out_ch, int kernel, int stride_,
              Rng& rng, bool zero = false, bool bias = true) {
        stride = stride_;
        pad = kernel / 2;
        has_bias = bias;
        w.name = name + ".w";
        w.value = Tensor<T>({out_ch, in_ch, kernel, kernel});
        b.name = name + ".b";
        b.value = Tensor<T>({out_ch});
        if (!zero) kaiming_init(w, in_ch * kernel * kernel, rng);
    }

    void collect(ParamBag<T>& bag) {
        bag.add(&w);
        if (has_bias) bag.add(&b);
    }

    Var<T> operator()(Tape<T>& tp, Var<T> x) {
        Var<T> bias = has_bias ? tp.param(b) : Var<T>{};
        return conv2d(x, tp.param(w), bias, stride, pad);
    }
};

// Basic residual block without any normalization layers:
//   y = relu(conv2(relu(conv1(x))) + skip(x))
// skip is identity, or a 1x1 projection when channels or stride change.
template <typename T>
struct ResBlock {
    Conv2dLayer<T> c1, c2;
    std::optional<Conv2dLayer<T>> proj;

    void init(const std::string& name, int in_ch, int out_ch, int stride, Rng& rng) {
        c1.init(name + ".c1", in_ch, out_ch, 3, stride, rng);
        c2.init(name + ".c2", out_ch, out_ch, 3, 1, rng);
        if (in_ch != out_ch || stride != 1) {
            proj.emplace();
            proj->init(name + ".proj", in_ch, out_ch, 1, stride, rng);
            proj->pad = 0;
        }
    }

    void collect(ParamBag<T>& bag) {
        c1.collect(bag);
        c2.collect(bag);
        if (proj) proj->collect(bag);
    }

    Var<T> operator()(Tape<T>& tp, Var<T> x) {
        Var<T> y = c2(tp, relu(c1(tp, x)));
        Var<T> skip = proj ? (*proj)(tp, x) : x;
        return relu(add(y, skip));
    }
};

// Embedded-Gaussian non-local block with residual connection. theta/phi/g are
// 1x1 projections to half the channels; the output projection starts at zero
// so a fresh block is exactly the identity.
template <typename T>
struct NonLocalBlock {
    Conv2dLayer<T> theta, phi, g, out;
    int channels = 0;
    int embed = 0;

    void init(const std::string& name, int ch, Rng& rng) {
        channels = ch;
        embed = std::max(1, ch / 2);
        theta.init(name + ".theta", ch, embed, 1, 1, rng);
        theta.pad = 0;
        phi.init(name + ".phi", ch, embed, 1, 1, rng);
        phi.pad = 0;
        g.init(name + ".g", ch, embed, 1, 1, rng);
        g.pad = 0;
        out.init(name + ".out", embed, ch, 1, 1, rng, /*zero=*/true);
        out.pad = 0;
    }

    void collect(ParamBag<T>& bag) {
        theta.collect(bag);
        phi.collect(bag);
        g.collect(bag);
        out.collect(bag);
    }

    Var<T> operator()(Tape<T>& tp, Var<T> x) {
        const std::vector<int> s = x.shape();  // copy: node storage reallocates
        const int n = s[1] * s[2];
        Var<T> th = view(theta(tp, x), {embed, n});
        Var<T> ph = view(phi(tp, x), {embed, n});
        Var<T> gg = view(g(tp, x), {embed, n});
        Var<T> logits = matmul_tn(th, ph);        // [n,n], row i: queries position i
        Var<T> attn = softmax_rows(logits);       // normalize over key positions
        Var<T> y = matmul_nt(gg, attn);           // [embed,n]
        Var<T> o = out(tp, view(y, {embed, s[1], s[2]}));
        return add(x, o);
    }
};

// Convolutional GRU cell. All gate transforms are 3x3 convolutions; the input
// convs carry the gate bias. Update rule:
//   u = sigmoid(Wu*x + Uu*h); r = sigmoid(Wr*x + Ur*h)
//   cand = tanh(Wc*x + Uc*(r . h));  h' = (1-u) . h + u . cand
template <typename T>
struct ConvGRU {
    Conv2dLayer<T> wu_x, wu_h, wr_x, wr_h, wc_x, wc_h;
    int hidden = 0;

    void init(const std::string& name, int in_ch, int hidden_ch, Rng& rng) {
        hidden = hidden_ch;
        wu_x.init(name + ".wu_x", in_ch, hidden_ch, 3, 1, rng);
        wu_h.init(name + ".wu_h", hidden_ch, hidden_ch, 3, 1, rng, false, /*bias=*/false);
        wr_x.init(name + ".wr_x", in_ch, hidden_ch, 3, 1, rng);
        wr_h.init(name + ".wr_h", hidden_ch, hidden_ch, 3, 1, rng, false, /*bias=*/false);
        wc_x.init(name + ".wc_x", in_ch, hidden_ch, 3, 1, rng);
        wc_h.init(name + ".wc_h", hidden_ch, hidden_ch, 3, 1, rng, false, /*bias=*/false);
    }

    void collect(ParamBag<T>& bag) {
        wu_x.collect(bag);
        wu_h.collect(bag);
        wr_x.collect(bag);
        wr_h.collect(bag);
        wc_x.collect(bag);
        wc_h.collect(bag);
    }

    Var<T> step(Tape<T>& tp, Var<T> h, Var<T> x) {
        Var<T> u = sigmoid(add(wu_x(tp, x), wu_h(tp, h)));
        Var<T> r = sigmoid(add(wr_x(tp, x), wr_h(tp, h)));
        Var<T> cand = tanh_act(add(wc_x(tp, x), wc_h(tp, mul(r, h))));
        // h' = h + u . (cand - h)
        return add(h, mul(u, sub(cand, h)));
    }
};

}  // namespace mpvad
