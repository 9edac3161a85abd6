#pragma once

#include <map>

#include "mpvad/loss_network.hpp"

namespace mpvad {

// ============================================================================
// Training objective: intensity loss (per-pixel l2 norm of the channel
// difference), gradient difference loss (l1 mismatch of absolute forward
// differences along both axes), and the noise tolerance loss (alpha-weighted
// l1 over frozen loss-network taps).
//
// `sum` reduction follows the plain summed formulas; `mean` divides the
// intensity/gradient terms by the pixel count and each tap term by its
// element count, which keeps the loss weights meaningful across frame sizes.
// Training defaults to mean.
// ============================================================================

enum class Reduction { sum, mean };

struct LossWeights {
    double lambda_int = 1.0;
    double lambda_gd = 1.0;
    double lambda_nt = 1.0;
    std::map<int, double> alpha = {{2, 0.1}, {4, 1.0}, {7, 10.0}, {10, 10.0}, {13, 10.0}};
};

struct LossBreakdown {
    double intensity = 0.0;
    double gradient = 0.0;
    double noise_tolerance = 0.0;
    double total = 0.0;
};

template <typename T>
Var<T> intensity_loss(Tape<T>& tp, Var<T> pred, const Tensor<T>& target,
                      Reduction red = Reduction::sum) {
    const Tensor<T>& pv = tp.value(pred.id);
    require_same_shape(pv, target, "intensity_loss");
    const int c = pv.dim(0), h = pv.dim(1), w = pv.dim(2);
    const size_t plane = static_cast<size_t>(h) * w;
    const double scale = red == Reduction::mean ? 1.0 / static_cast<double>(plane) : 1.0;

    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i) {
        double q = 0.0;
        for (int ch = 0; ch < c; ++ch) {
            double d = static_cast<double>(pv.data[ch * plane + i]) -
                       static_cast<double>(target.data[ch * plane + i]);
            q += d * d;
        }
        acc += std::sqrt(q);
    }
    Tensor<T> y({1});
    y[0] = static_cast<T>(acc * scale);
    bool rg = tp.requires_grad(pred.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        Tensor<T> tgt = target;
        tp.set_backward(id, [&tp, id, pid = pred.id, tgt = std::move(tgt), c, plane, scale]() {
            const T g = tp.grad(id)[0];
            const Tensor<T>& pv2 = tp.value(pid);
            Tensor<T>& gp = tp.grad(pid);
            for (size_t i = 0; i < plane; ++i) {
                double q = 0.0;
                for (int ch = 0; ch < c; ++ch) {
                    double d = static_cast<double>(pv2.data[ch * plane + i]) -
                               static_cast<double>(tgt.data[ch * plane + i]);
                    q += d * d;
                }
                double norm = std::sqrt(q);
                if (norm == 0.0) continue;
                double f = static_cast<double>(g) * scale / norm;
                for (int ch = 0; ch < c; ++ch) {
                    double d = static_cast<double>(pv2.data[ch * plane + i]) -
                               static_cast<double>(tgt.data[ch * plane + i]);
                    gp.data[ch * plane + i] += static_cast<T>(f * d);
                }
            }
        });
    }
    return {&tp, id};
}

namespace detail_loss {
template <typename T>
inline int sgn(T v) {
    return (v > T(0)) - (v < T(0));
}
}  // namespace detail_loss

template <typename T>
Var<T> gradient_difference_loss(Tape<T>& tp, Var<T> pred, const Tensor<T>& target,
                                Reduction red = Reduction::sum) {
    const Tensor<T>& pv = tp.value(pred.id);
    require_same_shape(pv, target, "gradient_difference_loss");
    const int c = pv.dim(0), h = pv.dim(1), w = pv.dim(2);
    if (h < 2 || w < 2) throw ValidationError("gradient_difference_loss: frame smaller than 2x2");
    const double scale = red == Reduction::mean ? 1.0 / (static_cast<double>(h) * w) : 1.0;

    auto eval = [&](const Tensor<T>& p, const Tensor<T>& t) {
        double acc = 0.0;
        for (int ch = 0; ch < c; ++ch)
            for (int i = 1; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    double ap = std::abs(static_cast<double>(p.at(ch, i, j)) - p.at(ch, i - 1, j));
                    double at = std::abs(static_cast<double>(t.at(ch, i, j)) - t.at(ch, i - 1, j));
                    acc += std::abs(ap - at);
                }
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < h; ++i)
                for (int j = 1; j < w; ++j) {
                    double ap = std::abs(static_cast<double>(p.at(ch, i, j)) - p.at(ch, i, j - 1));
                    double at = std::abs(static_cast<double>(t.at(ch, i, j)) - t.at(ch, i, j - 1));
                    acc += std::abs(ap - at);
                }
        return acc;
    };

    Tensor<T> y({1});
    y[0] = static_cast<T>(eval(pv, target) * scale);
    bool rg = tp.requires_grad(pred.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        Tensor<T> tgt = target;
        tp.set_backward(id, [&tp, id, pid = pred.id, tgt = std::move(tgt), c, h, w, scale]() {
            using detail_loss::sgn;
            const double g = static_cast<double>(tp.grad(id)[0]) * scale;
            const Tensor<T>& p = tp.value(pid);
            Tensor<T>& gp = tp.grad(pid);
            for (int ch = 0; ch < c; ++ch)
                for (int i = 1; i < h; ++i)
                    for (int j = 0; j < w; ++j) {
                        T dp = p.at(ch, i, j) - p.at(ch, i - 1, j);
                        T dt = tgt.at(ch, i, j) - tgt.at(ch, i - 1, j);
                        double d = g * sgn(std::abs(static_cast<double>(dp)) -
                                           std::abs(static_cast<double>(dt))) *
                                   sgn(dp);
                        gp.at(ch, i, j) += static_cast<T>(d);
                        gp.at(ch, i - 1, j) -= static_cast<T>(d);
                    }
            for (int ch = 0; ch < c; ++ch)
                for (int i = 0; i < h; ++i)
                    for (int j = 1; j < w; ++j) {
                        T dp = p.at(ch, i, j) - p.at(ch, i, j - 1);
                        T dt = tgt.at(ch, i, j) - tgt.at(ch, i, j - 1);
                        double d = g * sgn(std::abs(static_cast<double>(dp)) -
                                           std::abs(static_cast<double>(dt))) *
                                   sgn(dp);
                        gp.at(ch, i, j) += static_cast<T>(d);
                        gp.at(ch, i, j - 1) -= static_cast<T>(d);
                    }
        });
    }
    return {&tp, id};
}

// sum (or mean) of |x - ref| against a fixed reference activation.
template <typename T>
Var<T> l1_to_const(Tape<T>& tp, Var<T> x, const Tensor<T>& ref, Reduction red) {
    const Tensor<T>& xv = tp.value(x.id);
    require_same_shape(xv, ref, "l1_to_const");
    const double scale = red == Reduction::mean ? 1.0 / static_cast<double>(xv.numel()) : 1.0;
    double acc = 0.0;
    for (size_t i = 0; i < xv.numel(); ++i)
        acc += std::abs(static_cast<double>(xv[i]) - static_cast<double>(ref[i]));
    Tensor<T> y({1});
    y[0] = static_cast<T>(acc * scale);
    bool rg = tp.requires_grad(x.id);
    int id = tp.add(std::move(y), rg);
    if (rg) {
        Tensor<T> r = ref;
        tp.set_backward(id, [&tp, id, xid = x.id, r = std::move(r), scale]() {
            using detail_loss::sgn;
            const double g = static_cast<double>(tp.grad(id)[0]) * scale;
            const Tensor<T>& xv2 = tp.value(xid);
            Tensor<T>& gx = tp.grad(xid);
            for (size_t i = 0; i < xv2.numel(); ++i)
                gx[i] += static_cast<T>(g * sgn(xv2[i] - r[i]));
        });
    }
    return {&tp, id};
}

// Noise tolerance loss: both frames go through the frozen loss network, then
// the tap activations are compared with alpha-weighted l1 distances.
template <typename T>
Var<T> noise_tolerance_loss(Tape<T>& tp, Var<T> pred, const Tensor<T>& target,
                            LossNetwork<T>& net, const std::map<int, double>& alpha,
                            Reduction red = Reduction::sum) {
    require_same_shape(tp.value(pred.id), target, "noise_tolerance_loss");
    Var<T> pred_taps_in = adapt_for_loss_network(tp, pred);
    Var<T> tgt_in = adapt_for_loss_network(tp, tp.constant(target));
    std::vector<Var<T>> pred_taps = net.forward(tp, pred_taps_in);
    std::vector<Var<T>> tgt_taps = net.forward(tp, tgt_in);

    Var<T> total;
    const auto& tap_ids = net.config().taps;
    for (size_t i = 0; i < tap_ids.size(); ++i) {
        auto it = alpha.find(tap_ids[i]);
        double a = it == alpha.end() ? 1.0 : it->second;
        Var<T> term = scale(l1_to_const(tp, pred_taps[i], tgt_taps[i].val(), red),
                            static_cast<T>(a));
        total = total.defined() ? add(total, term) : term;
    }
    return total;
}

struct TotalLossConfig {
    LossWeights weights;
    Reduction reduction = Reduction::mean;
};

template <typename T>
struct TotalLoss {
    Var<T> value;
    LossBreakdown breakdown;
};

// Weighted combination of the three losses. lambda_nt = 0 skips the loss
// network entirely (net may be null in that case).
template <typename T>
TotalLoss<T> total_loss(Tape<T>& tp, Var<T> pred, const Tensor<T>& target,
                        const TotalLossConfig& cfg, LossNetwork<T>* net) {
    const LossWeights& lw = cfg.weights;
    TotalLoss<T> out;
    Var<T> li = intensity_loss(tp, pred, target, cfg.reduction);
    Var<T> lg = gradient_difference_loss(tp, pred, target, cfg.reduction);
    out.breakdown.intensity = static_cast<double>(li.val()[0]);
    out.breakdown.gradient = static_cast<double>(lg.val()[0]);
    Var<T> total = add(scale(li, static_cast<T>(lw.lambda_int)),
                       scale(lg, static_cast<T>(lw.lambda_gd)));
    if (lw.lambda_nt != 0.0) {
        if (!net) throw ConfigError("total_loss: lambda_nt != 0 but no loss network given");
        Var<T> ln = noise_tolerance_loss(tp, pred, target, *net, lw.alpha, cfg.reduction);
        out.breakdown.noise_tolerance = static_cast<double>(ln.val()[0]);
        total = add(total, scale(ln, static_cast<T>(lw.lambda_nt)));
    }
    out.value = total;
    out.breakdown.total = static_cast<double>(total.val()[0]);
    return out;
}

}  // namespace mpvad
