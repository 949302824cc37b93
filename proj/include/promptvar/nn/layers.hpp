#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/nn/param.hpp"
#include "promptvar/nn/tensor.hpp"

namespace promptvar::nn {

// y = xW + b
class Linear {
public:
    Linear() = default;
    Linear(ParamSet& ps, const std::string& name, std::size_t d_in, std::size_t d_out, Rng& rng)
        : w_(ps.add(name + ".w", glorot(rng, d_in, d_out))), b_(ps.add(name + ".b", Tensor2(1, d_out))) {}

    std::size_t in_dim() const { return w_->value.rows(); }
    std::size_t out_dim() const { return w_->value.cols(); }
    Param& weight() { return *w_; }
    Param& bias() { return *b_; }

    Tensor2 forward(const Tensor2& x) const {
        if (x.cols() != w_->value.rows())
            throw DimensionError("linear: input " + x.shape() + " incompatible with weight " + w_->value.shape());
        Tensor2 y = matmul(x, w_->value);
        add_row_broadcast(y, b_->value);
        return y;
    }

    // Accumulates dW, db; returns dx.
    Tensor2 backward(const Tensor2& x, const Tensor2& dy) {
        if (dy.rows() != x.rows() || dy.cols() != w_->value.cols())
            throw DimensionError("linear backward: grad " + dy.shape() + " for input " + x.shape());
        w_->grad += matmul_tn(x, dy);
        b_->grad += column_sums(dy);
        return matmul_nt(dy, w_->value);
    }

private:
    Param* w_ = nullptr;
    Param* b_ = nullptr;
};

class LayerNorm {
public:
    struct Cache {
        Tensor2 xhat;
        std::vector<double> inv_std;
    };

    LayerNorm() = default;
    LayerNorm(ParamSet& ps, const std::string& name, std::size_t d, double eps = 1e-5)
        : gain_(ps.add(name + ".gain", Tensor2(1, d, 1.0))), bias_(ps.add(name + ".bias", Tensor2(1, d))), eps_(eps) {}

    Tensor2 forward(const Tensor2& x, Cache* cache = nullptr) const {
        const std::size_t d = x.cols();
        if (d != gain_->value.cols()) throw DimensionError("layer_norm: input " + x.shape() + " expects width " + std::to_string(gain_->value.cols()));
        Tensor2 xhat(x.rows(), d);
        std::vector<double> inv(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto r = x.row(i);
            double mu = 0.0;
            for (double v : r) mu += v;
            mu /= static_cast<double>(d);
            double var = 0.0;
            for (double v : r) var += (v - mu) * (v - mu);
            var /= static_cast<double>(d);
            inv[i] = 1.0 / std::sqrt(var + eps_);
            for (std::size_t j = 0; j < d; ++j) xhat(i, j) = (r[j] - mu) * inv[i];
        }
        Tensor2 y(x.rows(), d);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) y(i, j) = xhat(i, j) * gain_->value[j] + bias_->value[j];
        if (cache != nullptr) {
            cache->xhat = std::move(xhat);
            cache->inv_std = std::move(inv);
        }
        return y;
    }

    Tensor2 backward(const Cache& c, const Tensor2& dy) {
        const std::size_t n = dy.rows(), d = dy.cols();
        Tensor2 dx(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double g = dy(i, j) * gain_->value[j];
                gain_->grad[j] += dy(i, j) * c.xhat(i, j);
                bias_->grad[j] += dy(i, j);
                sum_g += g;
                sum_gx += g * c.xhat(i, j);
            }
            const double inv_d = 1.0 / static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
                const double g = dy(i, j) * gain_->value[j];
                dx(i, j) = c.inv_std[i] * (g - inv_d * sum_g - c.xhat(i, j) * inv_d * sum_gx);
            }
        }
        return dx;
    }

private:
    Param* gain_ = nullptr;
    Param* bias_ = nullptr;
    double eps_ = 1e-5;
};

// tanh approximation of GELU; smooth everywhere so finite-difference checks
// never straddle a kink.
inline double gelu(double x) {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

inline double gelu_grad(double x) {
    constexpr double k = 0.7978845608028654;
    const double u = k * (x + 0.044715 * x * x * x);
    const double t = std::tanh(u);
    const double du = k * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

class FeedForward {
public:
    struct Cache {
        Tensor2 x;
        Tensor2 pre;
        Tensor2 act;
    };

    FeedForward() = default;
    FeedForward(ParamSet& ps, const std::string& name, std::size_t d, std::size_t hidden, Rng& rng)
        : in_(ps, name + ".in", d, hidden, rng), out_(ps, name + ".out", hidden, d, rng) {}

    Tensor2 forward(const Tensor2& x, Cache* cache = nullptr) const {
        Tensor2 pre = in_.forward(x);
        Tensor2 act = pre;
        for (double& v : act.data()) v = gelu(v);
        Tensor2 y = out_.forward(act);
        if (cache != nullptr) *cache = Cache{x, std::move(pre), std::move(act)};
        return y;
    }

    Tensor2 backward(const Cache& c, const Tensor2& dy) {
        Tensor2 dact = out_.backward(c.act, dy);
        for (std::size_t i = 0; i < dact.size(); ++i) dact[i] *= gelu_grad(c.pre[i]);
        return in_.backward(c.x, dact);
    }

private:
    Linear in_;
    Linear out_;
};

// Lookup table of row vectors.
class Embedding {
public:
    Embedding() = default;
    Embedding(ParamSet& ps, const std::string& name, std::size_t count, std::size_t d, Rng& rng, double stddev = 0.1)
        : table_(ps.add(name + ".table", rng.normal_tensor(count, d, stddev))) {}

    std::size_t count() const { return table_->value.rows(); }
    std::size_t dim() const { return table_->value.cols(); }

    Tensor2 forward(const std::vector<std::size_t>& ids) const {
        Tensor2 out(ids.size(), dim());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] >= count()) throw DimensionError("embedding: id " + std::to_string(ids[i]) + " out of range " + std::to_string(count()));
            const auto r = table_->value.row(ids[i]);
            std::copy(r.begin(), r.end(), out.row(i).begin());
        }
        return out;
    }

    void backward(const std::vector<std::size_t>& ids, const Tensor2& dy) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto g = table_->grad.row(ids[i]);
            const auto d = dy.row(i);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += d[j];
        }
    }

private:
    Param* table_ = nullptr;
};

// Standard sinusoidal code: even columns sin, odd columns cos.
inline void sinusoid_row(double position, std::span<double> out) {
    const std::size_t d = out.size();
    for (std::size_t j = 0; j < d; ++j) {
        const double i2 = static_cast<double>(j - j % 2);
        const double freq = std::exp(-std::log(10000.0) * i2 / static_cast<double>(d));
        out[j] = (j % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
    }
}

inline Tensor2 sinusoidal_positions(std::size_t n, std::size_t d) {
    Tensor2 pe(n, d);
    for (std::size_t i = 0; i < n; ++i) sinusoid_row(static_cast<double>(i), pe.row(i));
    return pe;
}

// Embeds a diffusion step t ∈ [0,1]; t is scaled so that the low-frequency
// channels still resolve small differences in t.
inline Tensor2 timestep_embedding(double t, std::size_t d, double scale = 1000.0) {
    Tensor2 e(1, d);
    sinusoid_row(t * scale, e.row(0));
    return e;
}

}  // namespace promptvar::nn
