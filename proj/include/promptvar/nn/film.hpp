#pragma once

#include <string>

#include "promptvar/nn/layers.hpp"

namespace promptvar::nn {

// Feature-wise affine modulation h' = (1 + γ̂(c)) ⊙ h + β(c), with γ̂ and β
// affine in the conditioning row c. All modulation parameters start at zero,
// so a fresh layer is the identity.
class Film {
public:
    struct Cache {
        Tensor2 h;
        Tensor2 cond;
        Tensor2 gamma;  // 1 + γ̂(c), 1×d
    };

    Film() = default;
    Film(ParamSet& ps, const std::string& name, std::size_t d, std::size_t d_cond)
        : gw_(ps.add(name + ".gamma_w", Tensor2(d_cond, d))),
          gb_(ps.add(name + ".gamma_b", Tensor2(1, d))),
          bw_(ps.add(name + ".beta_w", Tensor2(d_cond, d))),
          bb_(ps.add(name + ".beta_b", Tensor2(1, d))) {}

    Param& gamma_weight() { return *gw_; }
    Param& gamma_bias() { return *gb_; }
    Param& beta_weight() { return *bw_; }
    Param& beta_bias() { return *bb_; }

    Tensor2 forward(const Tensor2& h, const Tensor2& cond, Cache* cache = nullptr) const {
        if (cond.rows() != 1 || cond.cols() != gw_->value.rows())
            throw DimensionError("film: condition " + cond.shape() + " expects [1x" + std::to_string(gw_->value.rows()) + "]");
        if (h.cols() != gw_->value.cols())
            throw DimensionError("film: input " + h.shape() + " expects width " + std::to_string(gw_->value.cols()));
        Tensor2 gamma = matmul(cond, gw_->value);
        gamma += gb_->value;
        for (double& g : gamma.data()) g += 1.0;
        Tensor2 beta = matmul(cond, bw_->value);
        beta += bb_->value;
        Tensor2 y(h.rows(), h.cols());
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < h.cols(); ++j) y(i, j) = gamma[j] * h(i, j) + beta[j];
        if (cache != nullptr) *cache = Cache{h, cond, std::move(gamma)};
        return y;
    }

    struct Grads {
        Tensor2 dh;
        Tensor2 dcond;
    };

    Grads backward(const Cache& c, const Tensor2& dy) {
        Tensor2 dh(dy.rows(), dy.cols());
        Tensor2 dgamma(1, dy.cols()), dbeta(1, dy.cols());
        for (std::size_t i = 0; i < dy.rows(); ++i)
            for (std::size_t j = 0; j < dy.cols(); ++j) {
                dh(i, j) = dy(i, j) * c.gamma[j];
                dgamma[j] += dy(i, j) * c.h(i, j);
                dbeta[j] += dy(i, j);
            }
        gw_->grad += matmul_tn(c.cond, dgamma);
        gb_->grad += dgamma;
        bw_->grad += matmul_tn(c.cond, dbeta);
        bb_->grad += dbeta;
        Tensor2 dcond = matmul_nt(dgamma, gw_->value);
        dcond += matmul_nt(dbeta, bw_->value);
        return {std::move(dh), std::move(dcond)};
    }

private:
    Param* gw_ = nullptr;
    Param* gb_ = nullptr;
    Param* bw_ = nullptr;
    Param* bb_ = nullptr;
};

}  // namespace promptvar::nn
