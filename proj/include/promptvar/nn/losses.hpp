#pragma once

#include <cmath>
#include <cstddef>

#include "promptvar/errors.hpp"
#include "promptvar/nn/tensor.hpp"

namespace promptvar::nn {

struct LossGrad {
    double loss = 0.0;
    Tensor2 grad;  // d loss / d input
};

// Softmax cross-entropy of one row of logits against a class index.
inline LossGrad cross_entropy(const Tensor2& logits, std::size_t target) {
    if (logits.rows() != 1 || target >= logits.cols())
        throw DimensionError("cross_entropy: logits " + logits.shape() + ", target " + std::to_string(target));
    Tensor2 p = softmax_rows(logits);
    const double loss = -std::log(std::max(p(0, target), 1e-300));
    p(0, target) -= 1.0;
    return {loss, std::move(p)};
}

// Mean absolute error. The subgradient at zero is zero.
inline LossGrad l1_loss(const Tensor2& pred, const Tensor2& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw DimensionError("l1_loss: " + pred.shape() + " vs " + target.shape());
    const double n = static_cast<double>(pred.size());
    LossGrad out{0.0, Tensor2(pred.rows(), pred.cols())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred.data()[i] - target.data()[i];
        out.loss += std::abs(diff);
        out.grad.data()[i] = (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) / n;
    }
    out.loss /= n;
    return out;
}

inline LossGrad mse_loss(const Tensor2& pred, const Tensor2& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw DimensionError("mse_loss: " + pred.shape() + " vs " + target.shape());
    const double n = static_cast<double>(pred.size());
    LossGrad out{0.0, Tensor2(pred.rows(), pred.cols())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred.data()[i] - target.data()[i];
        out.loss += diff * diff;
        out.grad.data()[i] = 2.0 * diff / n;
    }
    out.loss /= n;
    return out;
}

}  // namespace promptvar::nn
