#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/log.hpp"
#include "promptvar/nn/adam.hpp"
#include "promptvar/nn/losses.hpp"
#include "promptvar/style/model.hpp"

namespace promptvar::style {

struct StyleExample {
    std::string prompt;
    nn::Tensor2 ref_input;  // reference_input() rows
    slu::Labels labels;
    std::vector<std::string> attributes;  // attributes the prompt describes
    slu::Measurements measurements;
};

struct StyleTrainConfig {
    std::size_t epochs = 20;
    std::size_t batch = 16;
    double lr = 2e-3;
    double clip = 5.0;
    std::uint64_t seed = 42;
};

struct StyleLoss {
    double prompt_ce = 0.0;
    double reference_ce = 0.0;
    double regression = 0.0;
    double total() const { return prompt_ce + reference_ce + regression; }
};

inline TargetStats fit_target_stats(const std::vector<StyleExample>& data) {
    TargetStats s;
    for (std::size_t k = 0; k < kRegressionTargets.size(); ++k) {
        double sum = 0, sq = 0;
        for (const auto& e : data) sum += e.measurements.get(kRegressionTargets[k]);
        s.mean[k] = sum / static_cast<double>(data.size());
        for (const auto& e : data) {
            const double d = e.measurements.get(kRegressionTargets[k]) - s.mean[k];
            sq += d * d;
        }
        s.stddev[k] = std::max(std::sqrt(sq / static_cast<double>(data.size())), 1e-8);
    }
    return s;
}

// Proxy objective for one example. Prompt heads classify each attribute from
// mean(P), with an extra "unspecified" class for attributes the prompt leaves
// out; reference heads classify every attribute and regress standardized
// {f0, rms, rate} from mean(R). With `backprop`, gradients are accumulated.
inline StyleLoss style_example_loss(StyleModel& m, const StyleExample& ex, bool backprop) {
    const auto& schema = m.schema();
    StyleModel::PromptCache pc;
    StyleModel::ReferenceCache rc;
    const nn::Tensor2 P = m.encode_prompt_ids(m.vocab().encode(ex.prompt), &pc).repr;
    const nn::Tensor2 R = m.encode_reference_input(ex.ref_input, &rc);
    const nn::Tensor2 p = nn::mean_rows(P), r = nn::mean_rows(R);
    nn::Tensor2 dp(1, p.cols()), dr(1, r.cols());

    StyleLoss loss;
    for (std::size_t a = 0; a < schema.size(); ++a) {
        const auto& attr = schema.at(a);
        const bool described = std::find(ex.attributes.begin(), ex.attributes.end(), attr.name) != ex.attributes.end();
        const std::size_t cls = *schema.class_index(attr.name, ex.labels.at(attr.name));

        const auto ce_p = nn::cross_entropy(m.prompt_head(a).forward(p), described ? cls : attr.classes.size());
        const auto ce_r = nn::cross_entropy(m.reference_head(a).forward(r), cls);
        loss.prompt_ce += ce_p.loss;
        loss.reference_ce += ce_r.loss;
        if (backprop) {
            dp += m.prompt_head(a).backward(p, ce_p.grad);
            dr += m.reference_head(a).backward(r, ce_r.grad);
        }
    }
    nn::Tensor2 target(1, kRegressionTargets.size());
    for (std::size_t k = 0; k < kRegressionTargets.size(); ++k)
        target(0, k) = (ex.measurements.get(kRegressionTargets[k]) - m.target_stats().mean[k]) / m.target_stats().stddev[k];
    const auto mse = nn::mse_loss(m.regression_head().forward(r), target);
    loss.regression = mse.loss;
    if (backprop) {
        dr += m.regression_head().backward(r, mse.grad);
        // d mean_rows / d rows = 1/rows for every row
        nn::Tensor2 dP(P.rows(), P.cols()), dR(R.rows(), R.cols());
        for (std::size_t i = 0; i < P.rows(); ++i)
            for (std::size_t j = 0; j < P.cols(); ++j) dP(i, j) = dp(0, j) / static_cast<double>(P.rows());
        for (std::size_t i = 0; i < R.rows(); ++i)
            for (std::size_t j = 0; j < R.cols(); ++j) dR(i, j) = dr(0, j) / static_cast<double>(R.rows());
        m.backward_prompt(pc, dP);
        m.backward_reference(rc, dR);
    }
    return loss;
}

struct StyleTrainReport {
    std::vector<double> epoch_losses;
};

inline StyleTrainReport train_style(StyleModel& m, const std::vector<StyleExample>& data, const StyleTrainConfig& cfg) {
    if (data.empty()) throw DataError("train_style: empty dataset");
    m.set_target_stats(fit_target_stats(data));
    StyleTrainReport report;
    nn::Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const nn::AdamConfig adam{cfg.lr};
    m.params().zero_grad();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
            const std::size_t e = std::min(order.size(), b + cfg.batch);
            for (std::size_t i = b; i < e; ++i) {
                const StyleLoss l = style_example_loss(m, data[order[i]], true);
                if (!std::isfinite(l.total()))
                    throw NumericalError("train_style: non-finite loss at epoch " + std::to_string(epoch) + ", example " +
                                         std::to_string(order[i]) + " (prompt_ce=" + std::to_string(l.prompt_ce) +
                                         ", reference_ce=" + std::to_string(l.reference_ce) +
                                         ", regression=" + std::to_string(l.regression) + ", prompt \"" +
                                         data[order[i]].prompt + "\")");
                sum += l.total();
            }
            m.params().scale_grads(1.0 / static_cast<double>(e - b));
            nn::clip_grad_norm(m.params(), cfg.clip);
            nn::adam_step(m.params(), adam);
        }
        report.epoch_losses.push_back(sum / static_cast<double>(data.size()));
        log::debug("style", "epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(report.epoch_losses.back()));
    }
    return report;
}

}  // namespace promptvar::style
