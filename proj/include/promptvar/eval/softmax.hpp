#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"

namespace promptvar::eval {

using SparseRow = std::vector<std::pair<std::size_t, double>>;  // (feature, value)

struct SoftmaxConfig {
    double l2 = 1e-4;
    std::size_t max_epochs = 500;
    double grad_tol = 1e-6;
    double lr = 0.05;
};

// L2-regularized multinomial logistic regression, trained full-batch with
// Adam until the gradient norm drops below grad_tol or max_epochs pass.
// Features are arbitrary ids; ids never seen in training are ignored.
class SoftmaxRegression {
public:
    std::size_t classes() const { return k_; }
    std::size_t epochs_run() const { return epochs_; }
    double final_grad_norm() const { return grad_norm_; }

    void fit(const std::vector<SparseRow>& rows, const std::vector<std::size_t>& y, std::size_t classes,
             const SoftmaxConfig& cfg) {
        if (rows.empty() || rows.size() != y.size()) throw DataError("softmax: need one label per row");
        k_ = classes;
        index_.clear();
        std::vector<std::vector<std::pair<std::size_t, double>>> X;
        X.reserve(rows.size());
        for (const auto& r : rows) {
            std::vector<std::pair<std::size_t, double>> c;
            for (const auto& [f, v] : r) {
                auto it = index_.try_emplace(f, index_.size()).first;
                c.emplace_back(it->second, v);
            }
            X.push_back(std::move(c));
        }
        const std::size_t P = (index_.size() + 1) * k_;  // last block is the bias
        w_.assign(P, 0.0);
        std::vector<double> g(P), m(P, 0.0), v(P, 0.0), logits(k_);
        const double n = static_cast<double>(rows.size());
        for (epochs_ = 0; epochs_ < cfg.max_epochs;) {
            std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t i = 0; i < X.size(); ++i) {
                scores(X[i], logits);
                for (std::size_t c = 0; c < k_; ++c) {
                    const double d = (logits[c] - (c == y[i] ? 1.0 : 0.0)) / n;
                    for (const auto& [f, val] : X[i]) g[f * k_ + c] += d * val;
                    g[bias(c)] += d;
                }
            }
            for (std::size_t j = 0; j < index_.size() * k_; ++j) g[j] += cfg.l2 * w_[j];
            double norm = 0.0;
            for (double x : g) norm += x * x;
            grad_norm_ = std::sqrt(norm);
            if (grad_norm_ < cfg.grad_tol) break;
            ++epochs_;
            const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(epochs_));
            const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(epochs_));
            for (std::size_t j = 0; j < P; ++j) {
                m[j] = 0.9 * m[j] + 0.1 * g[j];
                v[j] = 0.999 * v[j] + 0.001 * g[j] * g[j];
                w_[j] -= cfg.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + 1e-8);
            }
        }
    }

    std::vector<double> probabilities(const SparseRow& row) const {
        std::vector<std::pair<std::size_t, double>> c;
        for (const auto& [f, v] : row)
            if (auto it = index_.find(f); it != index_.end()) c.emplace_back(it->second, v);
        std::vector<double> p(k_);
        scores(c, p);
        return p;
    }

    std::size_t predict(const SparseRow& row) const {
        const auto p = probabilities(row);
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[best]) best = c;
        return best;
    }

    nlohmann::json to_json() const {
        nlohmann::json feats = nlohmann::json::object();
        for (const auto& [f, i] : index_) feats[std::to_string(f)] = i;
        return {{"classes", k_}, {"features", feats}, {"weights", w_}};
    }

    static SoftmaxRegression from_json(const nlohmann::json& j) {
        SoftmaxRegression r;
        r.k_ = j.at("classes");
        for (const auto& [f, i] : j.at("features").items()) r.index_[std::stoull(f)] = i.get<std::size_t>();
        r.w_ = j.at("weights").get<std::vector<double>>();
        if (r.w_.size() != (r.index_.size() + 1) * r.k_) throw ParseError("softmax: weight count does not match features");
        return r;
    }

private:
    std::size_t bias(std::size_t c) const { return index_.size() * k_ + c; }

    // Softmax probabilities into `out`.
    void scores(const std::vector<std::pair<std::size_t, double>>& x, std::vector<double>& out) const {
        double mx = -INFINITY;
        for (std::size_t c = 0; c < k_; ++c) {
            double s = w_[bias(c)];
            for (const auto& [f, v] : x) s += w_[f * k_ + c] * v;
            out[c] = s;
            mx = std::max(mx, s);
        }
        double z = 0.0;
        for (double& s : out) z += (s = std::exp(s - mx));
        for (double& s : out) s /= z;
    }

    std::size_t k_ = 0;
    std::unordered_map<std::size_t, std::size_t> index_;
    std::vector<double> w_;
    std::size_t epochs_ = 0;
    double grad_norm_ = 0.0;
};

}  // namespace promptvar::eval
