#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/eval/softmax.hpp"
#include "promptvar/nn/tensor.hpp"
#include "promptvar/slu/schema.hpp"

namespace promptvar::eval {

struct ProbeResult {
    std::map<std::string, double> accuracy;
    std::map<std::string, double> majority;  // majority-class rate on the test set
    // accuracy of a label-blind guesser drawing classes at training frequencies
    std::map<std::string, double> chance;
};

// Logistic probes on flattened representations. Features are standardized
// with the training statistics. Targets may include classes outside the
// schema (e.g. "unspecified"); each attribute's label set is taken from the
// training targets.
inline ProbeResult attribute_probe(const std::vector<nn::Tensor2>& train_x, const std::vector<slu::Labels>& train_y,
                                   const std::vector<nn::Tensor2>& test_x, const std::vector<slu::Labels>& test_y,
                                   const std::vector<std::string>& attributes, const SoftmaxConfig& cfg = {}) {
    if (train_x.empty() || test_x.empty()) throw DataError("attribute_probe: empty split");
    if (train_x.size() != train_y.size() || test_x.size() != test_y.size())
        throw DataError("attribute_probe: one label set per representation required");
    const std::size_t dim = train_x.front().size();
    std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
    for (const auto& x : train_x) {
        if (x.size() != dim) throw DimensionError("attribute_probe: representations differ in size");
        for (std::size_t j = 0; j < dim; ++j) mu[j] += x[j];
    }
    for (double& m : mu) m /= static_cast<double>(train_x.size());
    for (const auto& x : train_x)
        for (std::size_t j = 0; j < dim; ++j) sd[j] += (x[j] - mu[j]) * (x[j] - mu[j]);
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(train_x.size())) + 1e-8;
    auto row = [&](const nn::Tensor2& x) {
        if (x.size() != dim) throw DimensionError("attribute_probe: representations differ in size");
        SparseRow r(dim);
        for (std::size_t j = 0; j < dim; ++j) r[j] = {j, (x[j] - mu[j]) / sd[j]};
        return r;
    };
    std::vector<SparseRow> Xtr, Xte;
    for (const auto& x : train_x) Xtr.push_back(row(x));
    for (const auto& x : test_x) Xte.push_back(row(x));

    ProbeResult res;
    for (const auto& attr : attributes) {
        std::map<std::string, std::size_t> ids, train_freq;
        std::vector<std::size_t> y;
        for (const auto& l : train_y) {
            y.push_back(ids.try_emplace(l.at(attr), ids.size()).first->second);
            ++train_freq[l.at(attr)];
        }
        if (ids.size() < 2) throw DataError("attribute_probe: degenerate labels for '" + attr + "'");
        SoftmaxRegression m;
        m.fit(Xtr, y, ids.size(), cfg);
        std::size_t hits = 0;
        std::map<std::string, std::size_t> freq;
        for (std::size_t i = 0; i < Xte.size(); ++i) {
            const auto& want = test_y[i].at(attr);
            ++freq[want];
            const auto it = ids.find(want);
            hits += it != ids.end() && m.predict(Xte[i]) == it->second;
        }
        const double nte = static_cast<double>(Xte.size()), ntr = static_cast<double>(Xtr.size());
        std::size_t top = 0;
        double chance = 0.0;
        for (const auto& [k, v] : freq) {
            top = std::max(top, v);
            if (auto it = train_freq.find(k); it != train_freq.end())
                chance += static_cast<double>(it->second) / ntr * static_cast<double>(v) / nte;
        }
        res.accuracy[attr] = static_cast<double>(hits) / nte;
        res.majority[attr] = static_cast<double>(top) / nte;
        res.chance[attr] = chance;
    }
    return res;
}

}  // namespace promptvar::eval
