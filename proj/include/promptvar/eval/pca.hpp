#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/nn/rng.hpp"
#include "promptvar/nn/tensor.hpp"

namespace promptvar::eval {

struct PcaResult {
    nn::Tensor2 points;                  // samples × dims
    nn::Tensor2 components;              // dims × features, unit rows
    std::vector<double> explained_ratio;  // per component, of the total variance
    nn::Tensor2 mean;                    // 1 × features
};

// Top principal directions of the rows of X by power iteration on the
// covariance, deflating after each component. Each component's sign is fixed
// so that its largest-magnitude entry is positive.
inline PcaResult pca_project(const nn::Tensor2& X, std::size_t dims = 2, double tol = 1e-9, std::size_t max_iter = 10000) {
    if (X.rows() < 3) throw DataError("pca: need at least 3 samples, got " + std::to_string(X.rows()));
    if (dims == 0 || dims > X.cols()) throw ConfigError("pca: dims must be in [1, " + std::to_string(X.cols()) + "]");
    const std::size_t n = X.rows(), p = X.cols();
    PcaResult r;
    r.mean = nn::mean_rows(X);
    nn::Tensor2 Xc = X;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) Xc(i, j) -= r.mean[j];
    nn::Tensor2 C = nn::matmul_tn(Xc, Xc);
    C *= 1.0 / static_cast<double>(n - 1);
    double trace = 0.0;
    for (std::size_t j = 0; j < p; ++j) trace += C(j, j);
    if (!(trace > 1e-12 * std::max(1.0, nn::frobenius(r.mean))))
        throw DataError("pca: data has no variance (all samples identical)");

    r.components = nn::Tensor2(dims, p);
    nn::Rng rng(0x5ca1ab1e);
    for (std::size_t k = 0; k < dims; ++k) {
        nn::Tensor2 v = rng.normal_tensor(p, 1);
        v *= 1.0 / nn::frobenius(v);
        double lambda = 0.0;
        for (std::size_t it = 0; it < max_iter; ++it) {
            nn::Tensor2 w = nn::matmul(C, v);
            const double norm = nn::frobenius(w);
            if (norm == 0.0) break;  // remaining variance is zero
            w *= 1.0 / norm;
            const double delta = std::min(nn::max_abs_diff(w, v), nn::max_abs_diff(w * -1.0, v));
            v = std::move(w);
            lambda = norm;
            if (delta < tol) break;
        }
        std::size_t arg = 0;
        for (std::size_t j = 1; j < p; ++j)
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        if (v[arg] < 0) v *= -1.0;
        // Rayleigh quotient, exact for the converged vector
        lambda = nn::matmul_tn(v, nn::matmul(C, v))[0];
        for (std::size_t j = 0; j < p; ++j) r.components(k, j) = v[j];
        r.explained_ratio.push_back(std::max(lambda, 0.0) / trace);
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) C(a, b) -= lambda * v[a] * v[b];
    }
    r.points = nn::matmul_nt(Xc, r.components);
    return r;
}

// Mean silhouette coefficient with Euclidean distance.
inline double silhouette(const nn::Tensor2& points, const std::vector<int>& labels) {
    if (labels.size() != points.rows()) throw DimensionError("silhouette: one label per point required");
    std::vector<int> ids;
    for (int l : labels)
        if (std::find(ids.begin(), ids.end(), l) == ids.end()) ids.push_back(l);
    if (ids.size() < 2) throw DataError("silhouette: need at least two clusters");
    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t c = 0; c < points.cols(); ++c) s += (points(i, c) - points(j, c)) * (points(i, c) - points(j, c));
        return std::sqrt(s);
    };
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double a = 0.0, b = std::numeric_limits<double>::infinity();
        for (int id : ids) {
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t j = 0; j < points.rows(); ++j)
                if (labels[j] == id && j != i) {
                    sum += dist(i, j);
                    ++cnt;
                }
            if (id == labels[i]) {
                a = cnt ? sum / static_cast<double>(cnt) : 0.0;
                if (cnt == 0) a = -1.0;  // singleton
            } else if (cnt) {
                b = std::min(b, sum / static_cast<double>(cnt));
            }
        }
        total += a < 0 ? 0.0 : (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(points.rows());
}

}  // namespace promptvar::eval
