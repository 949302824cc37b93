#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/nn/rng.hpp"
#include "promptvar/nn/tensor.hpp"

namespace promptvar::nn {

// A trainable tensor with its gradient accumulator and Adam moments.
struct Param {
    std::string name;
    Tensor2 value;
    Tensor2 grad;
    Tensor2 adam_m;
    Tensor2 adam_v;
    std::size_t step = 0;

    Param(std::string n, Tensor2 init)
        : name(std::move(n)),
          value(std::move(init)),
          grad(Tensor2::zeros_like(value)),
          adam_m(Tensor2::zeros_like(value)),
          adam_v(Tensor2::zeros_like(value)) {}

    void zero_grad() { grad.fill(0.0); }
};

// Owns parameters with stable addresses; layers keep raw Param pointers into
// it. Moving a ParamSet keeps those pointers valid.
class ParamSet {
public:
    ParamSet() = default;
    ParamSet(ParamSet&&) noexcept = default;
    ParamSet& operator=(ParamSet&&) noexcept = default;
    ParamSet(const ParamSet&) = delete;
    ParamSet& operator=(const ParamSet&) = delete;

    Param* add(const std::string& name, Tensor2 init) {
        if (name == "version") throw ConfigError("parameter name 'version' is reserved");
        if (find(name) != nullptr) throw ConfigError("duplicate parameter name: " + name);
        params_.push_back(std::make_unique<Param>(name, std::move(init)));
        return params_.back().get();
    }

    Param* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }
    const Param* find(const std::string& name) const {
        for (const auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    std::vector<Param*> all() {
        std::vector<Param*> out;
        out.reserve(params_.size());
        for (auto& p : params_) out.push_back(p.get());
        return out;
    }
    std::vector<const Param*> all() const {
        std::vector<const Param*> out;
        out.reserve(params_.size());
        for (const auto& p : params_) out.push_back(p.get());
        return out;
    }

    std::size_t size() const { return params_.size(); }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p->value.size();
        return n;
    }

    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    double grad_norm() const {
        double s = 0.0;
        for (const auto& p : params_)
            for (double g : p->grad.data()) s += g * g;
        return std::sqrt(s);
    }

    void scale_grads(double k) {
        for (auto& p : params_) p->grad *= k;
    }

private:
    std::vector<std::unique_ptr<Param>> params_;
};

// Glorot-uniform initialisation for a fan_in×fan_out weight.
inline Tensor2 glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return rng.uniform_tensor(fan_in, fan_out, -a, a);
}

}  // namespace promptvar::nn
