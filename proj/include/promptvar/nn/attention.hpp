#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/nn/layers.hpp"

namespace promptvar::nn {

// Scaled dot-product attention split over `heads`, followed by an output
// projection. Queries come from one sequence, keys/values from another (equal
// for self attention).
class MultiHeadAttention {
public:
    struct Cache {
        Tensor2 q_in, kv_in;
        Tensor2 q, k, v;
        std::vector<Tensor2> probs;  // one m×n matrix per head
        Tensor2 concat;
    };

    MultiHeadAttention() = default;
    MultiHeadAttention(ParamSet& ps, const std::string& name, std::size_t d, std::size_t heads, Rng& rng)
        : heads_(heads) {
        if (heads == 0 || d % heads != 0)
            throw ConfigError("attention: width " + std::to_string(d) + " is not divisible by " +
                              std::to_string(heads) + " heads");
        wq_ = Linear(ps, name + ".q", d, d, rng);
        wk_ = Linear(ps, name + ".k", d, d, rng);
        wv_ = Linear(ps, name + ".v", d, d, rng);
        wo_ = Linear(ps, name + ".o", d, d, rng);
    }

    std::size_t heads() const { return heads_; }
    std::size_t dim() const { return wq_.in_dim(); }
    Linear& out_proj() { return wo_; }
    Linear& value_proj() { return wv_; }

    Tensor2 forward(const Tensor2& q_in, const Tensor2& kv_in, Cache* cache = nullptr) const {
        const std::size_t d = dim();
        if (q_in.cols() != d || kv_in.cols() != d)
            throw DimensionError("attention: inputs " + q_in.shape() + ", " + kv_in.shape() + " expect width " +
                                 std::to_string(d));
        if (kv_in.rows() == 0) throw DimensionError("attention: empty key/value sequence");
        const std::size_t dh = d / heads_;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        Tensor2 q = wq_.forward(q_in);
        Tensor2 k = wk_.forward(kv_in);
        Tensor2 v = wv_.forward(kv_in);
        Tensor2 concat(q_in.rows(), d);
        std::vector<Tensor2> probs;
        probs.reserve(heads_);
        for (std::size_t h = 0; h < heads_; ++h) {
            const Tensor2 qh = slice_cols(q, h * dh, (h + 1) * dh);
            const Tensor2 kh = slice_cols(k, h * dh, (h + 1) * dh);
            const Tensor2 vh = slice_cols(v, h * dh, (h + 1) * dh);
            Tensor2 logits = matmul_nt(qh, kh);
            logits *= scale;
            Tensor2 p = softmax_rows(logits);
            set_cols(concat, h * dh, matmul(p, vh));
            probs.push_back(std::move(p));
        }
        Tensor2 y = wo_.forward(concat);
        if (cache != nullptr) {
            cache->q_in = q_in;
            cache->kv_in = kv_in;
            cache->q = std::move(q);
            cache->k = std::move(k);
            cache->v = std::move(v);
            cache->probs = std::move(probs);
            cache->concat = std::move(concat);
        }
        return y;
    }

    struct Grads {
        Tensor2 dq_in;
        Tensor2 dkv_in;
    };

    Grads backward(const Cache& c, const Tensor2& dy) {
        const std::size_t d = dim();
        const std::size_t dh = d / heads_;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        const Tensor2 dconcat = wo_.backward(c.concat, dy);
        Tensor2 dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
        for (std::size_t h = 0; h < heads_; ++h) {
            const Tensor2 qh = slice_cols(c.q, h * dh, (h + 1) * dh);
            const Tensor2 kh = slice_cols(c.k, h * dh, (h + 1) * dh);
            const Tensor2 vh = slice_cols(c.v, h * dh, (h + 1) * dh);
            const Tensor2 dout = slice_cols(dconcat, h * dh, (h + 1) * dh);
            const Tensor2& p = c.probs[h];
            set_cols(dv, h * dh, matmul_tn(p, dout));
            Tensor2 dlogits = softmax_rows_backward(p, matmul_nt(dout, vh));
            dlogits *= scale;
            set_cols(dq, h * dh, matmul(dlogits, kh));
            set_cols(dk, h * dh, matmul_tn(dlogits, qh));
        }
        Grads g;
        g.dq_in = wq_.backward(c.q_in, dq);
        g.dkv_in = wk_.backward(c.kv_in, dk);
        g.dkv_in += wv_.backward(c.kv_in, dv);
        return g;
    }

private:
    std::size_t heads_ = 1;
    Linear wq_, wk_, wv_, wo_;
};

// Pools a variable-length sequence into `count` rows: learnable query tokens
// cross-attend to the sequence.
class AttentionPool {
public:
    struct Cache {
        MultiHeadAttention::Cache attn;
    };

    AttentionPool() = default;
    AttentionPool(ParamSet& ps, const std::string& name, std::size_t count, std::size_t d, std::size_t heads, Rng& rng)
        : queries_(ps.add(name + ".queries", rng.normal_tensor(count, d, 1.0))),
          attn_(ps, name + ".attn", d, heads, rng) {}

    std::size_t count() const { return queries_->value.rows(); }

    Tensor2 forward(const Tensor2& seq, Cache* cache = nullptr) const {
        return attn_.forward(queries_->value, seq, cache ? &cache->attn : nullptr);
    }

    // Returns d(seq); query gradients accumulate into the parameter.
    Tensor2 backward(const Cache& c, const Tensor2& dy) {
        auto g = attn_.backward(c.attn, dy);
        queries_->grad += g.dq_in;
        return std::move(g.dkv_in);
    }

private:
    Param* queries_ = nullptr;
    MultiHeadAttention attn_;
};

}  // namespace promptvar::nn
