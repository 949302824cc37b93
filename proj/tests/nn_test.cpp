#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "promptvar/nn/adam.hpp"
#include "promptvar/nn/checkpoint.hpp"
#include "promptvar/nn/transformer.hpp"
#include "support/gradcheck.hpp"

using namespace promptvar;
using namespace promptvar::nn;
using promptvar::testing::check_gradients;
using promptvar::testing::param_targets;
using promptvar::testing::probe_loss;

namespace {

void randomize(ParamSet& ps, Rng& rng, double scale = 0.3) {
    for (Param* p : ps.all())
        for (double& v : p->value.data()) v += scale * rng.normal();
}

}  // namespace

TEST(Rng, MatchesSplitMix64Reference) {
    // Reference values from an independent SplitMix64 implementation.
    Rng r(42);
    EXPECT_EQ(r.next_u64(), 0xbdd732262feb6e95ULL);
    EXPECT_EQ(r.next_u64(), 0x28efe333b266f103ULL);
    EXPECT_EQ(r.next_u64(), 0x47526757130f9f52ULL);
    Rng u(42);
    EXPECT_DOUBLE_EQ(u.uniform(), 0.7415648787718233);
}

TEST(Rng, SameSeedSameStreamAndSplitIsIndependent) {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
    Rng c(7);
    Rng child = c.split(1);
    EXPECT_EQ(c.counter(), 0u);
    EXPECT_NE(child.next_u64(), Rng(7).next_u64());
}

TEST(Rng, NormalMoments) {
    Rng r(3);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Linear, IdentityAndHandSum) {
    ParamSet ps;
    Rng rng(1);
    Linear lin(ps, "l", 2, 2, rng);
    lin.weight().value = Tensor2::identity(2);
    lin.bias().value.fill(0.0);
    EXPECT_EQ(lin.forward(Tensor2::identity(2)), Tensor2::identity(2));

    ParamSet ps2;
    Linear l2(ps2, "l", 2, 1, rng);
    l2.weight().value = Tensor2{{1.0}, {1.0}};
    l2.bias().value = Tensor2{{0.5}};
    EXPECT_DOUBLE_EQ(l2.forward(Tensor2{{1.0, 2.0}})(0, 0), 3.5);
}

TEST(Linear, ShapeMismatchNamesBothShapes) {
    ParamSet ps;
    Rng rng(1);
    Linear lin(ps, "l", 3, 2, rng);
    try {
        lin.forward(Tensor2(2, 4));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x4]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[3x2]"), std::string::npos) << msg;
    }
}

TEST(Linear, GradientMatchesFiniteDifferences) {
    ParamSet ps;
    Rng rng(11);
    Linear lin(ps, "l", 4, 5, rng);
    randomize(ps, rng);
    Tensor2 x = rng.normal_tensor(3, 4);
    const Tensor2 w = rng.normal_tensor(3, 5);
    Tensor2 dx;
    auto targets = param_targets(ps);
    targets.push_back({"x", &x, &dx});
    const auto rep = check_gradients(
        targets, [&] { return probe_loss(lin.forward(x), w); },
        [&] {
            ps.zero_grad();
            dx = lin.backward(x, w);
        });
    EXPECT_LT(rep.worst, 1e-4) << rep.worst_name;
}

TEST(Softmax, Examples) {
    const Tensor2 a = softmax_rows(Tensor2{{0.0, 0.0}});
    EXPECT_DOUBLE_EQ(a(0, 0), 0.5);
    const Tensor2 b = softmax_rows(Tensor2{{1000.0, 1000.0}});
    EXPECT_DOUBLE_EQ(b(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(b(0, 1), 0.5);
    const Tensor2 c = softmax_rows(Tensor2{{0.0, std::log(3.0)}});
    EXPECT_NEAR(c(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(c(0, 1), 0.75, 1e-15);
}

TEST(Softmax, RowsSumToOneProperty) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t r = 1 + rng.below(6), c = 1 + rng.below(9);
        const Tensor2 y = softmax_rows(rng.normal_tensor(r, c, 30.0));
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0;
            for (double v : y.row(i)) {
                EXPECT_GE(v, 0.0);
                s += v;
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Attention, SingleKeyGivesProjectedValueForEveryQuery) {
    ParamSet ps;
    Rng rng(2);
    MultiHeadAttention mha(ps, "a", 4, 2, rng);
    randomize(ps, rng);
    const Tensor2 kv = rng.normal_tensor(1, 4);
    const Tensor2 expected = mha.out_proj().forward(mha.value_proj().forward(kv));
    for (int q = 0; q < 3; ++q) {
        const Tensor2 y = mha.forward(rng.normal_tensor(5, 4), kv);
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(y(i, j), expected(0, j), 1e-12);
    }
}

TEST(Attention, IdenticalKeysGiveUniformWeights) {
    ParamSet ps;
    Rng rng(3);
    MultiHeadAttention mha(ps, "a", 8, 4, rng);
    const Tensor2 row = rng.normal_tensor(1, 8);
    Tensor2 kv(5, 8);
    for (std::size_t i = 0; i < 5; ++i) std::copy(row.data().begin(), row.data().end(), kv.row(i).begin());
    MultiHeadAttention::Cache c;
    mha.forward(rng.normal_tensor(3, 8), kv, &c);
    for (const auto& p : c.probs)
        for (double v : p.data()) EXPECT_NEAR(v, 0.2, 1e-12);
}

TEST(Attention, RejectsIndivisibleHeads) {
    ParamSet ps;
    Rng rng(3);
    EXPECT_THROW(MultiHeadAttention(ps, "a", 6, 4, rng), ConfigError);
}

TEST(Attention, GradientMatchesFiniteDifferences) {
    ParamSet ps;
    Rng rng(4);
    MultiHeadAttention mha(ps, "a", 4, 2, rng);
    randomize(ps, rng);
    Tensor2 q = rng.normal_tensor(2, 4), kv = rng.normal_tensor(3, 4);
    const Tensor2 w = rng.normal_tensor(2, 4);
    Tensor2 dq, dkv;
    auto targets = param_targets(ps);
    targets.push_back({"q", &q, &dq});
    targets.push_back({"kv", &kv, &dkv});
    const auto rep = check_gradients(
        targets, [&] { return probe_loss(mha.forward(q, kv), w); },
        [&] {
            ps.zero_grad();
            MultiHeadAttention::Cache c;
            mha.forward(q, kv, &c);
            auto g = mha.backward(c, w);
            dq = g.dq_in;
            dkv = g.dkv_in;
        });
    EXPECT_LT(rep.worst, 1e-4) << rep.worst_name;
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
    ParamSet ps;
    Rng rng(6);
    LayerNorm ln(ps, "ln", 6);
    randomize(ps, rng);
    Tensor2 x = rng.normal_tensor(4, 6);
    const Tensor2 w = rng.normal_tensor(4, 6);
    Tensor2 dx;
    auto targets = param_targets(ps);
    targets.push_back({"x", &x, &dx});
    const auto rep = check_gradients(
        targets, [&] { return probe_loss(ln.forward(x), w); },
        [&] {
            ps.zero_grad();
            LayerNorm::Cache c;
            ln.forward(x, &c);
            dx = ln.backward(c, w);
        });
    EXPECT_LT(rep.worst, 1e-4) << rep.worst_name;
}

TEST(Film, ZeroInitIsIdentityAndAnnihilationWorks) {
    ParamSet ps;
    Rng rng(7);
    Film film(ps, "f", 5, 3);
    const Tensor2 h = rng.normal_tensor(4, 5);
    const Tensor2 cond = rng.normal_tensor(1, 3);
    EXPECT_EQ(film.forward(h, cond), h);
    film.gamma_bias().value.fill(-1.0);
    const Tensor2 y = film.forward(h, cond);
    for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Film, GradientMatchesFiniteDifferences) {
    ParamSet ps;
    Rng rng(8);
    Film film(ps, "f", 5, 3);
    randomize(ps, rng);
    Tensor2 h = rng.normal_tensor(4, 5), cond = rng.normal_tensor(1, 3);
    const Tensor2 w = rng.normal_tensor(4, 5);
    Tensor2 dh, dc;
    auto targets = param_targets(ps);
    targets.push_back({"h", &h, &dh});
    targets.push_back({"cond", &cond, &dc});
    const auto rep = check_gradients(
        targets, [&] { return probe_loss(film.forward(h, cond), w); },
        [&] {
            ps.zero_grad();
            Film::Cache c;
            film.forward(h, cond, &c);
            auto g = film.backward(c, w);
            dh = g.dh;
            dc = g.dcond;
        });
    EXPECT_LT(rep.worst, 1e-4) << rep.worst_name;
}

TEST(Transformer, EmptyStackIsIdentity) {
    ParamSet ps;
    Rng rng(9);
    TransformerEncoder enc(ps, "e", EncoderConfig{8, 0, 2, 2, 0}, rng);
    const Tensor2 x = rng.normal_tensor(3, 8);
    EXPECT_EQ(enc.forward(x), x);
}

TEST(Transformer, PermutationEquivariantWithoutPositions) {
    ParamSet ps;
    Rng rng(10);
    TransformerEncoder enc(ps, "e", EncoderConfig{8, 2, 2, 2, 0}, rng);
    const Tensor2 x = rng.normal_tensor(4, 8);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    Tensor2 xp(4, 8);
    for (std::size_t i = 0; i < 4; ++i) std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), xp.row(i).begin());
    const Tensor2 y = enc.forward(x), yp = enc.forward(xp);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(yp(i, j), y(perm[i], j), 1e-12);
}

TEST(Transformer, TwoLayerGradientWithFilm) {
    ParamSet ps;
    Rng rng(12);
    TransformerEncoder enc(ps, "e", EncoderConfig{8, 2, 2, 2, 4}, rng);
    randomize(ps, rng, 0.1);
    Tensor2 x = rng.normal_tensor(3, 8), cond = rng.normal_tensor(1, 4);
    const Tensor2 w = rng.normal_tensor(3, 8);
    Tensor2 dx, dc;
    auto targets = param_targets(ps);
    targets.push_back({"x", &x, &dx});
    targets.push_back({"cond", &cond, &dc});
    const auto rep = check_gradients(
        targets, [&] { return probe_loss(enc.forward(x, &cond), w); },
        [&] {
            ps.zero_grad();
            TransformerEncoder::Cache c;
            enc.forward(x, &cond, &c);
            dc = Tensor2(1, 4);
            dx = enc.backward(c, w, &dc);
        });
    EXPECT_LT(rep.worst, 1e-4) << rep.worst_name;
}

TEST(Transformer, ForwardIsDeterministic) {
    ParamSet a, b;
    Rng ra(99), rb(99);
    TransformerEncoder ea(a, "e", EncoderConfig{8, 2, 2, 2, 0}, ra);
    TransformerEncoder eb(b, "e", EncoderConfig{8, 2, 2, 2, 0}, rb);
    const Tensor2 x = Rng(5).normal_tensor(3, 8);
    EXPECT_EQ(ea.forward(x), eb.forward(x));
}

TEST(Adam, ZeroGradientLeavesValue) {
    Param p("w", Tensor2{{1.0, -2.0}});
    adam_step(p, AdamConfig{0.1});
    EXPECT_EQ(p.value, (Tensor2{{1.0, -2.0}}));
}

TEST(Adam, ConstantGradientStepTendsToLearningRate) {
    // With constant g the bias-corrected m̂/√v̂ equals g/|g| exactly, so every
    // step moves by lr·|g|/(|g|+eps).
    Param p("w", Tensor2{{0.0}});
    const AdamConfig cfg{0.01};
    double prev = 0.0, last_step = 0.0;
    for (int i = 0; i < 500; ++i) {
        p.grad = Tensor2{{3.0}};
        adam_step(p, cfg);
        last_step = std::abs(p.value[0] - prev);
        prev = p.value[0];
        EXPECT_EQ(p.grad[0], 0.0);
    }
    EXPECT_NEAR(last_step, 0.01, 1e-9);
}

TEST(Adam, QuadraticBowlConverges) {
    Param p("w", Tensor2{{1.0}});
    int steps = 0;
    for (; steps < 200 && std::abs(p.value[0]) >= 0.05; ++steps) {
        p.grad = Tensor2{{2.0 * p.value[0]}};
        adam_step(p, AdamConfig{0.1});
    }
    EXPECT_LT(std::abs(p.value[0]), 0.05);
    EXPECT_LE(steps, 200);
}

TEST(Checkpoint, RoundTripAndVersionCheck) {
    ParamSet a;
    Rng rng(1);
    TransformerEncoder ea(a, "e", EncoderConfig{8, 1, 2, 2, 0}, rng);
    const auto j = to_checkpoint_json(a);
    EXPECT_EQ(j["version"], "promptvar-ckpt-1");
    ASSERT_TRUE(j.contains("e.layer0.attn.q.w"));
    EXPECT_EQ(j["e.layer0.attn.q.w"]["shape"], nlohmann::json({8, 8}));

    ParamSet b;
    Rng rng2(2);
    TransformerEncoder eb(b, "e", EncoderConfig{8, 1, 2, 2, 0}, rng2);
    load_checkpoint_json(b, j);
    EXPECT_EQ(to_checkpoint_json(b), j);

    auto bad = j;
    bad["version"] = "other";
    EXPECT_THROW(load_checkpoint_json(b, bad), ParseError);
    auto wrong = j;
    wrong["e.layer0.attn.q.w"]["shape"] = {4, 16};
    EXPECT_THROW(load_checkpoint_json(b, wrong), DimensionError);
}
