#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "promptvar/varnet/model.hpp"
#include "promptvar/varnet/sampler.hpp"
#include "promptvar/varnet/schedule.hpp"
#include "promptvar/varnet/toy.hpp"
#include "support/gradcheck.hpp"

using namespace promptvar;
using namespace promptvar::varnet;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(xs.size() - 1);
    return m;
}

// Euler–Maruyama on dz = −½β z dt + √β dw from 0 to t.
std::vector<double> simulate_sde(double z0, double t, std::size_t steps, std::size_t paths, const DiffusionSchedule& s,
                                 nn::Rng& rng) {
    std::vector<double> out(paths, z0);
    const double h = t / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double b = s.beta(static_cast<double>(k) * h);
        const double drift = -0.5 * b * h, diff = std::sqrt(b * h);
        for (double& z : out) z += drift * z + diff * rng.normal();
    }
    return out;
}

// Analytic score of the marginal when z0 ~ N(mu, sd²).
ScoreFn gaussian_score(double mu, double sd, const DiffusionSchedule& s) {
    return [=](const nn::Tensor2& z, double t) {
        const double a = s.alpha(t), v = a * a * sd * sd + s.sigma2(t);
        nn::Tensor2 g(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) g[i] = -(z[i] - a * mu) / v;
        return g;
    };
}

Moments oracle_run(double mu, double sd, std::size_t steps, std::size_t samples, std::uint64_t seed) {
    const DiffusionSchedule s;
    nn::Rng rng(seed);
    std::vector<double> xs;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto z = ode_sample_with_score(gaussian_score(mu, sd, s), 1, 4, s, steps, rng);
        xs.insert(xs.end(), z.data().begin(), z.data().end());
    }
    return moments(xs);
}

VarnetConfig desk_config() {
    VarnetConfig c;
    c.d = 8;
    c.heads = 2;
    c.layers = 2;
    c.ff_mult = 2;
    c.prompt_rows = 3;
    c.reference_rows = 2;
    c.d_time = 8;
    return c;
}

void perturb(nn::ParamSet& ps, nn::Rng& rng, double scale) {
    for (nn::Param* p : ps.all())
        for (double& v : p->value.data()) v += scale * rng.normal();
}

}  // namespace

TEST(Schedule, Invariants) {
    const DiffusionSchedule s;
    EXPECT_NEAR(s.integral(1.0), 10.025, 1e-12);
    EXPECT_EQ(s.sigma2(0.0), 0.0);
    EXPECT_EQ(s.alpha(0.0), 1.0);
    EXPECT_GT(s.sigma2(1.0), 0.9999);
    for (double t = 0.0; t < 1.0; t += 0.01) EXPECT_LT(s.integral(t), s.integral(t + 0.01));
    EXPECT_NEAR(s.alpha(0.3) * s.alpha(0.3) + s.sigma2(0.3), 1.0, 1e-12);
    EXPECT_THROW(DiffusionSchedule(20.0, 0.05), ConfigError);
    EXPECT_THROW(DiffusionSchedule(0.0, 1.0), ConfigError);
}

TEST(ForwardDiffuse, ClosedForm) {
    const DiffusionSchedule s;
    nn::Rng rng(1);
    const nn::Tensor2 z0 = rng.normal_tensor(3, 4);
    EXPECT_EQ(forward_diffuse(z0, 0.0, s, rng).zt, z0);
    EXPECT_THROW(forward_diffuse(z0, 1.5, s, rng), std::domain_error);
    EXPECT_THROW(forward_diffuse(z0, -0.1, s, rng), std::domain_error);

    const auto d = forward_diffuse(z0, 0.4, s, rng);
    for (std::size_t i = 0; i < z0.size(); ++i)
        EXPECT_NEAR(d.zt[i], s.alpha(0.4) * z0[i] + std::sqrt(s.sigma2(0.4)) * d.eps[i], 1e-12);

    // zero start: the per-entry variance is σ²(t)
    std::vector<double> xs;
    for (int i = 0; i < 10000; ++i) xs.push_back(forward_diffuse(nn::Tensor2(1, 1), 0.3, s, rng).zt[0]);
    EXPECT_NEAR(moments(xs).var / s.sigma2(0.3), 1.0, 0.03);

    EXPECT_NEAR(2.0 * s.alpha(1.0), 0.0133, 1e-4);
}

TEST(ForwardDiffuse, MatchesSdeSimulation) {
    const DiffusionSchedule s;
    nn::Rng rng(2);
    for (double t : {0.1, 0.5, 1.0}) {
        const auto sim = moments(simulate_sde(2.0, t, 1000, 100000, s, rng));
        std::vector<double> xs;
        for (int i = 0; i < 100000; ++i) xs.push_back(forward_diffuse(nn::Tensor2(1, 1, 2.0), t, s, rng).zt[0]);
        const auto closed = moments(xs);
        if (t < 1.0) {
            EXPECT_NEAR(sim.mean / (2.0 * s.alpha(t)), 1.0, 0.02) << t;
            EXPECT_NEAR(closed.mean / (2.0 * s.alpha(t)), 1.0, 0.02) << t;
        } else {
            EXPECT_LT(std::abs(sim.mean), 0.02);
            EXPECT_LT(std::abs(closed.mean), 0.02);
        }
        EXPECT_NEAR(sim.var / s.sigma2(t), 1.0, 0.02) << t;
        EXPECT_NEAR(closed.var / s.sigma2(t), 1.0, 0.02) << t;
    }
}

TEST(VarNet, ShapesAndStepSensitivity) {
    const VarnetConfig cfg;
    VarNet m(cfg, 1);
    nn::Rng rng(2);
    const auto P = rng.normal_tensor(8, 32), zt = rng.normal_tensor(8, 32);
    const auto y = m.predict_z0(P, zt, 0.5);
    EXPECT_EQ(y.rows(), 8u);
    EXPECT_EQ(y.cols(), 32u);
    EXPECT_THROW(m.predict_z0(rng.normal_tensor(7, 32), zt, 0.5), DimensionError);
    EXPECT_THROW(m.predict_z0(P, rng.normal_tensor(8, 16), 0.5), DimensionError);
    EXPECT_THROW(m.predict_z0(P, zt, 1.2), std::domain_error);

    // FiLM starts as the identity; with nonzero modulation the step matters
    // beyond the output preconditioning.
    for (std::size_t i = 0; i < m.encoder().depth(); ++i) {
        nn::Film* f = m.encoder().layer(i).film();
        for (nn::Param* p : {&f->gamma_weight(), &f->beta_weight()})
            for (double& v : p->value.data()) v = 0.2 * rng.normal();
    }
    // undo the preconditioning to compare the transformer head itself
    const DiffusionSchedule s;
    const double s2 = cfg.data_std * cfg.data_std;
    auto head = [&](double t) {
        const double a = s.alpha(t), v = s.sigma2(t);
        const double c_skip = a * s2 / (a * a * s2 + v), c_out = std::sqrt(v * s2 / (a * a * s2 + v));
        return (m.predict_z0(P, zt, t) - zt * c_skip) * (1.0 / c_out);
    };
    const auto head_a = head(0.3), head_b = head(0.31);
    EXPECT_GT(nn::max_abs_diff(head_a, head_b), 1e-3);
}

TEST(VarNet, GradientCheck) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        VarNet m(desk_config(), seed);
        nn::Rng rng(100 + seed);
        perturb(m.params(), rng, 0.1);
        const auto P = rng.normal_tensor(3, 8), zt = rng.normal_tensor(2, 8), w = rng.normal_tensor(2, 8);
        const double t = rng.uniform(0.01, 1.0);
        const auto rep = promptvar::testing::check_gradients(
            promptvar::testing::param_targets(m.params()),
            [&] { return promptvar::testing::probe_loss(m.predict_z0(P, zt, t), w); },
            [&] {
                m.params().zero_grad();
                VarNet::Cache c;
                m.predict_z0(P, zt, t, &c);
                m.backward(c, w);
            });
        EXPECT_LT(rep.worst, 1e-4) << "seed " << seed << " " << rep.worst_name;
    }
}

TEST(DiffusionLoss, OracleAndZeroPredictors) {
    const DiffusionSchedule s;
    nn::Rng rng(3);
    nn::Tensor2 z0(2, 4);
    for (std::size_t i = 0; i < z0.size(); ++i) z0[i] = i % 2 ? 1.0 : -1.0;
    const nn::Tensor2 P(3, 4);
    EXPECT_EQ(diffusion_loss([&](const nn::Tensor2&, const nn::Tensor2&, double) { return z0; }, z0, P, s, rng), 0.0);
    EXPECT_EQ(diffusion_loss([&](const nn::Tensor2&, const nn::Tensor2&, double) { return nn::Tensor2(2, 4); }, z0, P, s, rng),
              1.0);

    VarNet m(desk_config(), 4);
    nn::Rng r1(9), r2(9);
    const auto P8 = r1.normal_tensor(3, 8);
    r2.normal_tensor(3, 8);
    const auto z8 = r1.normal_tensor(2, 8);
    r2.normal_tensor(2, 8);
    EXPECT_EQ(diffusion_loss(m, z8, P8, r1, false), diffusion_loss(m, z8, P8, r2, false));
}

TEST(OdeSampler, AnalyticScoreOracle) {
    const double mu = 1.5, sd = 0.5;
    const auto m100 = oracle_run(mu, sd, 100, 2500, 5);  // 10⁴ scalar samples
    EXPECT_NEAR(m100.mean / mu, 1.0, 0.05);
    EXPECT_NEAR(m100.var / (sd * sd), 1.0, 0.05);

    auto err = [&](const Moments& m) { return std::abs(m.mean - mu) / mu + std::abs(m.var - sd * sd) / (sd * sd); };
    const auto m10 = oracle_run(mu, sd, 10, 2500, 5);
    const auto m1 = oracle_run(mu, sd, 1, 2500, 5);
    EXPECT_LT(err(m100), err(m10));
    EXPECT_LT(err(m10), err(m1));
}

TEST(OdeSampler, DiversityDeterminismAndFailure) {
    VarNet m(desk_config(), 6);
    nn::Rng pr(1);
    const auto P = pr.normal_tensor(3, 8);
    nn::Rng a(10), b(11), a2(10);
    const auto za = ode_sample(m, P, 20, a), zb = ode_sample(m, P, 20, b), za2 = ode_sample(m, P, 20, a2);
    EXPECT_GT(nn::max_abs_diff(za, zb), 1e-3);
    EXPECT_EQ(za, za2);
    EXPECT_THROW(ode_sample(m, P, 0, a), ConfigError);

    nn::Rng c(1);
    const DiffusionSchedule s;
    try {
        ode_sample_with_score(
            [](const nn::Tensor2& z, double t) {
                nn::Tensor2 g(z.rows(), z.cols());
                if (t < 0.5) g[0] = std::nan("");
                return g;
            },
            1, 2, s, 10, c);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("step 7 of 10"), std::string::npos) << e.what();
    }
}

TEST(StyleVector, Concatenation) {
    nn::Rng rng(7);
    const auto P = rng.normal_tensor(8, 32), R = rng.normal_tensor(8, 32);
    const auto v = style_vector(P, R);
    EXPECT_EQ(v.rows(), 16u);
    EXPECT_EQ(v.cols(), 32u);
    EXPECT_EQ(nn::slice_rows(v, 0, 8), P);
    EXPECT_EQ(nn::slice_rows(v, 8, 16), R);
    EXPECT_THROW(style_vector(P, rng.normal_tensor(8, 16)), DimensionError);
}

TEST(VarNet, SaveLoadRoundTrip) {
    VarNet m(desk_config(), 8);
    nn::Rng rng(1);
    perturb(m.params(), rng, 0.1);
    const auto dir = std::filesystem::temp_directory_path() / "promptvar_varnet_test";
    m.save(dir);
    const VarNet back = VarNet::load(dir);
    const auto P = rng.normal_tensor(3, 8), zt = rng.normal_tensor(2, 8);
    EXPECT_EQ(back.predict_z0(P, zt, 0.4), m.predict_z0(P, zt, 0.4));
}

TEST(VarNet, ConditionalToyRecovery) {
    const ToyTask task = ToyTask::make(1);
    VarNet m(task.cfg, 2);
    nn::Rng rng(3);
    VarnetTrainConfig cfg;
    cfg.epochs = 200;
    const auto rep = train_varnet(m, task.dataset(1000, rng), cfg);
    EXPECT_LT(rep.epoch_losses.back(), rep.epoch_losses.front());
    const ToyReport r = evaluate_toy(m, task, 500, 100, 9);
    for (int c = 0; c < 2; ++c) {
        EXPECT_GE(r.accuracy[c], 0.95) << c;
        EXPECT_NEAR(r.std_ratio[c], 1.0, 0.2) << c;
    }
}
