#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyper_rc/datagen.hpp"
#include "hyper_rc/theory.hpp"

using namespace hyper_rc;

namespace {

std::vector<PoincarePoint> nodes(int n, std::uint64_t seed)
{
    SamplingConfig cfg;
    cfg.seed = seed;
    return sample_nodes(cfg, n);
}

Eigen::MatrixXd gauss(int r, int c, std::uint64_t seed, double sd = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sd);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

EsnModel model_with(const Eigen::MatrixXd& w, const Eigen::MatrixXd& u, EsnConfig cfg)
{
    ReservoirMatrix r;
    r.weights = w;
    return EsnModel(r, u, cfg);
}

double smallest_singular(const Eigen::MatrixXd& j) { return Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues().minCoeff(); }

} // namespace

TEST(KernelSpectrumBound, TwoPointsTight)
{
    const auto p = nodes(2, 1);
    const double sigma = 0.7;
    const BoundReport r = check_lemma1(p, sigma);
    const double e = std::exp(-hyperbolic_distance(p[0], p[1]) / sigma);
    EXPECT_NEAR(r.observed_lambda_min, 1.0 - e, 1e-14);
    EXPECT_NEAR(r.observed_rho, 1.0 + e, 1e-14);
    EXPECT_NEAR(r.lemma1_lower, r.observed_lambda_min, 1e-14);
    EXPECT_NEAR(r.lemma1_upper, r.observed_rho, 1e-14);
    EXPECT_TRUE(r.holds);
}

TEST(KernelSpectrumBound, SinglePointDegenerate)
{
    const BoundReport r = check_lemma1(nodes(1, 2), 0.3);
    EXPECT_EQ(r.observed_lambda_min, 1.0);
    EXPECT_EQ(r.observed_rho, 1.0);
    EXPECT_EQ(r.lemma1_lower, 1.0);
    EXPECT_EQ(r.lemma1_upper, 1.0);
    EXPECT_TRUE(r.holds);
}

TEST(KernelSpectrumBound, MonteCarloFiftyPoints)
{
    int checked = 0;
    for (double sigma : {0.5, 1.0, 2.0}) {
        for (int t = 0; t < 100; ++t) {
            const auto p = nodes(50, 1000 * static_cast<std::uint64_t>(sigma * 2) + t);
            const BoundReport r = check_lemma1(p, sigma);
            // independent oracle
            const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(kernel_matrix(p, sigma)).eigenvalues();
            EXPECT_NEAR(r.observed_lambda_min, ev.minCoeff(), 1e-12);
            EXPECT_GE(ev.minCoeff(), r.lemma1_lower - 1e-9);
            EXPECT_LE(ev.cwiseAbs().maxCoeff(), r.lemma1_upper + 1e-9);
            EXPECT_TRUE(r.holds);
            ++checked;
        }
    }
    EXPECT_EQ(checked, 300);
}

TEST(KernelSpectrumBound, LargeNRejected) { EXPECT_THROW(check_lemma1(nodes(513, 3), 0.1), DimensionError); }

TEST(Jacobian, ZeroLeakIsIdentity)
{
    EsnConfig cfg;
    cfg.leak_rate = 0.0;
    const EsnModel m = model_with(gauss(6, 6, 1), gauss(6, 2, 2), cfg);
    EXPECT_TRUE(jacobian(m, gauss(6, 1, 3), gauss(2, 1, 4)).isApprox(Eigen::MatrixXd::Identity(6, 6), 0.0));
}

TEST(Jacobian, LinearNodes)
{
    EsnConfig cfg;
    cfg.leak_rate = 0.6;
    cfg.activations = {Activation::Linear};
    const Eigen::MatrixXd w = gauss(6, 6, 5);
    const EsnModel m = model_with(w, gauss(6, 2, 6), cfg);
    const Eigen::MatrixXd expect = 0.4 * Eigen::MatrixXd::Identity(6, 6) + 0.6 * w;
    EXPECT_LT((jacobian(m, gauss(6, 1, 7), gauss(2, 1, 8)) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Jacobian, CentralFiniteDifferences)
{
    SamplingConfig sc;
    sc.seed = 9;
    EsnConfig cfg;
    cfg.activations = mixed_activations(50);
    cfg.seed = 9;
    const EsnModel m = EsnModel::create(build_hyper(sample_nodes(sc, 50), KernelConfig{0.1, 40, 0.99, false}), 3, cfg);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const Eigen::VectorXd x = gauss(50, 1, 100 + s, 0.5), u = gauss(3, 1, 200 + s, 0.5);
        const Eigen::MatrixXd j = jacobian(m, x, u);
        for (int i = 0; i < 50; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            worst = std::max(worst, ((step(m, xp, u) - step(m, xm, u)) / 2e-6 - j.col(i)).cwiseAbs().maxCoeff());
        }
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(JacobianSingularBounds, DiagonalClosedForm)
{
    const double c = 0.6, alpha = 0.8;
    EsnConfig cfg;
    cfg.leak_rate = alpha;
    const Eigen::MatrixXd u = gauss(5, 2, 10, 0.3);
    const EsnModel m = model_with(c * Eigen::MatrixXd::Identity(5, 5), u, cfg);
    const Eigen::VectorXd x = gauss(5, 1, 11, 0.5), in = gauss(2, 1, 12);
    const Lemma2Report r = check_lemma2(m, x.transpose(), in.transpose());
    // J is diagonal: J_ii = (1 - alpha) + alpha c tanh'(z_i).
    const Eigen::VectorXd z = c * x + u * in;
    Eigen::VectorXd jd(5);
    for (int i = 0; i < 5; ++i) jd[i] = (1 - alpha) + alpha * c * (1 - std::tanh(z[i]) * std::tanh(z[i]));
    EXPECT_NEAR(r.min_singular, jd.minCoeff(), 1e-14);
    EXPECT_NEAR(r.max_singular, jd.maxCoeff(), 1e-14);
    EXPECT_EQ(r.status, CheckStatus::Checked);
    EXPECT_TRUE(r.holds);
    EXPECT_GE(r.lower_margin, 0.0);
    EXPECT_GE(r.upper_margin, 0.0);
}

TEST(JacobianSingularBounds, ZeroLeakLimit)
{
    EsnConfig cfg;
    cfg.leak_rate = 0.0;
    Eigen::MatrixXd w = gauss(8, 8, 13);
    w = w * w.transpose() * 0.05;
    const EsnModel m = model_with(w, gauss(8, 2, 14), cfg);
    const Lemma2Report r = check_lemma2(m, gauss(4, 8, 15, 0.5), gauss(4, 2, 16));
    EXPECT_NEAR(r.min_singular, 1.0, 1e-14);
    EXPECT_NEAR(r.max_singular, 1.0, 1e-14);
    EXPECT_LE(std::sqrt(r.m / r.L), 1.0);
    EXPECT_GE(std::sqrt(r.L / r.m), 1.0);
    EXPECT_NEAR(r.lower_bound, std::sqrt(r.m / r.L), 1e-15);
    EXPECT_TRUE(r.holds);
}

TEST(JacobianSingularBounds, DrivenLorenzStates)
{
    const Trajectory raw = integrate_rk4(SystemSpec::defaults(SystemKind::Lorenz), 0.02, 3999);
    Trajectory in = raw.slice(1000, 3000);
    in.data = MinMaxScaler::fit(in.data).transform(in.data);
    const auto p = nodes(50, 17);
    const double delta = min_off_diagonal(pairwise_distances(p));
    const double sigma = 0.5 * delta / std::log(49.0);
    EsnConfig cfg;
    cfg.seed = 17;
    // positive-definite symmetric W from the full kernel
    const Eigen::MatrixXd k = kernel_matrix(p, sigma);
    ReservoirMatrix res;
    res.weights = 0.99 / symmetric_spectrum(k).rho * k;
    const EsnModel m = EsnModel::create(res, 3, cfg);
    const StateTrace tr = drive(m, in, 100);
    Eigen::MatrixXd xs(20, 50), us(20, 3);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Index t = 100 * i + 50;
        xs.row(i) = tr.states.row(t);
        us.row(i) = in.data.row(100 + t + 1);
    }
    const Lemma2Report r = check_lemma2(m, xs, us);
    EXPECT_EQ(r.status, CheckStatus::Checked);
    EXPECT_GE(r.lambda_min, 0.0);
    EXPECT_GE(r.lower_margin, 0.0);
    EXPECT_GE(r.upper_margin, 0.0);
    // oracle: recompute each J and its smallest singular value
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd z = m.reservoir().weights * xs.row(i).transpose() + m.input_weights() * us.row(i).transpose();
        Eigen::MatrixXd j = 0.2 * Eigen::MatrixXd::Identity(50, 50);
        for (int a = 0; a < 50; ++a) j.row(a) += 0.8 * (1 - std::tanh(z[a]) * std::tanh(z[a])) * m.reservoir().weights.row(a);
        EXPECT_GE(smallest_singular(j) + 1e-12, r.min_singular);
    }

    // The sparsified HypER matrix, symmetrized, typically has lambda_min < 0.
    const EsnModel h = EsnModel::create(build_hyper(p, KernelConfig{0.1, 20, 0.99, false}), 3, cfg);
    const Lemma2Report rh = check_lemma2(h, xs, us);
    if (rh.lambda_min < 0.0) {
        EXPECT_EQ(rh.status, CheckStatus::PreconditionUnmet);
        EXPECT_TRUE(rh.holds);
    }
    Lemma2Options raw_w;
    raw_w.symmetrize = false;
    EXPECT_EQ(check_lemma2(h, xs, us, raw_w).status, CheckStatus::ReportOnly);
}

TEST(BetaSigma, Substitutions)
{
    EXPECT_NEAR(beta_sigma(1.0, 1.0, 1.0, 1.0, 0.8, 0.99), 0.2 + 0.8 * 0.99, 1e-15);
    for (double lmin : {0.0, -0.3}) {
        const double b = beta_sigma(lmin, 1.5, 0.4, 1.0, 0.8, 0.99);
        EXPECT_LE(b, std::sqrt(0.4) * 0.2 + 1e-15);
        EXPECT_LT(b, 1.0);
    }
}

TEST(BetaSigma, RisesAsSigmaShrinks)
{
    const auto p = nodes(20, 18);
    double prev = -1e9;
    for (double sigma = 2.0; sigma >= 1e-4; sigma *= 0.8) {
        const double b = beta_sigma(kernel_matrix(p, sigma), 1.0, 1.0, 0.8, 0.99);
        EXPECT_GE(b, prev - 1e-12) << "sigma " << sigma;
        prev = b;
    }
    EXPECT_NEAR(prev, 0.2 + 0.8 * 0.99, 1e-3);
}

TEST(DivergenceFloor, ZeroPerturbation)
{
    const auto p = nodes(20, 19);
    const EsnModel m = build_symmetric_kernel_model(p, 0.05, 1.2, 0.8, 3, 19);
    const DivergenceResult r = divergence_experiment(m, gauss(30, 3, 20), 5, Eigen::VectorXd::Zero(3));
    EXPECT_TRUE(r.separation.isZero(0.0));
}

TEST(DivergenceFloor, FloorHoldsOnSymmetricExpandingModels)
{
    for (int k = 0; k < 5; ++k) {
        const int n = 10 + 5 * k;
        const auto p = nodes(n, 30 + k);
        const double delta = min_off_diagonal(pairwise_distances(p));
        const double sigma = delta / std::log((n - 1) / 0.05);
        const EsnModel m = build_symmetric_kernel_model(p, sigma, 1.25, 0.8, 3, 40 + k);
        const Eigen::Index t0 = 4;
        const DivergenceResult r = divergence_experiment(m, gauss(t0 + 20, 3, 50 + k, 0.5), t0, gauss(3, 1, 60 + k, 0.1));
        EXPECT_GT(r.beta, 1.0);
        EXPECT_TRUE(r.floor_meaningful);
        for (Eigen::Index t = 0; t <= t0; ++t) EXPECT_EQ(r.separation[t], 0.0);
        for (int tau = 1; tau <= 20; ++tau) {
            EXPECT_GE(r.separation[t0 + tau], r.floor[t0 + tau] - 1e-9) << "model " << k << " tau " << tau;
        }
        // tau = 1 is an equality for linear nodes
        EXPECT_NEAR(r.separation[t0 + 1], r.floor[t0 + 1], 1e-12);
    }
}

TEST(DivergenceFloor, TanhModelFloorNotMeaningful)
{
    SamplingConfig sc;
    sc.seed = 70;
    EsnConfig cfg;
    cfg.seed = 70;
    const EsnModel m = EsnModel::create(build_hyper(sample_nodes(sc, 30), KernelConfig{0.1, 10, 0.99, false}), 3, cfg);
    const DivergenceResult r = divergence_experiment(m, gauss(40, 3, 71, 0.5), 10, gauss(3, 1, 72, 0.1));
    EXPECT_FALSE(r.floor_meaningful);
    EXPECT_LT(r.beta, 1.0);
    for (Eigen::Index t = 0; t <= 10; ++t) EXPECT_EQ(r.separation[t], 0.0);
    EXPECT_GT(r.separation[11], 0.0);
}
