#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyper_rc/datagen.hpp"
#include "hyper_rc/esn.hpp"
#include "hyper_rc/metrics.hpp"

using namespace hyper_rc;

namespace {

ReservoirMatrix from_weights(const Eigen::MatrixXd& w)
{
    ReservoirMatrix r;
    r.weights = w;
    r.spectral_radius = w.isZero(0.0) ? 0.0 : spectral_radius_dense(w);
    return r;
}

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed, double scale = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

Trajectory traj(const Eigen::MatrixXd& data)
{
    Trajectory t;
    t.data = data;
    t.dt = 1.0;
    return t;
}

EsnModel random_model(int n, int m, std::uint64_t seed, EsnConfig cfg = {})
{
    Eigen::MatrixXd w = random_matrix(n, n, seed);
    w *= 0.9 / spectral_radius_dense(w);
    return EsnModel(from_weights(w), random_matrix(n, m, seed + 1, 0.3), cfg);
}

Trajectory normalized_lorenz(int samples)
{
    const Trajectory raw = integrate_rk4(SystemSpec::defaults(SystemKind::Lorenz), 0.02, samples - 1);
    Trajectory t = raw.slice(2000, samples - 2000);
    t.data = MinMaxScaler::fit(t.data).transform(t.data);
    return t;
}

} // namespace

TEST(Step, ZeroWeightsUnitLeak)
{
    EsnConfig cfg;
    cfg.leak_rate = 1.0;
    const EsnModel m(from_weights(Eigen::MatrixXd::Zero(3, 3)), Eigen::MatrixXd::Zero(3, 2), cfg);
    const Eigen::VectorXd x = Eigen::Vector3d(0.3, -2.0, 5.0);
    EXPECT_TRUE(step(m, x, Eigen::Vector2d(1.0, -1.0)).isZero(0.0));
}

TEST(Step, ZeroLeakKeepsState)
{
    EsnConfig cfg;
    cfg.leak_rate = 0.0;
    const EsnModel m = random_model(4, 2, 3, cfg);
    const Eigen::VectorXd x = Eigen::Vector4d(0.1, 0.2, -0.3, 0.4);
    EXPECT_EQ(step(m, x, Eigen::Vector2d(3.0, 4.0)), x);
}

TEST(Step, ScalarOracleMixedActivations)
{
    EsnConfig cfg;
    cfg.leak_rate = 0.7;
    cfg.activations = {Activation::Tanh, Activation::Sine, Activation::Linear, Activation::Relu};
    const EsnModel m = random_model(4, 3, 5, cfg);
    const Eigen::VectorXd x = Eigen::Vector4d(0.5, -0.2, 0.9, -0.7);
    const Eigen::VectorXd u = Eigen::Vector3d(0.1, -1.2, 0.4);
    const Eigen::VectorXd got = step(m, x, u);
    const auto& w = m.reservoir().weights;
    const auto& uw = m.input_weights();
    for (int i = 0; i < 4; ++i) {
        double z = 0.0;
        for (int j = 0; j < 4; ++j) z += w(i, j) * x[j];
        for (int j = 0; j < 3; ++j) z += uw(i, j) * u[j];
        const double phi = i == 0 ? std::tanh(z) : i == 1 ? std::sin(z) : i == 2 ? z : std::max(0.0, z);
        EXPECT_NEAR(got[i], 0.3 * x[i] + 0.7 * phi, 1e-15);
    }
}

TEST(Step, DimensionAndFiniteness)
{
    const EsnModel m = random_model(4, 2, 7);
    EXPECT_THROW(step(m, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)), DimensionError);
    EXPECT_THROW(step(m, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(3)), DimensionError);
    Eigen::VectorXd u(2);
    u << std::numeric_limits<double>::quiet_NaN(), 0.0;
    EXPECT_THROW(step(m, Eigen::VectorXd::Zero(4), u), DivergenceError);
}

TEST(Drive, WashoutTooLong)
{
    EsnConfig cfg;
    const EsnModel m = random_model(4, 1, 8, cfg);
    EXPECT_THROW(drive(m, traj(Eigen::MatrixXd::Ones(10, 1)), 9), DimensionError);
    EXPECT_NO_THROW(drive(m, traj(Eigen::MatrixXd::Ones(10, 1)), 8));
}

TEST(Drive, ZeroInputStaysAtOrigin)
{
    const EsnModel m = random_model(6, 2, 9);
    const StateTrace tr = drive(m, traj(Eigen::MatrixXd::Zero(50, 2)), 5);
    EXPECT_TRUE(tr.states.isZero(0.0));
}

TEST(Drive, EqualsSequentialSteps)
{
    const EsnModel m = random_model(5, 2, 10);
    const Eigen::MatrixXd in = random_matrix(10, 2, 11);
    const StateTrace tr = drive(m, traj(in), 3);
    ASSERT_EQ(tr.states.rows(), 6);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
    for (int t = 0; t < 10; ++t) {
        x = step(m, x, in.row(t).transpose());
        if (t >= 3 && t < 9) {
            EXPECT_EQ(tr.states.row(t - 3).transpose(), x);
            EXPECT_EQ(tr.targets.row(t - 3), in.row(t + 1));
        }
    }
    EXPECT_EQ(tr.final_state, x);
}

TEST(Drive, DivergenceNamesStep)
{
    EsnConfig cfg;
    cfg.leak_rate = 1.0;
    cfg.activations = {Activation::Linear};
    const EsnModel m(from_weights(3.0 * Eigen::MatrixXd::Identity(2, 2)), Eigen::MatrixXd::Ones(2, 1), cfg);
    try {
        drive(m, traj(Eigen::MatrixXd::Ones(100, 1)), 0);
        FAIL();
    } catch (const DivergenceError& e) {
        // 3^t growth passes 1e6 / sqrt(2) near t = 12.
        EXPECT_GE(e.step(), 10u);
        EXPECT_LE(e.step(), 14u);
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
    }
}

TEST(Features, Layout)
{
    const Eigen::VectorXd z = features(Eigen::VectorXd::Zero(3));
    Eigen::VectorXd ez = Eigen::VectorXd::Zero(7);
    ez[6] = 1.0;
    EXPECT_EQ(z, ez);
    Eigen::VectorXd e(5);
    e << 2, -3, 4, 9, 1;
    EXPECT_EQ(features(Eigen::Vector2d(2, -3)), e);
    const Eigen::VectorXd x = random_matrix(8, 1, 12);
    const Eigen::VectorXd f = features(x);
    EXPECT_EQ(f.segment(8, 8), x.array().square().matrix());
}

TEST(FitReadout, ZeroTargets)
{
    StateTrace tr;
    tr.states = random_matrix(30, 4, 13);
    tr.targets = Eigen::MatrixXd::Zero(30, 2);
    EXPECT_TRUE(fit_readout(tr, 1e-5).weights.isZero(0.0));
}

TEST(FitReadout, LargeLambdaShrinks)
{
    StateTrace tr;
    tr.states = random_matrix(40, 1, 14);
    tr.targets = 2.0 * tr.states;
    EXPECT_LT(fit_readout(tr, 1e12).weights.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GT(fit_readout(tr, 1e-8).weights.cwiseAbs().maxCoeff(), 0.5);
}

TEST(FitReadout, DenseInverseOracle)
{
    // 5 samples, N = 1 (3 features), lambda = 0.1.
    StateTrace tr;
    tr.states = random_matrix(5, 1, 15);
    tr.targets = random_matrix(5, 2, 16);
    const double lambda = 0.1;
    Eigen::MatrixXd xi(3, 5); // features as columns
    for (int t = 0; t < 5; ++t) {
        const double v = tr.states(t, 0);
        xi(0, t) = v;
        xi(1, t) = v * v;
        xi(2, t) = 1.0;
    }
    const Eigen::MatrixXd y = tr.targets.transpose();
    const Eigen::MatrixXd oracle = y * xi.transpose() * (xi * xi.transpose() + lambda * Eigen::MatrixXd::Identity(3, 3)).inverse();
    const Eigen::MatrixXd got = fit_readout(tr, lambda).weights;
    EXPECT_LT((got - oracle).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_THROW(fit_readout(tr, 0.0), ConfigError);
}

TEST(FitReadout, FirstOrderStationarity)
{
    StateTrace tr;
    tr.states = random_matrix(200, 6, 17, 0.5);
    tr.targets = random_matrix(200, 3, 18);
    const double lambda = 1e-3;
    const Eigen::MatrixXd w = fit_readout(tr, lambda).weights;
    const Eigen::MatrixXd phi = feature_matrix(tr.states);
    auto objective = [&](const Eigen::MatrixXd& wo) {
        return (tr.targets - phi * wo.transpose()).squaredNorm() + lambda * wo.squaredNorm();
    };
    const double base = objective(w);
    for (int k = 0; k < 100; ++k) {
        const Eigen::MatrixXd dw = 1e-4 * random_matrix(3, 13, 1000 + k);
        EXPECT_GE(objective(w + dw), base - 1e-8) << "direction " << k;
    }
}

TEST(FitReadout, IllConditionedWarnsOnly)
{
    StateTrace tr;
    tr.states = Eigen::MatrixXd::Constant(50, 3, 0.5); // identical columns
    tr.targets = random_matrix(50, 1, 19);
    const RidgeFit fit = fit_readout(tr, 1e-14);
    EXPECT_TRUE(fit.ill_conditioned);
    EXPECT_TRUE(fit.weights.allFinite());
}

TEST(Forecast, OpenLoopLearnsLinearMap)
{
    // Linear nodes with W = 0 make x_t = U u_t; u_{t+1} = A u_t is then
    // linear in the features.
    EsnConfig cfg;
    cfg.leak_rate = 1.0;
    cfg.washout = 5;
    cfg.ridge_lambda = 1e-12;
    cfg.activations = {Activation::Linear};
    EsnModel m(from_weights(Eigen::MatrixXd::Zero(6, 6)), random_matrix(6, 2, 20), cfg);
    Eigen::Matrix2d a;
    a << 0.98 * std::cos(0.3), -0.98 * std::sin(0.3), 0.98 * std::sin(0.3), 0.98 * std::cos(0.3);
    Eigen::MatrixXd u(300, 2);
    u.row(0) << 1.0, 0.5;
    for (int t = 1; t < 300; ++t) u.row(t) = (a * u.row(t - 1).transpose()).transpose();
    train(m, traj(u.topRows(200)));
    const Trajectory pred = forecast_open_loop(m, traj(u));
    EXPECT_EQ(pred.rows(), 300 - 5 - 1);
    EXPECT_LT(nrmse(u.bottomRows(pred.rows()), pred.data), 1e-4);
}

TEST(Forecast, ClosedLoopBoundaries)
{
    EsnConfig cfg;
    cfg.washout = 20;
    EsnModel m = random_model(10, 2, 21, cfg);
    const Eigen::MatrixXd u = random_matrix(200, 2, 22, 0.5);
    train(m, traj(u));
    EXPECT_EQ(forecast_autoregressive(m, traj(u), 0).rows(), 0);
    const Trajectory one = forecast_autoregressive(m, traj(u), 1);
    // first closed-loop output reads the state that consumed every warmup row
    const Eigen::VectorXd last = drive(m, traj(u), 0).final_state;
    EXPECT_LT((one.data.row(0).transpose() - m.readout() * features(last)).cwiseAbs().maxCoeff(), 1e-14);
    // open-loop rows stop one short: the last predicts the final warmup row
    const Trajectory open = forecast_open_loop(m, traj(u));
    EXPECT_EQ(open.rows(), 200 - 20 - 1);
    EsnModel untrained = random_model(10, 2, 21, cfg);
    EXPECT_THROW(forecast_autoregressive(untrained, traj(u), 5), Error);
}

TEST(Forecast, DeterministicPipeline)
{
    const Trajectory data = normalized_lorenz(4000);
    auto run = [&] {
        SamplingConfig sc;
        sc.seed = 4;
        EsnConfig ec;
        ec.seed = 4;
        EsnModel m = EsnModel::create(build_hyper(sample_nodes(sc, 60), KernelConfig{0.1, 20, 0.99, false}), 3, ec);
        train(m, data.slice(0, 1500));
        return forecast_autoregressive(m, data.slice(0, 1500), 100).data;
    };
    EXPECT_EQ(run(), run());
}

TEST(Forecast, LorenzDefaultSettingsShortHorizon)
{
    // default settings, one seed
    const Trajectory raw = integrate_rk4(SystemSpec::defaults(SystemKind::Lorenz), 0.02, 12499);
    TrainTest tt = split(raw, 2000, 0.8);
    const MinMaxScaler sc = MinMaxScaler::fit(tt.train.data);
    tt.train.data = sc.transform(tt.train.data);
    tt.test.data = sc.transform(tt.test.data);
    SamplingConfig scfg;
    scfg.seed = 1;
    EsnConfig ec;
    ec.seed = 1;
    EsnModel m = EsnModel::create(build_hyper(sample_nodes(scfg, 300), KernelConfig{}), 3, ec);
    train(m, tt.train);
    const Trajectory pred = forecast_autoregressive(m, tt.train, 200);
    EXPECT_LT(nrmse(tt.test.data.topRows(200), pred.data), 0.01);
}

TEST(Dynamics, EchoStateContraction)
{
    const Trajectory u = normalized_lorenz(5000);
    SamplingConfig sc;
    sc.seed = 2;
    EsnConfig ec;
    ec.seed = 2;
    const EsnModel m = EsnModel::create(build_hyper(sample_nodes(sc, 100), KernelConfig{0.1, 40, 0.99, false}), 3, ec);
    Eigen::VectorXd x = random_matrix(100, 1, 23, 0.5), y = random_matrix(100, 1, 24, 0.5);
    double prev = (x - y).norm();
    const double start = prev;
    int t = 0;
    for (; t < 2000 && (x - y).norm() >= 1e-6; ++t) {
        x = step(m, x, u.data.row(t).transpose());
        y = step(m, y, u.data.row(t).transpose());
        if (t % 100 == 99) {
            EXPECT_LT((x - y).norm(), prev);
            prev = (x - y).norm();
        }
    }
    EXPECT_LT((x - y).norm(), 1e-6) << "after " << t << " steps from " << start;
}

TEST(Dynamics, LipschitzOnContractiveConfig)
{
    EsnConfig cfg;
    cfg.leak_rate = 0.6;
    Eigen::MatrixXd w = random_matrix(20, 20, 25);
    w *= 0.95 / Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()[0];
    const EsnModel m(from_weights(w), random_matrix(20, 2, 26), cfg);
    for (int k = 0; k < 50; ++k) {
        const Eigen::VectorXd x = random_matrix(20, 1, 300 + k), y = random_matrix(20, 1, 400 + k);
        const Eigen::VectorXd u = random_matrix(2, 1, 500 + k);
        EXPECT_LE((step(m, x, u) - step(m, y, u)).norm(), (x - y).norm() * (1 + 1e-12));
    }
}

TEST(EsnModel, InputWeightsClippedAndSeeded)
{
    EsnConfig cfg;
    cfg.seed = 99;
    const auto r = build_simple_cycle(200, 0.9);
    const EsnModel a = EsnModel::create(r, 3, cfg);
    EXPECT_LE(a.input_weights().cwiseAbs().maxCoeff(), 0.4);
    EXPECT_GT(a.input_weights().cwiseAbs().maxCoeff(), 0.35);
    EXPECT_EQ(a.input_weights(), EsnModel::create(r, 3, cfg).input_weights());
    const double sd = std::sqrt(a.input_weights().array().square().mean());
    EXPECT_NEAR(sd, 0.2, 0.02);
}

TEST(EsnModel, ConfigValidation)
{
    EsnConfig cfg;
    cfg.ridge_lambda = 0.0;
    EXPECT_THROW(cfg.validate(5), ConfigError);
    cfg = {};
    cfg.leak_rate = 1.5;
    EXPECT_THROW(cfg.validate(5), ConfigError);
    cfg = {};
    cfg.activations = {Activation::Tanh, Activation::Sine};
    EXPECT_THROW(cfg.validate(5), ConfigError);
}

TEST(Activations, MixedThirdsAndDerivatives)
{
    const auto a = mixed_activations(9);
    EXPECT_EQ(a[0], Activation::Tanh);
    EXPECT_EQ(a[2], Activation::Tanh);
    EXPECT_EQ(a[3], Activation::Sine);
    EXPECT_EQ(a[5], Activation::Sine);
    EXPECT_EQ(a[6], Activation::Linear);
    EXPECT_EQ(a[8], Activation::Linear);
    for (auto k : {Activation::Tanh, Activation::Sine, Activation::Linear}) {
        for (double z : {-1.3, -0.2, 0.0, 0.7, 2.1}) {
            const double fd = (activate(k, z + 1e-6) - activate(k, z - 1e-6)) / 2e-6;
            EXPECT_NEAR(activation_derivative(k, z), fd, 1e-8);
        }
    }
    EXPECT_EQ(activation_derivative(Activation::Relu, 0.0), 0.0);
    EXPECT_EQ(activation_derivative(Activation::Relu, 0.5), 1.0);
    EXPECT_EQ(parse_activation("sine"), Activation::Sine);
    EXPECT_THROW(parse_activation("swish"), Error);
}
