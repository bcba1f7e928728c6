#include <cmath>
#include <vector>
#include <sstream>

#include <gtest/gtest.h>

#include "hyper_rc/datagen.hpp"

using namespace hyper_rc;

TEST(VectorField, LorenzOriginAndUnitPoint)
{
    const auto spec = SystemSpec::defaults(SystemKind::Lorenz);
    EXPECT_TRUE(vector_field(spec, Eigen::Vector3d::Zero()).isZero(0.0));
    const Eigen::VectorXd d = vector_field(spec, Eigen::Vector3d(1, 1, 1));
    EXPECT_DOUBLE_EQ(d[0], 0.0);
    EXPECT_DOUBLE_EQ(d[1], 26.0);
    EXPECT_NEAR(d[2], 1.0 - 8.0 / 3.0, 1e-15);
}

TEST(VectorField, OtherSystemsByHand)
{
    const Eigen::Vector3d s(0.5, -1.5, 2.0);
    const Eigen::VectorXd r = vector_field(SystemSpec::defaults(SystemKind::Rossler), s);
    EXPECT_NEAR(r[0], 1.5 - 2.0, 1e-15);
    EXPECT_NEAR(r[1], 0.5 + 0.2 * -1.5, 1e-15);
    EXPECT_NEAR(r[2], 0.2 + 2.0 * (0.5 - 5.7), 1e-14);
    const Eigen::VectorXd c = vector_field(SystemSpec::defaults(SystemKind::ChenUeta), s);
    EXPECT_NEAR(c[0], 35.0 * (-1.5 - 0.5), 1e-13);
    EXPECT_NEAR(c[1], (28.0 - 35.0) * 0.5 - 0.5 * 2.0 + 28.0 * -1.5, 1e-13);
    EXPECT_NEAR(c[2], 0.5 * -1.5 - 3.0 * 2.0, 1e-13);
    const Eigen::VectorXd h = vector_field(SystemSpec::defaults(SystemKind::Chua), s);
    const double f = -0.714 * 0.5 + 0.5 * (-1.143 + 0.714) * (1.5 - 0.5);
    EXPECT_NEAR(h[0], 15.6 * (-1.5 - 0.5 - f), 1e-13);
    EXPECT_NEAR(h[1], 0.5 + 1.5 + 2.0, 1e-15);
    EXPECT_NEAR(h[2], -28.0 * -1.5, 1e-13);
}

TEST(VectorField, ChuaDiodeContinuity)
{
    for (double x : {-1.0, 1.0}) {
        EXPECT_NEAR(chua_diode(x - 1e-12, -1.143, -0.714), chua_diode(x + 1e-12, -1.143, -0.714), 1e-11);
    }
    EXPECT_NEAR(chua_diode(0.5, -1.143, -0.714), -1.143 * 0.5, 1e-15); // inner slope m0
    EXPECT_NEAR(chua_diode(3.0, -1.143, -0.714) - chua_diode(2.0, -1.143, -0.714), -0.714, 1e-14);
}

TEST(RK4, StepCountContract)
{
    const Trajectory t = integrate_rk4(SystemSpec::defaults(SystemKind::Lorenz), 0.02, 1);
    EXPECT_EQ(t.rows(), 2);
    EXPECT_EQ(t.lyapunov_max, 0.905);
    EXPECT_EQ(integrate_rk4(SystemSpec::defaults(SystemKind::Rossler), 0.02, 5).lyapunov_max, 0.071);
    EXPECT_FALSE(integrate_rk4(SystemSpec::defaults(SystemKind::Chua), 0.02, 5).lyapunov_max.has_value());
}

TEST(RK4, LinearDecayOracle)
{
    const Eigen::MatrixXd x =
        rk4_integrate([](const Eigen::VectorXd& v) { return Eigen::VectorXd(-v); }, Eigen::VectorXd::Ones(1), 0.1, 10);
    EXPECT_NEAR(x(10, 0), std::exp(-1.0), 1e-6);
}

TEST(RK4, FourthOrderOnLinearProblem)
{
    // Global error on x' = -x over [0, 1]; log-log slope across three dt.
    std::vector<double> err, dts{0.1, 0.05, 0.025};
    for (double dt : dts) {
        const auto steps = static_cast<Eigen::Index>(std::lround(1.0 / dt));
        const Eigen::MatrixXd x = rk4_integrate([](const Eigen::VectorXd& v) { return Eigen::VectorXd(-v); },
                                                Eigen::VectorXd::Ones(1), dt, steps);
        err.push_back(std::abs(x(steps, 0) - std::exp(-1.0)));
    }
    for (int i = 0; i + 1 < 3; ++i) {
        const double slope = std::log(err[i] / err[i + 1]) / std::log(dts[i] / dts[i + 1]);
        EXPECT_NEAR(slope, 4.0, 0.3);
    }
}

TEST(RK4, LorenzConvergenceOrder)
{
    const auto spec = SystemSpec::defaults(SystemKind::Lorenz);
    auto endpoint = [&](double dt) {
        const auto steps = static_cast<Eigen::Index>(std::lround(1.0 / dt));
        return Eigen::VectorXd(integrate_rk4(spec, dt, steps).data.row(steps).transpose());
    };
    const Eigen::VectorXd ref = endpoint(1e-4);
    // least-squares slope of log error vs log dt; dt = 0.02 is still pre-asymptotic
    const std::vector<double> dts{0.01, 0.005, 0.0025, 0.00125};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double dt : dts) {
        const double x = std::log(dt), y = std::log((endpoint(dt) - ref).norm());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double k = static_cast<double>(dts.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    EXPECT_GT(slope, 3.7);
    EXPECT_LT(slope, 4.5);
}

TEST(RK4, LorenzAttractorBox)
{
    const Trajectory t = integrate_rk4(SystemSpec::defaults(SystemKind::Lorenz), 0.02, 12499);
    const Eigen::MatrixXd after = t.data.bottomRows(12500 - 500);
    EXPECT_LE(after.col(0).cwiseAbs().maxCoeff(), 30.0);
    EXPECT_LE(after.col(1).cwiseAbs().maxCoeff(), 35.0);
    EXPECT_GE(after.col(2).minCoeff(), 0.0);
    EXPECT_LE(after.col(2).maxCoeff(), 55.0);
}

TEST(RK4, Errors)
{
    auto spec = SystemSpec::defaults(SystemKind::Lorenz);
    EXPECT_THROW(integrate_rk4(spec, 0.0, 10), ConfigError);
    EXPECT_THROW(integrate_rk4(spec, 0.02, 0), ConfigError);
    spec.params.erase("rho");
    EXPECT_THROW(integrate_rk4(spec, 0.02, 10), ConfigError);
    // x' = x^2 from 1 blows up at t = 1.
    EXPECT_THROW(rk4_integrate([](const Eigen::VectorXd& v) { return Eigen::VectorXd(v.array().square() * 1e3); },
                               Eigen::VectorXd::Ones(1), 0.1, 1000),
                 DivergenceError);
}

TEST(MackeyGlass, ZeroProductionDecays)
{
    MackeyGlassParams p;
    p.beta = 0.0;
    const Trajectory t = integrate_mackey_glass(p, 0.1, 500, 1.2);
    EXPECT_NEAR(t.data(500, 0), 1.2 * std::exp(-0.1 * 50.0), 1e-7);
    for (Eigen::Index i = 1; i < t.rows(); ++i) EXPECT_LT(t.data(i, 0), t.data(i - 1, 0));
}

TEST(MackeyGlass, NonzeroFixedPoint)
{
    // beta x / (1 + x^n) = gamma x  =>  x* = (beta/gamma - 1)^(1/n)
    MackeyGlassParams p;
    const double xs = std::pow(p.beta / p.gamma - 1.0, 1.0 / p.n);
    const Trajectory t = integrate_mackey_glass(p, 0.02, 5000, xs);
    EXPECT_LT((t.data.array() - xs).abs().maxCoeff(), 1e-12);
}

TEST(MackeyGlass, ZeroDelayMatchesOde)
{
    MackeyGlassParams p;
    p.tau = 0.0;
    const Trajectory mg = integrate_mackey_glass(p, 0.02, 2000, 0.5);
    const Eigen::MatrixXd ode = rk4_integrate(
        [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd d(1);
            d[0] = p.beta * v[0] / (1.0 + std::pow(v[0], p.n)) - p.gamma * v[0];
            return d;
        },
        Eigen::VectorXd::Constant(1, 0.5), 0.02, 2000);
    EXPECT_LT((mg.data - ode).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MackeyGlass, ChaoticRegimeStaysBounded)
{
    const Trajectory t = generate(SystemSpec::defaults(SystemKind::MackeyGlass), 0.1, 20000);
    EXPECT_EQ(t.dim(), 1);
    EXPECT_GT(t.data.minCoeff(), 0.0);
    EXPECT_LT(t.data.maxCoeff(), 2.0);
    // keeps oscillating: no settling in the tail
    const Eigen::VectorXd tail = t.data.col(0).tail(5000);
    EXPECT_GT(tail.maxCoeff() - tail.minCoeff(), 0.5);
}

TEST(DelayEmbed, Identity)
{
    const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(7, 0.0, 6.0);
    EXPECT_EQ(delay_embed(s, 1, 3).data.col(0), s);
}

TEST(DelayEmbed, ExampleRows)
{
    Eigen::VectorXd s(5);
    s << 1, 2, 3, 4, 5;
    Eigen::MatrixXd e(4, 2);
    e << 2, 1, 3, 2, 4, 3, 5, 4;
    EXPECT_EQ(delay_embed(s, 2, 1).data, e);
}

TEST(DelayEmbed, WindowingOracle)
{
    const Eigen::VectorXd s = Eigen::VectorXd::Random(50);
    for (int dim : {1, 2, 3, 4}) {
        for (int lag : {1, 2, 5}) {
            const Trajectory t = delay_embed(s, dim, lag);
            ASSERT_EQ(t.rows(), 50 - (dim - 1) * lag);
            for (Eigen::Index k = 0; k < t.rows(); ++k) {
                const Eigen::Index tt = k + (dim - 1) * lag;
                for (int j = 0; j < dim; ++j) EXPECT_EQ(t.data(k, j), s[tt - j * lag]);
            }
        }
    }
    EXPECT_THROW(delay_embed(s, 30, 2), DimensionError);
}

TEST(Normalize, ConstantColumnAndRoundTrip)
{
    Trajectory t;
    t.data = Eigen::MatrixXd::Random(40, 3) * 7.0;
    t.data.col(1).setConstant(4.2);
    auto [n, sc] = normalize_minmax(t);
    EXPECT_TRUE(sc.zero_range[1]);
    EXPECT_FALSE(sc.zero_range[0]);
    EXPECT_TRUE(n.data.col(1).isZero(0.0));
    EXPECT_NEAR(n.data.col(0).minCoeff(), 0.0, 1e-15);
    EXPECT_NEAR(n.data.col(0).maxCoeff(), 1.0, 1e-15);
    EXPECT_LT((sc.inverse(n.data) - t.data).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, TrainingExtremaOnlyNoClipping)
{
    Trajectory t;
    t.data = Eigen::VectorXd::LinSpaced(20, 0.0, 19.0);
    auto [n, sc] = normalize_minmax(t, 10);
    EXPECT_DOUBLE_EQ(n.data(9, 0), 1.0);
    EXPECT_GT(n.data(19, 0), 1.0);
    EXPECT_DOUBLE_EQ(n.data(19, 0), 19.0 / 9.0);
}

TEST(Split, DefaultArithmetic)
{
    const Trajectory t = integrate_rk4(SystemSpec::defaults(SystemKind::Lorenz), 0.02, 12499);
    ASSERT_EQ(t.rows(), 12500);
    const TrainTest tt = split(t, 2000, 0.8);
    EXPECT_EQ(tt.train.rows(), 8400);
    EXPECT_EQ(tt.test.rows(), 2100);
    EXPECT_EQ(tt.train.rows() + tt.test.rows(), 12500 - 2000);
    EXPECT_EQ(tt.train.data.row(0), t.data.row(2000));
    EXPECT_EQ(tt.test.data.row(0), t.data.row(10400));
    EXPECT_EQ(split(t, 2000, 1.0).test.rows(), 0);
}

TEST(Csv, HeaderOptionalAndErrorsNameRow)
{
    std::istringstream with("a,b\n1,2\n3.5,-4e-1\n");
    const Trajectory t = parse_csv(with, 0.5);
    EXPECT_EQ(t.columns, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(t.rows(), 2);
    EXPECT_DOUBLE_EQ(t.data(1, 1), -0.4);
    std::istringstream without("1\n2\n3\n");
    EXPECT_EQ(parse_csv(without).rows(), 3);
    std::istringstream bad("x\n1\n2\nabc\n");
    try {
        parse_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos);
    }
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(parse_csv(ragged), ParseError);
}
