#pragma once

// Leaky echo-state dynamics with a quadratic readout:
//
//   x_{t+1} = (1 - alpha) x_t + alpha * phi(W x_t + U u_t)
//   u_hat_{t+1} = W_out [x; x.^2; 1]
//
// Training is a ridge regression on teacher-forced states; forecasting is
// either teacher-forced (open loop) or autoregressive (closed loop).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hyper_rc/error.hpp"
#include "hyper_rc/reservoir.hpp"
#include "hyper_rc/rng.hpp"
#include "hyper_rc/trajectory.hpp"

namespace hyper_rc {

enum class Activation { Tanh, Sine, Linear, Relu };

inline double activate(Activation a, double z) noexcept
{
    switch (a) {
    case Activation::Tanh:
        return std::tanh(z);
    case Activation::Sine:
        return std::sin(z);
    case Activation::Linear:
        return z;
    case Activation::Relu:
        return z > 0.0 ? z : 0.0;
    }
    return z;
}

// Relu'(0) is taken as 0.
inline double activation_derivative(Activation a, double z) noexcept
{
    switch (a) {
    case Activation::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case Activation::Sine:
        return std::cos(z);
    case Activation::Linear:
        return 1.0;
    case Activation::Relu:
        return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

inline std::string_view to_string(Activation a) noexcept
{
    switch (a) {
    case Activation::Tanh:
        return "tanh";
    case Activation::Sine:
        return "sine";
    case Activation::Linear:
        return "linear";
    case Activation::Relu:
        return "relu";
    }
    return "tanh";
}

inline Activation parse_activation(std::string_view s)
{
    if (s == "tanh") return Activation::Tanh;
    if (s == "sine" || s == "sin") return Activation::Sine;
    if (s == "linear") return Activation::Linear;
    if (s == "relu") return Activation::Relu;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

// Equal thirds tanh / sine / linear by node-index block.
inline std::vector<Activation> mixed_activations(int n)
{
    std::vector<Activation> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int block = static_cast<int>((3LL * i) / n);
        out[static_cast<std::size_t>(i)] =
            block == 0 ? Activation::Tanh : (block == 1 ? Activation::Sine : Activation::Linear);
    }
    return out;
}

struct EsnConfig {
    double leak_rate = 0.8;
    double input_scale = 0.2;
    int washout = 500;
    double ridge_lambda = 1e-5;
    std::vector<Activation> activations{Activation::Tanh}; // one shared kind, or one per node
    std::uint64_t seed = 0;

    Activation activation(Eigen::Index node) const
    {
        return activations.size() == 1 ? activations.front() : activations[static_cast<std::size_t>(node)];
    }

    bool uniform_activation() const noexcept
    {
        if (activations.empty()) return true;
        for (auto a : activations) {
            if (a != activations.front()) return false;
        }
        return true;
    }

    void validate(int n) const
    {
        if (!(leak_rate >= 0.0 && leak_rate <= 1.0)) {
            throw ConfigError("EsnConfig: leak_rate must lie in [0,1]");
        }
        if (!(input_scale > 0.0)) {
            throw ConfigError("EsnConfig: input_scale must be positive");
        }
        if (washout < 0) {
            throw ConfigError("EsnConfig: washout must be >= 0");
        }
        if (!(ridge_lambda > 0.0)) {
            throw ConfigError("EsnConfig: ridge_lambda must be positive");
        }
        if (activations.size() != 1 && static_cast<int>(activations.size()) != n) {
            throw ConfigError("EsnConfig: activation list must have length 1 or N");
        }
    }
};

// Post-washout states aligned with next-step targets: row t of `states` is the
// state after consuming input u_t, row t of `targets` is u_{t+1}.
struct StateTrace {
    Eigen::MatrixXd states;
    Eigen::MatrixXd targets;
    Eigen::VectorXd final_state; // after consuming every input
};

struct RidgeFit {
    Eigen::MatrixXd weights; // m x (2N+1)
    double condition_estimate = 1.0;
    bool ill_conditioned = false;
};

inline constexpr double kDivergenceGuard = 1e6;
inline constexpr double kIllConditioned = 1e12;

class EsnModel {
public:
    EsnModel(ReservoirMatrix reservoir, Eigen::MatrixXd input_weights, EsnConfig config)
        : reservoir_(std::move(reservoir)), input_weights_(std::move(input_weights)), config_(std::move(config))
    {
        const int n = reservoir_.n();
        if (reservoir_.weights.cols() != n) {
            throw DimensionError("EsnModel: reservoir matrix must be square");
        }
        if (input_weights_.rows() != n || input_weights_.cols() < 1) {
            throw DimensionError("EsnModel: input weights must be N x m");
        }
        config_.validate(n);
        const auto nnz = (reservoir_.weights.array() != 0.0).count();
        use_sparse_ = nnz * 4 < reservoir_.weights.size();
        if (use_sparse_) {
            sparse_w_ = reservoir_.weights.sparseView(0.0, 0.0);
        }
    }

    // Draws U ~ N(0, input_scale^2) clipped to +-2 input_scale.
    static EsnModel create(ReservoirMatrix reservoir, int input_dim, EsnConfig config)
    {
        if (input_dim < 1) {
            throw DimensionError("EsnModel::create: input_dim must be >= 1");
        }
        const int n = reservoir.n();
        Rng rng = make_rng(config.seed, "esn.input_weights");
        std::normal_distribution<double> gauss(0.0, config.input_scale);
        const double clip = 2.0 * config.input_scale;
        Eigen::MatrixXd u(n, input_dim);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < input_dim; ++j) {
                u(i, j) = std::clamp(gauss(rng), -clip, clip);
            }
        }
        return EsnModel(std::move(reservoir), std::move(u), std::move(config));
    }

    int n() const noexcept { return reservoir_.n(); }
    int input_dim() const noexcept { return static_cast<int>(input_weights_.cols()); }
    int feature_dim() const noexcept { return 2 * n() + 1; }

    const ReservoirMatrix& reservoir() const noexcept { return reservoir_; }
    const Eigen::MatrixXd& input_weights() const noexcept { return input_weights_; }
    const EsnConfig& config() const noexcept { return config_; }

    bool trained() const noexcept { return readout_.has_value(); }
    const Eigen::MatrixXd& readout() const
    {
        if (!readout_) {
            throw Error("EsnModel: readout not trained");
        }
        return *readout_;
    }

    void set_readout(Eigen::MatrixXd w_out)
    {
        if (w_out.rows() != input_dim() || w_out.cols() != feature_dim()) {
            throw DimensionError("EsnModel::set_readout: readout must be m x (2N+1)");
        }
        readout_ = std::move(w_out);
    }

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    // W x + U u
    Eigen::VectorXd preactivation(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const
    {
        Eigen::VectorXd z = input_weights_ * u;
        if (use_sparse_) {
            z.noalias() += sparse_w_ * x;
        } else {
            z.noalias() += reservoir_.weights * x;
        }
        return z;
    }

    // Applies phi node-wise, in place.
    void apply_activation(Eigen::VectorXd& z) const
    {
        if (config_.uniform_activation()) {
            switch (config_.activations.front()) {
            case Activation::Tanh:
                z = z.array().tanh();
                return;
            case Activation::Linear:
                return;
            default:
                break;
            }
        }
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            z[i] = activate(config_.activation(i), z[i]);
        }
    }

private:
    ReservoirMatrix reservoir_;
    Eigen::MatrixXd input_weights_;
    EsnConfig config_;
    std::optional<Eigen::MatrixXd> readout_;
    std::vector<std::string> warnings_;
    bool use_sparse_ = false;
    Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_w_;
};

namespace detail {

inline void check_step_dims(const EsnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u)
{
    if (x.size() != model.n()) {
        throw DimensionError("step: state has length " + std::to_string(x.size()) + ", expected " +
                             std::to_string(model.n()));
    }
    if (u.size() != model.input_dim()) {
        throw DimensionError("step: input has length " + std::to_string(u.size()) + ", expected " +
                             std::to_string(model.input_dim()));
    }
}

inline Eigen::VectorXd step_unchecked(const EsnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u)
{
    const double alpha = model.config().leak_rate;
    Eigen::VectorXd z = model.preactivation(x, u);
    model.apply_activation(z);
    return (1.0 - alpha) * x + alpha * z;
}

inline void guard_state(const Eigen::VectorXd& x, std::size_t step)
{
    if (!x.allFinite()) {
        throw DivergenceError("reservoir state became non-finite", step);
    }
    if (x.norm() > kDivergenceGuard) {
        throw DivergenceError("reservoir state norm exceeded divergence guard", step);
    }
}

} // namespace detail

inline Eigen::VectorXd step(const EsnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u)
{
    detail::check_step_dims(model, x, u);
    Eigen::VectorXd next = detail::step_unchecked(model, x, u);
    if (!next.allFinite()) {
        throw DivergenceError("step: non-finite state", 0);
    }
    return next;
}

// [x, x.^2, 1]
inline Eigen::VectorXd features(const Eigen::VectorXd& x)
{
    const Eigen::Index n = x.size();
    Eigen::VectorXd xi(2 * n + 1);
    xi.head(n) = x;
    xi.segment(n, n) = x.array().square();
    xi[2 * n] = 1.0;
    return xi;
}

// Row-wise features of a T x N state matrix.
inline Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& states)
{
    const Eigen::Index n = states.cols();
    Eigen::MatrixXd phi(states.rows(), 2 * n + 1);
    phi.leftCols(n) = states;
    phi.middleCols(n, n) = states.array().square();
    phi.col(2 * n).setOnes();
    return phi;
}

// Teacher-forced run from x_0 = 0. Discards the first `washout` states.
inline StateTrace drive(const EsnModel& model, const Trajectory& inputs, int washout)
{
    const Eigen::Index steps = inputs.rows();
    if (inputs.dim() != model.input_dim()) {
        throw DimensionError("drive: input dimension mismatch");
    }
    if (washout < 0 || steps <= static_cast<Eigen::Index>(washout) + 1) {
        throw DimensionError("drive: need more than washout + 1 inputs (have " + std::to_string(steps) +
                             ", washout " + std::to_string(washout) + ")");
    }
    const Eigen::Index pairs = steps - 1 - washout;
    StateTrace trace;
    trace.states.resize(pairs, model.n());
    trace.targets = inputs.data.bottomRows(pairs);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n());
    for (Eigen::Index t = 0; t < steps; ++t) {
        x = detail::step_unchecked(model, x, inputs.data.row(t).transpose());
        detail::guard_state(x, static_cast<std::size_t>(t));
        if (t >= washout && t < steps - 1) {
            trace.states.row(t - washout) = x.transpose();
        }
    }
    trace.final_state = std::move(x);
    return trace;
}

// W_out = Y Xi^T (Xi Xi^T + lambda I)^{-1}, solved through a Cholesky factor.
inline RidgeFit fit_readout(const StateTrace& trace, double lambda)
{
    if (!(lambda > 0.0)) {
        throw ConfigError("fit_readout: lambda must be positive");
    }
    if (trace.states.rows() != trace.targets.rows() || trace.states.rows() == 0) {
        throw DimensionError("fit_readout: states and targets must have equal, nonzero row counts");
    }
    const Eigen::MatrixXd phi = feature_matrix(trace.states);
    const Eigen::Index f = phi.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(f, f);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
    gram.diagonal().array() += lambda;
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw DomainError("fit_readout: normal matrix not positive definite");
    }
    const Eigen::MatrixXd rhs = phi.transpose() * trace.targets; // F x m
    RidgeFit fit;
    fit.weights = llt.solve(rhs).transpose();
    const double rc = llt.rcond();
    fit.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    fit.ill_conditioned = fit.condition_estimate > kIllConditioned;
    return fit;
}

// Drive over `inputs`, fit the readout, attach it. Returns the trace so the
// caller can continue from trace.final_state.
inline StateTrace train(EsnModel& model, const Trajectory& inputs)
{
    StateTrace trace = drive(model, inputs, model.config().washout);
    RidgeFit fit = fit_readout(trace, model.config().ridge_lambda);
    if (fit.ill_conditioned) {
        model.add_warning("fit_readout: condition estimate " + std::to_string(fit.condition_estimate) +
                          " exceeds 1e12");
    }
    model.set_readout(std::move(fit.weights));
    return trace;
}

// One-step-ahead predictions for every post-washout step.
inline Trajectory forecast_open_loop(const EsnModel& model, const Trajectory& inputs)
{
    const StateTrace trace = drive(model, inputs, model.config().washout);
    Trajectory out;
    out.data = feature_matrix(trace.states) * model.readout().transpose();
    out.dt = inputs.dt;
    out.name = inputs.name + "_open_loop";
    out.lyapunov_max = inputs.lyapunov_max;
    out.columns = inputs.columns;
    return out;
}

// Closed loop from a state that has just consumed its last true input.
inline Eigen::MatrixXd continue_autoregressive(const EsnModel& model, Eigen::VectorXd x, Eigen::Index horizon)
{
    if (horizon < 0) {
        throw ConfigError("forecast: horizon must be >= 0");
    }
    const Eigen::MatrixXd& w_out = model.readout();
    Eigen::MatrixXd pred(horizon, model.input_dim());
    for (Eigen::Index h = 0; h < horizon; ++h) {
        const Eigen::VectorXd u = w_out * features(x);
        pred.row(h) = u.transpose();
        if (h + 1 < horizon) {
            x = detail::step_unchecked(model, x, u);
            detail::guard_state(x, static_cast<std::size_t>(h));
        }
    }
    return pred;
}

// Drive open loop over the whole warmup from x_0 = 0, then feed predictions back.
inline Trajectory forecast_autoregressive(const EsnModel& model, const Trajectory& warmup, Eigen::Index horizon)
{
    if (warmup.dim() != model.input_dim()) {
        throw DimensionError("forecast_autoregressive: input dimension mismatch");
    }
    if (warmup.rows() < 1) {
        throw DimensionError("forecast_autoregressive: empty warmup");
    }
    (void)model.readout();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n());
    for (Eigen::Index t = 0; t < warmup.rows(); ++t) {
        x = detail::step_unchecked(model, x, warmup.data.row(t).transpose());
        detail::guard_state(x, static_cast<std::size_t>(t));
    }
    Trajectory out;
    out.data = continue_autoregressive(model, std::move(x), horizon);
    out.dt = warmup.dt;
    out.name = warmup.name + "_autoregressive";
    out.lyapunov_max = warmup.lyapunov_max;
    out.columns = warmup.columns;
    return out;
}

} // namespace hyper_rc
