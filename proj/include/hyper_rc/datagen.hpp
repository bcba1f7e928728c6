#pragma once

// Benchmark trajectories (Lorenz, Rössler, Chen-Ueta, Chua, Mackey-Glass),
// CSV ingestion, delay embedding, min-max scaling and train/test splitting.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hyper_rc/error.hpp"
#include "hyper_rc/trajectory.hpp"

namespace hyper_rc {

enum class SystemKind { Lorenz, Rossler, ChenUeta, Chua, MackeyGlass };

inline std::string_view to_string(SystemKind k) noexcept
{
    switch (k) {
    case SystemKind::Lorenz:
        return "lorenz";
    case SystemKind::Rossler:
        return "rossler";
    case SystemKind::ChenUeta:
        return "chen_ueta";
    case SystemKind::Chua:
        return "chua";
    case SystemKind::MackeyGlass:
        return "mackey_glass";
    }
    return "lorenz";
}

inline SystemKind parse_system_kind(std::string_view s)
{
    if (s == "lorenz") return SystemKind::Lorenz;
    if (s == "rossler") return SystemKind::Rossler;
    if (s == "chen_ueta" || s == "chen") return SystemKind::ChenUeta;
    if (s == "chua") return SystemKind::Chua;
    if (s == "mackey_glass") return SystemKind::MackeyGlass;
    throw ConfigError("unknown system '" + std::string(s) + "'");
}

struct SystemSpec {
    SystemKind kind = SystemKind::Lorenz;
    std::map<std::string, double> params;
    Eigen::VectorXd x0;

    double param(const std::string& name) const
    {
        auto it = params.find(name);
        if (it == params.end()) {
            throw ConfigError("system " + std::string(to_string(kind)) + ": missing parameter '" + name + "'");
        }
        return it->second;
    }

    static std::vector<std::string> parameter_names(SystemKind kind)
    {
        switch (kind) {
        case SystemKind::Lorenz:
            return {"beta", "rho", "sigma"};
        case SystemKind::Rossler:
        case SystemKind::ChenUeta:
            return {"a", "b", "c"};
        case SystemKind::Chua:
            return {"alpha", "beta", "m0", "m1"};
        case SystemKind::MackeyGlass:
            return {"beta", "gamma", "n", "tau"};
        }
        return {};
    }

    static int state_dim(SystemKind kind) { return kind == SystemKind::MackeyGlass ? 1 : 3; }

    void validate() const
    {
        auto expected = parameter_names(kind);
        std::vector<std::string> got;
        for (const auto& [k, v] : params) {
            got.push_back(k);
            if (!std::isfinite(v)) {
                throw ConfigError("system parameter '" + k + "' is not finite");
            }
        }
        if (got != expected) {
            std::string msg = "system " + std::string(to_string(kind)) + ": expected parameters {";
            for (std::size_t i = 0; i < expected.size(); ++i) {
                msg += (i ? "," : "") + expected[i];
            }
            throw ConfigError(msg + "}");
        }
        if (x0.size() != state_dim(kind)) {
            throw ConfigError("system " + std::string(to_string(kind)) + ": initial condition has wrong length");
        }
    }

    // Chaotic parameter regimes and initial conditions used for the benchmarks.
    static SystemSpec defaults(SystemKind kind)
    {
        SystemSpec s;
        s.kind = kind;
        switch (kind) {
        case SystemKind::Lorenz:
            s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
            s.x0 = Eigen::Vector3d(1.0, 1.0, 1.0);
            break;
        case SystemKind::Rossler:
            s.params = {{"a", 0.2}, {"b", 0.2}, {"c", 5.7}};
            s.x0 = Eigen::Vector3d(0.0, 1.0, 0.0);
            break;
        case SystemKind::ChenUeta:
            s.params = {{"a", 35.0}, {"b", 3.0}, {"c", 28.0}};
            s.x0 = Eigen::Vector3d(0.1, 0.1, 0.1);
            break;
        case SystemKind::Chua:
            s.params = {{"alpha", 15.6}, {"beta", 28.0}, {"m0", -1.143}, {"m1", -0.714}};
            s.x0 = Eigen::Vector3d(0.7, 0.0, 0.0);
            break;
        case SystemKind::MackeyGlass:
            s.params = {{"beta", 0.2}, {"gamma", 0.1}, {"n", 10.0}, {"tau", 17.0}};
            s.x0 = Eigen::VectorXd::Constant(1, 1.2);
            break;
        }
        return s;
    }
};

// Largest Lyapunov exponent where it is a known constant; none otherwise.
inline std::optional<double> known_lyapunov_max(SystemKind kind)
{
    switch (kind) {
    case SystemKind::Lorenz:
        return 0.905;
    case SystemKind::Rossler:
        return 0.071;
    default:
        return std::nullopt;
    }
}

inline std::vector<std::string> default_columns(SystemKind kind)
{
    if (kind == SystemKind::MackeyGlass) return {"x"};
    return {"x", "y", "z"};
}

// Chua's piecewise-linear diode characteristic.
inline double chua_diode(double x, double m0, double m1) noexcept
{
    return m1 * x + 0.5 * (m0 - m1) * (std::abs(x + 1.0) - std::abs(x - 1.0));
}

inline Eigen::VectorXd vector_field(const SystemSpec& spec, const Eigen::VectorXd& s)
{
    Eigen::VectorXd d(s.size());
    switch (spec.kind) {
    case SystemKind::Lorenz: {
        const double sg = spec.param("sigma"), rho = spec.param("rho"), beta = spec.param("beta");
        d << sg * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2];
        break;
    }
    case SystemKind::Rossler: {
        const double a = spec.param("a"), b = spec.param("b"), c = spec.param("c");
        d << -s[1] - s[2], s[0] + a * s[1], b + s[2] * (s[0] - c);
        break;
    }
    case SystemKind::ChenUeta: {
        const double a = spec.param("a"), b = spec.param("b"), c = spec.param("c");
        d << a * (s[1] - s[0]), (c - a) * s[0] - s[0] * s[2] + c * s[1], s[0] * s[1] - b * s[2];
        break;
    }
    case SystemKind::Chua: {
        const double al = spec.param("alpha"), be = spec.param("beta");
        const double f = chua_diode(s[0], spec.param("m0"), spec.param("m1"));
        d << al * (s[1] - s[0] - f), s[0] - s[1] + s[2], -be * s[1];
        break;
    }
    case SystemKind::MackeyGlass:
        throw ConfigError("vector_field: Mackey-Glass is a delay equation; use integrate_mackey_glass");
    }
    return d;
}

// Classical fixed-step RK4 of x' = f(x). Returns steps + 1 rows (x0 first).
template <typename F>
Eigen::MatrixXd rk4_integrate(F&& f, const Eigen::VectorXd& x0, double dt, Eigen::Index steps)
{
    if (!(dt > 0.0)) {
        throw ConfigError("rk4: dt must be positive");
    }
    if (steps < 1) {
        throw ConfigError("rk4: steps must be >= 1");
    }
    Eigen::MatrixXd out(steps + 1, x0.size());
    Eigen::VectorXd x = x0;
    out.row(0) = x.transpose();
    for (Eigen::Index i = 0; i < steps; ++i) {
        const Eigen::VectorXd k1 = f(x);
        const Eigen::VectorXd k2 = f(Eigen::VectorXd(x + 0.5 * dt * k1));
        const Eigen::VectorXd k3 = f(Eigen::VectorXd(x + 0.5 * dt * k2));
        const Eigen::VectorXd k4 = f(Eigen::VectorXd(x + dt * k3));
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            throw DivergenceError("rk4: non-finite state", static_cast<std::size_t>(i + 1));
        }
        out.row(i + 1) = x.transpose();
    }
    return out;
}

inline Trajectory integrate_rk4(const SystemSpec& spec, double dt, Eigen::Index steps)
{
    spec.validate();
    if (spec.kind == SystemKind::MackeyGlass) {
        throw ConfigError("integrate_rk4: Mackey-Glass is a delay equation; use integrate_mackey_glass");
    }
    Trajectory tr;
    tr.data = rk4_integrate([&](const Eigen::VectorXd& x) { return vector_field(spec, x); }, spec.x0, dt, steps);
    tr.dt = dt;
    tr.name = std::string(to_string(spec.kind));
    tr.lyapunov_max = known_lyapunov_max(spec.kind);
    tr.columns = default_columns(spec.kind);
    return tr;
}

struct MackeyGlassParams {
    double beta = 0.2;
    double gamma = 0.1;
    double n = 10.0;
    double tau = 17.0;
};

// x'(t) = beta x(t - tau) / (1 + x(t - tau)^n) - gamma x(t), constant history
// for t <= 0. RK4 on the current value; the delayed value is linearly
// interpolated on the stored grid, or between x_k and the stage estimate when
// the delayed time falls inside the current step (so tau = 0 is the plain ODE).
inline Trajectory integrate_mackey_glass(const MackeyGlassParams& p, double dt, Eigen::Index steps, double history)
{
    if (!(dt > 0.0)) throw ConfigError("integrate_mackey_glass: dt must be positive");
    if (steps < 1) throw ConfigError("integrate_mackey_glass: steps must be >= 1");
    if (!(p.tau >= 0.0)) throw ConfigError("integrate_mackey_glass: tau must be >= 0");

    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(steps + 1));
    xs.push_back(history);

    auto rhs = [&](double x, double xd) { return p.beta * xd / (1.0 + std::pow(xd, p.n)) - p.gamma * x; };

    // Value at absolute time s, given step k starts at t_k and the current
    // stage sits at time t_stage with value x_stage.
    auto delayed = [&](double s, std::size_t k, double t_stage, double x_stage) {
        const double tk = static_cast<double>(k) * dt;
        if (s <= 0.0) {
            return history;
        }
        if (s >= tk) {
            if (t_stage <= tk) return xs[k];
            const double w = (s - tk) / (t_stage - tk);
            return (1.0 - w) * xs[k] + w * x_stage;
        }
        const double pos = s / dt;
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double w = pos - static_cast<double>(i);
        if (i + 1 > k) return xs[k];
        return (1.0 - w) * xs[i] + w * xs[i + 1];
    };

    for (Eigen::Index step = 0; step < steps; ++step) {
        const auto k = static_cast<std::size_t>(step);
        const double t = static_cast<double>(step) * dt;
        const double x = xs[k];
        const double k1 = rhs(x, delayed(t - p.tau, k, t, x));
        const double x2 = x + 0.5 * dt * k1;
        const double k2 = rhs(x2, delayed(t + 0.5 * dt - p.tau, k, t + 0.5 * dt, x2));
        const double x3 = x + 0.5 * dt * k2;
        const double k3 = rhs(x3, delayed(t + 0.5 * dt - p.tau, k, t + 0.5 * dt, x3));
        const double x4 = x + dt * k3;
        const double k4 = rhs(x4, delayed(t + dt - p.tau, k, t + dt, x4));
        const double next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(next)) {
            throw DivergenceError("integrate_mackey_glass: non-finite state", k + 1);
        }
        xs.push_back(next);
    }

    Trajectory tr;
    tr.data = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    tr.dt = dt;
    tr.name = "mackey_glass";
    tr.columns = {"x"};
    return tr;
}

inline MackeyGlassParams mackey_glass_params(const SystemSpec& spec)
{
    return {spec.param("beta"), spec.param("gamma"), spec.param("n"), spec.param("tau")};
}

// Integrates any supported system; Mackey-Glass uses x0[0] as constant history.
inline Trajectory generate(const SystemSpec& spec, double dt, Eigen::Index steps)
{
    if (spec.kind == SystemKind::MackeyGlass) {
        spec.validate();
        return integrate_mackey_glass(mackey_glass_params(spec), dt, steps, spec.x0[0]);
    }
    return integrate_rk4(spec, dt, steps);
}

// Row k = (s_t, s_{t-lag}, ..., s_{t-(dim-1)lag}) with t = k + (dim-1) lag.
inline Trajectory delay_embed(const Eigen::VectorXd& series, int dim, int lag, double dt = 1.0)
{
    if (dim < 1 || lag < 1) {
        throw ConfigError("delay_embed: dim and lag must be >= 1");
    }
    const Eigen::Index span = static_cast<Eigen::Index>(dim - 1) * lag;
    const Eigen::Index len = series.size() - span;
    if (len < 1) {
        throw DimensionError("delay_embed: series too short for the requested embedding");
    }
    Trajectory tr;
    tr.data.resize(len, dim);
    for (Eigen::Index k = 0; k < len; ++k) {
        for (int j = 0; j < dim; ++j) {
            tr.data(k, j) = series[k + span - static_cast<Eigen::Index>(j) * lag];
        }
    }
    tr.dt = dt;
    tr.name = "delay_embedding";
    for (int j = 0; j < dim; ++j) {
        tr.columns.push_back(j == 0 ? "s" : "s_lag" + std::to_string(j * lag));
    }
    return tr;
}

// Per-column affine map onto [0,1] from fitted extrema. A zero-range column
// maps to 0 and is flagged.
struct MinMaxScaler {
    Eigen::VectorXd min;
    Eigen::VectorXd range;
    std::vector<bool> zero_range;

    static MinMaxScaler fit(const Eigen::MatrixXd& data)
    {
        if (data.rows() == 0) {
            throw DimensionError("MinMaxScaler::fit: empty data");
        }
        MinMaxScaler s;
        s.min = data.colwise().minCoeff().transpose();
        s.range = data.colwise().maxCoeff().transpose() - s.min;
        s.zero_range.resize(static_cast<std::size_t>(data.cols()));
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            s.zero_range[static_cast<std::size_t>(j)] = !(s.range[j] > 0.0);
        }
        return s;
    }

    Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const
    {
        check(data);
        Eigen::MatrixXd out(data.rows(), data.cols());
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (zero_range[static_cast<std::size_t>(j)]) {
                out.col(j).setZero();
            } else {
                out.col(j) = (data.col(j).array() - min[j]) / range[j];
            }
        }
        return out;
    }

    Eigen::MatrixXd inverse(const Eigen::MatrixXd& data) const
    {
        check(data);
        Eigen::MatrixXd out(data.rows(), data.cols());
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (zero_range[static_cast<std::size_t>(j)]) {
                out.col(j).setConstant(min[j]);
            } else {
                out.col(j) = data.col(j).array() * range[j] + min[j];
            }
        }
        return out;
    }

private:
    void check(const Eigen::MatrixXd& data) const
    {
        if (data.cols() != min.size()) {
            throw DimensionError("MinMaxScaler: column count mismatch");
        }
    }
};

// Fits on the first `fit_rows` rows (the training segment), transforms all rows.
inline std::pair<Trajectory, MinMaxScaler> normalize_minmax(const Trajectory& tr, Eigen::Index fit_rows)
{
    if (fit_rows < 1 || fit_rows > tr.rows()) {
        throw DimensionError("normalize_minmax: fit_rows out of range");
    }
    MinMaxScaler scaler = MinMaxScaler::fit(tr.data.topRows(fit_rows));
    Trajectory out = tr;
    out.data = scaler.transform(tr.data);
    return {std::move(out), std::move(scaler)};
}

inline std::pair<Trajectory, MinMaxScaler> normalize_minmax(const Trajectory& tr)
{
    return normalize_minmax(tr, tr.rows());
}

struct TrainTest {
    Trajectory train;
    Trajectory test;
};

// Drop `washout` rows, then split the rest at floor(train_frac * remaining).
inline TrainTest split(const Trajectory& tr, Eigen::Index washout, double train_frac)
{
    if (washout < 0 || washout >= tr.rows()) {
        throw DimensionError("split: washout must leave at least one row");
    }
    if (!(train_frac > 0.0 && train_frac <= 1.0)) {
        throw ConfigError("split: train_frac must lie in (0,1]");
    }
    const Eigen::Index remaining = tr.rows() - washout;
    const auto n_train = static_cast<Eigen::Index>(std::floor(train_frac * static_cast<double>(remaining)));
    return {tr.slice(washout, n_train), tr.slice(washout + n_train, remaining - n_train)};
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

inline std::optional<double> parse_real(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace detail

// One column per variable, decimal reals, optional single header row.
inline Trajectory parse_csv(std::istream& in, double dt = 1.0, const std::string& name = "csv")
{
    std::vector<std::vector<double>> rows;
    std::vector<std::string> header;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        std::vector<double> values;
        bool numeric = true;
        for (const auto& c : cells) {
            auto v = detail::parse_real(c);
            if (!v) {
                numeric = false;
                break;
            }
            values.push_back(*v);
        }
        if (!numeric) {
            if (rows.empty() && header.empty()) {
                header = cells;
                width = cells.size();
                continue;
            }
            throw ParseError("csv: non-numeric cell at row " + std::to_string(line_no));
        }
        if (width == 0) width = values.size();
        if (values.size() != width) {
            throw ParseError("csv: row " + std::to_string(line_no) + " has " + std::to_string(values.size()) +
                             " cells, expected " + std::to_string(width));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw ParseError("csv: no data rows");
    }
    Trajectory tr;
    tr.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            tr.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    tr.dt = dt;
    tr.name = name;
    tr.columns = header;
    return tr;
}

inline Trajectory load_csv(const std::string& path, double dt = 1.0)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("csv: cannot open '" + path + "'");
    }
    return parse_csv(in, dt, path);
}

} // namespace hyper_rc
