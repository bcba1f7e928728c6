#pragma once

// Numeric checks of the kernel-spectrum bounds, the Jacobian singular-value
// bounds, the expansion factor beta(sigma) and the twin-trajectory divergence
// floor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hyper_rc/error.hpp"
#include "hyper_rc/esn.hpp"
#include "hyper_rc/geometry.hpp"
#include "hyper_rc/reservoir.hpp"

namespace hyper_rc {

inline constexpr double kBoundSlack = 1e-9;

struct SymmetricSpectrum {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double rho = 0.0; // max |eigenvalue|
};

inline SymmetricSpectrum symmetric_spectrum(const Eigen::MatrixXd& w)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("symmetric_spectrum: eigensolver failed", 0.0);
    }
    const auto& ev = es.eigenvalues();
    SymmetricSpectrum s;
    s.lambda_min = ev.minCoeff();
    s.lambda_max = ev.maxCoeff();
    s.rho = ev.cwiseAbs().maxCoeff();
    return s;
}

inline Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& w) { return 0.5 * (w + w.transpose()); }

// sqrt(m/L) [(1 - alpha) + alpha m target_rho lambda_min / rho]
inline double beta_sigma(double lambda_min, double rho, double m, double L, double alpha, double target_rho)
{
    if (!(L > 0.0) || m < 0.0 || m > L) {
        throw DomainError("beta_sigma: need 0 <= m <= L, L > 0");
    }
    if (!(rho > 0.0)) {
        throw DomainError("beta_sigma: rho must be positive");
    }
    return std::sqrt(m / L) * ((1.0 - alpha) + alpha * m * target_rho * lambda_min / rho);
}

// From a kernel matrix: lambda_min of its symmetric part over its spectral
// radius. Pass the unsparsified kernel or the sparsified one to pick the variant.
inline double beta_sigma(const Eigen::MatrixXd& kernel, double m, double L, double alpha, double target_rho)
{
    const bool symmetric = kernel.isApprox(kernel.transpose(), 0.0);
    const SymmetricSpectrum s = symmetric_spectrum(symmetric_part(kernel));
    const double rho = symmetric ? s.rho : spectral_radius_dense(kernel);
    return beta_sigma(s.lambda_min, rho, m, L, alpha, target_rho);
}

struct BetaParams {
    double m = 1.0;
    double L = 1.0;
    double alpha = 0.8;
    double target_rho = 0.99;
};

struct BoundReport {
    int n = 0;
    double sigma = 0.0;
    double delta = 0.0;
    double lemma1_lower = 1.0;
    double lemma1_upper = 1.0;
    double observed_lambda_min = 1.0;
    double observed_rho = 1.0;
    double beta_sigma = 0.0;
    bool vacuous = false; // (N-1) e^{-delta/sigma} >= 1
    bool holds = true;
};

// Exact spectrum of the full unit-diagonal kernel against
// 1 -+ (N-1) exp(-delta/sigma).
inline BoundReport check_lemma1(const std::vector<PoincarePoint>& points, double sigma, const BetaParams& bp = {})
{
    const int n = static_cast<int>(points.size());
    if (n < 1) {
        throw DimensionError("check_lemma1: no points");
    }
    if (n > static_cast<int>(kDenseFallbackLimit)) {
        throw DimensionError("check_lemma1: N > 512 is outside the dense eigensolver range");
    }
    BoundReport r;
    r.n = n;
    r.sigma = sigma;
    if (n == 1) {
        r.delta = std::numeric_limits<double>::infinity();
        r.beta_sigma = beta_sigma(1.0, 1.0, bp.m, bp.L, bp.alpha, bp.target_rho);
        return r;
    }
    const Eigen::MatrixXd dist = pairwise_distances(points);
    const Eigen::MatrixXd kernel = kernel_from_distances(dist, sigma);
    r.delta = min_off_diagonal(dist);
    const double off = (n - 1) * std::exp(-r.delta / sigma);
    r.lemma1_lower = 1.0 - off;
    r.lemma1_upper = 1.0 + off;
    r.vacuous = off >= 1.0;
    const SymmetricSpectrum s = symmetric_spectrum(kernel);
    r.observed_lambda_min = s.lambda_min;
    r.observed_rho = s.rho;
    r.beta_sigma = beta_sigma(s.lambda_min, s.rho, bp.m, bp.L, bp.alpha, bp.target_rho);
    r.holds = r.observed_lambda_min >= r.lemma1_lower - kBoundSlack && r.observed_rho <= r.lemma1_upper + kBoundSlack;
    return r;
}

namespace detail {

inline Eigen::VectorXd activation_slopes(const EsnConfig& cfg, const Eigen::VectorXd& z)
{
    Eigen::VectorXd d(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        d[i] = activation_derivative(cfg.activation(i), z[i]);
    }
    return d;
}

inline Eigen::MatrixXd jacobian_with(const Eigen::MatrixXd& w, double alpha, const Eigen::VectorXd& slopes)
{
    const Eigen::Index n = w.rows();
    Eigen::MatrixXd j = alpha * (slopes.asDiagonal() * w);
    j.diagonal().array() += 1.0 - alpha;
    (void)n;
    return j;
}

} // namespace detail

// d x_{t+1} / d x_t = (1 - alpha) I + alpha diag(phi'(W x + U u)) W
inline Eigen::MatrixXd jacobian(const EsnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u)
{
    detail::check_step_dims(model, x, u);
    const Eigen::VectorXd z = model.preactivation(x, u);
    return detail::jacobian_with(model.reservoir().weights, model.config().leak_rate,
                                 detail::activation_slopes(model.config(), z));
}

enum class CheckStatus { Checked, PreconditionUnmet, ReportOnly };

inline std::string_view to_string(CheckStatus s) noexcept
{
    switch (s) {
    case CheckStatus::Checked:
        return "checked";
    case CheckStatus::PreconditionUnmet:
        return "lemma precondition lambda_min >= 0 unmet";
    case CheckStatus::ReportOnly:
        return "report only (non-symmetric W)";
    }
    return "checked";
}

struct Lemma2Options {
    bool symmetrize = true; // false: use the actual W and only report
};

struct Lemma2Report {
    CheckStatus status = CheckStatus::Checked;
    double m = 0.0;
    double L = 0.0;
    double lambda_min = 0.0;
    double rho = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    double min_singular = 0.0; // over states
    double max_singular = 0.0;
    double lower_margin = 0.0; // min over states of s_min(J) - lower_bound
    double upper_margin = 0.0; // min over states of upper_bound - ||J||
    int states = 0;
    bool holds = true;
};

// s_min(J) >= sqrt(m/L)[(1-alpha) + alpha m lambda_min(W)],
// ||J|| <= sqrt(L/m)[(1-alpha) + alpha L rho(W)], with m, L the extreme
// activation slopes over the supplied (state, input) samples.
inline Lemma2Report check_lemma2(const EsnModel& model, const Eigen::MatrixXd& states, const Eigen::MatrixXd& inputs,
                                 const Lemma2Options& opt = {})
{
    if (states.rows() != inputs.rows() || states.rows() == 0) {
        throw DimensionError("check_lemma2: need matching, nonempty state and input samples");
    }
    if (states.cols() != model.n() || inputs.cols() != model.input_dim()) {
        throw DimensionError("check_lemma2: sample dimensions do not match the model");
    }
    const double alpha = model.config().leak_rate;
    const Eigen::MatrixXd& w_raw = model.reservoir().weights;
    const Eigen::MatrixXd w = opt.symmetrize ? symmetric_part(w_raw) : w_raw;
    const SymmetricSpectrum spec = symmetric_spectrum(symmetric_part(w));

    std::vector<Eigen::VectorXd> slopes;
    double m = std::numeric_limits<double>::infinity();
    double L = 0.0;
    for (Eigen::Index t = 0; t < states.rows(); ++t) {
        const Eigen::VectorXd z = w * states.row(t).transpose() + model.input_weights() * inputs.row(t).transpose();
        slopes.push_back(detail::activation_slopes(model.config(), z));
        m = std::min(m, slopes.back().minCoeff());
        L = std::max(L, slopes.back().maxCoeff());
    }

    Lemma2Report r;
    r.states = static_cast<int>(states.rows());
    r.m = m;
    r.L = L;
    r.lambda_min = spec.lambda_min;
    r.rho = opt.symmetrize ? spec.rho : spectral_radius_dense(w);
    if (m > 0.0) {
        r.lower_bound = std::sqrt(m / L) * ((1.0 - alpha) + alpha * m * r.lambda_min);
        r.upper_bound = std::sqrt(L / m) * ((1.0 - alpha) + alpha * L * r.rho);
    } else {
        r.lower_bound = 0.0;
        r.upper_bound = std::numeric_limits<double>::infinity();
    }
    r.lower_margin = std::numeric_limits<double>::infinity();
    r.upper_margin = std::numeric_limits<double>::infinity();
    r.min_singular = std::numeric_limits<double>::infinity();
    for (const auto& d : slopes) {
        const Eigen::MatrixXd j = detail::jacobian_with(w, alpha, d);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
        const auto& sv = svd.singularValues();
        const double smin = sv.minCoeff();
        const double smax = sv.maxCoeff();
        r.min_singular = std::min(r.min_singular, smin);
        r.max_singular = std::max(r.max_singular, smax);
        r.lower_margin = std::min(r.lower_margin, smin - r.lower_bound);
        r.upper_margin = std::min(r.upper_margin, r.upper_bound - smax);
    }
    if (!opt.symmetrize) {
        r.status = CheckStatus::ReportOnly;
    } else if (r.lambda_min < 0.0) {
        r.status = CheckStatus::PreconditionUnmet;
    }
    r.holds = r.status != CheckStatus::Checked ||
              (r.lower_margin >= -kBoundSlack && r.upper_margin >= -kBoundSlack);
    return r;
}

struct DivergenceOptions {
    // Override the activation-slope range; estimated from both runs otherwise.
    std::optional<double> m;
    std::optional<double> L;
};

struct DivergenceResult {
    Eigen::VectorXd separation; // ||x_t - y_t|| for t = 0..T
    Eigen::VectorXd floor;      // alpha m ||dU|| beta^(tau-1) at t = t0 + tau; NaN before
    double beta = 0.0;
    double m = 0.0;
    double L = 0.0;
    double lambda_min = 0.0;
    double delta_u_norm = 0.0;
    bool floor_meaningful = false; // beta > 1, symmetric W, lambda_min >= 0
};

// Twin runs from x_0 = 0 whose inputs differ only at t0 by `perturbation`.
inline DivergenceResult divergence_experiment(const EsnModel& model, const Eigen::MatrixXd& inputs, Eigen::Index t0,
                                              const Eigen::VectorXd& perturbation, const DivergenceOptions& opt = {})
{
    const Eigen::Index steps = inputs.rows();
    if (inputs.cols() != model.input_dim() || perturbation.size() != model.input_dim()) {
        throw DimensionError("divergence_experiment: input dimension mismatch");
    }
    if (t0 < 0 || t0 >= steps) {
        throw DimensionError("divergence_experiment: t0 outside the input range");
    }
    const Eigen::MatrixXd& w = model.reservoir().weights;
    const double alpha = model.config().leak_rate;

    DivergenceResult r;
    r.separation.resize(steps + 1);
    r.floor = Eigen::VectorXd::Constant(steps + 1, std::numeric_limits<double>::quiet_NaN());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n());
    Eigen::VectorXd y = x;
    r.separation[0] = 0.0;
    double m = std::numeric_limits<double>::infinity();
    double L = 0.0;
    for (Eigen::Index t = 0; t < steps; ++t) {
        const Eigen::VectorXd u = inputs.row(t).transpose();
        const Eigen::VectorXd v = t == t0 ? Eigen::VectorXd(u + perturbation) : u;
        if (t >= t0) {
            for (const Eigen::VectorXd& zz : {model.preactivation(x, u), model.preactivation(y, v)}) {
                const Eigen::VectorXd d = detail::activation_slopes(model.config(), zz);
                m = std::min(m, d.minCoeff());
                L = std::max(L, d.maxCoeff());
            }
        }
        x = detail::step_unchecked(model, x, u);
        y = detail::step_unchecked(model, y, v);
        detail::guard_state(x, static_cast<std::size_t>(t));
        detail::guard_state(y, static_cast<std::size_t>(t));
        r.separation[t + 1] = (x - y).norm();
    }
    r.m = opt.m.value_or(m);
    r.L = opt.L.value_or(L);
    r.delta_u_norm = (model.input_weights() * perturbation).norm();

    const bool symmetric = w.isApprox(w.transpose(), 0.0);
    const SymmetricSpectrum spec = symmetric_spectrum(symmetric_part(w));
    r.lambda_min = spec.lambda_min;
    if (r.L > 0.0 && spec.rho > 0.0) {
        r.beta = beta_sigma(spec.lambda_min, spec.rho, std::min(r.m, r.L), r.L, alpha, spec.rho);
    }
    r.floor_meaningful = symmetric && spec.lambda_min >= 0.0 && r.beta > 1.0;
    for (Eigen::Index tau = 1; t0 + tau <= steps; ++tau) {
        r.floor[t0 + tau] = alpha * r.m * r.delta_u_norm * std::pow(r.beta, static_cast<double>(tau - 1));
    }
    return r;
}

// Symmetric unit-diagonal kernel scaled to spectral radius `radius`, with
// linear nodes (m = L = 1). With radius > 1 this gives
// beta = (1 - alpha) + alpha radius lambda_min / rho, which exceeds 1 once
// the kernel is well conditioned (small sigma). Used to exercise the
// divergence floor, which cannot fire for 1-Lipschitz nodes at radius < 1.
inline EsnModel build_symmetric_kernel_model(const std::vector<PoincarePoint>& points, double sigma, double radius,
                                             double alpha, int input_dim, std::uint64_t seed)
{
    const Eigen::MatrixXd kernel = kernel_matrix(points, sigma);
    const SymmetricSpectrum s = symmetric_spectrum(kernel);
    ReservoirMatrix res;
    res.weights = (radius / s.rho) * kernel;
    res.spectral_radius = radius;
    res.target_rho = radius;
    res.sigma = sigma;
    res.kappa = static_cast<int>(points.size());
    res.min_pairwise_distance = min_off_diagonal(pairwise_distances(points));
    res.construction = Construction::Hyper;
    EsnConfig cfg;
    cfg.leak_rate = alpha;
    cfg.activations = {Activation::Linear};
    cfg.seed = seed;
    return EsnModel::create(std::move(res), input_dim, cfg);
}

} // namespace hyper_rc
