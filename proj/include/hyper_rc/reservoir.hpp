#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "hyper_rc/error.hpp"
#include "hyper_rc/geometry.hpp"
#include "hyper_rc/rng.hpp"

namespace hyper_rc {

struct KernelConfig {
    double sigma = 0.1;
    int kappa = 40;
    double target_rho = 0.99;
    bool zero_diagonal = false;

    void validate(int n) const
    {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw ConfigError("KernelConfig: sigma must be positive");
        }
        if (!(target_rho > 0.0 && target_rho < 1.0)) {
            throw ConfigError("KernelConfig: target_rho must lie in (0,1)");
        }
        const int available = zero_diagonal ? n - 1 : n;
        if (kappa < 1 || kappa > available) {
            throw ConfigError("KernelConfig: kappa must lie in [1, " + std::to_string(available) + "]");
        }
    }
};

enum class Construction { Hyper, DenseRandom, SimpleCycle };

// Recurrent weights plus the metadata recorded at build time.
// Row-wise top-kappa generally leaves a Hyper matrix non-symmetric.
struct ReservoirMatrix {
    Eigen::MatrixXd weights;
    double spectral_radius = 0.0;
    double min_pairwise_distance = 0.0; // delta; Hyper only
    Construction construction = Construction::DenseRandom;
    int kappa = 0;
    double sigma = 0.0;
    double target_rho = 0.0;

    int n() const noexcept { return static_cast<int>(weights.rows()); }
};

inline Eigen::MatrixXd pairwise_distances(const std::vector<PoincarePoint>& points)
{
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = hyperbolic_distance(points[i], points[j]);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

inline double min_off_diagonal(const Eigen::MatrixXd& d)
{
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (i != j) {
                best = std::min(best, d(i, j));
            }
        }
    }
    return best;
}

// Entry (i,j) = exp(-d_H(p_i, p_j) / sigma). Unit diagonal.
inline Eigen::MatrixXd kernel_from_distances(const Eigen::MatrixXd& dist, double sigma)
{
    if (!(sigma > 0.0)) {
        throw DomainError("kernel_matrix: sigma must be positive");
    }
    for (Eigen::Index i = 0; i < dist.rows(); ++i) {
        for (Eigen::Index j = 0; j < dist.cols(); ++j) {
            if (i != j && dist(i, j) == 0.0) {
                throw DomainError("kernel_matrix: coincident points " + std::to_string(i) + " and " +
                                  std::to_string(j));
            }
        }
    }
    return (-dist.array() / sigma).exp().matrix();
}

inline Eigen::MatrixXd kernel_matrix(const std::vector<PoincarePoint>& points, double sigma)
{
    if (points.size() < 2) {
        throw DimensionError("kernel_matrix: need at least 2 points");
    }
    return kernel_from_distances(pairwise_distances(points), sigma);
}

// Keep the kappa largest entries of each row. Ties go to the lower column index.
inline Eigen::MatrixXd sparsify_topk(const Eigen::MatrixXd& w, int kappa, bool zero_diagonal)
{
    const Eigen::Index n = w.rows();
    const Eigen::Index cols = w.cols();
    const Eigen::Index available = zero_diagonal ? cols - 1 : cols;
    if (kappa < 1 || kappa > available) {
        throw ConfigError("sparsify_topk: kappa=" + std::to_string(kappa) + " but only " + std::to_string(available) +
                          " entries per row");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, cols);
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(cols));
    for (Eigen::Index i = 0; i < n; ++i) {
        idx.clear();
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(zero_diagonal && i == j)) {
                idx.push_back(j);
            }
        }
        std::partial_sort(idx.begin(), idx.begin() + kappa, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            return w(i, a) > w(i, b) || (w(i, a) == w(i, b) && a < b);
        });
        for (int k = 0; k < kappa; ++k) {
            out(i, idx[static_cast<std::size_t>(k)]) = w(i, idx[static_cast<std::size_t>(k)]);
        }
    }
    return out;
}

// Dominant eigenvalue modulus by power iteration from a seeded positive start
// vector. Converged once successive |Rayleigh quotient| estimates agree to
// `tol` relatively and the eigen-residual is small. Throws ConvergenceError
// carrying the last estimate otherwise.
inline double spectral_radius(const Eigen::MatrixXd& w, double tol = 1e-10, int max_iter = 10000)
{
    if (w.rows() != w.cols()) {
        throw DimensionError("spectral_radius: matrix must be square");
    }
    if (w.size() == 0 || w.isZero(0.0)) {
        throw DomainError("spectral_radius: zero matrix");
    }
    Rng rng(0x5eed5eedULL);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Eigen::VectorXd v(w.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = unif(rng);
    }
    v.normalize();

    // Iterate on a sparse copy when most entries are zero.
    const auto nnz = (w.array() != 0.0).count();
    const bool use_sparse = nnz * 4 < w.size();
    Eigen::SparseMatrix<double, Eigen::RowMajor> ws;
    if (use_sparse) {
        ws = w.sparseView(0.0, 0.0);
    }

    double prev = std::numeric_limits<double>::quiet_NaN();
    double est = 0.0;
    Eigen::VectorXd wv(w.rows());
    for (int it = 0; it < max_iter; ++it) {
        if (use_sparse) {
            wv.noalias() = ws * v;
        } else {
            wv.noalias() = w * v;
        }
        const double rq = v.dot(wv);
        est = std::abs(rq);
        const double nrm = wv.norm();
        if (nrm == 0.0) {
            throw ConvergenceError("spectral_radius: iterate collapsed to zero", 0.0);
        }
        if (std::isfinite(prev) && std::abs(est - prev) <= tol * est) {
            const double residual = (wv - rq * v).norm();
            if (residual <= 1e-8 * est) {
                return est;
            }
        }
        prev = est;
        v = wv / nrm;
    }
    throw ConvergenceError("spectral_radius: power iteration did not converge", est);
}

inline double spectral_radius_dense(const Eigen::MatrixXd& w)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(w, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("spectral_radius_dense: eigensolver failed", 0.0);
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline constexpr Eigen::Index kDenseFallbackLimit = 512;

// Power iteration with a dense eigensolve fallback for N <= 512.
inline double estimate_spectral_radius(const Eigen::MatrixXd& w)
{
    try {
        return spectral_radius(w);
    } catch (const ConvergenceError&) {
        if (w.rows() > kDenseFallbackLimit) {
            throw;
        }
        return spectral_radius_dense(w);
    }
}

namespace detail {

inline ReservoirMatrix normalize_to(Eigen::MatrixXd w, double target_rho, Construction kind)
{
    const double rho = estimate_spectral_radius(w);
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw DomainError("reservoir: degenerate spectral radius");
    }
    ReservoirMatrix out;
    out.weights = (target_rho / rho) * w;
    out.spectral_radius = target_rho;
    out.construction = kind;
    out.target_rho = target_rho;
    return out;
}

} // namespace detail

// Kernel -> row-wise top-kappa -> rescale to target spectral radius.
inline ReservoirMatrix build_hyper(const std::vector<PoincarePoint>& points, const KernelConfig& kcfg)
{
    const int n = static_cast<int>(points.size());
    if (n < 2) {
        throw DimensionError("build_hyper: need at least 2 points");
    }
    kcfg.validate(n);
    const Eigen::MatrixXd dist = pairwise_distances(points);
    const Eigen::MatrixXd kernel = kernel_from_distances(dist, kcfg.sigma);
    ReservoirMatrix out =
        detail::normalize_to(sparsify_topk(kernel, kcfg.kappa, kcfg.zero_diagonal), kcfg.target_rho, Construction::Hyper);
    out.min_pairwise_distance = min_off_diagonal(dist);
    out.kappa = kcfg.kappa;
    out.sigma = kcfg.sigma;
    return out;
}

// Classical ESN reservoir: uniform(-1,1) entries kept with probability
// `density`, rescaled to target_rho.
inline ReservoirMatrix build_dense_random(int n, double target_rho, double density, std::uint64_t seed)
{
    if (n < 1) {
        throw ConfigError("build_dense_random: n must be >= 1");
    }
    if (!(density > 0.0 && density <= 1.0)) {
        throw ConfigError("build_dense_random: density must lie in (0,1]");
    }
    if (!(target_rho > 0.0)) {
        throw ConfigError("build_dense_random: target_rho must be positive");
    }
    Rng rng = make_rng(seed, "reservoir.dense_random");
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::uniform_real_distribution<double> keep(0.0, 1.0);
    Eigen::MatrixXd w(n, n);
    for (int attempt = 0;; ++attempt) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double p = keep(rng);
                const double v = value(rng);
                w(i, j) = p < density ? v : 0.0;
            }
        }
        // A nilpotent draw (e.g. strictly triangular) has zero spectral radius too.
        if (!w.isZero(0.0)) {
            try {
                ReservoirMatrix out = detail::normalize_to(w, target_rho, Construction::DenseRandom);
                out.kappa = static_cast<int>((w.array() != 0.0).rowwise().count().maxCoeff());
                return out;
            } catch (const DomainError&) {
            } catch (const ConvergenceError&) {
            }
        }
        if (attempt > 1000) {
            throw DomainError("build_dense_random: could not draw a matrix with nonzero spectral radius");
        }
    }
}

// Single directed ring: x_{i+1} <- ring_weight * x_i.
inline ReservoirMatrix build_simple_cycle(int n, double ring_weight)
{
    if (n < 2) {
        throw ConfigError("build_simple_cycle: n must be >= 2");
    }
    if (ring_weight == 0.0 || !std::isfinite(ring_weight)) {
        throw ConfigError("build_simple_cycle: ring_weight must be finite and nonzero");
    }
    ReservoirMatrix out;
    out.weights = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        out.weights((i + 1) % n, i) = ring_weight;
    }
    out.spectral_radius = std::abs(ring_weight);
    out.target_rho = std::abs(ring_weight);
    out.construction = Construction::SimpleCycle;
    out.kappa = 1;
    return out;
}

} // namespace hyper_rc
