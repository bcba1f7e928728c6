#pragma once

// Points in the Poincaré ball (curvature -1), the hyperbolic distance, and the
// two node-placement schemes used to seed a reservoir.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyper_rc/error.hpp"
#include "hyper_rc/rng.hpp"

namespace hyper_rc {

class PoincarePoint {
public:
    PoincarePoint() = default;

    explicit PoincarePoint(Eigen::VectorXd coords) : coords_(std::move(coords))
    {
        if (coords_.size() == 0) {
            throw DimensionError("PoincarePoint: empty coordinate vector");
        }
        if (!coords_.allFinite()) {
            throw DomainError("PoincarePoint: non-finite coordinate");
        }
        sq_norm_ = coords_.squaredNorm();
        if (!(sq_norm_ < 1.0)) {
            throw DomainError("PoincarePoint: norm must be < 1, got " + std::to_string(std::sqrt(sq_norm_)));
        }
    }

    static PoincarePoint origin(int dim) { return PoincarePoint(Eigen::VectorXd::Zero(dim)); }

    const Eigen::VectorXd& coords() const noexcept { return coords_; }
    int dim() const noexcept { return static_cast<int>(coords_.size()); }
    double norm() const noexcept { return std::sqrt(sq_norm_); }
    double squared_norm() const noexcept { return sq_norm_; }

    friend bool operator==(const PoincarePoint& a, const PoincarePoint& b) { return a.coords_ == b.coords_; }

private:
    Eigen::VectorXd coords_;
    double sq_norm_ = 0.0;
};

enum class SamplingScheme { EuclideanIsotropic, HyperbolicUniform };

struct SamplingConfig {
    int dim = 2;
    SamplingScheme scheme = SamplingScheme::HyperbolicUniform;
    double rho_max = 6.0;    // hyperbolic radius cap (hyperbolic-uniform)
    double radius_cap = 0.9; // Euclidean radius cap R (Euclidean-isotropic)
    std::uint64_t seed = 0;

    void validate() const
    {
        if (dim < 2) {
            throw ConfigError("SamplingConfig: dim must be >= 2");
        }
        if (!(rho_max > 0.0) || !std::isfinite(rho_max)) {
            throw ConfigError("SamplingConfig: rho_max must be positive");
        }
        if (!(radius_cap > 0.0 && radius_cap < 1.0)) {
            throw ConfigError("SamplingConfig: radius_cap must lie in (0,1)");
        }
        // tanh(rho_max/2) rounds to 1 for rho_max >~ 38.
        if (!(std::tanh(rho_max / 2.0) < 1.0)) {
            throw ConfigError("SamplingConfig: rho_max too large, points would land on the boundary");
        }
    }
};

inline double hyperbolic_distance(const PoincarePoint& a, const PoincarePoint& b)
{
    if (a.dim() != b.dim()) {
        throw DimensionError("hyperbolic_distance: dimension mismatch");
    }
    const double diff = (a.coords() - b.coords()).squaredNorm();
    const double denom = (1.0 - a.squared_norm()) * (1.0 - b.squared_norm());
    // Clamp absorbs rounding below 1.
    const double arg = std::max(1.0, 1.0 + 2.0 * diff / denom);
    return std::acosh(arg);
}

// Inverse of the normalized radial CDF (cosh(rho) - 1) / (cosh(rho_max) - 1).
inline double sample_radius_hyperbolic(double u, double rho_max)
{
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError("sample_radius_hyperbolic: u must lie in [0,1]");
    }
    if (!(rho_max > 0.0)) {
        throw DomainError("sample_radius_hyperbolic: rho_max must be positive");
    }
    return std::acosh(std::max(1.0, u * (std::cosh(rho_max) - 1.0) + 1.0));
}

namespace detail {

inline Eigen::VectorXd draw_point(const SamplingConfig& cfg, Rng& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double u = unif(rng);
    double r = 0.0;
    if (cfg.scheme == SamplingScheme::EuclideanIsotropic) {
        r = std::pow(u, 1.0 / cfg.dim) * cfg.radius_cap;
    } else {
        r = std::tanh(sample_radius_hyperbolic(u, cfg.rho_max) / 2.0);
    }

    Eigen::VectorXd dir(cfg.dim);
    double n = 0.0;
    do {
        for (int k = 0; k < cfg.dim; ++k) {
            dir[k] = gauss(rng);
        }
        n = dir.norm();
    } while (n == 0.0);
    return (r / n) * dir;
}

// Indices (later member of each pair) that coincide with an earlier point to
// within `tol` Euclidean.
inline std::vector<std::size_t> find_duplicates(const std::vector<Eigen::VectorXd>& pts, double tol)
{
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pts[a][0] < pts[b][0] || (pts[a][0] == pts[b][0] && a < b);
    });
    std::vector<std::size_t> dup;
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (pts[order[j]][0] - pts[order[i]][0] > tol) {
                break;
            }
            if ((pts[order[j]] - pts[order[i]]).norm() <= tol) {
                dup.push_back(std::max(order[i], order[j]));
            }
        }
    }
    std::sort(dup.begin(), dup.end());
    dup.erase(std::unique(dup.begin(), dup.end()), dup.end());
    return dup;
}

} // namespace detail

// Draw n nodes. Deterministic in (cfg, n). Coincident points (within 1e-12)
// are redrawn so the kernel never sees a zero off-diagonal distance.
inline std::vector<PoincarePoint> sample_nodes(const SamplingConfig& cfg, int n)
{
    cfg.validate();
    if (n < 1) {
        throw ConfigError("sample_nodes: n must be >= 1");
    }
    Rng rng = make_rng(cfg.seed, "geometry.sample_nodes");
    std::vector<Eigen::VectorXd> raw;
    raw.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        raw.push_back(detail::draw_point(cfg, rng));
    }
    constexpr double kDuplicateTol = 1e-12;
    for (auto dup = detail::find_duplicates(raw, kDuplicateTol); !dup.empty();
         dup = detail::find_duplicates(raw, kDuplicateTol)) {
        for (std::size_t idx : dup) {
            raw[idx] = detail::draw_point(cfg, rng);
        }
    }
    std::vector<PoincarePoint> out;
    out.reserve(raw.size());
    for (auto& p : raw) {
        out.emplace_back(std::move(p));
    }
    return out;
}

} // namespace hyper_rc
