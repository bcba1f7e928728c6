#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "hyper_rc/error.hpp"

namespace hyper_rc {

struct AxisBounds {
    double lo = 0.0;
    double hi = 1.0;
};

struct MetricConfig {
    double vpt_threshold = 0.4;
    std::array<int, 3> adev_grid{50, 50, 50};
    std::optional<std::vector<AxisBounds>> adev_bounds; // nullopt: truth bounding box + 5%
    int welch_segment = 256;
    double welch_overlap = 0.5;

    void validate() const
    {
        if (!(vpt_threshold > 0.0)) {
            throw ConfigError("MetricConfig: vpt_threshold must be positive");
        }
        for (int g : adev_grid) {
            if (g < 1) throw ConfigError("MetricConfig: grid dims must be >= 1");
        }
        if (welch_segment < 8) {
            throw ConfigError("MetricConfig: welch_segment must be >= 8");
        }
        if (!(welch_overlap >= 0.0 && welch_overlap < 1.0)) {
            throw ConfigError("MetricConfig: welch_overlap must lie in [0,1)");
        }
    }
};

namespace detail {

inline void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(who) + ": truth and prediction shapes differ");
    }
    if (a.rows() == 0) {
        throw DimensionError(std::string(who) + ": empty window");
    }
}

// Mean over rows of ||u_t - mean(u)||^2.
inline double mean_squared_spread(const Eigen::MatrixXd& truth)
{
    const Eigen::RowVectorXd mean = truth.colwise().mean();
    return (truth.rowwise() - mean).rowwise().squaredNorm().mean();
}

} // namespace detail

inline double nrmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred)
{
    detail::check_same_shape(truth, pred, "nrmse");
    const Eigen::RowVectorXd mean = truth.colwise().mean();
    const double denom = (truth.rowwise() - mean).squaredNorm();
    if (!(denom > 0.0)) {
        throw DomainError("nrmse: truth has zero variance");
    }
    return std::sqrt((truth - pred).squaredNorm() / denom);
}

// delta(t) = ||u_t - u_hat_t||^2 / <||u_t - mean||^2>, averaged over the window.
inline Eigen::VectorXd normalized_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred)
{
    detail::check_same_shape(truth, pred, "vpt");
    const double spread = detail::mean_squared_spread(truth);
    if (!(spread > 0.0)) {
        throw DomainError("vpt: truth has zero variance");
    }
    return (truth - pred).rowwise().squaredNorm() / spread;
}

struct VptResult {
    Eigen::Index steps = 0;
    std::optional<double> normalized; // steps * dt * lambda_max
};

// Number of leading steps with delta <= theta; the full horizon if delta never
// exceeds theta.
inline Eigen::Index vpt_from_delta(const Eigen::VectorXd& delta, double theta)
{
    for (Eigen::Index t = 0; t < delta.size(); ++t) {
        if (delta[t] > theta) {
            return t;
        }
    }
    return delta.size();
}

inline VptResult vpt(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, double theta,
                     std::optional<double> lyapunov_max, double dt)
{
    if (!(theta > 0.0)) {
        throw ConfigError("vpt: theta must be positive");
    }
    VptResult r;
    r.steps = vpt_from_delta(normalized_error(truth, pred), theta);
    if (lyapunov_max) {
        r.normalized = static_cast<double>(r.steps) * dt * *lyapunov_max;
    }
    return r;
}

// Per-axis bounds from the truth bounding box, each side widened by 5% of
// the extent.
inline std::vector<AxisBounds> auto_bounds(const Eigen::MatrixXd& truth, int axes)
{
    std::vector<AxisBounds> b;
    for (int k = 0; k < axes; ++k) {
        const double lo = truth.col(k).minCoeff();
        const double hi = truth.col(k).maxCoeff();
        const double pad = 0.05 * (hi - lo);
        b.push_back({lo - pad, hi + pad});
    }
    return b;
}

namespace detail {

inline int cell_index(double v, const AxisBounds& b, int cells)
{
    const double extent = b.hi - b.lo;
    if (!(extent > 0.0) || !std::isfinite(v)) {
        return std::isfinite(v) ? 0 : (v > 0 ? cells - 1 : 0);
    }
    const double pos = std::floor((v - b.lo) / extent * cells);
    return static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(cells - 1)));
}

} // namespace detail

// Linear indices of grid cubes visited by a trajectory. Only the first
// min(m, 3) columns are gridded; out-of-range points go to the boundary cube.
inline std::vector<std::int64_t> occupied_cells(const Eigen::MatrixXd& traj, const std::array<int, 3>& grid,
                                                const std::vector<AxisBounds>& bounds)
{
    const int axes = static_cast<int>(std::min<Eigen::Index>(traj.cols(), 3));
    std::vector<std::int64_t> cells;
    cells.reserve(static_cast<std::size_t>(traj.rows()));
    for (Eigen::Index t = 0; t < traj.rows(); ++t) {
        std::int64_t lin = 0;
        for (int k = 0; k < 3; ++k) {
            const int c = k < axes ? detail::cell_index(traj(t, k), bounds[static_cast<std::size_t>(k)], grid[static_cast<std::size_t>(k)]) : 0;
            lin = lin * grid[static_cast<std::size_t>(k)] + c;
        }
        cells.push_back(lin);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

// Number of cubes visited by exactly one of the two trajectories.
inline std::int64_t adev(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, const std::array<int, 3>& grid,
                         const std::optional<std::vector<AxisBounds>>& bounds = std::nullopt)
{
    if (truth.cols() != pred.cols() || truth.rows() == 0 || pred.rows() == 0) {
        throw DimensionError("adev: truth and prediction must be nonempty with equal dimension");
    }
    const int axes = static_cast<int>(std::min<Eigen::Index>(truth.cols(), 3));
    const std::vector<AxisBounds> b = bounds ? *bounds : auto_bounds(truth, axes);
    if (static_cast<int>(b.size()) < axes) {
        throw ConfigError("adev: need bounds for each gridded axis");
    }
    const auto a = occupied_cells(truth, grid, b);
    const auto p = occupied_cells(pred, grid, b);
    std::vector<std::int64_t> diff;
    std::set_symmetric_difference(a.begin(), a.end(), p.begin(), p.end(), std::back_inserter(diff));
    return static_cast<std::int64_t>(diff.size());
}

struct Spectrum {
    Eigen::VectorXd frequency;
    Eigen::VectorXd power;
};

// Periodic Hamming window.
inline Eigen::VectorXd hamming(int n)
{
    Eigen::VectorXd w(n);
    for (int k = 0; k < n; ++k) {
        w[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / n);
    }
    return w;
}

// One-sided Welch PSD (density scaling): Hamming-windowed segments, averaged
// |FFT|^2, normalized by fs * sum(w^2). No detrending.
inline Spectrum welch_psd(const Eigen::VectorXd& series, int segment, double overlap, double dt)
{
    if (segment < 8) throw ConfigError("welch_psd: segment must be >= 8");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("welch_psd: overlap must lie in [0,1)");
    if (!(dt > 0.0)) throw ConfigError("welch_psd: dt must be positive");
    if (series.size() < segment) {
        throw DimensionError("welch_psd: series shorter than one segment");
    }
    const double fs = 1.0 / dt;
    const Eigen::VectorXd w = hamming(segment);
    const double energy = w.squaredNorm();
    const auto hop = std::max<Eigen::Index>(1, segment - static_cast<Eigen::Index>(std::llround(overlap * segment)));
    const int bins = segment / 2 + 1;

    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<std::size_t>(segment));
    std::vector<std::complex<double>> spec;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(bins);
    int count = 0;
    for (Eigen::Index start = 0; start + segment <= series.size(); start += hop) {
        for (int k = 0; k < segment; ++k) {
            buf[static_cast<std::size_t>(k)] = series[start + k] * w[k];
        }
        fft.fwd(spec, buf);
        for (int k = 0; k < bins; ++k) {
            acc[k] += std::norm(spec[static_cast<std::size_t>(k)]);
        }
        ++count;
    }
    Spectrum out;
    out.frequency.resize(bins);
    out.power = acc / (count * fs * energy);
    for (int k = 0; k < bins; ++k) {
        out.frequency[k] = k * fs / segment;
        const bool nyquist = (segment % 2 == 0) && k == bins - 1;
        if (k != 0 && !nyquist) {
            out.power[k] *= 2.0;
        }
    }
    return out;
}

inline Spectrum welch_psd(const Eigen::VectorXd& series, const MetricConfig& cfg, double dt)
{
    return welch_psd(series, cfg.welch_segment, cfg.welch_overlap, dt);
}

struct HorizonScore {
    double nrmse = 0.0;
    Eigen::Index vpt_steps = 0;
    std::optional<double> vpt_normalized;
    std::int64_t adev = 0;
};

// Scores for one seed, keyed by horizon.
struct RunReport {
    std::uint64_t seed = 0;
    std::map<int, HorizonScore> by_horizon;
    std::string config_hash;
    bool failed = false;
    std::string error;
};

// Scores the first `horizon` rows of a forecast.
inline HorizonScore score_horizon(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, int horizon,
                                  const MetricConfig& cfg, std::optional<double> lyapunov_max, double dt)
{
    if (horizon < 1 || truth.rows() < horizon || pred.rows() < horizon) {
        throw DimensionError("score_horizon: horizon exceeds available rows");
    }
    const Eigen::MatrixXd t = truth.topRows(horizon);
    const Eigen::MatrixXd p = pred.topRows(horizon);
    HorizonScore s;
    s.nrmse = nrmse(t, p);
    const VptResult v = vpt(t, p, cfg.vpt_threshold, lyapunov_max, dt);
    s.vpt_steps = v.steps;
    s.vpt_normalized = v.normalized;
    s.adev = adev(t, p, cfg.adev_grid, cfg.adev_bounds);
    return s;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    int count = 0;
};

// Population mean / std.
inline MeanStd mean_std(const std::vector<double>& v)
{
    MeanStd r;
    r.count = static_cast<int>(v.size());
    if (v.empty()) return r;
    double s = 0.0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(q / static_cast<double>(v.size()));
    return r;
}

struct SummaryRow {
    int horizon = 0;
    MeanStd nrmse;
    MeanStd vpt_steps;
    std::optional<MeanStd> vpt_normalized;
    MeanStd adev;
    int runs = 0;
};

// One row per horizon over the successful reports.
inline std::vector<SummaryRow> aggregate(const std::vector<RunReport>& reports)
{
    std::map<int, std::vector<const HorizonScore*>> by_h;
    for (const auto& r : reports) {
        if (r.failed) continue;
        for (const auto& [h, s] : r.by_horizon) {
            by_h[h].push_back(&s);
        }
    }
    std::vector<SummaryRow> out;
    for (const auto& [h, scores] : by_h) {
        std::vector<double> nr, vs, vn, ad;
        for (const auto* s : scores) {
            nr.push_back(s->nrmse);
            vs.push_back(static_cast<double>(s->vpt_steps));
            ad.push_back(static_cast<double>(s->adev));
            if (s->vpt_normalized) vn.push_back(*s->vpt_normalized);
        }
        SummaryRow row;
        row.horizon = h;
        row.nrmse = mean_std(nr);
        row.vpt_steps = mean_std(vs);
        row.adev = mean_std(ad);
        if (!vn.empty()) row.vpt_normalized = mean_std(vn);
        row.runs = static_cast<int>(scores.size());
        out.push_back(row);
    }
    return out;
}

} // namespace hyper_rc
