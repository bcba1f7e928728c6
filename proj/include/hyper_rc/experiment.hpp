#pragma once

// Experiment orchestration: data preparation, per-seed
// build / train / forecast / score, ablation sweeps and the bound-check suite.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "hyper_rc/config.hpp"
#include "hyper_rc/datagen.hpp"
#include "hyper_rc/error.hpp"
#include "hyper_rc/esn.hpp"
#include "hyper_rc/geometry.hpp"
#include "hyper_rc/log.hpp"
#include "hyper_rc/metrics.hpp"
#include "hyper_rc/reservoir.hpp"
#include "hyper_rc/rng.hpp"
#include "hyper_rc/theory.hpp"

namespace hyper_rc {

struct PreparedData {
    Trajectory raw;   // as generated or loaded
    Trajectory train; // after washout, normalized when configured
    Trajectory test;
    std::optional<MinMaxScaler> scaler;
};

inline Trajectory load_source(const ExperimentConfig& cfg)
{
    if (cfg.source.kind) {
        Trajectory tr = generate(cfg.source.spec, cfg.data.dt, cfg.data.samples - 1);
        if (cfg.source.lyapunov_max) tr.lyapunov_max = cfg.source.lyapunov_max;
        return tr;
    }
    Trajectory tr = load_csv(cfg.source.csv_path, cfg.data.dt);
    if (cfg.source.csv_column >= 0) {
        if (cfg.source.csv_column >= tr.dim()) {
            throw ConfigError("system.csv_column out of range for '" + cfg.source.csv_path + "'");
        }
        const Eigen::VectorXd col = tr.data.col(cfg.source.csv_column);
        std::string name = tr.name;
        tr = delay_embed(col, cfg.source.embed_dim, cfg.source.embed_lag, cfg.data.dt);
        tr.name = name;
    }
    tr.lyapunov_max = cfg.source.lyapunov_max;
    return tr;
}

// Washout, split, then min-max scaling fitted on the training rows only.
inline PreparedData prepare_data(const ExperimentConfig& cfg)
{
    PreparedData d;
    d.raw = load_source(cfg);
    TrainTest tt = split(d.raw, cfg.data.washout, cfg.data.train_frac);
    d.train = std::move(tt.train);
    d.test = std::move(tt.test);
    if (cfg.data.normalize) {
        MinMaxScaler sc = MinMaxScaler::fit(d.train.data);
        d.train.data = sc.transform(d.train.data);
        d.test.data = sc.transform(d.test.data);
        d.scaler = sc;
    }
    return d;
}

// Per-seed sub-streams, independent of which stages run.
inline std::uint64_t node_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "run.nodes"); }
inline std::uint64_t input_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "run.input"); }
inline std::uint64_t reservoir_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "run.reservoir"); }

inline ReservoirMatrix build_reservoir(const ExperimentConfig& cfg, std::uint64_t run_seed)
{
    const auto& rc = cfg.reservoir;
    switch (rc.type) {
    case Construction::Hyper: {
        SamplingConfig sc = rc.sampling;
        sc.seed = node_seed(run_seed);
        return build_hyper(sample_nodes(sc, rc.n), rc.kernel);
    }
    case Construction::DenseRandom:
        return build_dense_random(rc.n, rc.kernel.target_rho, rc.density, reservoir_seed(run_seed));
    case Construction::SimpleCycle:
        return build_simple_cycle(rc.n, rc.ring_weight != 0.0 ? rc.ring_weight : rc.kernel.target_rho);
    }
    throw ConfigError("unknown reservoir type");
}

inline EsnModel build_model(const ExperimentConfig& cfg, std::uint64_t run_seed, int input_dim)
{
    EsnConfig ec = cfg.esn;
    ec.seed = input_seed(run_seed);
    return EsnModel::create(build_reservoir(cfg, run_seed), input_dim, ec);
}

// Forecast of the first `horizon` test rows. Row k predicts test row k.
inline Eigen::MatrixXd forecast_test(const EsnModel& model, const PreparedData& d, ForecastMode mode, int horizon)
{
    if (horizon > d.test.rows()) {
        throw ConfigError("horizon " + std::to_string(horizon) + " exceeds test length " +
                          std::to_string(d.test.rows()));
    }
    if (mode == ForecastMode::Autoregressive) {
        return forecast_autoregressive(model, d.train, horizon).data;
    }
    Trajectory full = d.train;
    full.data.conservativeResize(d.train.rows() + horizon, Eigen::NoChange);
    full.data.bottomRows(horizon) = d.test.data.topRows(horizon);
    const Trajectory pred = forecast_open_loop(model, full);
    const Eigen::Index first = d.train.rows() - model.config().washout - 1;
    return pred.data.middleRows(first, horizon);
}

struct SeedOutcome {
    RunReport report;
    Eigen::MatrixXd forecast; // max-horizon forecast; empty on failure
};

inline SeedOutcome run_seed(const ExperimentConfig& cfg, const PreparedData& d, std::uint64_t seed,
                            const std::string& hash)
{
    SeedOutcome out;
    out.report.seed = seed;
    out.report.config_hash = hash;
    try {
        EsnModel model = build_model(cfg, seed, static_cast<int>(d.train.dim()));
        train(model, d.train);
        for (const auto& w : model.warnings()) log::warn("seed " + std::to_string(seed) + ": " + w);
        out.forecast = forecast_test(model, d, cfg.run.mode, cfg.max_horizon());
        const auto lmax = cfg.scoring_lyapunov();
        for (int h : cfg.run.horizons) {
            out.report.by_horizon[h] = score_horizon(d.test.data, out.forecast, h, cfg.metrics, lmax, d.test.dt);
        }
        log::info("seed " + std::to_string(seed) + " done");
    } catch (const std::exception& e) {
        out.report.failed = true;
        out.report.by_horizon.clear();
        out.report.error = e.what();
        out.forecast.resize(0, 0);
        log::error("seed " + std::to_string(seed) + " failed: " + e.what());
    }
    return out;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results are
// written by index, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct ExperimentResult {
    std::string config_hash;
    std::vector<RunReport> reports;
    std::vector<SummaryRow> summary;
    std::vector<Eigen::MatrixXd> forecasts; // parallel to reports
    PreparedData data;

    bool any_failed() const
    {
        return std::any_of(reports.begin(), reports.end(), [](const RunReport& r) { return r.failed; });
    }
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::optional<int> jobs = std::nullopt)
{
    cfg.validate();
    ExperimentResult res;
    res.config_hash = config_hash(cfg);
    res.data = prepare_data(cfg);
    if (cfg.max_horizon() > res.data.test.rows()) {
        throw ConfigError("largest horizon " + std::to_string(cfg.max_horizon()) + " exceeds test length " +
                          std::to_string(res.data.test.rows()));
    }
    const auto& seeds = cfg.run.seeds;
    std::vector<SeedOutcome> outcomes(seeds.size());
    parallel_for(seeds.size(), jobs.value_or(cfg.run.jobs),
                 [&](std::size_t i) { outcomes[i] = run_seed(cfg, res.data, seeds[i], res.config_hash); });
    for (auto& o : outcomes) {
        res.reports.push_back(std::move(o.report));
        res.forecasts.push_back(std::move(o.forecast));
    }
    res.summary = aggregate(res.reports);
    return res;
}

enum class AblationAxis { Sigma, Kappa, Sampling, Dimension };

inline AblationAxis parse_ablation_axis(std::string_view s)
{
    if (s == "sigma") return AblationAxis::Sigma;
    if (s == "kappa") return AblationAxis::Kappa;
    if (s == "sampling") return AblationAxis::Sampling;
    if (s == "dimension" || s == "dim") return AblationAxis::Dimension;
    throw ConfigError("unknown sweep axis '" + std::string(s) + "' (sigma, kappa, sampling, dimension)");
}

inline std::string_view to_string(AblationAxis a) noexcept
{
    switch (a) {
    case AblationAxis::Sigma:
        return "sigma";
    case AblationAxis::Kappa:
        return "kappa";
    case AblationAxis::Sampling:
        return "sampling";
    case AblationAxis::Dimension:
        return "dimension";
    }
    return "sigma";
}

inline ExperimentConfig with_axis_value(ExperimentConfig cfg, AblationAxis axis, const std::string& value)
{
    if (cfg.reservoir.type != Construction::Hyper) {
        throw ConfigError("sweeps need reservoir.type = hyper");
    }
    auto num = [&] {
        auto v = detail::parse_real(value);
        if (!v) throw ConfigError("sweep value '" + value + "' is not a number");
        return *v;
    };
    switch (axis) {
    case AblationAxis::Sigma:
        cfg.reservoir.kernel.sigma = num();
        break;
    case AblationAxis::Kappa:
        cfg.reservoir.kernel.kappa = static_cast<int>(num());
        break;
    case AblationAxis::Sampling:
        cfg.reservoir.sampling.scheme = parse_sampling_scheme(value);
        break;
    case AblationAxis::Dimension:
        cfg.reservoir.sampling.dim = static_cast<int>(num());
        break;
    }
    return cfg;
}

struct AblationRow {
    std::string value;
    std::string config_hash;
    std::vector<SummaryRow> summary;
    std::vector<RunReport> reports;
};

// One row per value; every other setting fixed. The data is prepared once.
inline std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, AblationAxis axis,
                                             const std::vector<std::string>& values,
                                             std::optional<int> jobs = std::nullopt)
{
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<ExperimentConfig> cfgs;
    for (const auto& v : values) {
        cfgs.push_back(with_axis_value(cfg, axis, v));
        cfgs.back().validate();
    }
    const PreparedData data = prepare_data(cfg);
    if (cfg.max_horizon() > data.test.rows()) {
        throw ConfigError("largest horizon exceeds test length");
    }
    // Flatten (value, seed) so --jobs spreads over the whole sweep.
    const std::size_t ns = cfg.run.seeds.size();
    std::vector<std::string> hashes;
    for (const auto& c : cfgs) hashes.push_back(config_hash(c));
    std::vector<RunReport> flat(cfgs.size() * ns);
    parallel_for(flat.size(), jobs.value_or(cfg.run.jobs), [&](std::size_t k) {
        const std::size_t vi = k / ns;
        flat[k] = run_seed(cfgs[vi], data, cfg.run.seeds[k % ns], hashes[vi]).report;
    });
    std::vector<AblationRow> rows;
    for (std::size_t vi = 0; vi < cfgs.size(); ++vi) {
        AblationRow row;
        row.value = values[vi];
        row.config_hash = hashes[vi];
        row.reports.assign(flat.begin() + static_cast<std::ptrdiff_t>(vi * ns),
                           flat.begin() + static_cast<std::ptrdiff_t>((vi + 1) * ns));
        row.summary = aggregate(row.reports);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_ablation_csv(std::ostream& out, AblationAxis axis, const std::vector<AblationRow>& rows)
{
    out << "axis,value,horizon,nrmse_mean,nrmse_std,vpt_steps_mean,vpt_steps_std,vpt_norm_mean,vpt_norm_std,"
           "adev_mean,adev_std,runs\n";
    for (const auto& r : rows) {
        for (const auto& s : r.summary) {
            out << to_string(axis) << ',' << r.value << ',' << s.horizon << ',' << format_real(s.nrmse.mean) << ','
                << format_real(s.nrmse.std) << ',' << format_real(s.vpt_steps.mean) << ','
                << format_real(s.vpt_steps.std) << ','
                << (s.vpt_normalized ? format_real(s.vpt_normalized->mean) : "") << ','
                << (s.vpt_normalized ? format_real(s.vpt_normalized->std) : "") << ',' << format_real(s.adev.mean)
                << ',' << format_real(s.adev.std) << ',' << s.runs << '\n';
        }
    }
}

// ---- bound-check suite ----

struct VerifyCheck {
    std::string name;
    std::string status; // pass, fail, skipped:<reason>
    double value = 0.0; // worst observed quantity
    double limit = 0.0;
};

struct VerifyResult {
    std::vector<BoundReport> lemma1;
    std::vector<VerifyCheck> checks;
    int violations = 0;
    bool ok() const noexcept { return violations == 0; }
};

inline SamplingConfig verify_sampling(std::uint64_t seed)
{
    SamplingConfig sc;
    sc.dim = 2;
    sc.scheme = SamplingScheme::HyperbolicUniform;
    sc.seed = seed;
    return sc;
}

// Largest sigma with (N-1) exp(-delta/sigma) <= off.
inline double sigma_for_offdiag(double delta, int n, double off)
{
    if (n < 2) return 1.0;
    const double ratio = static_cast<double>(n - 1) / off;
    return ratio > 1.0 ? delta / std::log(ratio) : delta;
}

// Kernel-spectrum trials spread over the configured sizes with a nonvacuous sigma.
inline std::vector<BoundReport> lemma1_suite(const VerifyConfig& vc, std::uint64_t seed)
{
    std::vector<BoundReport> out;
    Rng rng = make_rng(seed, "verify.lemma1");
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    for (int t = 0; t < vc.lemma1_trials; ++t) {
        const int n = vc.lemma1_sizes[static_cast<std::size_t>(t) % vc.lemma1_sizes.size()];
        const auto pts = sample_nodes(verify_sampling(derive_seed(seed, "verify.lemma1." + std::to_string(t))), n);
        const double delta = n > 1 ? min_off_diagonal(pairwise_distances(pts)) : 1.0;
        const double sigma = sigma_for_offdiag(delta, n, frac(rng));
        BoundReport r = check_lemma1(pts, sigma);
        if (vc.corrupt_bound) {
            r.lemma1_lower = r.observed_lambda_min + 1e-3;
            r.holds = false;
        }
        out.push_back(r);
    }
    return out;
}

// Central-difference Jacobian error over random states.
inline double jacobian_fd_error(const EsnModel& model, int states, std::uint64_t seed, double eps = 1e-6)
{
    Rng rng = make_rng(seed, "verify.jacobian");
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < states; ++s) {
        Eigen::VectorXd x(model.n()), u(model.input_dim());
        for (auto& v : x) v = uni(rng);
        for (auto& v : u) v = uni(rng);
        const Eigen::MatrixXd j = jacobian(model, x, u);
        for (int i = 0; i < model.n(); ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            const Eigen::VectorXd col = (step(model, xp, u) - step(model, xm, u)) / (2.0 * eps);
            worst = std::max(worst, (col - j.col(i)).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

struct DivergenceCheck {
    DivergenceResult result;
    double worst_margin = 0.0; // min over tau of separation - floor
    Eigen::Index t0 = 0;
};

// Symmetric kernel models with radius > 1 and linear nodes, where beta > 1.
inline std::vector<DivergenceCheck> theorem1_suite(const VerifyConfig& vc, std::uint64_t seed)
{
    std::vector<DivergenceCheck> out;
    const Eigen::Index t0 = 5;
    for (int k = 0; k < vc.theorem1_models; ++k) {
        const std::string tag = "verify.theorem1." + std::to_string(k);
        const int n = 10 + 5 * k;
        const auto pts = sample_nodes(verify_sampling(derive_seed(seed, tag)), n);
        const double delta = min_off_diagonal(pairwise_distances(pts));
        const double sigma = sigma_for_offdiag(delta, n, 0.05);
        const double radius = 1.2 + 0.05 * k;
        const EsnModel model = build_symmetric_kernel_model(pts, sigma, radius, 0.8, 3, derive_seed(seed, tag + ".u"));

        Rng rng = make_rng(seed, tag + ".inputs");
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        Eigen::MatrixXd inputs(t0 + vc.theorem1_steps, 3);
        for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = uni(rng);
        Eigen::VectorXd p(3);
        for (auto& v : p) v = 0.1 * uni(rng);

        DivergenceCheck c;
        c.t0 = t0;
        c.result = divergence_experiment(model, inputs, t0, p);
        c.worst_margin = std::numeric_limits<double>::infinity();
        for (int tau = 1; tau <= vc.theorem1_steps; ++tau) {
            c.worst_margin = std::min(c.worst_margin, c.result.separation[t0 + tau] - c.result.floor[t0 + tau]);
        }
        out.push_back(std::move(c));
    }
    return out;
}

// Kernel spectrum, Jacobian singular values, finite-difference Jacobian and
// divergence floor. Violations count every nonvacuous bound that fails.
inline VerifyResult run_verify(const ExperimentConfig& cfg, std::uint64_t seed)
{
    const VerifyConfig& vc = cfg.verify;
    if (vc.lemma1_trials < 1 || vc.lemma1_sizes.empty()) throw ConfigError("verify: need lemma1 trials and sizes");
    VerifyResult res;

    res.lemma1 = lemma1_suite(vc, seed);
    int checked = 0, failed = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : res.lemma1) {
        if (r.vacuous) continue;
        ++checked;
        if (!r.holds) ++failed;
        worst = std::min({worst, r.observed_lambda_min - r.lemma1_lower, r.lemma1_upper - r.observed_rho});
    }
    res.violations += failed;
    res.checks.push_back({"lemma1", failed ? "fail" : "pass", worst, -kBoundSlack});
    log::info("lemma1: " + std::to_string(checked) + " nonvacuous trials, " + std::to_string(failed) + " violations");

    // Singular-value bounds on a HypER model driven by Lorenz (reported; symmetrized top-k
    // usually has lambda_min < 0) and on a positive-definite kernel model.
    ExperimentConfig lc = cfg;
    lc.source.kind = SystemKind::Lorenz;
    lc.source.spec = SystemSpec::defaults(SystemKind::Lorenz);
    lc.source.lyapunov_max.reset();
    lc.data = DataConfig{};
    lc.data.samples = 4000;
    lc.data.washout = 500;
    lc.reservoir.type = Construction::Hyper;
    lc.reservoir.n = vc.lemma2_n;
    lc.reservoir.kernel.kappa = std::min(lc.reservoir.kernel.kappa, vc.lemma2_n);
    lc.esn.activations = {Activation::Tanh};
    const PreparedData d = prepare_data(lc);
    const EsnModel hyper = build_model(lc, seed, 3);

    auto sample_states = [&](const EsnModel& m) {
        const StateTrace tr = drive(m, d.train, 0);
        const int k = std::max(1, vc.lemma2_states);
        Eigen::MatrixXd xs(k, m.n()), us(k, 3);
        const Eigen::Index span = tr.states.rows() - 1;
        for (int i = 0; i < k; ++i) {
            const Eigen::Index t = 200 + (span - 200) * i / std::max(1, k - 1);
            // state after u_t, paired with the next input u_{t+1}
            xs.row(i) = tr.states.row(t);
            us.row(i) = d.train.data.row(t + 1);
        }
        return std::make_pair(xs, us);
    };
    {
        auto [xs, us] = sample_states(hyper);
        const Lemma2Report r = check_lemma2(hyper, xs, us);
        const bool fail = r.status == CheckStatus::Checked && !r.holds;
        res.violations += fail ? 1 : 0;
        res.checks.push_back({"lemma2_hyper",
                              r.status == CheckStatus::Checked ? (fail ? "fail" : "pass")
                                                               : "skipped:" + std::string(to_string(r.status)),
                              std::min(r.lower_margin, r.upper_margin), -kBoundSlack});
    }
    {
        const auto pts = sample_nodes(verify_sampling(derive_seed(seed, "verify.lemma2.kernel")), vc.lemma2_n);
        const double delta = min_off_diagonal(pairwise_distances(pts));
        const Eigen::MatrixXd kern = kernel_matrix(pts, sigma_for_offdiag(delta, vc.lemma2_n, 0.5));
        ReservoirMatrix res_k;
        res_k.weights = (0.99 / symmetric_spectrum(kern).rho) * kern;
        res_k.spectral_radius = 0.99;
        res_k.construction = Construction::Hyper;
        EsnConfig ec = lc.esn;
        ec.seed = input_seed(seed);
        const EsnModel km = EsnModel::create(std::move(res_k), 3, ec);
        auto [xs, us] = sample_states(km);
        const Lemma2Report r = check_lemma2(km, xs, us);
        const bool fail = r.status != CheckStatus::Checked || !r.holds;
        res.violations += fail ? 1 : 0;
        res.checks.push_back({"lemma2_kernel", fail ? "fail" : "pass", std::min(r.lower_margin, r.upper_margin),
                              -kBoundSlack});
    }

    {
        ExperimentConfig jc = lc;
        jc.esn.activations = mixed_activations(vc.lemma2_n);
        const EsnModel jm = build_model(jc, seed, 3);
        const double err = jacobian_fd_error(jm, vc.jacobian_states, seed);
        const bool fail = !(err < 1e-5);
        res.violations += fail ? 1 : 0;
        res.checks.push_back({"jacobian_fd", fail ? "fail" : "pass", err, 1e-5});
    }

    {
        const auto t1 = theorem1_suite(vc, seed);
        double w = std::numeric_limits<double>::infinity();
        int bad = 0;
        for (const auto& c : t1) {
            if (!c.result.floor_meaningful || c.worst_margin < -kBoundSlack) ++bad;
            w = std::min(w, c.worst_margin);
        }
        res.violations += bad;
        res.checks.push_back({"theorem1", bad ? "fail" : "pass", w, -kBoundSlack});
    }
    return res;
}

inline void write_verify_csv(std::ostream& out, const VerifyResult& r)
{
    out << "check,status,value,limit\n";
    for (const auto& c : r.checks) {
        out << c.name << ',' << c.status << ',' << format_real(c.value) << ',' << format_real(c.limit) << '\n';
    }
}

} // namespace hyper_rc
