// hyper_rc command-line driver.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hyper_rc.hpp"

namespace fs = std::filesystem;
using namespace hyper_rc;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out = "out";
    std::optional<int> jobs;
};

void add_common(CLI::App* sub, Common& c, bool multi_seed)
{
    sub->add_option("--config", c.config, "config file (key = value)");
    sub->add_option("--seed", c.seed, "run seed");
    if (multi_seed) sub->add_option("--seeds", c.seeds, "seed range N..M or list");
    sub->add_option("--out", c.out, "output directory");
    if (multi_seed) sub->add_option("--jobs", c.jobs, "parallel seeds")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c)
{
    KeyValues kv = c.config.empty() ? KeyValues{} : KeyValues::load(c.config);
    ExperimentConfig cfg = experiment_from(kv);
    if (!c.seeds.empty()) cfg.run.seeds = parse_seed_list(c.seeds);
    if (c.seed) cfg.run.seeds = {*c.seed};
    if (c.jobs) cfg.run.jobs = *c.jobs;
    cfg.validate();
    fs::create_directories(c.out);
    return cfg;
}

std::string path_in(const Common& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void write_traj(const std::string& path, const Trajectory& tr, Eigen::Index offset = 0)
{
    write_file(path, [&](std::ostream& o) { write_trajectory_csv(o, tr, offset); });
    log::info("wrote " + path);
}

Trajectory as_trajectory(const Eigen::MatrixXd& m, const Trajectory& like, const std::string& name)
{
    Trajectory t;
    t.data = m;
    t.dt = like.dt;
    t.name = name;
    t.columns = like.columns;
    t.lyapunov_max = like.lyapunov_max;
    return t;
}

int cmd_generate(const Common& c)
{
    const ExperimentConfig cfg = resolve(c);
    const PreparedData d = prepare_data(cfg);
    write_traj(path_in(c, "trajectory.csv"), d.raw);
    write_traj(path_in(c, "train.csv"), d.train, cfg.data.washout);
    write_traj(path_in(c, "test.csv"), d.test, cfg.data.washout + d.train.rows());
    return 0;
}

int cmd_build(const Common& c)
{
    const ExperimentConfig cfg = resolve(c);
    const std::uint64_t seed = cfg.run.seeds.front();
    const ReservoirMatrix r = build_reservoir(cfg, seed);
    const std::string p = path_in(c, "reservoir_seed" + std::to_string(seed) + ".txt");
    write_file(p, [&](std::ostream& o) { write_reservoir(o, r); });
    std::cout << "n=" << r.n() << " spectral_radius=" << format_real(r.spectral_radius)
              << " delta=" << format_real(r.min_pairwise_distance) << " -> " << p << '\n';
    return 0;
}

EsnModel trained_model(const ExperimentConfig& cfg, const PreparedData& d, std::uint64_t seed)
{
    EsnModel m = build_model(cfg, seed, static_cast<int>(d.train.dim()));
    train(m, d.train);
    for (const auto& w : m.warnings()) log::warn(w);
    return m;
}

int cmd_train(const Common& c)
{
    const ExperimentConfig cfg = resolve(c);
    const std::uint64_t seed = cfg.run.seeds.front();
    const PreparedData d = prepare_data(cfg);
    const EsnModel m = trained_model(cfg, d, seed);
    const std::string p = path_in(c, "model_seed" + std::to_string(seed) + ".txt");
    write_file(p, [&](std::ostream& o) { save_model(o, m); });
    std::cout << "trained N=" << m.n() << " on " << d.train.rows() << " rows -> " << p << '\n';
    return 0;
}

int cmd_forecast(const Common& c, const std::string& model_path)
{
    const ExperimentConfig cfg = resolve(c);
    const std::uint64_t seed = cfg.run.seeds.front();
    const PreparedData d = prepare_data(cfg);
    std::optional<EsnModel> m;
    if (!model_path.empty()) {
        std::ifstream in(model_path);
        if (!in) throw Error("cannot open model '" + model_path + "'");
        m.emplace(load_model(in));
    } else {
        m.emplace(trained_model(cfg, d, seed));
    }
    const int h = cfg.max_horizon();
    const Eigen::MatrixXd pred = forecast_test(*m, d, cfg.run.mode, h);
    const Eigen::Index offset = cfg.data.washout + d.train.rows();
    write_traj(path_in(c, "forecast.csv"), as_trajectory(pred, d.test, "forecast"), offset);
    write_traj(path_in(c, "truth.csv"), as_trajectory(d.test.data.topRows(h), d.test, "truth"), offset);
    return 0;
}

int cmd_evaluate(const Common& c)
{
    const ExperimentConfig cfg = resolve(c);
    const ExperimentResult res = run_experiment(cfg);
    write_file(path_in(c, "reports.csv"), [&](std::ostream& o) { write_report_csv(o, res.reports); });
    write_file(path_in(c, "summary.csv"), [&](std::ostream& o) { write_summary_csv(o, res.summary); });
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
        if (res.reports[i].failed || res.forecasts[i].rows() < cfg.metrics.welch_segment) continue;
        const Eigen::Index h = res.forecasts[i].rows();
        const Eigen::VectorXd truth = res.data.test.data.col(0).head(h);
        const Eigen::VectorXd pred = res.forecasts[i].col(0);
        write_file(path_in(c, "psd_truth.csv"),
                   [&](std::ostream& o) { write_psd_csv(o, welch_psd(truth, cfg.metrics, res.data.test.dt)); });
        write_file(path_in(c, "psd_forecast.csv"),
                   [&](std::ostream& o) { write_psd_csv(o, welch_psd(pred, cfg.metrics, res.data.test.dt)); });
        break;
    }
    for (const auto& s : res.summary) {
        std::cout << "horizon " << s.horizon << ": nrmse " << format_real(s.nrmse.mean) << " +- "
                  << format_real(s.nrmse.std) << ", vpt_steps " << format_real(s.vpt_steps.mean);
        if (s.vpt_normalized) std::cout << ", vpt_norm " << format_real(s.vpt_normalized->mean);
        std::cout << ", adev " << format_real(s.adev.mean) << " (" << s.runs << " runs)\n";
    }
    std::cout << "config_hash " << res.config_hash << '\n';
    if (res.any_failed()) {
        std::cerr << "one or more seeds failed; see reports.csv\n";
        return 1;
    }
    return 0;
}

int cmd_verify(const Common& c, bool corrupt)
{
    ExperimentConfig cfg = resolve(c);
    if (corrupt) cfg.verify.corrupt_bound = true;
    const VerifyResult r = run_verify(cfg, cfg.run.seeds.front());
    write_file(path_in(c, "bounds.csv"), [&](std::ostream& o) { write_bound_csv(o, r.lemma1); });
    write_file(path_in(c, "verify.csv"), [&](std::ostream& o) { write_verify_csv(o, r); });
    for (const auto& ch : r.checks) {
        std::cout << ch.name << ": " << ch.status << " (worst " << format_real(ch.value) << ")\n";
    }
    std::cout << (r.ok() ? "all bounds hold\n" : std::to_string(r.violations) + " violation(s)\n");
    return r.ok() ? 0 : 2;
}

int cmd_sweep(const Common& c, std::string axis_s, std::string values_s)
{
    ExperimentConfig cfg = resolve(c);
    if (axis_s.empty()) axis_s = cfg.sweep.axis;
    const std::vector<std::string> values = values_s.empty() ? cfg.sweep.values : split_list(values_s);
    const AblationAxis axis = parse_ablation_axis(axis_s);
    const auto rows = run_ablation(cfg, axis, values);
    write_file(path_in(c, "ablation.csv"), [&](std::ostream& o) { write_ablation_csv(o, axis, rows); });
    bool failed = false;
    for (const auto& r : rows) {
        for (const auto& rep : r.reports) failed |= rep.failed;
        for (const auto& s : r.summary) {
            std::cout << axis_s << '=' << r.value << " horizon " << s.horizon << ": nrmse "
                      << format_real(s.nrmse.mean) << " +- " << format_real(s.nrmse.std) << '\n';
        }
    }
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"HypER reservoir computing: data, reservoirs, training, forecasting, metrics, bound checks"};
    app.require_subcommand(1);

    Common gen, bld, trn, fc, ev, ver, sw;
    std::string model_path, axis, values;
    bool corrupt = false;

    auto* g = app.add_subcommand("generate", "integrate or load the series and write trajectory/train/test CSVs");
    add_common(g, gen, false);
    auto* b = app.add_subcommand("build", "build the reservoir for one seed and export its triples");
    add_common(b, bld, false);
    auto* t = app.add_subcommand("train", "train a model for one seed and save it");
    add_common(t, trn, false);
    auto* f = app.add_subcommand("forecast", "forecast the test segment for one seed");
    add_common(f, fc, false);
    f->add_option("--model", model_path, "saved model (else build and train from the config)");
    auto* e = app.add_subcommand("evaluate", "run every seed and write report / summary / PSD CSVs");
    add_common(e, ev, true);
    auto* v = app.add_subcommand("verify", "numeric checks of the spectral and divergence bounds");
    add_common(v, ver, false);
    v->add_flag("--corrupt-bound", corrupt, "test hook: tighten the kernel-spectrum bound so the check must fail");
    auto* s = app.add_subcommand("sweep", "ablation over one reservoir parameter");
    add_common(s, sw, true);
    s->add_option("--axis", axis, "sigma, kappa, sampling or dimension");
    s->add_option("--values", values, "comma-separated values");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*g) return cmd_generate(gen);
        if (*b) return cmd_build(bld);
        if (*t) return cmd_train(trn);
        if (*f) return cmd_forecast(fc, model_path);
        if (*e) return cmd_evaluate(ev);
        if (*v) return cmd_verify(ver, corrupt);
        if (*s) return cmd_sweep(sw, axis, values);
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return 3;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
