#pragma once

// Flat `section.key = value` configuration with `#` comments, and the
// experiment configuration built from it.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hyper_rc/datagen.hpp"
#include "hyper_rc/error.hpp"
#include "hyper_rc/esn.hpp"
#include "hyper_rc/geometry.hpp"
#include "hyper_rc/io.hpp"
#include "hyper_rc/metrics.hpp"
#include "hyper_rc/reservoir.hpp"
#include "hyper_rc/rng.hpp"

namespace hyper_rc {

class KeyValues {
public:
    static KeyValues parse(std::istream& in)
    {
        KeyValues kv;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = detail::trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
            }
            const std::string key = detail::trim(t.substr(0, eq));
            if (key.empty()) {
                throw ParseError("config line " + std::to_string(line_no) + ": empty key");
            }
            if (kv.values_.count(key)) {
                throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            }
            kv.values_[key] = detail::trim(t.substr(eq + 1));
        }
        return kv;
    }

    static KeyValues parse_string(const std::string& s)
    {
        std::istringstream in(s);
        return parse(in);
    }

    static KeyValues load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config '" + path + "'");
        return parse(in);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> get(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& dflt) const { return get(key).value_or(dflt); }

    double real(const std::string& key, double dflt) const
    {
        auto s = get(key);
        if (!s) return dflt;
        auto v = detail::parse_real(*s);
        if (!v) throw ConfigError("config: '" + key + "' is not a real number");
        return *v;
    }

    long long integer(const std::string& key, long long dflt) const
    {
        auto s = get(key);
        if (!s) return dflt;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(*s, &pos);
            if (pos != s->size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: '" + key + "' is not an integer");
        }
    }

    bool boolean(const std::string& key, bool dflt) const
    {
        auto s = get(key);
        if (!s) return dflt;
        if (*s == "true" || *s == "1" || *s == "yes") return true;
        if (*s == "false" || *s == "0" || *s == "no") return false;
        throw ConfigError("config: '" + key + "' is not a boolean");
    }

    std::vector<std::string> unused() const
    {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) {
            if (!used_.count(k)) out.push_back(k);
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

inline std::vector<std::string> split_list(const std::string& s, char sep = ',')
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        tok = detail::trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

inline std::vector<double> parse_real_list(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    for (const auto& tok : split_list(s)) {
        auto v = detail::parse_real(tok);
        if (!v) throw ConfigError(what + ": bad number '" + tok + "'");
        out.push_back(*v);
    }
    return out;
}

// "0..9", "3", "1,4,7" or a mix.
inline std::vector<std::uint64_t> parse_seed_list(const std::string& s)
{
    std::vector<std::uint64_t> out;
    for (const auto& tok : split_list(s)) {
        const auto dots = tok.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stoull(tok));
                continue;
            }
            const std::uint64_t a = std::stoull(tok.substr(0, dots));
            const std::uint64_t b = std::stoull(tok.substr(dots + 2));
            if (b < a) throw ConfigError("seed range '" + tok + "' is descending");
            for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad seed list entry '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty seed list");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what)
{
    std::vector<int> out;
    for (const auto& tok : split_list(s)) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError(what + ": bad integer '" + tok + "'");
        }
    }
    return out;
}

enum class ForecastMode { Autoregressive, OpenLoop };
enum class NormalizedVpt { Auto, On, Off };

struct DataSource {
    std::optional<SystemKind> kind; // unset means CSV input
    SystemSpec spec;
    std::string csv_path;
    int csv_column = -1; // -1: use every column; otherwise delay-embed this one
    int embed_dim = 3;
    int embed_lag = 1;
    std::optional<double> lyapunov_max;
};

struct DataConfig {
    double dt = 0.02;
    int samples = 12500;
    int washout = 2000;
    double train_frac = 0.8;
    bool normalize = true;
};

struct ReservoirConfig {
    Construction type = Construction::Hyper;
    int n = 300;
    KernelConfig kernel;
    SamplingConfig sampling;
    double density = 0.05;  // dense_random only
    double ring_weight = 0; // simple_cycle; 0 means kernel.target_rho
};

struct RunConfig {
    std::vector<int> horizons{200, 1000};
    std::vector<std::uint64_t> seeds{0};
    ForecastMode mode = ForecastMode::Autoregressive;
    NormalizedVpt normalized_vpt = NormalizedVpt::Auto;
    int jobs = 1;
};

struct VerifyConfig {
    int lemma1_trials = 100;
    std::vector<int> lemma1_sizes{10, 50, 200};
    int lemma2_n = 50;
    int lemma2_states = 20;
    int jacobian_states = 10;
    int theorem1_models = 5;
    int theorem1_steps = 20;
    bool corrupt_bound = false; // test hook: shifts every kernel-spectrum lower bound inward
};

struct SweepConfig {
    std::string axis = "sigma";
    std::vector<std::string> values;
};

struct ExperimentConfig {
    DataSource source;
    DataConfig data;
    ReservoirConfig reservoir;
    EsnConfig esn;
    MetricConfig metrics;
    RunConfig run;
    VerifyConfig verify;
    SweepConfig sweep;

    std::optional<double> lyapunov_max() const
    {
        if (source.lyapunov_max) return source.lyapunov_max;
        if (source.kind) return known_lyapunov_max(*source.kind);
        return std::nullopt;
    }

    // Normalized VPT requested explicitly on a system with no lambda_max is an error.
    std::optional<double> scoring_lyapunov() const
    {
        switch (run.normalized_vpt) {
        case NormalizedVpt::Off:
            return std::nullopt;
        case NormalizedVpt::On:
            if (!lyapunov_max()) {
                throw ConfigError("metrics.normalized_vpt = true needs system.lyapunov_max for this system");
            }
            return lyapunov_max();
        case NormalizedVpt::Auto:
            return lyapunov_max();
        }
        return std::nullopt;
    }

    void validate() const
    {
        if (source.kind) {
            source.spec.validate();
            if (!(data.dt > 0.0)) throw ConfigError("data.dt must be positive");
            if (data.samples < 2) throw ConfigError("data.samples must be >= 2");
        } else if (source.csv_path.empty()) {
            throw ConfigError("system.kind = csv needs system.csv_path");
        }
        if (source.lyapunov_max && !(*source.lyapunov_max > 0.0)) {
            throw ConfigError("system.lyapunov_max must be positive");
        }
        if (data.washout < 0) throw ConfigError("data.washout must be >= 0");
        if (!(data.train_frac > 0.0 && data.train_frac < 1.0)) {
            throw ConfigError("data.train_frac must lie in (0,1)");
        }
        if (reservoir.n < 2) throw ConfigError("reservoir.n must be >= 2");
        if (reservoir.type == Construction::Hyper) {
            reservoir.kernel.validate(reservoir.n);
            reservoir.sampling.validate();
        }
        esn.validate(reservoir.n);
        metrics.validate();
        if (run.horizons.empty()) throw ConfigError("run.horizons must be nonempty");
        for (int h : run.horizons) {
            if (h < 1) throw ConfigError("run.horizons entries must be >= 1");
        }
        if (run.seeds.empty()) throw ConfigError("run.seeds must be nonempty");
        if (run.jobs < 1) throw ConfigError("run.jobs must be >= 1");
        (void)scoring_lyapunov();
    }

    int max_horizon() const
    {
        int h = 0;
        for (int v : run.horizons) h = std::max(h, v);
        return h;
    }
};

inline std::string_view to_string(SamplingScheme s) noexcept
{
    return s == SamplingScheme::EuclideanIsotropic ? "euclidean_isotropic" : "hyperbolic_uniform";
}

inline SamplingScheme parse_sampling_scheme(std::string_view s)
{
    if (s == "euclidean_isotropic" || s == "euclidean") return SamplingScheme::EuclideanIsotropic;
    if (s == "hyperbolic_uniform" || s == "hyperbolic") return SamplingScheme::HyperbolicUniform;
    throw ConfigError("unknown sampling scheme '" + std::string(s) + "'");
}

inline std::vector<Activation> parse_activation_setting(const std::string& s, int n)
{
    if (s == "mixed") return mixed_activations(n);
    return parse_activation_list(s);
}

// Keys are checked: anything left unread is reported as unknown.
inline ExperimentConfig experiment_from(const KeyValues& kv)
{
    ExperimentConfig c;

    const std::string kind = kv.get_or("system.kind", "lorenz");
    if (kind == "csv") {
        c.source.csv_path = kv.get_or("system.csv_path", "");
        c.source.csv_column = static_cast<int>(kv.integer("system.csv_column", -1));
        c.source.embed_dim = static_cast<int>(kv.integer("system.embed_dim", 3));
        c.source.embed_lag = static_cast<int>(kv.integer("system.embed_lag", 1));
        c.data.dt = kv.real("data.dt", 1.0);
    } else {
        c.source.kind = parse_system_kind(kind);
        c.source.spec = SystemSpec::defaults(*c.source.kind);
        for (const auto& p : SystemSpec::parameter_names(*c.source.kind)) {
            c.source.spec.params[p] = kv.real("system." + p, c.source.spec.params[p]);
        }
        if (auto x0 = kv.get("system.x0")) {
            const auto v = parse_real_list(*x0, "system.x0");
            c.source.spec.x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        c.data.dt = kv.real("data.dt", c.data.dt);
        c.data.samples = static_cast<int>(kv.integer("data.samples", c.data.samples));
    }
    if (kv.has("system.lyapunov_max")) c.source.lyapunov_max = kv.real("system.lyapunov_max", 0.0);
    c.data.washout = static_cast<int>(kv.integer("data.washout", c.data.washout));
    c.data.train_frac = kv.real("data.train_frac", c.data.train_frac);
    c.data.normalize = kv.boolean("data.normalize", c.data.normalize);

    c.reservoir.type = parse_construction(kv.get_or("reservoir.type", "hyper"));
    c.reservoir.n = static_cast<int>(kv.integer("reservoir.n", c.reservoir.n));
    auto& k = c.reservoir.kernel;
    k.sigma = kv.real("reservoir.sigma", k.sigma);
    k.kappa = static_cast<int>(kv.integer("reservoir.kappa", k.kappa));
    k.target_rho = kv.real("reservoir.target_rho", k.target_rho);
    k.zero_diagonal = kv.boolean("reservoir.zero_diagonal", k.zero_diagonal);
    auto& s = c.reservoir.sampling;
    s.dim = static_cast<int>(kv.integer("reservoir.sampling.dim", s.dim));
    s.scheme = parse_sampling_scheme(kv.get_or("reservoir.sampling.scheme", std::string(to_string(s.scheme))));
    s.rho_max = kv.real("reservoir.sampling.rho_max", s.rho_max);
    s.radius_cap = kv.real("reservoir.sampling.radius_cap", s.radius_cap);
    c.reservoir.density = kv.real("reservoir.density", c.reservoir.density);
    c.reservoir.ring_weight = kv.real("reservoir.ring_weight", c.reservoir.ring_weight);

    c.esn.leak_rate = kv.real("esn.leak_rate", c.esn.leak_rate);
    c.esn.input_scale = kv.real("esn.input_scale", c.esn.input_scale);
    c.esn.washout = static_cast<int>(kv.integer("esn.washout", c.esn.washout));
    c.esn.ridge_lambda = kv.real("esn.ridge_lambda", c.esn.ridge_lambda);
    c.esn.activations = parse_activation_setting(kv.get_or("esn.activations", "tanh"), c.reservoir.n);

    auto& m = c.metrics;
    m.vpt_threshold = kv.real("metrics.vpt_threshold", m.vpt_threshold);
    if (auto g = kv.get("metrics.adev_grid")) {
        const auto v = parse_int_list(*g, "metrics.adev_grid");
        if (v.size() != 3) throw ConfigError("metrics.adev_grid needs three integers");
        m.adev_grid = {v[0], v[1], v[2]};
    }
    if (auto b = kv.get("metrics.adev_bounds"); b && *b != "auto") {
        std::vector<AxisBounds> bounds;
        for (const auto& axis : split_list(*b, ';')) {
            const auto v = parse_real_list(axis, "metrics.adev_bounds");
            if (v.size() != 2) throw ConfigError("metrics.adev_bounds: each axis needs min,max");
            bounds.push_back({v[0], v[1]});
        }
        m.adev_bounds = bounds;
    }
    m.welch_segment = static_cast<int>(kv.integer("metrics.welch_segment", m.welch_segment));
    m.welch_overlap = kv.real("metrics.welch_overlap", m.welch_overlap);
    const std::string nv = kv.get_or("metrics.normalized_vpt", "auto");
    if (nv == "auto") c.run.normalized_vpt = NormalizedVpt::Auto;
    else if (nv == "true") c.run.normalized_vpt = NormalizedVpt::On;
    else if (nv == "false") c.run.normalized_vpt = NormalizedVpt::Off;
    else throw ConfigError("metrics.normalized_vpt must be auto, true or false");

    if (auto h = kv.get("run.horizons")) c.run.horizons = parse_int_list(*h, "run.horizons");
    if (auto sd = kv.get("run.seeds")) c.run.seeds = parse_seed_list(*sd);
    const std::string mode = kv.get_or("run.mode", "autoregressive");
    if (mode == "autoregressive") c.run.mode = ForecastMode::Autoregressive;
    else if (mode == "open_loop") c.run.mode = ForecastMode::OpenLoop;
    else throw ConfigError("run.mode must be autoregressive or open_loop");
    c.run.jobs = static_cast<int>(kv.integer("run.jobs", c.run.jobs));

    auto& v = c.verify;
    v.lemma1_trials = static_cast<int>(kv.integer("verify.lemma1_trials", v.lemma1_trials));
    if (auto ls = kv.get("verify.lemma1_sizes")) v.lemma1_sizes = parse_int_list(*ls, "verify.lemma1_sizes");
    v.lemma2_n = static_cast<int>(kv.integer("verify.lemma2_n", v.lemma2_n));
    v.lemma2_states = static_cast<int>(kv.integer("verify.lemma2_states", v.lemma2_states));
    v.jacobian_states = static_cast<int>(kv.integer("verify.jacobian_states", v.jacobian_states));
    v.theorem1_models = static_cast<int>(kv.integer("verify.theorem1_models", v.theorem1_models));
    v.theorem1_steps = static_cast<int>(kv.integer("verify.theorem1_steps", v.theorem1_steps));
    v.corrupt_bound = kv.boolean("verify.corrupt_bound", v.corrupt_bound);

    c.sweep.axis = kv.get_or("sweep.axis", c.sweep.axis);
    if (auto sv = kv.get("sweep.values")) c.sweep.values = split_list(*sv);

    const auto unknown = kv.unused();
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const auto& u : unknown) msg += " " + u;
        throw ConfigError(msg);
    }
    return c;
}

inline ExperimentConfig load_experiment(const std::string& path) { return experiment_from(KeyValues::load(path)); }

// Every setting that affects results, fully resolved, one `key = value` per
// line in sorted order. Seeds and job count are left out.
inline std::string canonical_form(const ExperimentConfig& c)
{
    std::map<std::string, std::string> m;
    auto r = [](double v) { return format_real(v); };
    if (c.source.kind) {
        m["system.kind"] = std::string(to_string(*c.source.kind));
        for (const auto& [name, val] : c.source.spec.params) m["system." + name] = r(val);
        std::string x0;
        for (Eigen::Index i = 0; i < c.source.spec.x0.size(); ++i) x0 += (i ? "," : "") + r(c.source.spec.x0[i]);
        m["system.x0"] = x0;
        m["data.samples"] = std::to_string(c.data.samples);
    } else {
        m["system.kind"] = "csv";
        m["system.csv_path"] = c.source.csv_path;
        m["system.csv_column"] = std::to_string(c.source.csv_column);
        m["system.embed_dim"] = std::to_string(c.source.embed_dim);
        m["system.embed_lag"] = std::to_string(c.source.embed_lag);
    }
    if (c.source.lyapunov_max) m["system.lyapunov_max"] = r(*c.source.lyapunov_max);
    m["data.dt"] = r(c.data.dt);
    m["data.washout"] = std::to_string(c.data.washout);
    m["data.train_frac"] = r(c.data.train_frac);
    m["data.normalize"] = c.data.normalize ? "true" : "false";
    m["reservoir.type"] = std::string(to_string(c.reservoir.type));
    m["reservoir.n"] = std::to_string(c.reservoir.n);
    switch (c.reservoir.type) {
    case Construction::Hyper:
        m["reservoir.sigma"] = r(c.reservoir.kernel.sigma);
        m["reservoir.kappa"] = std::to_string(c.reservoir.kernel.kappa);
        m["reservoir.zero_diagonal"] = c.reservoir.kernel.zero_diagonal ? "true" : "false";
        m["reservoir.sampling.dim"] = std::to_string(c.reservoir.sampling.dim);
        m["reservoir.sampling.scheme"] = std::string(to_string(c.reservoir.sampling.scheme));
        if (c.reservoir.sampling.scheme == SamplingScheme::HyperbolicUniform) {
            m["reservoir.sampling.rho_max"] = r(c.reservoir.sampling.rho_max);
        } else {
            m["reservoir.sampling.radius_cap"] = r(c.reservoir.sampling.radius_cap);
        }
        m["reservoir.target_rho"] = r(c.reservoir.kernel.target_rho);
        break;
    case Construction::DenseRandom:
        m["reservoir.density"] = r(c.reservoir.density);
        m["reservoir.target_rho"] = r(c.reservoir.kernel.target_rho);
        break;
    case Construction::SimpleCycle:
        m["reservoir.ring_weight"] =
            r(c.reservoir.ring_weight != 0.0 ? c.reservoir.ring_weight : c.reservoir.kernel.target_rho);
        break;
    }
    m["esn.leak_rate"] = r(c.esn.leak_rate);
    m["esn.input_scale"] = r(c.esn.input_scale);
    m["esn.washout"] = std::to_string(c.esn.washout);
    m["esn.ridge_lambda"] = r(c.esn.ridge_lambda);
    m["esn.activations"] = activations_to_string(c.esn.activations);
    m["metrics.vpt_threshold"] = r(c.metrics.vpt_threshold);
    m["metrics.adev_grid"] = std::to_string(c.metrics.adev_grid[0]) + "," + std::to_string(c.metrics.adev_grid[1]) +
                             "," + std::to_string(c.metrics.adev_grid[2]);
    if (c.metrics.adev_bounds) {
        std::string b;
        for (std::size_t i = 0; i < c.metrics.adev_bounds->size(); ++i) {
            const auto& ab = (*c.metrics.adev_bounds)[i];
            b += (i ? ";" : "") + r(ab.lo) + "," + r(ab.hi);
        }
        m["metrics.adev_bounds"] = b;
    } else {
        m["metrics.adev_bounds"] = "auto";
    }
    const char* nv[] = {"auto", "true", "false"};
    m["metrics.normalized_vpt"] = nv[static_cast<int>(c.run.normalized_vpt)];
    std::string h;
    for (std::size_t i = 0; i < c.run.horizons.size(); ++i) h += (i ? "," : "") + std::to_string(c.run.horizons[i]);
    m["run.horizons"] = h;
    m["run.mode"] = c.run.mode == ForecastMode::Autoregressive ? "autoregressive" : "open_loop";

    std::string out;
    for (const auto& [key, val] : m) out += key + " = " + val + "\n";
    return out;
}

inline std::string config_hash(const ExperimentConfig& c)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_form(c))));
    return buf;
}

} // namespace hyper_rc
