#pragma once

// Text formats: reservoir triples, model container, trajectory / report /
// summary / spectrum / bound CSVs. Reals are written with 17 significant
// digits so every value round-trips exactly.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyper_rc/datagen.hpp"
#include "hyper_rc/error.hpp"
#include "hyper_rc/esn.hpp"
#include "hyper_rc/metrics.hpp"
#include "hyper_rc/reservoir.hpp"
#include "hyper_rc/theory.hpp"
#include "hyper_rc/trajectory.hpp"

namespace hyper_rc {

inline std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string_view to_string(Construction c) noexcept
{
    switch (c) {
    case Construction::Hyper:
        return "hyper";
    case Construction::DenseRandom:
        return "dense_random";
    case Construction::SimpleCycle:
        return "simple_cycle";
    }
    return "hyper";
}

inline Construction parse_construction(std::string_view s)
{
    if (s == "hyper") return Construction::Hyper;
    if (s == "dense_random") return Construction::DenseRandom;
    if (s == "simple_cycle") return Construction::SimpleCycle;
    throw ParseError("unknown construction '" + std::string(s) + "'");
}

namespace detail {

inline bool is_simple_cycle(const Eigen::MatrixXd& w)
{
    const Eigen::Index n = w.rows();
    if (n < 2) return false;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool on_ring = i == (j + 1) % n;
            if (on_ring != (w(i, j) != 0.0) || (on_ring && w(i, j) != w(1 % n, 0))) {
                return false;
            }
        }
    }
    return true;
}

inline std::istream& next_content_line(std::istream& in, std::string& line)
{
    while (std::getline(in, line)) {
        if (!detail::trim(line).empty() && detail::trim(line)[0] != '#') break;
    }
    return in;
}

} // namespace detail

// Header `N kappa sigma target_rho`, then `i j value` per nonzero, row-major.
inline void write_reservoir(std::ostream& out, const ReservoirMatrix& r)
{
    out << r.n() << ' ' << r.kappa << ' ' << format_real(r.sigma) << ' ' << format_real(r.target_rho) << '\n';
    for (Eigen::Index i = 0; i < r.weights.rows(); ++i) {
        for (Eigen::Index j = 0; j < r.weights.cols(); ++j) {
            if (r.weights(i, j) != 0.0) {
                out << i << ' ' << j << ' ' << format_real(r.weights(i, j)) << '\n';
            }
        }
    }
}

// Reads until EOF or a line equal to `terminator`. The construction kind is
// inferred: sigma > 0 means Hyper, a uniform ring means SimpleCycle.
inline ReservoirMatrix read_reservoir(std::istream& in, const std::string& terminator = {})
{
    std::string line;
    if (!detail::next_content_line(in, line)) {
        throw ParseError("reservoir: missing header");
    }
    std::istringstream hs(line);
    long n = 0;
    ReservoirMatrix r;
    if (!(hs >> n >> r.kappa >> r.sigma >> r.target_rho) || n < 1) {
        throw ParseError("reservoir: bad header '" + line + "'");
    }
    r.weights = Eigen::MatrixXd::Zero(n, n);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (!terminator.empty() && t == terminator) break;
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        long i = 0, j = 0;
        std::string vs;
        if (!(ls >> i >> j >> vs) || i < 0 || j < 0 || i >= n || j >= n) {
            throw ParseError("reservoir: bad triple on line " + std::to_string(line_no));
        }
        auto v = detail::parse_real(vs);
        if (!v) throw ParseError("reservoir: bad value on line " + std::to_string(line_no));
        r.weights(i, j) = *v;
    }
    r.spectral_radius = r.target_rho;
    if (r.sigma > 0.0) {
        r.construction = Construction::Hyper;
    } else if (detail::is_simple_cycle(r.weights)) {
        r.construction = Construction::SimpleCycle;
    } else {
        r.construction = Construction::DenseRandom;
    }
    return r;
}

inline void write_matrix_rows(std::ostream& out, const Eigen::MatrixXd& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << (j ? " " : "") << format_real(m(i, j));
        }
        out << '\n';
    }
}

inline Eigen::MatrixXd read_matrix_rows(std::istream& in, Eigen::Index rows, Eigen::Index cols, const char* what)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::string tok;
            if (!(in >> tok)) throw ParseError(std::string(what) + ": truncated matrix");
            auto v = detail::parse_real(tok);
            if (!v) throw ParseError(std::string(what) + ": bad value '" + tok + "'");
            m(i, j) = *v;
        }
    }
    return m;
}

inline std::string activations_to_string(const std::vector<Activation>& acts)
{
    std::string s;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        s += (i ? "," : "") + std::string(to_string(acts[i]));
    }
    return s;
}

inline std::vector<Activation> parse_activation_list(const std::string& s)
{
    std::vector<Activation> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        out.push_back(parse_activation(detail::trim(tok)));
    }
    if (out.empty()) throw ConfigError("empty activation list");
    return out;
}

// Model container: config key-values, U, W as triples, W_out.
inline void save_model(std::ostream& out, const EsnModel& model)
{
    const EsnConfig& c = model.config();
    out << "hyper_rc_model 1\n";
    out << "leak_rate = " << format_real(c.leak_rate) << '\n';
    out << "input_scale = " << format_real(c.input_scale) << '\n';
    out << "washout = " << c.washout << '\n';
    out << "ridge_lambda = " << format_real(c.ridge_lambda) << '\n';
    out << "activations = " << activations_to_string(c.activations) << '\n';
    out << "seed = " << c.seed << '\n';
    out << "construction = " << to_string(model.reservoir().construction) << '\n';
    out << "spectral_radius = " << format_real(model.reservoir().spectral_radius) << '\n';
    out << "min_pairwise_distance = " << format_real(model.reservoir().min_pairwise_distance) << '\n';
    out << "input_weights " << model.input_weights().rows() << ' ' << model.input_weights().cols() << '\n';
    write_matrix_rows(out, model.input_weights());
    out << "reservoir\n";
    write_reservoir(out, model.reservoir());
    out << "end_reservoir\n";
    if (model.trained()) {
        out << "readout " << model.readout().rows() << ' ' << model.readout().cols() << '\n';
        write_matrix_rows(out, model.readout());
    } else {
        out << "readout none\n";
    }
}

inline EsnModel load_model(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "hyper_rc_model 1") {
        throw ParseError("model: missing 'hyper_rc_model 1' header");
    }
    EsnConfig cfg;
    std::optional<Construction> construction;
    double spectral = 0.0, min_dist = 0.0;
    Eigen::MatrixXd u;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.rfind("input_weights", 0) == 0) {
            std::istringstream ss(t.substr(13));
            Eigen::Index r = 0, c = 0;
            if (!(ss >> r >> c)) throw ParseError("model: bad input_weights header");
            u = read_matrix_rows(in, r, c, "model input_weights");
            break;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("model: expected key = value, got '" + t + "'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        auto real = [&]() {
            auto v = detail::parse_real(val);
            if (!v) throw ParseError("model: bad value for " + key);
            return *v;
        };
        if (key == "leak_rate") cfg.leak_rate = real();
        else if (key == "input_scale") cfg.input_scale = real();
        else if (key == "washout") cfg.washout = std::stoi(val);
        else if (key == "ridge_lambda") cfg.ridge_lambda = real();
        else if (key == "activations") cfg.activations = parse_activation_list(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "construction") construction = parse_construction(val);
        else if (key == "spectral_radius") spectral = real();
        else if (key == "min_pairwise_distance") min_dist = real();
        else throw ParseError("model: unknown key '" + key + "'");
    }
    if (u.size() == 0) throw ParseError("model: missing input_weights");
    if (!detail::next_content_line(in, line) || detail::trim(line) != "reservoir") {
        throw ParseError("model: missing reservoir section");
    }
    ReservoirMatrix res = read_reservoir(in, "end_reservoir");
    if (construction) res.construction = *construction;
    res.spectral_radius = spectral;
    res.min_pairwise_distance = min_dist;
    EsnModel model(std::move(res), std::move(u), cfg);
    if (!detail::next_content_line(in, line)) throw ParseError("model: missing readout section");
    const std::string t = detail::trim(line);
    if (t != "readout none") {
        std::istringstream ss(t);
        std::string tag;
        Eigen::Index r = 0, c = 0;
        if (!(ss >> tag >> r >> c) || tag != "readout") throw ParseError("model: bad readout header");
        model.set_readout(read_matrix_rows(in, r, c, "model readout"));
    }
    return model;
}

// Header `t,<names>`; t = index * dt.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, Eigen::Index t_offset = 0)
{
    out << 't';
    for (const auto& c : tr.column_names()) out << ',' << c;
    out << '\n';
    for (Eigen::Index i = 0; i < tr.rows(); ++i) {
        out << format_real(static_cast<double>(i + t_offset) * tr.dt);
        for (Eigen::Index j = 0; j < tr.dim(); ++j) out << ',' << format_real(tr.data(i, j));
        out << '\n';
    }
}

// Reads the trajectory CSV written above (drops the t column, infers dt).
inline Trajectory read_trajectory_csv(std::istream& in, const std::string& name = "trajectory")
{
    Trajectory raw = parse_csv(in, 1.0, name);
    if (raw.dim() < 2) throw ParseError("trajectory csv: need a t column and at least one variable");
    Trajectory tr;
    tr.name = name;
    tr.data = raw.data.rightCols(raw.dim() - 1);
    tr.dt = raw.rows() >= 2 ? raw.data(1, 0) - raw.data(0, 0) : 1.0;
    if (raw.columns.size() == static_cast<std::size_t>(raw.dim())) {
        tr.columns.assign(raw.columns.begin() + 1, raw.columns.end());
    }
    return tr;
}

inline void write_report_csv(std::ostream& out, const std::vector<RunReport>& reports)
{
    out << "seed,horizon,nrmse,vpt_steps,vpt_norm,adev,config_hash,status\n";
    for (const auto& r : reports) {
        if (r.failed) {
            std::string err = r.error;
            for (char& ch : err) {
                if (ch == ',' || ch == '\n') ch = ';';
            }
            out << r.seed << ",,,,,," << r.config_hash << ",failed: " << err << '\n';
            continue;
        }
        for (const auto& [h, s] : r.by_horizon) {
            out << r.seed << ',' << h << ',' << format_real(s.nrmse) << ',' << s.vpt_steps << ','
                << (s.vpt_normalized ? format_real(*s.vpt_normalized) : "") << ',' << s.adev << ','
                << r.config_hash << ",ok\n";
        }
    }
}

// metric,mean,std with metric names like nrmse@200.
inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows)
{
    out << "metric,mean,std\n";
    for (const auto& r : rows) {
        const std::string h = "@" + std::to_string(r.horizon);
        out << "nrmse" << h << ',' << format_real(r.nrmse.mean) << ',' << format_real(r.nrmse.std) << '\n';
        out << "vpt_steps" << h << ',' << format_real(r.vpt_steps.mean) << ',' << format_real(r.vpt_steps.std)
            << '\n';
        if (r.vpt_normalized) {
            out << "vpt_norm" << h << ',' << format_real(r.vpt_normalized->mean) << ','
                << format_real(r.vpt_normalized->std) << '\n';
        }
        out << "adev" << h << ',' << format_real(r.adev.mean) << ',' << format_real(r.adev.std) << '\n';
    }
}

inline void write_psd_csv(std::ostream& out, const Spectrum& s)
{
    out << "frequency,power\n";
    for (Eigen::Index k = 0; k < s.frequency.size(); ++k) {
        out << format_real(s.frequency[k]) << ',' << format_real(s.power[k]) << '\n';
    }
}

inline void write_bound_csv(std::ostream& out, const std::vector<BoundReport>& rows)
{
    out << "trial,n,sigma,delta,lemma1_lower,lemma1_upper,observed_lambda_min,observed_rho,beta_sigma,vacuous,"
           "holds\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << i << ',' << r.n << ',' << format_real(r.sigma) << ',' << format_real(r.delta) << ','
            << format_real(r.lemma1_lower) << ',' << format_real(r.lemma1_upper) << ','
            << format_real(r.observed_lambda_min) << ',' << format_real(r.observed_rho) << ','
            << format_real(r.beta_sigma) << ',' << (r.vacuous ? 1 : 0) << ',' << (r.holds ? 1 : 0) << '\n';
    }
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    writer(out);
    if (!out) throw Error("write to '" + path + "' failed");
}

} // namespace hyper_rc
