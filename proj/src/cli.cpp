#include "proxflow/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxflow/altproj.hpp"
#include "proxflow/experiments.hpp"
#include "proxflow/format.hpp"
#include "proxflow/spectral.hpp"
#include "proxflow/tables.hpp"

namespace proxflow::cli {

using json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Kind { int_list, real_list, uint, count, real, text, flag };

struct Key {
    const char* name;
    Kind kind;
    const char* help;
};

// Every flag doubles as a config-file key.
constexpr Key kKeys[] = {
    {"tau", Kind::int_list, "multistep orders, e.g. 1,2,3"},
    {"beta", Kind::real_list, "outer prox weight(s)"},
    {"m", Kind::int_list, "inner proximal-gradient steps"},
    {"alpha", Kind::real_list, "inner step (figure1) or block step (matfac)"},
    {"lambda", Kind::real_list, "l1 weight"},
    {"theta", Kind::real_list, "LSP scale"},
    {"sigma", Kind::real_list, "subspace coherence parameter"},
    {"rank", Kind::int_list, "factorization rank"},
    {"L", Kind::real_list, "smoothness values (figure1)"},
    {"mu", Kind::real_list, "strong convexity (figure1)"},
    {"rho", Kind::real_list, "projection gaps (accel)"},
    {"angles", Kind::real_list, "principal angles in radians (accel)"},
    {"dims", Kind::int_list, "problem dimensions: p,q | n,d | n"},
    {"seed", Kind::uint, "random seed (default PROXFLOW_SEED, else 7)"},
    {"iters", Kind::count, "iteration budget (accel: 0 picks per run)"},
    {"tol", Kind::real, "stop when the trace metric reaches this value"},
    {"jobs", Kind::count, "worker threads"},
    {"out", Kind::text, "output directory"},
    {"only", Kind::text, "tables: all | ppm"},
    {"spectrum", Kind::text, "uniform | inverse_r | exp_decay"},
    {"warmup", Kind::text, "ramp | repeat"},
    {"walltime", Kind::flag, "record wall-clock time (outputs stop being byte-reproducible)"},
};

const Key* find_key(const std::string& name) {
    for (const auto& k : kKeys)
        if (name == k.name) return &k;
    return nullptr;
}

constexpr const char* kExperiments[] = {"l1", "lsp", "altproj", "matfac"};

json defaults_for(const std::string& command, const std::string& experiment) {
    json d;
    d["seed"] = 7;
    d["jobs"] = 1;
    d["out"] = ".";
    d["walltime"] = false;
    if (command == "tables") {
        d["only"] = "all";
    } else if (command == "figure1") {
        std::vector<double> betas;
        for (int i = 0; i <= 40; ++i) betas.push_back(std::pow(10.0, -2.0 + 0.1 * i));
        d["beta"] = betas;
        d["m"] = {1, 4, 10};
        d["L"] = {2.0, 10.0};
        d["mu"] = {1.0};
        d["alpha"] = {1.0};
        d["tau"] = {1, 2, 3};
    } else if (command == "run") {
        d["tau"] = {1, 2, 3};
        d["tol"] = 0.0;
        d["warmup"] = "ramp";
        if (experiment == "l1") {
            d["dims"] = {50, 100};
            d["spectrum"] = "uniform";
            d["lambda"] = {0.1};
            d["beta"] = {1.0};
            d["m"] = {1};
            d["iters"] = 1000;
        } else if (experiment == "lsp") {
            d["dims"] = {20, 50};
            d["spectrum"] = "uniform";
            d["theta"] = {10.0};
            d["beta"] = {0.5};
            d["m"] = {1};
            d["iters"] = 1000;
        } else if (experiment == "altproj") {
            d["dims"] = {500, 400};
            d["sigma"] = {0.1};
            d["iters"] = 200;
        } else if (experiment == "matfac") {
            d["dims"] = {100};
            d["rank"] = {10};
            d["alpha"] = {1.0};
            d["iters"] = 200;
        }
    } else if (command == "accel") {
        d["rho"] = {0.04, 0.25};
        d["dims"] = {16};
        d["iters"] = 0;
    }
    return d;
}

// --- value parsing --------------------------------------------------------

double parse_real(const std::string& s, const std::string& key) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(v)) throw UsageError("--" + key + ": '" + s + "' is not a finite number");
    return v;
}

long long parse_int(const std::string& s, const std::string& key) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw UsageError("--" + key + ": '" + s + "' is not an integer");
    return v;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

json flag_value(const Key& key, const std::string& raw) {
    switch (key.kind) {
        case Kind::int_list: {
            json a = json::array();
            for (const auto& p : split(raw)) a.push_back(parse_int(p, key.name));
            return a;
        }
        case Kind::real_list: {
            json a = json::array();
            for (const auto& p : split(raw)) a.push_back(parse_real(p, key.name));
            return a;
        }
        case Kind::uint:
        case Kind::count: {
            const long long v = parse_int(raw, key.name);
            if (v < 0) throw UsageError(std::string("--") + key.name + " must be >= 0");
            return v;
        }
        case Kind::real: return parse_real(raw, key.name);
        case Kind::text: return raw;
        case Kind::flag: return true;
    }
    return raw;
}

/// Brings a config-file value to the canonical shape of its key.
json normalize(const Key& key, const json& v) {
    auto number = [&](const json& x) {
        if (!x.is_number()) throw UsageError(std::string("config '") + key.name + "' must be numeric");
        return x;
    };
    switch (key.kind) {
        case Kind::int_list:
        case Kind::real_list: {
            json a = json::array();
            if (v.is_array())
                for (const auto& x : v) a.push_back(number(x));
            else
                a.push_back(number(v));
            if (key.kind == Kind::int_list)
                for (const auto& x : a)
                    if (!x.is_number_integer()) throw UsageError(std::string("config '") + key.name + "' must be integers");
            return a;
        }
        case Kind::uint:
        case Kind::count:
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw UsageError(std::string("config '") + key.name + "' must be a non-negative integer");
            return v;
        case Kind::real: return number(v);
        case Kind::text:
            if (!v.is_string()) throw UsageError(std::string("config '") + key.name + "' must be a string");
            return v;
        case Kind::flag:
            if (!v.is_boolean()) throw UsageError(std::string("config '") + key.name + "' must be a boolean");
            return v;
    }
    return v;
}

// --- typed accessors on the resolved config --------------------------------

struct Config {
    json values;

    bool has(const char* k) const { return values.contains(k); }

    std::vector<double> reals(const char* k) const {
        if (!has(k)) throw UsageError(std::string("--") + k + " is required");
        std::vector<double> out;
        for (const auto& x : values.at(k)) out.push_back(x.get<double>());
        if (out.empty()) throw UsageError(std::string("--") + k + " must not be empty");
        return out;
    }
    std::vector<int> ints(const char* k) const {
        if (!has(k)) throw UsageError(std::string("--") + k + " is required");
        std::vector<int> out;
        for (const auto& x : values.at(k)) out.push_back(static_cast<int>(x.get<long long>()));
        if (out.empty()) throw UsageError(std::string("--") + k + " must not be empty");
        return out;
    }
    double real(const char* k) const {
        const auto v = reals(k);
        if (v.size() != 1) throw UsageError(std::string("--") + k + " takes a single value here");
        return v[0];
    }
    int integer(const char* k) const {
        const auto v = ints(k);
        if (v.size() != 1) throw UsageError(std::string("--") + k + " takes a single value here");
        return v[0];
    }
    double scalar(const char* k) const { return values.at(k).get<double>(); }
    std::size_t count(const char* k) const { return values.at(k).get<std::size_t>(); }
    std::string text(const char* k) const { return values.at(k).get<std::string>(); }
    bool flag(const char* k) const { return has(k) && values.at(k).get<bool>(); }
};

void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

WarmupPolicy warmup_of(const Config& c) {
    const auto w = c.text("warmup");
    if (w == "ramp") return WarmupPolicy::ramp;
    if (w == "repeat") return WarmupPolicy::repeat;
    throw UsageError("--warmup must be ramp or repeat");
}

std::vector<int> taus_of(const Config& c, int hi) {
    auto taus = c.ints("tau");
    for (int t : taus) require(t >= 1 && t <= hi, "--tau values must lie in 1.." + std::to_string(hi));
    return taus;
}

std::string tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// --- commands ---------------------------------------------------------------

struct Outcome {
    std::vector<std::pair<std::string, std::string>> files;  // name, content
    int code = exit_ok;
};

Outcome cmd_tables(const Config& c, std::ostream& out) {
    const auto only = c.text("only");
    require(only == "all" || only == "ppm", "--only must be all or ppm");
    TableOptions options;
    options.ppm_only = only == "ppm";
    options.jobs = std::max<std::size_t>(1, c.count("jobs"));
    const auto t2 = compute_table2(options);
    const auto t3 = compute_table3(options);
    Outcome o;
    o.files.emplace_back("table2.csv", table2_csv(t2));
    o.files.emplace_back("table3.csv", table3_csv(t3));
    for (const auto* rows : {&t2, &t3}) {
        std::map<TableStatus, int> tally;
        for (const auto& r : *rows) ++tally[r.status];
        out << "table" << rows->front().table << ": " << rows->size() << " rows, " << tally[TableStatus::pass]
            << " pass, " << tally[TableStatus::escape] << " escape (companion-verified), " << tally[TableStatus::fail]
            << " fail\n";
        for (const auto& r : *rows)
            if (r.status == TableStatus::fail)
                out << "  FAIL " << r.method << " m=" << r.m << " beta=" << tag(r.beta) << " L=" << tag(r.L)
                    << " computed=" << format_double(r.computed) << " published=" << tag(r.published) << '\n';
    }
    if (!all_rows_accepted(t2) || !all_rows_accepted(t3)) o.code = exit_tolerance;
    return o;
}

Outcome cmd_figure1(const Config& c, std::ostream& out) {
    const auto betas = c.reals("beta");
    const auto ms = c.ints("m");
    const auto Ls = c.reals("L");
    const double mu = c.real("mu");
    const double alpha = c.real("alpha");
    const auto taus = taus_of(c, 4);
    for (double b : betas) require(b > 0.0, "--beta values must be > 0");
    for (int m : ms) require(m >= 1, "--m values must be >= 1");
    require(mu >= 0.0, "--mu must be >= 0");
    for (double L : Ls) require(L > 0.0 && L >= mu, "--L values must satisfy L >= mu and L > 0");
    require(alpha > 0.0, "--alpha must be > 0");

    std::vector<ScanCurve> curves;
    for (int t : taus) curves.push_back({bdf_coefficients(t).xi, 0});
    Outcome o;
    for (double L : Ls)
        for (int m : ms) {
            for (auto& cv : curves) cv.m = m;
            const auto report = beta_scan(mu, L, curves, alpha, betas, std::max<std::size_t>(1, c.count("jobs")));
            const std::string stem = "figure1_L" + tag(L) + "_m" + std::to_string(m);
            std::vector<XYSeries> series;
            for (std::size_t i = 0; i < taus.size(); ++i) {
                XYSeries s;
                s.name = "tau = " + std::to_string(taus[i]);
                for (std::size_t j = 0; j < betas.size(); ++j) {
                    s.x.push_back(betas[j]);
                    s.y.push_back(report.points[i * betas.size() + j].radius);
                }
                series.push_back(std::move(s));
            }
            AxesSpec axes{"radius vs beta, L = " + tag(L) + ", m = " + std::to_string(m) + ", alpha = " + tag(alpha),
                          "beta", "spectral radius"};
            o.files.emplace_back(stem + ".csv", report.to_csv());
            o.files.emplace_back(stem + ".svg", xy_svg(series, axes, true, true));
            out << stem << ": " << report.points.size() << " points\n";
        }
    return o;
}

Outcome cmd_run(const Config& c, const std::string& experiment, std::ostream& out) {
    const auto seed = c.values.at("seed").get<std::uint64_t>();
    const auto iters = c.count("iters");
    const double tol = c.scalar("tol");
    const auto jobs = std::max<std::size_t>(1, c.count("jobs"));
    const bool walltime = c.flag("walltime");
    const auto warmup = warmup_of(c);
    require(iters >= 1, "--iters must be >= 1");
    require(tol >= 0.0, "--tol must be >= 0");
    const auto dims = c.ints("dims");

    std::vector<ExperimentTrace> traces;
    AxesSpec axes;
    axes.x_label = "iteration k";
    if (experiment == "l1" || experiment == "lsp") {
        const auto taus = taus_of(c, 5);
        require(dims.size() == 2 && dims[0] >= 1 && dims[0] < dims[1], "--dims must be p,q with 1 <= p < q");
        const auto kind = parse_spectrum_kind(c.text("spectrum"));
        RunOptions o;
        o.beta = c.real("beta");
        o.inner_m = c.integer("m");
        o.iterations = iters;
        o.stop_tol = tol;
        o.warmup = warmup;
        o.record_walltime = walltime;
        o.jobs = jobs;
        require(o.beta > 0.0, "--beta must be > 0");
        require(o.inner_m >= 1, "--m must be >= 1");
        const auto problem = gen_sensing(dims[0], dims[1], kind, seed);
        if (experiment == "l1") {
            const double lambda = c.real("lambda");
            require(lambda >= 0.0, "--lambda must be >= 0");
            traces = run_l1(problem, lambda, taus, o).traces;
            axes.title = "l1, " + std::string(to_string(kind)) + " spectrum, lambda = " + tag(lambda);
            axes.y_label = "F - F*";
        } else {
            const double theta = c.real("theta");
            require(theta > 0.0, "--theta must be > 0");
            traces = run_lsp(problem, theta, taus, o).traces;
            axes.title = "LSP, " + std::string(to_string(kind)) + " spectrum, theta = " + tag(theta);
            axes.y_label = "stationarity";
        }
    } else if (experiment == "altproj") {
        const auto taus = taus_of(c, 5);
        require(dims.size() == 2 && dims[1] >= 1 && dims[1] < dims[0], "--dims must be n,d with 1 <= d < n");
        const double sigma = c.real("sigma");
        require(sigma >= 0.0 && sigma <= 1.0, "--sigma must lie in [0, 1]");
        AltProjOptions o;
        o.iterations = iters;
        o.stop_tol = tol;
        o.warmup = warmup;
        o.record_walltime = walltime;
        o.jobs = jobs;
        const auto pair = gen_subspaces(dims[0], dims[1], sigma, seed);
        for (auto& r : run_altproj(pair, taus, o)) traces.push_back(std::move(r.trace));
        axes.title = "alternating projections, sigma = " + tag(sigma);
        axes.y_label = "residual";
    } else if (experiment == "matfac") {
        const auto taus = taus_of(c, 5);
        require(dims.size() == 1 && dims[0] >= 1, "--dims must be n");
        const int rank = c.integer("rank");
        const double alpha = c.real("alpha");
        require(rank >= 1 && rank <= dims[0], "--rank must lie in 1..n");
        require(alpha > 0.0, "--alpha must be > 0");
        MatFacOptions o;
        o.iterations = iters;
        o.warmup = warmup;
        o.record_walltime = walltime;
        o.jobs = jobs;
        const auto problem = gen_matfac(dims[0], rank, alpha, seed);
        for (auto& r : run_matfac(problem, taus, o)) traces.push_back(std::move(r.trace));
        axes.title = "matrix factorization, r = " + std::to_string(rank) + ", alpha = " + tag(alpha);
        axes.y_label = "objective";
    }

    Outcome o;
    o.files.emplace_back(experiment + ".csv", traces_to_csv(traces));
    o.files.emplace_back(experiment + ".svg", traces_to_svg(traces, axes));
    for (const auto& t : traces) {
        out << experiment << " tau=" << t.tau << " steps=" << (t.points.empty() ? 0 : t.points.back().k)
            << " final " << t.metric_name << '=' << format_double(t.points.back().value)
            << (t.diverged ? " DIVERGED" : "") << '\n';
        if (t.diverged) o.code = exit_divergence;
    }
    return o;
}

Outcome cmd_accel(const Config& c, std::ostream& out) {
    const auto seed = c.values.at("seed").get<std::uint64_t>();
    const auto fixed_iters = c.count("iters");
    const int d = c.integer("dims");
    require(d >= 2, "--dims must be >= 2 (number of principal angles)");

    struct Case {
        std::string name;
        SubspacePair pair;
    };
    std::vector<Case> cases;
    if (c.has("angles")) {
        const auto angles = c.reals("angles");
        for (double a : angles) require(a > 0.0 && a <= std::numbers::pi / 2, "--angles must lie in (0, pi/2]");
        cases.push_back({"angles", subspaces_with_angles(2 * static_cast<Eigen::Index>(angles.size()), angles, seed)});
    } else {
        for (double rho : c.reals("rho")) {
            require(rho > 0.0 && rho < 1.0, "--rho values must lie in (0, 1)");
            // cos^2 of the angles spread over (0, 1 - rho]; the largest sets rho.
            std::vector<double> angles;
            for (int i = 1; i <= d; ++i)
                angles.push_back(std::acos(std::sqrt((1.0 - rho) * static_cast<double>(i) / d)));
            cases.push_back({"rho=" + tag(rho), subspaces_with_angles(2 * d, angles, seed)});
        }
    }

    std::ostringstream table;
    table << "case,rho,tau,scheme,xi,predicted_rate,fitted_rate,relative_error\n";
    std::vector<ExperimentTrace> traces;
    for (auto& cs : cases) {
        const auto spectrum = projection_spectrum(cs.pair);
        require(!spectrum.degenerate, "accel: subspaces coincide, rho undefined");
        std::vector<std::pair<std::string, std::vector<double>>> schemes{{"single", {1.0}}};
        if (spectrum.rho < 1.0) schemes.emplace_back("tuned2", tuned_xi2(spectrum.rho).xi());
        schemes.emplace_back("bdf2", bdf_coefficients(2).xi);
        std::vector<double> nontrivial;
        for (double l : spectrum.lambdas)
            if (l < 1.0 - ProjectionSpectrum::unit_tolerance) nontrivial.push_back(l);
        schemes.emplace_back("search3", tuned_xi_search(nontrivial, 3).xi);
        for (const auto& [name, xi] : schemes) {
            const double predicted = predicted_altproj_rate(spectrum, xi);
            std::size_t K = fixed_iters;
            if (K == 0) {
                const double r = std::clamp(predicted, 1e-3, 1.0 - 1e-6);
                K = static_cast<std::size_t>(std::clamp(std::ceil(120.0 / -std::log(r)), 60.0, 20000.0));
            }
            AltProjOptions o;
            o.iterations = K;
            o.warmup = WarmupPolicy::repeat;
            o.label = "altproj_accel";
            auto run = run_altproj_xi(cs.pair, xi, o);
            const auto fit = fit_rate(run.trace);
            std::string xs;
            for (std::size_t i = 0; i < xi.size(); ++i) xs += (i ? " " : "") + format_double(xi[i]);
            const double rel = std::abs(fit.rate - predicted) / std::max(predicted, 1e-300);
            table << cs.name << ',' << format_double(spectrum.rho) << ',' << xi.size() << ',' << name << ',' << xs
                  << ',' << format_double(predicted) << ',' << format_double(fit.rate) << ',' << format_double(rel)
                  << '\n';
            out << cs.name << " " << name << " xi=[" << xs << "] predicted=" << format_double(predicted)
                << " fitted=" << format_double(fit.rate) << '\n';
            traces.push_back(std::move(run.trace));
        }
    }
    Outcome o;
    o.files.emplace_back("accel.csv", table.str());
    o.files.emplace_back("accel_traces.csv", traces_to_csv(traces));
    o.files.emplace_back("accel.svg", traces_to_svg(traces, {"alternating projections, tuned weights", "k", "residual"}));
    return o;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::string> env_seed) {
    CLI::App app{"Multistep proximal point methods: stability tables, figures and experiments", "proxflow"};
    app.require_subcommand(1, 1);
    std::map<std::string, std::string> raw;
    std::string config_path;
    std::string experiment;

    auto add_keys = [&](CLI::App* sub, std::initializer_list<const char*> names) {
        sub->add_option("--config", config_path, "JSON config file; flags override its values");
        for (const char* n : names) {
            const Key* k = find_key(n);
            if (k->kind == Kind::flag)
                sub->add_flag_callback(std::string("--") + n, [&raw, n] { raw[n] = "1"; }, k->help);
            else
                sub->add_option_function<std::string>(std::string("--") + n, [&raw, n](const std::string& v) { raw[n] = v; }, k->help);
        }
    };
    auto* tables = app.add_subcommand("tables", "reproduce the step-size and optimal-rate tables");
    add_keys(tables, {"only", "out", "jobs", "seed"});
    auto* figure1 = app.add_subcommand("figure1", "radius of convergence over beta, one panel per (L, m)");
    add_keys(figure1, {"beta", "m", "L", "mu", "alpha", "tau", "out", "jobs", "seed"});
    auto* runc = app.add_subcommand("run", "run an application experiment: l1 | lsp | altproj | matfac");
    runc->add_option("experiment", experiment, "l1 | lsp | altproj | matfac")->required();
    add_keys(runc, {"tau", "beta", "m", "alpha", "lambda", "theta", "sigma", "rank", "dims", "spectrum", "seed", "iters",
                    "tol", "warmup", "walltime", "out", "jobs"});
    auto* accel = app.add_subcommand("accel", "tuned weights for alternating projections and rate verification");
    add_keys(accel, {"rho", "angles", "dims", "seed", "iters", "out", "jobs"});

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    Config cfg;
    std::vector<std::string> outputs;
    try {
        if (command == "run") {
            bool known = false;
            for (const char* e : kExperiments) known = known || experiment == e;
            if (!known) throw UsageError("unknown experiment '" + experiment + "'; valid: l1, lsp, altproj, matfac");
        }
        json resolved = defaults_for(command, experiment);
        if (env_seed) {
            const long long s = parse_int(*env_seed, "seed (PROXFLOW_SEED)");
            require(s >= 0, "PROXFLOW_SEED must be >= 0");
            resolved["seed"] = s;
        }
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw UsageError("cannot read config file '" + config_path + "'");
            json file;
            try {
                file = json::parse(is);
            } catch (const json::parse_error& e) {
                throw UsageError("config file is not valid JSON: " + std::string(e.what()));
            }
            if (!file.is_object()) throw UsageError("config file must hold a JSON object");
            for (auto it = file.begin(); it != file.end(); ++it) {
                const Key* k = find_key(it.key());
                if (!k) throw UsageError("unknown config key '" + it.key() + "'");
                resolved[it.key()] = normalize(*k, it.value());
            }
        }
        for (const auto& [name, value] : raw) resolved[name] = flag_value(*find_key(name), value);
        cfg.values = resolved;

        Outcome result;
        if (command == "tables") result = cmd_tables(cfg, out);
        else if (command == "figure1") result = cmd_figure1(cfg, out);
        else if (command == "run") result = cmd_run(cfg, experiment, out);
        else result = cmd_accel(cfg, out);

        // Everything is computed before the first byte is written.
        const std::filesystem::path dir = cfg.text("out");
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
        json meta;
        meta["command"] = command;
        if (command == "run") meta["experiment"] = experiment;
        meta["config"] = resolved;
        meta["exit_code"] = result.code;
        json files = json::array();
        for (const auto& f : result.files) files.push_back(f.first);
        meta["outputs"] = files;
        for (const auto& [name, content] : result.files) write_text_file(dir / name, content);
        write_text_file(dir / "run.json", meta.dump(2) + "\n");
        return result.code;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

}  // namespace proxflow::cli
