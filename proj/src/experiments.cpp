#include "proxflow/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <tuple>

#include "proxflow/format.hpp"
#include "proxflow/parallel.hpp"
#include "proxflow/prox.hpp"

namespace proxflow {

std::string_view to_string(SpectrumKind kind) {
    switch (kind) {
        case SpectrumKind::uniform: return "uniform";
        case SpectrumKind::inverse_r: return "inverse_r";
        case SpectrumKind::exp_decay: return "exp_decay";
    }
    return "unknown";
}

SpectrumKind parse_spectrum_kind(std::string_view name) {
    if (name == "uniform" || name == "unif") return SpectrumKind::uniform;
    if (name == "inverse_r" || name == "1/r") return SpectrumKind::inverse_r;
    if (name == "exp_decay" || name == "exp") return SpectrumKind::exp_decay;
    throw ValidationError("unknown spectrum kind '" + std::string(name) + "' (uniform | inverse_r | exp_decay)");
}

// ---------------------------------------------------------------------------
// generators

SensingProblem gen_sensing(Eigen::Index p, Eigen::Index q, SpectrumKind kind, std::uint64_t seed,
                           const SensingOptions& options) {
    if (p < 1 || p >= q) throw ValidationError("gen_sensing: need 1 <= p < q");
    if (!(options.noise >= 0.0)) throw ValidationError("gen_sensing: noise must be >= 0");
    const Eigen::Index nnz = options.nonzeros.value_or(std::max<Eigen::Index>(1, p / 5));
    if (nnz < 0 || nnz > q) throw ValidationError("gen_sensing: nonzeros must lie in [0, q]");

    Rng rng(seed);
    SensingProblem out;
    out.spectrum_kind = kind;
    out.seed = seed;
    out.singular_values.resize(p);
    for (Eigen::Index r = 0; r < p; ++r) {
        switch (kind) {
            case SpectrumKind::uniform: out.singular_values[r] = rng.uniform(0.5, 1.0); break;
            case SpectrumKind::inverse_r: out.singular_values[r] = 1.0 / static_cast<double>(r + 1); break;
            case SpectrumKind::exp_decay: out.singular_values[r] = std::exp(-static_cast<double>(r)); break;
        }
    }
    std::sort(out.singular_values.begin(), out.singular_values.end(), std::greater<>());
    const Matrix U = random_orthonormal(rng, p, p);
    const Matrix V = random_orthonormal(rng, q, p);
    out.A = U * out.singular_values.asDiagonal() * V.transpose();

    // Support: partial Fisher-Yates over the indices.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(q));
    for (Eigen::Index i = 0; i < q; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < nnz; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.index(static_cast<std::size_t>(q - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    out.x_true = Vector::Zero(q);
    for (Eigen::Index i = 0; i < nnz; ++i) out.x_true[idx[static_cast<std::size_t>(i)]] = rng.normal();
    out.b = out.A * out.x_true;
    if (options.noise > 0.0) out.b += options.noise * rng.normal_vector(p);
    return out;
}

SubspacePair gen_subspaces(Eigen::Index n, Eigen::Index d, double sigma, std::uint64_t seed) {
    if (d < 1 || d >= n) throw ValidationError("gen_subspaces: need 1 <= d < n");
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw ValidationError("gen_subspaces: sigma must lie in [0, 1]");
    constexpr int kRetries = 3;
    for (int attempt = 0; attempt <= kRetries; ++attempt) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
        Rng rng(s);
        SubspacePair pair;
        pair.C1 = rng.normal_matrix(n, d);
        const Matrix Z = rng.normal_matrix(n, d);
        pair.C2 = (1.0 - sigma) * pair.C1 + sigma * Z;
        pair.sigma = sigma;
        pair.seed = s;
        try {
            (void)orthonormal_basis(pair.C1);
            (void)orthonormal_basis(pair.C2);
            return pair;
        } catch (const RankError&) {
            if (attempt == kRetries) throw;
        }
    }
    throw Error("gen_subspaces: unreachable");
}

SubspacePair subspaces_with_angles(Eigen::Index n, const std::vector<double>& angles, std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(angles.size());
    if (d < 1 || 2 * d > n) throw ValidationError("subspaces_with_angles: need 1 <= d and 2d <= n");
    for (double t : angles)
        if (!(t >= 0.0 && t <= std::numbers::pi / 2)) throw ValidationError("subspaces_with_angles: angles in [0, pi/2]");
    Rng rng(seed);
    const Matrix frame = random_orthonormal(rng, n, 2 * d);
    SubspacePair pair;
    pair.C1 = frame.leftCols(d);
    pair.C2.resize(n, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double t = angles[static_cast<std::size_t>(i)];
        pair.C2.col(i) = std::cos(t) * frame.col(i) + std::sin(t) * frame.col(d + i);
    }
    pair.sigma = 0.0;
    pair.seed = seed;
    return pair;
}

Vector principal_cosines(const SubspacePair& pair) {
    const Matrix B1 = orthonormal_basis(pair.C1);
    const Matrix B2 = orthonormal_basis(pair.C2);
    Eigen::JacobiSVD<Matrix> svd(B1.transpose() * B2);
    Vector s = svd.singularValues();
    for (auto& v : s) v = std::min(v, 1.0);
    return s;
}

MatFacProblem gen_matfac(Eigen::Index n, int rank, double alpha, std::uint64_t seed) {
    if (n < 1) throw ValidationError("gen_matfac: n must be >= 1");
    if (rank < 1 || rank > n) throw ValidationError("gen_matfac: need 1 <= rank <= n");
    if (!(alpha > 0.0)) throw ValidationError("gen_matfac: alpha must be > 0");
    Rng rng(seed);
    MatFacProblem p;
    p.R = rng.normal_matrix(n, n);
    p.U0 = rng.normal_matrix(n, rank);
    p.V0 = rng.normal_matrix(n, rank);
    p.rank = rank;
    p.alpha = alpha;
    p.seed = seed;
    return p;
}

// ---------------------------------------------------------------------------
// runners

std::vector<double> runner_xi(int tau) {
    if (tau == 5) return {12.0 / 137, -75.0 / 137, 200.0 / 137, -300.0 / 137, 300.0 / 137};
    return bdf_coefficients(tau).xi;
}

namespace {

void validate_taus(const std::vector<int>& taus) {
    if (taus.empty()) throw ValidationError("tau list must be non-empty");
    for (int t : taus)
        if (t < 1 || t > 5) throw UnsupportedOrderError("tau " + std::to_string(t) + " unsupported (1..5)");
}

void validate_run_options(const RunOptions& o) {
    if (!(o.beta > 0.0)) throw ValidationError("beta must be > 0");
    if (o.inner_m < 1) throw ValidationError("inner m must be >= 1");
    if (o.iterations < 1) throw ValidationError("iteration budget must be >= 1");
    if (!(o.stop_tol >= 0.0)) throw ValidationError("stop tolerance must be >= 0");
}

MultistepConfig runner_config(int tau, const RunOptions& o) {
    MultistepConfig cfg;
    cfg.xi = runner_xi(tau);
    cfg.beta = o.beta;
    cfg.inner_m = o.inner_m;
    cfg.warmup = o.warmup;
    return cfg;
}

double sq(double v) { return v * v; }

}  // namespace

CompositeObjective sensing_objective(const SensingProblem& problem, ProxOracle h, double mu) {
    auto A = std::make_shared<const Matrix>(problem.A);
    auto b = std::make_shared<const Vector>(problem.b);
    CompositeObjective F;
    F.dim = problem.A.cols();
    F.f_value = [A, b](const Vector& x) { return 0.5 * (*A * x - *b).squaredNorm(); };
    F.f_gradient = [A, b](const Vector& x) { return Vector(A->transpose() * (*A * x - *b)); };
    F.h = std::move(h);
    F.L = sq(problem.singular_values.maxCoeff());
    F.mu = mu;
    return F;
}

double l1_reference_optimum(const SensingProblem& problem, double lambda, const RunOptions& options) {
    const auto F = sensing_objective(problem, ProxOracle::l1(lambda), 0.0);
    MultistepConfig cfg = MultistepConfig::bdf(1, options.beta, 50);
    cfg.stop_metric = StopMetric::none;
    const auto trace = run(F, cfg, Vector::Zero(F.dim), 10 * options.iterations);
    double best = trace.records.front().objective;
    for (const auto& r : trace.records) best = std::min(best, r.objective);
    return best;
}

ExperimentTrace to_experiment_trace(const RunTrace& run, std::string experiment, std::uint64_t seed, int tau,
                                    std::string metric_name, bool record_walltime) {
    ExperimentTrace t;
    t.experiment = std::move(experiment);
    t.seed = seed;
    t.tau = tau;
    t.metric_name = std::move(metric_name);
    t.diverged = run.diverged;
    double clock = 0.0;
    for (const auto& r : run.records) {
        std::optional<double> v;
        if (t.metric_name == "objective_gap") v = r.objective_gap;
        else if (t.metric_name == "stationarity") v = r.stationarity;
        else if (t.metric_name == "iterate_error") v = r.iterate_error;
        else if (t.metric_name == "objective") v = r.objective;
        if (!v) throw ValidationError("trace has no metric '" + t.metric_name + "'");
        clock += r.walltime_s;
        t.points.push_back({r.k, *v, record_walltime ? clock : 0.0});
    }
    return t;
}

namespace {

SensingResult run_sensing(const CompositeObjective& F, const std::vector<int>& taus, const RunOptions& options,
                          std::uint64_t seed, const std::string& default_label, const std::string& metric,
                          StopMetric stop_metric) {
    const Vector x0 = options.x0 ? *options.x0 : Vector::Zero(F.dim);
    if (x0.size() != F.dim) throw ValidationError("sensing run: x0 has wrong dimension");
    SensingResult out;
    if (F.f_star) out.f_star = *F.f_star;
    out.runs.resize(taus.size());
    parallel_for(taus.size(), options.jobs, [&](std::size_t i) {
        MultistepConfig cfg = runner_config(taus[i], options);
        cfg.stop_metric = stop_metric;
        cfg.record_stationarity = stop_metric == StopMetric::stationarity;
        try {
            out.runs[i] = run(F, cfg, x0, options.iterations, options.stop_tol);
        } catch (const RunDivergence& e) {
            out.runs[i] = e.trace();
            out.runs[i].diverged = true;
        }
    });
    const std::string label = options.label.empty() ? default_label : options.label;
    for (std::size_t i = 0; i < taus.size(); ++i)
        out.traces.push_back(to_experiment_trace(out.runs[i], label, seed, taus[i], metric, options.record_walltime));
    return out;
}

}  // namespace

SensingResult run_l1(const SensingProblem& problem, double lambda, const std::vector<int>& taus,
                     const RunOptions& options) {
    if (!(lambda >= 0.0)) throw ValidationError("run_l1: lambda must be >= 0");
    validate_taus(taus);
    validate_run_options(options);
    auto F = sensing_objective(problem, ProxOracle::l1(lambda), 0.0);
    F.f_star = l1_reference_optimum(problem, lambda, options);
    return run_sensing(F, taus, options, problem.seed, "l1", "objective_gap", StopMetric::objective_gap);
}

SensingResult run_lsp(const SensingProblem& problem, double theta, const std::vector<int>& taus,
                      const RunOptions& options) {
    if (!(theta > 0.0)) throw ValidationError("run_lsp: theta must be > 0");
    validate_taus(taus);
    validate_run_options(options);
    const auto F = sensing_objective(problem, ProxOracle::lsp(theta), -1.0 / (theta * theta));
    return run_sensing(F, taus, options, problem.seed, "lsp", "stationarity", StopMetric::stationarity);
}

// ---------------------------------------------------------------------------

AltProjRun run_altproj_xi(const SubspacePair& pair, const std::vector<double>& xi, const AltProjOptions& options) {
    if (xi.empty()) throw ValidationError("run_altproj: xi must be non-empty");
    double sum = 0.0;
    for (double v : xi) sum += v;
    if (std::abs(sum - 1.0) > Tolerances::affine_sum) throw ValidationError("run_altproj: xi must sum to 1");
    if (!(options.stop_tol >= 0.0)) throw ValidationError("run_altproj: stop tolerance must be >= 0");

    const SubspaceProjector P1(orthonormal_basis(pair.C1));
    const SubspaceProjector P2(orthonormal_basis(pair.C2));
    const Eigen::Index n = pair.C1.rows();
    Vector x0;
    if (options.x0) {
        x0 = *options.x0;
        if (x0.size() != n) throw ValidationError("run_altproj: x0 has wrong dimension");
    } else {
        Rng rng(pair.seed + 1000003);
        x0 = rng.normal_vector(n);
    }

    AltProjRun out;
    out.xi = xi;
    auto& t = out.trace;
    t.experiment = options.label;
    t.seed = pair.seed;
    t.tau = static_cast<int>(xi.size());
    t.metric_name = "residual";
    auto residual = [&](const Vector& x) { return (x - P1(P2(x))).norm(); };

    IterateHistory history(xi.size());
    const std::size_t prefill = options.warmup == WarmupPolicy::repeat ? xi.size() : 1;
    for (std::size_t i = 0; i < prefill; ++i) history.push(x0);
    double clock = 0.0;
    t.points.push_back({0, residual(x0), 0.0});
    if (t.points.back().value <= options.stop_tol) return out;
    for (std::size_t k = 1; k <= options.iterations; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const Vector mixed = mix_with_warmup(history, xi, options.warmup);
        Vector x = P2(P1(mixed));
        clock += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!x.allFinite() || x.norm() > Tolerances::divergence_norm) {
            t.diverged = true;
            break;
        }
        const double r = residual(x);
        t.points.push_back({k, r, options.record_walltime ? clock : 0.0});
        history.push(std::move(x));
        if (r <= options.stop_tol) break;
    }
    return out;
}

std::vector<AltProjRun> run_altproj(const SubspacePair& pair, const std::vector<int>& taus,
                                    const AltProjOptions& options) {
    validate_taus(taus);
    std::vector<AltProjRun> out(taus.size());
    parallel_for(taus.size(), options.jobs,
                 [&](std::size_t i) { out[i] = run_altproj_xi(pair, runner_xi(taus[i]), options); });
    return out;
}

// ---------------------------------------------------------------------------

Matrix ridge_block_solve(const Matrix& R, const Matrix& W, const Matrix& anchor, double alpha) {
    if (!(alpha > 0.0)) throw ValidationError("ridge_block_solve: alpha must be > 0");
    if (R.cols() != W.rows() || anchor.rows() != R.rows() || anchor.cols() != W.cols())
        throw ValidationError("ridge_block_solve: dimension mismatch");
    // U (W^T W + I / alpha) = R W + anchor / alpha; the Gram matrix is symmetric.
    Matrix G = W.transpose() * W;
    G.diagonal().array() += 1.0 / alpha;
    const Matrix rhs = R * W + anchor / alpha;
    return solve_linear(G, Matrix(rhs.transpose())).transpose();
}

MatFacRun run_matfac_xi(const MatFacProblem& problem, const std::vector<double>& xi, int tau_label,
                        const MatFacOptions& options) {
    if (!(problem.alpha > 0.0)) throw ValidationError("run_matfac: alpha must be > 0");
    if (xi.empty()) throw ValidationError("run_matfac: xi must be non-empty");
    MatFacRun out;
    auto& t = out.trace;
    t.experiment = options.label;
    t.seed = problem.seed;
    t.tau = tau_label;
    t.metric_name = "objective";

    // Blocks are stored flattened so the vector history and mixing apply unchanged.
    const Eigen::Index n = problem.U0.rows();
    const Eigen::Index r = problem.U0.cols();
    auto flat = [](const Matrix& M) { return Vector(Eigen::Map<const Vector>(M.data(), M.size())); };
    auto unflat = [&](const Vector& v, Eigen::Index rows) { return Matrix(Eigen::Map<const Matrix>(v.data(), rows, r)); };

    IterateHistory hu(xi.size());
    IterateHistory hv(xi.size());
    const std::size_t prefill = options.warmup == WarmupPolicy::repeat ? xi.size() : 1;
    for (std::size_t i = 0; i < prefill; ++i) {
        hu.push(flat(problem.U0));
        hv.push(flat(problem.V0));
    }
    out.U = problem.U0;
    out.V = problem.V0;
    t.points.push_back({0, problem.objective(out.U, out.V), 0.0});
    double clock = 0.0;
    for (std::size_t k = 1; k <= options.iterations; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const Matrix Ut = unflat(mix_with_warmup(hu, xi, options.warmup), n);
        const Matrix Vt = unflat(mix_with_warmup(hv, xi, options.warmup), problem.R.cols());
        Matrix U, V;
        try {
            U = ridge_block_solve(problem.R, Vt, Ut, problem.alpha);
            V = ridge_block_solve(problem.R.transpose(), U, Vt, problem.alpha);
        } catch (const Error&) {
            t.diverged = true;
            break;
        }
        clock += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double obj = problem.objective(U, V);
        if (!std::isfinite(obj) || U.norm() > Tolerances::divergence_norm || V.norm() > Tolerances::divergence_norm) {
            t.diverged = true;
            break;
        }
        t.points.push_back({k, obj, options.record_walltime ? clock : 0.0});
        hu.push(flat(U));
        hv.push(flat(V));
        out.U = std::move(U);
        out.V = std::move(V);
    }
    return out;
}

std::vector<MatFacRun> run_matfac(const MatFacProblem& problem, const std::vector<int>& taus,
                                  const MatFacOptions& options) {
    validate_taus(taus);
    std::vector<MatFacRun> out(taus.size());
    parallel_for(taus.size(), options.jobs,
                 [&](std::size_t i) { out[i] = run_matfac_xi(problem, runner_xi(taus[i]), taus[i], options); });
    return out;
}

std::optional<std::size_t> iterations_to(const ExperimentTrace& trace, double target) {
    for (const auto& p : trace.points)
        if (p.value <= target) return p.k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// serialization

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

void check_label(const std::string& s, const char* what) {
    if (s.find_first_of(",\r\n\"") != std::string::npos)
        throw ValidationError(std::string(what) + " must not contain commas, quotes or newlines: " + s);
}

}  // namespace

std::string traces_to_csv(const std::vector<ExperimentTrace>& traces) {
    if (traces.empty()) throw ValidationError("emit_csv: no traces");
    std::string out = "experiment,seed,tau,k,metric_name,metric_value,walltime_s,diverged\n";
    for (const auto& t : traces) {
        check_label(t.experiment, "experiment");
        check_label(t.metric_name, "metric name");
        const std::string prefix = t.experiment + ',' + std::to_string(t.seed) + ',' + std::to_string(t.tau) + ',';
        const std::string suffix = t.diverged ? ",1\n" : ",0\n";
        for (const auto& p : t.points) {
            out += prefix;
            out += std::to_string(p.k);
            out += ',';
            out += t.metric_name;
            out += ',';
            out += format_double(p.value);
            out += ',';
            out += format_double(p.walltime_s);
            out += suffix;
        }
    }
    return out;
}

void emit_csv(const std::vector<ExperimentTrace>& traces, const std::filesystem::path& path) {
    write_text_file(path, traces_to_csv(traces));
}

std::vector<ExperimentTrace> parse_csv(std::string_view text) {
    std::vector<ExperimentTrace> out;
    std::map<std::tuple<std::string, std::uint64_t, int, std::string>, std::size_t> index;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            if (line != "experiment,seed,tau,k,metric_name,metric_value,walltime_s,diverged")
                throw ValidationError("parse_csv: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t s = 0;
        while (true) {
            const std::size_t c = line.find(',', s);
            f.emplace_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
            if (c == std::string_view::npos) break;
            s = c + 1;
        }
        if (f.size() != 8) throw ValidationError("parse_csv: line " + std::to_string(line_no) + " has wrong arity");
        try {
            const auto seed = static_cast<std::uint64_t>(std::stoull(f[1]));
            const int tau = std::stoi(f[2]);
            auto key = std::make_tuple(f[0], seed, tau, f[4]);
            auto it = index.find(key);
            if (it == index.end()) {
                ExperimentTrace t;
                t.experiment = f[0];
                t.seed = seed;
                t.tau = tau;
                t.metric_name = f[4];
                out.push_back(std::move(t));
                it = index.emplace(key, out.size() - 1).first;
            }
            auto& t = out[it->second];
            t.points.push_back({static_cast<std::size_t>(std::stoull(f[3])), std::strtod(f[5].c_str(), nullptr),
                                std::strtod(f[6].c_str(), nullptr)});
            t.diverged = t.diverged || f[7] == "1";
        } catch (const std::logic_error&) {
            throw ValidationError("parse_csv: malformed number on line " + std::to_string(line_no));
        }
    }
    return out;
}

std::vector<ExperimentTrace> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_csv(ss.str());
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

}  // namespace

std::string xy_svg(const std::vector<XYSeries>& series, const AxesSpec& axes, bool log_x, bool log_y) {
    if (series.empty()) throw ValidationError("emit_svg: no series");
    constexpr double W = 720, H = 450, left = 80, right = 170, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;

    auto usable = [](double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw ValidationError("emit_svg: x and y lengths differ");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], log_x) || !usable(s.y[i], log_y)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmax >= xmin)) {
        xmin = log_x ? 1.0 : 0.0;
        xmax = log_x ? 10.0 : 1.0;
    }
    if (!(ymax >= ymin)) {
        ymin = log_y ? 1e-16 : 0.0;
        ymax = 1.0;
    }
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    double x0 = tx(xmin), x1 = tx(xmax), y0 = ty(ymin), y1 = ty(ymax);
    if (log_y) {
        y0 = std::floor(y0);
        y1 = std::ceil(y1);
    }
    if (log_x) {
        x0 = std::floor(x0);
        x1 = std::ceil(x1);
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    auto px = [&](double v) { return left + pw * (tx(v) - x0) / (x1 - x0); };
    auto py = [&](double v) { return top + ph * (y1 - ty(v)) / (y1 - y0); };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
       << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(axes.title) << "</text>\n"
       << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    auto tick_label = [](double t, bool log) {
        if (log) return "1e" + std::to_string(static_cast<int>(std::lround(t)));
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", t);
        return std::string(buf);
    };
    const int y_ticks = log_y ? static_cast<int>(y1 - y0) : 5;
    const int y_stride = std::max(1, y_ticks / 8);
    for (int i = 0; i <= y_ticks; i += y_stride) {
        const double t = y0 + (y1 - y0) * i / y_ticks;
        const double y = top + ph * (y1 - t) / (y1 - y0);
        os << "<line x1=\"" << left << "\" y1=\"" << fixed2(y) << "\" x2=\"" << left + pw << "\" y2=\"" << fixed2(y)
           << "\" stroke=\"#dddddd\"/>\n"
           << "<text x=\"" << left - 6 << "\" y=\"" << fixed2(y + 4) << "\" text-anchor=\"end\">" << tick_label(t, log_y)
           << "</text>\n";
    }
    const int x_ticks = log_x ? static_cast<int>(x1 - x0) : 5;
    const int x_stride = std::max(1, x_ticks / 8);
    for (int i = 0; i <= x_ticks; i += x_stride) {
        const double t = x0 + (x1 - x0) * i / x_ticks;
        os << "<text x=\"" << fixed2(left + pw * (t - x0) / (x1 - x0)) << "\" y=\"" << top + ph + 18
           << "\" text-anchor=\"middle\">" << tick_label(t, log_x) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">" << xml_escape(axes.x_label) << "</text>\n"
       << "<text x=\"20\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << top + ph / 2
       << ")\">" << xml_escape(axes.y_label) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = kPalette[i % std::size(kPalette)];
        std::string pts;
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            if (!usable(s.x[j], log_x) || !usable(s.y[j], log_y)) continue;
            pts += fixed2(px(s.x[j])) + ',' + fixed2(py(s.y[j])) + ' ';
        }
        if (!pts.empty()) pts.pop_back();
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(i);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 36 << "\" y2=\""
           << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly << "\">" << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string traces_to_svg(const std::vector<ExperimentTrace>& traces, const AxesSpec& axes) {
    if (traces.empty()) throw ValidationError("emit_svg: no traces");
    std::vector<XYSeries> series;
    for (const auto& t : traces) {
        XYSeries s;
        s.name = "tau = " + std::to_string(t.tau) + (t.diverged ? " (diverged)" : "");
        for (const auto& p : t.points) {
            s.x.push_back(static_cast<double>(p.k));
            s.y.push_back(p.value);
        }
        series.push_back(std::move(s));
    }
    return xy_svg(series, axes, false, true);
}

void emit_svg(const std::vector<ExperimentTrace>& traces, const std::filesystem::path& path, const AxesSpec& axes) {
    write_text_file(path, traces_to_svg(traces, axes));
}

}  // namespace proxflow
