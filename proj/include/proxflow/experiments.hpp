#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proxflow/multistep.hpp"
#include "proxflow/numerics.hpp"

namespace proxflow {

enum class SpectrumKind { uniform, inverse_r, exp_decay };
std::string_view to_string(SpectrumKind kind);
SpectrumKind parse_spectrum_kind(std::string_view name);

struct SensingOptions {
    std::optional<Eigen::Index> nonzeros;  // default p / 5 (at least 1)
    double noise = 0.0;                     // std of Gaussian noise added to b
};

/// min 1/2 ||A x - b||^2 + h(x) with A = U diag(sigma) V^T.
struct SensingProblem {
    Matrix A;
    Vector b;
    Vector x_true;
    Vector singular_values;  // descending, length p
    SpectrumKind spectrum_kind = SpectrumKind::uniform;
    std::uint64_t seed = 0;
};

/// uniform: sigma_r ~ U[0.5, 1]; inverse_r: 1/r; exp_decay: exp(-(r-1)). Sorted descending.
SensingProblem gen_sensing(Eigen::Index p, Eigen::Index q, SpectrumKind kind, std::uint64_t seed,
                           const SensingOptions& options = {});

struct SubspacePair {
    Matrix C1;
    Matrix C2;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// C1, Z with i.i.d. N(0,1) entries, C2 = (1 - sigma) C1 + sigma Z. A rank-deficient draw is
/// regenerated with seed + 1, at most 3 times.
SubspacePair gen_subspaces(Eigen::Index n, Eigen::Index d, double sigma, std::uint64_t seed);

/// Pair with exact principal angles: C1 = [e_1 .. e_d], C2 = [cos t_i e_i + sin t_i e'_i] in a
/// random orthonormal frame of R^n (needs n >= 2d).
SubspacePair subspaces_with_angles(Eigen::Index n, const std::vector<double>& angles, std::uint64_t seed);

/// Cosines of the principal angles between col(C1) and col(C2), descending.
Vector principal_cosines(const SubspacePair& pair);

/// min 1/2 ||U V^T - R||_F^2 over U, V in R^{n x r}.
struct MatFacProblem {
    Matrix R;
    int rank = 1;
    double alpha = 1.0;  // proximal step of each block solve
    Matrix U0;
    Matrix V0;
    std::uint64_t seed = 0;

    double objective(const Matrix& U, const Matrix& V) const { return 0.5 * (U * V.transpose() - R).squaredNorm(); }
};

/// R and the starting factors U0, V0 all have i.i.d. N(0,1) entries.
MatFacProblem gen_matfac(Eigen::Index n, int rank, double alpha, std::uint64_t seed);

struct TracePoint {
    std::size_t k = 0;
    double value = 0.0;
    double walltime_s = 0.0;
};

/// One metric sequence of one run; the unit of CSV/SVG emission.
struct ExperimentTrace {
    std::string experiment;
    std::uint64_t seed = 0;
    int tau = 1;
    std::string metric_name;
    std::vector<TracePoint> points;
    bool diverged = false;
};

/// Shared knobs of the runners.
struct RunOptions {
    double beta = 1.0;
    int inner_m = 1;
    std::size_t iterations = 1000;
    double stop_tol = 0.0;       // stop when the trace metric falls to this value; 0 runs all steps
    WarmupPolicy warmup = WarmupPolicy::ramp;
    bool record_walltime = false;  // off keeps outputs byte-reproducible
    std::size_t jobs = 1;
    std::string label;             // experiment column; runner name when empty
    std::optional<Vector> x0;      // default: zero
};

/// Mixing weights used by the runners for order tau: BDF for 1..4, and the order-5 BDF rule
/// supplied as custom weights.
std::vector<double> runner_xi(int tau);

struct SensingResult {
    double f_star = 0.0;           // reference optimum (objective_gap runs only)
    std::vector<RunTrace> runs;    // one per tau, in input order
    std::vector<ExperimentTrace> traces;
};

CompositeObjective sensing_objective(const SensingProblem& problem, ProxOracle h, double mu);

/// Reference optimum: a single-step run with 10x the budget and m = 50 inner steps.
double l1_reference_optimum(const SensingProblem& problem, double lambda, const RunOptions& options);

/// lambda ||x||_1 regularizer, metric F - F*.
SensingResult run_l1(const SensingProblem& problem, double lambda, const std::vector<int>& taus,
                     const RunOptions& options);

/// sum log(1 + |x_i| / theta) regularizer, metric eps_beta (stationarity).
SensingResult run_lsp(const SensingProblem& problem, double theta, const std::vector<int>& taus,
                      const RunOptions& options);

struct AltProjOptions {
    std::size_t iterations = 200;
    double stop_tol = 0.0;  // absolute residual
    WarmupPolicy warmup = WarmupPolicy::ramp;
    bool record_walltime = false;
    std::size_t jobs = 1;
    std::string label = "altproj";
    std::optional<Vector> x0;  // default: seeded Gaussian
};

struct AltProjRun {
    std::vector<double> xi;
    ExperimentTrace trace;  // metric residual = ||(I - P1 P2) x||
};

/// y = P1(x~), x = P2(y), x~ mixed from past x with weights xi.
AltProjRun run_altproj_xi(const SubspacePair& pair, const std::vector<double>& xi, const AltProjOptions& options);
std::vector<AltProjRun> run_altproj(const SubspacePair& pair, const std::vector<int>& taus,
                                    const AltProjOptions& options);

struct MatFacOptions {
    std::size_t iterations = 200;
    WarmupPolicy warmup = WarmupPolicy::ramp;
    bool record_walltime = false;
    std::size_t jobs = 1;
    std::string label = "matfac";
};

struct MatFacRun {
    ExperimentTrace trace;  // metric objective = 1/2 ||U V^T - R||^2
    Matrix U;
    Matrix V;
};

/// Alternating exact ridge solves on the mixed blocks; U uses V~ and V uses the new U.
MatFacRun run_matfac_xi(const MatFacProblem& problem, const std::vector<double>& xi, int tau_label,
                        const MatFacOptions& options);
std::vector<MatFacRun> run_matfac(const MatFacProblem& problem, const std::vector<int>& taus,
                                  const MatFacOptions& options);

/// Block solves: argmin_U 1/2 ||U W^T - R||^2 + ||U - anchor||^2 / (2 alpha).
Matrix ridge_block_solve(const Matrix& R, const Matrix& W, const Matrix& anchor, double alpha);

ExperimentTrace to_experiment_trace(const RunTrace& run, std::string experiment, std::uint64_t seed, int tau,
                                    std::string metric_name, bool record_walltime);

/// First k at which the metric is <= target, if any.
std::optional<std::size_t> iterations_to(const ExperimentTrace& trace, double target);

/// Header experiment,seed,tau,k,metric_name,metric_value,walltime_s,diverged; LF endings.
std::string traces_to_csv(const std::vector<ExperimentTrace>& traces);
void emit_csv(const std::vector<ExperimentTrace>& traces, const std::filesystem::path& path);
std::vector<ExperimentTrace> parse_csv(std::string_view text);
std::vector<ExperimentTrace> read_csv(const std::filesystem::path& path);

struct AxesSpec {
    std::string title;
    std::string x_label = "k";
    std::string y_label;
};

struct XYSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Self-contained SVG line plot; points that are non-finite (or non-positive on a log axis) are skipped.
std::string xy_svg(const std::vector<XYSeries>& series, const AxesSpec& axes, bool log_x, bool log_y);

/// Static line plot, log-scale y, one polyline per trace, legend by tau.
std::string traces_to_svg(const std::vector<ExperimentTrace>& traces, const AxesSpec& axes);
void emit_svg(const std::vector<ExperimentTrace>& traces, const std::filesystem::path& path, const AxesSpec& axes);

/// Writes `content` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace proxflow
