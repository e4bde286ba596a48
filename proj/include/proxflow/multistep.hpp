#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "proxflow/numerics.hpp"
#include "proxflow/prox.hpp"
#include "proxflow/rational.hpp"

namespace proxflow {

/// F = f + h with f smooth (L-Lipschitz gradient) and h prox-friendly.
struct CompositeObjective {
    Eigen::Index dim = 0;
    std::function<double(const Vector&)> f_value;
    std::function<Vector(const Vector&)> f_gradient;
    ProxOracle h = ProxOracle::zero();
    double L = 1.0;   // smoothness of f
    double mu = 0.0;  // convexity parameter of F (negative when only weakly convex)
    std::optional<Vector> x_star;
    std::optional<double> f_star;
    /// Exact prox_{beta F}, when one is available in closed form.
    std::function<Vector(const Vector&, double)> exact_prox;

    double value(const Vector& x) const { return f_value(x) + h.value(x); }
    std::optional<double> optimal_value() const;

    /// f = x^T Q x / 2 + c^T x, h = 0.
    static CompositeObjective quadratic(const QuadraticProblem& problem);
};

enum class WarmupPolicy { ramp, repeat };
enum class InnerSolver { proximal_gradient, exact };
/// Where the inner proximal-gradient loop starts.
enum class InnerStart { latest, mixed };
enum class StopMetric { automatic, objective_gap, iterate_error, stationarity, none };

struct MultistepConfig {
    std::vector<double> xi{1.0};  // xi.back() weights the most recent iterate
    double beta = 1.0;
    int inner_m = 1;
    std::optional<double> inner_alpha;  // default beta / (beta L + 1)
    WarmupPolicy warmup = WarmupPolicy::ramp;
    InnerSolver inner = InnerSolver::proximal_gradient;
    InnerStart inner_start = InnerStart::latest;
    bool scale_beta_by_xi_bar = false;
    double xi_bar = 1.0;
    StopMetric stop_metric = StopMetric::automatic;
    bool record_stationarity = false;
    bool keep_iterates = false;

    int tau() const noexcept { return static_cast<int>(xi.size()); }
    double effective_beta() const noexcept { return scale_beta_by_xi_bar ? xi_bar * beta : beta; }
    double alpha_for(double L) const;
    void validate() const;

    static MultistepConfig bdf(int order, double beta, int inner_m);
};

/// Sliding window of the last tau iterates, oldest first.
class IterateHistory {
public:
    explicit IterateHistory(std::size_t capacity);

    void push(Vector x);
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool full() const noexcept { return items_.size() == capacity_; }
    const Vector& operator[](std::size_t i) const { return items_[i]; }
    const Vector& latest() const { return items_.back(); }

private:
    std::size_t capacity_;
    std::deque<Vector> items_;
};

struct TraceRecord {
    std::size_t k = 0;
    double objective = 0.0;
    std::optional<double> objective_gap;
    std::optional<double> iterate_error;
    std::optional<double> stationarity;
    int inner_steps = 0;
    double walltime_s = 0.0;
};

struct RunTrace {
    std::vector<TraceRecord> records;  // records[0] is the starting point
    std::vector<Vector> iterates;      // filled only with keep_iterates
    Vector final_iterate;
    bool diverged = false;
    bool stopped_early = false;

    std::size_t iterations() const noexcept { return records.empty() ? 0 : records.size() - 1; }
};

/// Divergence inside run(); carries everything computed before the blow-up.
class RunDivergence : public DivergenceError {
public:
    RunDivergence(const std::string& what, std::size_t step, RunTrace partial)
        : DivergenceError(what, step), trace_(std::move(partial)) {}
    const RunTrace& trace() const noexcept { return trace_; }

private:
    RunTrace trace_;
};

struct BdfCoefficients {
    std::vector<double> xi;
    double xi_bar = 1.0;
    std::vector<Rational> xi_exact;
    Rational xi_bar_exact;
};

/// Backward differentiation weights of order 1..4.
BdfCoefficients bdf_coefficients(int order);

/// sum_i xi_i * history[i]; history must hold exactly xi.size() iterates.
Vector mix(const IterateHistory& history, std::span<const double> xi);

/// Mixed point with warmup: while fewer than tau iterates exist, `ramp` falls
/// back to the BDF rule of order min(available, 4) over the newest iterates.
Vector mix_with_warmup(const IterateHistory& history, std::span<const double> xi, WarmupPolicy policy);

/// m steps of x <- prox_{alpha h}(x - alpha grad f(x) - (alpha / beta)(x - anchor)).
Vector approx_prox(const CompositeObjective& F, const Vector& anchor, const Vector& start, double beta, int m,
                   double alpha);

/// Proximal-gradient solve of prox_{beta F}(anchor) to a step tolerance.
Vector solve_prox(const CompositeObjective& F, const Vector& anchor, double beta, double tol = 1e-14,
                  int max_iter = 200000);

/// (1 - 1/(beta L + 1))^m.
double gamma_bound(double beta, double L, int m);

RunTrace run(const CompositeObjective& F, const MultistepConfig& cfg, const Vector& x0, std::size_t iterations,
             double stop_tol = 0.0);

/// || (prox_{beta F}(x) - x) / beta ||.
double epsilon_stationarity(const CompositeObjective& F, const Vector& x, double beta);

/// (tau-1) * sum_{j=1}^{tau-1} sum_{i=1}^{j} (tau-i) xi_i^2.
double delta_constant(std::span<const double> xi);
Rational delta_constant(std::span<const Rational> xi);

struct TheoremBounds {
    double eta = 1.0;                          // sum |xi_i|
    double delta = 0.0;                        // exact-prox nonconvexity constant
    double delta_inexact = 0.0;                // (1 + gamma^2 (1 + beta L)^2) delta
    double beta_min_strongly_convex = 0.0;     // (eta - 1) / mu
    double gamma_max = 0.0;                    // (beta mu - eta + 1) / (beta mu + eta + 1)
    double beta_max_weakly_convex_exact = 0.0;     // (1 - delta) / (-mu)
    double beta_max_weakly_convex_inexact = 0.0;   // (2 - 4 delta') / (-mu)
    double block_factor = 1.0;                 // gamma + (1 + gamma) eta / (1 + beta mu)
    double predicted_rate = 1.0;               // block_factor^(1/tau)

    bool converges() const noexcept { return predicted_rate > 0.0 && predicted_rate < 1.0; }
};

TheoremBounds theorem_bounds(const MultistepConfig& cfg, double mu, double L, double gamma);

/// Right-hand side of the weakly convex stationarity bound after k steps: it bounds the best
/// eps_beta over iterates up to index tau + 1 + k, with initial_gap = F(x^(tau)) - F*.
double weakly_convex_stationarity_bound(double mu, double beta, double delta, double initial_gap,
                                        double warmup_sq_steps, std::size_t k);

}  // namespace proxflow
