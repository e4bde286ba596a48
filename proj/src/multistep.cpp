#include "proxflow/multistep.hpp"

#include <chrono>
#include <memory>
#include <cmath>
#include <numeric>

namespace proxflow {

std::optional<double> CompositeObjective::optimal_value() const {
    if (f_star) return f_star;
    if (x_star) return value(*x_star);
    return std::nullopt;
}

CompositeObjective CompositeObjective::quadratic(const QuadraticProblem& problem) {
    auto p = std::make_shared<const QuadraticProblem>(problem);
    CompositeObjective F;
    F.dim = p->dim();
    F.f_value = [p](const Vector& x) { return p->value(x); };
    F.f_gradient = [p](const Vector& x) { return p->gradient(x); };
    F.h = ProxOracle::zero();
    F.L = p->L();
    F.mu = p->mu();
    if (p->mu() > 0.0) F.x_star = p->minimizer();
    F.exact_prox = [p](const Vector& x, double beta) { return prox_quadratic(*p, x, beta); };
    return F;
}

// ---------------------------------------------------------------------------

double MultistepConfig::alpha_for(double L) const {
    if (inner_alpha) return *inner_alpha;
    const double b = effective_beta();
    return b / (b * L + 1.0);
}

void MultistepConfig::validate() const {
    if (xi.empty()) throw ValidationError("MultistepConfig: xi must be non-empty");
    if (xi.size() > 16) throw ValidationError("MultistepConfig: tau must be <= 16");
    double sum = 0.0;
    for (double v : xi) {
        if (!std::isfinite(v)) throw ValidationError("MultistepConfig: xi must be finite");
        sum += v;
    }
    if (std::abs(sum - 1.0) > Tolerances::affine_sum)
        throw ValidationError("MultistepConfig: xi must sum to 1 (got " + std::to_string(sum) + ")");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("MultistepConfig: beta must be > 0");
    if (inner_m < 0) throw ValidationError("MultistepConfig: inner_m must be >= 0");
    if (inner_alpha && !(*inner_alpha > 0.0)) throw ValidationError("MultistepConfig: inner alpha must be > 0");
    if (scale_beta_by_xi_bar && !(xi_bar > 0.0)) throw ValidationError("MultistepConfig: xi_bar must be > 0");
}

MultistepConfig MultistepConfig::bdf(int order, double beta, int inner_m) {
    const auto c = bdf_coefficients(order);
    MultistepConfig cfg;
    cfg.xi = c.xi;
    cfg.xi_bar = c.xi_bar;
    cfg.beta = beta;
    cfg.inner_m = inner_m;
    return cfg;
}

// ---------------------------------------------------------------------------

IterateHistory::IterateHistory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("IterateHistory: capacity must be >= 1");
}

void IterateHistory::push(Vector x) {
    if (!items_.empty() && x.size() != items_.front().size())
        throw ValidationError("IterateHistory: dimension mismatch");
    items_.push_back(std::move(x));
    if (items_.size() > capacity_) items_.pop_front();
}

// ---------------------------------------------------------------------------

BdfCoefficients bdf_coefficients(int order) {
    BdfCoefficients out;
    switch (order) {
        case 1:
            out.xi_exact = {Rational(1)};
            out.xi_bar_exact = Rational(1);
            break;
        case 2:
            out.xi_exact = {Rational(-1, 3), Rational(4, 3)};
            out.xi_bar_exact = Rational(2, 3);
            break;
        case 3:
            out.xi_exact = {Rational(2, 11), Rational(-9, 11), Rational(18, 11)};
            out.xi_bar_exact = Rational(6, 11);
            break;
        case 4:
            out.xi_exact = {Rational(-3, 25), Rational(16, 25), Rational(-36, 25), Rational(48, 25)};
            out.xi_bar_exact = Rational(12, 25);
            break;
        default:
            throw UnsupportedOrderError("bdf_coefficients: order " + std::to_string(order) +
                                        " unsupported (1..4); supply custom xi instead");
    }
    Rational sum;
    for (const auto& r : out.xi_exact) sum += r;
    if (sum != Rational(1)) throw Error("bdf_coefficients: table row does not sum to 1");
    for (const auto& r : out.xi_exact) out.xi.push_back(r.to_double());
    out.xi_bar = out.xi_bar_exact.to_double();
    return out;
}

Vector mix(const IterateHistory& history, std::span<const double> xi) {
    if (history.size() != xi.size())
        throw ValidationError("mix: history holds " + std::to_string(history.size()) + " iterates, expected " +
                              std::to_string(xi.size()));
    Vector out = xi[0] * history[0];
    for (std::size_t i = 1; i < xi.size(); ++i) out += xi[i] * history[i];
    return out;
}

Vector mix_with_warmup(const IterateHistory& history, std::span<const double> xi, WarmupPolicy policy) {
    if (history.size() == 0) throw ValidationError("mix: empty history");
    if (history.size() >= xi.size()) {
        if (history.size() == xi.size()) return mix(history, xi);
        throw ValidationError("mix: history longer than xi");
    }
    if (policy == WarmupPolicy::repeat)
        throw ValidationError("mix: repeat warmup requires a pre-filled history");
    const std::size_t order = std::min<std::size_t>(history.size(), 4);
    const auto c = bdf_coefficients(static_cast<int>(order));
    const std::size_t offset = history.size() - order;
    Vector out = c.xi[0] * history[offset];
    for (std::size_t i = 1; i < order; ++i) out += c.xi[i] * history[offset + i];
    return out;
}

// ---------------------------------------------------------------------------

Vector approx_prox(const CompositeObjective& F, const Vector& anchor, const Vector& start, double beta, int m,
                   double alpha) {
    if (m < 0) throw ValidationError("approx_prox: m must be >= 0");
    if (!(alpha > 0.0)) throw ValidationError("approx_prox: alpha must be > 0");
    if (!(beta > 0.0)) throw ValidationError("approx_prox: beta must be > 0");
    const double ratio = alpha / beta;
    Vector x = start;
    for (int i = 0; i < m; ++i) {
        Vector step = x - alpha * F.f_gradient(x) - ratio * (x - anchor);
        x = F.h(step, alpha);
        if (!x.allFinite())
            throw DivergenceError("approx_prox: non-finite inner iterate at step " + std::to_string(i + 1),
                                  static_cast<std::size_t>(i + 1));
    }
    return x;
}

Vector solve_prox(const CompositeObjective& F, const Vector& anchor, double beta, double tol, int max_iter) {
    if (!(beta > 0.0)) throw ValidationError("solve_prox: beta must be > 0");
    if (F.exact_prox) return F.exact_prox(anchor, beta);
    const double alpha = beta / (beta * std::max(F.L, 0.0) + 1.0);
    const double ratio = alpha / beta;
    Vector x = anchor;
    for (int i = 0; i < max_iter; ++i) {
        Vector next = F.h(Vector(x - alpha * F.f_gradient(x) - ratio * (x - anchor)), alpha);
        if (!next.allFinite())
            throw DivergenceError("solve_prox: non-finite inner iterate", static_cast<std::size_t>(i + 1));
        const double change = (next - x).norm();
        x = std::move(next);
        if (change <= tol * (1.0 + x.norm())) break;
    }
    return x;
}

double gamma_bound(double beta, double L, int m) {
    if (!(beta > 0.0) || !(L > 0.0)) throw ValidationError("gamma_bound: beta and L must be > 0");
    if (m < 0) throw ValidationError("gamma_bound: m must be >= 0");
    return std::pow(1.0 - 1.0 / (beta * L + 1.0), m);
}

double epsilon_stationarity(const CompositeObjective& F, const Vector& x, double beta) {
    if (!(beta > 0.0)) throw ValidationError("epsilon_stationarity: beta must be > 0");
    const Vector p = solve_prox(F, x, beta);
    return (p - x).norm() / beta;
}

// ---------------------------------------------------------------------------

namespace {

StopMetric resolve_metric(const CompositeObjective& F, StopMetric m) {
    if (m != StopMetric::automatic) return m;
    return F.optimal_value() ? StopMetric::objective_gap : StopMetric::stationarity;
}

}  // namespace

RunTrace run(const CompositeObjective& F, const MultistepConfig& cfg, const Vector& x0, std::size_t iterations,
             double stop_tol) {
    cfg.validate();
    if (x0.size() != F.dim) throw ValidationError("run: x0 has wrong dimension");
    require_finite(x0, "run: x0");
    if (cfg.inner == InnerSolver::exact && !F.exact_prox)
        throw ValidationError("run: exact inner solver requested but objective has no exact prox");

    const double beta = cfg.effective_beta();
    const double alpha = cfg.alpha_for(F.L);
    const auto fstar = F.optimal_value();
    const StopMetric metric = resolve_metric(F, cfg.stop_metric);
    const bool stopping = stop_tol > 0.0 && metric != StopMetric::none;
    const bool want_stationarity =
        cfg.record_stationarity || (stopping && metric == StopMetric::stationarity);

    RunTrace trace;
    auto record = [&](std::size_t k, const Vector& x, int inner_steps, double seconds) {
        TraceRecord r;
        r.k = k;
        r.objective = F.value(x);
        if (fstar) r.objective_gap = r.objective - *fstar;
        if (F.x_star) r.iterate_error = (x - *F.x_star).norm();
        if (want_stationarity) r.stationarity = epsilon_stationarity(F, x, beta);
        r.inner_steps = inner_steps;
        r.walltime_s = seconds;
        trace.records.push_back(r);
        if (cfg.keep_iterates) trace.iterates.push_back(x);
        return r;
    };
    auto reached = [&](const TraceRecord& r) {
        std::optional<double> v;
        switch (metric) {
            case StopMetric::objective_gap: v = r.objective_gap; break;
            case StopMetric::iterate_error: v = r.iterate_error; break;
            case StopMetric::stationarity: v = r.stationarity; break;
            default: break;
        }
        return v && *v <= stop_tol;
    };

    IterateHistory history(static_cast<std::size_t>(cfg.tau()));
    const std::size_t prefill = cfg.warmup == WarmupPolicy::repeat ? history.capacity() : 1;
    for (std::size_t i = 0; i < prefill; ++i) history.push(x0);
    trace.final_iterate = x0;
    if (stopping && reached(record(0, x0, 0, 0.0))) {
        trace.stopped_early = true;
        return trace;
    }
    if (!stopping) record(0, x0, 0, 0.0);

    for (std::size_t k = 0; k < iterations; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const Vector anchor = mix_with_warmup(history, cfg.xi, cfg.warmup);
        Vector next;
        int steps = 0;
        try {
            if (cfg.inner == InnerSolver::exact) {
                next = F.exact_prox(anchor, beta);
            } else {
                const Vector& start = cfg.inner_start == InnerStart::latest ? history.latest() : anchor;
                next = approx_prox(F, anchor, start, beta, cfg.inner_m, alpha);
                steps = cfg.inner_m;
            }
        } catch (const DivergenceError& e) {
            trace.diverged = true;
            throw RunDivergence(std::string("run: ") + e.what(), k + 1, std::move(trace));
        }
        if (!next.allFinite() || next.norm() > Tolerances::divergence_norm) {
            trace.diverged = true;
            throw RunDivergence("run: iterate diverged at step " + std::to_string(k + 1), k + 1, std::move(trace));
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.push(next);
        trace.final_iterate = next;
        const auto rec = record(k + 1, next, steps, seconds);
        if (stopping && reached(rec)) {
            trace.stopped_early = true;
            break;
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
T delta_impl(std::span<const T> xi) {
    const auto tau = static_cast<std::int64_t>(xi.size());
    T total{};
    for (std::int64_t j = 1; j <= tau - 1; ++j)
        for (std::int64_t i = 1; i <= j; ++i) {
            const T& x = xi[static_cast<std::size_t>(i - 1)];
            total = total + T(tau - i) * x * x;
        }
    return T(tau > 0 ? tau - 1 : 0) * total;
}

}  // namespace

double delta_constant(std::span<const double> xi) { return delta_impl<double>(xi); }

Rational delta_constant(std::span<const Rational> xi) { return delta_impl<Rational>(xi); }

TheoremBounds theorem_bounds(const MultistepConfig& cfg, double mu, double L, double gamma) {
    cfg.validate();
    if (mu == 0.0) throw DegenerateParameterError("theorem_bounds: mu must be nonzero");
    const double beta = cfg.effective_beta();
    if (1.0 + beta * mu == 0.0) throw DegenerateParameterError("theorem_bounds: 1 + beta mu = 0");
    TheoremBounds b;
    b.eta = 0.0;
    for (double v : cfg.xi) b.eta += std::abs(v);
    b.delta = delta_constant(cfg.xi);
    b.delta_inexact = (1.0 + gamma * gamma * (1.0 + beta * L) * (1.0 + beta * L)) * b.delta;
    b.beta_min_strongly_convex = (b.eta - 1.0) / mu;
    const double denom = beta * mu + b.eta + 1.0;
    if (denom == 0.0) throw DegenerateParameterError("theorem_bounds: beta mu + eta + 1 = 0");
    b.gamma_max = (beta * mu - b.eta + 1.0) / denom;
    b.beta_max_weakly_convex_exact = (1.0 - b.delta) / (-mu);
    b.beta_max_weakly_convex_inexact = (2.0 - 4.0 * b.delta_inexact) / (-mu);
    b.block_factor = gamma + (1.0 + gamma) * b.eta / (1.0 + beta * mu);
    b.predicted_rate = b.block_factor > 0.0 ? std::pow(b.block_factor, 1.0 / cfg.tau()) : 0.0;
    return b;
}

double weakly_convex_stationarity_bound(double mu, double beta, double delta, double initial_gap,
                                        double warmup_sq_steps, std::size_t k) {
    if (k == 0) throw ValidationError("weakly_convex_stationarity_bound: k must be >= 1");
    const double kk = static_cast<double>(k);
    const double inner = 2.0 * initial_gap / (kk * beta) + delta * warmup_sq_steps / (kk * beta * beta);
    return std::sqrt(std::max(inner, 0.0)) / (1.0 - mu * beta);
}

}  // namespace proxflow
