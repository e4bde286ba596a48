#include "proxflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "proxflow/format.hpp"
#include "proxflow/multistep.hpp"
#include "proxflow/parallel.hpp"

namespace proxflow {

void CompanionSpec::validate() const {
    if (xi.empty() || xi.size() > 16) throw ValidationError("CompanionSpec: tau must be in 1..16");
    if (!(alpha >= 0.0) || !(beta > 0.0)) throw ValidationError("CompanionSpec: need alpha >= 0, beta > 0");
    if (m < 1) throw ValidationError("CompanionSpec: m must be >= 1");
}

namespace {

struct ScalarMap {
    double am;  // a^m
    double b;   // (alpha/beta) sum_{j=0}^{m-1} a^j
};

ScalarMap scalar_map(double lambda, const CompanionSpec& spec) {
    const double a = 1.0 - spec.alpha / spec.beta - spec.alpha * lambda;
    double power = 1.0;
    double geometric = 0.0;
    for (int j = 0; j < spec.m; ++j) {
        geometric += power;
        power *= a;
    }
    return {power, spec.alpha / spec.beta * geometric};
}

}  // namespace

std::vector<double> companion_polynomial(double lambda, const CompanionSpec& spec) {
    const auto [am, b] = scalar_map(lambda, spec);
    const int tau = spec.tau();
    std::vector<double> c(static_cast<std::size_t>(tau) + 1, 0.0);
    c[0] = 1.0;
    // eta^tau - (a^m + b xi_tau) eta^(tau-1) - b xi_(tau-1) eta^(tau-2) - ... - b xi_1
    for (int i = 1; i <= tau; ++i) c[static_cast<std::size_t>(i)] = -b * spec.xi[static_cast<std::size_t>(tau - i)];
    c[1] -= am;
    return c;
}

double scalar_radius(double lambda, const CompanionSpec& spec, RadiusMeasure measure) {
    if (spec.tau() == 1 && measure == RadiusMeasure::modulus) {
        const auto [am, b] = scalar_map(lambda, spec);
        return std::abs(am + b);
    }
    const auto coeffs = companion_polynomial(lambda, spec);
    const auto roots = polynomial_roots(coeffs);
    double best = measure == RadiusMeasure::modulus ? 0.0 : -std::numeric_limits<double>::infinity();
    for (const auto& r : roots) best = std::max(best, measure == RadiusMeasure::modulus ? std::abs(r) : r.real());
    return best;
}

std::vector<double> lambda_grid(double mu, double L) {
    if (!(mu >= 0.0) || !(L >= mu)) throw ValidationError("lambda_grid: need 0 <= mu <= L");
    constexpr int kPoints = 512;
    std::vector<double> grid{mu, L};
    if (L == mu) return grid;
    const double lo = mu > 0.0 ? mu : L * 1e-8;
    const double log_lo = std::log(lo);
    const double log_hi = std::log(L);
    for (int i = 0; i < kPoints; ++i) grid.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (kPoints - 1)));
    return grid;
}

double spectrum_radius(const CompanionSpec& spec, double mu, double L, RadiusMeasure measure) {
    spec.validate();
    double worst = -std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid(mu, L)) worst = std::max(worst, scalar_radius(lambda, spec, measure));
    return worst;
}

StableAlpha max_stable_alpha(double mu, double L, double beta, int m, const std::vector<double>& xi,
                             RadiusMeasure measure) {
    if (!(beta > 0.0)) throw ValidationError("max_stable_alpha: beta must be > 0");
    constexpr int kScan = 4000;
    constexpr int kBisect = 60;
    const double alpha_hi = 10.0 * beta;
    CompanionSpec spec{xi, 0.0, beta, m};
    auto stable = [&](double alpha) {
        spec.alpha = alpha;
        return spectrum_radius(spec, mu, L, measure) < 1.0;
    };
    double lo = 0.0;
    double hi = alpha_hi;
    bool found_edge = false;
    for (int i = 1; i <= kScan; ++i) {
        const double alpha = alpha_hi * i / kScan;
        if (!stable(alpha)) {
            if (i == 1) return {0.0, false};
            hi = alpha;
            found_edge = true;
            break;
        }
        lo = alpha;
    }
    if (!found_edge) return {alpha_hi, true};
    for (int it = 0; it < kBisect; ++it) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
    }
    return {lo, true};
}

OptimalRate optimal_rate(double mu, double L, double beta, int m, const std::vector<double>& xi,
                         RadiusMeasure measure) {
    const auto edge = max_stable_alpha(mu, L, beta, m, xi);
    if (!edge.stable_found) throw Error("optimal_rate: no stable step size");
    constexpr int kGrid = 512;
    CompanionSpec spec{xi, 0.0, beta, m};
    auto radius = [&](double alpha) {
        spec.alpha = alpha;
        return spectrum_radius(spec, mu, L, measure);
    };
    OptimalRate best{std::numeric_limits<double>::infinity(), 0.0};
    int best_i = 0;
    for (int i = 1; i <= kGrid; ++i) {
        const double alpha = edge.alpha * i / kGrid;
        const double r = radius(alpha);
        if (r < best.rho) {
            best = {r, alpha};
            best_i = i;
        }
    }
    // Golden-section refinement inside the bracketing grid cells.
    const double step = edge.alpha / kGrid;
    double a = std::max(step * (best_i - 1), step * 1e-6);
    double b = std::min(step * (best_i + 1), edge.alpha);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = radius(c);
    double fd = radius(d);
    for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = radius(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = radius(d);
        }
    }
    if (fc < best.rho) best = {fc, c};
    if (fd < best.rho) best = {fd, d};
    if (!(best.rho < 1.0)) throw Error("optimal_rate: unstable for every step size");
    return best;
}

std::string StabilityReport::to_csv() const {
    std::ostringstream os;
    os << "tau,m,alpha,beta,lambda_or_range,radius,stable\n";
    for (const auto& p : points) {
        os << p.tau << ',' << p.m << ',' << format_double(p.alpha) << ',' << format_double(p.beta) << ',';
        if (p.lambda_lo == p.lambda_hi)
            os << format_double(p.lambda_lo);
        else
            os << format_double(p.lambda_lo) << ':' << format_double(p.lambda_hi);
        os << ',' << format_double(p.radius) << ',' << (p.stable ? 1 : 0) << '\n';
    }
    return os.str();
}

StabilityReport beta_scan(double mu, double L, const std::vector<ScanCurve>& curves, double alpha,
                          const std::vector<double>& betas, std::size_t jobs) {
    StabilityReport report;
    report.points.resize(curves.size() * betas.size());
    parallel_for(report.points.size(), jobs, [&](std::size_t idx) {
        const auto& curve = curves[idx / betas.size()];
        const double beta = betas[idx % betas.size()];
        const CompanionSpec spec{curve.xi, alpha, beta, curve.m};
        StabilityPoint p;
        p.tau = spec.tau();
        p.m = spec.m;
        p.alpha = alpha;
        p.beta = beta;
        p.lambda_lo = mu;
        p.lambda_hi = L;
        p.radius = spectrum_radius(spec, mu, L);
        p.stable = p.radius < 1.0;
        report.points[idx] = p;
    });
    return report;
}

Matrix companion_matrix(const CompanionSpec& spec, const Matrix& q) {
    spec.validate();
    require_symmetric(q);
    const Eigen::Index n = q.rows();
    const int tau = spec.tau();
    const Matrix a = (1.0 - spec.alpha / spec.beta) * Matrix::Identity(n, n) - spec.alpha * q;
    Matrix am = Matrix::Identity(n, n);
    Matrix geometric = Matrix::Zero(n, n);
    for (int j = 0; j < spec.m; ++j) {
        geometric += am;
        am = a * am;
    }
    const Matrix b = spec.alpha / spec.beta * geometric;
    Matrix M = Matrix::Zero(n * tau, n * tau);
    // Block column j multiplies x^(k-j); x^(k-j) carries weight xi_{tau-j}.
    for (int j = 0; j < tau; ++j) M.block(0, n * j, n, n) = spec.xi[static_cast<std::size_t>(tau - 1 - j)] * b;
    M.block(0, 0, n, n) += am;
    for (int j = 1; j < tau; ++j) M.block(n * j, n * (j - 1), n, n) = Matrix::Identity(n, n);
    return M;
}

CompanionCheck simulate_companion_check(const CompanionSpec& spec, const Matrix& q, const Vector& x0,
                                        std::size_t steps) {
    spec.validate();
    if (!(spec.alpha > 0.0)) throw ValidationError("simulate_companion_check: alpha must be > 0");
    const Eigen::Index n = q.rows();
    if (x0.size() != n) throw ValidationError("simulate_companion_check: x0 has wrong dimension");

    MultistepConfig cfg;
    cfg.xi = spec.xi;
    cfg.beta = spec.beta;
    cfg.inner_m = spec.m;
    cfg.inner_alpha = spec.alpha;
    cfg.warmup = WarmupPolicy::repeat;
    cfg.stop_metric = StopMetric::none;
    cfg.keep_iterates = true;
    const auto F = CompositeObjective::quadratic(QuadraticProblem(q));
    const auto trace = run(F, cfg, x0, steps);

    const Matrix M = companion_matrix(spec, q);
    Vector z(n * spec.tau());
    for (int j = 0; j < spec.tau(); ++j) z.segment(n * j, n) = x0;

    CompanionCheck out;
    for (std::size_t k = 1; k <= steps; ++k) {
        z = M * z;
        if (!z.allFinite()) throw DivergenceError("simulate_companion_check: block recursion diverged", k);
        const Vector& x = trace.iterates[k];
        out.max_discrepancy = std::max(out.max_discrepancy, (x - z.head(n)).norm());
        out.max_iterate_norm = std::max(out.max_iterate_norm, x.norm());
    }
    out.passed = out.max_discrepancy <= 1e-9 * std::max(out.max_iterate_norm, 1.0);
    return out;
}

}  // namespace proxflow
