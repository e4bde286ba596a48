#pragma once

#include <string>
#include <vector>

#include "proxflow/numerics.hpp"

namespace proxflow {

/// Parameters of the multistep iteration on f = x^T Q x / 2 with an
/// m-step gradient inner loop of step alpha.
struct CompanionSpec {
    std::vector<double> xi{1.0};
    double alpha = 0.5;
    double beta = 1.0;
    int m = 1;

    int tau() const noexcept { return static_cast<int>(xi.size()); }
    void validate() const;
};

enum class RadiusMeasure {
    modulus,    // spectral radius (Gelfand)
    real_part,  // largest real part; diagnostic only
};

/// Monic characteristic polynomial (descending coefficients) of the scalar
/// recursion x+ = a^m x + b sum_i xi_i x_i at one eigenvalue lambda of Q,
/// with a = 1 - alpha/beta - alpha lambda and b = (alpha/beta) sum_{j<m} a^j.
std::vector<double> companion_polynomial(double lambda, const CompanionSpec& spec);

double scalar_radius(double lambda, const CompanionSpec& spec, RadiusMeasure measure = RadiusMeasure::modulus);

/// 512 log-spaced points on [mu, L] plus both endpoints (mu = 0 handled).
std::vector<double> lambda_grid(double mu, double L);

/// Worst case of scalar_radius over lambda_grid(mu, L).
double spectrum_radius(const CompanionSpec& spec, double mu, double L,
                       RadiusMeasure measure = RadiusMeasure::modulus);

struct StableAlpha {
    double alpha = 0.0;
    bool stable_found = false;
};

/// Edge of the first stability interval (0, alpha] for the step alpha.
StableAlpha max_stable_alpha(double mu, double L, double beta, int m, const std::vector<double>& xi,
                             RadiusMeasure measure = RadiusMeasure::modulus);

struct OptimalRate {
    double rho = 1.0;
    double alpha = 0.0;
};

/// Minimum of spectrum_radius over alpha in (0, max_stable_alpha]. The stable interval is always
/// taken from the modulus; `measure` only changes the quantity minimised.
OptimalRate optimal_rate(double mu, double L, double beta, int m, const std::vector<double>& xi,
                         RadiusMeasure measure = RadiusMeasure::modulus);

struct StabilityPoint {
    int tau = 1;
    int m = 1;
    double alpha = 0.0;
    double beta = 0.0;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double radius = 0.0;
    bool stable = false;
};

struct StabilityReport {
    std::vector<StabilityPoint> points;

    /// Columns: tau,m,alpha,beta,lambda_or_range,radius,stable.
    std::string to_csv() const;
};

struct ScanCurve {
    std::vector<double> xi;
    int m = 1;
};

/// Radius over a beta grid for every (xi, m) curve, spectrum [mu, L].
StabilityReport beta_scan(double mu, double L, const std::vector<ScanCurve>& curves, double alpha,
                          const std::vector<double>& betas, std::size_t jobs = 1);

/// Block companion matrix M acting on (x^(k), x^(k-1), ..., x^(k-tau+1)).
Matrix companion_matrix(const CompanionSpec& spec, const Matrix& q);

struct CompanionCheck {
    double max_discrepancy = 0.0;
    double max_iterate_norm = 0.0;
    bool passed = false;
};

/// Runs the actual multistep solver (h = 0, gradient inner loop) and the
/// block recursion z+ = M z side by side from the same start and compares.
CompanionCheck simulate_companion_check(const CompanionSpec& spec, const Matrix& q, const Vector& x0,
                                        std::size_t steps);

}  // namespace proxflow
