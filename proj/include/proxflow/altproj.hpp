#pragma once

#include <vector>

#include "proxflow/experiments.hpp"

namespace proxflow {

/// Nontrivial eigenvalues of P1 P2 (squared principal cosines) and the gap rho.
struct ProjectionSpectrum {
    std::vector<double> lambdas;  // descending, each in [0, 1]
    double rho = 1.0;             // min over lambda < 1 of (1 - lambda)
    bool degenerate = false;      // every lambda equals 1; rho undefined

    /// Eigenvalues counted as 1 (shared directions) use this slack.
    static constexpr double unit_tolerance = 1e-10;
};

ProjectionSpectrum projection_spectrum(const SubspacePair& pair);
ProjectionSpectrum projection_spectrum_from(std::vector<double> lambdas);

/// eta^tau - xi_tau lambda eta^(tau-1) - ... - xi_1 lambda, descending coefficients.
std::vector<double> altproj_polynomial(double lambda, const std::vector<double>& xi);

/// Max root modulus of altproj_polynomial.
double multistep_altproj_radius(double lambda, const std::vector<double>& xi);

/// Worst radius over the nontrivial eigenvalues (those below 1).
double predicted_altproj_rate(const ProjectionSpectrum& spectrum, const std::vector<double>& xi);

struct TunedXi {
    double xi1 = 0.0;
    double xi2 = 1.0;
    double radius = 0.0;  // radius at lambda = 1 - rho, equal to 1 - sqrt(rho)

    std::vector<double> xi() const { return {xi1, xi2}; }
};

/// Two-step weights placing a double root at 1 - sqrt(rho) for lambda = 1 - rho.
TunedXi tuned_xi2(double rho);

struct XiSearch {
    std::vector<double> xi;
    double worst_radius = 0.0;
};

/// Coordinate search over {sum xi = 1} minimising the worst radius on `lambdas`; tau in {2, 3}.
XiSearch tuned_xi_search(const std::vector<double>& lambdas, int tau);

struct RateFit {
    double rate = 0.0;
    std::size_t window_begin = 0;
    std::size_t window_end = 0;   // exclusive
    bool window_shortened = false;
};

/// exp(slope) of a least-squares line through log(metric) over the last half of the trace;
/// points at or below `floor` are dropped from the end of the window.
RateFit fit_rate(const ExperimentTrace& trace, double floor = 1e-280);

struct RateCheck {
    RateFit fit;
    double predicted = 0.0;
    ExperimentTrace trace;
};

/// Runs alternating projections with weights xi for K steps and fits the decay of the residual.
RateCheck verify_rate(const SubspacePair& pair, const std::vector<double>& xi, std::size_t K,
                      WarmupPolicy warmup = WarmupPolicy::repeat);

}  // namespace proxflow
