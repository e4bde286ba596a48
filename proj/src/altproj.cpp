#include "proxflow/altproj.hpp"

#include <algorithm>
#include <cmath>

#include "proxflow/numerics.hpp"

namespace proxflow {

ProjectionSpectrum projection_spectrum_from(std::vector<double> lambdas) {
    ProjectionSpectrum s;
    for (double& l : lambdas) {
        if (!std::isfinite(l) || l < -ProjectionSpectrum::unit_tolerance || l > 1.0 + ProjectionSpectrum::unit_tolerance)
            throw ValidationError("projection spectrum values must lie in [0, 1]");
        l = std::clamp(l, 0.0, 1.0);
    }
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    s.lambdas = std::move(lambdas);
    s.degenerate = true;
    s.rho = 1.0;
    for (double l : s.lambdas) {
        if (l >= 1.0 - ProjectionSpectrum::unit_tolerance) continue;
        s.rho = s.degenerate ? 1.0 - l : std::min(s.rho, 1.0 - l);
        s.degenerate = false;
    }
    if (s.degenerate) s.rho = 0.0;
    return s;
}

ProjectionSpectrum projection_spectrum(const SubspacePair& pair) {
    const Vector c = principal_cosines(pair);
    std::vector<double> lambdas;
    for (double v : c) lambdas.push_back(v * v);
    return projection_spectrum_from(std::move(lambdas));
}

std::vector<double> altproj_polynomial(double lambda, const std::vector<double>& xi) {
    if (xi.empty()) throw ValidationError("altproj_polynomial: xi must be non-empty");
    const std::size_t tau = xi.size();
    std::vector<double> c(tau + 1);
    c[0] = 1.0;
    for (std::size_t i = 1; i <= tau; ++i) c[i] = -xi[tau - i] * lambda;
    return c;
}

double multistep_altproj_radius(double lambda, const std::vector<double>& xi) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("multistep_altproj_radius: lambda must lie in [0, 1]");
    if (lambda == 0.0) return 0.0;
    if (xi.size() == 1) return std::abs(xi[0]) * lambda;
    return polynomial_max_root_modulus(altproj_polynomial(lambda, xi));
}

double predicted_altproj_rate(const ProjectionSpectrum& spectrum, const std::vector<double>& xi) {
    double worst = 0.0;
    for (double l : spectrum.lambdas)
        if (l < 1.0 - ProjectionSpectrum::unit_tolerance) worst = std::max(worst, multistep_altproj_radius(l, xi));
    return worst;
}

TunedXi tuned_xi2(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("tuned_xi2: rho must lie in (0, 1)");
    const double s = std::sqrt(rho);
    TunedXi t;
    // (1 - s)^2 / (1 - rho) simplifies to (1 - s) / (1 + s).
    t.xi1 = -(1.0 - s) / (1.0 + s);
    t.xi2 = 1.0 - t.xi1;
    t.radius = multistep_altproj_radius(1.0 - rho, t.xi());
    return t;
}

namespace {

double worst_radius(const std::vector<double>& lambdas, const std::vector<double>& xi) {
    double w = 0.0;
    for (double l : lambdas) w = std::max(w, multistep_altproj_radius(l, xi));
    return w;
}

}  // namespace

XiSearch tuned_xi_search(const std::vector<double>& lambdas, int tau) {
    if (tau != 2 && tau != 3) throw ValidationError("tuned_xi_search: tau must be 2 or 3");
    if (lambdas.empty()) throw ValidationError("tuned_xi_search: lambda list must be non-empty");
    for (double l : lambdas)
        if (!(l >= 0.0 && l <= 1.0)) throw ValidationError("tuned_xi_search: lambdas must lie in [0, 1]");

    const auto n = static_cast<std::size_t>(tau);
    std::vector<std::vector<double>> starts;
    std::vector<double> single(n, 0.0);
    single.back() = 1.0;
    starts.push_back(single);
    starts.push_back(bdf_coefficients(tau).xi);
    const double lmax = *std::max_element(lambdas.begin(), lambdas.end());
    if (lmax > 0.0 && lmax < 1.0) {
        const auto t2 = tuned_xi2(1.0 - lmax);
        std::vector<double> xi(n, 0.0);
        xi[n - 2] = t2.xi1;
        xi[n - 1] = t2.xi2;
        starts.push_back(xi);
    }

    XiSearch best{single, worst_radius(lambdas, single)};
    for (const auto& s : starts) {
        const double w = worst_radius(lambdas, s);
        if (w < best.worst_radius) best = {s, w};
    }

    // Free coordinates are xi_2..xi_tau; xi_1 absorbs the affine constraint.
    auto with = [&](std::vector<double> xi, std::size_t j, double delta) {
        xi[j] += delta;
        xi[0] -= delta;
        return xi;
    };
    double step = 0.25;
    while (step > 1e-13) {
        bool improved = false;
        for (std::size_t j = 1; j < n; ++j) {
            for (double sign : {1.0, -1.0}) {
                auto cand = with(best.xi, j, sign * step);
                const double w = worst_radius(lambdas, cand);
                if (w < best.worst_radius) {
                    best = {std::move(cand), w};
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

RateFit fit_rate(const ExperimentTrace& trace, double floor) {
    const std::size_t n = trace.points.size();
    if (n < 4) throw ValidationError("fit_rate: trace too short");
    RateFit fit;
    fit.window_begin = n / 2;
    fit.window_end = n;
    for (std::size_t i = fit.window_begin; i < n; ++i)
        if (!(trace.points[i].value > floor) || !std::isfinite(trace.points[i].value)) {
            fit.window_end = i;
            fit.window_shortened = true;
            break;
        }
    if (fit.window_shortened) {
        // Keep a window of half the usable prefix.
        std::size_t usable = 0;
        while (usable < n && trace.points[usable].value > floor && std::isfinite(trace.points[usable].value)) ++usable;
        fit.window_end = usable;
        fit.window_begin = usable / 2;
    }
    if (fit.window_end < fit.window_begin + 3) throw Error("fit_rate: residual underflowed before the fit window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(fit.window_end - fit.window_begin);
    for (std::size_t i = fit.window_begin; i < fit.window_end; ++i) {
        const double x = static_cast<double>(trace.points[i].k);
        const double y = std::log(trace.points[i].value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.rate = std::exp(slope);
    return fit;
}

RateCheck verify_rate(const SubspacePair& pair, const std::vector<double>& xi, std::size_t K, WarmupPolicy warmup) {
    const auto spectrum = projection_spectrum(pair);
    if (spectrum.degenerate) throw DegenerateParameterError("verify_rate: subspaces coincide, rho undefined");
    AltProjOptions options;
    options.iterations = K;
    options.warmup = warmup;
    options.label = "altproj_accel";
    RateCheck out;
    out.trace = run_altproj_xi(pair, xi, options).trace;
    out.predicted = predicted_altproj_rate(spectrum, xi);
    out.fit = fit_rate(out.trace);
    return out;
}

}  // namespace proxflow
