#include <doctest.h>

#include "proxflow/multistep.hpp"
#include "support.hpp"

using namespace proxflow;
using proxflow::testing::spread_quadratic;

namespace {

IterateHistory history_of(const std::vector<Vector>& xs) {
    IterateHistory h(xs.size());
    for (const auto& x : xs) h.push(x);
    return h;
}

double max_error_before(const RunTrace& t, int tau) {
    double r = 0.0;
    for (int j = 0; j < tau; ++j) r = std::max(r, *t.records[j].iterate_error);
    return r;
}

/// 1/2 (x - b)^2 + log(1 + |x| / theta) in one dimension; weakly convex for theta < 1.
CompositeObjective lsp_toy(double b, double theta) {
    CompositeObjective F;
    F.dim = 1;
    F.f_value = [b](const Vector& x) { return 0.5 * (x[0] - b) * (x[0] - b); };
    F.f_gradient = [b](const Vector& x) { return Vector::Constant(1, x[0] - b); };
    F.h = ProxOracle::lsp(theta);
    F.L = 1.0;
    F.mu = 1.0 - 1.0 / (theta * theta);
    // prox of beta F: the two quadratics merge into one with curvature c = 1 + 1/beta
    F.exact_prox = [b, theta](const Vector& y, double beta) {
        const double c = 1.0 + 1.0 / beta;
        return Vector::Constant(1, prox_lsp_scalar((b + y[0] / beta) / c, theta, 1.0 / c));
    };
    return F;
}

}  // namespace

TEST_CASE("bdf_coefficients") {
    const auto c1 = bdf_coefficients(1);
    CHECK(c1.xi == std::vector<double>{1.0});
    CHECK(c1.xi_bar_exact == Rational(1));

    const auto c2 = bdf_coefficients(2);
    REQUIRE(c2.xi_exact.size() == 2);
    CHECK(c2.xi_exact[0] == Rational(-1, 3));
    CHECK(c2.xi_exact[1] == Rational(4, 3));
    CHECK(c2.xi_bar_exact == Rational(2, 3));

    const auto c3 = bdf_coefficients(3);
    CHECK(c3.xi_exact[0] == Rational(2, 11));
    CHECK(c3.xi_exact[1] == Rational(-9, 11));
    CHECK(c3.xi_exact[2] == Rational(18, 11));

    const auto c4 = bdf_coefficients(4);
    const std::vector<Rational> want{{-3, 25}, {16, 25}, {-36, 25}, {48, 25}};
    CHECK(c4.xi_exact == want);
    CHECK(c4.xi_bar_exact == Rational(12, 25));
    for (int k = 1; k <= 4; ++k) {
        const auto c = bdf_coefficients(k);
        Rational s;
        for (const auto& r : c.xi_exact) s += r;
        CHECK(s == Rational(1));
        for (std::size_t i = 0; i < c.xi.size(); ++i) CHECK(c.xi[i] == c.xi_exact[i].to_double());
    }
    CHECK_THROWS_AS(bdf_coefficients(0), UnsupportedOrderError);
    CHECK_THROWS_AS(bdf_coefficients(5), UnsupportedOrderError);
}

TEST_CASE("mix") {
    const Vector x = Vector::LinSpaced(3, 1, 3);
    const auto c3 = bdf_coefficients(3).xi;
    CHECK((mix(history_of({x, x, x}), c3) - x).norm() <= 1e-14);

    const auto c2 = bdf_coefficients(2).xi;
    const Vector m2 = mix(history_of({Vector::Constant(1, 0.0), Vector::Constant(1, 3.0)}), c2);
    CHECK(m2[0] == doctest::Approx(4.0).epsilon(1e-14));

    const std::vector<double> one{1.0};
    CHECK(mix(history_of({x}), one) == x);
    CHECK_THROWS_AS(mix(history_of({x}), c2), ValidationError);
}

TEST_CASE("mixing is affine invariant") {
    Rng rng(3);
    for (int order = 1; order <= 4; ++order) {
        const auto xi = bdf_coefficients(order).xi;
        std::vector<Vector> xs, shifted;
        const Vector c = rng.normal_vector(4);
        for (int i = 0; i < order; ++i) {
            xs.push_back(rng.normal_vector(4));
            shifted.push_back(xs.back() + c);
        }
        CHECK((mix(history_of(shifted), xi) - mix(history_of(xs), xi) - c).norm() <= 1e-12);
    }
}

TEST_CASE("ramp warmup uses the largest available BDF order") {
    const Vector a = Vector::Constant(1, 1.0), b = Vector::Constant(1, 2.0);
    const auto xi = bdf_coefficients(3).xi;
    const Vector m = mix_with_warmup(history_of({a, b}), xi, WarmupPolicy::ramp);
    CHECK(m[0] == doctest::Approx(-1.0 / 3.0 + 8.0 / 3.0));
    IterateHistory partial(3);
    partial.push(a);
    CHECK_THROWS_AS(mix_with_warmup(partial, xi, WarmupPolicy::repeat), ValidationError);
}

TEST_CASE("approx_prox") {
    Matrix q = Matrix::Zero(2, 2);
    q.diagonal() << 1, 2;
    const QuadraticProblem qp(q);
    const auto F = CompositeObjective::quadratic(qp);
    const Vector anchor = Vector::Ones(2);
    const double beta = 1.0, alpha = beta / (beta * 2.0 + 1.0);

    CHECK(approx_prox(F, anchor, Vector::Zero(2), beta, 0, alpha) == Vector::Zero(2));
    const Vector exact = prox_quadratic(qp, anchor, beta);
    CHECK((approx_prox(F, anchor, anchor, beta, 200, alpha) - exact).norm() <= 1e-8);

    const Vector four = approx_prox(F, anchor, anchor, beta, 4, alpha);
    const double ratio = (four - exact).norm() / (anchor - exact).norm();
    CHECK(ratio <= std::pow(2.0 / 3.0, 4) + 1e-15);
}

TEST_CASE("approx_prox reports a blow-up") {
    Matrix q = Matrix::Identity(1, 1) * 1e300;
    CompositeObjective F = CompositeObjective::quadratic(QuadraticProblem(q));
    CHECK_THROWS_AS(approx_prox(F, Vector::Constant(1, 1e300), Vector::Constant(1, 1e300), 1.0, 3, 1e10),
                    DivergenceError);
}

TEST_CASE("gamma_bound") {
    CHECK(gamma_bound(1.0, 2.0, 0) == 1.0);
    CHECK(gamma_bound(1.0, 2.0, 4) == doctest::Approx(std::exp(4.0 * std::log(2.0 / 3.0))).epsilon(1e-14));
    CHECK(gamma_bound(1.0, 2.0, 4) == doctest::Approx(0.19753).epsilon(1e-4));
    double prev = 1.0;
    for (int m = 1; m < 200; ++m) {
        const double g = gamma_bound(0.5, 10.0, m);
        CHECK(g < prev);
        prev = g;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("run basics") {
    Rng rng(6);
    const QuadraticProblem qp(random_spd(rng, 4, 1.0, 3.0), rng.normal_vector(4));
    const auto F = CompositeObjective::quadratic(qp);
    const Vector x0 = rng.normal_vector(4);
    const auto t0 = run(F, MultistepConfig::bdf(2, 1.0, 1), x0, 0);
    REQUIRE(t0.records.size() == 1);
    CHECK(t0.final_iterate == x0);

    auto cfg = MultistepConfig::bdf(1, 1.0, 5);
    cfg.stop_metric = StopMetric::iterate_error;
    const auto early = run(F, cfg, x0, 10000, 1e-8);
    CHECK(early.stopped_early);
    CHECK(*early.records.back().iterate_error <= 1e-8);
}

TEST_CASE("run reports divergence with the partial trace") {
    const QuadraticProblem qp(Matrix::Identity(2, 2));
    auto F = CompositeObjective::quadratic(qp);
    auto cfg = MultistepConfig::bdf(1, 1.0, 1);
    cfg.inner_alpha = 5.0;  // step far beyond 2 / L
    try {
        run(F, cfg, Vector::Ones(2), 1000);
        FAIL("expected divergence");
    } catch (const RunDivergence& e) {
        CHECK(e.trace().diverged);
        CHECK(e.trace().records.size() >= 2);
        CHECK(e.step() > 1);
    }
}

TEST_CASE("exact PPM contracts by 1 / (1 + beta mu)") {
    Rng rng(10);
    const QuadraticProblem qp(Matrix::Identity(3, 3), rng.normal_vector(3));
    const auto F = CompositeObjective::quadratic(qp);
    auto cfg = MultistepConfig::bdf(1, 1.0, 1);
    cfg.inner = InnerSolver::exact;
    const auto t = run(F, cfg, rng.normal_vector(3), 30);
    for (std::size_t k = 0; k < 30; ++k)
        CHECK(std::abs(*t.records[k + 1].iterate_error / *t.records[k].iterate_error - 0.5) <= 1e-6);

    // A long inner loop is as good as the exact prox.
    const auto t2 = run(F, MultistepConfig::bdf(1, 1.0, 200), rng.normal_vector(3), 30);
    for (std::size_t k = 0; k < 30; ++k)
        CHECK(std::abs(*t2.records[k + 1].iterate_error / *t2.records[k].iterate_error - 0.5) <= 1e-6);
}

TEST_CASE("exact rate bound for nonnegative weights") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int tau = 1 + static_cast<int>(rng.index(4));
        std::vector<double> xi(tau);
        double s = 0.0;
        for (auto& v : xi) s += (v = rng.uniform(0.05, 1.0));
        for (auto& v : xi) v /= s;
        const double mu = rng.uniform(0.1, 2.0), L = mu * rng.uniform(1.0, 20.0);
        const QuadraticProblem qp(spread_quadratic(rng, 5, mu, L), rng.normal_vector(5));
        const auto F = CompositeObjective::quadratic(qp);
        MultistepConfig cfg;
        cfg.xi = xi;
        cfg.beta = rng.uniform(0.1, 5.0);
        cfg.inner = InnerSolver::exact;
        cfg.warmup = trial % 2 ? WarmupPolicy::repeat : WarmupPolicy::ramp;
        const auto t = run(F, cfg, 5.0 * rng.normal_vector(5), 60);
        const double r0 = max_error_before(t, tau);
        const double c = 1.0 / (1.0 + cfg.beta * qp.mu());
        for (std::size_t k = tau; k < t.records.size(); ++k)
            CHECK(*t.records[k].iterate_error <= std::pow(c, static_cast<double>(k / tau)) * r0 * (1 + 1e-10) + 1e-13);
    }
}

TEST_CASE("theorem_bounds examples") {
    const auto b1 = theorem_bounds(MultistepConfig::bdf(1, 2.0, 1), 0.5, 3.0, 0.0);
    CHECK(b1.eta == 1.0);
    CHECK(b1.beta_min_strongly_convex == 0.0);
    CHECK(b1.gamma_max == doctest::Approx(1.0 / 3.0));  // beta mu / (beta mu + 2)

    const auto b2 = theorem_bounds(MultistepConfig::bdf(2, 1.0, 1), 1.0, 2.0, 0.0);
    CHECK(b2.eta == doctest::Approx(5.0 / 3.0));
    CHECK(b2.block_factor == doctest::Approx(5.0 / 6.0));

    const auto edge = theorem_bounds(MultistepConfig::bdf(2, 2.0 / 3.0, 1), 1.0, 2.0, 0.0);
    CHECK(edge.block_factor == doctest::Approx(1.0));

    CHECK_THROWS_AS(theorem_bounds(MultistepConfig::bdf(2, 1.0, 1), 0.0, 2.0, 0.0), DegenerateParameterError);
    CHECK_THROWS_AS(theorem_bounds(MultistepConfig::bdf(2, 1.0, 1), -1.0, 2.0, 0.0), DegenerateParameterError);
}

TEST_CASE("general-weight rate bound for BDF2 and BDF3") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const int order = 2 + trial % 2;
        const double mu = rng.uniform(0.2, 2.0), L = mu * rng.uniform(1.0, 20.0);
        const QuadraticProblem qp(spread_quadratic(rng, 5, mu, L), rng.normal_vector(5));
        const auto F = CompositeObjective::quadratic(qp);
        auto cfg = MultistepConfig::bdf(order, 1.0, 1);
        const auto pre = theorem_bounds(cfg, qp.mu(), qp.L(), 0.0);
        cfg.beta = pre.beta_min_strongly_convex * rng.uniform(1.0, 4.0);
        cfg.inner = InnerSolver::exact;
        const auto b = theorem_bounds(cfg, qp.mu(), qp.L(), 0.0);
        const auto t = run(F, cfg, 5.0 * rng.normal_vector(5), 60);
        const double r0 = max_error_before(t, order);
        for (std::size_t k = order; k < t.records.size(); ++k)
            CHECK(*t.records[k].iterate_error <=
                  std::pow(b.block_factor, static_cast<double>(k / order)) * r0 * (1 + 1e-10) + 1e-13);
    }
}

TEST_CASE("inexact rate bound when gamma is below gamma_max") {
    Rng rng(47);
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int order = 1 + trial % 3;
        const double mu = rng.uniform(0.5, 2.0), L = mu * rng.uniform(1.0, 5.0);
        const QuadraticProblem qp(spread_quadratic(rng, 5, mu, L), rng.normal_vector(5));
        const auto F = CompositeObjective::quadratic(qp);
        auto cfg = MultistepConfig::bdf(order, 1.0, 1);
        cfg.beta = std::max(1.0, 3.0 * theorem_bounds(cfg, qp.mu(), qp.L(), 0.0).beta_min_strongly_convex);
        cfg.inner_start = InnerStart::mixed;
        const double gmax = theorem_bounds(cfg, qp.mu(), qp.L(), 0.0).gamma_max;
        int m = 1;
        while (gamma_bound(cfg.beta, qp.L(), m) >= gmax) ++m;
        cfg.inner_m = m;
        const double gamma = gamma_bound(cfg.beta, qp.L(), m);
        const auto b = theorem_bounds(cfg, qp.mu(), qp.L(), gamma);
        REQUIRE(b.block_factor < 1.0);
        const auto t = run(F, cfg, 5.0 * rng.normal_vector(5), 60);
        const double r0 = max_error_before(t, order);
        for (std::size_t k = order; k < t.records.size(); ++k) {
            CHECK(*t.records[k].iterate_error <=
                  std::pow(b.block_factor, static_cast<double>(k / order)) * r0 * (1 + 1e-10) + 1e-13);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("measured inner contraction stays below gamma_bound") {
    Rng rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        const double mu = rng.uniform(0.0, 1.0), L = rng.uniform(std::max(mu, 0.1), 10.0);
        const QuadraticProblem qp(spread_quadratic(rng, 4, std::max(mu, 1e-3), L), rng.normal_vector(4));
        const auto F = CompositeObjective::quadratic(qp);
        const double beta = rng.uniform(0.1, 5.0);
        const Vector anchor = rng.normal_vector(4), start = rng.normal_vector(4);
        const Vector exact = prox_quadratic(qp, anchor, beta);
        for (int m : {1, 4, 10}) {
            const Vector out = approx_prox(F, anchor, start, beta, m, beta / (beta * qp.L() + 1.0));
            CHECK((out - exact).norm() <= gamma_bound(beta, qp.L(), m) * (start - exact).norm() * (1 + 1e-12) + 1e-14);
        }
    }
}

TEST_CASE("epsilon_stationarity") {
    Rng rng(12);
    const Matrix q = random_spd(rng, 4, 0.5, 3.0);
    const QuadraticProblem qp(q, rng.normal_vector(4));
    const auto F = CompositeObjective::quadratic(qp);
    CHECK(epsilon_stationarity(F, qp.minimizer(), 0.8) <= 1e-8);

    const QuadraticProblem homogeneous(q);
    const auto G = CompositeObjective::quadratic(homogeneous);
    const Vector x = rng.normal_vector(4);
    const double beta = 0.6;
    const Matrix I = Matrix::Identity(4, 4);
    const double want = solve_linear(Matrix(I + beta * q), Vector(q * x)).norm();
    CHECK(epsilon_stationarity(G, x, beta) == doctest::Approx(want).epsilon(1e-10));
    CHECK(epsilon_stationarity(G, 2.0 * x, beta) == doctest::Approx(2.0 * want).epsilon(1e-10));
}

TEST_CASE("delta_constant") {
    const std::vector<double> one{1.0};
    CHECK(delta_constant(one) == 0.0);
    CHECK(delta_constant(bdf_coefficients(2).xi_exact) == Rational(1, 9));
    CHECK(delta_constant(bdf_coefficients(3).xi_exact) == Rational(194, 121));
    CHECK(delta_constant(bdf_coefficients(3).xi) == doctest::Approx(194.0 / 121.0));
}

TEST_CASE("weakly convex stationarity bound holds on the LSP toy") {
    for (double b : {0.3, 1.0, 2.5, -1.7}) {
        const double theta = 0.5;
        const auto F = lsp_toy(b, theta);
        REQUIRE(F.mu < 0.0);
        auto cfg = MultistepConfig::bdf(2, 1.0, 1);
        cfg.inner = InnerSolver::exact;
        const double delta = delta_constant(cfg.xi);
        const double beta_max = (1.0 - delta) / (-F.mu);
        for (double frac : {0.25, 0.5, 0.9}) {
            cfg.beta = frac * beta_max;
            for (double x0 : {-3.0, 0.7, 4.0}) {
                // global minimum by dense grid
                double fstar = F.value(Vector::Constant(1, 0.0));
                for (int i = -40000; i <= 40000; ++i) fstar = std::min(fstar, F.value(Vector::Constant(1, i * 1e-4)));
                auto keep = cfg;
                keep.keep_iterates = true;
                const auto tk = run(F, keep, Vector::Constant(1, x0), 40);
                double warm = 0.0;
                for (int s = 0; s < 2; ++s) warm += std::pow(tk.iterates[s + 1][0] - tk.iterates[s][0], 2);
                const double gap = F.value(tk.iterates[2]) - fstar;
                double best = std::numeric_limits<double>::infinity();
                // the bound after k steps covers iterates up to index tau + 1 + k
                for (std::size_t n = 0; n < tk.iterates.size(); ++n) {
                    best = std::min(best, epsilon_stationarity(F, tk.iterates[n], cfg.beta));
                    if (n < 4) continue;
                    CHECK(best <= weakly_convex_stationarity_bound(F.mu, cfg.beta, delta, gap, warm, n - 3) * (1 + 1e-9) +
                                      1e-12);
                }
            }
        }
    }
}

TEST_CASE("warmup policies agree when the warmup iterates coincide") {
    Rng rng(61);
    const QuadraticProblem qp(random_spd(rng, 3, 1.0, 4.0), rng.normal_vector(3));
    const auto F = CompositeObjective::quadratic(qp);

    // BDF2: the ramp rule at step one is BDF2 itself, so the traces match from the start.
    auto ramp = MultistepConfig::bdf(2, 1.0, 2);
    auto repeat = ramp;
    repeat.warmup = WarmupPolicy::repeat;
    const Vector x0 = rng.normal_vector(3);
    const auto a = run(F, ramp, x0, 30), b = run(F, repeat, x0, 30);
    for (std::size_t k = 0; k < a.records.size(); ++k) CHECK(a.records[k].objective == b.records[k].objective);

    // BDF3 from a fixed point: every warmup iterate equals x0.
    auto ramp3 = MultistepConfig::bdf(3, 1.0, 1);
    ramp3.inner = InnerSolver::exact;
    auto repeat3 = ramp3;
    repeat3.warmup = WarmupPolicy::repeat;
    const auto c = run(F, ramp3, qp.minimizer(), 10), d = run(F, repeat3, qp.minimizer(), 10);
    for (std::size_t k = 3; k < c.records.size(); ++k)
        CHECK(std::abs(c.records[k].objective - d.records[k].objective) <= 1e-14 * std::abs(d.records[k].objective) + 1e-15);
}

TEST_CASE("config validation") {
    MultistepConfig cfg;
    cfg.xi = {0.5, 0.4};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.xi = {};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = MultistepConfig::bdf(2, -1.0, 1);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
