#include <doctest.h>

#include "proxflow/prox.hpp"
#include "support.hpp"

using namespace proxflow;
using proxflow::testing::golden_argmin;
using proxflow::testing::grid_argmin;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

double lsp_scalar_objective(double u, double x, double theta, double beta) {
    return beta * std::log1p(std::abs(u) / theta) + 0.5 * (u - x) * (u - x);
}

}  // namespace

TEST_CASE("prox_l1 examples") {
    CHECK(prox_l1(v1(0.0), 1.0)[0] == 0.0);
    CHECK(prox_l1(v1(2.0), 0.5)[0] == doctest::Approx(1.5));
    CHECK(prox_l1(v1(-0.3), 0.5)[0] == 0.0);
    CHECK_THROWS_AS(prox_l1(v1(1.0), -0.1), ValidationError);

    // golden-section oracle on the 1-D objective
    const double u = golden_argmin([](double z) { return 0.5 * std::abs(z) + 0.5 * (z - 2.0) * (z - 2.0); }, -5, 5);
    CHECK(std::abs(u - 1.5) <= 1e-6);
}

TEST_CASE("prox_lsp examples") {
    CHECK(prox_lsp_scalar(0.0, 0.7, 3.0) == 0.0);
    CHECK(prox_lsp_scalar(2.0, 1.0, 0.1) == doctest::Approx(1.9665).epsilon(1e-4));
    // exact: larger root of u^2 - u - 1.9 = 0
    CHECK(std::abs(prox_lsp_scalar(2.0, 1.0, 0.1) - (1.0 + std::sqrt(8.6)) / 2.0) <= 1e-12);
    CHECK(prox_lsp_scalar(0.1, 1.0, 0.5) == 0.0);
    CHECK(prox_lsp_scalar(-2.0, 1.0, 0.1) == doctest::Approx(-1.9665).epsilon(1e-4));
    CHECK_THROWS_AS(prox_lsp(v1(1.0), 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(prox_lsp(v1(1.0), -1.0, 1.0), ValidationError);

    // stationarity of the nonzero branch: 10(u - 2) + 1/(1 + u) = 0 after scaling by 10
    const double u = prox_lsp_scalar(2.0, 1.0, 0.1);
    CHECK(std::abs((u - 2.0) + 0.1 / (1.0 + u)) <= 1e-12);
}

TEST_CASE("prox_l1 and prox_lsp agree with a brute-force grid") {
    Rng rng(91);
    for (int trial = 0; trial < 60; ++trial) {
        const double x = rng.uniform(-5.0, 5.0);
        const double t = rng.uniform(0.0, 2.0);
        const double lo = -2 * std::abs(x) - 2, hi = 2 * std::abs(x) + 2;
        const double g1 = grid_argmin([&](double u) { return t * std::abs(u) + 0.5 * (u - x) * (u - x); }, lo, hi,
                                      1000001);
        CHECK(std::abs(prox_l1(v1(x), t)[0] - g1) <= 1e-4);

        const double theta = rng.uniform(0.1, 3.0);
        const double beta = rng.uniform(0.0, 2.0);
        const double g2 = grid_argmin([&](double u) { return lsp_scalar_objective(u, x, theta, beta); }, lo, hi, 1000001);
        CHECK(std::abs(prox_lsp_scalar(x, theta, beta) - g2) <= 1e-4);
    }
}

TEST_CASE("prox_lsp breaks ties toward zero") {
    // Scan x upward until the nonzero branch first wins; just below, the answer must be 0.
    const double theta = 0.5, beta = 1.0;
    double prev = 0.0;
    for (double x = 0.0; x < 5.0; x += 1e-3) {
        const double u = prox_lsp_scalar(x, theta, beta);
        if (u != 0.0) {
            CHECK(lsp_scalar_objective(u, x, theta, beta) < lsp_scalar_objective(0.0, x, theta, beta));
            CHECK(prev == 0.0);
            break;
        }
        prev = u;
    }
}

TEST_CASE("every prox oracle is locally optimal") {
    Rng rng(17);
    const Eigen::Index n = 6;
    const Matrix q = random_spd(rng, n, 0.2, 4.0);
    const Vector c = rng.normal_vector(n);
    const QuadraticProblem qp(q, c);
    const Matrix basis = random_orthonormal(rng, n, 3);
    const std::vector<ProxOracle> oracles = {ProxOracle::l1(0.7), ProxOracle::lsp(0.8, 1.3), ProxOracle::quadratic(qp),
                                             ProxOracle::subspace(basis), ProxOracle::zero()};
    for (const auto& h : oracles) {
        INFO(to_string(h.kind()));
        for (int trial = 0; trial < 200; ++trial) {
            const Vector x = 2.0 * rng.normal_vector(n);
            const double w = rng.uniform(0.05, 2.0);
            const Vector u = h(x, w);
            auto obj = [&](const Vector& z) { return w * h.value(z) + 0.5 * (z - x).squaredNorm(); };
            const double at_u = obj(u);
            REQUIRE(std::isfinite(at_u));
            for (int p = 0; p < 10; ++p) {
                const Vector z = u + 1e-3 * rng.normal_vector(n);
                CHECK(at_u <= obj(z) + 1e-12);
            }
        }
    }
}

TEST_CASE("prox_l1 is firmly nonexpansive") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector x = 3.0 * rng.normal_vector(8), y = 3.0 * rng.normal_vector(8);
        const double t = rng.uniform(0.0, 2.0);
        const Vector px = prox_l1(x, t), py = prox_l1(y, t);
        CHECK((px - py).squaredNorm() <= (px - py).dot(x - y) + 1e-12);
        CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    }
}

TEST_CASE("prox_lsp obeys the weakly convex Lipschitz bound") {
    Rng rng(29);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const double theta = rng.uniform(0.5, 3.0);
        const double beta = rng.uniform(0.0, 0.99) * theta * theta;  // beta / theta^2 < 1
        const double weak = beta / (theta * theta);
        const Vector x = 3.0 * rng.normal_vector(5), y = 3.0 * rng.normal_vector(5);
        const double lhs = (prox_lsp(x, theta, beta) - prox_lsp(y, theta, beta)).norm();
        CHECK(lhs <= (x - y).norm() / (1.0 - weak) + 1e-12);
        ++checked;
    }
    CHECK(checked == 500);
}

TEST_CASE("prox_quadratic") {
    const QuadraticProblem id(Matrix::Identity(2, 2));
    Vector x(2);
    x << 2, 4;
    const Vector z = prox_quadratic(id, x, 1.0);
    CHECK(z[0] == doctest::Approx(1.0));
    CHECK(z[1] == doctest::Approx(2.0));
    CHECK(prox_quadratic(id, x, 0.0) == x);

    Rng rng(5);
    const QuadraticProblem p(random_spd(rng, 5, 0.1, 5.0), rng.normal_vector(5));
    const Vector y = rng.normal_vector(5);
    const Vector u = prox_quadratic(p, y, 0.7);
    CHECK(((u - y) / 0.7 + p.gradient(u)).norm() <= 1e-9);
}

TEST_CASE("QuadraticProblem constants") {
    Matrix q = Matrix::Zero(3, 3);
    q.diagonal() << 1, 2, 10;
    const QuadraticProblem p(q);
    CHECK(p.mu() == doctest::Approx(1.0));
    CHECK(p.L() == doctest::Approx(10.0));
    CHECK(p.minimizer().norm() <= 1e-14);
    Matrix indefinite = q;
    indefinite(0, 0) = -1;
    CHECK_THROWS_AS(QuadraticProblem{indefinite}, ValidationError);
}

TEST_CASE("subspace projection") {
    Rng rng(4);
    const Matrix b = random_orthonormal(rng, 7, 3);
    const Vector in = b * rng.normal_vector(3);
    CHECK((project_subspace(b, in) - in).norm() <= 1e-12);

    const Matrix full = random_orthonormal(rng, 7, 7);
    const Matrix basis = full.leftCols(3);
    const Vector perp = full.rightCols(4) * rng.normal_vector(4);
    CHECK(project_subspace(basis, perp).norm() <= 1e-12);

    const Vector x = rng.normal_vector(7);
    const SubspaceProjector P(b);
    const Vector px = P(x);
    CHECK((P(px) - px).norm() <= 1e-12);
    CHECK(std::abs((x - px).dot(px)) <= 1e-12);

    Matrix skew = b;
    skew.col(0) *= 2.0;
    CHECK_THROWS_AS(SubspaceProjector{skew}, ValidationError);
}

TEST_CASE("ProxOracle zero weight is the identity") {
    const Vector x = Vector::LinSpaced(4, -2, 2);
    CHECK(ProxOracle::l1(3.0)(x, 0.0) == x);
    CHECK(ProxOracle::lsp(1.0)(x, 0.0) == x);
    CHECK_THROWS_AS(ProxOracle::l1(1.0)(x, -1.0), ValidationError);
}
