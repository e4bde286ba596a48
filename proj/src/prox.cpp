#include "proxflow/prox.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace proxflow {

Vector prox_l1(const Vector& x, double t) {
    if (!(t >= 0.0)) throw ValidationError("prox_l1: threshold must be >= 0");
    require_finite(x, "prox_l1 input");
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x(i);
        out(i) = std::abs(xi) > t ? xi - std::copysign(t, xi) : 0.0;
    }
    return out;
}

double prox_lsp_scalar(double x, double theta, double beta) {
    const double a = std::abs(x);
    if (a == 0.0) return 0.0;
    const double disc = (a + theta) * (a + theta) - 4.0 * beta;
    if (disc < 0.0) return 0.0;
    const double u = 0.5 * ((a - theta) + std::sqrt(disc));
    if (u <= 0.0) return 0.0;
    const double obj_u = beta * std::log1p(u / theta) + 0.5 * (u - a) * (u - a);
    const double obj_0 = 0.5 * a * a;
    return obj_u < obj_0 ? std::copysign(u, x) : 0.0;
}

Vector prox_lsp(const Vector& x, double theta, double beta) {
    if (!(theta > 0.0)) throw ValidationError("prox_lsp: theta must be > 0");
    if (!(beta >= 0.0)) throw ValidationError("prox_lsp: beta must be >= 0");
    require_finite(x, "prox_lsp input");
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = prox_lsp_scalar(x(i), theta, beta);
    return out;
}

// ---------------------------------------------------------------------------

QuadraticProblem::QuadraticProblem(Matrix q, Vector c) : q_(std::move(q)), c_(std::move(c)) {
    if (c_.size() != q_.rows()) throw ValidationError("QuadraticProblem: linear term has wrong size");
    require_finite(c_, "QuadraticProblem linear term");
    const auto spec = sym_eigen(q_).real_values();
    mu_ = spec.front();
    L_ = spec.back();
    if (mu_ < -1e-12 * std::max(1.0, std::abs(L_)))
        throw ValidationError("QuadraticProblem: Q must be positive semidefinite");
    mu_ = std::max(mu_, 0.0);
    if (!(L_ > 0.0)) throw ValidationError("QuadraticProblem: Q must be nonzero");
}

QuadraticProblem::QuadraticProblem(Matrix q) : QuadraticProblem(q, Vector::Zero(q.rows())) {}

double QuadraticProblem::value(const Vector& x) const { return 0.5 * x.dot(q_ * x) + c_.dot(x); }

Vector QuadraticProblem::gradient(const Vector& x) const { return q_ * x + c_; }

Vector QuadraticProblem::minimizer() const {
    if (!(mu_ > 0.0)) throw DegenerateParameterError("QuadraticProblem: minimizer requires mu > 0");
    return solve_linear(q_, Vector(-c_));
}

Vector prox_quadratic(const QuadraticProblem& p, const Vector& x, double beta) {
    if (!(beta >= 0.0)) throw ValidationError("prox_quadratic: beta must be >= 0");
    if (x.size() != p.dim()) throw ValidationError("prox_quadratic: dimension mismatch");
    if (beta == 0.0) return x;
    const Matrix system = Matrix::Identity(p.dim(), p.dim()) + beta * p.q();
    return solve_linear(system, Vector(x - beta * p.c()));
}

// ---------------------------------------------------------------------------

namespace {

void require_orthonormal(const Matrix& basis) {
    require_finite(basis, "subspace basis");
    const Matrix gram = basis.transpose() * basis;
    const double err = (gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
    if (err > Tolerances::orthonormality)
        throw ValidationError("subspace basis is not orthonormal: max |B^T B - I| = " + std::to_string(err));
}

}  // namespace

Vector project_subspace(const Matrix& basis, const Vector& x) {
    if (x.size() != basis.rows()) throw ValidationError("project_subspace: dimension mismatch");
    require_orthonormal(basis);
    return basis * (basis.transpose() * x);
}

SubspaceProjector::SubspaceProjector(Matrix basis) : basis_(std::move(basis)) { require_orthonormal(basis_); }

Vector SubspaceProjector::operator()(const Vector& x) const {
    if (x.size() != basis_.rows()) throw ValidationError("SubspaceProjector: dimension mismatch");
    return basis_ * (basis_.transpose() * x);
}

// ---------------------------------------------------------------------------

std::string_view to_string(ProxKind kind) {
    switch (kind) {
        case ProxKind::l1: return "l1";
        case ProxKind::lsp: return "lsp";
        case ProxKind::quadratic: return "quadratic";
        case ProxKind::subspace: return "subspace";
        case ProxKind::zero: return "zero";
    }
    return "unknown";
}

ProxOracle::ProxOracle(ProxKind kind, Evaluator eval, std::function<double(const Vector&)> value)
    : kind_(kind), eval_(std::move(eval)), value_(std::move(value)) {}

Vector ProxOracle::operator()(const Vector& x, double weight) const {
    if (!(weight >= 0.0)) throw ValidationError("prox weight must be >= 0");
    if (weight == 0.0) return x;
    return eval_(x, weight);
}

ProxOracle ProxOracle::l1(double lambda) {
    if (!(lambda >= 0.0)) throw ValidationError("l1 weight must be >= 0");
    return ProxOracle(
        ProxKind::l1, [lambda](const Vector& x, double w) { return prox_l1(x, lambda * w); },
        [lambda](const Vector& x) { return lambda * x.lpNorm<1>(); });
}

ProxOracle ProxOracle::lsp(double theta, double scale) {
    if (!(theta > 0.0)) throw ValidationError("lsp theta must be > 0");
    if (!(scale >= 0.0)) throw ValidationError("lsp scale must be >= 0");
    return ProxOracle(
        ProxKind::lsp, [theta, scale](const Vector& x, double w) { return prox_lsp(x, theta, scale * w); },
        [theta, scale](const Vector& x) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) s += std::log1p(std::abs(x(i)) / theta);
            return scale * s;
        });
}

ProxOracle ProxOracle::quadratic(QuadraticProblem problem) {
    auto shared = std::make_shared<const QuadraticProblem>(std::move(problem));
    return ProxOracle(
        ProxKind::quadratic, [shared](const Vector& x, double w) { return prox_quadratic(*shared, x, w); },
        [shared](const Vector& x) { return shared->value(x); });
}

ProxOracle ProxOracle::subspace(Matrix basis) {
    auto proj = std::make_shared<const SubspaceProjector>(std::move(basis));
    return ProxOracle(
        ProxKind::subspace, [proj](const Vector& x, double) { return (*proj)(x); },
        [proj](const Vector& x) {
            const double gap = (x - (*proj)(x)).norm();
            return gap <= 1e-9 * (1.0 + x.norm()) ? 0.0 : std::numeric_limits<double>::infinity();
        });
}

ProxOracle ProxOracle::zero() {
    return ProxOracle(
        ProxKind::zero, [](const Vector& x, double) { return x; }, [](const Vector&) { return 0.0; });
}

}  // namespace proxflow
