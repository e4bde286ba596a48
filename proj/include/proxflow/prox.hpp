#pragma once

#include <functional>
#include <string_view>

#include "proxflow/numerics.hpp"

namespace proxflow {

/// Soft threshold: argmin_u t*|u| + (u - x)^2 / 2, elementwise.
Vector prox_l1(const Vector& x, double t);

/// Elementwise argmin_u beta*log(1 + |u|/theta) + (u - x)^2 / 2.
///
/// The positive stationary point is the larger root of
/// u^2 + (theta - |x|) u + beta - theta |x| = 0. It is returned (with the sign
/// of x) only when its objective is strictly below the objective at zero;
/// ties go to zero.
Vector prox_lsp(const Vector& x, double theta, double beta);
double prox_lsp_scalar(double x, double theta, double beta);

/// f(x) = x^T Q x / 2 + c^T x with Q symmetric positive semidefinite.
class QuadraticProblem {
public:
    QuadraticProblem(Matrix q, Vector c);
    explicit QuadraticProblem(Matrix q);

    const Matrix& q() const noexcept { return q_; }
    const Vector& c() const noexcept { return c_; }
    double mu() const noexcept { return mu_; }
    double L() const noexcept { return L_; }
    Eigen::Index dim() const noexcept { return q_.rows(); }

    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;
    /// Unique minimizer when mu > 0.
    Vector minimizer() const;

private:
    Matrix q_;
    Vector c_;
    double mu_ = 0.0;
    double L_ = 0.0;
};

/// Exact prox: solves (I + beta Q) z = x - beta c.
Vector prox_quadratic(const QuadraticProblem& p, const Vector& x, double beta);

/// Orthogonal projection B B^T x onto the span of orthonormal columns B.
Vector project_subspace(const Matrix& basis, const Vector& x);

/// Projector that checks orthonormality once and then applies cheaply.
class SubspaceProjector {
public:
    explicit SubspaceProjector(Matrix basis);
    Vector operator()(const Vector& x) const;
    const Matrix& basis() const noexcept { return basis_; }

private:
    Matrix basis_;
};

enum class ProxKind { l1, lsp, quadratic, subspace, zero };

std::string_view to_string(ProxKind kind);

/// prox of weight*h for one of the supported regularizers.
/// Weight 0 maps every point to itself.
class ProxOracle {
public:
    using Evaluator = std::function<Vector(const Vector&, double)>;

    ProxOracle(ProxKind kind, Evaluator eval, std::function<double(const Vector&)> value);

    Vector operator()(const Vector& x, double weight) const;
    /// h(x); +infinity outside the domain of an indicator.
    double value(const Vector& x) const { return value_(x); }
    ProxKind kind() const noexcept { return kind_; }

    static ProxOracle l1(double lambda);
    static ProxOracle lsp(double theta, double scale = 1.0);
    static ProxOracle quadratic(QuadraticProblem problem);
    static ProxOracle subspace(Matrix basis);
    static ProxOracle zero();

private:
    ProxKind kind_;
    Evaluator eval_;
    std::function<double(const Vector&)> value_;
};

}  // namespace proxflow
