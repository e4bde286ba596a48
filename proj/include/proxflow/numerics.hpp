#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "proxflow/errors.hpp"

namespace proxflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Numerical tolerances shared by the public operations.
struct Tolerances {
    static constexpr double symmetry = 1e-12;         // relative to max |A_ij|
    static constexpr double max_condition = 1e12;     // solve_linear rejects above this
    static constexpr double rank = 1e-10;             // relative to the largest pivot
    static constexpr double orthonormality = 1e-8;    // ||B^T B - I||_max for projectors
    static constexpr double root_residual = 1e-8;     // |p(r)| relative to max |coefficient|
    static constexpr double affine_sum = 1e-12;       // |sum(xi) - 1|
    static constexpr double divergence_norm = 1e12;   // iterate norm treated as divergence
    static constexpr std::size_t max_sym_dim = 2000;
    static constexpr int max_poly_degree = 16;
};

/// Eigenvalues of an operator with the largest modulus cached alongside.
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(std::vector<Complex> eigenvalues);

    const std::vector<Complex>& eigenvalues() const noexcept { return eigenvalues_; }
    double max_modulus() const noexcept { return max_modulus_; }
    /// Real parts; only meaningful for spectra of symmetric operators.
    std::vector<double> real_values() const;

private:
    std::vector<Complex> eigenvalues_;
    double max_modulus_ = 0.0;
};

struct SymEigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors
};

void require_finite(const Matrix& a, const char* what);
void require_finite(const Vector& v, const char* what);
void require_symmetric(const Matrix& a);

/// Real spectrum of a symmetric matrix, ascending.
Spectrum sym_eigen(const Matrix& a);
SymEigenDecomposition sym_eigen_decompose(const Matrix& a);

/// All complex roots of the monic polynomial eta^d + c[1] eta^(d-1) + ... + c[d].
/// `coeffs` holds d+1 entries in descending order and coeffs[0] must equal 1.
/// Uses Aberth-Ehrlich simultaneous iteration; tight root clusters are
/// collapsed onto their centroid, which is well-conditioned even when the
/// individual members are not.
std::vector<Complex> polynomial_roots(std::span<const double> coeffs);
double polynomial_max_root_modulus(std::span<const double> coeffs);

/// Horner evaluation of a real polynomial (descending coefficients) at a complex point.
Complex polynomial_eval(std::span<const double> coeffs, Complex z);

Vector solve_linear(const Matrix& a, const Vector& b);
Matrix solve_linear(const Matrix& a, const Matrix& b);

/// Orthonormal basis of col(C); throws RankError if C lacks full column rank.
Matrix orthonormal_basis(const Matrix& c);

/// Deterministic random stream.
///
/// Engine: std::mt19937_64 (MT19937-64, output fully specified by the C++
/// standard). Uniform draws take the top 53 bits of one engine output and
/// scale by 2^-53; normal draws use the Box-Muller transform on two uniforms
/// and cache the second variate. No standard-library distribution is used, so
/// streams are identical across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();
    std::uint64_t next_u64() { return engine_(); }
    /// Uniform index in [0, n).
    std::size_t index(std::size_t n);

    Vector normal_vector(Eigen::Index n);
    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

Rng seeded_rng(std::uint64_t seed);

/// Random matrix with orthonormal columns (Gaussian draw + QR).
Matrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Matrix random_spd(Rng& rng, Eigen::Index n, double lo, double hi);

}  // namespace proxflow
