#include "proxflow/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

namespace proxflow {

Spectrum::Spectrum(std::vector<Complex> eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
    for (const auto& e : eigenvalues_) max_modulus_ = std::max(max_modulus_, std::abs(e));
}

std::vector<double> Spectrum::real_values() const {
    std::vector<double> out;
    out.reserve(eigenvalues_.size());
    for (const auto& e : eigenvalues_) out.push_back(e.real());
    return out;
}

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) throw ValidationError(std::string(what) + " contains non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw ValidationError(std::string(what) + " contains non-finite entries");
}

void require_symmetric(const Matrix& a) {
    if (a.rows() != a.cols()) throw ValidationError("symmetric matrix must be square");
    require_finite(a, "matrix");
    const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
    const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > Tolerances::symmetry * scale) throw SymmetryError(asym);
}

namespace {

void check_sym_input(const Matrix& a) {
    if (a.rows() == 0) throw ValidationError("matrix must be non-empty");
    if (static_cast<std::size_t>(a.rows()) > Tolerances::max_sym_dim)
        throw ValidationError("sym_eigen: dimension exceeds " + std::to_string(Tolerances::max_sym_dim));
    require_symmetric(a);
}

}  // namespace

Spectrum sym_eigen(const Matrix& a) {
    check_sym_input(a);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("sym_eigen: eigensolver failed to converge");
    std::vector<Complex> ev;
    ev.reserve(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) ev.emplace_back(solver.eigenvalues()(i), 0.0);
    return Spectrum(std::move(ev));
}

SymEigenDecomposition sym_eigen_decompose(const Matrix& a) {
    check_sym_input(a);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) throw Error("sym_eigen: eigensolver failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// ---------------------------------------------------------------------------
// Polynomial roots

Complex polynomial_eval(std::span<const double> coeffs, Complex z) {
    Complex acc{0.0, 0.0};
    for (double c : coeffs) acc = acc * z + c;
    return acc;
}

namespace {

std::vector<Complex> quadratic_roots(double b, double c) {
    // eta^2 + b eta + c
    const double disc = b * b - 4.0 * c;
    const double scale = b * b + 4.0 * std::abs(c);
    if (std::abs(disc) <= 8.0 * std::numeric_limits<double>::epsilon() * scale) {
        return {Complex(-0.5 * b, 0.0), Complex(-0.5 * b, 0.0)};
    }
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        const double q = -0.5 * (b + std::copysign(s, b));
        if (q == 0.0) return {Complex(0.0, 0.0), Complex(0.0, 0.0)};
        return {Complex(q, 0.0), Complex(c / q, 0.0)};
    }
    const double im = 0.5 * std::sqrt(-disc);
    return {Complex(-0.5 * b, im), Complex(-0.5 * b, -im)};
}

std::vector<Complex> aberth(std::span<const double> p) {
    const int d = static_cast<int>(p.size()) - 1;
    // Fujiwara bound on root moduli.
    double bound = 0.0;
    for (int i = 1; i <= d; ++i) {
        double term = std::pow(std::abs(p[static_cast<std::size_t>(i)]), 1.0 / i);
        if (i == d) term = std::pow(std::abs(p[static_cast<std::size_t>(i)]) / 2.0, 1.0 / i);
        bound = std::max(bound, term);
    }
    bound = 2.0 * std::max(bound, 1e-300);

    std::vector<double> dp(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) dp[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] * (d - i);

    std::vector<Complex> z(static_cast<std::size_t>(d));
    const double center = -p[1] / d;
    for (int k = 0; k < d; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / d + 0.7;
        z[static_cast<std::size_t>(k)] = Complex(center, 0.0) + std::polar(0.5 * bound, angle);
    }

    constexpr int kMaxIter = 2000;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int iter = 0; iter < kMaxIter; ++iter) {
        double max_step = 0.0;
        for (int k = 0; k < d; ++k) {
            auto& zk = z[static_cast<std::size_t>(k)];
            const Complex pv = polynomial_eval(p, zk);
            if (pv == Complex(0.0, 0.0)) continue;
            const Complex dv = polynomial_eval(dp, zk);
            const Complex ratio = pv / dv;
            Complex sum{0.0, 0.0};
            for (int j = 0; j < d; ++j) {
                if (j == k) continue;
                const Complex diff = zk - z[static_cast<std::size_t>(j)];
                if (diff != Complex(0.0, 0.0)) sum += 1.0 / diff;
            }
            Complex w = ratio / (1.0 - ratio * sum);
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) w = ratio;
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) continue;
            zk -= w;
            max_step = std::max(max_step, std::abs(w) / std::max(1.0, std::abs(zk)));
        }
        if (max_step <= 4.0 * eps) break;
    }
    return z;
}

// Taylor coefficients of p about c, lowest order first: p(c + z) = sum_j t_j z^j.
std::vector<Complex> taylor_at(std::span<const double> p, Complex c) {
    std::vector<Complex> a(p.begin(), p.end());
    const std::size_t d = a.size() - 1;
    std::vector<Complex> t(d + 1);
    for (std::size_t j = 0; j <= d; ++j) {
        // synthetic division by (z - c); the remainder is t_j
        for (std::size_t i = 1; i + j <= d; ++i) a[i] += c * a[i - 1];
        t[j] = a[d - j];
    }
    return t;
}

// A k-fold root perturbed by rounding splits into a ring of radius ~eps^(1/k), far wider
// than any fixed tolerance. Loose groups are merged onto their centroid only when the
// Taylor coefficients below order k vanish there to rounding; otherwise only roots
// within a tight tolerance are merged.
void collapse_clusters(std::span<const double> p, std::vector<Complex>& roots) {
    constexpr double kTight = 1e-7, kLoose = 1e-2;
    const double eps = std::numeric_limits<double>::epsilon();
    const std::size_t n = roots.size();

    auto groups = [&](double tol) {
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (std::abs(roots[i] - roots[j]) <= tol * std::max(1.0, std::abs(roots[i]))) parent[find(i)] = find(j);
        std::vector<std::vector<std::size_t>> out(n);
        for (std::size_t i = 0; i < n; ++i) out[find(i)].push_back(i);
        return out;
    };
    auto centroid = [&](const std::vector<std::size_t>& g) {
        Complex c{0.0, 0.0};
        for (auto i : g) c += roots[i];
        return c / static_cast<double>(g.size());
    };

    std::vector<bool> settled(n, false);
    for (const auto& g : groups(kLoose)) {
        if (g.size() < 2) continue;
        const std::size_t k = g.size();
        Complex c = centroid(g);
        // the (k-1)th derivative has a simple root at a k-fold root: Newton on t_{k-1}
        for (int it = 0; it < 8; ++it) {
            const auto t = taylor_at(p, c);
            if (t[k] == Complex(0.0, 0.0)) break;
            const Complex step = t[k - 1] / (static_cast<double>(k) * t[k]);
            c -= step;
            if (std::abs(step) <= eps * std::max(1.0, std::abs(c))) break;
        }
        if (std::abs(c.imag()) <= eps * std::max(1.0, std::abs(c))) c = Complex(c.real(), 0.0);
        const auto t = taylor_at(p, c);
        double scale = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            scale += std::abs(p[i]) * std::pow(std::max(1.0, std::abs(c)), static_cast<double>(p.size() - 1 - i));
        bool multiple = true;
        for (std::size_t j = 0; j < g.size() && multiple; ++j) multiple = std::abs(t[j]) <= 1e3 * eps * scale;
        if (!multiple) continue;
        for (auto i : g) {
            roots[i] = c;
            settled[i] = true;
        }
    }
    for (const auto& g : groups(kTight)) {
        if (g.size() < 2) continue;
        bool fresh = true;
        for (auto i : g) fresh = fresh && !settled[i];
        if (!fresh) continue;
        const Complex c = centroid(g);
        for (auto i : g) roots[i] = c;
    }
}

}  // namespace

std::vector<Complex> polynomial_roots(std::span<const double> coeffs) {
    if (coeffs.size() < 2) throw ValidationError("polynomial must have degree >= 1");
    if (static_cast<int>(coeffs.size()) - 1 > Tolerances::max_poly_degree)
        throw ValidationError("polynomial degree exceeds " + std::to_string(Tolerances::max_poly_degree));
    if (coeffs[0] != 1.0) throw ValidationError("polynomial must be monic");
    for (double c : coeffs)
        if (!std::isfinite(c)) throw ValidationError("polynomial coefficients must be finite");

    std::size_t len = coeffs.size();
    std::size_t zeros = 0;
    while (len > 1 && coeffs[len - 1] == 0.0) {
        --len;
        ++zeros;
    }
    const auto p = coeffs.first(len);
    std::vector<Complex> roots;
    switch (len - 1) {
        case 0:
            break;
        case 1:
            roots.emplace_back(-p[1], 0.0);
            break;
        case 2:
            roots = quadratic_roots(p[1], p[2]);
            break;
        default:
            roots = aberth(p);
            collapse_clusters(p, roots);
            break;
    }
    roots.insert(roots.end(), zeros, Complex(0.0, 0.0));
    return roots;
}

double polynomial_max_root_modulus(std::span<const double> coeffs) {
    double best = 0.0;
    for (const auto& r : polynomial_roots(coeffs)) best = std::max(best, std::abs(r));
    return best;
}

// ---------------------------------------------------------------------------
// Linear algebra

namespace {

Eigen::PartialPivLU<Matrix> factor_checked(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) throw ValidationError("solve_linear: matrix must be square");
    require_finite(a, "solve_linear matrix");
    Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(cond <= Tolerances::max_condition)) throw SingularError(cond);
    return lu;
}

}  // namespace

Vector solve_linear(const Matrix& a, const Vector& b) {
    if (b.size() != a.rows()) throw ValidationError("solve_linear: dimension mismatch");
    require_finite(b, "solve_linear right-hand side");
    return factor_checked(a).solve(b);
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
    if (b.rows() != a.rows()) throw ValidationError("solve_linear: dimension mismatch");
    require_finite(b, "solve_linear right-hand side");
    return factor_checked(a).solve(b);
}

Matrix orthonormal_basis(const Matrix& c) {
    if (c.cols() == 0 || c.rows() == 0) throw ValidationError("orthonormal_basis: empty matrix");
    require_finite(c, "orthonormal_basis input");
    Eigen::ColPivHouseholderQR<Matrix> qr(c);
    qr.setThreshold(Tolerances::rank);
    const auto rank = static_cast<std::size_t>(qr.rank());
    if (rank < static_cast<std::size_t>(c.cols())) throw RankError(rank, static_cast<std::size_t>(c.cols()));
    Matrix basis = Matrix::Identity(c.rows(), c.cols());
    basis.applyOnTheLeft(qr.householderQ());
    return basis;
}

// ---------------------------------------------------------------------------
// Random numbers

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw ValidationError("Rng::index: empty range");
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

Vector Rng::normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
}

Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

Matrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    return orthonormal_basis(rng.normal_matrix(rows, cols));
}

Matrix random_spd(Rng& rng, Eigen::Index n, double lo, double hi) {
    const Matrix q = random_orthonormal(rng, n, n);
    Vector ev(n);
    for (Eigen::Index i = 0; i < n; ++i) ev(i) = rng.uniform(lo, hi);
    ev(0) = lo;
    if (n > 1) ev(n - 1) = hi;
    Matrix a = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

}  // namespace proxflow
