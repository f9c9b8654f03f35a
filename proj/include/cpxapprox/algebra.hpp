#pragma once

#include <optional>
#include <utility>

#include "cpxapprox/types.hpp"

namespace cpx {

inline constexpr double kRankTol = 1e-10;

// Columns of the returned matrix are functionals f with pairing(f, b) = 0 for every
// basis column b, i.e. an orthonormal basis of null(B^H).
inline Matrix span_to_kernel(const Matrix& basis) {
    const Eigen::Index n = basis.rows();
    const Eigen::Index d = basis.cols();
    if (d == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    if (sv(d - 1) < kRankTol * sv(0)) throw DependentBasis();
    return svd.matrixU().rightCols(n - d);
}

inline Matrix kernel_to_span(const Matrix& kernel_funcs, Eigen::Index n) {
    if (kernel_funcs.cols() == 0) return Matrix::Identity(n, n);
    return span_to_kernel(kernel_funcs);
}

// A linear subspace of C^n carried in both span form (basis columns) and kernel
// form (annihilating functionals); the two are synchronized at construction.
class Subspace {
public:
    static Subspace from_span(const Matrix& basis) {
        Subspace s;
        s.span_ = orthonormalize(basis);
        s.kernel_ = span_to_kernel(s.span_);
        s.check();
        return s;
    }
    static Subspace from_kernel(const Matrix& kernel_funcs, Eigen::Index n) {
        Subspace s;
        s.kernel_ = orthonormalize(kernel_funcs);
        s.span_ = kernel_to_span(s.kernel_, n);
        s.check();
        return s;
    }

    Eigen::Index ambient_dim() const { return span_.rows(); }
    Eigen::Index dim() const { return span_.cols(); }
    const Matrix& span() const { return span_; }
    const Matrix& kernel() const { return kernel_; }

    bool contains(const Vector& v, double tol = 1e-9) const {
        if (dim() == 0) return v.norm() <= tol * (1.0 + v.norm());
        Vector proj = span_ * (span_.adjoint() * v);
        return (v - proj).norm() <= tol * (1.0 + v.norm());
    }

    Vector project(const Vector& v) const {
        if (dim() == 0) return Vector::Zero(ambient_dim());
        return span_ * (span_.adjoint() * v);
    }

private:
    static Matrix orthonormalize(const Matrix& m) {
        if (m.cols() == 0) return m;
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        if (sv(m.cols() - 1) < kRankTol * sv(0)) throw DependentBasis();
        return svd.matrixU().leftCols(m.cols());
    }
    void check() const {
        if (kernel_.cols() > 0 && span_.cols() > 0) {
            double res = (kernel_.adjoint() * span_).cwiseAbs().maxCoeff();
            if (res > 1e-10) throw ValidationError("subspace span/kernel mismatch");
        }
    }

    Matrix span_;
    Matrix kernel_;
};

struct RealSubspaceWitness {
    bool is_real = false;
    std::optional<RealMatrix> real_basis;   // columns, d of them
    std::optional<RealMatrix> real_kernel;  // columns, n-d of them
};

// A subspace is "real" when it is closed under taking real parts; equivalently it
// admits a basis of real vectors. The witness carries that basis and a real basis
// of the orthogonal complement.
inline RealSubspaceWitness is_real_subspace(const Subspace& sub) {
    const Eigen::Index n = sub.ambient_dim();
    const Eigen::Index d = sub.dim();
    RealSubspaceWitness w;
    // re(b) and im(b) must stay inside the complex span for every basis vector.
    for (Eigen::Index j = 0; j < d; ++j) {
        Vector b = sub.span().col(j);
        Vector re = b.real().cast<Complex>();
        Vector im = b.imag().cast<Complex>();
        if (!sub.contains(re, 1e-10) || !sub.contains(im, 1e-10)) return w;
    }
    // Extract d independent real vectors from the stacked real/imag parts.
    RealMatrix cand(n, 2 * d);
    for (Eigen::Index j = 0; j < d; ++j) {
        cand.col(2 * j) = sub.span().col(j).real();
        cand.col(2 * j + 1) = sub.span().col(j).imag();
    }
    Eigen::ColPivHouseholderQR<RealMatrix> qr(cand);
    qr.setThreshold(1e-10);
    if (qr.rank() != d) return w;  // real parts fail to span a d-dimensional real space
    Eigen::HouseholderQR<RealMatrix> thin(cand * qr.colsPermutation());
    RealMatrix q = thin.householderQ();
    w.is_real = true;
    w.real_basis = q.leftCols(d);
    w.real_kernel = q.rightCols(n - d);
    return w;
}

// Returns unit-modulus multipliers s and the modulus vector g with s_j * f_j = g_j >= 0.
inline std::pair<Vector, RealVector> phase_normalize(const Vector& f) {
    const Eigen::Index n = f.size();
    Vector mult(n);
    RealVector g(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double m = std::abs(f[j]);
        g[j] = m;
        mult[j] = (m == 0.0) ? Complex(1.0, 0.0) : std::conj(f[j]) / m;
    }
    return {mult, g};
}

struct ModulusBounds {
    double linear;
    double quadratic;
};

// Guaranteed lower bounds: |x - y| >= linear and |x - t y| >= quadratic.
inline ModulusBounds modulus_lower_bounds(Complex x, Complex y, double t) {
    double ax = std::abs(x);
    if (ax == 0.0) throw DomainError("modulus_lower_bounds: |x| = 0");
    if (std::abs(t) * std::abs(y) > ax / 2.0)
        throw DomainError("modulus_lower_bounds: |ty| > |x|/2");
    Complex xy = std::conj(x) * y;
    double re = xy.real() / ax;
    double im = xy.imag();
    return {ax - re, ax - t * re + t * t * im * im / (4.0 * ax * ax * ax)};
}

inline double modulus_linear_bound(Complex x, Complex y) {
    double ax = std::abs(x);
    if (ax == 0.0) throw DomainError("modulus_linear_bound: |x| = 0");
    return ax - (std::conj(x) * y).real() / ax;
}

}  // namespace cpx
