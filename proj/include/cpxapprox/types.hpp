#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>

namespace cpx {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define CPX_DEFINE_ERROR(Name)                          \
    struct Name : Error {                               \
        using Error::Error;                             \
        Name() : Error(#Name) {}                        \
    }

CPX_DEFINE_ERROR(DependentBasis);
CPX_DEFINE_ERROR(DomainError);
CPX_DEFINE_ERROR(Infeasible);
CPX_DEFINE_ERROR(WrongNormKind);
CPX_DEFINE_ERROR(PrerequisiteFailed);
CPX_DEFINE_ERROR(PreconditionViolated);
CPX_DEFINE_ERROR(NoCertificate);
CPX_DEFINE_ERROR(NotRealNorm);
CPX_DEFINE_ERROR(RetryExhausted);
CPX_DEFINE_ERROR(DegeneratePoints);
CPX_DEFINE_ERROR(Unsupported);
CPX_DEFINE_ERROR(SpanLost);
CPX_DEFINE_ERROR(ParseError);
CPX_DEFINE_ERROR(ValidationError);
CPX_DEFINE_ERROR(UnknownCase);

#undef CPX_DEFINE_ERROR

// Functionals are stored as vectors and act through the standard (sesquilinear)
// inner product: pairing(f, x) = <x, f> = sum_i conj(f_i) x_i.
inline Complex pairing(const Vector& f, const Vector& x) { return f.dot(x); }

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, const char* what = "vector") {
    if (!v.allFinite()) throw ValidationError(std::string(what) + " has non-finite entries");
}

// Deterministic RNG wrapper used by every stochastic routine; seeds are always explicit.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double gaussian() { return normal_(gen_); }
    Complex cgaussian() { return Complex(normal_(gen_), normal_(gen_)); }

    Vector cgaussian_vector(Eigen::Index n) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cgaussian();
        return v;
    }
    RealVector gaussian_vector(Eigen::Index n) {
        RealVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal_(gen_);
        return v;
    }
    Complex unit_phase() {
        double th = uniform(0.0, 2.0 * M_PI);
        return Complex(std::cos(th), std::sin(th));
    }
    std::uint64_t integer(std::uint64_t bound) {
        return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(gen_);
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cpx
