#include <catch2/catch_amalgamated.hpp>

#include "cpxapprox/algebra.hpp"

using namespace cpx;

namespace {
Vector vec2(Complex a, Complex b) {
    Vector v(2);
    v << a, b;
    return v;
}
}  // namespace

TEST_CASE("span_to_kernel coordinate subspace") {
    Matrix B(2, 1);
    B << Complex(1, 0), Complex(0, 0);
    Matrix K = span_to_kernel(B);
    REQUIRE(K.cols() == 1);
    REQUIRE(std::abs(pairing(K.col(0), B.col(0))) < 1e-12);
    // kernel is e2 up to scalar
    REQUIRE(std::abs(K(0, 0)) < 1e-12);
    REQUIRE(std::abs(std::abs(K(1, 0)) - 1.0) < 1e-12);
}

TEST_CASE("span_to_kernel (1,1) and (1,i)") {
    {
        Matrix B(2, 1);
        B.col(0) = vec2(1, 1);
        Matrix K = span_to_kernel(B);
        REQUIRE(std::abs(pairing(K.col(0), B.col(0))) < 1e-12);
        // proportional to (1,-1)
        REQUIRE(std::abs(K(0, 0) + K(1, 0)) < 1e-12);
    }
    {
        Matrix B(2, 1);
        B.col(0) = vec2(Complex(1, 0), Complex(0, 1));
        Matrix K = span_to_kernel(B);
        REQUIRE(std::abs(pairing(K.col(0), B.col(0))) < 1e-12);
    }
}

TEST_CASE("span_to_kernel rejects dependent basis") {
    Matrix B(3, 2);
    B.col(0) = Vector::Ones(3);
    B.col(1) = Vector::Ones(3) * Complex(2, 1);
    REQUIRE_THROWS_AS(span_to_kernel(B), DependentBasis);
}

TEST_CASE("span/kernel round trip on random subspaces") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + static_cast<int>(rng.integer(5));
        int d = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(n - 1)));
        Matrix B(n, d);
        for (int j = 0; j < d; ++j) B.col(j) = rng.cgaussian_vector(n);
        Subspace s = Subspace::from_span(B);
        REQUIRE(s.dim() == d);
        // original basis vectors annihilated by kernel
        for (int j = 0; j < d; ++j)
            REQUIRE((s.kernel().adjoint() * B.col(j)).cwiseAbs().maxCoeff() < 1e-9);
        // rebuild from kernel: same subspace (mutual containment)
        Subspace t = Subspace::from_kernel(s.kernel(), n);
        for (int j = 0; j < d; ++j) REQUIRE(t.contains(B.col(j), 1e-9));
        for (int j = 0; j < t.dim(); ++j) REQUIRE(s.contains(t.span().col(j), 1e-9));
    }
}

TEST_CASE("is_real_subspace basic cases") {
    {
        Matrix B = Matrix::Identity(2, 2);
        auto w = is_real_subspace(Subspace::from_span(B));
        REQUIRE(w.is_real);
        REQUIRE(w.real_basis->cols() == 2);
    }
    {
        Matrix B(2, 1);
        B.col(0) = vec2(Complex(1, 0), Complex(0, 1));
        auto w = is_real_subspace(Subspace::from_span(B));
        REQUIRE_FALSE(w.is_real);
    }
    {
        Matrix B(4, 1);
        B << Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1);
        auto w = is_real_subspace(Subspace::from_span(B));
        REQUIRE_FALSE(w.is_real);
    }
}

TEST_CASE("is_real_subspace on random real bases, also after complex recombination") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng.integer(4));
        int d = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(n - 1)));
        Matrix B(n, d);
        for (int j = 0; j < d; ++j)
            B.col(j) = rng.gaussian_vector(n).cast<Complex>();
        // mix the real basis with a random complex invertible matrix: still real subspace
        Matrix C(d, d);
        for (int j = 0; j < d; ++j) C.col(j) = rng.cgaussian_vector(d);
        Subspace s = Subspace::from_span(B * C);
        auto w = is_real_subspace(s);
        REQUIRE(w.is_real);
        // witnesses are mutually annihilating and consistent
        REQUIRE(w.real_basis->cols() == d);
        REQUIRE(w.real_kernel->cols() == n - d);
        if (d < n)
            REQUIRE((w.real_kernel->transpose() * *w.real_basis).cwiseAbs().maxCoeff() <
                    1e-10);
        for (int j = 0; j < d; ++j)
            REQUIRE(s.contains(w.real_basis->col(j).cast<Complex>(), 1e-9));
    }
}

TEST_CASE("phase_normalize") {
    Vector f(3);
    f << Complex(1, 0), Complex(0, 1), Complex(-1, 0);
    auto [mult, g] = phase_normalize(f);
    REQUIRE(g.isApprox(RealVector::Ones(3)));
    for (int j = 0; j < 3; ++j) REQUIRE(std::abs(mult[j] * f[j] - Complex(g[j])) < 1e-14);

    Vector f2(2);
    f2 << Complex(0, 0), Complex(0, 2);
    auto [m2, g2] = phase_normalize(f2);
    REQUIRE(m2[0] == Complex(1, 0));
    REQUIRE(g2[0] == 0.0);
    REQUIRE(g2[1] == 2.0);

    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Vector f3 = rng.cgaussian_vector(5);
        auto [m3, g3] = phase_normalize(f3);
        for (int j = 0; j < 5; ++j) {
            REQUIRE(std::abs(std::abs(m3[j]) - 1.0) < 1e-14);
            // reconstruct f from moduli and conjugate multipliers
            REQUIRE(std::abs(std::conj(m3[j]) * Complex(g3[j]) - f3[j]) < 1e-14);
        }
    }
}

TEST_CASE("modulus bound examples") {
    {
        auto b = modulus_lower_bounds(Complex(1, 0), Complex(0, 0), 0.0);
        REQUIRE(b.linear == Catch::Approx(1.0));
    }
    {
        auto b = modulus_lower_bounds(Complex(1, 0), Complex(0, 1), 0.4);
        REQUIRE(b.quadratic == Catch::Approx(1.04));
        REQUIRE(b.quadratic <= std::abs(Complex(1, 0) - 0.4 * Complex(0, 1)) + 1e-12);
    }
    {
        auto b = modulus_lower_bounds(Complex(2, 0), Complex(1, 0), 1.0);
        REQUIRE(b.linear == Catch::Approx(1.0));
    }
    REQUIRE_THROWS_AS(modulus_lower_bounds(Complex(0, 0), Complex(1, 0), 0.0), DomainError);
    REQUIRE_THROWS_AS(modulus_lower_bounds(Complex(1, 0), Complex(4, 0), 1.0), DomainError);
}

TEST_CASE("modulus bounds hold on 1e5 random samples") {
    Rng rng(7);
    for (int trial = 0; trial < 100000; ++trial) {
        Complex x = rng.cgaussian(), y = rng.cgaussian();
        if (std::abs(x) <= 1e-6) continue;
        double lin = modulus_linear_bound(x, y);
        REQUIRE(std::abs(x - y) >= lin - 1e-12);
        if (std::abs(std::abs(x - y) - lin) < 1e-12)
            REQUIRE(std::abs((std::conj(x) * y).imag()) <=
                    1e-6 * std::abs(x) * std::abs(y) + 1e-12);

        double t = rng.uniform(-1.0, 1.0);
        if (std::abs(t) * std::abs(y) <= std::abs(x) / 2.0) {
            auto b = modulus_lower_bounds(x, y, t);
            REQUIRE(std::abs(x - t * y) >= b.quadratic - 1e-12);
        }
    }
}
