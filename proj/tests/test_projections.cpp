#include <catch2/catch_amalgamated.hpp>

#include "cpxapprox/projections.hpp"

using namespace cpx;

namespace {

Vector cvec(std::initializer_list<Complex> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (Complex x : xs) v[i++] = x;
    return v;
}

void check_projection_invariants(const ProjectionRep& P) {
    Matrix M = projection_matrix(P);
    REQUIRE((M * M - M).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index i = 0; i < P.Y.dim(); ++i) {
        Vector y = P.Y.span().col(i);
        REQUIRE((M * y - y).norm() < 1e-9);
    }
    for (Eigen::Index j = 0; j < P.g.cols(); ++j)
        for (Eigen::Index k = 0; k < P.w.cols(); ++k) {
            Complex target = (j == k) ? Complex(1, 0) : Complex(0, 0);
            REQUIRE(std::abs(pairing(P.g.col(j), P.w.col(k)) - target) < 1e-9);
        }
}

Matrix random_spanning(Rng& rng, int n, int N) {
    while (true) {
        Matrix V(n, N);
        for (int j = 0; j < N; ++j) V.col(j) = rng.cgaussian_vector(n);
        Eigen::JacobiSVD<Matrix> svd(V);
        if (svd.singularValues()(n - 1) > 1e-2 * svd.singularValues()(0)) return V;
    }
}

}  // namespace

TEST_CASE("operator norm on simple operators") {
    REQUIRE(operator_norm(Matrix::Identity(2, 2), NormHandle::l1(2), NormHandle::l1(2)) ==
            Catch::Approx(1.0).margin(1e-10));
    Matrix L = Matrix::Zero(2, 2);
    L(0, 0) = Complex(1, 0);
    REQUIRE(operator_norm(L, NormHandle::linf(2), NormHandle::linf(2)) ==
            Catch::Approx(1.0).margin(1e-10));
    REQUIRE_THROWS_AS(
        operator_norm(L, NormHandle::linf(2), NormHandle::l1(2)), Unsupported);
}

TEST_CASE("operator norm routes agree when both apply") {
    Rng rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng.integer(2));
        NormHandle dom = NormHandle::vertex(random_spanning(rng, n, n + 1));
        NormHandle cod = NormHandle::facet(random_spanning(rng, n, n + 1));
        Matrix L(n, n);
        for (int j = 0; j < n; ++j) L.col(j) = rng.cgaussian_vector(n);
        double via_vertex = operator_norm(L, dom, cod);
        double via_facet = 0.0;
        for (Eigen::Index k = 0; k < cod.count(); ++k)
            via_facet = std::max(
                via_facet, dual_norm_eval(dom, L.adjoint() * cod.generators().col(k)));
        REQUIRE(via_vertex == Catch::Approx(via_facet).margin(1e-7 * (1 + via_vertex)));
    }
}

TEST_CASE("sup-norm hyperplane closed form: symmetric functional") {
    Vector f = cvec({Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0)});
    auto res = linfty_hyperplane_minimal(f);
    REQUIRE(res.lambda == Catch::Approx(1.0 / 3).margin(1e-12));
    REQUIRE(res.norm == Catch::Approx(4.0 / 3).margin(1e-12));
    for (Eigen::Index j = 0; j < 3; ++j)
        REQUIRE(std::abs(res.P.w(j, 0) - Complex(1, 0)) < 1e-12);
    check_projection_invariants(res.P);
    NormHandle h = NormHandle::linf(3);
    Matrix M = projection_matrix(res.P);
    REQUIRE(operator_norm(M, h, h) == Catch::Approx(res.norm).margin(1e-9));
    // sampled oracle: sup of ||P z|| over random unit vectors, with a short local
    // polish of the best sample, approaches the norm
    Rng rng(72);
    double samp = 0.0;
    Vector best_z(3);
    for (int t = 0; t < 100000; ++t) {
        Vector z(3);
        for (int i = 0; i < 3; ++i) z[i] = rng.unit_phase();
        double v = norm_eval(h, M * z);
        if (v > samp) {
            samp = v;
            best_z = z;
        }
    }
    double step = 0.2;
    for (int t = 0; t < 400; ++t) {
        Vector z(3);
        for (int i = 0; i < 3; ++i)
            z[i] = best_z[i] * std::polar(1.0, step * rng.gaussian());
        double v = norm_eval(h, M * z);
        if (v > samp) {
            samp = v;
            best_z = z;
        }
        step = std::max(1e-4, step * 0.99);
    }
    REQUIRE(samp <= res.norm + 1e-9);
    REQUIRE(samp >= res.norm - 1e-3);
}

TEST_CASE("sup-norm hyperplane closed form: asymmetric and complex functionals") {
    {
        Vector f = cvec({Complex(0.4, 0), Complex(0.3, 0), Complex(0.3, 0)});
        auto res = linfty_hyperplane_minimal(f);
        REQUIRE(res.lambda == Catch::Approx(1.0 / 3.5).margin(1e-12));
        REQUIRE(res.norm == Catch::Approx(1.0 + 2.0 / 7.0).margin(1e-12));
        check_projection_invariants(res.P);
    }
    {
        // unit-modulus coordinate isometries leave the projection constant unchanged
        Complex i(0, 1);
        Vector f = cvec({Complex(1.0 / 3, 0), i / 3.0, -Complex(1.0 / 3, 0)});
        auto res = linfty_hyperplane_minimal(f);
        REQUIRE(res.norm == Catch::Approx(4.0 / 3).margin(1e-12));
        check_projection_invariants(res.P);
        NormHandle h = NormHandle::linf(3);
        REQUIRE(operator_norm(projection_matrix(res.P), h, h) ==
                Catch::Approx(4.0 / 3).margin(1e-9));
    }
    {
        Vector f = cvec({Complex(0.5, 0), Complex(0.5, 0)});
        REQUIRE_THROWS_AS(linfty_hyperplane_minimal(f), PreconditionViolated);
    }
}

TEST_CASE("hyperplane projection norm formula") {
    RealVector f(3);
    f << 1.0 / 3, 1.0 / 3, 1.0 / 3;
    Vector v = cvec({Complex(1, 0), Complex(1, 0), Complex(1, 0)});
    REQUIRE(hyperplane_proj_norm_linfty(f, v) == Catch::Approx(4.0 / 3).margin(1e-12));

    // tilted v: formula agrees with the exact operator norm
    Complex i(0, 1);
    Vector u = cvec({Complex(1, 0), Complex(1, 0), Complex(-2, 0)});
    Vector vt = v + 0.1 * i * u;
    double by_formula = hyperplane_proj_norm_linfty(f, vt);
    Vector fc = f.cast<Complex>();
    Matrix Q = Matrix::Identity(3, 3) - vt * fc.adjoint();
    NormHandle h = NormHandle::linf(3);
    REQUIRE(by_formula == Catch::Approx(operator_norm(Q, h, h)).margin(1e-8));

    RealVector f2(2);
    f2 << 0.5, 0.5;
    Vector v2 = cvec({Complex(1, 0), Complex(1, 0)});
    REQUIRE(hyperplane_proj_norm_linfty(f2, v2) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("minimal projection search meets the sup-norm closed form") {
    Vector f = cvec({Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0)});
    Matrix fk(3, 1);
    fk.col(0) = f;
    Subspace Y = Subspace::from_kernel(fk, 3);
    auto res = minimal_projection_search(NormHandle::linf(3), Y, 1e-6, 20, 7, 200);
    REQUIRE(res.value == Catch::Approx(4.0 / 3).margin(1e-5));
    check_projection_invariants(res.P);
}

TEST_CASE("minimal projection search finds norm-one coordinate projections") {
    Matrix fk(2, 1);
    fk.col(0) = cvec({Complex(1, 0), Complex(0, 0)});
    Subspace Y = Subspace::from_kernel(fk, 2);
    auto res = minimal_projection_search(NormHandle::linf(2), Y, 1e-6, 10, 3, 120);
    REQUIRE(res.value == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("minimal projection search matches a grid on an l1 hyperplane") {
    Matrix fk(2, 1);
    fk.col(0) = cvec({Complex(1, 0), Complex(1, 0)});
    Subspace Y = Subspace::from_kernel(fk, 2);
    NormHandle h = NormHandle::l1(2);
    auto res = minimal_projection_search(h, Y, 1e-6, 20, 5, 200);
    check_projection_invariants(res.P);

    // brute force over the 2-real-parameter family of projections onto Y
    const Matrix& S = Y.span();
    const Matrix& K = Y.kernel();
    double grid_best = std::numeric_limits<double>::infinity();
    for (double a = -1.0; a <= 1.0; a += 0.01) {
        for (double b = -1.0; b <= 1.0; b += 0.01) {
            Matrix C(1, 1);
            C(0, 0) = Complex(a, b);
            Matrix W = K + S * C;
            Matrix M = Matrix::Identity(2, 2) - W * K.adjoint();
            grid_best = std::min(grid_best, operator_norm(M, h, h));
        }
    }
    REQUIRE(res.value <= grid_best + 1e-9);
    REQUIRE(res.value >= grid_best - 1e-3);
}

TEST_CASE("Chalmers-Metcalf certificate for the symmetric sup-norm hyperplane") {
    Vector f = cvec({Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0)});
    auto res = linfty_hyperplane_minimal(f);
    NormHandle h = NormHandle::linf(3);
    auto cm = chalmers_metcalf(res.P, h);
    REQUIRE(cm.trace == Catch::Approx(4.0 / 3).margin(1e-6));
    REQUIRE(cm.all_weights_positive);
    REQUIRE(cm.no_common_kernel_on_Y);
    REQUIRE((res.P.Y.kernel().adjoint() * cm.T * res.P.Y.span()).cwiseAbs().maxCoeff() <=
            1e-7);
    double wsum = cm.weights.sum();
    REQUIRE(wsum == Catch::Approx(1.0).margin(1e-9));
    for (const auto& pr : cm.pairs) {
        REQUIRE(norm_eval(h, pr.x) == Catch::Approx(1.0).margin(1e-8));
        REQUIRE(dual_norm_eval(h, pr.f) <= 1.0 + 1e-8);
        Complex val = pairing(pr.f, projection_matrix(res.P) * pr.x);
        REQUIRE(std::abs(val - Complex(4.0 / 3, 0)) < 1e-6);
    }
}

TEST_CASE("Chalmers-Metcalf on a one-complemented hyperplane") {
    Matrix g(2, 1), w(2, 1);
    g.col(0) = cvec({Complex(1, 0), Complex(0, 0)});
    w.col(0) = cvec({Complex(1, 0), Complex(0, 0)});
    Subspace Y = Subspace::from_kernel(g, 2);
    auto P = make_projection(Y, g, w);
    auto cm = chalmers_metcalf(P, NormHandle::linf(2));
    REQUIRE(cm.trace == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("Chalmers-Metcalf rejects a non-minimal projection") {
    Vector f = cvec({Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0)});
    auto res = linfty_hyperplane_minimal(f);
    // move w inside the constraint surface f(w) = 1 by a direction from Y
    Vector y = cvec({Complex(1, 0), Complex(-1, 0), Complex(0, 0)});
    Matrix w2 = res.P.w;
    w2.col(0) += 0.1 * y;
    auto bad = make_projection(res.P.Y, res.P.g, w2);
    REQUIRE_THROWS_AS(chalmers_metcalf(bad, NormHandle::linf(3)), NoCertificate);
}

TEST_CASE("projection tilt probe on the symmetric sup-norm hyperplane") {
    Vector f = cvec({Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0)});
    auto res = linfty_hyperplane_minimal(f);
    NormHandle h = NormHandle::linf(3);
    Vector u = cvec({Complex(0.5, 0), Complex(0.5, 0), Complex(-1, 0)});
    std::vector<double> ts;
    for (int k = 0; k <= 21; ++k) ts.push_back(std::pow(10.0, -k));

    auto low = proj_alpha_probe(h, res.P, u, 1.5, ts);
    REQUIRE(low.verdict == ProbeVerdict::Vanishing);
    auto mid = proj_alpha_probe(h, res.P, u, 1.9, ts);
    REQUIRE(mid.verdict == ProbeVerdict::Vanishing);
    auto two = proj_alpha_probe(h, res.P, u, 2.0, ts);
    REQUIRE(two.verdict == ProbeVerdict::BoundedBelow);
    // the exact second-order coefficient of the worst coordinate expression
    REQUIRE(two.ratios.back() == Catch::Approx(10.0 / 9.0).margin(1e-6));
}

TEST_CASE("tilt probe agrees with direct operator norms at moderate scales") {
    Vector f = cvec({Complex(0.4, 0), Complex(0.3, 0), Complex(0.3, 0)});
    auto res = linfty_hyperplane_minimal(f);
    NormHandle h = NormHandle::linf(3);
    // u in Y with real coordinates after the phase normalization (f real already)
    Vector u = cvec({Complex(0.75, 0), Complex(-1, 0), Complex(0, 0)});
    REQUIRE(res.P.Y.contains(u, 1e-9));
    std::vector<double> ts{0.5, 0.2, 0.1, 0.05};
    auto rep = proj_alpha_probe(h, res.P, u, 2.0, ts);
    Matrix M = projection_matrix(res.P);
    Matrix D = Complex(0, 1) * u * res.P.g.col(0).adjoint();
    double s = operator_norm(D, h, h);
    double np = operator_norm(M, h, h);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double nq = operator_norm(M - rep.ts[i] * D, h, h);
        double direct = (nq * nq - np * np) / std::pow(rep.ts[i] * s, 2.0);
        REQUIRE(rep.ratios[i] == Catch::Approx(direct).margin(1e-7 * (1 + direct)));
    }
}

TEST_CASE("random three-dimensional polytope norms: tilt probes stay bounded at two") {
    Rng rng(73);
    int families = 0;
    for (int trial = 0; trial < 40 && families < 20; ++trial) {
        NormHandle h = NormHandle::vertex(random_spanning(rng, 3, 3));
        Matrix fk(3, 1);
        fk.col(0) = rng.cgaussian_vector(3);
        Subspace Y = Subspace::from_kernel(fk, 3);
        auto res = minimal_projection_search(h, Y, 1e-6, 12, 100 + trial, 150);
        if (res.value <= 1.001) continue;
        Vector u = Y.span() * rng.cgaussian_vector(2);
        std::vector<double> ts{1e-1, 1e-2, 1e-3};
        auto rep = proj_alpha_probe(h, res.P, u, 2.0, ts);
        REQUIRE(rep.verdict == ProbeVerdict::BoundedBelow);
        ++families;
    }
    REQUIRE(families >= 10);
}

TEST_CASE("one-dimensional projection norms") {
    NormHandle h = NormHandle::lp(1.5, 3);
    Vector y = cvec({Complex(1, 0), Complex(0, 0), Complex(0, 0)});
    Vector f = cvec({Complex(1, 0), Complex(1, 0), Complex(0, 0)});
    REQUIRE(onedim_projection_norm(h, y, f) ==
            Catch::Approx(std::pow(2.0, 1.0 / 3.0)).margin(1e-12));
    Vector f0 = cvec({Complex(1, 0), Complex(0, 0), Complex(0, 0)});
    REQUIRE(onedim_projection_norm(h, y, f0) == Catch::Approx(1.0).margin(1e-12));
    Vector fbad = cvec({Complex(0, 0), Complex(1, 0), Complex(0, 0)});
    REQUIRE_THROWS_AS(onedim_projection_norm(h, y, fbad), PreconditionViolated);

    // strong-uniqueness ratios for the tilted functionals scale like t^{q - alpha}
    const double q = 3.0;
    for (double alpha : {2.0, 3.0}) {
        std::vector<double> ratios;
        for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
            Vector ft = cvec({Complex(1, 0), Complex(t, 0), Complex(0, 0)});
            double npf = onedim_projection_norm(h, y, ft);
            REQUIRE(npf == Catch::Approx(std::pow(1.0 + std::pow(t, q), 1.0 / q))
                               .margin(1e-12));
            // ||P_f - P_{f0}|| = t for this family
            ratios.push_back((std::pow(npf, alpha) - 1.0) / std::pow(t, alpha));
        }
        if (alpha < q) {
            REQUIRE(ratios.back() < 0.01 * ratios.front());
        } else {
            for (double r : ratios) REQUIRE(r > 0.3);
        }
    }
}

TEST_CASE("realified certificate for the symmetric sup-norm hyperplane") {
    Vector f = cvec({Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0)});
    auto res = linfty_hyperplane_minimal(f);
    NormHandle h = NormHandle::linf(3);
    auto cm = chalmers_metcalf(res.P, h);
    bool evidence = cm.all_weights_positive && cm.no_common_kernel_on_Y && res.norm > 1.0;
    auto rep = realify_and_certify(h, res.P.Y, res.P, evidence, 9);
    REQUIRE(rep.status == UniquenessStatus::TwoStrong);
    REQUIRE(rep.constant.has_value());
    double r = *rep.constant;
    REQUIRE(r > 0.0);

    // validity: ||Q||^2 >= ||P||^2 + (r - eps) ||Q - P||^2 on random projections
    Rng rng(74);
    Matrix M = projection_matrix(res.P);
    double np = operator_norm(M, h, h);
    for (int trial = 0; trial < 2000; ++trial) {
        Vector v = res.P.Y.span() * rng.cgaussian_vector(2);
        double t = std::pow(10.0, rng.uniform(-6.0, 0.5));
        Matrix Q = M - t * v * res.P.g.col(0).adjoint();
        double nq = operator_norm(Q, h, h);
        double dist = operator_norm(Q - M, h, h);
        REQUIRE(nq * nq >= np * np + (r - 1e-6) * dist * dist);
    }
}

TEST_CASE("realified certificate for an l1 hyperplane") {
    NormHandle h = NormHandle::l1(3);
    Matrix fk(3, 1);
    fk.col(0) = cvec({Complex(1, 0), Complex(0.8, 0), Complex(0.6, 0)});
    Subspace Y = Subspace::from_kernel(fk, 3);
    auto res = minimal_projection_search(h, Y, 1e-7, 30, 11, 260);
    // the searched minimizer carries optimizer noise in its imaginary part,
    // so allow a looser realness tolerance than the closed-form default
    auto rep = realify_and_certify(h, Y, res.P, true, 13, 1e-6);
    REQUIRE(rep.status == UniquenessStatus::TwoStrong);
    REQUIRE(*rep.constant > 0.0);
}

TEST_CASE("realified certificate rejects non-real inputs") {
    {
        Matrix g(2, 1), w(2, 1);
        g.col(0) = cvec({Complex(1, 0), Complex(0, 1)});  // ker is span{(1, i)}
        g.col(0) /= g.col(0).norm();
        Subspace Y = Subspace::from_kernel(g, 2);
        Matrix gm(2, 1), wm(2, 1);
        gm.col(0) = Y.kernel().col(0);
        wm.col(0) = gm.col(0) / pairing(gm.col(0), gm.col(0)).real();
        auto P = make_projection(Y, gm, wm);
        REQUIRE_THROWS_AS(realify_and_certify(NormHandle::linf(2), Y, P, true),
                          PrerequisiteFailed);
    }
    {
        Matrix V(2, 2);
        V.col(0) = cvec({Complex(1, 0), Complex(0, 1)});
        V.col(1) = cvec({Complex(0, 0), Complex(1, 0)});
        NormHandle h = NormHandle::vertex(V);
        Matrix g(2, 1), w(2, 1);
        g.col(0) = cvec({Complex(1, 0), Complex(0, 0)});
        w.col(0) = cvec({Complex(1, 0), Complex(0, 0)});
        Subspace Y = Subspace::from_kernel(g, 2);
        auto P = make_projection(Y, g, w);
        REQUIRE_THROWS_AS(realify_and_certify(h, Y, P, true), NotRealNorm);
    }
}
