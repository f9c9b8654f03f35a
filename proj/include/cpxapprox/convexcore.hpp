#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cpxapprox/algebra.hpp"
#include "cpxapprox/types.hpp"

namespace cpx {

struct SumModuliProblem {
    Matrix A;  // n x N, columns are the generators u_j
    Vector b;
};

struct MinMaxProblem {
    std::vector<Vector> F;  // functionals, applied via pairing()
    Vector x;
    Matrix B;  // n x d basis of the search subspace; may have 0 columns
};

struct SolveReport {
    double value = 0.0;
    Vector primal;            // lambda for sum-moduli; c for min-max
    Vector dual;              // certificate functional (nu / combined f)
    RealVector multipliers;   // min-max only: simplex weights over the functionals
    double dual_objective = 0.0;
    double gap = 0.0;
    long iterations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr long kDefaultMaxIter = 200000;

inline RealVector project_simplex(RealVector v) {
    const Eigen::Index k = v.size();
    std::vector<double> s(v.data(), v.data() + k);
    std::sort(s.begin(), s.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        cum += s[i];
        double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (i + 1 == k || t >= s[i + 1]) { tau = t; break; }
    }
    for (Eigen::Index i = 0; i < k; ++i) v[i] = std::max(0.0, v[i] - tau);
    return v;
}

// Projection onto {sum |v_j| <= 1}: simplex projection of the moduli, phases kept.
inline Vector project_complex_l1_ball(const Vector& v) {
    RealVector m = v.cwiseAbs();
    if (m.sum() <= 1.0) return v;
    RealVector r = project_simplex(m);
    Vector out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j)
        out[j] = (m[j] > 0) ? v[j] * (r[j] / m[j]) : Complex(0, 0);
    return out;
}

inline Vector soft_threshold(const Vector& v, double t) {
    Vector out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        double m = std::abs(v[j]);
        out[j] = (m > t) ? v[j] * ((m - t) / m) : Complex(0, 0);
    }
    return out;
}

inline double smoothed_l1(const Vector& v, double eps) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) s += std::hypot(std::abs(v[j]), eps);
    return s;
}

// Iteratively reweighted least squares on min sum sqrt(|l|^2 + eps^2) over {A l = b},
// annealed in eps; polishes an approximately optimal feasible iterate. When mu_out
// is given it receives the weighted-normal-equation multiplier of a final solve,
// which is an interior dual point: |(A^H mu)_j| < 1 with objective within ~N*eps.
inline long irls_polish(const Matrix& A, const Vector& b, Vector& lam, double eps_hi,
                        double eps_lo, Vector* mu_out = nullptr) {
    long iters = 0;
    auto weighted_solve = [&](const Vector& cur, double eps, Vector* mu) {
        RealVector invw(cur.size());
        for (Eigen::Index j = 0; j < cur.size(); ++j)
            invw[j] = std::hypot(std::abs(cur[j]), eps);
        Matrix M = A * invw.asDiagonal() * A.adjoint();
        M.diagonal().array() += eps * eps * 1e-8;
        Vector m = M.ldlt().solve(b);
        if (mu) *mu = m;
        return Vector(invw.asDiagonal() * (A.adjoint() * m));
    };
    for (double eps = eps_hi; eps >= eps_lo * 0.999; eps *= 0.1) {
        for (int it = 0; it < 80; ++it) {
            ++iters;
            Vector cand = weighted_solve(lam, eps, nullptr);
            double f0 = smoothed_l1(lam, eps);
            double t = 1.0;
            Vector next = cand;
            while (t > 1e-4 && smoothed_l1(next, eps) > f0 + 1e-15 * (1.0 + f0)) {
                t *= 0.5;
                next = lam + t * (cand - lam);
            }
            double step = (next - lam).norm();
            lam = next;
            if (step < eps * 1e-6 * (1.0 + lam.norm())) break;
        }
    }
    if (mu_out) weighted_solve(lam, eps_lo, mu_out);
    return iters;
}

// Newton refinement of min sum |l_j| over {A l = b} near an optimum whose entries
// are all nonzero: the objective is smooth there, so convergence is quadratic and
// recovers coefficient phases to machine precision. Works in real null-space
// coordinates of the realified constraint.
inline void newton_polish_exact(const Matrix& A, const Vector& b, Vector& lam) {
    const Eigen::Index N = A.cols();
    const Eigen::Index n = A.rows();
    RealMatrix Ar(2 * n, 2 * N);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < N; ++j) {
            Ar(2 * i, 2 * j) = A(i, j).real();
            Ar(2 * i, 2 * j + 1) = -A(i, j).imag();
            Ar(2 * i + 1, 2 * j) = A(i, j).imag();
            Ar(2 * i + 1, 2 * j + 1) = A(i, j).real();
        }
    Eigen::JacobiSVD<RealMatrix> svd(Ar, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-12 * sv(0)) ++rank;
    if (rank == 2 * N) return;
    RealMatrix Z = svd.matrixV().rightCols(2 * N - rank);
    RealVector L(2 * N);
    for (Eigen::Index j = 0; j < N; ++j) {
        L[2 * j] = lam[j].real();
        L[2 * j + 1] = lam[j].imag();
    }
    auto objective = [&](const RealVector& v) {
        double s = 0;
        for (Eigen::Index j = 0; j < N; ++j) s += std::hypot(v[2 * j], v[2 * j + 1]);
        return s;
    };
    double floor_mod = 0.0;
    for (Eigen::Index j = 0; j < N; ++j)
        floor_mod = std::max(floor_mod, std::hypot(L[2 * j], L[2 * j + 1]));
    floor_mod *= 1e-7;  // stay clear of the nonsmooth set
    for (int it = 0; it < 50; ++it) {
        RealVector grad = RealVector::Zero(2 * N);
        RealMatrix Hs = RealMatrix::Zero(2 * N, 2 * N);
        bool near_kink = false;
        for (Eigen::Index j = 0; j < N; ++j) {
            double a = L[2 * j], bb = L[2 * j + 1];
            double m = std::hypot(a, bb);
            if (m < floor_mod) { near_kink = true; break; }
            grad[2 * j] = a / m;
            grad[2 * j + 1] = bb / m;
            double m3 = m * m * m;
            Hs(2 * j, 2 * j) = 1.0 / m - a * a / m3;
            Hs(2 * j + 1, 2 * j + 1) = 1.0 / m - bb * bb / m3;
            Hs(2 * j, 2 * j + 1) = Hs(2 * j + 1, 2 * j) = -a * bb / m3;
        }
        if (near_kink) break;
        RealVector gc = Z.transpose() * grad;
        if (gc.norm() < 1e-15 * N) break;
        RealMatrix Hc = Z.transpose() * Hs * Z;
        Hc.diagonal().array() += 1e-14 * (1.0 + Hc.trace());
        RealVector step = Hc.ldlt().solve(-gc);
        double f0 = objective(L);
        double t = 1.0;
        while (t > 1e-8 && objective(L + t * (Z * step)) > f0) t *= 0.5;
        if (t <= 1e-8) break;
        L += t * (Z * step);
        if (t * step.norm() < 1e-15 * (1.0 + L.norm())) break;
    }
    Vector cand(N);
    for (Eigen::Index j = 0; j < N; ++j) cand[j] = Complex(L[2 * j], L[2 * j + 1]);
    if (cand.cwiseAbs().sum() <= lam.cwiseAbs().sum() &&
        (A * cand - b).norm() <= 1e-9 * (1.0 + b.norm()))
        lam = cand;
}

}  // namespace detail

// Complex basis pursuit: min sum |lambda_j| subject to A lambda = b.
inline SolveReport solve_min_sum_moduli(const SumModuliProblem& p, double tol = 1e-8,
                                        long max_iter = detail::kDefaultMaxIter,
                                        const Vector* init = nullptr) {
    const Eigen::Index n = p.A.rows();
    const Eigen::Index N = p.A.cols();
    if (tol <= 0) throw PreconditionViolated("tol must be positive");
    SolveReport rep;
    double bnorm = p.b.norm();
    if (bnorm <= 1e-14) {
        rep.primal = Vector::Zero(N);
        rep.dual = Vector::Zero(n);
        rep.converged = true;
        return rep;
    }

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(p.A);
    Vector lam = cod.solve(p.b);  // least-norm feasible point
    if ((p.A * lam - p.b).norm() > 1e-7 * (1.0 + bnorm)) throw Infeasible();

    long iters = 0;
    Vector nu;
    const bool square_exact = (N == n && cod.rank() == n);
    if (square_exact) {
        // Unique representation; the dual with coefficient phases on the support and
        // zeros elsewhere is exactly feasible with zero gap.
        Vector s(N);
        for (Eigen::Index j = 0; j < N; ++j) {
            double m = std::abs(lam[j]);
            s[j] = (m > 1e-14 * (1.0 + bnorm)) ? lam[j] / m : Complex(0, 0);
        }
        nu = p.A.adjoint().fullPivLu().solve(s);
    } else {
        Matrix pinv = cod.pseudoInverse();
        Matrix PA = pinv * p.A;       // N x N, projector complement onto ker A
        Vector corr = pinv * p.b;
        // ADMM on the splitting  min sum|z| + indicator{A l = b},  l = z.
        if (init && init->size() == N) lam = *init - PA * *init + corr;
        Vector z = lam, u = Vector::Zero(N);
        const double rho = std::sqrt(static_cast<double>(N)) / bnorm;
        for (; iters < max_iter; ++iters) {
            Vector v = z - u;
            lam = v - PA * v + corr;
            Vector z_old = z;
            z = detail::soft_threshold(lam + u, 1.0 / rho);
            u += lam - z;
            if ((lam - z).norm() < 1e-7 * (1.0 + bnorm) &&
                (z - z_old).norm() < 1e-7 * (1.0 + bnorm))
                break;
        }
        double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-6);
        iters += detail::irls_polish(p.A, p.b, lam, scale * 1e-2, scale * 1e-13);
        lam = lam - PA * lam + corr;  // exact feasibility re-projection

        // Near-active spurious entries decay slowly under IRLS; try dropping small
        // entries and re-solving on the reduced support, keeping any improvement.
        double big = lam.cwiseAbs().maxCoeff();
        for (double tau : {1e-9, 1e-7, 1e-5, 1e-3, 1e-2}) {
            std::vector<Eigen::Index> S;
            for (Eigen::Index j = 0; j < N; ++j)
                if (std::abs(lam[j]) > tau * big) S.push_back(j);
            if (S.size() == static_cast<std::size_t>(N) || S.empty()) continue;
            Matrix AS(n, static_cast<Eigen::Index>(S.size()));
            for (std::size_t i = 0; i < S.size(); ++i)
                AS.col(static_cast<Eigen::Index>(i)) = p.A.col(S[i]);
            Vector ls = AS.completeOrthogonalDecomposition().solve(p.b);
            if ((AS * ls - p.b).norm() > 1e-10 * (1.0 + bnorm)) continue;
            if (static_cast<Eigen::Index>(S.size()) > n)
                iters += detail::irls_polish(AS, p.b, ls, big * 1e-4, big * 1e-13);
            if (ls.cwiseAbs().sum() < lam.cwiseAbs().sum()) {
                lam.setZero();
                for (std::size_t i = 0; i < S.size(); ++i)
                    lam[S[i]] = ls[static_cast<Eigen::Index>(i)];
            }
        }

        // Final quadratic-rate polish on the support, where the objective is smooth.
        big = lam.cwiseAbs().maxCoeff();
        {
            std::vector<Eigen::Index> S;
            for (Eigen::Index j = 0; j < N; ++j)
                if (std::abs(lam[j]) > 1e-9 * big) S.push_back(j);
            if (!S.empty() && S.size() < static_cast<std::size_t>(N)) {
                Matrix AS(n, static_cast<Eigen::Index>(S.size()));
                Vector lS(static_cast<Eigen::Index>(S.size()));
                for (std::size_t i = 0; i < S.size(); ++i) {
                    AS.col(static_cast<Eigen::Index>(i)) = p.A.col(S[i]);
                    lS[static_cast<Eigen::Index>(i)] = lam[S[i]];
                }
                detail::newton_polish_exact(AS, p.b, lS);
                lam.setZero();
                for (std::size_t i = 0; i < S.size(); ++i)
                    lam[S[i]] = lS[static_cast<Eigen::Index>(i)];
            } else {
                detail::newton_polish_exact(p.A, p.b, lam);
            }
        }

        // Certificate candidates: (a) least squares on the complementary-slackness
        // phase equations over the support, (b) the weighted-solve multiplier at the
        // final iterate. Keep whichever certifies the larger dual objective.
        big = lam.cwiseAbs().maxCoeff();
        std::vector<Eigen::Index> supp;
        for (Eigen::Index j = 0; j < N; ++j)
            if (std::abs(lam[j]) > 1e-7 * big) supp.push_back(j);
        Matrix AS(n, static_cast<Eigen::Index>(supp.size()));
        Vector sS(static_cast<Eigen::Index>(supp.size()));
        for (std::size_t i = 0; i < supp.size(); ++i) {
            AS.col(static_cast<Eigen::Index>(i)) = p.A.col(supp[i]);
            sS[static_cast<Eigen::Index>(i)] = lam[supp[i]] / std::abs(lam[supp[i]]);
        }
        Vector nu_ls = AS.adjoint().completeOrthogonalDecomposition().solve(sS);
        Vector dummy = lam;
        detail::irls_polish(p.A, p.b, dummy, big * 1e-8, big * 1e-8, &nu);
        auto certified = [&](Vector cand) {
            double m = (p.A.adjoint() * cand).cwiseAbs().maxCoeff();
            if (m > 1.0) cand /= m;
            return std::make_pair(pairing(cand, p.b).real(), cand);
        };
        auto [da, va] = certified(nu_ls);
        auto [db, vb] = certified(nu);
        nu = (da >= db) ? va : vb;
    }

    rep.value = lam.cwiseAbs().sum();
    rep.primal = lam;
    double mx = (p.A.adjoint() * nu).cwiseAbs().maxCoeff();
    if (mx > 1.0) nu /= mx;
    rep.dual = nu;
    rep.dual_objective = pairing(nu, p.b).real();
    rep.gap = std::max(0.0, rep.value - rep.dual_objective);
    rep.iterations = iters;
    rep.converged = rep.gap <= tol * (1.0 + rep.value) && iters < max_iter;
    return rep;
}

// Min-max of moduli over a subspace shift: min_c max_j |f_j(x - B c)|.
inline SolveReport solve_min_max_affine(const MinMaxProblem& p, double tol = 1e-8,
                                        long max_iter = detail::kDefaultMaxIter) {
    if (tol <= 0) throw PreconditionViolated("tol must be positive");
    if (p.F.empty()) throw PreconditionViolated("empty functional list");
    const Eigen::Index M = static_cast<Eigen::Index>(p.F.size());
    const Eigen::Index n = p.x.size();
    const Eigen::Index d = p.B.cols();

    Matrix F(M, n);
    for (Eigen::Index j = 0; j < M; ++j) F.row(j) = p.F[j].adjoint();
    Vector g = F * p.x;
    Matrix H = (d > 0) ? Matrix(F * p.B) : Matrix(M, 0);

    SolveReport rep;
    Vector c = Vector::Zero(d);
    long iters = 0;
    if (d > 0) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> Hcod(H);
        // ADMM on  min max|z|  s.t.  H c + z = g.
        Vector z = g, u = Vector::Zero(M);
        double gmax = std::max(g.cwiseAbs().maxCoeff(), 1e-12);
        double t = gmax;  // prox parameter 1/rho
        for (; iters < max_iter; ++iters) {
            c = Hcod.solve(g - z - u);
            Vector w = g - H * c - u;
            Vector z_old = z;
            z = w - t * detail::project_complex_l1_ball(w / t);
            u += H * c + z - g;
            if ((H * c + z - g).norm() < 1e-10 * (1.0 + gmax) &&
                (z - z_old).norm() < 1e-10 * (1.0 + gmax))
                break;
        }
        // Annealed-softmax polish: descend the true max along smoothed gradients.
        double val = (g - H * c).cwiseAbs().maxCoeff();
        double base_eta = std::max(val, 1e-9);
        for (double eta = base_eta * 1e-2; eta > base_eta * 1e-12; eta *= 0.25) {
            for (int it = 0; it < 100; ++it) {
                Vector r = g - H * c;
                RealVector mods = r.cwiseAbs();
                double mx = mods.maxCoeff();
                RealVector w = ((mods.array() - mx) / eta).exp();
                w /= w.sum();
                Vector grad = Vector::Zero(d);
                for (Eigen::Index j = 0; j < M; ++j)
                    if (mods[j] > 1e-14)
                        grad -= w[j] * H.row(j).adjoint() * (r[j] / mods[j]);
                double gn = grad.norm();
                if (gn < 1e-16) break;
                Vector dir = -grad / gn;
                bool improved = false;
                for (double s = eta / gn; s > 1e-6 * eta / gn; s *= 0.5) {
                    Vector cc = c + s * dir;
                    if ((g - H * cc).cwiseAbs().maxCoeff() < mx - 1e-18) {
                        c = cc;
                        improved = true;
                        break;
                    }
                }
                ++iters;
                if (!improved) break;
            }
        }
    }
    Vector r = g;
    if (d > 0) r -= H * c;
    rep.value = r.cwiseAbs().maxCoeff();
    rep.primal = c;

    // Multipliers alpha on the active set: minimize the Y-annihilation residual of
    // f = sum alpha_j sigma_j f_j over the simplex (small QP, projected gradient).
    RealVector mods = r.cwiseAbs();
    double ath = std::max(10.0 * tol, 1e-7) * (1.0 + rep.value);
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < M; ++j)
        if (mods[j] >= rep.value - ath) act.push_back(j);
    const Eigen::Index k = static_cast<Eigen::Index>(act.size());
    std::vector<Complex> sigma(act.size());
    Matrix G(d, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::Index j = act[i];
        sigma[i] = (mods[j] > 1e-14) ? r[j] / mods[j] : Complex(1, 0);
        if (d > 0) G.col(i) = H.row(j).transpose() * std::conj(sigma[i]);
    }
    RealVector alpha = RealVector::Constant(k, 1.0 / static_cast<double>(k));
    if (d > 0 && k > 1) {
        RealMatrix Q = (G.adjoint() * G).real();
        double lip = Q.norm() + 1e-12;
        for (int it = 0; it < 20000; ++it) {
            RealVector next = detail::project_simplex(alpha - (Q * alpha) / lip);
            double step = (next - alpha).norm();
            alpha = next;
            if (step < 1e-15) break;
        }
    }
    rep.multipliers = RealVector::Zero(M);
    Vector fdual = Vector::Zero(n);
    for (Eigen::Index i = 0; i < k; ++i) {
        rep.multipliers[act[i]] = alpha[i];
        fdual += alpha[i] * sigma[i] * p.F[act[i]];
    }
    rep.dual = fdual;
    rep.dual_objective = pairing(fdual, p.x).real();
    rep.gap = std::max(0.0, rep.value - rep.dual_objective);
    rep.iterations = iters;
    rep.converged = iters < max_iter;
    return rep;
}

}  // namespace cpx
