#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cpxapprox/norms.hpp"

namespace cpx {

struct RegularFace {
    Vector f;
    Eigen::Index k = 0, l = 0;
    double margin = 1.0;  // 1 - max over other vertices of |f(u_j)|
};

struct WitnessFamily {
    std::vector<Vector> functionals;
    Eigen::Index k = 0, l = 0;
    std::vector<Complex> ts;  // unit-modulus parameters, values at u_l relative to u_k
};

struct EqualizingScalar {
    Complex t;
    Eigen::Index k = 0, l = 0;
};

namespace detail {

inline double cross(Complex o, Complex a, Complex b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) -
           (a.imag() - o.imag()) * (b.real() - o.real());
}

// Monotone-chain convex hull; returns indices of hull vertices in order.
inline std::vector<Eigen::Index> convex_hull(const std::vector<Complex>& pts) {
    std::vector<Eigen::Index> idx(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (pts[a].real() != pts[b].real()) return pts[a].real() < pts[b].real();
        return pts[a].imag() < pts[b].imag();
    });
    std::vector<Eigen::Index> hull;
    auto build = [&](auto begin, auto end) {
        std::size_t start = hull.size();
        for (auto it = begin; it != end; ++it) {
            while (hull.size() >= start + 2 &&
                   cross(pts[hull[hull.size() - 2]], pts[hull.back()], pts[*it]) <= 0)
                hull.pop_back();
            hull.push_back(*it);
        }
        hull.pop_back();
    };
    build(idx.begin(), idx.end());
    build(idx.rbegin(), idx.rend());
    return hull;
}

}  // namespace detail

// Finds t with |t x_k + 1| = |t x_l + 1| strictly exceeding all other |t x_j + 1|.
// Writing p = -1/t, the condition says p is equidistant from x_k, x_l and strictly
// farther from them than from every other point: p sits on the perpendicular
// bisector of a farthest pair, far on the points' side.
inline EqualizingScalar find_equalizing_scalar(const std::vector<Complex>& points,
                                               double radius_cap) {
    const std::size_t m = points.size();
    if (m < 2 || radius_cap <= 0) throw PreconditionViolated("need >= 2 points, cap > 0");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(points[i] - points[j]) <= 1e-9) throw DegeneratePoints();

    // Candidate pairs: convex hull edges; for collinear configurations the hull
    // degenerates and the two extreme points form the only usable pair.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    std::vector<Eigen::Index> hull = detail::convex_hull(points);
    if (hull.size() >= 3) {
        for (std::size_t i = 0; i < hull.size(); ++i)
            pairs.emplace_back(hull[i], hull[(i + 1) % hull.size()]);
    }
    {  // extreme pair by diameter (covers the collinear case)
        Eigen::Index bk = 0, bl = 1;
        double best = -1;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (std::abs(points[i] - points[j]) > best) {
                    best = std::abs(points[i] - points[j]);
                    bk = static_cast<Eigen::Index>(i);
                    bl = static_cast<Eigen::Index>(j);
                }
        pairs.emplace_back(bk, bl);
    }

    double diam = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) diam = std::max(diam, std::abs(points[i] - points[j]));

    for (auto [k, l] : pairs) {
        Complex a = points[static_cast<std::size_t>(k)];
        Complex b = points[static_cast<std::size_t>(l)];
        Complex mid = (a + b) / 2.0;
        Complex dir = (b - a) / std::abs(b - a);
        Complex nu(-dir.imag(), dir.real());  // bisector direction
        for (double sgn : {1.0, -1.0}) {
            for (double R = std::max({4.0 * diam, 1.0 / radius_cap + std::abs(mid), 1.0});
                 R < 1e12; R *= 4.0) {
                Complex p = mid + sgn * R * nu;
                if (std::abs(p) < 1.0 / radius_cap) continue;
                double dkl = std::abs(a - p);
                double worst = 0;
                for (std::size_t j = 0; j < m; ++j) {
                    if (static_cast<Eigen::Index>(j) == k || static_cast<Eigen::Index>(j) == l)
                        continue;
                    worst = std::max(worst, std::abs(points[j] - p));
                }
                if (m == 2 || worst < dkl * (1.0 - 1e-12)) {
                    Complex t = -1.0 / p;
                    // Validate the stated pattern directly before returning.
                    double vk = std::abs(t * a + 1.0), vl = std::abs(t * b + 1.0);
                    if (std::abs(vk - vl) > 1e-10 * (1.0 + vk)) continue;
                    bool ok = true;
                    for (std::size_t j = 0; j < m && ok; ++j) {
                        if (static_cast<Eigen::Index>(j) == k ||
                            static_cast<Eigen::Index>(j) == l)
                            continue;
                        ok = std::abs(t * points[j] + 1.0) < vk;
                    }
                    if (ok) return {t, k, l};
                }
            }
        }
    }
    throw DegeneratePoints("no equalizing scalar found");
}

// A functional of dual norm one maximizing on exactly two vertices.
inline RegularFace find_regular_face(const NormHandle& P, std::uint64_t seed = 0) {
    if (P.kind() != NormKind::Vertex) throw WrongNormKind();
    const Matrix& U = P.generators();
    const Eigen::Index n = U.rows();
    const Eigen::Index N = U.cols();
    if (n < 2) throw PreconditionViolated("need n >= 2");
    Rng rng(seed);

    // Generic functional with pairwise distinct vertex moduli.
    Vector g;
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
        g = rng.cgaussian_vector(n);
        RealVector mods = (U.adjoint() * g).cwiseAbs();
        double scale = mods.maxCoeff();
        found = true;
        for (Eigen::Index i = 0; i < N && found; ++i)
            for (Eigen::Index j = i + 1; j < N && found; ++j)
                if (std::abs(mods[i] - mods[j]) <= 1e-6 * scale) found = false;
    }
    if (!found) throw RetryExhausted();

    // Boundary point carried by >= 2 vertices and its supporting functional.
    for (Eigen::Index i1 = 0; i1 < N; ++i1) {
        for (Eigen::Index i2 = i1 + 1; i2 < N; ++i2) {
            Vector x0 = U.col(i1) + U.col(i2);
            SolveReport rep = solve_min_sum_moduli({U, x0}, 1e-10);
            if (rep.value <= 1e-9) continue;
            Vector h = rep.dual;  // supporting certificate at x0
            Vector vals = U.adjoint() * h;                // conj(pairing(h, u_j))
            std::vector<Eigen::Index> active;
            for (Eigen::Index j = 0; j < N; ++j)
                if (std::abs(vals[j]) >= 1.0 - 1e-7) active.push_back(j);
            if (active.size() < 2) continue;

            // Equalize the perturbation values g(u_j)/sigma_j over the active set.
            std::vector<Complex> pts;
            for (Eigen::Index j : active) {
                Complex sigma = vals[j] / std::abs(vals[j]);  // conj(pairing(h,u_j)) phase
                Complex gj = pairing(g, U.col(j));
                pts.push_back(gj / std::conj(sigma));
            }
            double r2 = 0, r3 = 0;
            for (Eigen::Index j = 0; j < N; ++j) {
                r2 = std::max(r2, std::abs(pairing(g, U.col(j))));
                r3 = std::max(r3, std::abs(pairing(h, U.col(j))));
            }
            double r1 = 0;
            for (Eigen::Index j = 0; j < N; ++j)
                if (std::find(active.begin(), active.end(), j) == active.end())
                    r1 = std::max(r1, std::abs(pairing(h, U.col(j))));
            double cap = (1.0 - r1) / (r2 + r3 + 1e-12);

            for (int halve = 0; halve < 60; ++halve, cap /= 2.0) {
                EqualizingScalar eq;
                try {
                    eq = find_equalizing_scalar(pts, cap);
                } catch (const Error&) {
                    break;
                }
                // Stored functional: pairing(f, u) = t * g(u) + h(u).
                Vector f = std::conj(eq.t) * g + h;
                RealVector fm = (U.adjoint() * f).cwiseAbs();
                Eigen::Index k = active[static_cast<std::size_t>(eq.k)];
                Eigen::Index l = active[static_cast<std::size_t>(eq.l)];
                double top = fm[k];
                if (std::abs(fm[l] - top) > 1e-9 * top) continue;
                double others = 0;
                for (Eigen::Index j = 0; j < N; ++j)
                    if (j != k && j != l) others = std::max(others, fm[j]);
                if (N > 2 && others >= top * (1.0 - 1e-9)) continue;
                RegularFace face;
                face.f = f / top;
                face.k = k;
                face.l = l;
                face.margin = (N > 2) ? 1.0 - others / top : 1.0;
                if (face.margin <= 0) continue;
                return face;
            }
        }
    }
    throw RetryExhausted("no regular face found");
}

// K functionals of dual norm one sharing the value at u_k and taking K distinct
// unit-modulus values at u_l: no finite facet system can carry all of them, which
// is what separates the two norm classes.
inline WitnessFamily non_self_duality_witness(const NormHandle& P, int K,
                                              std::uint64_t seed = 0) {
    if (K < 3) throw PreconditionViolated("K >= 3 required");
    RegularFace face = find_regular_face(P, seed);
    const Matrix& U = P.generators();
    const Eigen::Index N = U.cols();

    Complex fk = pairing(face.f, U.col(face.k));
    Vector G = face.f * fk;  // pairing(G, u_k) = 1
    Complex tau0 = pairing(G, U.col(face.l));

    // Least-norm phi with pairing(phi, u_k) = 0, pairing(phi, u_l) = 1, i.e.
    // [u_k u_l]^H phi = (0, 1)^T.
    Matrix UK(U.rows(), 2);
    UK.col(0) = U.col(face.k);
    UK.col(1) = U.col(face.l);
    Vector target(2);
    target << Complex(0, 0), Complex(1, 0);
    Vector phi = UK.adjoint().completeOrthogonalDecomposition().solve(target);

    for (double delta = M_PI / 8.0; delta > 1e-12; delta /= 2.0) {
        WitnessFamily fam;
        fam.k = face.k;
        fam.l = face.l;
        bool ok = true;
        for (int mstep = 1; mstep <= K && ok; ++mstep) {
            int level = (mstep + 1) / 2;
            double theta = delta * level * ((mstep % 2 == 1) ? 1.0 : -1.0);
            Complex t = std::exp(Complex(0, theta)) * tau0;
            Complex coef = t - tau0;  // desired apply-shift at u_l
            Vector f = G + std::conj(coef) * phi;
            Vector vals = (U.adjoint() * f).conjugate();  // vals_j = pairing(f, u_j)
            if (std::abs(std::abs(vals[face.k]) - 1.0) > 1e-9 ||
                std::abs(std::abs(vals[face.l]) - 1.0) > 1e-9) {
                ok = false;
                break;
            }
            for (Eigen::Index j = 0; j < N; ++j) {
                if (j == face.k || j == face.l) continue;
                if (std::abs(vals[j]) >= 1.0 - face.margin / 2.0) {
                    ok = false;
                    break;
                }
            }
            double dn = (U.adjoint() * f).cwiseAbs().maxCoeff();
            if (std::abs(dn - 1.0) > 1e-8) ok = false;
            if (ok) {
                fam.functionals.push_back(f);
                fam.ts.push_back(t);
            }
        }
        if (ok && static_cast<int>(fam.functionals.size()) == K) return fam;
    }
    throw RetryExhausted("witness family construction failed");
}

}  // namespace cpx
