#pragma once

#include <cmath>
#include <vector>

#include "cpxapprox/convexcore.hpp"

namespace cpx {

enum class NormKind { Vertex, Facet, Lp };

// First nonzero entry made real positive; deduplication canonical form for
// generator lists that are unique only up to unit-modulus scalars.
inline Vector phase_canonicalize(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double m = std::abs(v[i]);
        if (m > 1e-12) return v * (std::conj(v[i]) / m);
    }
    return v;
}

class NormHandle {
public:
    static NormHandle vertex(Matrix V) {
        require_spanning(V);
        for (Eigen::Index j = 0; j < V.cols(); ++j)
            V.col(j) = phase_canonicalize(V.col(j));
        NormHandle h;
        h.kind_ = NormKind::Vertex;
        h.n_ = V.rows();
        h.data_ = std::move(V);
        return h;
    }
    static NormHandle facet(Matrix F) {
        require_spanning(F);
        for (Eigen::Index j = 0; j < F.cols(); ++j)
            F.col(j) = phase_canonicalize(F.col(j));
        NormHandle h;
        h.kind_ = NormKind::Facet;
        h.n_ = F.rows();
        h.data_ = std::move(F);
        return h;
    }
    static NormHandle lp(double p, Eigen::Index n) {
        if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("lp requires p in (1, inf)");
        NormHandle h;
        h.kind_ = NormKind::Lp;
        h.n_ = n;
        h.p_ = p;
        return h;
    }
    static NormHandle l1(Eigen::Index n) { return vertex(Matrix::Identity(n, n)); }
    static NormHandle linf(Eigen::Index n) { return facet(Matrix::Identity(n, n)); }

    NormKind kind() const { return kind_; }
    Eigen::Index dim() const { return n_; }
    double p() const { return p_; }
    const Matrix& generators() const { return data_; }  // vertices or facets
    Eigen::Index count() const { return data_.cols(); }

private:
    static void require_spanning(const Matrix& m) {
        if (m.cols() < m.rows()) throw ValidationError("generators do not span");
        Eigen::JacobiSVD<Matrix> svd(m);
        const auto& sv = svd.singularValues();
        if (sv(m.rows() - 1) < kRankTol * sv(0))
            throw ValidationError("generators do not span");
    }

    NormKind kind_ = NormKind::Lp;
    Eigen::Index n_ = 0;
    Matrix data_;
    double p_ = 2.0;
};

struct NormEvalReport {
    double value = 0.0;
    Vector norming;  // functional f with dual norm <= 1 and pairing(f, x) = value
};

inline double lp_norm(const Vector& x, double p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), p);
    return std::pow(s, 1.0 / p);
}

inline NormEvalReport norm_eval_report(const NormHandle& h, const Vector& x,
                                       double tol = 1e-8) {
    if (x.size() != h.dim()) throw ValidationError("dimension mismatch");
    NormEvalReport out;
    switch (h.kind()) {
        case NormKind::Facet: {
            Vector vals = h.generators().adjoint() * x;
            Eigen::Index best = 0;
            vals.cwiseAbs().maxCoeff(&best);
            out.value = std::abs(vals[best]);
            Complex a = vals[best];
            out.norming = (out.value > 0) ? Vector(h.generators().col(best) * (a / out.value))
                                          : Vector(h.generators().col(best));
            return out;
        }
        case NormKind::Vertex: {
            SolveReport rep = solve_min_sum_moduli({h.generators(), x}, tol);
            out.value = rep.value;
            out.norming = rep.dual;
            return out;
        }
        case NormKind::Lp: {
            double p = h.p();
            out.value = lp_norm(x, p);
            out.norming = Vector::Zero(x.size());
            if (out.value > 0) {
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    double m = std::abs(x[i]);
                    if (m > 0) out.norming[i] = x[i] * std::pow(m, p - 2.0);
                }
                out.norming /= std::pow(out.value, p - 1.0);
            }
            return out;
        }
    }
    throw Unsupported();
}

inline double norm_eval(const NormHandle& h, const Vector& x, double tol = 1e-8) {
    return norm_eval_report(h, x, tol).value;
}

inline double dual_norm_eval(const NormHandle& h, const Vector& f, double tol = 1e-8) {
    if (f.size() != h.dim()) throw ValidationError("dimension mismatch");
    switch (h.kind()) {
        case NormKind::Vertex:
            return (h.generators().adjoint() * f).cwiseAbs().maxCoeff();
        case NormKind::Facet:
            return solve_min_sum_moduli({h.generators(), f}, tol).value;
        case NormKind::Lp: {
            double q = h.p() / (h.p() - 1.0);
            return lp_norm(f, q);
        }
    }
    throw Unsupported();
}

// Dual handle: the dual of a vertex norm is the facet norm with the same generators
// and vice versa (generators swap roles under the pairing).
inline NormHandle dual_handle(const NormHandle& h) {
    switch (h.kind()) {
        case NormKind::Vertex: return NormHandle::facet(h.generators());
        case NormKind::Facet: return NormHandle::vertex(h.generators());
        case NormKind::Lp: return NormHandle::lp(h.p() / (h.p() - 1.0), h.dim());
    }
    throw Unsupported();
}

// Minimal generating subset: a vertex is dropped when it lies in the absolutely
// convex hull of the remaining ones (representation cost <= 1 + 1e-9).
inline Matrix essentialize(const Matrix& vertices) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < vertices.cols(); ++j) keep.push_back(j);
    for (std::size_t pos = 0; pos < keep.size();) {
        if (keep.size() <= static_cast<std::size_t>(vertices.rows())) break;
        Matrix rest(vertices.rows(), keep.size() - 1);
        Eigen::Index c = 0;
        for (std::size_t i = 0; i < keep.size(); ++i)
            if (i != pos) rest.col(c++) = vertices.col(keep[i]);
        bool removable = false;
        try {
            SolveReport rep = solve_min_sum_moduli({rest, vertices.col(keep[pos])}, 1e-10);
            removable = rep.value <= 1.0 + 1e-9;
        } catch (const Infeasible&) {
            removable = false;
        }
        if (removable)
            keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(pos));
        else
            ++pos;
    }
    Matrix out(vertices.rows(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) =
            phase_canonicalize(vertices.col(keep[i]));
    }
    return out;
}

}  // namespace cpx
