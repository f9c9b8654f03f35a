#pragma once

#include <vector>

#include "cpxapprox/types.hpp"

namespace cpx::detail {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    RealVector x;       // values of the user variables
    double objective = 0.0;
};

// Small dense linear programs in inequality/equality form over free or nonnegative
// variables. Solved by two-phase primal simplex with Bland's rule; intended for the
// modest sizes appearing here (tens of variables/constraints).
class LinearProgram {
public:
    enum class Sense { LessEq, Eq, GreaterEq };

    explicit LinearProgram(int num_vars, bool maximize = false)
        : n_(num_vars), maximize_(maximize), c_(RealVector::Zero(num_vars)),
          nonneg_(num_vars, false) {}

    void set_objective(const RealVector& c) { c_ = c; }
    void set_nonnegative(int var, bool flag = true) { nonneg_[var] = flag; }
    void add_constraint(const RealVector& a, Sense s, double rhs) {
        rows_.push_back(a);
        senses_.push_back(s);
        rhs_.push_back(rhs);
    }

    LpResult solve() const {
        // Expand to standard form: min c^T z, A z = b, z >= 0.
        // Free variable x -> x+ - x-; LessEq adds slack; GreaterEq adds surplus.
        int cols = 0;
        std::vector<int> pos(n_), neg(n_, -1);
        for (int j = 0; j < n_; ++j) {
            pos[j] = cols++;
            if (!nonneg_[j]) neg[j] = cols++;
        }
        const int m = static_cast<int>(rows_.size());
        std::vector<int> slack(m, -1);
        for (int i = 0; i < m; ++i)
            if (senses_[i] != Sense::Eq) slack[i] = cols++;

        RealMatrix A = RealMatrix::Zero(m, cols);
        RealVector b(m), c = RealVector::Zero(cols);
        for (int j = 0; j < n_; ++j) {
            double cj = maximize_ ? -c_[j] : c_[j];
            c[pos[j]] = cj;
            if (neg[j] >= 0) c[neg[j]] = -cj;
        }
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n_; ++j) {
                A(i, pos[j]) = rows_[i][j];
                if (neg[j] >= 0) A(i, neg[j]) = -rows_[i][j];
            }
            if (slack[i] >= 0) A(i, slack[i]) = (senses_[i] == Sense::LessEq) ? 1.0 : -1.0;
            b[i] = rhs_[i];
            if (b[i] < 0) {
                A.row(i) = -A.row(i);
                b[i] = -b[i];
            }
        }

        LpResult out;
        RealVector z;
        LpStatus st = simplex_standard(A, b, c, z);
        out.status = st;
        if (st != LpStatus::Optimal) return out;
        out.x = RealVector::Zero(n_);
        for (int j = 0; j < n_; ++j) {
            out.x[j] = z[pos[j]];
            if (neg[j] >= 0) out.x[j] -= z[neg[j]];
        }
        double obj = c_.dot(out.x);
        out.objective = obj;
        return out;
    }

private:
    // min c^T z s.t. A z = b (b >= 0), z >= 0.
    static LpStatus simplex_standard(RealMatrix A, RealVector b, RealVector c,
                                     RealVector& z) {
        const int m = static_cast<int>(A.rows());
        const int n = static_cast<int>(A.cols());
        // Phase 1: add artificials.
        RealMatrix T(m + 1, n + m + 1);
        T.setZero();
        T.block(0, 0, m, n) = A;
        T.block(0, n, m, m) = RealMatrix::Identity(m, m);
        T.col(n + m).head(m) = b;
        std::vector<int> basis(m);
        for (int i = 0; i < m; ++i) basis[i] = n + i;
        // Phase-1 objective: minimize sum of artificials.
        for (int j = 0; j <= n + m; ++j) {
            double s = 0;
            for (int i = 0; i < m; ++i) s += T(i, j);
            T(m, j) = (j >= n && j < n + m) ? 0.0 : -s;
        }
        // Row m holds reduced costs; iterate with Bland's rule.
        if (!iterate(T, basis, n + m)) return LpStatus::Unbounded;  // cannot happen in phase 1
        double phase1 = -T(m, n + m);
        if (phase1 > 1e-8 * (1.0 + b.lpNorm<1>())) return LpStatus::Infeasible;
        // Drive artificials out of the basis when possible.
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n) continue;
            int enter = -1;
            for (int j = 0; j < n; ++j)
                if (std::abs(T(i, j)) > 1e-9) { enter = j; break; }
            if (enter >= 0) pivot(T, basis, i, enter);
        }
        // Phase 2: rebuild reduced costs for the true objective.
        T.row(m).setZero();
        for (int j = 0; j < n; ++j) T(m, j) = c[j];
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n && std::abs(c[basis[i]]) > 0)
                T.row(m) -= c[basis[i]] * T.row(i);
        }
        // Forbid re-entering artificial columns.
        for (int j = n; j < n + m; ++j) T(m, j) = 1e30;
        if (!iterate(T, basis, n + m)) return LpStatus::Unbounded;
        z = RealVector::Zero(n);
        for (int i = 0; i < m; ++i)
            if (basis[i] < n) z[basis[i]] = T(i, n + m);
        return LpStatus::Optimal;
    }

    static void pivot(RealMatrix& T, std::vector<int>& basis, int row, int col) {
        T.row(row) /= T(row, col);
        for (int i = 0; i < T.rows(); ++i) {
            if (i == row) continue;
            double f = T(i, col);
            if (f != 0.0) T.row(i) -= f * T.row(row);
        }
        basis[row] = col;
    }

    static bool iterate(RealMatrix& T, std::vector<int>& basis, int ncols) {
        const int m = static_cast<int>(T.rows()) - 1;
        for (long iter = 0; iter < 100000; ++iter) {
            int enter = -1;
            for (int j = 0; j < ncols; ++j)
                if (T(m, j) < -1e-9) { enter = j; break; }  // Bland: lowest index
            if (enter < 0) return true;
            int leave = -1;
            double best = 0;
            for (int i = 0; i < m; ++i) {
                if (T(i, enter) > 1e-11) {
                    double ratio = T(i, ncols) / T(i, enter);
                    if (leave < 0 || ratio < best - 1e-12 ||
                        (ratio < best + 1e-12 && basis[i] < basis[leave])) {
                        leave = i;
                        best = ratio;
                    }
                }
            }
            if (leave < 0) return false;  // unbounded
            pivot(T, basis, leave, enter);
        }
        return true;  // cycling safeguard; treated as converged for our problem sizes
    }

    int n_;
    bool maximize_;
    RealVector c_;
    std::vector<bool> nonneg_;
    std::vector<RealVector> rows_;
    std::vector<Sense> senses_;
    std::vector<double> rhs_;
};

}  // namespace cpx::detail
