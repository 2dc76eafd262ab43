#include "sceneforge/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace sceneforge {

void SparseMatrix::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        double sum = 0.0;
        for (int idx = row_ptr_[i]; idx < row_ptr_[i + 1]; ++idx)
            sum += values_[idx] * x[static_cast<std::size_t>(cols_[idx])];
        y[static_cast<std::size_t>(i)] = sum;
    }
}

double SparseMatrix::diagonal(int i) const {
    for (int idx = row_ptr_[i]; idx < row_ptr_[i + 1]; ++idx)
        if (cols_[idx] == i) return values_[idx];
    return 0.0;
}

double SparseMatrix::max_asymmetry() const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i) {
        for (int idx = row_ptr_[i]; idx < row_ptr_[i + 1]; ++idx) {
            const int j = cols_[idx];
            // binary search for (j, i)
            const int lo = row_ptr_[j], hi = row_ptr_[j + 1];
            const auto it = std::lower_bound(cols_.begin() + lo, cols_.begin() + hi, i);
            const double mirror =
                (it != cols_.begin() + hi && *it == i)
                    ? values_[static_cast<std::size_t>(it - cols_.begin())]
                    : 0.0;
            worst = std::max(worst, std::abs(values_[idx] - mirror));
        }
    }
    return worst;
}

SparseBuilder::SparseBuilder(int n) : n_(n) {
    if (n < 0) throw Error("SparseBuilder: negative dimension");
}

void SparseBuilder::add(int row, int col, double value) {
    if (row < 0 || row >= n_ || col < 0 || col >= n_)
        throw Error("SparseBuilder: index out of range");
    triplets_.push_back({row, col, value});
}

SparseMatrix SparseBuilder::finalize(bool require_symmetric) {
    std::sort(triplets_.begin(), triplets_.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.row, a.col, a.value) < std::tie(b.row, b.col, b.value);
    });

    SparseMatrix m;
    m.n_ = n_;
    m.row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);

    std::size_t i = 0;
    while (i < triplets_.size()) {
        const int row = triplets_[i].row, col = triplets_[i].col;
        double sum = 0.0;
        while (i < triplets_.size() && triplets_[i].row == row && triplets_[i].col == col)
            sum += triplets_[i++].value;
        if (sum == 0.0) continue; // no explicit zeros
        m.cols_.push_back(col);
        m.values_.push_back(sum);
        ++m.row_ptr_[static_cast<std::size_t>(row) + 1];
    }
    for (int r = 0; r < n_; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];

    triplets_.clear();
    triplets_.shrink_to_fit();

    if (require_symmetric) {
        const double asym = m.max_asymmetry();
        if (asym != 0.0)
            throw Error("SparseBuilder: matrix not symmetric, max |A - A^T| = " +
                        std::to_string(asym));
    }
    return m;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// ||b - A x||
double explicit_residual(const SparseMatrix& a, const std::vector<double>& x,
                         const std::vector<double>& b, std::vector<double>& scratch) {
    a.apply(x, scratch);
    double sum = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double r = b[i] - scratch[i];
        sum += r * r;
    }
    return std::sqrt(sum);
}

} // namespace

CgSolution cg_solve(const SparseSystem& system, const CgOptions& options) {
    const SparseMatrix& a = system.matrix;
    const int n = a.n();
    if (options.tol <= 0.0) throw Error("cg_solve: tol must be > 0");
    const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * n;

    std::vector<double> inv_diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double d = a.diagonal(i);
        if (d == 0.0)
            throw ZeroDiagonal("cg_solve: zero diagonal at row " + std::to_string(i));
        inv_diag[static_cast<std::size_t>(i)] = 1.0 / d;
    }

    CgSolution solution;
    solution.x.reserve(system.rhs.size());
    solution.reports.reserve(system.rhs.size());

    for (const auto& b : system.rhs) {
        if (static_cast<int>(b.size()) != n)
            throw DimensionMismatch("cg_solve: rhs length does not match matrix");

        std::vector<double> x(static_cast<std::size_t>(n), 0.0);
        std::vector<double> scratch(static_cast<std::size_t>(n));
        const double norm_b = norm2(b);
        if (norm_b == 0.0) {
            solution.x.push_back(std::move(x));
            solution.reports.push_back({0, 0.0});
            continue;
        }
        const double target = options.tol * norm_b;

        std::vector<double> r = b; // x0 = 0
        std::vector<double> z(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        std::vector<double> p = z;
        double rho = dot(r, z);

        int it = 0;
        double achieved = norm2(r);
        bool converged = achieved <= target;
        while (!converged && it < max_iter) {
            a.apply(p, scratch); // scratch = A p
            const double denom = dot(p, scratch);
            if (denom <= 0.0)
                throw NonConvergence("cg_solve: matrix not positive definite on the "
                                     "constrained subspace",
                                     achieved / norm_b, it);
            const double alpha = rho / denom;
            for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
            for (int i = 0; i < n; ++i) r[i] -= alpha * scratch[i];
            ++it;

            bool restart = false;
            if (norm2(r) <= target) {
                // certify on the true residual; the recurrence can drift
                achieved = explicit_residual(a, x, b, scratch);
                if (achieved <= target) {
                    converged = true;
                    break;
                }
                a.apply(x, scratch);
                for (int i = 0; i < n; ++i) r[i] = b[i] - scratch[i];
                restart = true;
            }

            for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rho_next = dot(r, z);
            const double beta = restart ? 0.0 : rho_next / rho;
            rho = rho_next;
            for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }

        if (!converged) {
            achieved = explicit_residual(a, x, b, scratch);
            if (achieved > target)
                throw NonConvergence("cg_solve: no convergence after " +
                                         std::to_string(it) + " iterations",
                                     achieved / norm_b, it);
        }

        solution.x.push_back(std::move(x));
        solution.reports.push_back({it, achieved / norm_b});
    }
    return solution;
}

} // namespace sceneforge
