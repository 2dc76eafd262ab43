#pragma once

#include <vector>

#include "sceneforge/error.hpp"

namespace sceneforge {

class SparseBuilder;

// Symmetric sparse matrix, compressed row layout. Immutable once built;
// columns are sorted within each row and explicit zeros are dropped.
class SparseMatrix {
public:
    SparseMatrix() = default;

    int n() const { return n_; }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& values() const { return values_; }

    // y = A x, rows accumulated left to right.
    void apply(const std::vector<double>& x, std::vector<double>& y) const;

    // Diagonal entry, 0 when absent.
    double diagonal(int i) const;

    // Largest |A(i,j) - A(j,i)|; 0 exactly for matrices built symmetric.
    double max_asymmetry() const;

    bool operator==(const SparseMatrix&) const = default;

private:
    friend class SparseBuilder;

    int n_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
    std::vector<double> values_;
};

// Accumulates triplets and assembles canonical CSR: triplets are sorted by
// (row, col, value) and duplicates summed in that order, so the result is
// independent of insertion order.
class SparseBuilder {
public:
    explicit SparseBuilder(int n);

    void add(int row, int col, double value);

    // Throws Error when require_symmetric and max_asymmetry() != 0.
    SparseMatrix finalize(bool require_symmetric = true);

private:
    struct Triplet {
        int row;
        int col;
        double value;
    };

    int n_;
    std::vector<Triplet> triplets_;
};

// A matrix with one right-hand side per channel.
struct SparseSystem {
    SparseMatrix matrix;
    std::vector<std::vector<double>> rhs;
};

struct CgOptions {
    double tol = 1e-6; // relative residual target
    int max_iter = 0;  // 0 -> 10 * n
};

struct CgReport {
    int iterations = 0;
    double relative_residual = 0.0; // explicit ||Ax - b|| / ||b||
};

struct CgSolution {
    std::vector<std::vector<double>> x;
    std::vector<CgReport> reports;
};

// Jacobi-preconditioned conjugate gradients, one solve per right-hand side.
// Convergence is certified on the explicitly recomputed residual. Summation
// order is fixed, so identical inputs give bit-identical outputs.
// Throws ZeroDiagonal when a diagonal entry is missing or zero, and
// NonConvergence (carrying the achieved residual) after max_iter.
CgSolution cg_solve(const SparseSystem& system, const CgOptions& options = {});

} // namespace sceneforge
