#pragma once

#include "advfv/mesh.hpp"

#include <Eigen/SparseCore>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace advfv {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed row storage; column indices sorted and unique per row.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Duplicate entries are summed. Explicit zeros are kept in the pattern.
    static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> entries,
                                      bool symmetric = false);
    static SparseMatrix identity(std::size_t n);

    std::size_t n() const { return n_; }
    std::size_t nnz() const { return values_.size(); }
    bool symmetric() const { return symmetric_; }

    const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
    const std::vector<std::size_t>& col_indices() const { return cols_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Value at (i, j); zero outside the pattern.
    double coeff(std::size_t i, std::size_t j) const;
    std::vector<double> multiply(const std::vector<double>& x) const;

    /// this * s + diag(d); the diagonal must be in the pattern.
    SparseMatrix scaled_plus_diagonal(double s, const std::vector<double>& d) const;

    Eigen::SparseMatrix<double> to_eigen() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
    bool symmetric_ = false;
    std::vector<std::size_t> diag_pos_;

    void index_diagonal();
};

struct SparseSystem {
    SparseMatrix A;
    std::vector<double> b;
};

/// Unscaled two-point graph Laplacian: S_KK = sum tau, S_KL = -tau. The
/// diagonal is always present, also for isolated cells.
SparseMatrix assemble_stiffness(const Mesh& mesh);

inline constexpr double kDefaultSolveTol = 1e-12;

/// ||A x - b||_2 / ||b||_2 (absolute residual when b = 0).
double relative_residual(const SparseMatrix& A, const std::vector<double>& x,
                         const std::vector<double>& b);

/// Sparse LDL^T with iterative refinement. maxit = 0 means 10 n. Throws
/// SolverError if A is not positive definite or the residual contract fails.
std::vector<double> solve_spd(const SparseMatrix& A, const std::vector<double>& b,
                              double tol = kDefaultSolveTol, std::size_t maxit = 0);

/// Sparse LU with iterative refinement, same residual contract.
std::vector<double> solve_general(const SparseMatrix& A, const std::vector<double>& b,
                                  double tol = kDefaultSolveTol, std::size_t maxit = 0);

std::vector<double> solve(const SparseSystem& sys, double tol = kDefaultSolveTol);

void write_matrix_market(const SparseMatrix& A, std::ostream& out);
void write_matrix_market(const SparseMatrix& A, const std::filesystem::path& path);

}  // namespace advfv
