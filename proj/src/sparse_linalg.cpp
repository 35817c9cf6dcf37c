#include "advfv/sparse_linalg.hpp"

#include "advfv/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace advfv {

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::vector<Triplet> entries,
                                         bool symmetric) {
    for (const auto& t : entries)
        if (t.row >= n || t.col >= n) throw InvalidArgument("sparse entry outside the matrix");
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.n_ = n;
    m.symmetric_ = symmetric;
    m.row_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& t = entries[i];
        if (!m.cols_.empty() && i > 0 && entries[i - 1].row == t.row && entries[i - 1].col == t.col) {
            m.values_.back() += t.value;
            continue;
        }
        m.cols_.push_back(t.col);
        m.values_.push_back(t.value);
        ++m.row_offsets_[t.row + 1];
    }
    for (std::size_t i = 0; i < n; ++i) m.row_offsets_[i + 1] += m.row_offsets_[i];
    m.index_diagonal();
    return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, std::move(t), true);
}

void SparseMatrix::index_diagonal() {
    diag_pos_.assign(n_, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < n_; ++i) {
        const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
        const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
        const auto it = std::lower_bound(begin, end, i);
        if (it != end && *it == i) diag_pos_[i] = static_cast<std::size_t>(it - cols_.begin());
    }
}

double SparseMatrix::coeff(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw InvalidArgument("sparse index out of range");
    const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_.begin())];
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
    if (x.size() != n_) throw InvalidArgument("sparse multiply: dimension mismatch");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
            acc += values_[k] * x[cols_[k]];
        y[i] = acc;
    }
    return y;
}

SparseMatrix SparseMatrix::scaled_plus_diagonal(double s, const std::vector<double>& d) const {
    if (d.size() != n_) throw InvalidArgument("diagonal: dimension mismatch");
    SparseMatrix out = *this;
    for (auto& v : out.values_) v *= s;
    for (std::size_t i = 0; i < n_; ++i) {
        if (diag_pos_[i] == std::numeric_limits<std::size_t>::max())
            throw InvalidArgument("diagonal entry missing from the sparsity pattern");
        out.values_[diag_pos_[i]] += d[i];
    }
    return out;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(values_.size());
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
            t.emplace_back(static_cast<int>(i), static_cast<int>(cols_[k]), values_[k]);
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
    std::vector<Triplet> t;
    t.reserve(mesh.n_cells() + 4 * mesh.n_interior_edges());
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) t.push_back({k, k, 0.0});
    for (const auto& e : mesh.edges()) {
        const double tau = e.transmissibility;
        t.push_back({e.cell_a, e.cell_a, tau});
        t.push_back({e.cell_b, e.cell_b, tau});
        t.push_back({e.cell_a, e.cell_b, -tau});
        t.push_back({e.cell_b, e.cell_a, -tau});
    }
    return SparseMatrix::from_triplets(mesh.n_cells(), std::move(t), true);
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vec(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

template <class Factor>
std::vector<double> refine(const Factor& factor, const SparseMatrix& A, const std::vector<double>& b,
                           double tol, std::size_t maxit, const char* name) {
    const std::size_t cap = maxit == 0 ? 10 * std::max<std::size_t>(A.n(), 1) : maxit;
    const double bnorm = norm2(b);
    std::vector<double> x = from_vec(factor.solve(to_vec(b)));
    double res = relative_residual(A, x, b);
    for (std::size_t it = 0; it < cap && res > tol && std::isfinite(res); ++it) {
        std::vector<double> r = A.multiply(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
        const Eigen::VectorXd dx = factor.solve(to_vec(r));
        std::vector<double> trial = x;
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += dx(static_cast<Eigen::Index>(i));
        const double trial_res = relative_residual(A, trial, b);
        if (!(trial_res < res)) break;
        x = std::move(trial);
        res = trial_res;
    }
    if (!(res <= tol) || !std::isfinite(res)) {
        std::ostringstream msg;
        msg << name << ": residual " << res << " exceeds tolerance " << tol
            << " (|b| = " << bnorm << ")";
        throw SolverError(msg.str(), res);
    }
    return x;
}

void require_square(const SparseMatrix& A, const std::vector<double>& b) {
    if (A.n() != b.size()) throw InvalidArgument("linear solve: dimension mismatch");
}

}  // namespace

double relative_residual(const SparseMatrix& A, const std::vector<double>& x,
                         const std::vector<double>& b) {
    std::vector<double> r = A.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const double bn = norm2(b);
    const double rn = norm2(r);
    return bn > 0.0 ? rn / bn : rn;
}

std::vector<double> solve_spd(const SparseMatrix& A, const std::vector<double>& b, double tol,
                              std::size_t maxit) {
    require_square(A, b);
    if (A.n() == 0) return {};
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A.to_eigen());
    if (ldlt.info() != Eigen::Success)
        throw SolverError("solve_spd: factorization failed", std::numeric_limits<double>::infinity());
    const Eigen::VectorXd d = ldlt.vectorD();
    if (!(d.minCoeff() > 0.0))
        throw SolverError("solve_spd: matrix is not positive definite", std::numeric_limits<double>::infinity());
    return refine(ldlt, A, b, tol, maxit, "solve_spd");
}

std::vector<double> solve_general(const SparseMatrix& A, const std::vector<double>& b, double tol,
                                  std::size_t maxit) {
    require_square(A, b);
    if (A.n() == 0) return {};
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A.to_eigen());
    if (lu.info() != Eigen::Success)
        throw SolverError("solve_general: factorization failed (" + lu.lastErrorMessage() + ")",
                          std::numeric_limits<double>::infinity());
    return refine(lu, A, b, tol, maxit, "solve_general");
}

std::vector<double> solve(const SparseSystem& sys, double tol) {
    return sys.A.symmetric() ? solve_spd(sys.A, sys.b, tol) : solve_general(sys.A, sys.b, tol);
}

void write_matrix_market(const SparseMatrix& A, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.n() << ' ' << A.n() << ' ' << A.nnz() << '\n';
    out << std::setprecision(17);
    const auto& off = A.row_offsets();
    for (std::size_t i = 0; i < A.n(); ++i)
        for (std::size_t k = off[i]; k < off[i + 1]; ++k)
            out << i + 1 << ' ' << A.col_indices()[k] + 1 << ' ' << A.values()[k] << '\n';
}

void write_matrix_market(const SparseMatrix& A, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    write_matrix_market(A, f);
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace advfv
