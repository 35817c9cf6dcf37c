#include "advfv/errors.hpp"
#include "advfv/sparse_linalg.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <sstream>

using namespace advfv;
using advfv::testing::Rng;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A.to_eigen()); }

}  // namespace

TEST_CASE("stiffness of two cells") {
    const SparseMatrix S = assemble_stiffness(build_structured_rect(2, 1, 2.0, 1.0));
    CHECK(S.coeff(0, 0) == 1.0);
    CHECK(S.coeff(0, 1) == -1.0);
    CHECK(S.coeff(1, 0) == -1.0);
    CHECK(S.coeff(1, 1) == 1.0);
    CHECK(S.symmetric());
}

TEST_CASE("stiffness structure on several meshes") {
    std::vector<Mesh> meshes;
    meshes.push_back(build_structured_rect(16, 16, 1.0, 1.0));
    meshes.push_back(build_structured_rect(7, 3, 2.0, 0.5));
    meshes.push_back(load_msh(std::string(ADVFV_TEST_DATA_DIR) + "/disk_200.msh"));
    for (const Mesh& m : meshes) {
        const SparseMatrix S = assemble_stiffness(m);
        const std::vector<double> y = S.multiply(std::vector<double>(m.n_cells(), 3.0));
        for (double v : y) CHECK(std::abs(v) <= 1e-13 * 3.0 * std::max(1.0, S.coeff(0, 0)));
        const Eigen::MatrixXd D = dense(S);
        CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);
        // sorted unique columns
        const auto& off = S.row_offsets();
        for (std::size_t i = 0; i < S.n(); ++i)
            for (std::size_t k = off[i] + 1; k < off[i + 1]; ++k)
                CHECK(S.col_indices()[k - 1] < S.col_indices()[k]);
    }
}

TEST_CASE("stiffness spectrum on the 16x16 square") {
    const SparseMatrix S = assemble_stiffness(build_structured_rect(16, 16, 1.0, 1.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(S));
    const auto& ev = es.eigenvalues();
    CHECK(std::abs(ev(0)) < 1e-12);
    CHECK(ev(1) > 1e-3);
    const Eigen::VectorXd v0 = es.eigenvectors().col(0);
    CHECK((v0.array() - v0(0)).abs().maxCoeff() < 1e-10);
    // smallest nonzero eigenvalue of the 1D chain, 2 - 2 cos(pi / 16)
    CHECK(ev(1) == doctest::Approx(2.0 - 2.0 * std::cos(M_PI / 16.0)).epsilon(1e-10));
}

TEST_CASE("triplet assembly sums duplicates") {
    const SparseMatrix A = SparseMatrix::from_triplets(2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, -1.0}, {1, 1, 4.0}});
    CHECK(A.nnz() == 3);
    CHECK(A.coeff(0, 0) == 3.0);
    CHECK(A.coeff(0, 1) == 0.0);
    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, {{2, 0, 1.0}}), InvalidArgument);
}

TEST_CASE("solve_spd") {
    const SparseMatrix I = SparseMatrix::identity(5);
    const std::vector<double> b{1, -2, 3, 0.5, 7};
    CHECK(solve_spd(I, b) == b);

    const SparseMatrix A = SparseMatrix::from_triplets(2, {{0, 0, 2}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}}, true);
    const auto x = solve_spd(A, {1.0, 1.0});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));

    // assembled + shift, 50 unknowns
    const Mesh m = build_structured_rect(10, 5, 1.0, 1.0);
    Rng rng(31);
    std::vector<double> shift(m.n_cells()), rhs(m.n_cells());
    for (std::size_t k = 0; k < m.n_cells(); ++k) {
        shift[k] = rng.uniform(0.01, 1.0);
        rhs[k] = rng.uniform(-1.0, 1.0);
    }
    const SparseMatrix B = assemble_stiffness(m).scaled_plus_diagonal(0.7, shift);
    const auto y = solve_spd(B, rhs);
    CHECK(relative_residual(B, y, rhs) <= 1e-12);

    const auto z = solve_general(B, rhs);
    for (std::size_t k = 0; k < y.size(); ++k) CHECK(std::abs(y[k] - z[k]) <= 1e-10);

    // semidefinite stiffness alone is rejected
    CHECK_THROWS_AS(solve_spd(assemble_stiffness(m), rhs), SolverError);
}

TEST_CASE("solve_general") {
    const SparseMatrix U = SparseMatrix::from_triplets(
        3, {{0, 0, 2}, {0, 1, 1}, {0, 2, -1}, {1, 1, 4}, {1, 2, 2}, {2, 2, 5}});
    const auto x = solve_general(U, {3.0, 10.0, 10.0});
    CHECK(x[2] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(1.5));
    CHECK(x[0] == doctest::Approx((3.0 - 1.5 + 2.0) / 2.0));
    CHECK(relative_residual(U, x, {3.0, 10.0, 10.0}) <= 1e-12);

    const SparseMatrix S = SparseMatrix::from_triplets(
        3, {{0, 0, 1}, {0, 1, 2}, {0, 2, 3}, {1, 0, 1}, {1, 1, 2}, {1, 2, 3}, {2, 0, 0.5}, {2, 2, 1}});
    CHECK_THROWS_AS(solve_general(S, {1.0, 2.0, 3.0}), SolverError);
}

TEST_CASE("matrix market export") {
    const SparseMatrix A = SparseMatrix::from_triplets(2, {{0, 0, 2}, {1, 0, -1}, {1, 1, 0.5}});
    std::ostringstream out;
    write_matrix_market(A, out);
    CHECK(out.str() == "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 2\n2 1 -1\n2 2 0.5\n");
}
