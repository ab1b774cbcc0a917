#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "ckgnn/rng.hpp"
#include "ckgnn/sparse.hpp"
#include "ckgnn/spectral.hpp"

using ckgnn::Graph;
using ckgnn::SparseMatrix;
using ckgnn::Tensor;
using ckgnn::symmetric_eigenvalues;

TEST_CASE("jacobi eigenvalues match analytic spectra", "[spectral]") {
    SECTION("diagonal matrix") {
        const auto ev = symmetric_eigenvalues(Tensor{{3.0, 0.0}, {0.0, -1.0}});
        REQUIRE(ev.size() == 2);
        CHECK(ev[0] == Catch::Approx(-1.0).margin(1e-12));
        CHECK(ev[1] == Catch::Approx(3.0).margin(1e-12));
    }
    SECTION("2x2 with off-diagonal coupling") {
        const auto ev = symmetric_eigenvalues(Tensor{{2.0, 1.0}, {1.0, 2.0}});
        CHECK(ev[0] == Catch::Approx(1.0).margin(1e-12));
        CHECK(ev[1] == Catch::Approx(3.0).margin(1e-12));
    }
    SECTION("tridiagonal 3x3") {
        const auto ev =
            symmetric_eigenvalues(Tensor{{2.0, -1.0, 0.0}, {-1.0, 2.0, -1.0}, {0.0, -1.0, 2.0}});
        const double r2 = std::sqrt(2.0);
        CHECK(ev[0] == Catch::Approx(2.0 - r2).margin(1e-12));
        CHECK(ev[1] == Catch::Approx(2.0).margin(1e-12));
        CHECK(ev[2] == Catch::Approx(2.0 + r2).margin(1e-12));
    }
}

TEST_CASE("jacobi preserves trace and frobenius norm", "[spectral]") {
    ckgnn::Rng rng(21);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 20;
        Tensor a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double v = rng.normal();
                a.at(i, j) = v;
                a.at(j, i) = v;
            }
        const auto ev = symmetric_eigenvalues(a);
        double trace = 0.0, frob2 = 0.0, ev_sum = 0.0, ev_sq = 0.0;
        for (int i = 0; i < n; ++i) trace += a.at(i, i);
        for (double v : a.data) frob2 += v * v;
        for (double l : ev) {
            ev_sum += l;
            ev_sq += l * l;
        }
        CHECK(ev_sum == Catch::Approx(trace).margin(1e-10));
        CHECK(ev_sq == Catch::Approx(frob2).margin(1e-9));
        CHECK(std::is_sorted(ev.begin(), ev.end()));
    }
}

TEST_CASE("symmetric_eigenvalues rejects bad input", "[spectral]") {
    CHECK_THROWS_AS(symmetric_eigenvalues(Tensor(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(symmetric_eigenvalues(Tensor{{0.0, 1.0}, {0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("check_psd_decomposition on hand-worked graphs", "[spectral]") {
    SECTION("2-cycle: eigenvalues of I - A-hat are 0 and 1") {
        const Graph g = Graph::from_edges(2, {{0, 1, 1.0}});
        const SparseMatrix a_hat = normalized_adjacency(g);
        const auto rep = ckgnn::check_psd_decomposition(a_hat);
        CHECK(rep.passes);
        CHECK(rep.min_eig_s == Catch::Approx(0.0).margin(1e-12));
        CHECK(rep.min_eig_i_minus_s == Catch::Approx(0.0).margin(1e-12));
        const Tensor dense = a_hat.to_dense();
        Tensor i_minus(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                i_minus.at(i, j) = (i == j ? 1.0 : 0.0) - dense.at(i, j);
        const auto ev = symmetric_eigenvalues(i_minus);
        CHECK(ev[0] == Catch::Approx(0.0).margin(1e-12));
        CHECK(ev[1] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("identity pattern passes") {
        SparseMatrix eye;
        eye.n = 4;
        eye.row_ptr = {0, 1, 2, 3, 4};
        eye.col_idx = {0, 1, 2, 3};
        eye.values.assign(4, 1.0);
        eye.symmetric = true;
        CHECK(ckgnn::check_psd_decomposition(eye).passes);
    }
}

TEST_CASE("normalized adjacency passes the psd split on random graphs", "[spectral]") {
    ckgnn::Rng rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 50;
        std::vector<ckgnn::Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform01() < 0.1)
                    edges.push_back({i, j, trial % 2 == 0 ? 1.0 : rng.uniform(0.1, 2.0)});
        const auto rep = ckgnn::check_psd_decomposition(normalized_adjacency(Graph::from_edges(n, edges)));
        CHECK(rep.passes);
        CHECK(rep.min_eig_i_minus_s >= -1e-8);
        // Ahat itself is indefinite; its spectrum only promises to stay in [-1, 1]
        CHECK(rep.min_eig_s >= -1.0 - 1e-8);
    }
}

TEST_CASE("check_psd_decomposition guards", "[spectral]") {
    SparseMatrix big;
    big.n = ckgnn::kDenseGuard + 1;
    big.row_ptr.assign(big.n + 1, 0);
    CHECK_THROWS_AS(ckgnn::check_psd_decomposition(big), std::invalid_argument);

    SparseMatrix asym;
    asym.n = 2;
    asym.row_ptr = {0, 1, 1};
    asym.col_idx = {1};
    asym.values = {1.0};
    CHECK_THROWS_AS(ckgnn::check_psd_decomposition(asym), std::invalid_argument);
}
