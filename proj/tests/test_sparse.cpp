#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ckgnn/rng.hpp"
#include "ckgnn/sparse.hpp"

using ckgnn::Edge;
using ckgnn::Graph;
using ckgnn::SparseMatrix;
using ckgnn::Tensor;

namespace {

Graph path3() { return Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

}  // namespace

TEST_CASE("from_edges rejects malformed input", "[sparse]") {
    CHECK_THROWS_AS(Graph::from_edges(0, {}), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{1, 1, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 3, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{-1, 0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1, -2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1, 1.0}, {0, 1, 1.0}}), std::invalid_argument);
    // same edge given in both orientations is still a duplicate
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
}

TEST_CASE("adjacency matrix is symmetric with sorted columns", "[sparse]") {
    const Graph g = Graph::from_edges(4, {{2, 0, 1.5}, {0, 1, 1.0}, {3, 1, 2.0}});
    const SparseMatrix a = adjacency_matrix(g);
    a.validate();
    CHECK(a.n == 4);
    CHECK(a.nnz() == 6);
    CHECK(a.check_symmetric());
    CHECK(a.value_at(0, 2) == 1.5);
    CHECK(a.value_at(2, 0) == 1.5);
    CHECK(a.value_at(1, 3) == 2.0);
    CHECK(a.value_at(0, 3) == 0.0);
    CHECK_FALSE(a.has_entry(0, 0));
}

TEST_CASE("add_self_loops fills the diagonal with ones", "[sparse]") {
    SECTION("2-cycle becomes the all-ones matrix") {
        const Graph g = Graph::from_edges(2, {{0, 1, 1.0}});
        const SparseMatrix t = add_self_loops(adjacency_matrix(g));
        const Tensor d = t.to_dense();
        for (double v : d.data) CHECK(v == 1.0);
    }
    SECTION("single node gains exactly its loop") {
        const Graph g = Graph::from_edges(1, {});
        const SparseMatrix t = add_self_loops(adjacency_matrix(g));
        CHECK(t.nnz() == 1);
        CHECK(t.value_at(0, 0) == 1.0);
    }
    SECTION("existing weights survive untouched") {
        const Graph g = Graph::from_edges(2, {{0, 1, 0.5}});
        const SparseMatrix t = add_self_loops(adjacency_matrix(g));
        CHECK(t.value_at(0, 1) == 0.5);
        CHECK(t.value_at(1, 0) == 0.5);
        CHECK(t.value_at(0, 0) == 1.0);
        CHECK(t.value_at(1, 1) == 1.0);
    }
    SECTION("applying twice is an error") {
        const Graph g = Graph::from_edges(2, {{0, 1, 1.0}});
        const SparseMatrix t = add_self_loops(adjacency_matrix(g));
        CHECK_THROWS_AS(add_self_loops(t), std::invalid_argument);
    }
}

TEST_CASE("weighted degrees are at least one after augmentation", "[sparse]") {
    ckgnn::Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Edge> edges;
        const int n = 30;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform01() < 0.1) edges.push_back({i, j, rng.uniform(0.1, 3.0)});
        const Graph g = Graph::from_edges(n, edges);
        const auto d = ckgnn::weighted_degrees(add_self_loops(adjacency_matrix(g)));
        for (double v : d) CHECK(v >= 1.0);
    }
}

TEST_CASE("symmetric_normalize matches hand-worked cases", "[sparse]") {
    SECTION("2-cycle") {
        const Graph g = Graph::from_edges(2, {{0, 1, 1.0}});
        const SparseMatrix a_hat = normalized_adjacency(g);
        for (const double v : a_hat.values) CHECK(v == 0.5);
    }
    SECTION("isolated node") {
        const Graph g = Graph::from_edges(1, {});
        const SparseMatrix a_hat = normalized_adjacency(g);
        CHECK(a_hat.value_at(0, 0) == 1.0);
    }
    SECTION("path on 3 nodes") {
        const SparseMatrix a_hat = normalized_adjacency(path3());
        // endpoint degree 2, middle degree 3
        CHECK(a_hat.value_at(0, 1) == Catch::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-14));
        CHECK(a_hat.value_at(0, 0) == Catch::Approx(0.5).epsilon(1e-14));
        CHECK(a_hat.value_at(1, 1) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SECTION("missing self-loops is an error") {
        SparseMatrix z;
        z.n = 1;
        z.row_ptr = {0, 0};
        CHECK_THROWS_WITH(symmetric_normalize(z),
                          Catch::Matchers::ContainsSubstring("self-loops"));
    }
}

TEST_CASE("symmetric_normalize output is bit-equal symmetric", "[sparse]") {
    ckgnn::Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Edge> edges;
        const int n = 40;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform01() < 0.08) edges.push_back({i, j, rng.uniform(0.2, 4.0)});
        const SparseMatrix a_hat = normalized_adjacency(Graph::from_edges(n, edges));
        CHECK(a_hat.check_symmetric());
        for (const double v : a_hat.values) {
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("normalized adjacency of a regular graph has unit row sums", "[sparse]") {
    // 6-cycle: all augmented degrees equal 3
    std::vector<Edge> edges;
    for (int i = 0; i < 6; ++i) edges.push_back({i, (i + 1) % 6, 1.0});
    const SparseMatrix a_hat = normalized_adjacency(Graph::from_edges(6, edges));
    const auto sums = ckgnn::weighted_degrees(a_hat);
    for (double s : sums) CHECK(s == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spmm agrees with dense multiplication", "[sparse]") {
    SECTION("identity pattern returns X") {
        SparseMatrix eye;
        eye.n = 3;
        eye.row_ptr = {0, 1, 2, 3};
        eye.col_idx = {0, 1, 2};
        eye.values = {1.0, 1.0, 1.0};
        const Tensor x{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
        const Tensor y = spmm(eye, x);
        CHECK(y.max_abs_diff(x) == 0.0);
    }
    SECTION("2-cycle A-hat averages the rows") {
        const Graph g = Graph::from_edges(2, {{0, 1, 1.0}});
        const Tensor y = spmm(normalized_adjacency(g), Tensor{{2.0}, {4.0}});
        CHECK(y.at(0, 0) == 3.0);
        CHECK(y.at(1, 0) == 3.0);
    }
    SECTION("empty pattern gives the zero matrix") {
        SparseMatrix z;
        z.n = 3;
        z.row_ptr = {0, 0, 0, 0};
        const Tensor y = spmm(z, Tensor{{1.0}, {2.0}, {3.0}});
        for (double v : y.data) CHECK(v == 0.0);
    }
    SECTION("random graphs match the dense oracle") {
        ckgnn::Rng rng(13);
        for (int trial = 0; trial < 5; ++trial) {
            const int n = 20 + static_cast<int>(rng.below(180));
            std::vector<Edge> edges;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (rng.uniform01() < 0.05) edges.push_back({i, j, rng.uniform(0.1, 2.0)});
            const SparseMatrix s = normalized_adjacency(Graph::from_edges(n, edges));
            Tensor x(n, 7);
            for (auto& v : x.data) v = rng.normal();
            const Tensor got = spmm(s, x);
            const Tensor want = matmul(s.to_dense(), x);
            CHECK(got.max_abs_diff(want) < 1e-12);
        }
    }
    SECTION("shape mismatch is an error") {
        SparseMatrix z;
        z.n = 2;
        z.row_ptr = {0, 0, 0};
        CHECK_THROWS_AS(spmm(z, Tensor(3, 1)), std::invalid_argument);
    }
}

TEST_CASE("sparse accessors behave", "[sparse]") {
    const SparseMatrix a_hat = normalized_adjacency(path3());
    const auto pairs = a_hat.stored_pairs();
    REQUIRE(pairs.size() == static_cast<std::size_t>(a_hat.nnz()));
    CHECK(pairs.front() == std::pair<int, int>{0, 0});
    const Tensor d = a_hat.to_dense();
    for (const auto& [i, j] : pairs) CHECK(d.at(i, j) == a_hat.value_at(i, j));
    CHECK(a_hat.same_pattern(a_hat));

    SparseMatrix bad = a_hat;
    bad.col_idx[0] = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
