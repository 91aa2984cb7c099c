#include <catch2/catch_amalgamated.hpp>

#include "mrdro/lp.hpp"
#include "mrdro/rng.hpp"

using namespace mrdro;

namespace {

LpProblem unit_triangle() {
    // min -x - y  s.t.  x + y <= 1, x,y >= 0
    LpProblem p;
    p.add_var(-1.0);
    p.add_var(-1.0);
    p.add_constraint({1.0, 1.0}, Relation::LessEq, 1.0);
    return p;
}

// Random LP over a box with extra inequality rows; bounded by construction.
LpProblem random_bounded_lp(Rng& rng, std::size_t n, std::size_t extra_rows) {
    LpProblem p;
    for (std::size_t j = 0; j < n; ++j)
        p.add_var(rng.uniform(-2.0, 2.0), -rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0));
    for (std::size_t r = 0; r < extra_rows; ++r) {
        Vec row(n);
        for (auto& a : row) a = rng.uniform(-1.0, 1.0);
        p.add_constraint(std::move(row), rng.uniform01() < 0.5 ? Relation::LessEq : Relation::GreaterEq,
                         rng.uniform(-1.0, 1.0));
    }
    return p;
}

}  // namespace

TEST_CASE("single variable with bounds") {
    LpProblem p;
    p.add_var(1.0, 3.0, 10.0);
    const auto sol = solve_lp(p);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.values[0] == Catch::Approx(3.0));
    CHECK(sol.objective_value == Catch::Approx(3.0));
}

TEST_CASE("simplex on the unit triangle") {
    const auto sol = solve_lp(unit_triangle());
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective_value == Catch::Approx(-1.0));
}

TEST_CASE("infeasible and unbounded detection") {
    LpProblem inf;
    inf.add_var(0.0, -kInf, kInf);
    inf.add_constraint({1.0}, Relation::LessEq, 0.0);
    inf.add_constraint({1.0}, Relation::GreaterEq, 1.0);
    CHECK(solve_lp(inf).status == LpStatus::Infeasible);

    LpProblem unb;
    unb.add_var(-1.0);  // min -x, x >= 0
    CHECK(solve_lp(unb).status == LpStatus::Unbounded);
}

TEST_CASE("equality rows and free variables") {
    // min x + y  s.t.  x + 2y = 4, x - y = 1, both free
    LpProblem p;
    p.add_var(1.0, -kInf, kInf);
    p.add_var(1.0, -kInf, kInf);
    p.add_constraint({1.0, 2.0}, Relation::Equal, 4.0);
    p.add_constraint({1.0, -1.0}, Relation::Equal, 1.0);
    const auto sol = solve_lp(p);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.values[0] == Catch::Approx(2.0));
    CHECK(sol.values[1] == Catch::Approx(1.0));
}

TEST_CASE("malformed problems are rejected") {
    LpProblem p;
    p.add_var(1.0);
    p.add_constraint({1.0, 2.0}, Relation::LessEq, 1.0);  // wrong row length
    CHECK_THROWS_AS(solve_lp(p), MalformedProblem);

    LpProblem q;
    q.add_var(1.0, 2.0, 1.0);  // lower > upper
    CHECK_THROWS_AS(solve_lp(q), MalformedProblem);
}

TEST_CASE("vertex enumeration on the unit triangle") {
    const auto verts = enumerate_vertices(unit_triangle());
    REQUIRE(verts.size() == 3);
}

TEST_CASE("vertex enumeration: empty polytope and unit cube") {
    LpProblem empty;
    empty.add_var(0.0, -kInf, kInf);
    empty.add_constraint({1.0}, Relation::LessEq, 0.0);
    empty.add_constraint({1.0}, Relation::GreaterEq, 1.0);
    CHECK(enumerate_vertices(empty).empty());

    LpProblem cube;
    for (int j = 0; j < 3; ++j) cube.add_var(0.0, 0.0, 1.0);
    CHECK(enumerate_vertices(cube).size() == 8);
}

TEST_CASE("vertex enumeration rejects oversized problems") {
    LpProblem p;
    for (int j = 0; j < 11; ++j) p.add_var(0.0, 0.0, 1.0);
    CHECK_THROWS_AS(enumerate_vertices(p), TooLarge);
}

TEST_CASE("simplex agrees with vertex enumeration on random bounded LPs") {
    Rng rng(20240901);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform01() * 5);  // 2..6
        const auto p = random_bounded_lp(rng, n, 4);
        const auto sol = solve_lp(p);
        const auto verts = enumerate_vertices(p);
        if (sol.status == LpStatus::Infeasible) {
            CHECK(verts.empty());
            continue;
        }
        REQUIRE(sol.status == LpStatus::Optimal);
        REQUIRE_FALSE(verts.empty());
        double best = kInf;
        for (const auto& v : verts) best = std::min(best, dot(p.objective, v));
        CHECK(std::abs(sol.objective_value - best) < 1e-6);
    }
}

TEST_CASE("optimal solutions satisfy constraints and bounds") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const auto p = random_bounded_lp(rng, 4, 5);
        const auto sol = solve_lp(p);
        if (sol.status != LpStatus::Optimal) continue;
        for (const auto& c : p.constraints) {
            const double lhs = dot(c.coeffs, sol.values);
            if (c.rel == Relation::LessEq) CHECK(lhs <= c.rhs + 1e-7);
            if (c.rel == Relation::GreaterEq) CHECK(lhs >= c.rhs - 1e-7);
            if (c.rel == Relation::Equal) CHECK(std::abs(lhs - c.rhs) <= 1e-7);
        }
        for (std::size_t j = 0; j < p.num_vars; ++j) {
            CHECK(sol.values[j] >= p.var_bounds[j].lower - 1e-9);
            CHECK(sol.values[j] <= p.var_bounds[j].upper + 1e-9);
        }
    }
}

TEST_CASE("deterministic resolve") {
    Rng rng(99);
    const auto p = random_bounded_lp(rng, 5, 6);
    const auto a = solve_lp(p);
    const auto b = solve_lp(p);
    REQUIRE(a.status == b.status);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t j = 0; j < a.values.size(); ++j) CHECK(a.values[j] == b.values[j]);
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("MPS dump has the fixed sections in order") {
    const auto text = write_mps(unit_triangle(), "TRI");
    CHECK(text.find("NAME          TRI") == 0);
    const auto rows = text.find("ROWS");
    const auto cols = text.find("COLUMNS");
    const auto rhs = text.find("RHS\n");
    const auto bounds = text.find("BOUNDS");
    const auto endata = text.find("ENDATA");
    REQUIRE(rows != std::string::npos);
    REQUIRE(cols != std::string::npos);
    REQUIRE(rhs != std::string::npos);
    REQUIRE(bounds != std::string::npos);
    REQUIRE(endata != std::string::npos);
    CHECK(rows < cols);
    CHECK(cols < rhs);
    CHECK(rhs < bounds);
    CHECK(bounds < endata);
    CHECK(text.find(" L  R1") != std::string::npos);
}
