#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "mrdro/common.hpp"

namespace mrdro {

enum class Relation { LessEq, Equal, GreaterEq };

inline const char* relation_name(Relation r) {
    switch (r) {
    case Relation::LessEq: return "<=";
    case Relation::Equal: return "=";
    case Relation::GreaterEq: return ">=";
    }
    return "?";
}

struct LpConstraint {
    Vec coeffs;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
};

struct VarBound {
    double lower = 0.0;
    double upper = kInf;
};

// Dense LP: minimize objective . v subject to the constraint rows and
// per-variable bounds.  Default bound is [0, +inf).
struct LpProblem {
    std::size_t num_vars = 0;
    Vec objective;
    std::vector<LpConstraint> constraints;
    std::vector<VarBound> var_bounds;

    std::size_t add_var(double cost, double lower = 0.0, double upper = kInf) {
        objective.push_back(cost);
        var_bounds.push_back({lower, upper});
        return num_vars++;
    }

    void add_constraint(Vec coeffs, Relation rel, double rhs) {
        constraints.push_back({std::move(coeffs), rel, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* lp_status_name(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec values;
    double objective_value = 0.0;
    std::size_t iterations = 0;
};

struct MalformedProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalBreakdown : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimplexOptions {
    double pivot_tol = 1e-10;
    double degenerate_pivot_tol = 1e-12;
    double feas_tol = 1e-7;
    double opt_tol = 1e-9;  // reduced-cost threshold
};

// Solver interface so an external LP engine can be swapped in behind the
// same contract.  SimplexSolver below is the reference implementation.
class LpSolver {
  public:
    virtual ~LpSolver() = default;
    virtual LpSolution solve(const LpProblem& problem) const = 0;
};

namespace detail {

inline void validate(const LpProblem& p) {
    if (p.objective.size() != p.num_vars)
        throw MalformedProblem("objective length " + std::to_string(p.objective.size()) +
                               " != num_vars " + std::to_string(p.num_vars));
    if (p.var_bounds.size() != p.num_vars)
        throw MalformedProblem("var_bounds length mismatch");
    for (std::size_t i = 0; i < p.constraints.size(); ++i)
        if (p.constraints[i].coeffs.size() != p.num_vars)
            throw MalformedProblem("constraint " + std::to_string(i) + " has " +
                                   std::to_string(p.constraints[i].coeffs.size()) +
                                   " coefficients, expected " + std::to_string(p.num_vars));
    for (std::size_t j = 0; j < p.num_vars; ++j)
        if (p.var_bounds[j].lower > p.var_bounds[j].upper)
            throw MalformedProblem("variable " + std::to_string(j) + " has lower > upper");
}

// Mapping from an original variable to its standard-form columns.
struct VarMap {
    enum Kind { Shifted, Mirrored, Split } kind = Shifted;
    std::size_t col = 0;      // primary column
    std::size_t neg_col = 0;  // second column for Split
    double offset = 0.0;      // lower bound (Shifted) or upper bound (Mirrored)
};

// Working state of one solve.  Kept off the solver object so that a single
// SimplexSolver can serve many threads.
struct Tableau {
    std::vector<Vec> rows;  // m x (n_total + 1), last column is rhs
    std::vector<std::size_t> basis;
    std::size_t n_total = 0;
};

enum class PhaseResult { Optimal, Unbounded };

}  // namespace detail

// Dense two-phase primal simplex on the full tableau.  Dantzig pricing with a
// Bland fallback after 5*(rows+cols) iterations.  Lower-bounded variables are
// shifted, upper bounds become explicit rows, free variables are split into
// positive and negative parts.
class SimplexSolver final : public LpSolver {
  public:
    explicit SimplexSolver(SimplexOptions opts = {}) : opts_(opts) {}

    LpSolution solve(const LpProblem& problem) const override {
        detail::validate(problem);

        // --- standard-form translation ----------------------------------
        std::vector<detail::VarMap> vmap(problem.num_vars);
        std::size_t n_struct = 0;
        std::vector<LpConstraint> rows = problem.constraints;

        for (std::size_t j = 0; j < problem.num_vars; ++j) {
            const auto& b = problem.var_bounds[j];
            auto& m = vmap[j];
            if (b.lower > -kInf) {
                m.kind = detail::VarMap::Shifted;
                m.col = n_struct++;
                m.offset = b.lower;
                if (b.upper < kInf) {
                    LpConstraint up;
                    up.coeffs.assign(problem.num_vars, 0.0);
                    up.coeffs[j] = 1.0;
                    up.rel = Relation::LessEq;
                    up.rhs = b.upper;
                    rows.push_back(std::move(up));
                }
            } else if (b.upper < kInf) {
                m.kind = detail::VarMap::Mirrored;
                m.col = n_struct++;
                m.offset = b.upper;
            } else {
                m.kind = detail::VarMap::Split;
                m.col = n_struct++;
                m.neg_col = n_struct++;
            }
        }

        const std::size_t m = rows.size();
        Mat A(m, n_struct);
        Vec rhs(m, 0.0);
        std::vector<Relation> rel(m);
        for (std::size_t i = 0; i < m; ++i) {
            rel[i] = rows[i].rel;
            double b = rows[i].rhs;
            for (std::size_t j = 0; j < problem.num_vars; ++j) {
                const double a = rows[i].coeffs[j];
                if (a == 0.0) continue;
                const auto& vm = vmap[j];
                switch (vm.kind) {
                case detail::VarMap::Shifted:
                    A(i, vm.col) += a;
                    b -= a * vm.offset;
                    break;
                case detail::VarMap::Mirrored:
                    A(i, vm.col) -= a;
                    b -= a * vm.offset;
                    break;
                case detail::VarMap::Split:
                    A(i, vm.col) += a;
                    A(i, vm.neg_col) -= a;
                    break;
                }
            }
            rhs[i] = b;
        }

        Vec cost(n_struct, 0.0);
        for (std::size_t j = 0; j < problem.num_vars; ++j) {
            const double c = problem.objective[j];
            const auto& vm = vmap[j];
            switch (vm.kind) {
            case detail::VarMap::Shifted: cost[vm.col] += c; break;
            case detail::VarMap::Mirrored: cost[vm.col] -= c; break;
            case detail::VarMap::Split:
                cost[vm.col] += c;
                cost[vm.neg_col] -= c;
                break;
            }
        }

        // --- tableau with slacks and artificials -------------------------
        // Column order: structural | slack/surplus | artificial | rhs.
        std::vector<std::size_t> slack_col(m, SIZE_MAX);
        std::size_t next = n_struct;
        for (std::size_t i = 0; i < m; ++i)
            if (rel[i] != Relation::Equal) slack_col[i] = next++;
        const std::size_t n_before_art = next;

        std::vector<double> slack_sign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double s = (rel[i] == Relation::LessEq)      ? 1.0
                       : (rel[i] == Relation::GreaterEq) ? -1.0
                                                         : 0.0;
            if (rhs[i] < 0.0) {
                rhs[i] = -rhs[i];
                for (std::size_t j = 0; j < n_struct; ++j) A(i, j) = -A(i, j);
                s = -s;
            }
            slack_sign[i] = s;
        }

        std::vector<std::size_t> art_col(m, SIZE_MAX);
        std::size_t n_art = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (slack_sign[i] != 1.0) art_col[i] = n_before_art + n_art++;
        const std::size_t n_total = n_before_art + n_art;

        detail::Tableau tab;
        tab.n_total = n_total;
        tab.rows.assign(m, Vec(n_total + 1, 0.0));
        tab.basis.assign(m, 0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n_struct; ++j) tab.rows[i][j] = A(i, j);
            if (slack_col[i] != SIZE_MAX) tab.rows[i][slack_col[i]] = slack_sign[i];
            tab.rows[i][n_total] = rhs[i];
            if (slack_sign[i] == 1.0) {
                tab.basis[i] = slack_col[i];
            } else {
                tab.rows[i][art_col[i]] = 1.0;
                tab.basis[i] = art_col[i];
            }
        }

        Vec d2(n_total + 1, 0.0);
        for (std::size_t j = 0; j < n_struct; ++j) d2[j] = cost[j];

        LpSolution out;
        std::size_t iterations = 0;

        if (n_art > 0) {
            Vec d1(n_total + 1, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                if (tab.basis[i] >= n_before_art)
                    for (std::size_t j = 0; j <= n_total; ++j) d1[j] -= tab.rows[i][j];
            for (std::size_t i = 0; i < m; ++i)
                if (tab.basis[i] >= n_before_art) d1[tab.basis[i]] += 1.0;

            run_phase(tab, d1, &d2, n_total, iterations);
            if (-d1[n_total] > opts_.feas_tol) {
                out.status = LpStatus::Infeasible;
                out.iterations = iterations;
                return out;
            }
            purge_artificials(tab, d2, n_before_art);
        }

        // Phase 2 prices only the genuine columns, freezing artificials out.
        const auto result = run_phase(tab, d2, nullptr, n_before_art, iterations);
        out.iterations = iterations;
        if (result == detail::PhaseResult::Unbounded) {
            out.status = LpStatus::Unbounded;
            return out;
        }

        // --- extract and map back ----------------------------------------
        Vec y(n_struct, 0.0);
        for (std::size_t i = 0; i < tab.rows.size(); ++i)
            if (tab.basis[i] < n_struct) y[tab.basis[i]] = tab.rows[i][n_total];

        out.values.assign(problem.num_vars, 0.0);
        for (std::size_t j = 0; j < problem.num_vars; ++j) {
            const auto& vm = vmap[j];
            switch (vm.kind) {
            case detail::VarMap::Shifted: out.values[j] = y[vm.col] + vm.offset; break;
            case detail::VarMap::Mirrored: out.values[j] = vm.offset - y[vm.col]; break;
            case detail::VarMap::Split: out.values[j] = y[vm.col] - y[vm.neg_col]; break;
            }
        }
        out.objective_value = dot(problem.objective, out.values);
        out.status = LpStatus::Optimal;
        return out;
    }

  private:
    detail::PhaseResult run_phase(detail::Tableau& tab, Vec& d, Vec* d_other,
                                  std::size_t n_price, std::size_t& iterations) const {
        const std::size_t m = tab.rows.size();
        const std::size_t n_total = tab.n_total;
        const std::size_t bland_after = iterations + 5 * (m + n_price);
        const std::size_t iteration_cap = iterations + 10000 + 200 * (m + n_price);
        bool force_bland = false;

        for (;;) {
            if (iterations > iteration_cap)
                throw NumericalBreakdown("simplex iteration cap exceeded");
            const bool bland = force_bland || iterations >= bland_after;

            std::ptrdiff_t enter = -1;
            if (bland) {
                for (std::size_t j = 0; j < n_price; ++j)
                    if (d[j] < -opts_.opt_tol) {
                        enter = static_cast<std::ptrdiff_t>(j);
                        break;
                    }
            } else {
                double best = -opts_.opt_tol;
                for (std::size_t j = 0; j < n_price; ++j)
                    if (d[j] < best) {
                        best = d[j];
                        enter = static_cast<std::ptrdiff_t>(j);
                    }
            }
            if (enter < 0) return detail::PhaseResult::Optimal;

            const std::size_t e = static_cast<std::size_t>(enter);
            std::ptrdiff_t leave = -1;
            double best_ratio = kInf;
            double best_pivot = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double a = tab.rows[i][e];
                if (a <= opts_.pivot_tol) continue;
                const double ratio = tab.rows[i][n_total] / a;
                bool take;
                if (leave < 0 || ratio < best_ratio - 1e-12) {
                    take = true;
                } else if (ratio < best_ratio + 1e-12) {
                    // tie: Bland picks the smallest basis index, Dantzig the
                    // largest pivot for stability
                    take = bland ? tab.basis[i] < tab.basis[static_cast<std::size_t>(leave)]
                                 : a > best_pivot;
                } else {
                    take = false;
                }
                if (take) {
                    best_ratio = std::min(best_ratio, ratio);
                    best_pivot = a;
                    leave = static_cast<std::ptrdiff_t>(i);
                }
            }
            if (leave < 0) {
                bool gray_zone = false;
                for (std::size_t i = 0; i < m; ++i)
                    if (tab.rows[i][e] > opts_.degenerate_pivot_tol) gray_zone = true;
                if (gray_zone) {
                    // Entries exist between 1e-12 and the pivot threshold:
                    // retry under Bland's rule before giving up.
                    if (bland)
                        throw NumericalBreakdown(
                            "no pivot above threshold persists under Bland's rule");
                    force_bland = true;
                    continue;
                }
                return detail::PhaseResult::Unbounded;
            }

            pivot(tab, d, d_other, static_cast<std::size_t>(leave), e);
            ++iterations;
        }
    }

    void pivot(detail::Tableau& tab, Vec& d, Vec* d_other, std::size_t r, std::size_t e) const {
        const std::size_t n_total = tab.n_total;
        Vec& prow = tab.rows[r];
        const double inv = 1.0 / prow[e];
        for (double& v : prow) v *= inv;
        prow[e] = 1.0;
        for (std::size_t i = 0; i < tab.rows.size(); ++i) {
            if (i == r) continue;
            const double f = tab.rows[i][e];
            if (f == 0.0) continue;
            Vec& row = tab.rows[i];
            for (std::size_t j = 0; j <= n_total; ++j) row[j] -= f * prow[j];
            row[e] = 0.0;
        }
        const double fd = d[e];
        if (fd != 0.0) {
            for (std::size_t j = 0; j <= n_total; ++j) d[j] -= fd * prow[j];
            d[e] = 0.0;
        }
        if (d_other) {
            const double fo = (*d_other)[e];
            if (fo != 0.0) {
                for (std::size_t j = 0; j <= n_total; ++j) (*d_other)[j] -= fo * prow[j];
                (*d_other)[e] = 0.0;
            }
        }
        tab.basis[r] = e;
    }

    // After phase 1, pivot basic artificials out on any usable column; rows
    // admitting none are redundant and get dropped.
    void purge_artificials(detail::Tableau& tab, Vec& d2, std::size_t n_before_art) const {
        for (std::size_t i = 0; i < tab.rows.size();) {
            if (tab.basis[i] < n_before_art) {
                ++i;
                continue;
            }
            std::ptrdiff_t col = -1;
            for (std::size_t j = 0; j < n_before_art; ++j)
                if (std::abs(tab.rows[i][j]) > opts_.pivot_tol) {
                    col = static_cast<std::ptrdiff_t>(j);
                    break;
                }
            if (col >= 0) {
                pivot(tab, d2, nullptr, i, static_cast<std::size_t>(col));
                ++i;
            } else {
                tab.rows.erase(tab.rows.begin() + static_cast<std::ptrdiff_t>(i));
                tab.basis.erase(tab.basis.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
    }

    SimplexOptions opts_;
};

inline LpSolution solve_lp(const LpProblem& problem) {
    static const SimplexSolver solver;
    return solver.solve(problem);
}

// ---------------------------------------------------------------------------
// Exhaustive vertex enumeration, intended as a test oracle for small LPs.
// Basic feasible points are intersections of num_vars active rows (counting
// finite bounds as rows) that satisfy every constraint.
// ---------------------------------------------------------------------------
inline std::vector<Vec> enumerate_vertices(const LpProblem& problem) {
    detail::validate(problem);
    const std::size_t n = problem.num_vars;
    if (n > 10) throw TooLarge("enumerate_vertices: more than 10 variables");

    struct Row {
        Vec a;
        Relation rel;
        double b;
    };
    std::vector<Row> all;
    for (const auto& c : problem.constraints) all.push_back({c.coeffs, c.rel, c.rhs});
    for (std::size_t j = 0; j < n; ++j) {
        Vec unit(n, 0.0);
        unit[j] = 1.0;
        if (problem.var_bounds[j].lower > -kInf)
            all.push_back({unit, Relation::GreaterEq, problem.var_bounds[j].lower});
        if (problem.var_bounds[j].upper < kInf)
            all.push_back({unit, Relation::LessEq, problem.var_bounds[j].upper});
    }
    if (all.size() > 24) throw TooLarge("enumerate_vertices: more than 24 rows");
    if (all.size() < n) return {};

    std::vector<std::size_t> mandatory;  // equality rows are always active
    std::vector<std::size_t> optional_rows;
    for (std::size_t i = 0; i < all.size(); ++i)
        (all[i].rel == Relation::Equal ? mandatory : optional_rows).push_back(i);
    if (mandatory.size() > n) return {};
    const std::size_t pick = n - mandatory.size();
    if (optional_rows.size() < pick) return {};

    std::vector<Vec> vertices;
    auto try_active_set = [&](const std::vector<std::size_t>& chosen) {
        Mat M(n, n);
        Vec rhs(n);
        std::size_t r = 0;
        for (std::size_t idx : mandatory) {
            for (std::size_t j = 0; j < n; ++j) M(r, j) = all[idx].a[j];
            rhs[r++] = all[idx].b;
        }
        for (std::size_t idx : chosen) {
            for (std::size_t j = 0; j < n; ++j) M(r, j) = all[idx].a[j];
            rhs[r++] = all[idx].b;
        }
        // Gauss-Jordan with partial pivoting.
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            for (std::size_t i = col + 1; i < n; ++i)
                if (std::abs(M(i, col)) > std::abs(M(piv, col))) piv = i;
            if (std::abs(M(piv, col)) < 1e-11) return;  // singular active set
            if (piv != col) {
                for (std::size_t j = 0; j < n; ++j) std::swap(M(piv, j), M(col, j));
                std::swap(rhs[piv], rhs[col]);
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (i == col) continue;
                const double f = M(i, col) / M(col, col);
                if (f == 0.0) continue;
                for (std::size_t j = col; j < n; ++j) M(i, j) -= f * M(col, j);
                rhs[i] -= f * rhs[col];
            }
        }
        Vec x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = rhs[j] / M(j, j);

        for (const auto& row : all) {
            const double slack = row.b - dot(row.a, x);
            if (row.rel == Relation::LessEq && slack < -1e-7) return;
            if (row.rel == Relation::GreaterEq && slack > 1e-7) return;
            if (row.rel == Relation::Equal && std::abs(slack) > 1e-7) return;
        }
        for (const auto& v : vertices) {
            double diff = 0.0;
            for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(v[j] - x[j]));
            if (diff < 1e-7) return;  // duplicate basic point
        }
        vertices.push_back(std::move(x));
    };

    if (pick == 0) {
        try_active_set({});
        return vertices;
    }
    std::vector<std::size_t> combo(pick);
    for (std::size_t i = 0; i < pick; ++i) combo[i] = i;
    std::size_t budget = 4'000'000;
    for (;;) {
        if (budget-- == 0) throw TooLarge("enumerate_vertices: combination budget exceeded");
        std::vector<std::size_t> chosen(pick);
        for (std::size_t i = 0; i < pick; ++i) chosen[i] = optional_rows[combo[i]];
        try_active_set(chosen);
        std::size_t k = pick;
        while (k > 0 && combo[k - 1] == optional_rows.size() - pick + (k - 1)) --k;
        if (k == 0) break;
        ++combo[k - 1];
        for (std::size_t i = k; i < pick; ++i) combo[i] = combo[i - 1] + 1;
    }
    return vertices;
}

// ---------------------------------------------------------------------------
// Fixed-column MPS writer (ROWS/COLUMNS/RHS/BOUNDS), for cross-checking a
// problem against external solvers.
// ---------------------------------------------------------------------------
inline std::string write_mps(const LpProblem& problem, const std::string& name = "MRDRO") {
    detail::validate(problem);
    auto field = [](const std::string& s, std::size_t width) {
        std::string out = s.substr(0, width);
        out.resize(width, ' ');
        return out;
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    auto rname = [](std::size_t i) { return "R" + std::to_string(i + 1); };
    auto cname = [](std::size_t j) { return "X" + std::to_string(j + 1); };

    std::string s;
    s += "NAME          " + name + "\n";
    s += "ROWS\n";
    s += " N  COST\n";
    for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
        const char t = problem.constraints[i].rel == Relation::LessEq      ? 'L'
                       : problem.constraints[i].rel == Relation::GreaterEq ? 'G'
                                                                           : 'E';
        s += std::string(" ") + t + "  " + rname(i) + "\n";
    }
    s += "COLUMNS\n";
    for (std::size_t j = 0; j < problem.num_vars; ++j) {
        std::vector<std::pair<std::string, double>> entries;
        if (problem.objective[j] != 0.0) entries.emplace_back("COST", problem.objective[j]);
        for (std::size_t i = 0; i < problem.constraints.size(); ++i)
            if (problem.constraints[i].coeffs[j] != 0.0)
                entries.emplace_back(rname(i), problem.constraints[i].coeffs[j]);
        for (std::size_t k = 0; k < entries.size(); k += 2) {
            std::string line = "    " + field(cname(j), 10) + field(entries[k].first, 10) +
                               field(num(entries[k].second), 12);
            if (k + 1 < entries.size())
                line += "   " + field(entries[k + 1].first, 10) + num(entries[k + 1].second);
            while (!line.empty() && line.back() == ' ') line.pop_back();
            s += line + "\n";
        }
    }
    s += "RHS\n";
    for (std::size_t i = 0; i < problem.constraints.size(); ++i)
        if (problem.constraints[i].rhs != 0.0)
            s += "    " + field("RHS", 10) + field(rname(i), 10) + num(problem.constraints[i].rhs) +
                 "\n";
    s += "BOUNDS\n";
    for (std::size_t j = 0; j < problem.num_vars; ++j) {
        const auto& b = problem.var_bounds[j];
        if (b.lower == 0.0 && b.upper == kInf) continue;
        if (b.lower == -kInf && b.upper == kInf) {
            s += " FR " + field("BND", 10) + cname(j) + "\n";
            continue;
        }
        if (b.lower == -kInf)
            s += " MI " + field("BND", 10) + cname(j) + "\n";
        else if (b.lower != 0.0)
            s += " LO " + field("BND", 10) + field(cname(j), 10) + num(b.lower) + "\n";
        if (b.upper < kInf) s += " UP " + field("BND", 10) + field(cname(j), 10) + num(b.upper) + "\n";
    }
    s += "ENDATA\n";
    return s;
}

}  // namespace mrdro
