#pragma once

#include <optional>
#include <vector>

#include "mrdro/common.hpp"
#include "mrdro/lp.hpp"
#include "mrdro/reform.hpp"

namespace mrdro {

// Interval support extracted from a polytope whose rows are all +-unit
// vectors; both ends must be finite in every dimension.
struct BoxSupport {
    Vec lo, hi;
};

inline std::optional<BoxSupport> extract_box(const SupportPolytope& s) {
    const std::size_t m = s.dim();
    BoxSupport box{Vec(m, -kInf), Vec(m, kInf)};
    for (std::size_t r = 0; r < s.rows(); ++r) {
        std::ptrdiff_t dim = -1;
        double coef = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const double v = s.C(r, c);
            if (v == 0.0) continue;
            if (dim >= 0) return std::nullopt;  // row touches two dims
            dim = static_cast<std::ptrdiff_t>(c);
            coef = v;
        }
        if (dim < 0) {
            if (s.g[r] < 0.0) return std::nullopt;  // 0 <= negative: empty
            continue;
        }
        const auto d = static_cast<std::size_t>(dim);
        if (coef > 0.0)
            box.hi[d] = std::min(box.hi[d], s.g[r] / coef);
        else
            box.lo[d] = std::max(box.lo[d], s.g[r] / coef);
    }
    for (std::size_t d = 0; d < m; ++d) {
        if (box.lo[d] == -kInf || box.hi[d] == kInf) return std::nullopt;
        if (box.lo[d] > box.hi[d]) return std::nullopt;
    }
    return box;
}

// ---------------------------------------------------------------------------
// Closed-form inner evaluation for box supports under the L1 ground norm.
//
// With an interval support the dual multipliers of the Theorem-2/3 LPs can be
// minimized out coordinate-wise, leaving for every scenario and piece
//   s = b_j(x) + <a_j(x), xi> + sum_m [ (a_m - lambda)^+ (hi_m - xi_m)
//                                     + (-a_m - lambda)^+ (xi_m - lo_m) ],
// which is convex piecewise-affine in (x, lambda).  The evaluator returns the
// exact objective and one subgradient, which is what the cutting-plane
// solver consumes.
// ---------------------------------------------------------------------------
class WorstCaseEvaluator {
  public:
    explicit WorstCaseEvaluator(const DroInstance& instance) : instance_(&instance) {
        instance.validate();
        if (instance.ground_norm != Norm::L1)
            throw UnsupportedNorm("closed-form evaluation requires the L1 ground norm");
        if (instance.separable()) {
            std::size_t offset = 0;
            for (const auto& b : instance.separable_loss().blocks) {
                auto box = extract_box(b.support);
                if (!box)
                    throw UnsupportedNorm("closed-form evaluation requires box supports");
                blocks_.push_back({&b.loss, *box, offset});
                offset += b.loss.uncertainty_dim;
            }
        } else {
            auto box = extract_box(instance.support);
            if (!box) throw UnsupportedNorm("closed-form evaluation requires box supports");
            blocks_.push_back({&instance.piecewise_loss(), *box, 0});
        }
        const auto& sc = instance.scenarios;
        weights_.resize(sc.points.size() * blocks_.size());
        for (std::size_t h = 0; h < sc.num_sources; ++h)
            for (std::size_t i = 0; i < sc.events_per_source; ++i)
                for (std::size_t n = 0; n < blocks_.size(); ++n)
                    weights_[(h * sc.events_per_source + i) * blocks_.size() + n] =
                        instance.block_trust
                            ? (*instance.block_trust)(h, n) /
                                  static_cast<double>(sc.events_per_source)
                            : sc.weights[h * sc.events_per_source + i];
    }

    static bool applicable(const DroInstance& instance) {
        if (instance.ground_norm != Norm::L1) return false;
        if (instance.separable()) {
            for (const auto& b : instance.separable_loss().blocks)
                if (!extract_box(b.support)) return false;
            return true;
        }
        return extract_box(instance.support).has_value();
    }

    struct Eval {
        double value = 0.0;
        Vec grad_x;
        double grad_lambda = 0.0;
    };

    // G(x, lambda) = lambda * radius + sum of weighted worst-case epigraph
    // values, with one subgradient.
    Eval evaluate(const Vec& x, double lambda) const {
        const auto& sc = instance_->scenarios;
        const std::size_t k_dim = instance_->decision_dim();
        Eval out;
        out.value = lambda * instance_->radius;
        out.grad_lambda = instance_->radius;
        out.grad_x.assign(k_dim, 0.0);

        for (std::size_t p = 0; p < sc.points.size(); ++p) {
            const Vec& point = sc.points[p];
            for (std::size_t n = 0; n < blocks_.size(); ++n) {
                const double w = weights_[p * blocks_.size() + n];
                const auto& blk = blocks_[n];
                const std::size_t m_dim = blk.loss->uncertainty_dim;

                double best = -kInf;
                std::size_t best_j = 0;
                Vec best_a;
                for (std::size_t j = 0; j < blk.loss->pieces.size(); ++j) {
                    const auto& piece = blk.loss->pieces[j];
                    Vec a = piece.a_of(x);
                    double val = piece.b_of(x);
                    for (std::size_t m = 0; m < m_dim; ++m) {
                        const double xi = point[blk.offset + m];
                        val += a[m] * xi;
                        const double up = a[m] - lambda;
                        if (up > 0.0) val += up * (blk.box.hi[m] - xi);
                        const double dn = -a[m] - lambda;
                        if (dn > 0.0) val += dn * (xi - blk.box.lo[m]);
                    }
                    if (val > best) {
                        best = val;
                        best_j = j;
                        best_a = std::move(a);
                    }
                }
                out.value += w * best;
                if (w == 0.0) continue;

                const auto& piece = blk.loss->pieces[best_j];
                for (std::size_t k = 0; k < k_dim; ++k) out.grad_x[k] += w * piece.beta[k];
                for (std::size_t m = 0; m < m_dim; ++m) {
                    const double xi = point[blk.offset + m];
                    // d/d a_m of the scenario value, then chained through A
                    double da = xi;
                    if (best_a[m] - lambda > 0.0) {
                        da += blk.box.hi[m] - xi;
                        out.grad_lambda -= w * (blk.box.hi[m] - xi);
                    }
                    if (-best_a[m] - lambda > 0.0) {
                        da -= xi - blk.box.lo[m];
                        out.grad_lambda -= w * (xi - blk.box.lo[m]);
                    }
                    if (!piece.A.empty())
                        for (std::size_t k = 0; k < k_dim; ++k)
                            out.grad_x[k] += w * da * piece.A(m, k);
                }
            }
        }
        return out;
    }

    // A lambda beyond every reachable ||a_j(x)||_inf never helps; used to cap
    // the cutting-plane master.
    double lambda_upper_bound(const Vec& x_abs_cap) const {
        double bound = 0.0;
        for (const auto& blk : blocks_) {
            for (const auto& piece : blk.loss->pieces) {
                for (std::size_t m = 0; m < blk.loss->uncertainty_dim; ++m) {
                    double mag = std::abs(piece.alpha[m]);
                    if (!piece.A.empty())
                        for (std::size_t k = 0; k < x_abs_cap.size(); ++k)
                            mag += std::abs(piece.A(m, k)) * x_abs_cap[k];
                    bound = std::max(bound, mag);
                }
            }
        }
        return bound;
    }

  private:
    struct Block {
        const PiecewiseAffineLoss* loss;
        BoxSupport box;
        std::size_t offset;
    };

    const DroInstance* instance_;
    std::vector<Block> blocks_;
    std::vector<double> weights_;  // per (scenario point, block)
};

// ---------------------------------------------------------------------------
// Full solve of the worst-case model.
// ---------------------------------------------------------------------------
enum class SolveRoute { Auto, DirectLp, CuttingPlane };

struct DroSolveOptions {
    SolveRoute route = SolveRoute::Auto;
    double gap_tol = 1e-9;  // relative cutting-plane gap
    std::size_t max_cuts = 600;
    const LpSolver* solver = nullptr;  // defaults to the built-in simplex
};

struct DroSolution {
    Vec x;
    double lambda = 0.0;
    double value = 0.0;
    std::size_t iterations = 0;
    SolveRoute route = SolveRoute::DirectLp;
};

namespace detail {

inline std::size_t direct_lp_row_estimate(const DroInstance& instance) {
    const std::size_t hi = instance.scenarios.points.size();
    std::size_t rows = 0;
    if (instance.separable()) {
        for (const auto& b : instance.separable_loss().blocks)
            rows += hi * b.loss.pieces.size() * (1 + 2 * b.loss.uncertainty_dim);
    } else {
        rows = hi * instance.piecewise_loss().pieces.size() *
               (1 + 2 * instance.piecewise_loss().uncertainty_dim);
    }
    return rows;
}

// Per-variable |x| cap over the decision set, via 2K small LPs.
inline Vec decision_abs_caps(const DroInstance& instance, const LpSolver& solver) {
    const std::size_t k_dim = instance.decision_dim();
    Vec caps(k_dim, 0.0);
    for (std::size_t k = 0; k < k_dim; ++k) {
        double worst = 0.0;
        for (double sign : {1.0, -1.0}) {
            LpProblem p;
            for (std::size_t j = 0; j < k_dim; ++j)
                p.add_var(j == k ? sign : 0.0, instance.decision_set.bounds[j].lower,
                          instance.decision_set.bounds[j].upper);
            for (const auto& r : instance.decision_set.rows)
                p.add_constraint(r.coeffs, r.rel, r.rhs);
            const auto sol = solver.solve(p);
            if (sol.status == LpStatus::Unbounded)
                throw UnboundedReformulation(
                    "cutting-plane route needs a bounded decision set");
            if (sol.status == LpStatus::Infeasible)
                throw InfeasibleDecision("decision set is empty");
            worst = std::max(worst, std::abs(sol.values[k]));
        }
        caps[k] = worst;
    }
    return caps;
}

inline DroSolution solve_direct(const DroInstance& instance, const LpSolver& solver) {
    const auto built = build_reformulation(instance);
    const auto sol = solver.solve(built.problem);
    if (sol.status == LpStatus::Infeasible)
        throw InfeasibleDecision("decision set is empty");
    if (sol.status == LpStatus::Unbounded)
        throw UnboundedReformulation(
            "worst-case model unbounded: scenario outside the support with a radius too "
            "small to transport it inside");
    DroSolution out;
    out.route = SolveRoute::DirectLp;
    out.value = sol.objective_value;
    out.iterations = sol.iterations;
    out.x.assign(built.x_count, 0.0);
    for (std::size_t k = 0; k < built.x_count; ++k) out.x[k] = sol.values[built.x_offset + k];
    out.lambda = sol.values[built.lambda_index];
    return out;
}

inline DroSolution solve_cutting_plane(const DroInstance& instance, const LpSolver& solver,
                                       double gap_tol, std::size_t max_cuts) {
    const WorstCaseEvaluator eval(instance);
    const std::size_t k_dim = instance.decision_dim();
    const Vec caps = decision_abs_caps(instance, solver);
    const double lambda_ub = eval.lambda_upper_bound(caps) + 1.0;

    // Master over (x, lambda, theta); cuts accumulate as rows.
    struct Cut {
        Vec gx;
        double glambda, offset;
    };
    std::vector<Cut> cuts;

    // Feasible start: any point of X.
    Vec x(k_dim, 0.0);
    {
        LpProblem p;
        for (std::size_t j = 0; j < k_dim; ++j)
            p.add_var(0.0, instance.decision_set.bounds[j].lower,
                      instance.decision_set.bounds[j].upper);
        for (const auto& r : instance.decision_set.rows) p.add_constraint(r.coeffs, r.rel, r.rhs);
        const auto sol = solver.solve(p);
        if (sol.status != LpStatus::Optimal) throw InfeasibleDecision("decision set is empty");
        x = sol.values;
    }
    double lambda = 0.0;

    DroSolution best;
    best.route = SolveRoute::CuttingPlane;
    best.value = kInf;

    for (std::size_t it = 0; it < max_cuts; ++it) {
        const auto g = eval.evaluate(x, lambda);
        if (g.value < best.value) {
            best.value = g.value;
            best.x = x;
            best.lambda = lambda;
        }
        // cut: theta >= value + gx.(x - x0) + glambda.(lambda - lambda0)
        Cut cut;
        cut.gx = g.grad_x;
        cut.glambda = g.grad_lambda;
        cut.offset = g.value - dot(g.grad_x, x) - g.grad_lambda * lambda;
        cuts.push_back(std::move(cut));

        LpProblem master;
        for (std::size_t j = 0; j < k_dim; ++j)
            master.add_var(0.0, instance.decision_set.bounds[j].lower,
                           instance.decision_set.bounds[j].upper);
        const std::size_t lambda_col = master.add_var(0.0, 0.0, lambda_ub);
        const std::size_t theta_col = master.add_var(1.0, -kInf, kInf);
        for (const auto& r : instance.decision_set.rows) {
            Vec row = r.coeffs;
            row.resize(master.num_vars, 0.0);
            master.add_constraint(std::move(row), r.rel, r.rhs);
        }
        for (const auto& c : cuts) {
            Vec row(master.num_vars, 0.0);
            for (std::size_t j = 0; j < k_dim; ++j) row[j] = c.gx[j];
            row[lambda_col] = c.glambda;
            row[theta_col] = -1.0;
            master.add_constraint(std::move(row), Relation::LessEq, -c.offset);
        }
        const auto sol = solver.solve(master);
        if (sol.status != LpStatus::Optimal)
            throw NumericalBreakdown("cutting-plane master LP not optimal");
        const double lower = sol.objective_value;
        best.iterations = it + 1;
        if (best.value - lower <= gap_tol * (1.0 + std::abs(best.value))) return best;
        x.assign(sol.values.begin(), sol.values.begin() + static_cast<std::ptrdiff_t>(k_dim));
        lambda = sol.values[lambda_col];
    }
    throw NumericalBreakdown("cutting plane did not close the gap within the cut budget");
}

}  // namespace detail

inline DroSolution solve_dro(const DroInstance& instance, const DroSolveOptions& opts = {}) {
    instance.validate();
    static const SimplexSolver default_solver;
    const LpSolver& solver = opts.solver ? *opts.solver : default_solver;

    SolveRoute route = opts.route;
    if (route == SolveRoute::Auto) {
        const bool compact_ok = WorstCaseEvaluator::applicable(instance);
        route = (compact_ok && detail::direct_lp_row_estimate(instance) > 1200)
                    ? SolveRoute::CuttingPlane
                    : SolveRoute::DirectLp;
    }
    if (route == SolveRoute::CuttingPlane)
        return detail::solve_cutting_plane(instance, solver, opts.gap_tol, opts.max_cuts);
    return detail::solve_direct(instance, solver);
}

}  // namespace mrdro
