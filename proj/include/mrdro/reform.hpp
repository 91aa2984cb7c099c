#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mrdro/common.hpp"
#include "mrdro/fusion.hpp"
#include "mrdro/lp.hpp"

namespace mrdro {

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedNorm : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleDecision : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnboundedReformulation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One affine piece of the loss: a(x) = A x + alpha (uncertainty coefficients)
// and b(x) = beta . x + beta0 (intercept), both affine in the decision x.
struct AffinePiece {
    Mat A;      // M x K
    Vec alpha;  // M
    Vec beta;   // K
    double beta0 = 0.0;

    Vec a_of(const Vec& x) const {
        Vec a = A.empty() ? Vec(alpha.size(), 0.0) : A.mul(x);
        for (std::size_t m = 0; m < a.size(); ++m) a[m] += alpha[m];
        return a;
    }
    double b_of(const Vec& x) const { return dot(beta, x) + beta0; }
};

// Loss = max over pieces of <a_j(x), xi> + b_j(x).
struct PiecewiseAffineLoss {
    std::size_t uncertainty_dim = 0;  // M
    std::size_t decision_dim = 0;     // K
    std::vector<AffinePiece> pieces;

    void validate() const {
        if (pieces.empty()) throw DimensionMismatch("piecewise loss needs at least one piece");
        for (const auto& p : pieces) {
            if (p.alpha.size() != uncertainty_dim || p.beta.size() != decision_dim)
                throw DimensionMismatch("piece coefficient shapes disagree with declared dims");
            if (!p.A.empty() && (p.A.rows() != uncertainty_dim || p.A.cols() != decision_dim))
                throw DimensionMismatch("piece matrix shape mismatch");
        }
    }

    double evaluate(const Vec& x, const Vec& xi) const {
        double best = -kInf;
        for (const auto& p : pieces) best = std::max(best, dot(p.a_of(x), xi) + p.b_of(x));
        return best;
    }
};

// Additively separable loss: blocks over disjoint slices of the uncertainty
// vector, each with its own piecewise loss and support.
struct SeparableBlock {
    PiecewiseAffineLoss loss;  // over the block's dimension
    SupportPolytope support;   // C_n, g_n over the block's dimension
};

struct SeparableAffineLoss {
    std::size_t decision_dim = 0;
    std::vector<SeparableBlock> blocks;

    std::size_t uncertainty_dim() const {
        std::size_t m = 0;
        for (const auto& b : blocks) m += b.loss.uncertainty_dim;
        return m;
    }

    void validate() const {
        if (blocks.empty()) throw DimensionMismatch("separable loss needs at least one block");
        for (const auto& b : blocks) {
            b.loss.validate();
            if (b.loss.decision_dim != decision_dim)
                throw DimensionMismatch("block decision dimension mismatch");
            if (b.support.dim() != b.loss.uncertainty_dim)
                throw DimensionMismatch("block support dimension mismatch");
        }
    }

    double evaluate(const Vec& x, const Vec& xi) const {
        double total = 0.0;
        std::size_t off = 0;
        for (const auto& b : blocks) {
            Vec slice(xi.begin() + static_cast<std::ptrdiff_t>(off),
                      xi.begin() + static_cast<std::ptrdiff_t>(off + b.loss.uncertainty_dim));
            total += b.loss.evaluate(x, slice);
            off += b.loss.uncertainty_dim;
        }
        return total;
    }
};

// Feasible set X for the decision: linear rows plus per-variable bounds.
struct DecisionSet {
    std::vector<LpConstraint> rows;
    std::vector<VarBound> bounds;  // length K

    void validate(std::size_t k) const {
        if (bounds.size() != k) throw DimensionMismatch("decision bound count mismatch");
        for (const auto& r : rows)
            if (r.coeffs.size() != k) throw DimensionMismatch("decision row length mismatch");
    }

    bool contains(const Vec& x, double tol = 1e-9) const {
        for (std::size_t j = 0; j < bounds.size(); ++j)
            if (x[j] < bounds[j].lower - tol || x[j] > bounds[j].upper + tol) return false;
        for (const auto& r : rows) {
            const double lhs = dot(r.coeffs, x);
            if (r.rel == Relation::LessEq && lhs > r.rhs + tol) return false;
            if (r.rel == Relation::GreaterEq && lhs < r.rhs - tol) return false;
            if (r.rel == Relation::Equal && std::abs(lhs - r.rhs) > tol) return false;
        }
        return true;
    }

    static DecisionSet free(std::size_t k) {
        DecisionSet s;
        s.bounds.assign(k, {-kInf, kInf});
        return s;
    }
};

// A worst-case expectation problem over a Wasserstein ball around the fused
// scenario distribution.  `block_trust` (H x N) supplies per-block objective
// weights for the separable form; a missing matrix broadcasts the scenario
// weights.
struct DroInstance {
    std::variant<PiecewiseAffineLoss, SeparableAffineLoss> loss;
    WeightedScenarioSet scenarios;
    SupportPolytope support;  // joint support; ignored for the separable form
    double radius = 0.0;
    Norm ground_norm = Norm::L1;
    DecisionSet decision_set;
    std::optional<Mat> block_trust;

    bool separable() const { return std::holds_alternative<SeparableAffineLoss>(loss); }
    const PiecewiseAffineLoss& piecewise_loss() const {
        return std::get<PiecewiseAffineLoss>(loss);
    }
    const SeparableAffineLoss& separable_loss() const {
        return std::get<SeparableAffineLoss>(loss);
    }

    std::size_t uncertainty_dim() const {
        return separable() ? separable_loss().uncertainty_dim() : piecewise_loss().uncertainty_dim;
    }
    std::size_t decision_dim() const {
        return separable() ? separable_loss().decision_dim : piecewise_loss().decision_dim;
    }

    void validate() const {
        if (radius < 0.0) throw DimensionMismatch("radius must be nonnegative");
        if (ground_norm == Norm::L2)
            throw UnsupportedNorm("ground norm must be L1 or Linf for the LP reformulation");
        if (separable()) {
            separable_loss().validate();
        } else {
            piecewise_loss().validate();
            if (support.dim() != piecewise_loss().uncertainty_dim)
                throw DimensionMismatch("support dimension disagrees with the loss");
        }
        decision_set.validate(decision_dim());
        if (scenarios.dim() != uncertainty_dim())
            throw DimensionMismatch("scenario dimension disagrees with the loss");
        if (scenarios.points.size() != scenarios.num_sources * scenarios.events_per_source)
            throw DimensionMismatch("scenario count is not H*I");
        if (block_trust) {
            if (!separable()) throw DimensionMismatch("block trust matrix on a non-separable loss");
            if (block_trust->rows() != scenarios.num_sources ||
                block_trust->cols() != separable_loss().blocks.size())
                throw DimensionMismatch("block trust matrix must be H x N");
        }
    }
};

// Empirical (sample-average) objective under the fused distribution.
inline double saa_value(const PiecewiseAffineLoss& loss, const WeightedScenarioSet& scenarios,
                        const Vec& x) {
    loss.validate();
    if (scenarios.dim() != loss.uncertainty_dim) throw DimensionMismatch("scenario dim mismatch");
    double total = 0.0;
    for (std::size_t p = 0; p < scenarios.points.size(); ++p)
        total += scenarios.weights[p] * loss.evaluate(x, scenarios.points[p]);
    return total;
}

inline double saa_value(const SeparableAffineLoss& loss, const WeightedScenarioSet& scenarios,
                        const Vec& x) {
    loss.validate();
    if (scenarios.dim() != loss.uncertainty_dim()) throw DimensionMismatch("scenario dim mismatch");
    double total = 0.0;
    for (std::size_t p = 0; p < scenarios.points.size(); ++p)
        total += scenarios.weights[p] * loss.evaluate(x, scenarios.points[p]);
    return total;
}

inline double saa_value(const DroInstance& instance, const Vec& x) {
    return instance.separable() ? saa_value(instance.separable_loss(), instance.scenarios, x)
                                : saa_value(instance.piecewise_loss(), instance.scenarios, x);
}

// Where each variable group lives inside a built LP.
struct BuiltLp {
    LpProblem problem;
    bool x_is_variable = true;
    std::size_t x_offset = 0;
    std::size_t x_count = 0;
    std::size_t lambda_index = 0;
    std::size_t s_offset = 0;
    std::size_t s_count = 0;
    std::size_t gamma_offset = 0;
    std::size_t gamma_count = 0;
};

namespace detail {

// Shared assembly for the piecewise and separable reformulations.  Every block
// contributes s_{h,i,n} epigraph variables, per-(h,i,j,n) dual multipliers
// over its support rows, and the dual-norm tie to the shared lambda.
struct BlockRef {
    const PiecewiseAffineLoss* loss;
    const SupportPolytope* support;
    std::size_t offset;  // slice start within the joint uncertainty vector
};

inline BuiltLp build_reformulation_lp(const DroInstance& instance,
                                      const std::vector<BlockRef>& blocks,
                                      const std::optional<Vec>& fixed_x) {
    const auto& sc = instance.scenarios;
    const std::size_t h_count = sc.num_sources;
    const std::size_t i_count = sc.events_per_source;
    const std::size_t n_blocks = blocks.size();
    const std::size_t k_dim = instance.decision_dim();

    if (fixed_x) {
        if (fixed_x->size() != k_dim) throw DimensionMismatch("fixed decision has wrong length");
        if (!instance.decision_set.contains(*fixed_x))
            throw InfeasibleDecision("fixed decision violates the feasible set");
    }

    BuiltLp built;
    built.x_is_variable = !fixed_x.has_value();
    LpProblem& lp = built.problem;

    // --- variables ------------------------------------------------------
    if (!fixed_x) {
        built.x_offset = 0;
        built.x_count = k_dim;
        for (std::size_t k = 0; k < k_dim; ++k)
            lp.add_var(0.0, instance.decision_set.bounds[k].lower,
                       instance.decision_set.bounds[k].upper);
    }
    built.lambda_index = lp.add_var(instance.radius, 0.0, kInf);

    built.s_offset = lp.num_vars;
    built.s_count = h_count * i_count * n_blocks;
    // Objective weight of s_{h,i,n}: block trust t_{h,n}/I when given,
    // otherwise the fused per-point weight.
    for (std::size_t h = 0; h < h_count; ++h)
        for (std::size_t i = 0; i < i_count; ++i)
            for (std::size_t n = 0; n < n_blocks; ++n)
                lp.add_var(instance.block_trust
                               ? (*instance.block_trust)(h, n) / static_cast<double>(i_count)
                               : sc.weights[h * i_count + i],
                           -kInf, kInf);

    built.gamma_offset = lp.num_vars;
    std::size_t gamma_cursor = lp.num_vars;
    // gamma_{h,i,j,n} >= 0, one per support row of block n
    std::size_t max_pieces = 0;
    for (const auto& b : blocks) max_pieces = std::max(max_pieces, b.loss->pieces.size());
    std::vector<std::size_t> gamma_base(h_count * i_count * n_blocks * max_pieces, SIZE_MAX);
    auto gamma_slot = [&](std::size_t h, std::size_t i, std::size_t j, std::size_t n) {
        return ((h * i_count + i) * n_blocks + n) * max_pieces + j;
    };
    for (std::size_t h = 0; h < h_count; ++h)
        for (std::size_t i = 0; i < i_count; ++i)
            for (std::size_t n = 0; n < n_blocks; ++n)
                for (std::size_t j = 0; j < blocks[n].loss->pieces.size(); ++j) {
                    gamma_base[gamma_slot(h, i, j, n)] = gamma_cursor;
                    for (std::size_t r = 0; r < blocks[n].support->rows(); ++r)
                        lp.add_var(0.0, 0.0, kInf);
                    gamma_cursor += blocks[n].support->rows();
                }
    built.gamma_count = gamma_cursor - built.gamma_offset;

    // Auxiliary |v| variables for the dual L1 norm (Linf ground norm).
    std::vector<std::size_t> u_base(gamma_base.size(), SIZE_MAX);
    if (instance.ground_norm == Norm::Linf) {
        for (std::size_t h = 0; h < h_count; ++h)
            for (std::size_t i = 0; i < i_count; ++i)
                for (std::size_t n = 0; n < n_blocks; ++n)
                    for (std::size_t j = 0; j < blocks[n].loss->pieces.size(); ++j) {
                        u_base[gamma_slot(h, i, j, n)] = lp.num_vars;
                        for (std::size_t m = 0; m < blocks[n].loss->uncertainty_dim; ++m)
                            lp.add_var(0.0, 0.0, kInf);
                    }
    }

    const std::size_t n_vars = lp.num_vars;
    auto new_row = [&]() { return Vec(n_vars, 0.0); };

    // --- decision feasible set -------------------------------------------
    if (!fixed_x)
        for (const auto& r : instance.decision_set.rows) {
            Vec row = new_row();
            for (std::size_t k = 0; k < k_dim; ++k) row[built.x_offset + k] = r.coeffs[k];
            lp.add_constraint(std::move(row), r.rel, r.rhs);
        }

    // --- epigraph and dual-norm rows per (h, i, j, n) ----------------------
    for (std::size_t h = 0; h < h_count; ++h)
        for (std::size_t i = 0; i < i_count; ++i) {
            const Vec& point = sc.points[h * i_count + i];
            for (std::size_t n = 0; n < n_blocks; ++n) {
                const auto& blk = blocks[n];
                const std::size_t m_dim = blk.loss->uncertainty_dim;
                Vec xi(point.begin() + static_cast<std::ptrdiff_t>(blk.offset),
                       point.begin() + static_cast<std::ptrdiff_t>(blk.offset + m_dim));
                const std::size_t s_index =
                    built.s_offset + (h * i_count + i) * n_blocks + n;

                // support slack g - C xi_hat, fixed data per scenario
                Vec support_slack(blk.support->rows());
                for (std::size_t r = 0; r < blk.support->rows(); ++r)
                    support_slack[r] = blk.support->g[r] - dot(blk.support->C.row(r), xi);

                for (std::size_t j = 0; j < blk.loss->pieces.size(); ++j) {
                    const auto& piece = blk.loss->pieces[j];
                    const std::size_t gbase = gamma_base[gamma_slot(h, i, j, n)];

                    // b_j(x) + <a_j(x), xi> + <gamma, g - C xi> <= s
                    {
                        Vec row = new_row();
                        double rhs = 0.0;
                        if (fixed_x) {
                            rhs -= piece.b_of(*fixed_x) + dot(piece.a_of(*fixed_x), xi);
                        } else {
                            for (std::size_t k = 0; k < k_dim; ++k) {
                                double coef = piece.beta[k];
                                if (!piece.A.empty())
                                    for (std::size_t m = 0; m < m_dim; ++m)
                                        coef += piece.A(m, k) * xi[m];
                                row[built.x_offset + k] = coef;
                            }
                            rhs -= piece.beta0 + dot(piece.alpha, xi);
                        }
                        for (std::size_t r = 0; r < blk.support->rows(); ++r)
                            row[gbase + r] = support_slack[r];
                        row[s_index] = -1.0;
                        lp.add_constraint(std::move(row), Relation::LessEq, rhs);
                    }

                    // || C^T gamma - a_j(x) ||_dual <= lambda
                    // v_m = sum_r C(r,m) gamma_r - a_j(x)_m
                    auto v_row = [&](std::size_t m, double sign) {
                        // sign * v_m - (lambda or u) <= rhs contribution
                        Vec row = new_row();
                        double rhs = 0.0;
                        for (std::size_t r = 0; r < blk.support->rows(); ++r)
                            row[gbase + r] = sign * blk.support->C(r, m);
                        if (fixed_x) {
                            rhs += sign * piece.a_of(*fixed_x)[m];
                        } else {
                            if (!piece.A.empty())
                                for (std::size_t k = 0; k < k_dim; ++k)
                                    row[built.x_offset + k] -= sign * piece.A(m, k);
                            rhs += sign * piece.alpha[m];
                        }
                        return std::make_pair(std::move(row), rhs);
                    };

                    if (instance.ground_norm == Norm::L1) {
                        // dual Linf: -lambda <= v_m <= lambda, 2 rows per dim
                        for (std::size_t m = 0; m < m_dim; ++m) {
                            auto [row_pos, rhs_pos] = v_row(m, +1.0);
                            row_pos[built.lambda_index] = -1.0;
                            lp.add_constraint(std::move(row_pos), Relation::LessEq, rhs_pos);
                            auto [row_neg, rhs_neg] = v_row(m, -1.0);
                            row_neg[built.lambda_index] = -1.0;
                            lp.add_constraint(std::move(row_neg), Relation::LessEq, rhs_neg);
                        }
                    } else {
                        // dual L1: |v_m| <= u_m, sum u <= lambda
                        const std::size_t ubase = u_base[gamma_slot(h, i, j, n)];
                        for (std::size_t m = 0; m < m_dim; ++m) {
                            auto [row_pos, rhs_pos] = v_row(m, +1.0);
                            row_pos[ubase + m] = -1.0;
                            lp.add_constraint(std::move(row_pos), Relation::LessEq, rhs_pos);
                            auto [row_neg, rhs_neg] = v_row(m, -1.0);
                            row_neg[ubase + m] = -1.0;
                            lp.add_constraint(std::move(row_neg), Relation::LessEq, rhs_neg);
                        }
                        Vec row = new_row();
                        for (std::size_t m = 0; m < m_dim; ++m) row[ubase + m] = 1.0;
                        row[built.lambda_index] = -1.0;
                        lp.add_constraint(std::move(row), Relation::LessEq, 0.0);
                    }
                }
            }
        }

    return built;
}

}  // namespace detail

// Exact LP for the piecewise-affine worst-case model: variables x, lambda,
// s_{h,i}, gamma_{h,i,j}.
inline BuiltLp build_piecewise_lp(const DroInstance& instance,
                                  const std::optional<Vec>& fixed_x = std::nullopt) {
    instance.validate();
    if (instance.separable()) throw DimensionMismatch("expected a piecewise loss");
    std::vector<detail::BlockRef> blocks{{&instance.piecewise_loss(), &instance.support, 0}};
    return detail::build_reformulation_lp(instance, blocks, fixed_x);
}

// Exact LP for the separable form: variables x, lambda, s_{h,i,n},
// gamma_{h,i,j,n}, with lambda shared across blocks.
inline BuiltLp build_separable_lp(const DroInstance& instance,
                                  const std::optional<Vec>& fixed_x = std::nullopt) {
    instance.validate();
    if (!instance.separable()) throw DimensionMismatch("expected a separable loss");
    std::vector<detail::BlockRef> blocks;
    std::size_t offset = 0;
    for (const auto& b : instance.separable_loss().blocks) {
        blocks.push_back({&b.loss, &b.support, offset});
        offset += b.loss.uncertainty_dim;
    }
    return detail::build_reformulation_lp(instance, blocks, fixed_x);
}

inline BuiltLp build_reformulation(const DroInstance& instance,
                                   const std::optional<Vec>& fixed_x = std::nullopt) {
    return instance.separable() ? build_separable_lp(instance, fixed_x)
                                : build_piecewise_lp(instance, fixed_x);
}

// Worst-case expectation at a pinned decision: the Theorem-2/3 LP with x
// substituted out.
inline double eval_worst_case_fixed_x(const DroInstance& instance, const Vec& x,
                                      const LpSolver& solver) {
    const auto built = build_reformulation(instance, x);
    const auto sol = solver.solve(built.problem);
    if (sol.status == LpStatus::Unbounded)
        throw UnboundedReformulation(
            "inner worst case is unbounded: a scenario outside the support cannot be "
            "transported inside within the given radius");
    if (sol.status != LpStatus::Optimal)
        throw NumericalBreakdown("reformulation LP unexpectedly infeasible");
    return sol.objective_value;
}

inline double eval_worst_case_fixed_x(const DroInstance& instance, const Vec& x) {
    const SimplexSolver solver;
    return eval_worst_case_fixed_x(instance, x, solver);
}

}  // namespace mrdro
