#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrdro/common.hpp"
#include "mrdro/io.hpp"
#include "mrdro/lp.hpp"

namespace mrdro {

struct NoRealizedEvents : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrustNotSimplex : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One event: a prediction from every source, and the realization once the
// event has resolved.  The trailing event of a log may be unresolved (the
// current decision point).
struct Event {
    std::vector<Vec> predictions;  // H vectors of length M
    std::optional<Vec> realization;
};

struct EventLog {
    std::size_t dim = 0;          // M
    std::size_t num_sources = 0;  // H
    std::vector<Event> events;

    std::size_t num_realized() const {
        std::size_t n = 0;
        for (const auto& e : events)
            if (e.realization) ++n;
        return n;
    }

    void validate() const {
        bool seen_open = false;
        for (const auto& e : events) {
            if (e.predictions.size() != num_sources)
                throw ShapeMismatch("event with " + std::to_string(e.predictions.size()) +
                                    " predictions, expected " + std::to_string(num_sources));
            for (const auto& p : e.predictions)
                if (p.size() != dim) throw ShapeMismatch("prediction dimension mismatch");
            if (e.realization && e.realization->size() != dim)
                throw ShapeMismatch("realization dimension mismatch");
            if (seen_open && e.realization)
                throw ShapeMismatch("realized event after the unresolved current event");
            if (!e.realization) seen_open = true;
        }
    }
};

// errors[h][i] = prediction of source h at realized event i minus the truth
struct PredictionErrors {
    std::size_t dim = 0;
    std::vector<std::vector<Vec>> errors;  // H x I x M

    std::size_t num_sources() const { return errors.size(); }
    std::size_t num_events() const { return errors.empty() ? 0 : errors[0].size(); }
};

inline PredictionErrors compute_errors(const EventLog& log) {
    log.validate();
    if (log.num_realized() == 0) throw NoRealizedEvents("no realized events in the log");
    PredictionErrors out;
    out.dim = log.dim;
    out.errors.assign(log.num_sources, {});
    for (const auto& e : log.events) {
        if (!e.realization) continue;
        for (std::size_t h = 0; h < log.num_sources; ++h) {
            Vec d(log.dim);
            for (std::size_t m = 0; m < log.dim; ++m)
                d[m] = e.predictions[h][m] - (*e.realization)[m];
            out.errors[h].push_back(std::move(d));
        }
    }
    return out;
}

// Revised predictions: the current forecast of each source corrected by one of
// that source's historical errors.  Point order is fixed (source-major, event
// index inner) so downstream problem construction is deterministic.
inline std::vector<Vec> revise_predictions(const std::vector<Vec>& current_predictions,
                                           const PredictionErrors& errors) {
    if (errors.num_events() == 0) throw NoRealizedEvents("no errors to revise with");
    if (current_predictions.size() != errors.num_sources())
        throw ShapeMismatch("current predictions do not cover every source");
    std::vector<Vec> points;
    points.reserve(errors.num_sources() * errors.num_events());
    for (std::size_t h = 0; h < errors.num_sources(); ++h) {
        if (current_predictions[h].size() != errors.dim)
            throw ShapeMismatch("current prediction dimension mismatch");
        for (const auto& err : errors.errors[h]) {
            Vec p(errors.dim);
            for (std::size_t m = 0; m < errors.dim; ++m)
                p[m] = current_predictions[h][m] - err[m];
            points.push_back(std::move(p));
        }
    }
    return points;
}

// Discrete distribution over revised predictions with trust-derived weights:
// every point of source h carries weight t_h / I.
struct WeightedScenarioSet {
    std::size_t num_sources = 0;       // H
    std::size_t events_per_source = 0;  // I
    std::vector<Vec> points;            // H*I points, source-major
    Vec weights;

    std::size_t dim() const { return points.empty() ? 0 : points[0].size(); }
};

inline void check_simplex(const Vec& trust, double tol = 1e-9) {
    double sum = 0.0;
    for (double t : trust) {
        if (t < -tol || t > 1.0 + tol)
            throw TrustNotSimplex("trust component " + std::to_string(t) + " outside [0, 1]");
        sum += t;
    }
    if (std::abs(sum - 1.0) > tol)
        throw TrustNotSimplex("trust sums to " + std::to_string(sum));
}

inline WeightedScenarioSet fuse(const std::vector<Vec>& revised_points, const Vec& trust) {
    check_simplex(trust);
    const std::size_t h_count = trust.size();
    if (h_count == 0 || revised_points.size() % h_count != 0)
        throw ShapeMismatch("revised point count is not a multiple of the source count");
    WeightedScenarioSet set;
    set.num_sources = h_count;
    set.events_per_source = revised_points.size() / h_count;
    set.points = revised_points;
    set.weights.reserve(revised_points.size());
    for (std::size_t h = 0; h < h_count; ++h) {
        const double w = trust[h] / static_cast<double>(set.events_per_source);
        for (std::size_t i = 0; i < set.events_per_source; ++i) set.weights.push_back(w);
    }
    return set;
}

// Polyhedral support {xi : C xi <= g}.  Blocks, when present, describe a
// separable structure: block n covers dims [offset, offset + dim) with its own
// rows.
struct SupportBlock {
    std::size_t offset = 0;
    std::size_t dim = 0;
    Mat C;
    Vec g;
};

struct SupportPolytope {
    Mat C;  // rows x M; zero rows mean unbounded support
    Vec g;
    std::vector<SupportBlock> blocks;

    static SupportPolytope box(const Vec& lo, const Vec& hi) {
        const std::size_t m = lo.size();
        SupportPolytope s;
        s.C = Mat(2 * m, m);
        s.g.assign(2 * m, 0.0);
        for (std::size_t d = 0; d < m; ++d) {
            s.C(2 * d, d) = 1.0;
            s.g[2 * d] = hi[d];
            s.C(2 * d + 1, d) = -1.0;
            s.g[2 * d + 1] = -lo[d];
        }
        return s;
    }

    static SupportPolytope unbounded(std::size_t m) {
        SupportPolytope s;
        s.C = Mat(0, m);
        return s;
    }

    std::size_t dim() const { return C.cols(); }
    std::size_t rows() const { return C.rows(); }

    bool is_nonempty(const LpSolver& solver) const {
        if (rows() == 0) return true;
        LpProblem p;
        for (std::size_t j = 0; j < dim(); ++j) p.add_var(0.0, -kInf, kInf);
        for (std::size_t r = 0; r < rows(); ++r)
            p.add_constraint(C.row(r), Relation::LessEq, g[r]);
        return solver.solve(p).status == LpStatus::Optimal;
    }
};

// Scenario points may legitimately leave the support; the worst-case model
// stays valid because its inner supremum ranges over the support itself.  The
// report exists so callers can see when that happens.
struct SupportViolation {
    std::size_t point_index = 0;
    std::size_t row = 0;
    double slack = 0.0;  // g_r - <C_r, point>, negative when violated
};

struct ProjectionReport {
    WeightedScenarioSet set;  // unchanged points (KEEP policy)
    std::vector<SupportViolation> violations;
};

inline ProjectionReport project_to_support(const WeightedScenarioSet& set,
                                           const SupportPolytope& support) {
    ProjectionReport rep;
    rep.set = set;
    for (std::size_t p = 0; p < set.points.size(); ++p) {
        if (set.points[p].size() != support.dim())
            throw ShapeMismatch("scenario dimension does not match support");
        for (std::size_t r = 0; r < support.rows(); ++r) {
            const double slack = support.g[r] - dot(support.C.row(r), set.points[p]);
            if (slack < 0.0) rep.violations.push_back({p, r, slack});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// EventLog CSV: header `event,source,kind,dim_0..dim_{M-1}`; one row per
// (event, source) prediction (kind=pred) and one per realization (kind=true,
// source=0).  Events are 1-based.
// ---------------------------------------------------------------------------
inline std::string event_log_to_csv(const EventLog& log) {
    log.validate();
    std::string s = "event,source,kind";
    for (std::size_t m = 0; m < log.dim; ++m) s += ",dim_" + std::to_string(m);
    s += "\n";
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const auto& e = log.events[i];
        for (std::size_t h = 0; h < log.num_sources; ++h) {
            s += std::to_string(i + 1) + "," + std::to_string(h + 1) + ",pred";
            for (double v : e.predictions[h]) s += "," + format_double(v);
            s += "\n";
        }
        if (e.realization) {
            s += std::to_string(i + 1) + ",0,true";
            for (double v : *e.realization) s += "," + format_double(v);
            s += "\n";
        }
    }
    return s;
}

inline EventLog event_log_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw ShapeMismatch("empty event log CSV");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "event" || header[1] != "source" ||
        header[2] != "kind")
        throw ShapeMismatch("bad event log header: " + line);
    const std::size_t dim = header.size() - 3;

    struct Row {
        std::size_t event, source;
        bool is_true;
        Vec values;
    };
    std::vector<Row> rows;
    std::size_t max_event = 0, max_source = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw ShapeMismatch("line " + std::to_string(line_no) + ": expected " +
                                std::to_string(header.size()) + " fields");
        Row r;
        r.event = static_cast<std::size_t>(std::stoul(f[0]));
        r.source = static_cast<std::size_t>(std::stoul(f[1]));
        if (f[2] == "pred")
            r.is_true = false;
        else if (f[2] == "true")
            r.is_true = true;
        else
            throw ShapeMismatch("line " + std::to_string(line_no) + ": kind must be pred|true");
        r.values.resize(dim);
        for (std::size_t m = 0; m < dim; ++m) r.values[m] = std::stod(f[3 + m]);
        max_event = std::max(max_event, r.event);
        if (!r.is_true) max_source = std::max(max_source, r.source);
        rows.push_back(std::move(r));
    }

    EventLog log;
    log.dim = dim;
    log.num_sources = max_source;
    log.events.resize(max_event);
    for (auto& e : log.events) e.predictions.assign(max_source, Vec(dim, 0.0));
    std::vector<std::vector<bool>> seen(max_event, std::vector<bool>(max_source, false));
    for (const auto& r : rows) {
        if (r.event == 0 || r.event > max_event) throw ShapeMismatch("event index out of range");
        auto& e = log.events[r.event - 1];
        if (r.is_true) {
            e.realization = r.values;
        } else {
            if (r.source == 0 || r.source > max_source)
                throw ShapeMismatch("source index out of range");
            e.predictions[r.source - 1] = r.values;
            seen[r.event - 1][r.source - 1] = true;
        }
    }
    for (std::size_t i = 0; i < max_event; ++i)
        for (std::size_t h = 0; h < max_source; ++h)
            if (!seen[i][h])
                throw ShapeMismatch("event " + std::to_string(i + 1) + " missing prediction from source " +
                                    std::to_string(h + 1));
    log.validate();
    return log;
}

}  // namespace mrdro
