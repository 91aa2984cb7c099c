#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mrdro/common.hpp"
#include "mrdro/fusion.hpp"

namespace mrdro {

struct NeedTwoSources : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AllWeightsVanished : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class UpdateMethod { MinMax, Exponential, VariableShare };

inline const char* update_method_name(UpdateMethod m) {
    switch (m) {
    case UpdateMethod::MinMax: return "min_max";
    case UpdateMethod::Exponential: return "exponential";
    case UpdateMethod::VariableShare: return "variable_share";
    }
    return "?";
}

inline UpdateMethod update_method_from_name(const std::string& s) {
    if (s == "min_max" || s == "minmax") return UpdateMethod::MinMax;
    if (s == "exponential") return UpdateMethod::Exponential;
    if (s == "variable_share") return UpdateMethod::VariableShare;
    throw ConfigError("trust_method must be min_max|exponential|variable_share, got '" + s + "'");
}

struct UpdateConfig {
    UpdateMethod method = UpdateMethod::Exponential;
    double step = 0.0;   // min-max transfer per event
    double rate = 0.0;   // exponential / variable-share decay rate
    double share = 0.0;  // variable-share pool fraction, in (0, 1]
    Norm error_norm = Norm::L1;

    void validate() const {
        switch (method) {
        case UpdateMethod::MinMax:
            if (!(step > 0.0)) throw ConfigError("min_max update requires trust_step > 0");
            break;
        case UpdateMethod::Exponential:
            if (!(rate > 0.0)) throw ConfigError("exponential update requires trust_rate > 0");
            break;
        case UpdateMethod::VariableShare:
            if (!(rate > 0.0)) throw ConfigError("variable_share update requires trust_rate > 0");
            if (!(share > 0.0 && share <= 1.0))
                throw ConfigError("variable_share update requires trust_share in (0, 1]");
            break;
        }
    }
};

// Per-group trust over sources, with the full per-event history.  history[0]
// is the initial vector, so after I events the history holds I + 1 entries.
struct GroupTrust {
    Vec current;
    std::vector<Vec> history;
};

struct TrustState {
    std::vector<GroupTrust> groups;

    static TrustState initial(const Vec& t0, std::size_t num_groups = 1) {
        check_simplex(t0);
        TrustState s;
        s.groups.assign(num_groups, GroupTrust{t0, {t0}});
        return s;
    }

    void validate() const {
        for (const auto& g : groups) {
            check_simplex(g.current);
            for (const auto& t : g.history) check_simplex(t);
        }
    }
};

// Group structure: which error dimensions each trust group watches.  The
// default is one group spanning every dimension.
struct TrustGroups {
    std::vector<std::vector<std::size_t>> dims;

    static TrustGroups joint(std::size_t dim) {
        TrustGroups g;
        g.dims.emplace_back();
        for (std::size_t d = 0; d < dim; ++d) g.dims[0].push_back(d);
        return g;
    }

    static TrustGroups per_dimension(std::size_t dim) {
        TrustGroups g;
        for (std::size_t d = 0; d < dim; ++d) g.dims.push_back({d});
        return g;
    }

    std::size_t count() const { return dims.size(); }
};

inline double error_norm_over_dims(const Vec& err, const std::vector<std::size_t>& dims,
                                   Norm norm) {
    Vec sub;
    sub.reserve(dims.size());
    for (std::size_t d : dims) sub.push_back(err[d]);
    return vector_norm(sub, norm);
}

// Trust moves from the worst predictor to the best one, a fixed step at a
// time.  Ties go to the lowest source index; when the same source is both
// best and worst the vector is left alone.  The transferred mass is clipped
// so the simplex is never violated.
inline Vec update_min_max(const Vec& trust, const Vec& error_norms, double step) {
    if (trust.size() < 2) throw NeedTwoSources("min_max update needs at least two sources");
    if (error_norms.size() != trust.size()) throw ShapeMismatch("error norm count mismatch");
    check_simplex(trust);

    std::size_t best = 0, worst = 0;
    for (std::size_t h = 1; h < error_norms.size(); ++h) {
        if (error_norms[h] < error_norms[best]) best = h;
        if (error_norms[h] > error_norms[worst]) worst = h;
    }
    if (best == worst) return trust;

    Vec out = trust;
    const double mass = std::min({step, out[worst], 1.0 - out[best]});
    out[best] += mass;
    out[worst] -= mass;
    return out;
}

// Multiplicative decay by observed error, then renormalization.  Runs in log
// space so long streaks of large errors cannot underflow the weights.
inline Vec update_exponential(const Vec& trust, const Vec& error_norms, double rate) {
    if (error_norms.size() != trust.size()) throw ShapeMismatch("error norm count mismatch");
    if (!(rate > 0.0)) throw ConfigError("exponential update requires rate > 0");
    check_simplex(trust);

    const std::size_t h_count = trust.size();
    Vec logw(h_count);
    double max_log = -kInf;
    for (std::size_t h = 0; h < h_count; ++h) {
        logw[h] = trust[h] > 0.0 ? std::log(trust[h]) - rate * error_norms[h] : -kInf;
        max_log = std::max(max_log, logw[h]);
    }
    if (max_log == -kInf) throw AllWeightsVanished("every trust weight is zero");

    Vec out(h_count);
    double sum = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
        out[h] = logw[h] == -kInf ? 0.0 : std::exp(logw[h] - max_log);
        sum += out[h];
    }
    for (double& v : out) v /= sum;
    return out;
}

// Variable-share update: exponential decay followed by pooled redistribution.
// A fraction 1 - (1-share)^{error} of each decayed weight enters a pool that
// the other sources split evenly; the whole vector is then renormalized.
inline Vec update_variable_share(const Vec& trust, const Vec& error_norms, double rate,
                                 double share) {
    if (trust.size() < 2) throw NeedTwoSources("variable_share update needs at least two sources");
    if (error_norms.size() != trust.size()) throw ShapeMismatch("error norm count mismatch");
    if (!(share > 0.0 && share <= 1.0)) throw ConfigError("share must lie in (0, 1]");
    check_simplex(trust);

    const std::size_t h_count = trust.size();
    // Decayed weights, computed as in the exponential update; the pool
    // arithmetic is linear in them, so normalizing first is harmless and
    // keeps everything in a safe floating range.
    Vec decayed = update_exponential(trust, error_norms, rate);

    Vec kept(h_count), pooled(h_count);
    double pool = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
        const double keep_frac = std::pow(1.0 - share, error_norms[h]);
        kept[h] = keep_frac * decayed[h];
        pooled[h] = decayed[h] - kept[h];
        pool += pooled[h];
    }
    Vec out(h_count);
    double sum = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
        out[h] = kept[h] + (pool - pooled[h]) / static_cast<double>(h_count - 1);
        sum += out[h];
    }
    if (!(sum > 0.0)) throw AllWeightsVanished("variable_share weights vanished");
    for (double& v : out) v /= sum;
    return out;
}

inline Vec apply_update(const UpdateConfig& cfg, const Vec& trust, const Vec& error_norms) {
    cfg.validate();
    switch (cfg.method) {
    case UpdateMethod::MinMax: return update_min_max(trust, error_norms, cfg.step);
    case UpdateMethod::Exponential: return update_exponential(trust, error_norms, cfg.rate);
    case UpdateMethod::VariableShare:
        return update_variable_share(trust, error_norms, cfg.rate, cfg.share);
    }
    throw ConfigError("unknown update method");
}

// Applies the configured update once per realized event, in order.  Every
// group sees the same events but measures errors over its own dimensions.
inline TrustState run_trust_sequence(const EventLog& log, const UpdateConfig& cfg, const Vec& t0,
                                     const TrustGroups& groups) {
    cfg.validate();
    log.validate();
    TrustState state = TrustState::initial(t0, groups.count());
    const auto errors = log.num_realized() > 0 ? compute_errors(log) : PredictionErrors{};
    for (std::size_t i = 0; i < errors.num_events(); ++i) {
        for (std::size_t g = 0; g < groups.count(); ++g) {
            Vec norms(log.num_sources);
            for (std::size_t h = 0; h < log.num_sources; ++h)
                norms[h] = error_norm_over_dims(errors.errors[h][i], groups.dims[g], cfg.error_norm);
            auto& grp = state.groups[g];
            grp.current = apply_update(cfg, grp.current, norms);
            grp.history.push_back(grp.current);
        }
    }
    return state;
}

inline TrustState run_trust_sequence(const EventLog& log, const UpdateConfig& cfg, const Vec& t0) {
    return run_trust_sequence(log, cfg, t0, TrustGroups::joint(log.dim));
}

// ---------------------------------------------------------------------------
// Probability dominance between two sources' error norms.
// ---------------------------------------------------------------------------
struct DominanceReport {
    std::size_t source_y = 0;
    std::size_t source_z = 0;
    double estimate = 0.0;  // empirical P[Y < Z]
    bool fsd = false;       // first-degree stochastic dominance of Y over Z
    std::size_t samples = 0;
};

// F_Y(a) >= F_Z(a) everywhere with strict inequality somewhere, checked at
// the pooled sample points.
inline bool first_order_dominates(Vec y, Vec z) {
    std::sort(y.begin(), y.end());
    std::sort(z.begin(), z.end());
    Vec pool = y;
    pool.insert(pool.end(), z.begin(), z.end());
    std::sort(pool.begin(), pool.end());
    auto cdf = [](const Vec& s, double a) {
        return static_cast<double>(std::upper_bound(s.begin(), s.end(), a) - s.begin()) /
               static_cast<double>(s.size());
    };
    bool strict = false;
    for (double a : pool) {
        const double fy = cdf(y, a), fz = cdf(z, a);
        if (fy < fz - 1e-12) return false;
        if (fy > fz + 1e-12) strict = true;
    }
    return strict;
}

inline DominanceReport dominance_from_norms(const Vec& y, const Vec& z, std::size_t source_y = 0,
                                            std::size_t source_z = 1) {
    if (y.size() != z.size()) throw ShapeMismatch("paired error norm sample size mismatch");
    DominanceReport rep;
    rep.source_y = source_y;
    rep.source_z = source_z;
    rep.samples = y.size();
    std::size_t wins = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < z[i]) ++wins;
    rep.estimate = y.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(y.size());
    rep.fsd = first_order_dominates(y, z);
    return rep;
}

inline DominanceReport estimate_dominance(const PredictionErrors& errors, std::size_t source_y,
                                          std::size_t source_z, Norm norm) {
    if (source_y >= errors.num_sources() || source_z >= errors.num_sources())
        throw ShapeMismatch("dominance pair out of range");
    if (errors.num_events() < 30)
        throw InsufficientSamples("dominance estimation needs at least 30 realized events, got " +
                                  std::to_string(errors.num_events()));
    Vec y, z;
    y.reserve(errors.num_events());
    z.reserve(errors.num_events());
    for (std::size_t i = 0; i < errors.num_events(); ++i) {
        y.push_back(vector_norm(errors.errors[source_y][i], norm));
        z.push_back(vector_norm(errors.errors[source_z][i], norm));
    }
    return dominance_from_norms(y, z, source_y, source_z);
}

// Trust trajectory CSV: `event,group,source,trust`, events 0..I with event 0
// holding the initial vector.
inline std::string trust_history_to_csv(const TrustState& state) {
    std::string s = "event,group,source,trust\n";
    for (std::size_t g = 0; g < state.groups.size(); ++g) {
        const auto& hist = state.groups[g].history;
        for (std::size_t e = 0; e < hist.size(); ++e)
            for (std::size_t h = 0; h < hist[e].size(); ++h)
                s += std::to_string(e) + "," + std::to_string(g + 1) + "," + std::to_string(h + 1) +
                     "," + format_double(hist[e][h]) + "\n";
    }
    return s;
}

}  // namespace mrdro
