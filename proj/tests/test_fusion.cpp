#include <catch2/catch_amalgamated.hpp>

#include "mrdro/fusion.hpp"
#include "mrdro/rng.hpp"

using namespace mrdro;

namespace {

// Two sources, two realized demand events, one open current event.
EventLog example_log() {
    EventLog log;
    log.dim = 1;
    log.num_sources = 2;
    log.events.push_back({{{11.0}, {8.0}}, Vec{10.0}});
    log.events.push_back({{{14.0}, {14.0}}, Vec{13.0}});
    log.events.push_back({{{6.0}, {9.0}}, std::nullopt});
    return log;
}

EventLog random_log(Rng& rng, std::size_t dim, std::size_t sources, std::size_t events) {
    EventLog log;
    log.dim = dim;
    log.num_sources = sources;
    for (std::size_t i = 0; i < events; ++i) {
        Event e;
        for (std::size_t h = 0; h < sources; ++h) {
            Vec p(dim);
            for (auto& v : p) v = rng.uniform(-5.0, 5.0);
            e.predictions.push_back(std::move(p));
        }
        Vec t(dim);
        for (auto& v : t) v = rng.uniform(-5.0, 5.0);
        e.realization = t;
        log.events.push_back(std::move(e));
    }
    return log;
}

}  // namespace

TEST_CASE("prediction errors of the two-source demand example") {
    const auto errors = compute_errors(example_log());
    REQUIRE(errors.num_sources() == 2);
    REQUIRE(errors.num_events() == 2);
    CHECK(errors.errors[0][0][0] == 1.0);
    CHECK(errors.errors[0][1][0] == 1.0);
    CHECK(errors.errors[1][0][0] == -2.0);
    CHECK(errors.errors[1][1][0] == 1.0);
}

TEST_CASE("errors vanish when predictions equal the truth") {
    EventLog log;
    log.dim = 2;
    log.num_sources = 1;
    log.events.push_back({{{3.0, 4.0}}, Vec{3.0, 4.0}});
    const auto errors = compute_errors(log);
    CHECK(errors.errors[0][0] == Vec{0.0, 0.0});
}

TEST_CASE("single source single event error") {
    EventLog log;
    log.dim = 1;
    log.num_sources = 1;
    log.events.push_back({{{5.0}}, Vec{7.0}});
    CHECK(compute_errors(log).errors[0][0][0] == -2.0);
}

TEST_CASE("compute_errors requires a realized event") {
    EventLog log;
    log.dim = 1;
    log.num_sources = 1;
    log.events.push_back({{{5.0}}, std::nullopt});
    CHECK_THROWS_AS(compute_errors(log), NoRealizedEvents);
}

TEST_CASE("revised predictions of the demand example") {
    const auto errors = compute_errors(example_log());
    const auto points = revise_predictions({{6.0}, {9.0}}, errors);
    REQUIRE(points.size() == 4);
    CHECK(points[0][0] == 5.0);
    CHECK(points[1][0] == 5.0);
    CHECK(points[2][0] == 11.0);
    CHECK(points[3][0] == 8.0);
}

TEST_CASE("zero errors revise to the current prediction") {
    PredictionErrors errors;
    errors.dim = 1;
    errors.errors = {{{0.0}, {0.0}, {0.0}}};
    const auto points = revise_predictions({{10.0}}, errors);
    for (const auto& p : points) CHECK(p[0] == 10.0);
}

TEST_CASE("one source one event revision") {
    PredictionErrors errors;
    errors.dim = 1;
    errors.errors = {{{3.0}}};
    CHECK(revise_predictions({{10.0}}, errors)[0][0] == 7.0);
}

TEST_CASE("revision round-trips to the realization") {
    // Using a historical event's own prediction as the current one must
    // reproduce that event's truth.
    Rng rng(42);
    const auto log = random_log(rng, 3, 4, 6);
    const auto errors = compute_errors(log);
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        std::vector<Vec> current;
        for (std::size_t h = 0; h < log.num_sources; ++h)
            current.push_back(log.events[i].predictions[h]);
        const auto points = revise_predictions(current, errors);
        for (std::size_t h = 0; h < log.num_sources; ++h) {
            const auto& truth = *log.events[i].realization;
            const auto& p = points[h * errors.num_events() + i];
            for (std::size_t m = 0; m < log.dim; ++m)
                CHECK(p[m] == Catch::Approx(truth[m]).margin(1e-12));
        }
    }
}

TEST_CASE("fusion weights follow trust, bit-exactly") {
    const auto errors = compute_errors(example_log());
    const auto points = revise_predictions({{6.0}, {9.0}}, errors);
    const auto set = fuse(points, {0.6, 0.4});
    REQUIRE(set.weights.size() == 4);
    CHECK(set.weights[0] == 0.3);
    CHECK(set.weights[1] == 0.3);
    CHECK(set.weights[2] == 0.2);
    CHECK(set.weights[3] == 0.2);
}

TEST_CASE("single source fusion reduces to the empirical distribution") {
    const auto set = fuse({{1.0}, {2.0}, {3.0}}, {1.0});
    for (double w : set.weights) CHECK(w == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("degenerate trust zeroes out a source") {
    const auto set = fuse({{1.0}, {2.0}, {3.0}, {4.0}, {5.0}, {6.0}}, {1.0, 0.0});
    for (int i = 0; i < 3; ++i) CHECK(set.weights[i] == Catch::Approx(1.0 / 3.0));
    for (int i = 3; i < 6; ++i) CHECK(set.weights[i] == 0.0);
}

TEST_CASE("fuse rejects non-simplex trust") {
    CHECK_THROWS_AS(fuse({{1.0}, {2.0}}, {0.7, 0.4}), TrustNotSimplex);
    CHECK_THROWS_AS(fuse({{1.0}, {2.0}}, {1.2, -0.2}), TrustNotSimplex);
}

TEST_CASE("fusion invariants on random inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t h_count = 2 + static_cast<std::size_t>(rng.uniform01() * 4);
        const std::size_t i_count = 1 + static_cast<std::size_t>(rng.uniform01() * 6);
        Vec trust(h_count);
        double sum = 0.0;
        for (auto& t : trust) {
            t = rng.uniform01();
            sum += t;
        }
        for (auto& t : trust) t /= sum;
        std::vector<Vec> points(h_count * i_count, Vec{0.0});
        const auto set = fuse(points, trust);

        double wsum = 0.0;
        for (double w : set.weights) wsum += w;
        CHECK(std::abs(wsum - 1.0) <= 1e-12);
        for (std::size_t h = 0; h < h_count; ++h) {
            double lo = kInf, hi = -kInf;
            for (std::size_t i = 0; i < i_count; ++i) {
                lo = std::min(lo, set.weights[h * i_count + i]);
                hi = std::max(hi, set.weights[h * i_count + i]);
            }
            CHECK(hi - lo == 0.0);  // group uniformity is exact
        }
    }
}

TEST_CASE("support projection keeps points and reports exits") {
    const auto set = fuse({{5.0}, {5.0}, {11.0}, {8.0}}, {0.6, 0.4});
    const auto support = SupportPolytope::box({0.0}, {30.0});
    const auto rep = project_to_support(set, support);
    CHECK(rep.violations.empty());
    CHECK(rep.set.points == set.points);

    const auto set2 = fuse({{31.0}}, {1.0});
    const auto rep2 = project_to_support(set2, support);
    REQUIRE(rep2.violations.size() == 1);
    CHECK(rep2.violations[0].slack == Catch::Approx(-1.0));
    CHECK(rep2.set.points[0][0] == 31.0);  // KEEP policy
}

TEST_CASE("support emptiness check") {
    const SimplexSolver solver;
    CHECK(SupportPolytope::box({0.0, 0.0}, {1.0, 1.0}).is_nonempty(solver));
    CHECK(SupportPolytope::unbounded(3).is_nonempty(solver));
    SupportPolytope empty;
    empty.C = Mat(2, 1);
    empty.C(0, 0) = 1.0;
    empty.C(1, 0) = -1.0;
    empty.g = {0.0, -1.0};  // xi <= 0 and xi >= 1
    CHECK_FALSE(empty.is_nonempty(solver));
}

TEST_CASE("event log CSV round trip") {
    const auto log = example_log();
    const auto csv = event_log_to_csv(log);
    CHECK(csv.rfind("event,source,kind,dim_0", 0) == 0);
    const auto back = event_log_from_csv(csv);
    REQUIRE(back.events.size() == log.events.size());
    CHECK(back.dim == log.dim);
    CHECK(back.num_sources == log.num_sources);
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        CHECK(back.events[i].predictions == log.events[i].predictions);
        CHECK(back.events[i].realization == log.events[i].realization);
    }
}

TEST_CASE("event log CSV round trip is exact on random data") {
    Rng rng(99);
    const auto log = random_log(rng, 2, 3, 5);
    const auto back = event_log_from_csv(event_log_to_csv(log));
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        CHECK(back.events[i].predictions == log.events[i].predictions);
        CHECK(back.events[i].realization == log.events[i].realization);
    }
}

TEST_CASE("event log CSV rejects malformed input") {
    CHECK_THROWS_AS(event_log_from_csv("bogus,header\n"), ShapeMismatch);
    CHECK_THROWS_AS(event_log_from_csv("event,source,kind,dim_0\n1,1,weird,3\n"), ShapeMismatch);
    // missing prediction for source 2 at event 1
    CHECK_THROWS_AS(event_log_from_csv("event,source,kind,dim_0\n"
                                       "1,1,pred,1\n2,1,pred,1\n2,2,pred,1\n1,0,true,1\n2,0,true,1\n"),
                    ShapeMismatch);
}
