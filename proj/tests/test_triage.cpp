#include <catch_amalgamated.hpp>

#include <random>

#include "echotriage/error.hpp"
#include "echotriage/triage.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace echotriage;

namespace {

int severity(Category c) {
    switch (c) {
        case Category::ABNORMAL: return 2;
        case Category::GREY: return 1;
        default: return 0;
    }
}

std::vector<CohortEntry> cohort_of(std::initializer_list<std::pair<double, bool>> rows) {
    std::vector<CohortEntry> out;
    int i = 0;
    for (const auto& [lvef, normal] : rows) out.push_back({"s" + std::to_string(i++), lvef, normal});
    return out;
}

}  // namespace

TEST_CASE("triage over the integer grid", "[triage]") {
    for (int v = 0; v <= 100; ++v) {
        const auto d = triage(v);
        const auto want = v < 40 ? Category::ABNORMAL : v > 60 ? Category::NORMAL : Category::GREY;
        REQUIRE(d.category == want);
        REQUIRE(d.lvef == v);
        REQUIRE(d.thresholds == ThresholdConfig{});
    }
    CHECK(triage(39.999).category == Category::ABNORMAL);
    CHECK(triage(40.0).category == Category::GREY);
    CHECK(triage(60.0).category == Category::GREY);
    CHECK(triage(60.001).category == Category::NORMAL);
    CHECK_THROWS_AS(triage(-0.1), Error);
    CHECK_THROWS_AS(triage(100.1), Error);
    CHECK_THROWS_AS(triage(std::nan("")), Error);
    CHECK_THROWS_AS(triage(50, {70, 60}), Error);
    CHECK(triage(50, {50, 50}).category == Category::GREY);
}

TEST_CASE("triage is monotone in LVEF", "[triage][property]") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 5000; ++i) {
        double a = u(rng), b = u(rng);
        double lo = u(rng) * 0.99 + 0.5, hi = u(rng) * 0.99 + 0.5;
        if (a > b) std::swap(a, b);
        if (lo > hi) std::swap(lo, hi);
        const ThresholdConfig cfg{lo, hi};
        REQUIRE(severity(triage(a, cfg).category) >= severity(triage(b, cfg).category));
    }
}

TEST_CASE("category names", "[triage]") {
    for (const auto c : {Category::ABNORMAL, Category::GREY, Category::NORMAL, Category::UNDETERMINED}) {
        CHECK(category_from_string(to_string(c)) == c);
    }
    CHECK_FALSE(category_from_string("normal"));
}

TEST_CASE("metrics from predictions", "[triage][metrics]") {
    const std::vector<Prediction> p = {{true, true}, {true, true}, {true, false}, {false, true}, {false, false}};
    const auto m = metrics(p);
    CHECK(m.precision == Catch::Approx(2.0 / 3.0));
    CHECK(m.sensitivity == Catch::Approx(2.0 / 3.0));
    CHECK(m.accuracy == Catch::Approx(0.6));

    const std::vector<Prediction> none = {{false, true}, {false, false}};
    const auto n = metrics(none);
    CHECK_FALSE(n.precision.has_value());
    CHECK(n.sensitivity == 0.0);
    CHECK_THROWS_AS(metrics({}), Error);
}

TEST_CASE("calibration examples", "[triage][calibrate]") {
    const auto cohort = cohort_of({{65, true}, {62, true}, {55, true}, {61, false}, {45, false}});
    const auto r = calibrate_cutoff(cohort, 0.8);
    CHECK(r.feasible);
    CHECK(r.chosen_cutoff == 61.0);
    CHECK(r.achieved_precision == 1.0);
    CHECK(r.achieved_sensitivity == Catch::Approx(2.0 / 3.0));
    CHECK(r == calibrate_cutoff_serial(cohort, 0.8));

    const auto whatif = evaluate_cutoff(cohort, 61);
    CHECK(whatif.precision == 1.0);
    CHECK(whatif.sensitivity == Catch::Approx(2.0 / 3.0));

    const auto separable = cohort_of({{70, true}, {66, true}, {50, false}, {30, false}});
    const auto s = calibrate_cutoff(separable, 0.8);
    CHECK(s.achieved_precision == 1.0);
    CHECK(s.achieved_sensitivity == 1.0);
    CHECK(s.chosen_cutoff == 50.0);

    const auto inverted = cohort_of({{30, true}, {35, true}, {60, false}, {70, false}});
    const auto inf = calibrate_cutoff(inverted, 0.8);
    CHECK_FALSE(inf.feasible);
    CHECK(inf.chosen_cutoff == 70.0);
    CHECK(inf.counts.tp + inf.counts.fp == 0);
    CHECK_FALSE(inf.achieved_precision.has_value());

    CHECK_THROWS_AS(calibrate_cutoff(cohort_of({{60, true}, {70, true}}), 0.8), Error);
    CHECK_THROWS_AS(calibrate_cutoff({}, 0.8), Error);
    CHECK_THROWS_AS(calibrate_cutoff(cohort, 1.5), Error);
}

TEST_CASE("calibration equals the exhaustive sweep", "[triage][calibrate][property]") {
    std::mt19937_64 rng(20);
    for (int i = 0; i < 500; ++i) {
        const auto cohort = oracle::random_cohort(rng);
        const double floor = oracle::random_floor(rng);
        const auto want = oracle::brute_force_calibration(cohort, floor);
        const auto got = calibrate_cutoff(cohort, floor);
        REQUIRE(got == want);
        REQUIRE(calibrate_cutoff_serial(cohort, floor) == want);
        if (got.feasible) REQUIRE(*got.achieved_precision >= floor);
        const auto m = evaluate_cutoff(cohort, got.chosen_cutoff);
        REQUIRE(m.counts == got.counts);
    }
}

TEST_CASE("monotone rescoring keeps the chosen operating point", "[triage][calibrate][property]") {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 200; ++i) {
        const auto cohort = oracle::random_cohort(rng);
        auto warped = cohort;
        for (auto& e : warped) e.estimated_lvef = std::exp(e.estimated_lvef / 25.0) + 3.0 * e.estimated_lvef;
        const double floor = oracle::random_floor(rng);
        const auto a = calibrate_cutoff(cohort, floor);
        const auto b = calibrate_cutoff(warped, floor);
        REQUIRE(a.counts == b.counts);
        for (std::size_t k = 0; k < cohort.size(); ++k) {
            REQUIRE((cohort[k].estimated_lvef > a.chosen_cutoff) == (warped[k].estimated_lvef > b.chosen_cutoff));
        }
    }
}

TEST_CASE("workload savings", "[triage][workload]") {
    CHECK(workload_savings({}) == 180.0);
    CHECK(workload_savings({10000, 0.4, 0.0, 9}) == 0.0);
    CHECK(workload_savings({10000, 0.4, 1.0, 10}) == Catch::Approx(666.67).margin(0.005));

    // Linear in each argument separately.
    const WorkloadParams base;
    auto twice = base;
    twice.studies_per_year *= 2;
    CHECK(workload_savings(twice) == Catch::Approx(2 * workload_savings(base)));
    twice = base;
    twice.minutes_per_study *= 2;
    CHECK(workload_savings(twice) == Catch::Approx(2 * workload_savings(base)));

    CHECK_THROWS_AS(workload_savings({-1, 0.4, 0.3, 9}), Error);
    CHECK_THROWS_AS(workload_savings({100, 1.4, 0.3, 9}), Error);
}

TEST_CASE("cohort CSV", "[triage][csv]") {
    const auto c = parse_cohort_csv("study_id,estimated_lvef,truly_normal\r\na,65.5,1\nb,40,false\n\n");
    REQUIRE(c.size() == 2);
    CHECK(c[0].study_id == "a");
    CHECK(c[0].estimated_lvef == 65.5);
    CHECK(c[0].truly_normal);
    CHECK_FALSE(c[1].truly_normal);
    CHECK(parse_cohort_csv(write_cohort_csv(c)).size() == 2);

    CHECK_THROWS_AS(parse_cohort_csv("id,lvef,normal\na,1,1\n"), Error);
    CHECK_THROWS_AS(parse_cohort_csv("study_id,estimated_lvef,truly_normal\na,x,1\n"), Error);
    CHECK_THROWS_AS(parse_cohort_csv("study_id,estimated_lvef,truly_normal\na,50,yes\n"), Error);
    CHECK_THROWS_AS(parse_cohort_csv("study_id,estimated_lvef,truly_normal\na,50\n"), Error);
    CHECK_THROWS_AS(parse_cohort_csv(""), Error);

    const auto fixture = read_cohort_csv(et_test::fixture("cohort_example.csv"));
    CHECK(calibrate_cutoff(fixture, 0.8).chosen_cutoff == 61.0);
}
