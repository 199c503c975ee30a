// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "redactlab/report.hpp"
#include "redactlab/stats.hpp"
#include "support/fixtures.hpp"
#include "support/table3.hpp"

using namespace redactlab;
using namespace redactlab::stats;
namespace ts = redactlab::testsupport;

// Reference values computed once with 40-digit arithmetic and frozen here.
TEST_CASE("regularized incomplete beta against high-precision references", "[stats]") {
    struct Case { double a, b, x, expected; };
    const Case cases[] = {
        {0.5, 0.5, 0.25, 0.33333333333333333333},
        {2, 3, 0.5, 0.6875},
        {10, 0.5, 0.9, 0.15164090963470996856},
        {0.5, 10, 0.1, 0.84835909036529009135},
        {5, 5, 0.5, 0.5},
        {30.5, 0.5, 0.99, 0.4355153068060025297},
        {100, 100, 0.45, 0.078387932712220530466},
        {1, 1, 0.8, 0.8},
        {3.5, 2.5, 0.7, 0.7032470107043335201},
        {250, 0.5, 0.999, 0.47960989887171570175},
    };
    for (const auto& c : cases) {
        CAPTURE(c.a, c.b, c.x);
        CHECK(detail::regularized_incomplete_beta(c.a, c.b, c.x) ==
              Catch::Approx(c.expected).margin(1e-10));
    }
    CHECK(detail::regularized_incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(detail::regularized_incomplete_beta(2, 3, 1.0) == 1.0);
    CHECK(std::isnan(detail::regularized_incomplete_beta(-1, 3, 0.5)));
}

TEST_CASE("t and F tail probabilities against high-precision references", "[stats]") {
    struct T { double t, df, p; };
    const T tcases[] = {
        {2.0, 10, 0.073388034770740365618},
        {0.5, 3, 0.65144796484815099444},
        {1.96, 1000, 0.050273184955748718435},
        {3.2, 4.7, 0.026183869756802792808},
        {0.0, 7, 1.0},
        {5.5, 2.3, 0.022914704523894937672},
        {2.8, 227.6, 0.0055492987358121649989},
    };
    for (const auto& c : tcases) {
        CAPTURE(c.t, c.df);
        CHECK(detail::t_two_sided_p(c.t, c.df) == Catch::Approx(c.p).margin(1e-10));
        CHECK(detail::t_two_sided_p(-c.t, c.df) == Catch::Approx(c.p).margin(1e-10));
    }
    struct F { double w, d1, d2, p; };
    const F fcases[] = {
        {1.0, 1, 10, 0.34089313230205987267},
        {3.5, 1, 100, 0.064292733024442026564},
        {0.2, 1, 5, 0.67342843553755380764},
        {7.7, 1, 227, 0.0059821516066943416195},
        {2.4, 3, 40, 0.082051424745239206267},
    };
    for (const auto& c : fcases) {
        CAPTURE(c.w, c.d1, c.d2);
        CHECK(detail::f_tail_p(c.w, c.d1, c.d2) == Catch::Approx(c.p).margin(1e-10));
    }
}

TEST_CASE("mean_se basics", "[stats]") {
    auto c = mean_se(std::vector<int>{8, 8, 8});
    CHECK(c.mean == 8.0);
    CHECK(c.se == 0.0);

    auto r = mean_se(std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(r.mean == Catch::Approx(5.0).epsilon(0));
    CHECK(r.se == Catch::Approx(0.9129).margin(5e-5));  // sd = sqrt(60/8)

    auto cp = ts::reference_rating_groups()[0];
    auto m = mean_se(cp.values);
    CHECK(m.mean == Catch::Approx(8.177).margin(5e-4));

    auto single = mean_se(std::vector<int>{4});
    CHECK(single.se == 0.0);
    CHECK(single.degenerate);

    CHECK_THROWS_AS(mean_se(std::vector<double>{}), StatsError);
}

TEST_CASE("mean_diff_test conventions and frozen references", "[stats]") {
    std::vector<double> sample = {7, 8, 8, 9, 7};
    CHECK(mean_diff_test(sample, sample, MeanTestVariant::welch) == 1.0);
    CHECK(mean_diff_test(sample, sample, MeanTestVariant::pooled) == 1.0);

    // zero variance conventions
    std::vector<double> flat8(5, 8.0), flat8b(7, 8.0), flat9(5, 9.0);
    CHECK(mean_diff_test(flat8, flat8b) == 1.0);
    CHECK(mean_diff_test(flat8, flat9) == 0.0);
    CHECK_THROWS_AS(mean_diff_test({1.0}, {2.0, 3.0}), StatsError);

    // frozen double-precision references for the four reference vectors
    auto groups = ts::reference_rating_groups();
    struct Ref { int i, j; double welch, pooled; };
    const Ref refs[] = {
        {0, 1, 0.182843208191, 0.187382374532},
        {0, 2, 0.965662834848, 0.965900395904},
        {0, 3, 0.375858055759, 0.379682565522},
        {1, 2, 0.173889075458, 0.169708778662},
        {1, 3, 0.001257145988, 0.001193671245},
        {2, 3, 0.316358370062, 0.305952720437},
    };
    for (const auto& r : refs) {
        CAPTURE(r.i, r.j);
        CHECK(mean_diff_test(groups[r.i], groups[r.j], MeanTestVariant::welch) ==
              Catch::Approx(r.welch).margin(1e-9));
        CHECK(mean_diff_test(groups[r.i], groups[r.j], MeanTestVariant::pooled) ==
              Catch::Approx(r.pooled).margin(1e-9));
    }
}

TEST_CASE("variance_diff_test conventions and frozen references", "[stats]") {
    std::vector<double> sample = {7, 8, 8, 9, 7};
    CHECK(variance_diff_test(sample, sample, LeveneCentering::mean) == 1.0);
    CHECK(variance_diff_test(sample, sample, LeveneCentering::median) == 1.0);

    // all deviations zero: degenerate, p = 1 by convention
    std::vector<double> flat(4, 5.0), flat2(3, 9.0);
    CHECK(variance_diff_test(flat, flat2, LeveneCentering::mean) == 1.0);

    // hand-built 5-element samples, frozen from an independent computation
    std::vector<double> a = {1, 3, 5, 7, 9};
    std::vector<double> b = {2, 2, 4, 8, 9};
    CHECK(variance_diff_test(a, b, LeveneCentering::mean) ==
          Catch::Approx(0.6665811073830712).margin(1e-6));
    CHECK(variance_diff_test(a, b, LeveneCentering::median) ==
          Catch::Approx(0.866128879344374).margin(1e-6));

    auto groups = ts::reference_rating_groups();
    struct Ref { int i, j; double mean_c, median_c; };
    const Ref refs[] = {
        {0, 1, 0.475301151250, 0.977928559482},
        {0, 2, 0.616566367590, 0.624302289680},
        {0, 3, 0.285236076319, 0.457920184093},
        {1, 2, 0.182204496603, 0.518827946571},
        {1, 3, 0.009523695347, 0.266585752829},
        {2, 3, 0.673893440929, 0.864568321707},
    };
    for (const auto& r : refs) {
        CAPTURE(r.i, r.j);
        CHECK(variance_diff_test(groups[r.i], groups[r.j], LeveneCentering::mean) ==
              Catch::Approx(r.mean_c).margin(1e-9));
        CHECK(variance_diff_test(groups[r.i], groups[r.j], LeveneCentering::median) ==
              Catch::Approx(r.median_c).margin(1e-9));
    }
}

TEST_CASE("published pairwise matrix reproduces within tolerance", "[stats]") {
    auto groups = ts::reference_rating_groups();
    auto matrix = pairwise_matrix(groups, {MeanTestVariant::welch, LeveneCentering::median});
    for (const auto& ref : ts::reference_pairwise_cells()) {
        const auto* cell = matrix.find(ref.a, ref.b);
        REQUIRE(cell != nullptr);
        CAPTURE(ref.a, ref.b);
        if (ref.mean_p == 0.0)
            CHECK(cell->mean_p < 0.005);
        else
            CHECK(cell->mean_p == Catch::Approx(ref.mean_p).margin(0.02));
        CHECK(cell->variance_p == Catch::Approx(ref.variance_p).margin(0.02));
    }
}

TEST_CASE("pairwise matrix composes from single-pair tests", "[stats]") {
    std::vector<RatingGroup> gs = {
        {"g1", {7, 8, 8, 9}},
        {"g2", {6, 7, 9, 9, 8}},
        {"g3", {8, 8, 8, 7}},
    };
    TestConfig cfg{MeanTestVariant::pooled, LeveneCentering::mean};
    auto m = pairwise_matrix(gs, cfg);
    REQUIRE(m.cells.size() == 3);
    for (const auto& c : m.cells) {
        const RatingGroup* a = nullptr;
        const RatingGroup* b = nullptr;
        for (const auto& g : gs) {
            if (g.label == c.label_a) a = &g;
            if (g.label == c.label_b) b = &g;
        }
        REQUIRE(a);
        REQUIRE(b);
        CHECK(c.mean_p == mean_diff_test(*a, *b, cfg.mean_variant));
        CHECK(c.variance_p == variance_diff_test(*a, *b, cfg.centering));
    }

    std::vector<RatingGroup> same = {{"x", {7, 8, 9}}, {"y", {7, 8, 9}}};
    auto m2 = pairwise_matrix(same);
    CHECK(m2.cells[0].mean_p == 1.0);
    CHECK(m2.cells[0].variance_p == 1.0);

    CHECK_THROWS_AS(pairwise_matrix({{"only", {8}}}), StatsError);
}

TEST_CASE("test symmetry and location-shift invariance", "[stats]") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> rating(1, 9);
    std::uniform_int_distribution<std::size_t> size(2, 12);
    for (int i = 0; i < 25; ++i) {
        std::vector<double> a(size(rng)), b(size(rng));
        for (auto& x : a) x = rating(rng);
        for (auto& x : b) x = rating(rng);
        for (auto variant : {MeanTestVariant::welch, MeanTestVariant::pooled}) {
            double pab = mean_diff_test(a, b, variant);
            CHECK(pab == mean_diff_test(b, a, variant));
            CHECK(pab >= 0.0);
            CHECK(pab <= 1.0);
        }
        for (auto center : {LeveneCentering::mean, LeveneCentering::median}) {
            double pab = variance_diff_test(a, b, center);
            CHECK(pab == variance_diff_test(b, a, center));
            CHECK(pab >= 0.0);
            CHECK(pab <= 1.0);

            auto a_shift = a;
            auto b_shift = b;
            for (auto& x : a_shift) x += 3.0;
            for (auto& x : b_shift) x += 3.0;
            CHECK(variance_diff_test(a_shift, b_shift, center) ==
                  Catch::Approx(pab).margin(1e-12));
            CHECK(mean_diff_test(a_shift, b_shift) ==
                  Catch::Approx(mean_diff_test(a, b)).margin(1e-12));
        }
    }
}

TEST_CASE("distribution table reproduces published percentages", "[stats]") {
    auto groups = ts::reference_rating_groups();
    auto rows = distribution_table(groups);

    auto pct = [&](const std::string& label, int rating) {
        for (const auto& r : rows)
            if (r.label == label && r.rating == rating) return r.percentage;
        return -1.0;
    };
    CHECK(pct("Cognitive Psychology", 7) == 11.3);
    CHECK(pct("Cognitive Psychology", 8) == 59.7);
    CHECK(pct("Cognitive Psychology", 9) == 29.0);
    CHECK(pct("Journal of Experimental Psychology: General", 7) == 17.4);
    CHECK(pct("Journal of Experimental Psychology: General", 8) == 59.9);
    CHECK(pct("Journal of Experimental Psychology: General", 9) == 22.8);
    CHECK(pct("Journal of Personality and Social Psychology", 7) == 13.6);
    CHECK(pct("Journal of Personality and Social Psychology", 8) == 55.6);
    CHECK(pct("Journal of Personality and Social Psychology", 9) == 30.9);
    CHECK(pct("Psychological Science", 7) == 10.0);
    CHECK(pct("Psychological Science", 8) == 54.5);
    CHECK(pct("Psychological Science", 9) == 35.5);

    // per-group percentages sum to 100 +- 0.1 after rounding
    for (const auto& g : groups) {
        double sum = 0;
        for (const auto& r : rows)
            if (r.label == g.label) sum += r.percentage;
        CHECK(sum == Catch::Approx(100.0).margin(0.1));
    }

    auto single = distribution_table({{"solo", {8}}});
    REQUIRE(single.size() == 1);
    CHECK(single[0].percentage == 100.0);
    CHECK(single[0].count == 1);

    CHECK_THROWS_AS(distribution_table({{"empty", {}}}), StatsError);

    // permutation invariance
    auto shuffled = groups;
    std::mt19937 rng(3);
    for (auto& g : shuffled) std::shuffle(g.values.begin(), g.values.end(), rng);
    CHECK(distribution_table(shuffled).size() == rows.size());
    for (const auto& r : distribution_table(shuffled))
        CHECK(r.percentage == pct(r.label, r.rating));
}

TEST_CASE("keyword facets", "[stats]") {
    std::vector<AlignmentObservation> obs = {
        {{"learning"}, 8, 8},
        {{"learning", "cognition"}, 8, 8},
        {{"cognition"}, 6, 7},
    };
    auto facets = keyword_facets(obs, {"learning", "cognition", "attitude"});
    REQUIRE(facets.size() == 3);
    CHECK(facets[0].n == 2);
    CHECK(facets[0].empirical_mean == 8.0);
    CHECK(facets[0].empirical_sd == 0.0);
    CHECK(facets[1].n == 2);  // overlap article counted in both facets
    CHECK(facets[2].empty);
    CHECK(facets[2].n == 0);

    CHECK_THROWS_AS(keyword_facets(obs, {}), StatsError);

    // 20-observation fixture against a brute-force recomputation
    std::vector<AlignmentObservation> many;
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> rating(5, 9);
    for (int i = 0; i < 20; ++i)
        many.push_back({{i % 2 ? "learning" : "cognition"}, rating(rng), rating(rng)});
    auto f = keyword_facets(many, {"learning"});
    std::vector<double> emp;
    for (const auto& o : many)
        if (o.keywords[0] == "learning") emp.push_back(o.empirical);
    double mean = 0;
    for (double x : emp) mean += x;
    mean /= static_cast<double>(emp.size());
    double ss = 0;
    for (double x : emp) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / (static_cast<double>(emp.size()) - 1));
    CHECK(f[0].n == emp.size());
    CHECK(f[0].empirical_mean == Catch::Approx(mean).epsilon(1e-12));
    CHECK(f[0].empirical_sd == Catch::Approx(sd).epsilon(1e-12));
}

TEST_CASE("emit_report: deterministic csv that round-trips", "[stats]") {
    auto dir = ts::make_temp_dir("stats_report");
    ReportTables tables;
    auto groups = ts::reference_rating_groups();
    tables.distribution = distribution_table(groups);
    tables.pairwise = pairwise_matrix(groups, {MeanTestVariant::welch, LeveneCentering::median});

    auto written = emit_report(tables, ReportFormat::csv, dir / "r1");
    REQUIRE(written.size() == 2);

    // deterministic bytes
    emit_report(tables, ReportFormat::csv, dir / "r2");
    for (const char* name : {"distribution.csv", "pairwise.csv"}) {
        std::ifstream f1(dir / "r1" / name), f2(dir / "r2" / name);
        std::stringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        CHECK(s1.str() == s2.str());
        CHECK(!s1.str().empty());
    }

    // re-parse distribution.csv and compare numbers
    std::ifstream in(dir / "r1" / "distribution.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "label,rating,count,percentage");
    std::size_t row_idx = 0;
    while (std::getline(in, line)) {
        auto last_comma = line.rfind(',');
        auto prev_comma = line.rfind(',', last_comma - 1);
        auto prev2 = line.rfind(',', prev_comma - 1);
        const auto& expect = tables.distribution[row_idx];
        CHECK(std::stod(line.substr(last_comma + 1)) == expect.percentage);
        CHECK(std::stoul(line.substr(prev_comma + 1)) == expect.count);
        CHECK(std::stoi(line.substr(prev2 + 1)) == expect.rating);
        ++row_idx;
    }
    CHECK(row_idx == tables.distribution.size());

    // variant header rides in the pairwise file
    std::ifstream pin(dir / "r1" / "pairwise.csv");
    std::string header;
    std::getline(pin, header);
    CHECK(header.find("redactlab") != std::string::npos);
    std::getline(pin, header);
    CHECK(header == "# mean_test=welch");
    std::getline(pin, header);
    CHECK(header == "# levene_center=median");

    CHECK_THROWS_AS(emit_report(ReportTables{}, ReportFormat::csv, dir / "r3"), StatsError);

    // markdown renders all present tables
    auto md = emit_report(tables, ReportFormat::markdown, dir / "md");
    REQUIRE(md.size() == 1);
    std::ifstream mdin(md[0]);
    std::stringstream mds;
    mds << mdin.rdbuf();
    CHECK(mds.str().find("## Rating distribution") != std::string::npos);
    CHECK(mds.str().find("## Pairwise p-values") != std::string::npos);
}
