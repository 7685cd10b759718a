#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "catch_amalgamated.hpp"
#include "neutrality/estimators.hpp"
#include "neutrality/fixtures.hpp"
#include "neutrality/inference.hpp"
#include "neutrality/parallel.hpp"
#include "neutrality/report.hpp"
#include "neutrality/simulator.hpp"
#include "neutrality/ustat.hpp"
#include "oracles.hpp"

using namespace neutrality;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Alignment table1() { return parse_fasta_string(fixtures::kTable1Fasta); }

Alignment monomorphic(std::size_t n = 6, std::size_t k = 12) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) text += ">m" + std::to_string(i) + "\n" + std::string(k, 'G') + "\n";
    return parse_fasta_string(text);
}

// Mostly conserved columns with bases in roughly turtle proportions plus a few
// low-frequency variants: T2 far below theta0, as in strongly conserved genes.
Alignment conserved_with_rare_variants(std::size_t n, std::size_t k, std::size_t variable, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::discrete_distribution<int> base({0.39, 0.27, 0.24, 0.10});
    std::vector<std::uint8_t> codes(n * k);
    auto pick = base;
    for (std::size_t s = 0; s < k; ++s) {
        const auto b = static_cast<std::uint8_t>(pick(rng));
        for (std::size_t i = 0; i < n; ++i) codes[i * k + s] = b;
        if (s < variable) {
            const std::size_t carriers = 1 + rng() % 3;
            for (std::size_t c = 0; c < carriers; ++c) codes[(rng() % n) * k + s] = static_cast<std::uint8_t>((b + 1) % 4);
        }
    }
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i));
    return Alignment(labels, k, 4, codes);
}

}  // namespace

TEST_CASE("theta0 modes", "[inference]") {
    const std::array<std::size_t, 4> cols = {3913, 2727, 2372, 988};
    std::string row;
    for (std::size_t c = 0; c < 4; ++c) row += std::string(cols[c], kNucleotides[c]);
    const auto turtle = parse_fasta_string(">x\n" + row + "A\n>y\n" + row + "C\n");
    const auto pooled = theta0(turtle, Theta0Mode::PooledNonSegregating);
    CHECK_THAT(pooled.theta0, WithinAbs(0.70649374, 1e-8));
    CHECK(pooled.source_sites == 10000);
    CHECK(pooled.frequencies.size() == 4);

    const auto sitewise = theta0(turtle, Theta0Mode::SitewiseNonSegregating);
    CHECK(sitewise.theta0 == 0.0);
    CHECK_FALSE(sitewise.warning.empty());

    const auto uniform = parse_fasta_string(">x\nACGTA\n>y\nACGTC\n>z\nACGTG\n");
    CHECK_THAT(theta0(uniform, Theta0Mode::PooledNonSegregating).theta0, WithinAbs(0.75, 1e-15));

    CHECK_THROWS_AS(theta0(table1(), Theta0Mode::PooledNonSegregating), InferenceError);
    CHECK_THROWS_AS(theta0(table1(), Theta0Mode::SitewiseNonSegregating), InferenceError);
    CHECK(user_null(0.3).theta0 == 0.3);
    CHECK(user_null(0.3).mode == Theta0Mode::UserSupplied);
    CHECK_THROWS_AS(user_null(1.5), InferenceError);
}

TEST_CASE("sitewise theta0 is zero on random alignments", "[inference][property]") {
    std::mt19937_64 rng(40);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = oracle::random_sparse_alignment(rng, 6, 30, 0.05);
        if (classify_sites(a).non_segregating_sites().empty()) continue;
        REQUIRE(theta0(a, Theta0Mode::SitewiseNonSegregating).theta0 == 0.0);
    }
}

TEST_CASE("pair difference matrix", "[inference]") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = oracle::random_alignment(rng, 7, 1 + rng() % 150);
        const auto d = pair_difference_matrix(a);
        for (std::size_t i = 0; i < 7; ++i) {
            REQUIRE(d[i * 7 + i] == 0);
            for (std::size_t j = 0; j < 7; ++j) {
                if (i != j) REQUIRE(d[i * 7 + j] == oracle::hamming(a, i, j));
            }
        }
    }
}

TEST_CASE("jackknife sums match 4-tuple enumeration", "[inference][oracle]") {
    std::mt19937_64 rng(42);
    for (std::size_t n = 5; n <= 8; ++n) {
        for (int rep = 0; rep < 10; ++rep) {
            const auto a = rep % 2 ? oracle::random_alignment(rng, n, 25) : oracle::random_sparse_alignment(rng, n, 40);
            const auto s = jackknife_sums(a);
            const auto b = oracle::brute_jackknife_sums(a);
            REQUIRE(s.s0 == b.s0);
            REQUIRE(s.s1 == b.s1);
            REQUIRE(s.s2 == b.s2);
            // every ordered pair of pairs lands in exactly one class
            const auto total = oracle::total_pair_diffs(a);
            REQUIRE(s.s0 + s.s1 + s.s2 == static_cast<UInt128>(total) * total);
        }
    }
}

TEST_CASE("jackknife closed form equals the delete-one jackknife", "[inference][oracle]") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 5 + rng() % 20;
        const auto a = oracle::random_sparse_alignment(rng, n, 1 + rng() % 60, 0.1);
        const auto est = jackknife_var_t2(a);
        const double brute = oracle::delete_one_jackknife(a);
        REQUIRE(est.m == 2);
        REQUIRE(est.oracle_value >= 0.0);
        REQUIRE(std::isfinite(est.value));
        REQUIRE_THAT(est.oracle_value, WithinAbs(brute, 1e-12 * (1.0 + brute)));
        REQUIRE_THAT(est.value, WithinAbs(brute, 1e-10 * (1.0 + brute)));
        REQUIRE(est.relative_deviation < 1e-9);
        REQUIRE_FALSE(est.negative);
    }
}

TEST_CASE("jackknife edge cases", "[inference]") {
    const auto m = jackknife_var_t2(monomorphic());
    CHECK(m.value == 0.0);
    CHECK(m.oracle_value == 0.0);
    CHECK(m.relative_deviation == 0.0);
    CHECK_THROWS_AS(jackknife_var_t2(parse_fasta_string(">a\nAC\n>b\nAG\n>c\nTC\n>d\nAA\n")), InferenceError);
    const auto t = jackknife_var_t2(table1());
    CHECK_THAT(t.value, WithinRel(oracle::delete_one_jackknife(table1()), 1e-12));
}

TEST_CASE("jackknife estimates are centred on the exact variance", "[inference][montecarlo]") {
    const std::vector<double> row = {0.9, 0.1};
    const auto model = IndependentSitesModel::identical(row, 20);
    const std::size_t n = 30;
    const int reps = 2000;
    std::vector<double> closed(reps), loo(reps);
    parallel_for(reps, 0, [&](std::size_t r) {
        const auto est = jackknife_var_t2(sample_alignment(model, n, derive_seed(7, r)));
        closed[r] = est.value;
        loo[r] = est.oracle_value;
    });
    const double exact = exact_var_t2(model, n);
    for (const auto* v : {&closed, &loo}) {
        const double mean = std::accumulate(v->begin(), v->end(), 0.0) / reps;
        double ss = 0.0;
        for (double x : *v) ss += (x - mean) * (x - mean);
        const double se = std::sqrt(ss / (reps - 1) / reps);
        CHECK(std::abs(mean - exact) < 4.0 * se);
    }
}

TEST_CASE("T_n statistic", "[inference]") {
    CHECK(tn_statistic(0.4, 0.4, 0.01, 10, 20) == 0.0);
    CHECK_THAT(tn_statistic(0.5, 0.4, 0.0025, 10, 20), WithinRel(2.0, 1e-12));
    CHECK_THROWS_AS(tn_statistic(0.5, 0.4, 0.0, 10, 20), InferenceError);
    CHECK_THROWS_AS(tn_statistic(0.5, 0.4, -1e-6, 10, 20), InferenceError);
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double t2v = u(rng), th = u(rng), var = 1e-6 + u(rng);
        const double t = tn_statistic(t2v, th, var, 1 + rng() % 100, 1 + rng() % 500);
        REQUIRE((t > 0) == (t2v > th));
        REQUIRE((t < 0) == (t2v < th));
        // the sqrt(nK) factors cancel
        REQUIRE_THAT(t, WithinAbs((t2v - th) / std::sqrt(var), 1e-12));
    }
}

TEST_CASE("normal tails against frozen reference values", "[inference]") {
    const std::pair<double, double> ref[] = {
        {-8.0, 6.2209605742717841e-16}, {-5.0, 2.8665157187919391e-7}, {-2.5, 0.006209665325776135},
        {-1.0, 0.15865525393145705},    {0.3, 0.61791142218895263},    {1.7, 0.95543453724145696},
        {4.0, 0.99996832875816688},     {8.0, 0.9999999999999993779},  {-9.14, 3.1226165087293880e-20},
    };
    for (const auto& [t, p] : ref) {
        CHECK_THAT(normal_cdf(t), WithinRel(p, 1e-10));
        CHECK_THAT(tn_pvalue(t, Sidedness::Left), WithinRel(p, 1e-10));
    }
    CHECK_THAT(tn_pvalue(1.959964, Sidedness::Two), WithinAbs(0.049999998192884809, 1e-12));
    CHECK(tn_pvalue(0.0, Sidedness::Two) == 1.0);
    const double p = tn_pvalue(-9.14, Sidedness::Left);
    CHECK(p >= 2e-20);
    CHECK(p <= 5e-20);
}

TEST_CASE("p-value symmetry and monotonicity", "[inference][property]") {
    double prev_left = 0.0;
    for (int i = -400; i <= 400; ++i) {
        const double t = i * 0.02;
        const double l = tn_pvalue(t, Sidedness::Left);
        const double r = tn_pvalue(t, Sidedness::Right);
        REQUIRE(tn_pvalue(-t, Sidedness::Left) == r);
        REQUIRE(tn_pvalue(t, Sidedness::Two) == std::min(1.0, 2.0 * std::min(l, r)));
        REQUIRE(l >= prev_left);
        REQUIRE(l >= 0.0);
        REQUIRE(l <= 1.0);
        prev_left = l;
    }
    CHECK(tn_pvalue(50.0, Sidedness::Right) == 0.0);
    CHECK(tn_pvalue(-50.0, Sidedness::Right) == 1.0);
}

TEST_CASE("critical values and rejection", "[inference]") {
    CHECK_THAT(critical_value(0.05, Sidedness::Two), WithinAbs(1.959963984540054, 1e-9));
    CHECK_THAT(critical_value(0.05, Sidedness::Left), WithinAbs(1.6448536269514722, 1e-9));
    CHECK(rejects(-2.0, 0.05, Sidedness::Two));
    CHECK_FALSE(rejects(-2.0, 0.05, Sidedness::Right));
    CHECK(rejects(-2.0, 0.05, Sidedness::Left));
}

TEST_CASE("frequency shift", "[inference]") {
    CHECK_THAT(frequency_shift(fixtures::kTurtleSegregating, fixtures::kTurtleNonSegregating),
               WithinAbs(-0.4615, 1e-4));
    CHECK_THAT(frequency_shift(fixtures::kTurtleSegregating, fixtures::kTurtleNonSegregating),
               WithinAbs(-0.46153456, 1e-8));
    CHECK_THAT(frequency_shift(fixtures::kHivSegregating, fixtures::kHivNonSegregating), WithinAbs(-0.0804, 1e-4));
    CHECK_THAT(frequency_shift(fixtures::kHivSegregating, fixtures::kHivNonSegregating),
               WithinAbs(-0.08038048, 1e-8));
    CHECK(frequency_shift(fixtures::kHivSegregating, fixtures::kHivSegregating) == 0.0);

    CHECK_THROWS_AS(frequency_shift(monomorphic()), InferenceError);
    CHECK_THROWS_AS(frequency_shift(table1()), InferenceError);
    // one A/C segregating column and two constant columns (A, G)
    const auto a = parse_fasta_string(">x\nAAG\n>y\nCAG\n");
    CHECK_THAT(frequency_shift(a), WithinAbs(0.5 - 0.5, 1e-15));
    const auto b = parse_fasta_string(">x\nAAA\n>y\nCAA\n>z\nAAA\n>w\nAAA\n");
    CHECK_THAT(frequency_shift(b), WithinAbs(1.0 - (0.75 * 0.75 + 0.25 * 0.25) - 0.0, 1e-15));
}

TEST_CASE("bootstrap of Tajima's D", "[inference]") {
    const auto a = table1();
    const auto r1 = bootstrap_d(a, 500, 9);
    const auto r2 = bootstrap_d(a, 500, 9);
    const auto r4 = bootstrap_d(a, 500, 9, 4);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.p_value == r4.p_value);
    CHECK(r1.center == r4.center);
    CHECK(r1.replicates == 500);
    CHECK(r1.seed == 9);
    CHECK(r1.p_value >= 0.0);
    CHECK(r1.p_value <= 1.0);
    CHECK_THAT(r1.observed, WithinAbs(tajima_d(a).d, 0.0));
    CHECK(BootstrapResult::scheme == "site-columns-with-replacement");

    CHECK_THROWS_AS(bootstrap_d(monomorphic(), 200, 1), InferenceError);
    CHECK_THROWS_AS(bootstrap_d(a, 99, 1), InferenceError);

    // every column identical: each replicate reproduces the data
    const auto same = parse_fasta_string(">a\nAAAA\n>b\nAAAA\n>c\nCCCC\n>d\nAAAA\n");
    const auto d = bootstrap_d(same, 100, 3);
    CHECK(d.degenerate);
    CHECK(d.p_value == 1.0);
}

TEST_CASE("bootstrap p-values are calibrated under neutrality", "[inference][montecarlo]") {
    // Two-state sites, each either common (p = 0.5) or rare (p = 0.02); the mix
    // is chosen so that E[T2 per pair] = E[S] / a_n, i.e. D1 has mean zero.
    const std::size_t n = 20, k = 300, b = 200;
    const int datasets = 500;
    const double an = harmonic_coefficients(n).a_n;
    const auto g = [&](double p) {
        return 2.0 * p * (1.0 - p) - (1.0 - std::pow(1.0 - p, n) - std::pow(p, n)) / an;
    };
    const double q_rare = g(0.5) / (g(0.5) - g(0.02));
    std::vector<std::uint8_t> small(datasets, 0);
    parallel_for(datasets, 0, [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(11, r));
        std::bernoulli_distribution rare(q_rare);
        std::vector<std::uint8_t> codes(n * k);
        for (std::size_t s = 0; s < k; ++s) {
            std::bernoulli_distribution draw(rare(rng) ? 0.02 : 0.5);
            for (std::size_t i = 0; i < n; ++i) codes[i * k + s] = draw(rng) ? 1 : 0;
        }
        std::vector<std::string> labels(n, "x");
        const Alignment a(labels, k, 4, codes);
        if (!tajima_d(a).defined) return;
        small[r] = bootstrap_d(a, b, derive_seed(12, r)).p_value < 0.05;
    });
    const double fraction = std::accumulate(small.begin(), small.end(), 0.0) / datasets;
    INFO("fraction with p < 0.05: " << fraction);
    CHECK(fraction >= 0.02);
    CHECK(fraction <= 0.09);
}

TEST_CASE("analyze on the Table 1 fixture", "[inference]") {
    AnalysisConfig cfg;
    cfg.bootstrap_b = 200;
    const auto r = analyze(table1(), cfg, "table1");
    CHECK(r.estimators.segregating == 16);
    CHECK(r.estimators.singletons == 9);
    CHECK(*r.estimators.t2_per_segregating == 4.9375);
    CHECK_THAT(r.estimators.t2_per_pair, WithinAbs(7.9, 1e-12));
    CHECK_THAT(r.estimators.t2_per_site_pair, WithinAbs(0.49375, 1e-12));
    CHECK_THAT(r.tajima.d1, WithinAbs(0.22, 1e-12));
    CHECK(r.bootstrap);
    // no conserved columns: the pooled null does not exist
    CHECK_FALSE(r.test.defined);
    CHECK_THAT(r.test.reason, Catch::Matchers::ContainsSubstring("non-segregating"));
    CHECK_FALSE(r.frequency_shift);

    cfg.theta0_mode = Theta0Mode::UserSupplied;
    cfg.theta0_value = 0.4;
    const auto u = analyze(table1(), cfg, "table1");
    REQUIRE(u.test.defined);
    CHECK(u.test.k_used == 16);
    CHECK_THAT(u.test.t_n, WithinAbs((0.49375 - 0.4) / std::sqrt(u.test.var_t2), 1e-12));
    CHECK_THAT(u.test.var_t2_scaled, WithinRel(5.0 * 16.0 * u.test.var_t2, 1e-15));
    CHECK(u.test.p_value == tn_pvalue(u.test.t_n, Sidedness::Two));
}

TEST_CASE("analyze on monomorphic data", "[inference]") {
    const auto r = analyze(monomorphic(), AnalysisConfig{});
    CHECK(r.estimators.segregating == 0);
    CHECK_FALSE(r.tajima.defined);
    CHECK_FALSE(r.bootstrap);
    CHECK_FALSE(r.test.defined);
    CHECK_FALSE(r.test.reason.empty());
    CHECK_FALSE(r.frequency_shift);
}

TEST_CASE("analyze detects a strong deficit of diversity", "[inference]") {
    const auto a = conserved_with_rare_variants(48, 262, 30, 5);
    AnalysisConfig cfg;
    cfg.bootstrap_b = 0;
    const auto r = analyze(a, cfg);
    REQUIRE(r.test.defined);
    CHECK(r.test.t2 < 0.05);
    CHECK(r.test.null->theta0 > 0.6);
    CHECK(r.test.t_n < -10.0);
    CHECK(r.test.reject);
    CHECK(*r.frequency_shift < 0.0);

    cfg.sided = Sidedness::Right;
    CHECK_FALSE(analyze(a, cfg).test.reject);

    cfg.k_mode = KMode::SegregatingOnly;
    const auto s = analyze(a, cfg);
    CHECK(s.test.k_used == s.estimators.segregating);
}

TEST_CASE("analyze with model variance", "[inference]") {
    const auto a = conserved_with_rare_variants(20, 50, 10, 6);
    AnalysisConfig cfg;
    cfg.bootstrap_b = 0;
    cfg.variance = VarianceSource::Model;
    CHECK_FALSE(analyze(a, cfg).test.defined);
    const std::vector<double> row = {0.7, 0.1, 0.1, 0.1};
    cfg.variance_model = std::make_shared<IndependentSitesModel>(IndependentSitesModel::identical(row, 50));
    const auto r = analyze(a, cfg);
    REQUIRE(r.test.defined);
    CHECK(r.test.var_t2 == exact_var_t2(*cfg.variance_model, 20));
    CHECK_FALSE(r.test.jackknife);
    cfg.variance_model = std::make_shared<IndependentSitesModel>(IndependentSitesModel::identical(row, 49));
    CHECK_THROWS_AS(analyze(a, cfg), std::invalid_argument);
}

TEST_CASE("JSON reports are deterministic", "[inference]") {
    const auto a = conserved_with_rare_variants(30, 120, 25, 8);
    AnalysisConfig cfg;
    cfg.bootstrap_b = 300;
    cfg.seed = 77;
    const auto j1 = report_json(analyze(a, cfg, "x"));
    const auto j2 = report_json(analyze(a, cfg, "x"));
    cfg.threads = 3;
    const auto j3 = report_json(analyze(a, cfg, "x"));
    CHECK(j1 == j2);
    CHECK(j1 == j3);
    CHECK_THAT(j1, Catch::Matchers::ContainsSubstring("\"schema_version\": 1"));
    cfg.seed = 78;
    CHECK(report_json(analyze(a, cfg, "x")) != j1);
}
