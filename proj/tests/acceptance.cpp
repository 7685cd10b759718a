// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run everything
//   acceptance --only AC7 run one criterion
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "neutrality/alignment.hpp"
#include "neutrality/fixtures.hpp"
#include "neutrality/inference.hpp"
#include "neutrality/parallel.hpp"
#include "neutrality/simulator.hpp"
#include "neutrality/ustat.hpp"
#include "oracles.hpp"

using namespace neutrality;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += "failed: " + what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Criterion {
    std::string id;
    std::string title;
    double time_limit_s;  // 0 = none
    std::function<Outcome()> run;
};

std::shared_ptr<const SiteModel> independent(std::vector<double> row, std::size_t k) {
    return std::make_shared<IndependentSitesModel>(IndependentSitesModel::identical(row, k));
}

// ---------------------------------------------------------------------------

Outcome ac1() {
    Outcome o;
    const auto a = parse_fasta_string(fixtures::kTable1Fasta);
    const auto c = classify_sites(a);
    o.require(a.sequences() == 5 && a.sites() == 16, "5 x 16 fixture");
    o.require(c.segregating == 16, "S = 16");
    bool counts = true;
    for (std::size_t k = 0; k < 16; ++k) counts = counts && site_pair_diff_count(a, k) == fixtures::kTable1PairDiffs[k];
    o.require(counts, "per-site pair-difference counts");
    const double t2s = t2(a, T2Normalization::PerSegregatingSite).value;
    o.require(t2s == 4.9375, "T2 per segregating site = 4.9375");
    std::vector<std::size_t> singletons;
    for (auto s : c.sites_of(SiteClass::SingletonSegregating)) singletons.push_back(a.original_index(s));
    o.require(singletons == std::vector<std::size_t>(fixtures::kTable1Singletons.begin(),
                                                     fixtures::kTable1Singletons.end()),
              "singleton set {3,5,6,7,8,11,12,13,15}");
    o.note("S = " + std::to_string(c.segregating) + ", T2 = " + fmt("%.4f", t2s) + ", S* = " +
           std::to_string(c.singletons));
    return o;
}

Outcome ac2() {
    Outcome o;
    const double turtle = frequency_shift(fixtures::kTurtleSegregating, fixtures::kTurtleNonSegregating);
    const double hiv = frequency_shift(fixtures::kHivSegregating, fixtures::kHivNonSegregating);
    o.require(std::abs(turtle + 0.4615) <= 1e-4, "turtle shift -0.4615");
    o.require(std::abs(hiv + 0.0804) <= 1e-4, "HIV shift -0.0804");
    o.note("turtle " + fmt("%.6f", turtle) + ", HIV " + fmt("%.6f", hiv));
    return o;
}

Outcome ac3() {
    Outcome o;
    const double p = tn_pvalue(-9.14, Sidedness::Left);
    o.require(p >= 2e-20 && p <= 5e-20, "p(-9.14, left) in [2e-20, 5e-20]");
    bool sym = true, two = true, mono = true, range = true;
    double prev = -1.0;
    for (int i = -1000; i <= 1000; ++i) {
        const double t = i * 0.01;
        const double l = tn_pvalue(t, Sidedness::Left);
        const double r = tn_pvalue(t, Sidedness::Right);
        sym = sym && tn_pvalue(-t, Sidedness::Left) == r;
        two = two && tn_pvalue(t, Sidedness::Two) == std::min(1.0, 2.0 * std::min(l, r));
        mono = mono && l >= prev;
        range = range && l >= 0.0 && l <= 1.0 && r >= 0.0 && r <= 1.0;
        prev = l;
    }
    o.require(sym, "left(-t) = right(t)");
    o.require(two, "two-sided = 2 min(left, right) capped at 1");
    o.require(mono, "left tail monotone");
    o.require(range, "p in [0, 1]");
    o.require(tn_pvalue(0.0, Sidedness::Two) == 1.0, "p(0, two) = 1");
    o.require(std::abs(tn_pvalue(1.959964, Sidedness::Two) - 0.05) < 1e-6, "p(1.959964, two) = 0.05");
    o.note("p(-9.14) = " + fmt("%.4e", p));
    return o;
}

Outcome ac4() {
    Outcome o;
    std::mt19937_64 rng(404);
    double worst = 0.0;
    int models = 0;
    for (int c = 2; c <= 4; ++c) {
        std::size_t states = 1;
        for (std::size_t k = 1;; ++k) {
            states *= static_cast<std::size_t>(c);
            if (states > 4096) break;
            const auto ind = oracle::random_independent(rng, c, k);
            const auto mc = oracle::random_markov(rng, c, k);
            const auto ei = oracle::enumerate_moments(ind);
            const auto em = oracle::enumerate_moments(mc);
            const double diffs[] = {
                sigma1_sq_independent(ind) - ei.sigma1_sq, eh1_4_independent(ind) - ei.eh1_4,
                eh2_2_independent(ind) - ei.eh2_2,         sigma1_sq_general(ind) - ei.sigma1_sq,
                eh1_4_general(ind) - ei.eh1_4,             eh2_2_general(ind) - ei.eh2_2,
                sigma1_sq_general(mc) - em.sigma1_sq,      eh1_4_general(mc) - em.eh1_4,
                eh2_2_general(mc) - em.eh2_2,              expected_hk(mc) - em.hk,
            };
            for (double d : diffs) worst = std::max(worst, std::abs(d));
            models += 2;
        }
    }
    o.require(worst <= 1e-12, "max deviation <= 1e-12");
    o.note(std::to_string(models) + " models, max |closed - enumerated| = " + fmt("%.2e", worst));
    return o;
}

Outcome ac5() {
    Outcome o;
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int c = std::uniform_int_distribution<int>(2, 4)(rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
        std::unique_ptr<SiteModel> m;
        if (trial % 2 == 0) {
            m = std::make_unique<IndependentSitesModel>(oracle::random_independent(rng, c, k));
        } else {
            m = std::make_unique<MarkovSitesModel>(oracle::random_markov(rng, c, k));
        }
        std::vector<std::uint8_t> x(k), y(k);
        m->sample_sequence(rng, x);
        m->sample_sequence(rng, y);
        const double rhs = expected_hk(*m) + h1(x, *m) + h1(y, *m) + h2(x, y, *m);
        worst = std::max(worst, std::abs(kernel_phi(x, y) - rhs));
    }
    o.require(worst <= 1e-12, "decomposition identity within 1e-12");
    double cond = 0.0;
    for (int c = 2; c <= 4; ++c) {
        for (std::size_t k = 1; k <= 3; ++k) {
            cond = std::max(cond, oracle::enumerate_moments(oracle::random_independent(rng, c, k)).max_abs_conditional_h2);
            cond = std::max(cond, oracle::enumerate_moments(oracle::random_markov(rng, c, k)).max_abs_conditional_h2);
        }
    }
    o.require(cond <= 1e-12, "E[h2 | x1] = 0 for K <= 3");
    o.note("10^4 draws, max identity error " + fmt("%.2e", worst) + ", max |E[h2|x1]| " + fmt("%.2e", cond));
    return o;
}

Outcome ac6() {
    Outcome o;
    bool zero = true;
    for (int c = 2; c <= 4; ++c) {
        for (std::size_t k : {1, 2, 7, 50}) {
            zero = zero && sigma1_sq(IndependentSitesModel::uniform(c, k)) == 0.0;
            std::vector<double> sure(static_cast<std::size_t>(c), 0.0);
            sure[k % static_cast<std::size_t>(c)] = 1.0;
            zero = zero && sigma1_sq(IndependentSitesModel::identical(sure, k)) == 0.0;
        }
    }
    // mixed degenerate rows at different sites
    const IndependentSitesModel mixed(4, 3, {1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
    zero = zero && sigma1_sq(mixed) == 0.0;
    o.require(zero, "sigma1^2 = 0 exactly for uniform and degenerate models");
    std::mt19937_64 rng(606);
    int positive = 0;
    double smallest = 1.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int c = std::uniform_int_distribution<int>(2, 4)(rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
        const double s = sigma1_sq(oracle::random_independent(rng, c, k));
        positive += s > 0.0;
        smallest = std::min(smallest, s);
    }
    o.require(positive == 1000, "sigma1^2 > 0 on 1000 random models");
    o.note(std::to_string(positive) + "/1000 positive, min " + fmt("%.3e", smallest));
    return o;
}

Outcome ac7() {
    Outcome o;
    std::mt19937_64 rng(707);
    bool exact = true;
    int checked = 0;
    for (std::size_t n = 5; n <= 8; ++n) {
        for (int rep = 0; rep < 10; ++rep) {
            const auto a = rep % 2 ? oracle::random_alignment(rng, n, 30) : oracle::random_sparse_alignment(rng, n, 60);
            const auto s = jackknife_sums(a);
            const auto b = oracle::brute_jackknife_sums(a);
            exact = exact && s.s0 == b.s0 && s.s1 == b.s1 && s.s2 == b.s2;
            ++checked;
        }
    }
    o.require(exact, "S_c sums equal brute-force 4-tuple sums");

    const auto model = IndependentSitesModel::identical(std::vector<double>{0.9, 0.1}, 20);
    const std::size_t n = 30;
    const int reps = 2000;
    std::vector<double> closed(reps), loo(reps);
    parallel_for(reps, 0, [&](std::size_t r) {
        const auto est = jackknife_var_t2(sample_alignment(model, n, derive_seed(7, r)));
        closed[r] = est.value;
        loo[r] = est.oracle_value;
    });
    const double target = exact_var_t2(model, n);
    const auto z = [&](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / reps;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return (mean - target) / std::sqrt(ss / (reps - 1) / reps);
    };
    const double zc = z(closed), zl = z(loo);
    o.require(std::abs(zc) < 4.0, "closed-form jackknife within 4 SE of exact Var(T2)");
    o.require(std::abs(zl) < 4.0, "delete-one jackknife within 4 SE of exact Var(T2)");
    o.note(std::to_string(checked) + " exact sum checks, z(closed) = " + fmt("%.2f", zc) + ", z(delete-one) = " +
           fmt("%.2f", zl));
    return o;
}

Outcome ac8() {
    Outcome o;
    SimConfig cfg;
    cfg.model = independent({0.7, 0.1, 0.1, 0.1}, 50);
    cfg.n = 200;
    cfg.replicates = 2000;
    cfg.seed = 1;
    cfg.threads = 0;
    const double ks = clt_study(cfg).ks;
    o.require(ks < 0.05, "independent KS < 0.05");

    SimConfig mk;
    mk.model = std::make_shared<MarkovSitesModel>(MarkovSitesModel::with_mixing(std::vector<double>{0.99, 0.01}, 0.95, 50));
    mk.n = 50;
    mk.replicates = 20000;
    mk.seed = 1;
    mk.threads = 0;
    mk.statistic = Statistic::ExactStandardizedT2;
    const auto rate = rate_study(mk, RateAxis::K, {50, 200, 800}, Mixing::Exponential);
    const auto& p = rate.points;
    o.require(p[0].ks > p[1].ks && p[1].ks > p[2].ks, "Markov KS strictly decreasing in K");
    o.note("independent KS " + fmt("%.4f", ks) + "; Markov KS " + fmt("%.4f", p[0].ks) + " > " + fmt("%.4f", p[1].ks) +
           " > " + fmt("%.4f", p[2].ks));
    return o;
}

Outcome ac9() {
    Outcome o;
    SimConfig cfg;
    cfg.model = independent({0.8, 0.2}, 1);
    cfg.replicates = 20000;
    cfg.seed = 1;
    cfg.threads = 0;
    const auto r = rate_study(cfg, RateAxis::N, {25, 100, 400});
    o.require(r.loglog_slope >= -0.8 && r.loglog_slope <= -0.3, "log-log slope in [-0.8, -0.3]");
    bool scaling = true;
    for (const auto& p : r.points) {
        const double expect = *r.points[0].bound * std::sqrt(25.0 / static_cast<double>(p.n));
        scaling = scaling && std::abs(*p.bound - expect) <= 1e-13 * expect;
    }
    o.require(scaling, "bound scales as n^-1/2");
    o.note("KS " + fmt("%.4f", r.points[0].ks) + " / " + fmt("%.4f", r.points[1].ks) + " / " +
           fmt("%.4f", r.points[2].ks) + ", slope " + fmt("%.3f", r.loglog_slope));
    return o;
}

Outcome ac10() {
    Outcome o;
    SimConfig size;
    size.model = independent({0.7, 0.1, 0.1, 0.1}, 200);
    size.n = 100;
    size.replicates = 2000;
    size.seed = 1;
    size.threads = 0;
    size.statistic = Statistic::Tn;
    const auto s = clt_study(size);
    const double rate = *s.rejection_rate;
    o.require(rate >= 0.03 && rate <= 0.08, "size in [0.03, 0.08]");

    PowerConfig pw;
    pw.null_model = independent({0.7, 0.1, 0.1, 0.1}, 100);
    pw.alternative = independent({0.6, 0.2, 0.1, 0.1}, 100);
    pw.n_grid = {20, 50, 100, 200};
    pw.replicates = 2000;
    pw.seed = 1;
    pw.threads = 0;
    const auto p = power_study(pw);
    bool mono = true;
    std::string curve;
    for (std::size_t i = 0; i < p.points.size(); ++i) {
        if (i > 0) mono = mono && p.points[i].rejection_rate >= p.points[i - 1].rejection_rate;
        curve += (i ? "/" : "") + fmt("%.3f", p.points[i].rejection_rate);
    }
    o.require(mono, "power monotone in n");
    o.require(p.points.back().rejection_rate > 0.99, "power > 0.99 at n = 200");
    o.note("size " + fmt("%.4f", rate) + " (mean T_n " + fmt("%.3f", s.mean) + "), power " + curve +
           ", H_K - theta0 = " + fmt("%.3f", p.points[0].h_alternative - p.points[0].theta0));
    return o;
}

Outcome ac11() {
    Outcome o;
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "neutrality-kit-acceptance";
    fs::create_directories(dir);
    const auto fasta = (dir / "sample.fa").string();
    {
        const auto model = IndependentSitesModel::identical(std::vector<double>{0.85, 0.05, 0.05, 0.05}, 120);
        std::ofstream f(fasta);
        write_fasta(f, sample_alignment(model, 25, 11));
    }
    const auto study = (dir / "study.json").string();
    std::ofstream(study) << R"({"study": "rate", "axis": "K", "grid": [20, 80], "n": 20, "replicates": 400,
        "statistic": "exact_standardized_t2", "mixing": "exponential", "seed": 3,
        "model": {"type": "markov", "K": 20, "stationary": [0.7, 0.2, 0.1], "lambda": 0.6}})";
    const auto power = (dir / "power.json").string();
    std::ofstream(power) << R"({"study": "power", "n_grid": [10, 20], "replicates": 200, "drift_c": 1.5,
        "null": {"type": "independent", "C": 4, "K": 40, "marginals": [[0.7, 0.1, 0.1, 0.1]]}})";

    const auto call = [](std::vector<std::string> args) {
        args.insert(args.begin(), "neutrality-kit");
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return std::to_string(code) + "\n" + out.str();
    };
    int compared = 0;
    const auto same = [&](const std::vector<std::vector<std::string>>& runs) {
        const auto ref = call(runs.front());
        bool ok = ref.rfind("0\n", 0) == 0;
        for (const auto& r : runs) {
            ok = ok && call(r) == ref;
            ++compared;
        }
        return ok;
    };
    for (const char* format : {"json", "tsv"}) {
        std::vector<std::vector<std::string>> runs;
        for (const char* threads : {"1", "1", "2", "4"}) {
            runs.push_back({"analyze", fasta, "--format", format, "--seed", "21", "--threads", threads});
        }
        o.require(same(runs), std::string("analyze ") + format + " identical");
    }
    for (const auto& cfg : {study, power}) {
        std::vector<std::vector<std::string>> runs;
        for (const char* threads : {"1", "1", "3"}) runs.push_back({"simulate", cfg, "--format", "json", "--threads", threads});
        o.require(same(runs), "simulate " + fs::path(cfg).filename().string() + " identical");
    }
    o.note(std::to_string(compared) + " runs byte-compared across thread counts 1-4");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::fprintf(stderr, "usage: acceptance [--only ACn]\n");
            return 2;
        }
    }

    const std::vector<Criterion> criteria = {
        {"AC1", "five-gene table reproduction", 1.0, ac1},
        {"AC2", "frequency-shift diagnostics", 1.0, ac2},
        {"AC3", "p-value arithmetic", 0.0, ac3},
        {"AC4", "closed forms vs enumeration", 60.0, ac4},
        {"AC5", "decomposition identity", 0.0, ac5},
        {"AC6", "degeneracy iff", 0.0, ac6},
        {"AC7", "jackknife", 300.0, ac7},
        {"AC8", "CLT study", 600.0, ac8},
        {"AC9", "rate study", 0.0, ac9},
        {"AC10", "size and power", 600.0, ac10},
        {"AC11", "determinism", 0.0, ac11},
    };

    int failures = 0;
    int ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && c.id != only) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.note(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
            o.pass = false;
            o.note("runtime limit " + fmt("%.0f", c.time_limit_s) + " s exceeded");
        }
        std::printf("%-4s %s  %s: %s [%.2f s]\n", c.id.c_str(), o.pass ? "PASS" : "FAIL", c.title.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion named %s\n", only.c_str());
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
