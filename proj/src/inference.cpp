#include "neutrality/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "neutrality/parallel.hpp"
#include "neutrality/ustat.hpp"

namespace neutrality {

namespace {

using u128 = UInt128;
using i128 = Int128;

double pairs_of(std::size_t n) {
    const double nd = static_cast<double>(n);
    return nd * (nd - 1.0) / 2.0;
}

std::uint64_t uniform_index(std::uint64_t word, std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<u128>(word) * bound) >> 64);
}

}  // namespace

std::string_view to_string(Theta0Mode m) noexcept {
    switch (m) {
        case Theta0Mode::PooledNonSegregating: return "pooled";
        case Theta0Mode::SitewiseNonSegregating: return "sitewise";
        case Theta0Mode::UserSupplied: return "value";
    }
    return "?";
}

std::string_view to_string(VarianceSource v) noexcept {
    return v == VarianceSource::Jackknife ? "jackknife" : "model";
}

std::string_view to_string(KMode k) noexcept { return k == KMode::AllSites ? "all" : "segregating"; }

double gini_simpson(std::span<const double> p) {
    double sq = 0.0;
    for (double v : p) sq += v * v;
    return 1.0 - sq;
}

NullSpec theta0(const Alignment& a, Theta0Mode mode) {
    if (mode == Theta0Mode::UserSupplied) throw InferenceError("user-supplied theta0 needs a value; use user_null");
    const auto classes = classify_sites(a);
    const auto ns = classes.non_segregating_sites();
    if (ns.empty()) throw InferenceError("theta0 needs at least one non-segregating site");
    NullSpec spec;
    spec.mode = mode;
    spec.source_sites = ns.size();
    if (mode == Theta0Mode::PooledNonSegregating) {
        auto pooled = pooled_frequencies(a, ns);
        spec.theta0 = gini_simpson(pooled.probabilities);
        spec.frequencies = std::move(pooled.probabilities);
        return spec;
    }
    // Per-site plug-ins on non-segregating columns are degenerate, so every
    // column contributes sum_c Pi^2 = 1.
    const auto table = sitewise_frequencies(a, ns);
    double sum = 0.0;
    for (std::size_t r = 0; r < ns.size(); ++r) sum += gini_simpson(table.site(r));
    spec.theta0 = sum / static_cast<double>(ns.size());
    spec.warning = "sitewise plug-in frequencies are degenerate on non-segregating sites, theta0 = 0";
    return spec;
}

NullSpec user_null(double value) {
    if (!(value >= 0.0 && value <= 1.0)) throw InferenceError("theta0 must lie in [0, 1]");
    NullSpec spec;
    spec.theta0 = value;
    spec.mode = Theta0Mode::UserSupplied;
    return spec;
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> pair_difference_matrix(const Alignment& a) {
    const std::size_t n = a.sequences();
    const std::size_t k = a.sites();
    const std::size_t words = (k + 63) / 64;
    int planes = 1;
    while ((1 << planes) < a.categories()) ++planes;

    // Bit plane p of row i holds bit p of every code in the row.
    std::vector<std::uint64_t> bits(n * static_cast<std::size_t>(planes) * words, 0);
    const auto plane = [&](std::size_t i, int p) {
        return bits.data() + (i * static_cast<std::size_t>(planes) + static_cast<std::size_t>(p)) * words;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = a.row(i);
        for (int p = 0; p < planes; ++p) {
            std::uint64_t* dst = plane(i, p);
            for (std::size_t s = 0; s < k; ++s) {
                if ((row[s] >> p) & 1U) dst[s / 64] |= std::uint64_t{1} << (s % 64);
            }
        }
    }

    std::vector<std::uint32_t> d(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            std::uint32_t count = 0;
            for (std::size_t w = 0; w < words; ++w) {
                std::uint64_t diff = 0;
                for (int p = 0; p < planes; ++p) diff |= plane(i, p)[w] ^ plane(j, p)[w];
                count += static_cast<std::uint32_t>(std::popcount(diff));
            }
            d[i * n + j] = count;
            d[j * n + i] = count;
        }
    }
    return d;
}

JackknifeSums jackknife_sums(std::span<const std::uint32_t> d, std::size_t n) {
    if (d.size() != n * n) throw InferenceError("pair matrix must be n x n");
    u128 q2 = 0;      // sum_{i<j} D_ij^2
    u128 total = 0;   // sum_{i<j} D_ij
    u128 row_sq = 0;  // sum_i R_i^2
    for (std::size_t i = 0; i < n; ++i) {
        u128 r = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const u128 v = d[i * n + j];
            r += v;
            if (j > i) {
                q2 += v * v;
                total += v;
            }
        }
        row_sq += r * r;
    }
    // sum_i R_i^2 counts every pair twice on the diagonal and every
    // one-shared-index couple twice; T^2 covers all ordered couples.
    const u128 q1 = (row_sq - 2 * q2) / 2;
    const u128 q0 = (total * total - q2 - 2 * q1) / 2;
    return {2 * q0, 2 * q1, q2};
}

JackknifeSums jackknife_sums(const Alignment& a) {
    return jackknife_sums(pair_difference_matrix(a), a.sequences());
}

double to_double(UInt128 v) noexcept { return static_cast<double>(static_cast<long double>(v)); }

double delete_one_jackknife_var_t2(const Alignment& a) {
    const std::size_t n = a.sequences();
    if (n < 3) throw InferenceError("delete-one jackknife needs n >= 3");
    // R_i = differences between sequence i and all others = sum_k (n - n_{k, x_ik}).
    std::vector<std::uint64_t> r(n, 0);
    for (std::size_t k = 0; k < a.sites(); ++k) {
        const auto counts = a.counts(k);
        for (std::size_t i = 0; i < n; ++i) r[i] += n - counts[a.at(i, k)];
    }
    u128 sum = 0;
    u128 sum_sq = 0;
    for (auto v : r) {
        sum += v;
        sum_sq += static_cast<u128>(v) * v;
    }
    // Leave-one-out T2 differs from its mean by -(R_i - mean R) / (K C(n-1,2)).
    const u128 spread = static_cast<u128>(n) * sum_sq - sum * sum;  // n^2 * sum (R_i - mean)^2 / n
    const long double nd = static_cast<long double>(n);
    const long double scale = static_cast<long double>(a.sites()) * (nd - 1.0L) * (nd - 2.0L) / 2.0L;
    const long double ss = static_cast<long double>(spread) / nd;
    return static_cast<double>((nd - 1.0L) / nd * ss / (scale * scale));
}

JackknifeEstimate jackknife_var_t2(const Alignment& a, std::span<const std::uint32_t> pair_matrix) {
    const std::size_t n = a.sequences();
    if (n < 5) throw InferenceError("jackknife variance needs n >= 5 (got n = " + std::to_string(n) + ")");
    const auto s = jackknife_sums(pair_matrix, n);
    const i128 nn = static_cast<i128>(n);
    const i128 num = (nn - 4) * static_cast<i128>(s.s1) + (2 * nn - 4) * static_cast<i128>(s.s2) -
                     4 * static_cast<i128>(s.s0);
    const long double nd = static_cast<long double>(n);
    const long double kd = static_cast<long double>(a.sites());
    const long double binom = (nd - 1.0L) * (nd - 2.0L) / 2.0L;
    JackknifeEstimate est;
    est.value = static_cast<double>((nd - 1.0L) * static_cast<long double>(num) / (binom * binom * nd * nd * kd * kd));
    est.oracle_value = delete_one_jackknife_var_t2(a);
    est.negative = est.value < 0.0;
    est.relative_deviation = est.oracle_value > 0.0 ? std::abs(est.value - est.oracle_value) / est.oracle_value : 0.0;
    return est;
}

JackknifeEstimate jackknife_var_t2(const Alignment& a) {
    if (a.sequences() < 5) {
        throw InferenceError("jackknife variance needs n >= 5 (got n = " + std::to_string(a.sequences()) + ")");
    }
    return jackknife_var_t2(a, pair_difference_matrix(a));
}

// ---------------------------------------------------------------------------

double tn_statistic(double t2, double theta0, double var_t2, std::size_t n, std::size_t k) {
    if (!(var_t2 > 0.0) || !std::isfinite(var_t2)) {
        throw InferenceError("variance of T2 is not positive; the test is undefined");
    }
    const double scale = static_cast<double>(n) * static_cast<double>(k);
    return std::sqrt(scale) * (t2 - theta0) / std::sqrt(scale * var_t2);
}

double frequency_shift(std::span<const double> segregating, std::span<const double> non_segregating) {
    if (segregating.size() != non_segregating.size()) throw InferenceError("frequency vectors differ in length");
    return gini_simpson(segregating) - gini_simpson(non_segregating);
}

double frequency_shift(const Alignment& a) {
    const auto classes = classify_sites(a);
    const auto seg = classes.segregating_sites();
    const auto ns = classes.non_segregating_sites();
    if (seg.empty()) throw InferenceError("frequency shift needs segregating sites (S = 0)");
    if (ns.empty()) throw InferenceError("frequency shift needs non-segregating sites");
    return frequency_shift(pooled_frequencies(a, seg).probabilities, pooled_frequencies(a, ns).probabilities);
}

// ---------------------------------------------------------------------------

BootstrapResult bootstrap_d(const Alignment& a, std::size_t b, std::uint64_t seed, unsigned threads,
                            ThetaSquaredPlugin plugin) {
    if (b < 100) throw InferenceError("bootstrap needs B >= 100");
    const auto observed = tajima_d(a, plugin);
    if (!observed.defined) throw InferenceError("Tajima's D is undefined: " + observed.reason);

    const std::size_t k = a.sites();
    const std::size_t n = a.sequences();
    std::vector<std::uint64_t> diffs(k);
    std::vector<std::uint8_t> seg(k);
    for (std::size_t s = 0; s < k; ++s) {
        diffs[s] = pair_diff_count_from_counts(a.counts(s));
        seg[s] = diffs[s] > 0;
    }

    std::vector<double> values(b, 0.0);
    std::vector<std::uint8_t> defined(b, 0);
    parallel_for(b, threads, [&](std::size_t rep) {
        std::mt19937_64 rng(derive_seed(seed, rep));
        std::uint64_t total = 0;
        std::size_t s_count = 0;
        for (std::size_t s = 0; s < k; ++s) {
            const auto pick = uniform_index(rng(), k);
            total += diffs[pick];
            s_count += seg[pick];
        }
        const auto r = tajima_d_from_summaries(total, s_count, n, plugin);
        if (r.defined) {
            values[rep] = r.d;
            defined[rep] = 1;
        }
    });

    BootstrapResult out;
    out.observed = observed.d;
    out.replicates = b;
    out.seed = seed;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < b; ++i) {
        if (!defined[i]) continue;
        sum += values[i];
        ++used;
    }
    out.undefined = b - used;
    if (used == 0) {
        out.degenerate = true;
        out.p_value = 1.0;
        return out;
    }
    out.center = sum / static_cast<double>(used);
    double lo = 0.0;
    double hi = 0.0;
    bool first = true;
    std::size_t extreme = 0;
    for (std::size_t i = 0; i < b; ++i) {
        if (!defined[i]) continue;
        if (first) {
            lo = hi = values[i];
            first = false;
        }
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
        if (std::abs(values[i] - out.center) >= std::abs(out.observed)) ++extreme;
    }
    if (lo == hi) {
        out.degenerate = true;
        out.p_value = 1.0;
        return out;
    }
    out.p_value = static_cast<double>(extreme) / static_cast<double>(used);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

EstimatorBlock estimator_block(const Alignment& a, const SiteClassification& classes) {
    EstimatorBlock e;
    e.n = a.sequences();
    e.k = a.sites();
    e.segregating = classes.segregating;
    e.singletons = classes.singletons;
    for (auto s : classes.sites_of(SiteClass::SingletonSegregating)) e.singleton_sites.push_back(a.original_index(s));
    e.pair_diff_counts.reserve(a.sites());
    for (std::size_t k = 0; k < a.sites(); ++k) {
        e.pair_diff_counts.push_back(site_pair_diff_count(a, k));
        e.total_pair_diffs += e.pair_diff_counts.back();
    }
    e.harmonic = harmonic_coefficients(e.n);
    e.t1 = t1_watterson(e.segregating, e.n);
    e.t2_per_pair = static_cast<double>(e.total_pair_diffs) / pairs_of(e.n);
    e.t2_per_site_pair = e.t2_per_pair / static_cast<double>(e.k);
    if (e.segregating > 0) e.t2_per_segregating = static_cast<double>(e.total_pair_diffs) / static_cast<double>(e.segregating);
    e.t3 = t3_singleton(e.singletons, e.n);
    return e;
}

void run_test(const Alignment& a, const SiteClassification& classes, const AnalysisConfig& cfg, TestBlock& test) {
    test.null = cfg.theta0_mode == Theta0Mode::UserSupplied ? user_null(cfg.theta0_value) : theta0(a, cfg.theta0_mode);

    const Alignment* used = &a;
    std::optional<Alignment> restricted;
    if (cfg.k_mode == KMode::SegregatingOnly) {
        const auto seg = classes.segregating_sites();
        if (seg.empty()) throw InferenceError("no segregating sites (S = 0)");
        restricted = a.select_sites(seg);
        used = &*restricted;
    }
    const std::size_t n = used->sequences();
    test.k_used = used->sites();
    test.t2 = t2(*used, T2Normalization::PerSitePerPair).value;

    if (cfg.variance == VarianceSource::Jackknife) {
        test.jackknife = jackknife_var_t2(*used);
        test.var_t2 = test.jackknife->value;
    } else {
        if (!cfg.variance_model) throw InferenceError("model variance requested without a model");
        if (cfg.variance_model->sites() != test.k_used) {
            throw std::invalid_argument("variance model has K = " + std::to_string(cfg.variance_model->sites()) +
                                        " but the test uses K = " + std::to_string(test.k_used));
        }
        if (cfg.variance_model->categories() != used->categories()) {
            throw std::invalid_argument("variance model category count does not match the alignment");
        }
        test.var_t2 = exact_var_t2(*cfg.variance_model, n);
    }
    test.var_t2_scaled = static_cast<double>(n) * static_cast<double>(test.k_used) * test.var_t2;
    if (!(test.var_t2 > 0.0)) {
        throw InferenceError(test.var_t2 < 0.0 ? "jackknife variance is negative; the test is undefined"
                                               : "variance of T2 is zero (monomorphic data); the test is undefined");
    }
    test.t_n = tn_statistic(test.t2, test.null->theta0, test.var_t2, n, test.k_used);
    test.p_value = tn_pvalue(test.t_n, cfg.sided);
    test.reject = test.p_value < cfg.alpha;
    test.defined = true;
}

}  // namespace

NeutralityReport analyze(const Alignment& a, const AnalysisConfig& config, std::string input_label) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
    NeutralityReport r;
    r.config = config;
    r.input_label = std::move(input_label);
    r.input_columns = a.input_columns();
    r.masked_columns = a.masked_columns();

    const auto classes = classify_sites(a);
    r.estimators = estimator_block(a, classes);
    r.tajima = tajima_d(a, config.theta_sq_plugin);
    if (config.bootstrap_b > 0 && r.tajima.defined) {
        r.bootstrap = bootstrap_d(a, config.bootstrap_b, config.seed, config.threads, config.theta_sq_plugin);
    }

    try {
        run_test(a, classes, config, r.test);
    } catch (const InferenceError& e) {
        r.test.defined = false;
        r.test.reason = e.what();
    }

    try {
        r.frequency_shift = frequency_shift(a);
    } catch (const InferenceError& e) {
        r.frequency_shift_reason = e.what();
    }
    return r;
}

}  // namespace neutrality
