#include "neutrality/estimators.hpp"

#include <cmath>

namespace neutrality {

std::string_view to_string(T2Normalization mode) noexcept {
    switch (mode) {
        case T2Normalization::PerSitePerPair: return "per-site-pair";
        case T2Normalization::PerPair: return "per-pair";
        case T2Normalization::PerSegregatingSite: return "per-segregating";
    }
    return "?";
}

std::optional<T2Normalization> parse_t2_normalization(std::string_view text) noexcept {
    if (text == "per-site-pair") return T2Normalization::PerSitePerPair;
    if (text == "per-pair") return T2Normalization::PerPair;
    if (text == "per-segregating") return T2Normalization::PerSegregatingSite;
    return std::nullopt;
}

std::string_view to_string(ThetaSquaredPlugin p) noexcept {
    return p == ThetaSquaredPlugin::Unbiased ? "unbiased" : "literal";
}

double hamming_fraction(const Alignment& a, std::size_t i, std::size_t j) {
    if (i >= a.sequences() || j >= a.sequences()) throw EstimatorError("sequence index out of range");
    if (i == j) throw EstimatorError("hamming_fraction is defined on distinct pairs only");
    const auto x = a.row(i);
    const auto y = a.row(j);
    std::size_t diff = 0;
    for (std::size_t k = 0; k < x.size(); ++k) diff += x[k] != y[k];
    return static_cast<double>(diff) / static_cast<double>(a.sites());
}

T2Value t2(const Alignment& a, T2Normalization mode) {
    const double total = static_cast<double>(total_pair_differences(a));
    const double n = static_cast<double>(a.sequences());
    const double pairs = n * (n - 1.0) / 2.0;
    switch (mode) {
        case T2Normalization::PerSitePerPair:
            return {total / (static_cast<double>(a.sites()) * pairs), mode};
        case T2Normalization::PerPair:
            return {total / pairs, mode};
        case T2Normalization::PerSegregatingSite: {
            const auto s = classify_sites(a).segregating;
            if (s == 0) throw EstimatorError("T2 per segregating site is undefined when S = 0");
            return {total / static_cast<double>(s), mode};
        }
    }
    return {};
}

HarmonicCoefficients harmonic_coefficients(std::size_t n) {
    if (n < 2) throw EstimatorError("harmonic coefficients need n >= 2");
    HarmonicCoefficients h;
    for (std::size_t j = 1; j < n; ++j) {
        const double jd = static_cast<double>(j);
        h.a_n += 1.0 / jd;
        h.b_n += 1.0 / (jd * jd);
    }
    return h;
}

double t1_watterson(std::size_t segregating, std::size_t n) {
    return static_cast<double>(segregating) / harmonic_coefficients(n).a_n;
}

double t3_singleton(std::size_t singletons, std::size_t n) {
    if (n < 2) throw EstimatorError("T3 needs n >= 2");
    const double nd = static_cast<double>(n);
    return (nd - 1.0) / nd * static_cast<double>(singletons);
}

double tajima_var_d1(double theta, double theta_sq, std::size_t n) {
    if (theta < 0.0 || theta_sq < 0.0) throw EstimatorError("theta plug-ins must be nonnegative");
    const auto h = harmonic_coefficients(n);
    const double nd = static_cast<double>(n);
    const double linear = (nd + 1.0) / (3.0 * (nd - 1.0));
    const double quadratic = 2.0 * (nd * nd + nd + 3.0) / (9.0 * nd * (nd - 1.0)) - (nd + 2.0) / (h.a_n * nd) +
                             h.b_n / (h.a_n * h.a_n);
    return linear * theta + quadratic * theta_sq;
}

TajimaResult tajima_d_from_summaries(std::uint64_t total_pair_diffs, std::size_t segregating, std::size_t n,
                                     ThetaSquaredPlugin plugin) {
    TajimaResult r;
    r.segregating = segregating;
    if (segregating == 0) {
        r.reason = "no polymorphism (S = 0)";
        return r;
    }
    const auto h = harmonic_coefficients(n);
    const double s = static_cast<double>(segregating);
    const double nd = static_cast<double>(n);
    const double t2_per_pair = static_cast<double>(total_pair_diffs) / (nd * (nd - 1.0) / 2.0);
    r.theta = s / h.a_n;
    r.theta_sq = plugin == ThetaSquaredPlugin::Unbiased ? s * (s - 1.0) / (h.a_n * h.a_n + h.b_n)
                                                        : r.theta * r.theta;
    r.d1 = t2_per_pair - r.theta;
    r.var_d1 = tajima_var_d1(r.theta, r.theta_sq, n);
    if (!(r.var_d1 > 0.0)) {
        r.reason = "Var(D1) plug-in is not positive";
        return r;
    }
    r.d = r.d1 / std::sqrt(r.var_d1);
    r.defined = true;
    return r;
}

TajimaResult tajima_d(const Alignment& a, ThetaSquaredPlugin plugin) {
    return tajima_d_from_summaries(total_pair_differences(a), classify_sites(a).segregating, a.sequences(),
                                   plugin);
}

}  // namespace neutrality
