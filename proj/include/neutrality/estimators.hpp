#pragma once

// Classical estimators of the mutation parameter and Tajima's D.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "neutrality/alignment.hpp"

namespace neutrality {

class EstimatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pairwise-difference estimator normalizations.
///   PerSitePerPair      total / (K * C(n,2)); the U-statistic used by the T_n test.
///   PerPair             total / C(n,2); the usual nucleotide diversity (used in D1).
///   PerSegregatingSite  total / S; matches the worked Table 1 value 79/16.
enum class T2Normalization { PerSitePerPair, PerPair, PerSegregatingSite };

std::string_view to_string(T2Normalization mode) noexcept;
std::optional<T2Normalization> parse_t2_normalization(std::string_view text) noexcept;

struct T2Value {
    double value = 0.0;
    T2Normalization normalization = T2Normalization::PerSitePerPair;
};

/// Proportion of sites where sequences i and j differ.
double hamming_fraction(const Alignment& a, std::size_t i, std::size_t j);

T2Value t2(const Alignment& a, T2Normalization mode);

struct HarmonicCoefficients {
    double a_n = 0.0;  // sum_{j<n} 1/j
    double b_n = 0.0;  // sum_{j<n} 1/j^2
};

HarmonicCoefficients harmonic_coefficients(std::size_t n);

/// Watterson's estimator S / a_n.
double t1_watterson(std::size_t segregating, std::size_t n);

/// Singleton-based estimator, convention (n-1)/n * S*. Descriptive only.
double t3_singleton(std::size_t singletons, std::size_t n);
inline constexpr std::string_view kT3Convention = "(n-1)/n * S_star";

/// Var(D1) ~ (n+1)/(3(n-1)) theta + [2(n^2+n+3)/(9n(n-1)) - (n+2)/(a_n n) + b_n/a_n^2] theta^2,
/// evaluated exactly as written with caller-supplied theta and theta^2.
double tajima_var_d1(double theta, double theta_sq, std::size_t n);

/// How theta^2 is plugged into Var(D1).
///   Unbiased  S(S-1) / (a_n^2 + b_n)
///   Literal   (S / a_n)^2
enum class ThetaSquaredPlugin { Unbiased, Literal };

std::string_view to_string(ThetaSquaredPlugin p) noexcept;

struct TajimaResult {
    bool defined = false;
    std::string reason;  // why D is undefined, empty otherwise
    std::size_t segregating = 0;
    double theta = 0.0;
    double theta_sq = 0.0;
    double d1 = 0.0;
    double var_d1 = 0.0;
    double d = 0.0;
};

/// D1 = T2(PerPair) - T1; D = D1 / sqrt(Var(D1)).
TajimaResult tajima_d(const Alignment& a, ThetaSquaredPlugin plugin = ThetaSquaredPlugin::Unbiased);

/// Same, from the sufficient summaries (total pair differences, S, n).
TajimaResult tajima_d_from_summaries(std::uint64_t total_pair_diffs, std::size_t segregating, std::size_t n,
                                     ThetaSquaredPlugin plugin = ThetaSquaredPlugin::Unbiased);

}  // namespace neutrality
