#pragma once

// Standard normal tails, quantiles and the Kolmogorov-Smirnov distance.

#include <optional>
#include <span>
#include <string_view>

namespace neutrality {

/// P(Z <= t), via erfc so the lower tail keeps full relative precision far out.
/// Underflows to 0 below t ~ -38.5.
double normal_cdf(double t) noexcept;
/// P(Z > t)
double normal_sf(double t) noexcept;
double normal_quantile(double p);

enum class Sidedness { Left, Right, Two };

std::string_view to_string(Sidedness s) noexcept;
std::optional<Sidedness> parse_sidedness(std::string_view text) noexcept;

/// Left: P(Z <= t). Right: P(Z >= t). Two: min(1, 2 min(left, right)).
double tn_pvalue(double t, Sidedness s);

/// Critical value of the level-alpha test for the given sidedness (positive).
double critical_value(double alpha, Sidedness s);
bool rejects(double t, double alpha, Sidedness s);

/// sup_x |F_n(x) - Phi(x)| against the exact standard normal CDF. Sorts a copy.
double ks_distance_normal(std::span<const double> values);

}  // namespace neutrality
