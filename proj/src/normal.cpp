#include "neutrality/normal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace neutrality {

double normal_cdf(double t) noexcept { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

double normal_sf(double t) noexcept { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

std::string_view to_string(Sidedness s) noexcept {
    switch (s) {
        case Sidedness::Left: return "left";
        case Sidedness::Right: return "right";
        case Sidedness::Two: return "two";
    }
    return "?";
}

std::optional<Sidedness> parse_sidedness(std::string_view text) noexcept {
    if (text == "left") return Sidedness::Left;
    if (text == "right") return Sidedness::Right;
    if (text == "two") return Sidedness::Two;
    return std::nullopt;
}

double tn_pvalue(double t, Sidedness s) {
    if (!std::isfinite(t)) throw std::domain_error("tn_pvalue needs a finite statistic");
    switch (s) {
        case Sidedness::Left: return normal_cdf(t);
        case Sidedness::Right: return normal_sf(t);
        case Sidedness::Two: return std::min(1.0, 2.0 * std::min(normal_cdf(t), normal_sf(t)));
    }
    return 1.0;
}

double critical_value(double alpha, Sidedness s) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must be in (0, 1)");
    return normal_quantile(1.0 - (s == Sidedness::Two ? alpha / 2.0 : alpha));
}

bool rejects(double t, double alpha, Sidedness s) { return tn_pvalue(t, s) < alpha; }

double ks_distance_normal(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("ks_distance_normal needs at least one value");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf(x[i]);
        d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
    }
    return std::min(d, 1.0);
}

}  // namespace neutrality
