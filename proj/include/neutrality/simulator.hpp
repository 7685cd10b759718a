#pragma once

// Monte Carlo studies of T2 under site models: CLT checks, convergence-rate
// grids and size/power of the T_n test.
//
// Standardizations. sigma1^2 from ustat.hpp is the variance of h1 on the
// per-site-average scale, so Var(T2) ~ 4 sigma1^2 / n. Writing
// sigma1_site = sqrt(K) sigma1 for the per-site projection,
//   StandardizedT2:       sqrt(nK) (T2 - H_K) / (2 sigma1_site) = sqrt(n)(T2 - H_K)/(2 sigma1)
//   ExactStandardizedT2:  (T2 - H_K) / sqrt(exact_var_t2(model, n))
// The first is the asymptotic form (fixed K, n growing); the second removes
// the O(1/n) variance term and is the one to use when n is fixed and K grows.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neutrality/alignment.hpp"
#include "neutrality/normal.hpp"
#include "neutrality/site_model.hpp"
#include "neutrality/ustat.hpp"

namespace neutrality {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Default cap on n * K * replicates per study grid point.
inline constexpr double kDefaultMaxCells = 1e9;

/// n sequences drawn independently from the model; deterministic in seed.
Alignment sample_alignment(const SiteModel& model, std::size_t n, std::uint64_t seed);

enum class Statistic { StandardizedT2, ExactStandardizedT2, Tn, TajimaD };

std::string_view to_string(Statistic s) noexcept;
std::optional<Statistic> parse_statistic(std::string_view text) noexcept;

struct SimConfig {
    std::shared_ptr<const SiteModel> model;
    std::size_t n = 100;
    std::size_t replicates = 2000;
    std::uint64_t seed = 1;
    Statistic statistic = Statistic::StandardizedT2;
    unsigned threads = 1;
    // T_n only: null value (defaults to H_K of the model) and test settings.
    std::optional<double> theta0;
    Sidedness sided = Sidedness::Two;
    double alpha = 0.05;
    double max_cells = kDefaultMaxCells;
};

struct SimStudyResult {
    std::size_t n = 0;
    std::size_t k = 0;
    Statistic statistic = Statistic::StandardizedT2;
    std::vector<double> values;  // defined replicates, in replicate order
    std::size_t replicates = 0;
    std::size_t undefined = 0;   // replicates where the statistic does not exist
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double ks = 0.0;
    std::optional<double> rejection_rate;  // T_n only
};

/// Runs one grid point. Throws DegenerateKernelError when sigma1 = 0 for the
/// T2 standardizations.
SimStudyResult clt_study(const SimConfig& config);

enum class RateAxis { N, K };

std::string_view to_string(RateAxis a) noexcept;

struct RatePoint {
    std::size_t n = 0;
    std::size_t k = 0;
    double ks = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    std::optional<double> bound;  // berry_esseen_bound, constant 1 (n axis)
    std::optional<double> rate;   // berry_esseen_rate (K axis)
};

struct RateStudyResult {
    RateAxis axis = RateAxis::N;
    Mixing mixing = Mixing::Independent;
    std::vector<RatePoint> points;
    double loglog_slope = 0.0;  // least-squares slope of log KS on log grid value
};

/// The base config's model is re-dimensioned with with_sites() along the K axis.
RateStudyResult rate_study(const SimConfig& base, RateAxis axis, const std::vector<std::size_t>& grid,
                           Mixing mixing = Mixing::Independent);

struct PowerConfig {
    std::shared_ptr<const SiteModel> null_model;
    std::shared_ptr<const SiteModel> alternative;  // ignored in drift mode
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 2000;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    Sidedness sided = Sidedness::Two;
    unsigned threads = 1;
    /// Pitman drift: at each n the alternative is rebuilt so that
    /// H_K - theta0 = c / sqrt(nK).
    std::optional<double> drift_c;
    double max_cells = kDefaultMaxCells;
};

struct PowerPoint {
    std::size_t n = 0;
    std::size_t k = 0;
    double theta0 = 0.0;
    double h_alternative = 0.0;
    double rejection_rate = 0.0;
    std::size_t replicates = 0;
    std::size_t undefined = 0;
};

struct PowerStudyResult {
    std::vector<PowerPoint> points;
};

PowerStudyResult power_study(const PowerConfig& config);

/// Independent-sites alternative obtained by moving every marginal row of the
/// null toward uniform until H_K = target. Requires an independent null and
/// H_K(null) <= target < 1 - 1/C.
std::shared_ptr<const SiteModel> shifted_alternative(const SiteModel& null_model, double target_hk);

/// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace neutrality
