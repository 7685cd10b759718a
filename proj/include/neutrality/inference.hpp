#pragma once

// The neutrality test built on T2: the null value theta0, the jackknife
// variance of T2, the standardized statistic T_n and its p-value, plus the
// Tajima's D bootstrap and the segregating/non-segregating frequency shift.
//
// Scaling of T_n. With T2 in per-site-pair units,
//   T_n = sqrt(nK) (T2 - theta0) / sqrt(V),   V = nK * Var^(T2),
// i.e. V is the variance of T2 on the sqrt(nK) scale, so T_n reduces to
// (T2 - theta0) / sd^(T2) and is N(0,1) under H0. Putting the raw Var(T2)
// under the root instead would inflate T_n by sqrt(nK).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neutrality/alignment.hpp"
#include "neutrality/estimators.hpp"
#include "neutrality/normal.hpp"
#include "neutrality/site_model.hpp"

namespace neutrality {

class InferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Null value

enum class Theta0Mode { PooledNonSegregating, SitewiseNonSegregating, UserSupplied };

std::string_view to_string(Theta0Mode m) noexcept;

struct NullSpec {
    double theta0 = 0.0;
    Theta0Mode mode = Theta0Mode::PooledNonSegregating;
    std::size_t source_sites = 0;     // |N|, non-segregating sites used
    std::vector<double> frequencies;  // pooled frequencies (pooled mode only)
    std::string warning;
};

/// Data-driven modes need at least one non-segregating site.
NullSpec theta0(const Alignment& a, Theta0Mode mode);
NullSpec user_null(double theta0);

/// Gini-Simpson index 1 - sum_c p_c^2.
double gini_simpson(std::span<const double> p);

// ---------------------------------------------------------------------------
// Pairwise differences and the jackknife

/// Symmetric n x n matrix of per-pair difference counts (row-major).
std::vector<std::uint32_t> pair_difference_matrix(const Alignment& a);

/// Raw jackknife sums of D_{i1 i2} D_{i3 i4} (difference counts, not fractions)
/// over ordered pairs of unordered index pairs {i1<i2}, {i3<i4} that share
/// exactly c indices. Exact integers.
__extension__ typedef unsigned __int128 UInt128;
__extension__ typedef __int128 Int128;

struct JackknifeSums {
    UInt128 s0 = 0;
    UInt128 s1 = 0;
    UInt128 s2 = 0;
};

JackknifeSums jackknife_sums(const Alignment& a);
JackknifeSums jackknife_sums(std::span<const std::uint32_t> pair_matrix, std::size_t n);

double to_double(UInt128 v) noexcept;

struct JackknifeEstimate {
    double value = 0.0;         // closed form from S_0, S_1, S_2
    double oracle_value = 0.0;  // delete-one pseudo-value variance, always >= 0
    int m = 2;
    bool negative = false;
    double relative_deviation = 0.0;  // |value - oracle| / oracle (0 when oracle = 0)
};

/// Jackknife estimate of Var(T2), T2 per site and pair.
///   value = n^2 (n-1) C(n-1,2)^-2 sum_c (c n - 4) S_c, S_c normalized by n^4 K^2.
/// The n^-4 K^-2 normalization makes the closed form coincide with the
/// delete-one jackknife. Needs n >= 5.
JackknifeEstimate jackknife_var_t2(const Alignment& a);
JackknifeEstimate jackknife_var_t2(const Alignment& a, std::span<const std::uint32_t> pair_matrix);

/// Delete-one jackknife variance of T2 computed from column counts only.
double delete_one_jackknife_var_t2(const Alignment& a);

// ---------------------------------------------------------------------------
// The test

/// T_n = sqrt(nK)(T2 - theta0)/sqrt(nK var_t2). Throws on nonpositive variance.
double tn_statistic(double t2, double theta0, double var_t2, std::size_t n, std::size_t k);

double frequency_shift(std::span<const double> segregating, std::span<const double> non_segregating);
/// Gini-Simpson of pooled segregating minus pooled non-segregating frequencies.
double frequency_shift(const Alignment& a);

// ---------------------------------------------------------------------------
// Tajima's D bootstrap

struct BootstrapResult {
    double observed = 0.0;
    double p_value = 1.0;
    double center = 0.0;            // mean of defined replicates
    std::size_t replicates = 0;
    std::size_t undefined = 0;      // replicates with S = 0
    bool degenerate = false;        // every defined replicate identical
    std::uint64_t seed = 0;
    static constexpr std::string_view scheme = "site-columns-with-replacement";
    static constexpr std::string_view centering = "replicates-minus-bootstrap-mean";
};

/// Resamples the K columns with replacement B times and recomputes D. The
/// p-value is the fraction of replicates with |D* - mean(D*)| >= |D_obs|.
BootstrapResult bootstrap_d(const Alignment& a, std::size_t b, std::uint64_t seed, unsigned threads = 1,
                            ThetaSquaredPlugin plugin = ThetaSquaredPlugin::Unbiased);

// ---------------------------------------------------------------------------
// Full analysis

enum class VarianceSource { Jackknife, Model };
enum class KMode { AllSites, SegregatingOnly };

std::string_view to_string(VarianceSource v) noexcept;
std::string_view to_string(KMode k) noexcept;

struct AnalysisConfig {
    T2Normalization t2_mode = T2Normalization::PerSitePerPair;  // headline T2 in the TSV line
    Theta0Mode theta0_mode = Theta0Mode::PooledNonSegregating;
    double theta0_value = 0.0;  // UserSupplied only
    VarianceSource variance = VarianceSource::Jackknife;
    std::shared_ptr<const SiteModel> variance_model;  // VarianceSource::Model only
    std::string variance_model_label;
    KMode k_mode = KMode::AllSites;
    Sidedness sided = Sidedness::Two;
    double alpha = 0.05;
    std::size_t bootstrap_b = 1000;  // 0 disables the bootstrap
    std::uint64_t seed = 1;
    unsigned threads = 1;
    ThetaSquaredPlugin theta_sq_plugin = ThetaSquaredPlugin::Unbiased;
};

struct EstimatorBlock {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t segregating = 0;
    std::size_t singletons = 0;
    std::vector<std::size_t> singleton_sites;  // 1-based original indices
    std::vector<std::uint64_t> pair_diff_counts;
    std::uint64_t total_pair_diffs = 0;
    HarmonicCoefficients harmonic;
    double t1 = 0.0;
    double t2_per_pair = 0.0;
    double t2_per_site_pair = 0.0;
    std::optional<double> t2_per_segregating;
    double t3 = 0.0;
};

struct TestBlock {
    bool defined = false;
    std::string reason;
    double t2 = 0.0;  // per site and pair over the K used
    std::size_t k_used = 0;
    std::optional<NullSpec> null;
    std::optional<JackknifeEstimate> jackknife;
    double var_t2 = 0.0;
    double var_t2_scaled = 0.0;  // nK * var_t2
    double t_n = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

struct NeutralityReport {
    AnalysisConfig config;
    std::string input_label;
    std::size_t input_columns = 0;
    std::size_t masked_columns = 0;
    EstimatorBlock estimators;
    TajimaResult tajima;
    std::optional<BootstrapResult> bootstrap;
    TestBlock test;
    std::optional<double> frequency_shift;
    std::string frequency_shift_reason;
};

NeutralityReport analyze(const Alignment& a, const AnalysisConfig& config, std::string input_label = "");

}  // namespace neutrality
