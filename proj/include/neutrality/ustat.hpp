#pragma once

// The pairwise-difference U-statistic and its Hoeffding decomposition.
//
//   phi(x1, x2) = (1/K) sum_k 1(x1k != x2k)
//   psi1(x)     = E[phi(x, X2)]       = 1 - (1/K) sum_k Pi_{x_k k}
//   h1(x)       = psi1(x) - H_K
//   h2(x1, x2)  = phi(x1, x2) - H_K - h1(x1) - h1(x2)
//
// so phi = H_K + h1(x1) + h1(x2) + h2(x1, x2) holds pointwise and both
// projections are centered. Note h1 here is the negative of the common
// textbook display (1/K) sum_k [Pi_{x_k k} - sum_c Pi_ck^2]; all even
// moments are unaffected by the sign.
//
// Moments come in two flavours: reduced closed forms that assume site
// independence, and general forms that go through the model's joint
// probabilities of two, three or four sites. `sigma1_sq`, `eh1_4` and `eh2_2`
// pick the reduced form whenever the model reports independent sites.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "neutrality/site_model.hpp"

namespace neutrality {

/// sigma1 = 0: the U-statistic is degenerate and the sqrt(n) CLT does not apply.
class DegenerateKernelError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Largest K accepted by the general (dependent-sites) fourth-moment path,
/// which costs O(K^4 C^4) joint evaluations.
inline constexpr std::size_t kGeneralFourthMomentMaxSites = 64;

double kernel_phi(std::span<const std::uint8_t> x1, std::span<const std::uint8_t> x2);
double psi1(std::span<const std::uint8_t> x, const SiteModel& model);
double h1(std::span<const std::uint8_t> x, const SiteModel& model);
double h2(std::span<const std::uint8_t> x1, std::span<const std::uint8_t> x2, const SiteModel& model);

/// H_K = E[phi] = 1 - (1/K) sum_k sum_c Pi_ck^2
double expected_hk(const SiteModel& model);

double sigma1_sq(const SiteModel& model);
double sigma1_sq_independent(const SiteModel& model);
double sigma1_sq_general(const SiteModel& model);

double eh1_4(const SiteModel& model);
double eh1_4_independent(const SiteModel& model);
double eh1_4_general(const SiteModel& model);

double eh2_2(const SiteModel& model);
double eh2_2_independent(const SiteModel& model);
double eh2_2_general(const SiteModel& model);

struct MomentSet {
    double hk = 0.0;
    double sigma1_sq = 0.0;
    std::optional<double> eh1_4;  // absent when a dependent model exceeds the order-4 site cap
    double eh2_2 = 0.0;

    /// Var(phi) = 2 sigma1^2 + E h2^2
    [[nodiscard]] double var_phi() const noexcept { return 2.0 * sigma1_sq + eh2_2; }
};

MomentSet moments(const SiteModel& model);

/// Var(T2) = [2(n-2) sigma1^2 + Var(phi)] / C(n,2)
double exact_var_t2(const MomentSet& m, std::size_t n);
double exact_var_t2(const SiteModel& model, std::size_t n);

/// constant * (sigma1^-3 (E h1^4)^{3/4} + sigma1^{-5/3} (E h2^2)^{5/6}) * n^{-1/2}
/// Absolute moments are bounded through the fourth and second moments.
double berry_esseen_bound(const MomentSet& m, std::size_t n, double constant = 1.0);
double berry_esseen_bound(const SiteModel& model, std::size_t n, double constant = 1.0);

enum class Mixing { Independent, Exponential, Polynomial };

std::string_view to_string(Mixing m) noexcept;

struct RateDescriptor {
    Mixing mixing = Mixing::Independent;
    std::optional<double> value;  // no closed form for polynomial mixing
    std::string description;
    std::string_view log_base = "natural";
};

/// K^{-1/2} (independent), K^{-1/2} log K (exponential mixing), or "slower than K^{-1/2}".
RateDescriptor berry_esseen_rate(std::size_t k, Mixing mixing);

}  // namespace neutrality
