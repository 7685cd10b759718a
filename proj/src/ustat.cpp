#include "neutrality/ustat.hpp"

#include <cmath>
#include <vector>

#include "compensated_sum.hpp"

namespace neutrality {

using detail::CompensatedSum;

namespace {

void check_sequence(std::span<const std::uint8_t> x, const SiteModel& model) {
    if (x.size() != model.sites()) {
        throw ModelError("sequence length " + std::to_string(x.size()) + " does not match model K = " +
                         std::to_string(model.sites()));
    }
    for (auto code : x) {
        if (code >= model.categories()) throw ModelError("category code out of range for model");
    }
}

// Per-site quantities shared by every moment formula:
//   s_k  = sum_c Pi_ck^2
//   a_ck = Pi_ck - s_k      (centered value of Pi_{X_k k})
struct SiteTerms {
    std::size_t k = 0;
    std::size_t c = 0;
    std::vector<double> pi;  // K x C
    std::vector<double> s;
    std::vector<double> a;   // K x C
    std::vector<bool> flat;  // uniform or degenerate column: Pi_{X_k k} is constant

    explicit SiteTerms(const SiteModel& model)
        : k(model.sites()), c(static_cast<std::size_t>(model.categories())), pi(k * c), s(k), a(k * c), flat(k) {
        for (std::size_t site = 0; site < k; ++site) {
            CompensatedSum sq;
            bool uniform = true;
            bool degenerate = false;
            for (std::size_t cat = 0; cat < c; ++cat) {
                const double p = model.marginal(site, static_cast<int>(cat));
                pi[site * c + cat] = p;
                sq += p * p;
                if (p != pi[site * c]) uniform = false;
                if (p == 1.0) degenerate = true;
            }
            s[site] = sq.value();
            flat[site] = uniform || degenerate;
            for (std::size_t cat = 0; cat < c; ++cat) {
                a[site * c + cat] = flat[site] ? 0.0 : pi[site * c + cat] - s[site];
            }
        }
    }

    [[nodiscard]] double p(std::size_t site, std::size_t cat) const noexcept { return pi[site * c + cat]; }
    [[nodiscard]] double centered(std::size_t site, std::size_t cat) const noexcept { return a[site * c + cat]; }

    // E[a_{X_k k}^power]
    [[nodiscard]] double central_moment(std::size_t site, int power) const noexcept {
        CompensatedSum m;
        for (std::size_t cat = 0; cat < c; ++cat) m += p(site, cat) * std::pow(centered(site, cat), power);
        return m.value();
    }
};

double k_double(const SiteModel& model) { return static_cast<double>(model.sites()); }

}  // namespace

double kernel_phi(std::span<const std::uint8_t> x1, std::span<const std::uint8_t> x2) {
    if (x1.size() != x2.size()) throw std::invalid_argument("kernel_phi: sequences differ in length");
    if (x1.empty()) throw std::invalid_argument("kernel_phi: empty sequences");
    std::size_t diff = 0;
    for (std::size_t k = 0; k < x1.size(); ++k) diff += x1[k] != x2[k];
    return static_cast<double>(diff) / static_cast<double>(x1.size());
}

double psi1(std::span<const std::uint8_t> x, const SiteModel& model) {
    check_sequence(x, model);
    CompensatedSum sum;
    for (std::size_t k = 0; k < x.size(); ++k) sum += model.marginal(k, x[k]);
    return 1.0 - sum.value() / k_double(model);
}

double h1(std::span<const std::uint8_t> x, const SiteModel& model) {
    return psi1(x, model) - expected_hk(model);
}

double h2(std::span<const std::uint8_t> x1, std::span<const std::uint8_t> x2, const SiteModel& model) {
    check_sequence(x1, model);
    check_sequence(x2, model);
    const double hk = expected_hk(model);
    return kernel_phi(x1, x2) - hk - (psi1(x1, model) - hk) - (psi1(x2, model) - hk);
}

double expected_hk(const SiteModel& model) {
    CompensatedSum sum;
    for (std::size_t k = 0; k < model.sites(); ++k) {
        for (int c = 0; c < model.categories(); ++c) {
            const double p = model.marginal(k, c);
            sum += p * p;
        }
    }
    return 1.0 - sum.value() / k_double(model);
}

// ---------------------------------------------------------------------------
// sigma1^2 = E h1^2

double sigma1_sq_independent(const SiteModel& model) {
    const SiteTerms t(model);
    CompensatedSum sum;
    // sum_c Pi^3 - (sum_c Pi^2)^2, written as E[a^2] so it cannot go negative.
    for (std::size_t k = 0; k < t.k; ++k) sum += t.central_moment(k, 2);
    const double kd = k_double(model);
    return sum.value() / (kd * kd);
}

double sigma1_sq_general(const SiteModel& model) {
    const SiteTerms t(model);
    CompensatedSum diag;
    for (std::size_t k = 0; k < t.k; ++k) {
        for (std::size_t c = 0; c < t.c; ++c) diag += t.p(k, c) * t.p(k, c) * t.p(k, c);
        for (std::size_t c = 0; c < t.c; ++c) {
            for (std::size_t d = 0; d < t.c; ++d) diag += -t.p(k, c) * t.p(k, c) * t.p(k, d) * t.p(k, d);
        }
    }
    // Cross-site covariance terms are symmetric in (k, l): sum k < l and double.
    CompensatedSum cross;
    for (std::size_t k = 0; k < t.k; ++k) {
        for (std::size_t l = k + 1; l < t.k; ++l) {
            for (std::size_t c = 0; c < t.c; ++c) {
                for (std::size_t d = 0; d < t.c; ++d) {
                    const double prod = t.p(k, c) * t.p(l, d);
                    const double j = model.joint2(k, static_cast<int>(c), l, static_cast<int>(d));
                    cross += (j - prod) * prod;
                }
            }
        }
    }
    const double kd = k_double(model);
    const double value = (diag.value() + 2.0 * cross.value()) / (kd * kd);
    return value < 0.0 ? 0.0 : value;
}

double sigma1_sq(const SiteModel& model) {
    return model.independent_sites() ? sigma1_sq_independent(model) : sigma1_sq_general(model);
}

// ---------------------------------------------------------------------------
// E h1^4

double eh1_4_independent(const SiteModel& model) {
    const SiteTerms t(model);
    CompensatedSum fourth;
    CompensatedSum second;
    CompensatedSum second_sq;
    for (std::size_t k = 0; k < t.k; ++k) {
        fourth += t.central_moment(k, 4);
        const double v = t.central_moment(k, 2);
        second += v;
        second_sq += v * v;
    }
    const double kd = k_double(model);
    const double v = second.value();
    return (fourth.value() + 3.0 * (v * v - second_sq.value())) / (kd * kd * kd * kd);
}

// Expanding E(sum_k a_k)^4 over the coincidence pattern of (k, l, m, p) gives
// the set partitions of four positions: {4} x1, {3,1} x4, {2,2} x3,
// {2,1,1} x6 and {1,1,1,1} x1, each summed over distinct ordered sites.
double eh1_4_general(const SiteModel& model) {
    if (model.sites() > kGeneralFourthMomentMaxSites) {
        throw ModelError("general fourth-moment path supports K <= " +
                         std::to_string(kGeneralFourthMomentMaxSites) + ", got K = " +
                         std::to_string(model.sites()));
    }
    const SiteTerms t(model);
    const std::size_t kk = t.k;
    const std::size_t cc = t.c;
    const auto ci = [](std::size_t c) { return static_cast<int>(c); };

    CompensatedSum t4;
    for (std::size_t k = 0; k < kk; ++k) t4 += t.central_moment(k, 4);

    CompensatedSum t31;
    CompensatedSum t22;
    for (std::size_t k = 0; k < kk; ++k) {
        for (std::size_t l = 0; l < kk; ++l) {
            if (l == k) continue;
            for (std::size_t d = 0; d < cc; ++d) {
                const double ak = t.centered(k, d);
                if (ak == 0.0) continue;
                for (std::size_t e = 0; e < cc; ++e) {
                    const double al = t.centered(l, e);
                    if (al == 0.0) continue;
                    const double j = model.joint2(k, ci(d), l, ci(e));
                    t31 += j * ak * ak * ak * al;
                    t22 += j * ak * ak * al * al;
                }
            }
        }
    }

    CompensatedSum t211;
    for (std::size_t k = 0; k < kk; ++k) {
        for (std::size_t l = 0; l < kk; ++l) {
            if (l == k) continue;
            for (std::size_t m = l + 1; m < kk; ++m) {
                if (m == k) continue;
                for (std::size_t d = 0; d < cc; ++d) {
                    const double ak = t.centered(k, d);
                    if (ak == 0.0) continue;
                    for (std::size_t e = 0; e < cc; ++e) {
                        const double al = t.centered(l, e);
                        if (al == 0.0) continue;
                        for (std::size_t f = 0; f < cc; ++f) {
                            const double am = t.centered(m, f);
                            if (am == 0.0) continue;
                            t211 += 2.0 * model.joint3(k, ci(d), l, ci(e), m, ci(f)) * ak * ak * al * am;
                        }
                    }
                }
            }
        }
    }

    CompensatedSum t1111;
    for (std::size_t k = 0; k < kk; ++k) {
        for (std::size_t l = k + 1; l < kk; ++l) {
            for (std::size_t m = l + 1; m < kk; ++m) {
                for (std::size_t p = m + 1; p < kk; ++p) {
                    for (std::size_t d = 0; d < cc; ++d) {
                        const double ak = t.centered(k, d);
                        if (ak == 0.0) continue;
                        for (std::size_t e = 0; e < cc; ++e) {
                            const double al = t.centered(l, e);
                            if (al == 0.0) continue;
                            for (std::size_t f = 0; f < cc; ++f) {
                                const double am = t.centered(m, f);
                                if (am == 0.0) continue;
                                for (std::size_t g = 0; g < cc; ++g) {
                                    const double ap = t.centered(p, g);
                                    if (ap == 0.0) continue;
                                    t1111 += 24.0 * model.joint4(k, ci(d), l, ci(e), m, ci(f), p, ci(g)) * ak *
                                             al * am * ap;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    const double kd = k_double(model);
    const double total =
        t4.value() + 4.0 * t31.value() + 3.0 * t22.value() + 6.0 * t211.value() + t1111.value();
    const double value = total / (kd * kd * kd * kd);
    return value < 0.0 ? 0.0 : value;
}

double eh1_4(const SiteModel& model) {
    return model.independent_sites() ? eh1_4_independent(model) : eh1_4_general(model);
}

// ---------------------------------------------------------------------------
// E h2^2

double eh2_2_independent(const SiteModel& model) {
    const SiteTerms t(model);
    CompensatedSum sum;
    for (std::size_t k = 0; k < t.k; ++k) {
        CompensatedSum cubes;
        for (std::size_t c = 0; c < t.c; ++c) cubes += t.p(k, c) * t.p(k, c) * t.p(k, c);
        const double hk = 1.0 - t.s[k];  // sum_c Pi (1 - Pi)
        sum += hk;
        sum += -hk * hk;
        sum += 2.0 * t.s[k] * t.s[k];
        sum += -2.0 * cubes.value();
    }
    const double kd = k_double(model);
    const double value = sum.value() / (kd * kd);
    return value < 0.0 ? 0.0 : value;
}

double eh2_2_general(const SiteModel& model) {
    const double independent_part = eh2_2_independent(model);
    const SiteTerms t(model);
    CompensatedSum cross;
    for (std::size_t k = 0; k < t.k; ++k) {
        for (std::size_t l = 0; l < t.k; ++l) {
            if (l == k) continue;
            for (std::size_t c = 0; c < t.c; ++c) {
                for (std::size_t d = 0; d < t.c; ++d) {
                    const double j = model.joint2(k, static_cast<int>(c), l, static_cast<int>(d));
                    // The linear part sum delta * (1 - Pi_ck - Pi_dl) vanishes since
                    // delta has zero row and column sums.
                    const double delta = j - t.p(k, c) * t.p(l, d);
                    cross += delta * delta;
                }
            }
        }
    }
    const double kd = k_double(model);
    const double value = independent_part + cross.value() / (kd * kd);
    return value < 0.0 ? 0.0 : value;
}

double eh2_2(const SiteModel& model) {
    return model.independent_sites() ? eh2_2_independent(model) : eh2_2_general(model);
}

// ---------------------------------------------------------------------------

MomentSet moments(const SiteModel& model) {
    MomentSet m;
    m.hk = expected_hk(model);
    m.sigma1_sq = sigma1_sq(model);
    m.eh2_2 = eh2_2(model);
    if (model.independent_sites() || model.sites() <= kGeneralFourthMomentMaxSites) m.eh1_4 = eh1_4(model);
    return m;
}

double exact_var_t2(const MomentSet& m, std::size_t n) {
    if (n < 2) throw std::invalid_argument("exact_var_t2 needs n >= 2");
    const double nd = static_cast<double>(n);
    const double pairs = nd * (nd - 1.0) / 2.0;
    return (2.0 * (nd - 2.0) * m.sigma1_sq + m.var_phi()) / pairs;
}

double exact_var_t2(const SiteModel& model, std::size_t n) {
    MomentSet m;
    m.sigma1_sq = sigma1_sq(model);
    m.eh2_2 = eh2_2(model);
    return exact_var_t2(m, n);
}

double berry_esseen_bound(const MomentSet& m, std::size_t n, double constant) {
    if (!(m.sigma1_sq > 0.0)) throw DegenerateKernelError("degenerate kernel: sigma1 = 0, Berry-Esseen bound undefined");
    if (!m.eh1_4) throw ModelError("Berry-Esseen bound needs E h1^4, unavailable for this model size");
    if (n == 0) throw std::invalid_argument("berry_esseen_bound needs n >= 1");
    const double first = std::pow(m.sigma1_sq, -1.5) * std::pow(*m.eh1_4, 0.75);
    const double second = std::pow(m.sigma1_sq, -5.0 / 6.0) * std::pow(m.eh2_2, 5.0 / 6.0);
    return constant * (first + second) / std::sqrt(static_cast<double>(n));
}

double berry_esseen_bound(const SiteModel& model, std::size_t n, double constant) {
    return berry_esseen_bound(moments(model), n, constant);
}

std::string_view to_string(Mixing m) noexcept {
    switch (m) {
        case Mixing::Independent: return "independent";
        case Mixing::Exponential: return "exponential";
        case Mixing::Polynomial: return "polynomial";
    }
    return "?";
}

RateDescriptor berry_esseen_rate(std::size_t k, Mixing mixing) {
    if (k < 2) throw std::invalid_argument("berry_esseen_rate needs K >= 2");
    const double kd = static_cast<double>(k);
    RateDescriptor r;
    r.mixing = mixing;
    switch (mixing) {
        case Mixing::Independent:
            r.value = 1.0 / std::sqrt(kd);
            r.description = "K^-1/2";
            break;
        case Mixing::Exponential:
            r.value = std::log(kd) / std::sqrt(kd);
            r.description = "K^-1/2 log K";
            break;
        case Mixing::Polynomial:
            r.description = "slower than K^-1/2";
            break;
    }
    return r;
}

}  // namespace neutrality
