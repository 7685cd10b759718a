#pragma once

// Probability models over alignment columns. A model exposes per-site
// marginals and joint probabilities of up to four sites, which is all the
// moment formulas in ustat.hpp need, and can draw whole sequences.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace neutrality {

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SiteCategory {
    std::size_t site;
    int category;
};

/// Tolerance on "probabilities sum to one" for user-supplied parameters.
inline constexpr double kProbabilityTolerance = 1e-9;

class SiteModel {
public:
    virtual ~SiteModel() = default;

    [[nodiscard]] int categories() const noexcept { return c_; }
    [[nodiscard]] std::size_t sites() const noexcept { return k_; }

    /// P(X_k = c)
    [[nodiscard]] virtual double marginal(std::size_t k, int c) const = 0;

    /// P(X_{s1} = c1, ..., X_{sm} = cm). Repeated sites are allowed: a repeated
    /// site with conflicting categories has probability zero.
    [[nodiscard]] virtual double joint(std::span<const SiteCategory> cells) const = 0;

    [[nodiscard]] double joint2(std::size_t k, int c, std::size_t l, int d) const {
        const SiteCategory cells[] = {{k, c}, {l, d}};
        return joint(cells);
    }
    [[nodiscard]] double joint3(std::size_t k, int c, std::size_t l, int d, std::size_t m, int e) const {
        const SiteCategory cells[] = {{k, c}, {l, d}, {m, e}};
        return joint(cells);
    }
    [[nodiscard]] double joint4(std::size_t k, int c, std::size_t l, int d, std::size_t m, int e, std::size_t p,
                                int f) const {
        const SiteCategory cells[] = {{k, c}, {l, d}, {m, e}, {p, f}};
        return joint(cells);
    }

    /// True when all joints factorize into marginals.
    [[nodiscard]] virtual bool independent_sites() const noexcept = 0;
    [[nodiscard]] virtual std::string_view kind() const noexcept = 0;

    /// Fills `out` (length K) with one sequence drawn from the model.
    virtual void sample_sequence(std::mt19937_64& rng, std::span<std::uint8_t> out) const = 0;

    /// The same model family re-dimensioned to K sites.
    [[nodiscard]] virtual std::shared_ptr<const SiteModel> with_sites(std::size_t k) const = 0;

protected:
    SiteModel(int categories, std::size_t sites);

private:
    int c_;
    std::size_t k_;
};

/// Sites independent with a K x C marginal matrix.
class IndependentSitesModel final : public SiteModel {
public:
    IndependentSitesModel(int categories, std::size_t sites, std::vector<double> marginals);

    /// Every site has the same marginal row.
    static IndependentSitesModel identical(std::span<const double> row, std::size_t sites);
    static IndependentSitesModel uniform(int categories, std::size_t sites);

    [[nodiscard]] double marginal(std::size_t k, int c) const override;
    [[nodiscard]] double joint(std::span<const SiteCategory> cells) const override;
    [[nodiscard]] bool independent_sites() const noexcept override { return true; }
    [[nodiscard]] std::string_view kind() const noexcept override { return "independent"; }
    void sample_sequence(std::mt19937_64& rng, std::span<std::uint8_t> out) const override;

    /// Rows are reused cyclically when growing.
    [[nodiscard]] std::shared_ptr<const SiteModel> with_sites(std::size_t k) const override;

    [[nodiscard]] std::span<const double> site_marginals(std::size_t k) const noexcept {
        return {marginals_.data() + k * static_cast<std::size_t>(categories()),
                static_cast<std::size_t>(categories())};
    }
    [[nodiscard]] const std::vector<double>& marginal_matrix() const noexcept { return marginals_; }

private:
    std::vector<double> marginals_;
    std::vector<std::uint64_t> thresholds_;
};

/// First-order Markov chain along the sites: X_1 ~ pi0, X_{k+1} | X_k ~ P.
class MarkovSitesModel final : public SiteModel {
public:
    MarkovSitesModel(std::vector<double> initial, std::vector<double> transition, std::size_t sites);

    /// Stationary chain P = lambda I + (1 - lambda) 1 pi'. Its second eigenvalue is
    /// lambda, so dependence between sites d apart decays as lambda^d.
    static MarkovSitesModel with_mixing(std::span<const double> stationary, double lambda, std::size_t sites);

    /// Stationary distribution of a row-stochastic matrix (C x C, row-major).
    static std::vector<double> stationary_distribution(std::span<const double> transition, int categories);

    [[nodiscard]] double marginal(std::size_t k, int c) const override;
    [[nodiscard]] double joint(std::span<const SiteCategory> cells) const override;
    [[nodiscard]] bool independent_sites() const noexcept override { return false; }
    [[nodiscard]] std::string_view kind() const noexcept override { return "markov"; }
    void sample_sequence(std::mt19937_64& rng, std::span<std::uint8_t> out) const override;
    [[nodiscard]] std::shared_ptr<const SiteModel> with_sites(std::size_t k) const override;

    [[nodiscard]] const std::vector<double>& initial() const noexcept { return initial_; }
    [[nodiscard]] const std::vector<double>& transition() const noexcept { return transition_; }

    /// (P^d)[c][e]
    [[nodiscard]] double transition_power(std::size_t d, int c, int e) const noexcept;

private:
    std::vector<double> initial_;
    std::vector<double> transition_;
    std::vector<double> powers_;     // K matrices, P^0 .. P^{K-1}
    std::vector<double> marginals_;  // K x C
    std::vector<std::uint64_t> initial_thresholds_;
    std::vector<std::uint64_t> transition_thresholds_;
};

/// Cumulative thresholds for drawing a category from one 64-bit random word.
std::vector<std::uint64_t> category_thresholds(std::span<const double> probabilities);

inline int draw_category(std::uint64_t word, const std::uint64_t* thresholds, int categories) noexcept {
    int c = 0;
    while (c + 1 < categories && word >= thresholds[c]) ++c;
    return c;
}

}  // namespace neutrality
