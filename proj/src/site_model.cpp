#include "neutrality/site_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace neutrality {

namespace {

void check_distribution(std::span<const double> p, const char* what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw ModelError(std::string(what) + ": probability outside [0, 1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        throw ModelError(std::string(what) + ": probabilities sum to " + std::to_string(sum) + ", not 1");
    }
}

std::vector<double> mat_mul(std::span<const double> a, std::span<const double> b, std::size_t c) {
    std::vector<double> out(c * c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t k = 0; k < c; ++k) {
            const double aik = a[i * c + k];
            for (std::size_t j = 0; j < c; ++j) out[i * c + j] += aik * b[k * c + j];
        }
    }
    return out;
}

}  // namespace

std::vector<std::uint64_t> category_thresholds(std::span<const double> probabilities) {
    std::vector<std::uint64_t> out(probabilities.size());
    long double cum = 0.0L;
    constexpr long double two64 = 18446744073709551616.0L;
    for (std::size_t c = 0; c < probabilities.size(); ++c) {
        cum += probabilities[c];
        const long double scaled = cum * two64;
        out[c] = scaled >= two64 ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(scaled);
    }
    out.back() = std::numeric_limits<std::uint64_t>::max();
    return out;
}

SiteModel::SiteModel(int categories, std::size_t sites) : c_(categories), k_(sites) {
    if (categories < 2 || categories > 255) throw ModelError("category count must be in [2, 255]");
    if (sites == 0) throw ModelError("model needs at least one site");
}

// ---------------------------------------------------------------------------

IndependentSitesModel::IndependentSitesModel(int categories, std::size_t sites, std::vector<double> marginals)
    : SiteModel(categories, sites), marginals_(std::move(marginals)) {
    const auto c = static_cast<std::size_t>(categories);
    if (marginals_.size() != sites * c) throw ModelError("marginal matrix must be K x C");
    thresholds_.reserve(marginals_.size());
    for (std::size_t k = 0; k < sites; ++k) {
        const auto row = site_marginals(k);
        check_distribution(row, "site marginal");
        const auto t = category_thresholds(row);
        thresholds_.insert(thresholds_.end(), t.begin(), t.end());
    }
}

IndependentSitesModel IndependentSitesModel::identical(std::span<const double> row, std::size_t sites) {
    std::vector<double> m;
    m.reserve(row.size() * sites);
    for (std::size_t k = 0; k < sites; ++k) m.insert(m.end(), row.begin(), row.end());
    return IndependentSitesModel(static_cast<int>(row.size()), sites, std::move(m));
}

IndependentSitesModel IndependentSitesModel::uniform(int categories, std::size_t sites) {
    std::vector<double> row(static_cast<std::size_t>(categories), 1.0 / categories);
    return identical(row, sites);
}

double IndependentSitesModel::marginal(std::size_t k, int c) const {
    return marginals_[k * static_cast<std::size_t>(categories()) + static_cast<std::size_t>(c)];
}

double IndependentSitesModel::joint(std::span<const SiteCategory> cells) const {
    double p = 1.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        bool repeated = false;
        for (std::size_t j = 0; j < i; ++j) {
            if (cells[j].site == cells[i].site) {
                if (cells[j].category != cells[i].category) return 0.0;
                repeated = true;
                break;
            }
        }
        if (!repeated) p *= marginal(cells[i].site, cells[i].category);
    }
    return p;
}

void IndependentSitesModel::sample_sequence(std::mt19937_64& rng, std::span<std::uint8_t> out) const {
    const int c = categories();
    const auto cs = static_cast<std::size_t>(c);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = static_cast<std::uint8_t>(draw_category(rng(), thresholds_.data() + k * cs, c));
    }
}

std::shared_ptr<const SiteModel> IndependentSitesModel::with_sites(std::size_t k) const {
    const auto c = static_cast<std::size_t>(categories());
    std::vector<double> m;
    m.reserve(k * c);
    for (std::size_t s = 0; s < k; ++s) {
        const auto row = site_marginals(s % sites());
        m.insert(m.end(), row.begin(), row.end());
    }
    return std::make_shared<IndependentSitesModel>(categories(), k, std::move(m));
}

// ---------------------------------------------------------------------------

MarkovSitesModel::MarkovSitesModel(std::vector<double> initial, std::vector<double> transition,
                                   std::size_t sites)
    : SiteModel(static_cast<int>(initial.size()), sites),
      initial_(std::move(initial)),
      transition_(std::move(transition)) {
    const auto c = static_cast<std::size_t>(categories());
    check_distribution(initial_, "initial distribution");
    if (transition_.size() != c * c) throw ModelError("transition matrix must be C x C");
    for (std::size_t i = 0; i < c; ++i) {
        check_distribution(std::span<const double>(transition_).subspan(i * c, c), "transition row");
    }

    powers_.resize(sites * c * c);
    std::vector<double> current(c * c, 0.0);
    for (std::size_t i = 0; i < c; ++i) current[i * c + i] = 1.0;
    for (std::size_t d = 0; d < sites; ++d) {
        std::copy(current.begin(), current.end(), powers_.begin() + static_cast<std::ptrdiff_t>(d * c * c));
        if (d + 1 < sites) current = mat_mul(current, transition_, c);
    }

    marginals_.resize(sites * c);
    std::vector<double> dist = initial_;
    for (std::size_t k = 0; k < sites; ++k) {
        std::copy(dist.begin(), dist.end(), marginals_.begin() + static_cast<std::ptrdiff_t>(k * c));
        std::vector<double> next(c, 0.0);
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < c; ++j) next[j] += dist[i] * transition_[i * c + j];
        }
        dist = std::move(next);
    }

    initial_thresholds_ = category_thresholds(initial_);
    for (std::size_t i = 0; i < c; ++i) {
        const auto t = category_thresholds(std::span<const double>(transition_).subspan(i * c, c));
        transition_thresholds_.insert(transition_thresholds_.end(), t.begin(), t.end());
    }
}

MarkovSitesModel MarkovSitesModel::with_mixing(std::span<const double> stationary, double lambda,
                                               std::size_t sites) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ModelError("mixing eigenvalue must be in [0, 1)");
    const auto c = stationary.size();
    std::vector<double> p(c * c);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) p[i * c + j] = (1.0 - lambda) * stationary[j] + (i == j ? lambda : 0.0);
    }
    return MarkovSitesModel(std::vector<double>(stationary.begin(), stationary.end()), std::move(p), sites);
}

std::vector<double> MarkovSitesModel::stationary_distribution(std::span<const double> transition,
                                                              int categories) {
    const auto c = static_cast<std::size_t>(categories);
    if (transition.size() != c * c) throw ModelError("transition matrix must be C x C");
    // Power iteration on a lazy chain (I + P)/2, which has the same stationary law
    // and converges for any irreducible P.
    std::vector<double> dist(c, 1.0 / static_cast<double>(c));
    for (int iter = 0; iter < 100000; ++iter) {
        std::vector<double> next(c, 0.0);
        for (std::size_t i = 0; i < c; ++i) {
            next[i] += 0.5 * dist[i];
            for (std::size_t j = 0; j < c; ++j) next[j] += 0.5 * dist[i] * transition[i * c + j];
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < c; ++i) delta = std::max(delta, std::abs(next[i] - dist[i]));
        dist = std::move(next);
        if (delta < 1e-16) break;
    }
    double sum = 0.0;
    for (double v : dist) sum += v;
    for (double& v : dist) v /= sum;
    return dist;
}

double MarkovSitesModel::transition_power(std::size_t d, int c, int e) const noexcept {
    const auto cs = static_cast<std::size_t>(categories());
    return powers_[d * cs * cs + static_cast<std::size_t>(c) * cs + static_cast<std::size_t>(e)];
}

double MarkovSitesModel::marginal(std::size_t k, int c) const {
    return marginals_[k * static_cast<std::size_t>(categories()) + static_cast<std::size_t>(c)];
}

double MarkovSitesModel::joint(std::span<const SiteCategory> cells) const {
    if (cells.empty()) return 1.0;
    std::array<SiteCategory, 8> buf{};
    std::vector<SiteCategory> heap;
    std::span<SiteCategory> sorted;
    if (cells.size() <= buf.size()) {
        std::copy(cells.begin(), cells.end(), buf.begin());
        sorted = std::span<SiteCategory>(buf.data(), cells.size());
    } else {
        heap.assign(cells.begin(), cells.end());
        sorted = heap;
    }
    std::sort(sorted.begin(), sorted.end(), [](const SiteCategory& a, const SiteCategory& b) {
        return a.site < b.site;
    });
    double p = marginal(sorted[0].site, sorted[0].category);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const auto& prev = sorted[i - 1];
        const auto& cur = sorted[i];
        if (cur.site == prev.site) {
            if (cur.category != prev.category) return 0.0;
            continue;
        }
        p *= transition_power(cur.site - prev.site, prev.category, cur.category);
    }
    return p;
}

void MarkovSitesModel::sample_sequence(std::mt19937_64& rng, std::span<std::uint8_t> out) const {
    const int c = categories();
    const auto cs = static_cast<std::size_t>(c);
    if (out.empty()) return;
    int state = draw_category(rng(), initial_thresholds_.data(), c);
    out[0] = static_cast<std::uint8_t>(state);
    for (std::size_t k = 1; k < out.size(); ++k) {
        state = draw_category(rng(), transition_thresholds_.data() + static_cast<std::size_t>(state) * cs, c);
        out[k] = static_cast<std::uint8_t>(state);
    }
}

std::shared_ptr<const SiteModel> MarkovSitesModel::with_sites(std::size_t k) const {
    return std::make_shared<MarkovSitesModel>(initial_, transition_, k);
}

}  // namespace neutrality
