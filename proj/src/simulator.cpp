#include "neutrality/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "compensated_sum.hpp"
#include "neutrality/estimators.hpp"
#include "neutrality/inference.hpp"
#include "neutrality/parallel.hpp"

namespace neutrality {

namespace {

std::vector<std::string> sim_labels(std::size_t n) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back("sim" + std::to_string(i + 1));
    return labels;
}

void sample_codes(const SiteModel& model, std::size_t n, std::uint64_t seed, std::vector<std::uint8_t>& codes) {
    const std::size_t k = model.sites();
    codes.resize(n * k);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) model.sample_sequence(rng, std::span<std::uint8_t>(codes.data() + i * k, k));
}

struct ColumnSummary {
    std::uint64_t total_pair_diffs = 0;
    std::size_t segregating = 0;
};

ColumnSummary summarize_columns(const std::vector<std::uint8_t>& codes, std::size_t n, std::size_t k, int c,
                                std::vector<std::uint32_t>& counts) {
    const auto cs = static_cast<std::size_t>(c);
    counts.assign(k * cs, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* row = codes.data() + i * k;
        for (std::size_t s = 0; s < k; ++s) ++counts[s * cs + row[s]];
    }
    ColumnSummary out;
    for (std::size_t s = 0; s < k; ++s) {
        const auto d = pair_diff_count_from_counts(std::span<const std::uint32_t>(counts.data() + s * cs, cs));
        out.total_pair_diffs += d;
        out.segregating += d > 0;
    }
    return out;
}

void check_cells(std::size_t n, std::size_t k, std::size_t replicates, double cap) {
    const double cells = static_cast<double>(n) * static_cast<double>(k) * static_cast<double>(replicates);
    if (cells > cap) {
        throw SimulationError("study needs " + std::to_string(cells) + " sampled cells, above the cap of " +
                              std::to_string(cap));
    }
}

struct Summary {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
};

Summary summarize(const std::vector<double>& v) {
    Summary s;
    if (v.empty()) return s;
    detail::CompensatedSum sum;
    for (double x : v) sum += x;
    s.mean = sum.value() / static_cast<double>(v.size());
    detail::CompensatedSum m2;
    detail::CompensatedSum m3;
    for (double x : v) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double nd = static_cast<double>(v.size());
    s.variance = v.size() > 1 ? m2.value() / (nd - 1.0) : 0.0;
    const double pop_var = m2.value() / nd;
    s.skewness = pop_var > 0.0 ? (m3.value() / nd) / std::pow(pop_var, 1.5) : 0.0;
    return s;
}

}  // namespace

Alignment sample_alignment(const SiteModel& model, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw SimulationError("sample_alignment needs n >= 2");
    std::vector<std::uint8_t> codes;
    sample_codes(model, n, seed, codes);
    return Alignment(sim_labels(n), model.sites(), model.categories(), std::move(codes));
}

std::string_view to_string(Statistic s) noexcept {
    switch (s) {
        case Statistic::StandardizedT2: return "standardized_t2";
        case Statistic::ExactStandardizedT2: return "exact_standardized_t2";
        case Statistic::Tn: return "t_n";
        case Statistic::TajimaD: return "tajima_d";
    }
    return "?";
}

std::optional<Statistic> parse_statistic(std::string_view text) noexcept {
    if (text == "standardized_t2") return Statistic::StandardizedT2;
    if (text == "exact_standardized_t2") return Statistic::ExactStandardizedT2;
    if (text == "t_n") return Statistic::Tn;
    if (text == "tajima_d") return Statistic::TajimaD;
    return std::nullopt;
}

std::string_view to_string(RateAxis a) noexcept { return a == RateAxis::N ? "n" : "K"; }

SimStudyResult clt_study(const SimConfig& config) {
    if (!config.model) throw SimulationError("study has no model");
    const SiteModel& model = *config.model;
    const std::size_t n = config.n;
    const std::size_t k = model.sites();
    if (n < 2) throw SimulationError("study needs n >= 2");
    if (config.replicates == 0) throw SimulationError("study needs at least one replicate");
    if (config.statistic == Statistic::Tn && n < 5) throw SimulationError("T_n needs n >= 5 for the jackknife");
    check_cells(n, k, config.replicates, config.max_cells);

    const double hk = expected_hk(model);
    double scale = 1.0;  // divides (T2 - H_K)
    if (config.statistic == Statistic::StandardizedT2 || config.statistic == Statistic::ExactStandardizedT2) {
        const double s1 = sigma1_sq(model);
        if (!(s1 > 0.0)) {
            throw DegenerateKernelError("degenerate kernel: sigma1 = 0 under this model, the CLT does not apply");
        }
        scale = config.statistic == Statistic::StandardizedT2 ? 2.0 * std::sqrt(s1) / std::sqrt(static_cast<double>(n))
                                                               : std::sqrt(exact_var_t2(model, n));
    }
    const double theta0 = config.theta0.value_or(hk);
    const double pairs = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
    const double kd = static_cast<double>(k);
    const int c = model.categories();

    std::vector<double> values(config.replicates, 0.0);
    std::vector<std::uint8_t> defined(config.replicates, 0);
    std::vector<std::uint8_t> rejected(config.replicates, 0);

    parallel_for(config.replicates, config.threads, [&](std::size_t rep) {
        thread_local std::vector<std::uint8_t> codes;
        thread_local std::vector<std::uint32_t> counts;
        const std::uint64_t seed = derive_seed(config.seed, rep);
        switch (config.statistic) {
            case Statistic::StandardizedT2:
            case Statistic::ExactStandardizedT2: {
                sample_codes(model, n, seed, codes);
                const auto sum = summarize_columns(codes, n, k, c, counts);
                const double t2v = static_cast<double>(sum.total_pair_diffs) / (kd * pairs);
                values[rep] = (t2v - hk) / scale;
                defined[rep] = 1;
                break;
            }
            case Statistic::TajimaD: {
                sample_codes(model, n, seed, codes);
                const auto sum = summarize_columns(codes, n, k, c, counts);
                const auto r = tajima_d_from_summaries(sum.total_pair_diffs, sum.segregating, n);
                if (r.defined) {
                    values[rep] = r.d;
                    defined[rep] = 1;
                }
                break;
            }
            case Statistic::Tn: {
                const Alignment a = sample_alignment(model, n, seed);
                const auto jk = jackknife_var_t2(a);
                if (!(jk.value > 0.0)) break;
                const double t2v = t2(a, T2Normalization::PerSitePerPair).value;
                const double t = tn_statistic(t2v, theta0, jk.value, n, k);
                values[rep] = t;
                defined[rep] = 1;
                rejected[rep] = rejects(t, config.alpha, config.sided);
                break;
            }
        }
    });

    SimStudyResult out;
    out.n = n;
    out.k = k;
    out.statistic = config.statistic;
    out.replicates = config.replicates;
    std::size_t rejections = 0;
    for (std::size_t i = 0; i < config.replicates; ++i) {
        if (defined[i]) out.values.push_back(values[i]);
        rejections += rejected[i];
    }
    out.undefined = config.replicates - out.values.size();
    const auto s = summarize(out.values);
    out.mean = s.mean;
    out.variance = s.variance;
    out.skewness = s.skewness;
    out.ks = out.values.empty() ? 1.0 : ks_distance_normal(out.values);
    if (config.statistic == Statistic::Tn) {
        out.rejection_rate = static_cast<double>(rejections) / static_cast<double>(config.replicates);
    }
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw SimulationError("loglog_slope needs two or more points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw SimulationError("loglog_slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw SimulationError("loglog_slope needs distinct grid values");
    return sxy / sxx;
}

RateStudyResult rate_study(const SimConfig& base, RateAxis axis, const std::vector<std::size_t>& grid,
                           Mixing mixing) {
    if (!base.model) throw SimulationError("study has no model");
    if (grid.size() < 2) throw SimulationError("rate study needs at least two grid points");
    RateStudyResult out;
    out.axis = axis;
    out.mixing = mixing;
    std::vector<double> xs;
    std::vector<double> ys;
    for (auto g : grid) {
        SimConfig cfg = base;
        if (axis == RateAxis::N) {
            cfg.n = g;
        } else {
            cfg.model = base.model->with_sites(g);
        }
        const auto r = clt_study(cfg);
        RatePoint p;
        p.n = r.n;
        p.k = r.k;
        p.ks = r.ks;
        p.mean = r.mean;
        p.variance = r.variance;
        if (axis == RateAxis::N) {
            const auto m = moments(*cfg.model);
            if (m.eh1_4 && m.sigma1_sq > 0.0) p.bound = berry_esseen_bound(m, cfg.n, 1.0);
        } else if (g >= 2) {
            p.rate = berry_esseen_rate(g, mixing).value;
        }
        xs.push_back(static_cast<double>(g));
        ys.push_back(std::max(r.ks, 1e-300));
        out.points.push_back(p);
    }
    out.loglog_slope = loglog_slope(xs, ys);
    return out;
}

std::shared_ptr<const SiteModel> shifted_alternative(const SiteModel& null_model, double target_hk) {
    const auto* ind = dynamic_cast<const IndependentSitesModel*>(&null_model);
    if (ind == nullptr) throw SimulationError("drift alternatives need an independent-sites null model");
    const double c = static_cast<double>(ind->categories());
    const double ceiling = 1.0 - 1.0 / c;
    const double h0 = expected_hk(*ind);
    if (!(target_hk >= h0 && target_hk < ceiling)) {
        throw SimulationError("target H_K must lie in [H_K(null), 1 - 1/C)");
    }
    // Mixing every row with uniform by weight t gives
    //   H(t) = 1 - 1/C - (1 - t)^2 (1 - 1/C - H(0)),
    // so the weight has a closed form.
    const double keep = std::sqrt((ceiling - target_hk) / (ceiling - h0));
    std::vector<double> m = ind->marginal_matrix();
    for (double& p : m) p = keep * p + (1.0 - keep) / c;
    return std::make_shared<IndependentSitesModel>(ind->categories(), ind->sites(), std::move(m));
}

PowerStudyResult power_study(const PowerConfig& config) {
    if (!config.null_model) throw SimulationError("power study has no null model");
    if (!config.drift_c && !config.alternative) throw SimulationError("power study has no alternative model");
    if (config.alternative && (config.alternative->sites() != config.null_model->sites() ||
                               config.alternative->categories() != config.null_model->categories())) {
        throw SimulationError("null and alternative models must share C and K");
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw SimulationError("alpha must be in (0, 1)");
    if (config.n_grid.empty()) throw SimulationError("power study needs an n grid");

    const double theta0 = expected_hk(*config.null_model);
    const std::size_t k = config.null_model->sites();
    PowerStudyResult out;
    for (auto n : config.n_grid) {
        SimConfig cfg;
        cfg.n = n;
        cfg.replicates = config.replicates;
        cfg.seed = config.seed;
        cfg.statistic = Statistic::Tn;
        cfg.threads = config.threads;
        cfg.theta0 = theta0;
        cfg.sided = config.sided;
        cfg.alpha = config.alpha;
        cfg.max_cells = config.max_cells;
        if (config.drift_c) {
            const double gap = *config.drift_c / std::sqrt(static_cast<double>(n) * static_cast<double>(k));
            cfg.model = shifted_alternative(*config.null_model, theta0 + gap);
        } else {
            cfg.model = config.alternative;
        }
        const auto r = clt_study(cfg);
        PowerPoint p;
        p.n = n;
        p.k = k;
        p.theta0 = theta0;
        p.h_alternative = expected_hk(*cfg.model);
        p.rejection_rate = r.rejection_rate.value_or(0.0);
        p.replicates = r.replicates;
        p.undefined = r.undefined;
        out.points.push_back(p);
    }
    return out;
}

}  // namespace neutrality
