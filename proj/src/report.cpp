#include "neutrality/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

namespace neutrality {

namespace {

using nlohmann::ordered_json;

ordered_json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

std::string g17(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt17(std::optional<double> v) { return v ? g17(*v) : "NA"; }

ordered_json tool_block() {
    ordered_json t;
    t["name"] = kToolName;
    t["version"] = kToolVersion;
    return t;
}

// Shortest %g form that reads back to the same double.
std::string format_value(double v) {
    char buf[40];
    for (int digits = 1; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace

std::vector<std::string> config_arguments(const AnalysisConfig& c) {
    std::vector<std::string> args;
    args.emplace_back("--t2-mode");
    args.emplace_back(to_string(c.t2_mode));
    args.emplace_back("--theta0-mode");
    args.emplace_back(c.theta0_mode == Theta0Mode::UserSupplied ? "value=" + format_value(c.theta0_value)
                                                                  : std::string(to_string(c.theta0_mode)));
    args.emplace_back("--variance");
    args.emplace_back(c.variance == VarianceSource::Jackknife ? std::string("jackknife")
                                                               : "model=" + c.variance_model_label);
    args.emplace_back("--k-mode");
    args.emplace_back(to_string(c.k_mode));
    args.emplace_back("--sided");
    args.emplace_back(to_string(c.sided));
    args.emplace_back("--alpha");
    args.emplace_back(format_value(c.alpha));
    args.emplace_back("--bootstrap-B");
    args.emplace_back(std::to_string(c.bootstrap_b));
    args.emplace_back("--seed");
    args.emplace_back(std::to_string(c.seed));
    args.emplace_back("--theta-sq");
    args.emplace_back(to_string(c.theta_sq_plugin));
    return args;
}

std::string report_json(const NeutralityReport& r) {
    const auto& e = r.estimators;
    const auto& t = r.tajima;
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = tool_block();

    ordered_json input;
    input["label"] = r.input_label;
    input["n"] = e.n;
    input["K"] = e.k;
    input["input_columns"] = r.input_columns;
    input["masked_columns"] = r.masked_columns;
    j["input"] = input;

    ordered_json est;
    est["S"] = e.segregating;
    est["S_star"] = e.singletons;
    est["singleton_sites"] = e.singleton_sites;
    est["pair_diff_counts"] = e.pair_diff_counts;
    est["total_pair_differences"] = e.total_pair_diffs;
    est["a_n"] = e.harmonic.a_n;
    est["b_n"] = e.harmonic.b_n;
    est["T1"] = e.t1;
    est["T2_per_pair"] = e.t2_per_pair;
    est["T2_per_site_pair"] = e.t2_per_site_pair;
    est["T2_per_segregating"] = number_or_null(e.t2_per_segregating);
    est["T3"] = e.t3;
    est["T3_convention"] = kT3Convention;
    est["D1"] = t.defined ? ordered_json(t.d1) : ordered_json(nullptr);
    est["var_D1"] = t.defined ? ordered_json(t.var_d1) : ordered_json(nullptr);
    est["D"] = t.defined ? ordered_json(t.d) : ordered_json(nullptr);
    j["estimators"] = est;

    ordered_json taj;
    taj["defined"] = t.defined;
    taj["reason"] = t.reason;
    taj["theta"] = t.theta;
    taj["theta_sq"] = t.theta_sq;
    taj["theta_sq_plugin"] = to_string(r.config.theta_sq_plugin);
    taj["D1"] = t.d1;
    taj["var_D1"] = t.var_d1;
    taj["D"] = t.defined ? ordered_json(t.d) : ordered_json(nullptr);
    if (r.bootstrap) {
        const auto& b = *r.bootstrap;
        ordered_json bj;
        bj["method"] = "bootstrap";
        bj["scheme"] = BootstrapResult::scheme;
        bj["centering"] = BootstrapResult::centering;
        bj["B"] = b.replicates;
        bj["seed"] = b.seed;
        bj["center"] = b.center;
        bj["undefined_replicates"] = b.undefined;
        bj["degenerate"] = b.degenerate;
        bj["p_value"] = b.p_value;
        taj["bootstrap"] = bj;
    } else {
        taj["bootstrap"] = nullptr;
    }
    j["tajima"] = taj;

    const auto& test = r.test;
    if (test.null) {
        ordered_json nj;
        nj["mode"] = to_string(test.null->mode);
        nj["theta0"] = test.null->theta0;
        nj["source_sites"] = test.null->source_sites;
        nj["frequencies"] = test.null->frequencies;
        nj["warning"] = test.null->warning;
        j["null"] = nj;
    } else {
        j["null"] = nullptr;
    }

    ordered_json tj;
    tj["defined"] = test.defined;
    tj["reason"] = test.reason;
    tj["T2"] = test.defined ? ordered_json(test.t2) : ordered_json(nullptr);
    tj["K_used"] = test.k_used;
    tj["k_mode"] = to_string(r.config.k_mode);
    tj["variance_source"] = to_string(r.config.variance);
    if (test.jackknife) {
        const auto& jk = *test.jackknife;
        ordered_json jj;
        jj["m"] = jk.m;
        jj["value"] = jk.value;
        jj["oracle_value"] = jk.oracle_value;
        jj["negative"] = jk.negative;
        jj["relative_deviation"] = jk.relative_deviation;
        jj["note"] = "jackknife variance is positively biased, so p-values are conservative";
        tj["jackknife"] = jj;
    } else {
        tj["jackknife"] = nullptr;
    }
    tj["var_T2"] = test.defined ? ordered_json(test.var_t2) : ordered_json(nullptr);
    tj["var_T2_scaled"] = test.defined ? ordered_json(test.var_t2_scaled) : ordered_json(nullptr);
    tj["T_n"] = test.defined ? ordered_json(test.t_n) : ordered_json(nullptr);
    tj["p_value"] = test.defined ? ordered_json(test.p_value) : ordered_json(nullptr);
    tj["sided"] = to_string(r.config.sided);
    tj["alpha"] = r.config.alpha;
    tj["reject"] = test.defined ? ordered_json(test.reject) : ordered_json(nullptr);
    j["test"] = tj;

    ordered_json dj;
    dj["frequency_shift"] = number_or_null(r.frequency_shift);
    if (r.frequency_shift) {
        dj["direction"] = *r.frequency_shift < 0.0   ? "negative-selectivity"
                          : *r.frequency_shift > 0.0 ? "positive-selectivity"
                                                     : "none";
    } else {
        dj["direction"] = nullptr;
    }
    dj["reason"] = r.frequency_shift_reason;
    j["diagnostic"] = dj;

    ordered_json pj;
    pj["t2_mode"] = to_string(r.config.t2_mode);
    pj["theta0_mode"] = to_string(r.config.theta0_mode);
    pj["variance"] = to_string(r.config.variance);
    pj["variance_model"] = r.config.variance_model_label;
    pj["k_mode"] = to_string(r.config.k_mode);
    pj["seed"] = r.config.seed;
    pj["masked_columns"] = r.masked_columns;
    pj["K_used"] = test.k_used;
    pj["log_base"] = "natural";
    pj["arguments"] = config_arguments(r.config);
    j["provenance"] = pj;

    return j.dump(2) + "\n";
}

std::string report_tsv_header() {
    return "label\tn\tK\tmasked\tS\tS_star\tT2_mode\tT2\tT1\tD1\tD\tD_p_bootstrap\ttheta0\tvar_T2\tT_n\tp_value\tsided\t"
           "frequency_shift\ttest_defined";
}

std::string report_tsv_line(const NeutralityReport& r) {
    const auto& e = r.estimators;
    std::optional<double> headline;
    switch (r.config.t2_mode) {
        case T2Normalization::PerSitePerPair: headline = e.t2_per_site_pair; break;
        case T2Normalization::PerPair: headline = e.t2_per_pair; break;
        case T2Normalization::PerSegregatingSite: headline = e.t2_per_segregating; break;
    }
    const bool d_ok = r.tajima.defined;
    const auto& test = r.test;
    std::ostringstream ss;
    ss << (r.input_label.empty() ? "-" : r.input_label) << '\t' << e.n << '\t' << e.k << '\t' << r.masked_columns << '\t'
       << e.segregating << '\t' << e.singletons << '\t' << to_string(r.config.t2_mode) << '\t' << opt17(headline)
       << '\t' << g17(e.t1) << '\t' << (d_ok ? g17(r.tajima.d1) : "NA") << '\t' << (d_ok ? g17(r.tajima.d) : "NA")
       << '\t' << (r.bootstrap ? g17(r.bootstrap->p_value) : "NA") << '\t'
       << (test.null ? g17(test.null->theta0) : "NA") << '\t' << (test.defined ? g17(test.var_t2) : "NA") << '\t'
       << (test.defined ? g17(test.t_n) : "NA") << '\t' << (test.defined ? g17(test.p_value) : "NA") << '\t'
       << to_string(r.config.sided) << '\t' << opt17(r.frequency_shift) << '\t' << (test.defined ? 1 : 0);
    return ss.str();
}

// ---------------------------------------------------------------------------

StudyOutput run_study(const StudySpec& spec, unsigned threads) {
    StudyOutput out;
    out.spec = spec;
    switch (spec.kind) {
        case StudyKind::Clt: {
            auto cfg = spec.sim;
            cfg.threads = threads;
            out.clt = clt_study(cfg);
            break;
        }
        case StudyKind::Rate: {
            auto cfg = spec.sim;
            cfg.threads = threads;
            out.rate = rate_study(cfg, spec.axis, spec.grid, spec.mixing);
            break;
        }
        case StudyKind::Power: {
            auto cfg = spec.power;
            cfg.threads = threads;
            out.power = power_study(cfg);
            break;
        }
    }
    return out;
}

std::string study_json(const StudyOutput& out) {
    const auto& spec = out.spec;
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = tool_block();
    ordered_json s;
    s["kind"] = to_string(spec.kind);
    s["name"] = spec.name;
    if (spec.kind == StudyKind::Power) {
        s["seed"] = spec.power.seed;
        s["replicates"] = spec.power.replicates;
        s["alpha"] = spec.power.alpha;
        s["sided"] = to_string(spec.power.sided);
        s["null_model"] = spec.power.null_model->kind();
        s["drift_c"] = number_or_null(spec.power.drift_c);
    } else {
        s["seed"] = spec.sim.seed;
        s["replicates"] = spec.sim.replicates;
        s["statistic"] = to_string(spec.sim.statistic);
        s["model"] = spec.sim.model->kind();
        s["C"] = spec.sim.model->categories();
    }
    if (spec.kind == StudyKind::Rate) {
        s["axis"] = to_string(spec.axis);
        s["mixing"] = to_string(spec.mixing);
        s["log_base"] = "natural";
    }
    j["study"] = s;

    ordered_json rows = ordered_json::array();
    if (out.clt) {
        const auto& r = *out.clt;
        ordered_json row;
        row["n"] = r.n;
        row["K"] = r.k;
        row["replicates"] = r.replicates;
        row["undefined"] = r.undefined;
        row["mean"] = r.mean;
        row["variance"] = r.variance;
        row["skewness"] = r.skewness;
        row["ks"] = r.ks;
        row["rejection_rate"] = number_or_null(r.rejection_rate);
        rows.push_back(row);
    }
    if (out.rate) {
        for (const auto& p : out.rate->points) {
            ordered_json row;
            row["n"] = p.n;
            row["K"] = p.k;
            row["ks"] = p.ks;
            row["mean"] = p.mean;
            row["variance"] = p.variance;
            row["berry_esseen_bound"] = number_or_null(p.bound);
            row["rate"] = number_or_null(p.rate);
            rows.push_back(row);
        }
        j["loglog_slope"] = out.rate->loglog_slope;
    }
    if (out.power) {
        for (const auto& p : out.power->points) {
            ordered_json row;
            row["n"] = p.n;
            row["K"] = p.k;
            row["theta0"] = p.theta0;
            row["H_alternative"] = p.h_alternative;
            row["rejection_rate"] = p.rejection_rate;
            row["replicates"] = p.replicates;
            row["undefined"] = p.undefined;
            rows.push_back(row);
        }
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

std::string study_tsv(const StudyOutput& out) {
    std::ostringstream ss;
    if (out.clt) {
        const auto& r = *out.clt;
        ss << "n\tK\tstatistic\treplicates\tundefined\tmean\tvariance\tskewness\tks\trejection_rate\n";
        ss << r.n << '\t' << r.k << '\t' << to_string(r.statistic) << '\t' << r.replicates << '\t' << r.undefined
           << '\t' << g17(r.mean) << '\t' << g17(r.variance) << '\t' << g17(r.skewness) << '\t' << g17(r.ks) << '\t'
           << opt17(r.rejection_rate) << '\n';
    }
    if (out.rate) {
        ss << "n\tK\tks\tmean\tvariance\tberry_esseen_bound\trate\n";
        for (const auto& p : out.rate->points) {
            ss << p.n << '\t' << p.k << '\t' << g17(p.ks) << '\t' << g17(p.mean) << '\t' << g17(p.variance) << '\t'
               << opt17(p.bound) << '\t' << opt17(p.rate) << '\n';
        }
        ss << "# loglog_slope\t" << g17(out.rate->loglog_slope) << '\n';
    }
    if (out.power) {
        ss << "n\tK\ttheta0\tH_alternative\trejection_rate\treplicates\tundefined\n";
        for (const auto& p : out.power->points) {
            ss << p.n << '\t' << p.k << '\t' << g17(p.theta0) << '\t' << g17(p.h_alternative) << '\t'
               << g17(p.rejection_rate) << '\t' << p.replicates << '\t' << p.undefined << '\n';
        }
    }
    return ss.str();
}

}  // namespace neutrality
