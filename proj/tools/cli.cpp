#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "neutrality/alignment.hpp"
#include "neutrality/estimators.hpp"
#include "neutrality/fixtures.hpp"
#include "neutrality/inference.hpp"
#include "neutrality/model_io.hpp"
#include "neutrality/report.hpp"
#include "neutrality/ustat.hpp"

namespace neutrality::cli {

namespace {

constexpr const char* kSeedEnv = "NEUTRALITY_KIT_SEED";

struct AnalyzeOptions {
    std::string input;
    std::string t2_mode = "per-site-pair";
    std::string theta0_mode = "pooled";
    std::string variance = "jackknife";
    std::string k_mode = "all";
    std::string sided = "two";
    std::string theta_sq = "unbiased";
    double alpha = 0.05;
    std::size_t bootstrap_b = 1000;
    std::string format = "json";
    std::string output;
    std::string sites_out;
};

struct SimulateOptions {
    std::string config;
    std::string format = "tsv";
    std::string output;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// --seed, then the environment, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw UsageError(std::string(kSeedEnv) + " is not an unsigned integer");
        return v;
    }
    return fallback;
}

AnalysisConfig analysis_config(const AnalyzeOptions& o) {
    AnalysisConfig c;
    const auto mode = parse_t2_normalization(o.t2_mode);
    if (!mode) throw UsageError("--t2-mode must be per-site-pair, per-pair or per-segregating");
    c.t2_mode = *mode;

    if (o.theta0_mode == "pooled") {
        c.theta0_mode = Theta0Mode::PooledNonSegregating;
    } else if (o.theta0_mode == "sitewise") {
        c.theta0_mode = Theta0Mode::SitewiseNonSegregating;
    } else if (o.theta0_mode.rfind("value=", 0) == 0) {
        c.theta0_mode = Theta0Mode::UserSupplied;
        const std::string v = o.theta0_mode.substr(6);
        char* end = nullptr;
        c.theta0_value = std::strtod(v.c_str(), &end);
        if (v.empty() || *end != '\0' || !(c.theta0_value >= 0.0 && c.theta0_value <= 1.0)) {
            throw UsageError("--theta0-mode value=x needs x in [0, 1]");
        }
    } else {
        throw UsageError("--theta0-mode must be pooled, sitewise or value=x");
    }

    if (o.variance == "jackknife") {
        c.variance = VarianceSource::Jackknife;
    } else if (o.variance.rfind("model=", 0) == 0) {
        c.variance = VarianceSource::Model;
        c.variance_model_label = o.variance.substr(6);
        c.variance_model = read_model_file(c.variance_model_label);
    } else {
        throw UsageError("--variance must be jackknife or model=<model.json>");
    }

    if (o.k_mode == "all") {
        c.k_mode = KMode::AllSites;
    } else if (o.k_mode == "segregating") {
        c.k_mode = KMode::SegregatingOnly;
    } else {
        throw UsageError("--k-mode must be all or segregating");
    }

    const auto sided = parse_sidedness(o.sided);
    if (!sided) throw UsageError("--sided must be left, right or two");
    c.sided = *sided;

    if (o.theta_sq == "unbiased") {
        c.theta_sq_plugin = ThetaSquaredPlugin::Unbiased;
    } else if (o.theta_sq == "literal") {
        c.theta_sq_plugin = ThetaSquaredPlugin::Literal;
    } else {
        throw UsageError("--theta-sq must be unbiased or literal");
    }

    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must be in (0, 1)");
    if (o.bootstrap_b != 0 && o.bootstrap_b < 100) throw UsageError("--bootstrap-B must be 0 or at least 100");
    c.bootstrap_b = o.bootstrap_b;
    return c;
}

void check_format(const std::string& f) {
    if (f != "json" && f != "tsv") throw UsageError("--format must be json or tsv");
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + path);
    f << text;
}

int cmd_analyze(const AnalyzeOptions& o, const std::optional<std::uint64_t>& seed, unsigned threads,
                std::ostream& out) {
    check_format(o.format);
    auto config = analysis_config(o);
    config.seed = resolve_seed(seed, 1);
    config.threads = threads;
    const Alignment a = read_fasta_file(o.input);
    const auto report = analyze(a, config, o.input);

    if (!o.sites_out.empty()) {
        std::ostringstream ss;
        write_site_table(ss, a, classify_sites(a));
        emit(ss.str(), o.sites_out, out);
    }
    const std::string text =
        o.format == "json" ? report_json(report) : report_tsv_header() + "\n" + report_tsv_line(report) + "\n";
    emit(text, o.output, out);
    return report.test.defined ? kOk : kTestUndefined;
}

int cmd_simulate(const SimulateOptions& o, const std::optional<std::uint64_t>& seed_flag, unsigned threads,
                 std::ostream& out) {
    check_format(o.format);
    auto spec = read_study_file(o.config);
    if (spec.kind == StudyKind::Power) {
        spec.power.seed = resolve_seed(seed_flag, spec.power.seed);
    } else {
        spec.sim.seed = resolve_seed(seed_flag, spec.sim.seed);
    }
    const auto result = run_study(spec, threads);
    emit(o.format == "json" ? study_json(result) : study_tsv(result), o.output, out);
    return kOk;
}

}  // namespace

std::string demo_text() {
    const Alignment a = parse_fasta_string(fixtures::kTable1Fasta);
    const auto classes = classify_sites(a);
    std::ostringstream ss;
    ss << "Polymorphic sites in a sample of five genes (n = " << a.sequences() << ", K = " << a.sites() << ")\n\n";
    ss << "     ";
    for (std::size_t k = 0; k < a.sites(); ++k) ss << (a.original_index(k) % 10);
    ss << '\n';
    for (std::size_t i = 0; i < a.sequences(); ++i) {
        ss << "  " << a.labels()[i] << "  ";
        for (auto code : a.row(i)) ss << kNucleotides[code];
        ss << '\n';
    }

    ss << "\nPairwise differences per site:\n  ";
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < a.sites(); ++k) {
        const auto d = site_pair_diff_count(a, k);
        total += d;
        ss << '(' << d << ')';
    }
    ss << "\n  total = " << total << "\n\n";

    ss << "S = " << classes.segregating << '\n';
    ss << "S* = " << classes.singletons << " (singleton sites:";
    for (auto s : classes.sites_of(SiteClass::SingletonSegregating)) ss << ' ' << a.original_index(s);
    ss << ")\n\n";

    const double per_seg = t2(a, T2Normalization::PerSegregatingSite).value;
    const double per_pair = t2(a, T2Normalization::PerPair).value;
    const double per_site_pair = t2(a, T2Normalization::PerSitePerPair).value;
    ss << "T2 [per-segregating] = " << total << "/" << classes.segregating << " = " << fixed(per_seg, 4) << " ("
       << fixed(per_seg, 2) << ")\n";
    ss << "T2 [per-pair]        = " << total << "/10 = " << fixed(per_pair, 4) << '\n';
    ss << "T2 [per-site-pair]   = " << total << "/160 = " << fixed(per_site_pair, 5) << '\n';

    const auto h = harmonic_coefficients(a.sequences());
    const double t1 = t1_watterson(classes.segregating, a.sequences());
    const auto d = tajima_d(a);
    ss << "\nT1 = S / a_n = " << classes.segregating << " / " << fixed(h.a_n, 6) << " = " << fixed(t1, 4) << '\n';
    ss << "T3 = " << kT3Convention << " = " << fixed(t3_singleton(classes.singletons, a.sequences()), 4) << '\n';
    ss << "D1 = T2 [per-pair] - T1 = " << fixed(d.d1, 4) << '\n';
    ss << "Var(D1) = " << fixed(d.var_d1, 6) << "  (theta^2 plug-in: " << to_string(ThetaSquaredPlugin::Unbiased)
       << ")\n";
    ss << "D = " << fixed(d.d, 6) << '\n';
    return ss.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neutrality tests built on the pairwise-difference U-statistic", "neutrality-kit"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    AnalyzeOptions ao;
    auto* analyze_cmd = app.add_subcommand("analyze", "Run the neutrality test on a FASTA alignment");
    analyze_cmd->add_option("input", ao.input, "FASTA alignment")->required();
    analyze_cmd->add_option("--t2-mode", ao.t2_mode, "Headline T2 normalization: per-site-pair|per-pair|per-segregating");
    analyze_cmd->add_option("--theta0-mode", ao.theta0_mode, "Null value: pooled|sitewise|value=x");
    analyze_cmd->add_option("--variance", ao.variance, "Variance of T2: jackknife|model=<model.json>");
    analyze_cmd->add_option("--k-mode", ao.k_mode, "Sites entering T_n: all|segregating");
    analyze_cmd->add_option("--sided", ao.sided, "Alternative: left|right|two");
    analyze_cmd->add_option("--alpha", ao.alpha, "Test level");
    analyze_cmd->add_option("--bootstrap-B", ao.bootstrap_b, "Bootstrap replicates for Tajima's D (0 disables)");
    analyze_cmd->add_option("--theta-sq", ao.theta_sq, "theta^2 plug-in in Var(D1): unbiased|literal");
    analyze_cmd->add_option("--seed", seed, std::string("RNG seed (default: $") + kSeedEnv + ", else 1)");
    analyze_cmd->add_option("--threads", threads, "Worker threads, 0 = all cores; never changes results");
    analyze_cmd->add_option("--format", ao.format, "Output format: json|tsv");
    analyze_cmd->add_option("--output", ao.output, "Write the report here instead of stdout");
    analyze_cmd->add_option("--sites-out", ao.sites_out, "Write the per-site classification TSV here");

    SimulateOptions so;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo study from a JSON config");
    simulate_cmd->add_option("config", so.config, "Study config (JSON)")->required();
    simulate_cmd->add_option("--seed", seed,
                             std::string("RNG seed (default: $") + kSeedEnv + ", else the config's seed)");
    simulate_cmd->add_option("--threads", threads, "Worker threads, 0 = all cores; never changes results");
    simulate_cmd->add_option("--format", so.format, "Output format: json|tsv");
    simulate_cmd->add_option("--output", so.output, "Write the table here instead of stdout");

    auto* demo_cmd = app.add_subcommand("demo", "Walk through the five-gene example");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (analyze_cmd->parsed()) return cmd_analyze(ao, seed, threads, out);
        if (simulate_cmd->parsed()) return cmd_simulate(so, seed, threads, out);
        if (demo_cmd->parsed()) {
            out << demo_text();
            return kOk;
        }
    } catch (const std::exception& e) {
        err << "neutrality-kit: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace neutrality::cli
