#include "neutrality/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace neutrality {

namespace {

using nlohmann::json;

std::vector<double> number_row(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    std::vector<double> row;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(std::string(what) + " must contain only numbers");
        row.push_back(v.get<double>());
    }
    return row;
}

std::vector<double> number_matrix(const json& j, const char* what, std::size_t& rows, std::size_t& cols) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a non-empty array of rows");
    std::vector<double> flat;
    rows = j.size();
    cols = 0;
    for (const auto& r : j) {
        const auto row = number_row(r, what);
        if (cols == 0) cols = row.size();
        if (row.size() != cols) throw ConfigError(std::string(what) + " rows differ in length");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return flat;
}

std::size_t positive_size(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing \"") + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
        throw ConfigError(std::string("\"") + key + "\" must be a positive integer");
    }
    return v.get<std::size_t>();
}

void check_categories(const json& j, std::size_t c) {
    if (j.contains("C") && positive_size(j, "C") != c) {
        throw ConfigError("\"C\" = " + std::to_string(positive_size(j, "C")) + " does not match the row length " +
                          std::to_string(c));
    }
}

std::shared_ptr<const SiteModel> model_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("model must be a JSON object");
    const std::string type = j.value("type", "");
    const std::size_t k = positive_size(j, "K");
    if (type == "independent") {
        if (!j.contains("marginals")) throw ConfigError("independent model needs \"marginals\"");
        std::size_t rows = 0;
        std::size_t cols = 0;
        auto flat = number_matrix(j.at("marginals"), "marginals", rows, cols);
        check_categories(j, cols);
        if (rows == 1) {
            return std::make_shared<IndependentSitesModel>(IndependentSitesModel::identical(flat, k));
        }
        if (rows != k) throw ConfigError("marginals must have 1 or K rows");
        return std::make_shared<IndependentSitesModel>(static_cast<int>(cols), k, std::move(flat));
    }
    if (type == "markov") {
        if (j.contains("lambda")) {
            if (!j.contains("stationary")) throw ConfigError("mixing chain needs \"stationary\"");
            const auto pi = number_row(j.at("stationary"), "stationary");
            check_categories(j, pi.size());
            const auto& lam = j.at("lambda");
            if (!lam.is_number()) throw ConfigError("\"lambda\" must be a number");
            return std::make_shared<MarkovSitesModel>(MarkovSitesModel::with_mixing(pi, lam.get<double>(), k));
        }
        if (!j.contains("P")) throw ConfigError("markov model needs \"P\"");
        std::size_t rows = 0;
        std::size_t cols = 0;
        auto p = number_matrix(j.at("P"), "P", rows, cols);
        if (rows != cols) throw ConfigError("P must be square");
        check_categories(j, cols);
        std::vector<double> pi0;
        const json pj = j.value("pi0", json("stationary"));
        if (pj.is_string()) {
            if (pj.get<std::string>() != "stationary") throw ConfigError("\"pi0\" must be an array or \"stationary\"");
            pi0 = MarkovSitesModel::stationary_distribution(p, static_cast<int>(cols));
        } else {
            pi0 = number_row(pj, "pi0");
            if (pi0.size() != cols) throw ConfigError("pi0 length does not match P");
        }
        return std::make_shared<MarkovSitesModel>(std::move(pi0), std::move(p), k);
    }
    throw ConfigError("model \"type\" must be \"independent\" or \"markov\"");
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::size_t> size_list(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty()) {
        throw ConfigError(std::string("\"") + key + "\" must be a non-empty array");
    }
    std::vector<std::size_t> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number_integer() || v.get<long long>() <= 0) {
            throw ConfigError(std::string("\"") + key + "\" entries must be positive integers");
        }
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

std::shared_ptr<const SiteModel> model_entry(const json& j, const char* inline_key, const char* file_key,
                                             const std::string& base_dir) {
    if (j.contains(inline_key)) return model_from_json(j.at(inline_key));
    if (j.contains(file_key)) {
        std::filesystem::path p = j.at(file_key).get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        return read_model_file(p.string());
    }
    throw ConfigError(std::string("missing \"") + inline_key + "\" or \"" + file_key + "\"");
}

}  // namespace

std::shared_ptr<const SiteModel> parse_model_json(std::string_view text) {
    try {
        return model_from_json(parse_json(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
}

std::shared_ptr<const SiteModel> read_model_file(const std::string& path) {
    try {
        return parse_model_json(slurp(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const ModelError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string_view to_string(StudyKind k) noexcept {
    switch (k) {
        case StudyKind::Clt: return "clt";
        case StudyKind::Rate: return "rate";
        case StudyKind::Power: return "power";
    }
    return "?";
}

StudySpec parse_study_json(std::string_view text, const std::string& base_dir) {
    const json j = parse_json(text);
    if (!j.is_object()) throw ConfigError("study config must be a JSON object");
    try {
        StudySpec spec;
        const std::string kind = j.value("study", "clt");
        if (kind == "clt") {
            spec.kind = StudyKind::Clt;
        } else if (kind == "rate") {
            spec.kind = StudyKind::Rate;
        } else if (kind == "power") {
            spec.kind = StudyKind::Power;
        } else {
            throw ConfigError("\"study\" must be clt, rate or power");
        }
        spec.name = j.value("name", std::string(to_string(spec.kind)));

        const std::uint64_t seed = j.value("seed", std::uint64_t{1});
        const std::size_t replicates = j.contains("replicates") ? positive_size(j, "replicates") : 2000;
        const double alpha = j.value("alpha", 0.05);
        const double max_cells = j.value("max_cells", kDefaultMaxCells);
        Sidedness sided = Sidedness::Two;
        if (j.contains("sided")) {
            const auto s = parse_sidedness(j.at("sided").get<std::string>());
            if (!s) throw ConfigError("\"sided\" must be left, right or two");
            sided = *s;
        }

        if (spec.kind == StudyKind::Power) {
            auto& p = spec.power;
            p.null_model = model_entry(j, "null", "null_file", base_dir);
            if (j.contains("drift_c")) {
                p.drift_c = j.at("drift_c").get<double>();
            } else {
                p.alternative = model_entry(j, "alternative", "alternative_file", base_dir);
            }
            p.n_grid = size_list(j, "n_grid");
            p.replicates = replicates;
            p.seed = seed;
            p.alpha = alpha;
            p.sided = sided;
            p.max_cells = max_cells;
            return spec;
        }

        auto& s = spec.sim;
        s.model = model_entry(j, "model", "model_file", base_dir);
        s.replicates = replicates;
        s.seed = seed;
        s.alpha = alpha;
        s.sided = sided;
        s.max_cells = max_cells;
        if (j.contains("n")) s.n = positive_size(j, "n");
        if (j.contains("theta0")) s.theta0 = j.at("theta0").get<double>();
        if (j.contains("statistic")) {
            const auto st = parse_statistic(j.at("statistic").get<std::string>());
            if (!st) throw ConfigError("unknown \"statistic\"");
            s.statistic = *st;
        }
        if (spec.kind == StudyKind::Rate) {
            const std::string axis = j.value("axis", "n");
            if (axis == "n") {
                spec.axis = RateAxis::N;
            } else if (axis == "K") {
                spec.axis = RateAxis::K;
            } else {
                throw ConfigError("\"axis\" must be n or K");
            }
            spec.grid = size_list(j, "grid");
            const std::string mixing = j.value("mixing", "independent");
            if (mixing == "independent") {
                spec.mixing = Mixing::Independent;
            } else if (mixing == "exponential") {
                spec.mixing = Mixing::Exponential;
            } else if (mixing == "polynomial") {
                spec.mixing = Mixing::Polynomial;
            } else {
                throw ConfigError("\"mixing\" must be independent, exponential or polynomial");
            }
        }
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid study config: ") + e.what());
    } catch (const ModelError& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
}

StudySpec read_study_file(const std::string& path) {
    const auto base = std::filesystem::path(path).parent_path().string();
    try {
        return parse_study_json(slurp(path), base.empty() ? "." : base);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace neutrality
