#pragma once

// JSON model specifications and simulation-study configs.
//
// Model:
//   {"type": "independent", "C": 4, "K": 50, "marginals": [[...], ...]}
//       marginals holds K rows, or a single row reused for every site.
//   {"type": "markov", "C": 2, "K": 200, "P": [[...], ...], "pi0": [...] | "stationary"}
//   {"type": "markov", "K": 200, "stationary": [...], "lambda": 0.9}
//       the mixing chain P = lambda I + (1 - lambda) 1 pi'.
//
// Study:
//   {"study": "clt" | "rate" | "power", "model": {...} | "model_file": "path", ...}
//   see configs/ for complete examples.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neutrality/simulator.hpp"
#include "neutrality/site_model.hpp"

namespace neutrality {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::shared_ptr<const SiteModel> parse_model_json(std::string_view text);
std::shared_ptr<const SiteModel> read_model_file(const std::string& path);

enum class StudyKind { Clt, Rate, Power };

std::string_view to_string(StudyKind k) noexcept;

struct StudySpec {
    StudyKind kind = StudyKind::Clt;
    std::string name;
    SimConfig sim;  // clt and rate
    RateAxis axis = RateAxis::N;
    std::vector<std::size_t> grid;
    Mixing mixing = Mixing::Independent;
    PowerConfig power;
};

/// base_dir resolves relative "model_file" references.
StudySpec parse_study_json(std::string_view text, const std::string& base_dir = ".");
StudySpec read_study_file(const std::string& path);

}  // namespace neutrality
