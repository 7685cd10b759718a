#pragma once

// Serialization of analysis reports and study tables. JSON is canonical; the
// TSV forms are projections of it. Doubles are written in shortest
// round-trip form in JSON and with 17 significant digits in TSV.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "neutrality/inference.hpp"
#include "neutrality/model_io.hpp"
#include "neutrality/simulator.hpp"

namespace neutrality {

inline constexpr std::string_view kToolName = "neutrality-kit";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

std::string report_json(const NeutralityReport& r);

/// Command-line flags that reproduce the analysis settings of a report.
std::vector<std::string> config_arguments(const AnalysisConfig& c);

/// Header and one data line.
std::string report_tsv_header();
std::string report_tsv_line(const NeutralityReport& r);

struct StudyOutput {
    StudySpec spec;
    std::optional<SimStudyResult> clt;
    std::optional<RateStudyResult> rate;
    std::optional<PowerStudyResult> power;
};

StudyOutput run_study(const StudySpec& spec, unsigned threads);

std::string study_json(const StudyOutput& out);
std::string study_tsv(const StudyOutput& out);

}  // namespace neutrality
