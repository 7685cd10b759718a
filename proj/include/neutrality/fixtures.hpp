#pragma once

// Reference data: the five-gene polymorphic-site table and the reference
// pooled frequency vectors (order A, C, G, T) of the turtle and HIV data.

#include <array>
#include <string_view>

namespace neutrality::fixtures {

inline constexpr std::string_view kTable1Fasta =
    ">a\nTCTACCTCCTCGGTTA\n"
    ">b\nTCCTACCTCCTGGTTT\n"
    ">c\nCTCCCCCTCTTTGCTA\n"
    ">d\nCTCCCCCTTCTGACTT\n"
    ">e\nCTCCCTCTTTTGGCCA\n";

inline constexpr std::array<unsigned, 16> kTable1PairDiffs = {6, 6, 4, 7, 4, 4, 4, 4, 6, 6, 4, 4, 4, 6, 4, 6};
inline constexpr std::array<unsigned, 9> kTable1Singletons = {3, 5, 6, 7, 8, 11, 12, 13, 15};

inline constexpr std::array<double, 4> kTurtleSegregating = {0.8571, 0.1429, 0.0, 0.0};
inline constexpr std::array<double, 4> kTurtleNonSegregating = {0.3913, 0.2727, 0.2372, 0.0988};
inline constexpr std::array<double, 4> kHivSegregating = {0.4091, 0.1364, 0.4545, 0.0};
inline constexpr std::array<double, 4> kHivNonSegregating = {0.4550, 0.1327, 0.1706, 0.2417};

}  // namespace neutrality::fixtures
