#pragma once

// Aligned DNA sequences and the per-site summaries every statistic is built on.
//
// Sequences are stored as category codes in [0, C). For nucleotide input the
// codes are A=0, C=1, G=2, T=3, which is also the order of every frequency
// vector this library reports. Columns holding anything outside {A,C,G,T}
// are masked out at parse time and never enter the statistical view; their
// count is kept for auditing.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace neutrality {

inline constexpr int kNucleotideCategories = 4;
inline constexpr std::string_view kNucleotides = "ACGT";

/// Maps a nucleotide character (either case) to its code, or -1.
int nucleotide_code(char c) noexcept;

class AlignmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Alignment {
public:
    /// Builds an alignment from already-encoded codes (row-major, n x K).
    /// Original column indices default to 1..K.
    Alignment(std::vector<std::string> labels, std::size_t sites, int categories,
              std::vector<std::uint8_t> codes);

    /// Builds an alignment from nucleotide text rows, applying the masking policy.
    static Alignment from_text(std::vector<std::string> labels, const std::vector<std::string>& rows);

    [[nodiscard]] std::size_t sequences() const noexcept { return n_; }
    [[nodiscard]] std::size_t sites() const noexcept { return k_; }
    [[nodiscard]] int categories() const noexcept { return c_; }

    [[nodiscard]] std::uint8_t at(std::size_t i, std::size_t k) const noexcept { return codes_[i * k_ + k]; }
    [[nodiscard]] std::span<const std::uint8_t> row(std::size_t i) const noexcept {
        return {codes_.data() + i * k_, k_};
    }
    [[nodiscard]] std::vector<std::uint8_t> column(std::size_t k) const;

    /// Category counts n_ck of site k (length C).
    [[nodiscard]] std::span<const std::uint32_t> counts(std::size_t k) const noexcept {
        return {counts_.data() + k * static_cast<std::size_t>(c_), static_cast<std::size_t>(c_)};
    }

    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// 1-based position of statistical site k in the input, before masking.
    [[nodiscard]] std::size_t original_index(std::size_t k) const noexcept { return original_index_[k]; }
    [[nodiscard]] std::size_t masked_columns() const noexcept { return masked_; }
    [[nodiscard]] std::size_t input_columns() const noexcept { return k_ + masked_; }

    /// Copy restricted to the given statistical sites, in the given order.
    [[nodiscard]] Alignment select_sites(std::span<const std::size_t> sites) const;

    /// Copy with rows reordered; `order` must be a permutation of 0..n-1.
    [[nodiscard]] Alignment permute_sequences(std::span<const std::size_t> order) const;

private:
    Alignment() = default;
    void build_counts();

    std::vector<std::string> labels_;
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    int c_ = kNucleotideCategories;
    std::vector<std::uint8_t> codes_;
    std::vector<std::uint32_t> counts_;
    std::vector<std::size_t> original_index_;
    std::size_t masked_ = 0;
};

/// Reads a FASTA alignment. Headers start with '>'; the label is the first
/// whitespace-delimited token. Sequence lines may wrap freely.
Alignment parse_fasta(std::istream& in);
Alignment parse_fasta_string(std::string_view text);
Alignment read_fasta_file(const std::string& path);

void write_fasta(std::ostream& out, const Alignment& a, std::size_t width = 60);

enum class SiteClass { NonSegregating, SingletonSegregating, OtherSegregating };

std::string_view to_string(SiteClass c) noexcept;

struct SiteClassification {
    std::vector<SiteClass> classes;
    std::size_t segregating = 0;  // S
    std::size_t singletons = 0;   // S*

    [[nodiscard]] std::vector<std::size_t> sites_of(SiteClass c) const;
    [[nodiscard]] std::vector<std::size_t> segregating_sites() const;
    [[nodiscard]] std::vector<std::size_t> non_segregating_sites() const;
};

/// Singleton: exactly two categories present and the minority count is 1.
SiteClass classify_counts(std::span<const std::uint32_t> counts) noexcept;
SiteClassification classify_sites(const Alignment& a);

/// Number of differing sequence pairs at one site, (n^2 - sum n_c^2) / 2.
std::uint64_t pair_diff_count_from_counts(std::span<const std::uint32_t> counts) noexcept;
std::uint64_t site_pair_diff_count(std::span<const std::uint8_t> column, int categories);
std::uint64_t site_pair_diff_count(const Alignment& a, std::size_t k) noexcept;

/// Sum of pair differences over all sites.
std::uint64_t total_pair_differences(const Alignment& a) noexcept;

struct SiteFrequencyTable {
    int categories = kNucleotideCategories;
    std::vector<std::size_t> sites;  // statistical site indices
    std::vector<double> probabilities;  // sites.size() x categories, row-major

    [[nodiscard]] std::span<const double> site(std::size_t row) const noexcept {
        return {probabilities.data() + row * static_cast<std::size_t>(categories),
                static_cast<std::size_t>(categories)};
    }
};

struct PooledFrequencies {
    std::vector<double> probabilities;
    std::size_t site_count = 0;
};

SiteFrequencyTable sitewise_frequencies(const Alignment& a, std::span<const std::size_t> sites);
PooledFrequencies pooled_frequencies(const Alignment& a, std::span<const std::size_t> sites);

std::vector<std::size_t> all_sites(const Alignment& a);

/// TSV: site_index, class, count_A.., pair_diff_count (one row per statistical site).
void write_site_table(std::ostream& out, const Alignment& a, const SiteClassification& classes);

}  // namespace neutrality
