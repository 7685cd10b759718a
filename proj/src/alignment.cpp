#include "neutrality/alignment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace neutrality {

int nucleotide_code(char c) noexcept {
    switch (c) {
        case 'A': case 'a': return 0;
        case 'C': case 'c': return 1;
        case 'G': case 'g': return 2;
        case 'T': case 't': return 3;
        default: return -1;
    }
}

Alignment::Alignment(std::vector<std::string> labels, std::size_t sites, int categories,
                     std::vector<std::uint8_t> codes)
    : labels_(std::move(labels)), k_(sites), c_(categories), codes_(std::move(codes)) {
    if (c_ < 2 || c_ > 255) {
        throw AlignmentError("category count must be in [2, 255], got " + std::to_string(c_));
    }
    if (k_ == 0) {
        throw AlignmentError("alignment has no sites");
    }
    if (codes_.size() % k_ != 0) {
        throw AlignmentError("code buffer is not a whole number of rows");
    }
    n_ = codes_.size() / k_;
    if (n_ < 2) {
        throw AlignmentError("alignment needs at least 2 sequences, got " + std::to_string(n_));
    }
    if (labels_.empty()) {
        labels_.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) labels_.push_back("seq" + std::to_string(i + 1));
    }
    if (labels_.size() != n_) {
        throw AlignmentError("label count does not match sequence count");
    }
    for (auto code : codes_) {
        if (code >= c_) throw AlignmentError("category code out of range");
    }
    original_index_.resize(k_);
    std::iota(original_index_.begin(), original_index_.end(), std::size_t{1});
    build_counts();
}

Alignment Alignment::from_text(std::vector<std::string> labels, const std::vector<std::string>& rows) {
    if (rows.empty()) throw AlignmentError("empty alignment");
    if (labels.size() != rows.size()) throw AlignmentError("label count does not match sequence count");
    if (rows.size() < 2) {
        throw AlignmentError("alignment needs at least 2 sequences, got " + std::to_string(rows.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& label : labels) {
        if (!seen.insert(label).second) throw AlignmentError("duplicate sequence label '" + label + "'");
    }
    const std::size_t width = rows.front().size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) {
            throw AlignmentError("ragged alignment: sequence '" + labels[i] + "' has length " +
                                 std::to_string(rows[i].size()) + ", expected " + std::to_string(width));
        }
    }
    if (width == 0) throw AlignmentError("sequences are empty");

    std::vector<std::size_t> kept;
    for (std::size_t col = 0; col < width; ++col) {
        bool clean = true;
        for (const auto& r : rows) {
            if (nucleotide_code(r[col]) < 0) {
                clean = false;
                break;
            }
        }
        if (clean) kept.push_back(col);
    }
    if (kept.empty()) throw AlignmentError("every column is masked (non-ACGT characters in all sites)");

    Alignment a;
    a.labels_ = std::move(labels);
    a.n_ = rows.size();
    a.k_ = kept.size();
    a.c_ = kNucleotideCategories;
    a.masked_ = width - kept.size();
    a.codes_.resize(a.n_ * a.k_);
    for (std::size_t i = 0; i < a.n_; ++i) {
        for (std::size_t k = 0; k < a.k_; ++k) {
            a.codes_[i * a.k_ + k] = static_cast<std::uint8_t>(nucleotide_code(rows[i][kept[k]]));
        }
    }
    a.original_index_.resize(a.k_);
    for (std::size_t k = 0; k < a.k_; ++k) a.original_index_[k] = kept[k] + 1;
    a.build_counts();
    return a;
}

void Alignment::build_counts() {
    const auto c = static_cast<std::size_t>(c_);
    counts_.assign(k_ * c, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::uint8_t* r = codes_.data() + i * k_;
        for (std::size_t k = 0; k < k_; ++k) ++counts_[k * c + r[k]];
    }
}

std::vector<std::uint8_t> Alignment::column(std::size_t k) const {
    std::vector<std::uint8_t> col(n_);
    for (std::size_t i = 0; i < n_; ++i) col[i] = at(i, k);
    return col;
}

Alignment Alignment::select_sites(std::span<const std::size_t> sites) const {
    if (sites.empty()) throw AlignmentError("site selection is empty");
    Alignment a;
    a.labels_ = labels_;
    a.n_ = n_;
    a.k_ = sites.size();
    a.c_ = c_;
    a.masked_ = masked_;
    a.codes_.resize(a.n_ * a.k_);
    a.original_index_.resize(a.k_);
    for (std::size_t j = 0; j < sites.size(); ++j) {
        if (sites[j] >= k_) throw AlignmentError("site index out of range");
        a.original_index_[j] = original_index_[sites[j]];
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < sites.size(); ++j) a.codes_[i * a.k_ + j] = at(i, sites[j]);
    }
    a.build_counts();
    return a;
}

Alignment Alignment::permute_sequences(std::span<const std::size_t> order) const {
    if (order.size() != n_) throw AlignmentError("permutation has wrong length");
    Alignment a = *this;
    for (std::size_t i = 0; i < n_; ++i) {
        if (order[i] >= n_) throw AlignmentError("permutation index out of range");
        a.labels_[i] = labels_[order[i]];
        std::copy_n(codes_.data() + order[i] * k_, k_, a.codes_.data() + i * k_);
    }
    return a;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

Alignment parse_fasta(std::istream& in) {
    std::vector<std::string> labels;
    std::vector<std::string> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '>') {
            auto header = trim(t.substr(1));
            const auto space = header.find_first_of(" \t");
            std::string label(header.substr(0, space));
            if (label.empty()) {
                throw AlignmentError("line " + std::to_string(line_no) + ": empty FASTA header");
            }
            labels.push_back(std::move(label));
            rows.emplace_back();
            continue;
        }
        if (labels.empty()) {
            throw AlignmentError("line " + std::to_string(line_no) + ": sequence data before first '>' header");
        }
        for (char ch : t) {
            if (ch == ' ' || ch == '\t') continue;
            rows.back().push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
        }
    }
    if (labels.empty()) throw AlignmentError("empty input: no FASTA records");
    return Alignment::from_text(std::move(labels), rows);
}

Alignment parse_fasta_string(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_fasta(in);
}

Alignment read_fasta_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AlignmentError("cannot open '" + path + "'");
    try {
        return parse_fasta(in);
    } catch (const AlignmentError& e) {
        throw AlignmentError(path + ": " + e.what());
    }
}

void write_fasta(std::ostream& out, const Alignment& a, std::size_t width) {
    if (a.categories() > kNucleotideCategories) {
        throw AlignmentError("only alignments with at most 4 categories can be written as FASTA");
    }
    for (std::size_t i = 0; i < a.sequences(); ++i) {
        out << '>' << a.labels()[i] << '\n';
        const auto r = a.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) {
            out << kNucleotides[r[k]];
            if ((k + 1) % width == 0 || k + 1 == r.size()) out << '\n';
        }
    }
}

std::string_view to_string(SiteClass c) noexcept {
    switch (c) {
        case SiteClass::NonSegregating: return "non_segregating";
        case SiteClass::SingletonSegregating: return "singleton";
        case SiteClass::OtherSegregating: return "segregating";
    }
    return "?";
}

SiteClass classify_counts(std::span<const std::uint32_t> counts) noexcept {
    int present = 0;
    std::uint32_t minority = ~0u;
    for (auto c : counts) {
        if (c == 0) continue;
        ++present;
        minority = std::min(minority, c);
    }
    if (present <= 1) return SiteClass::NonSegregating;
    if (present == 2 && minority == 1) return SiteClass::SingletonSegregating;
    return SiteClass::OtherSegregating;
}

SiteClassification classify_sites(const Alignment& a) {
    SiteClassification out;
    out.classes.reserve(a.sites());
    for (std::size_t k = 0; k < a.sites(); ++k) {
        const auto cls = classify_counts(a.counts(k));
        out.classes.push_back(cls);
        if (cls != SiteClass::NonSegregating) ++out.segregating;
        if (cls == SiteClass::SingletonSegregating) ++out.singletons;
    }
    return out;
}

std::vector<std::size_t> SiteClassification::sites_of(SiteClass c) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] == c) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> SiteClassification::segregating_sites() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] != SiteClass::NonSegregating) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> SiteClassification::non_segregating_sites() const {
    return sites_of(SiteClass::NonSegregating);
}

std::uint64_t pair_diff_count_from_counts(std::span<const std::uint32_t> counts) noexcept {
    std::uint64_t n = 0;
    std::uint64_t sum_sq = 0;
    for (auto c : counts) {
        n += c;
        sum_sq += static_cast<std::uint64_t>(c) * c;
    }
    return (n * n - sum_sq) / 2;
}

std::uint64_t site_pair_diff_count(std::span<const std::uint8_t> column, int categories) {
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(categories), 0);
    for (auto code : column) {
        if (code >= categories) throw AlignmentError("category code out of range");
        ++counts[code];
    }
    return pair_diff_count_from_counts(counts);
}

std::uint64_t site_pair_diff_count(const Alignment& a, std::size_t k) noexcept {
    return pair_diff_count_from_counts(a.counts(k));
}

std::uint64_t total_pair_differences(const Alignment& a) noexcept {
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < a.sites(); ++k) total += pair_diff_count_from_counts(a.counts(k));
    return total;
}

std::vector<std::size_t> all_sites(const Alignment& a) {
    std::vector<std::size_t> out(a.sites());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

SiteFrequencyTable sitewise_frequencies(const Alignment& a, std::span<const std::size_t> sites) {
    if (sites.empty()) throw AlignmentError("sitewise frequencies need a non-empty site set");
    SiteFrequencyTable table;
    table.categories = a.categories();
    table.sites.assign(sites.begin(), sites.end());
    table.probabilities.reserve(sites.size() * static_cast<std::size_t>(a.categories()));
    const double n = static_cast<double>(a.sequences());
    for (auto k : sites) {
        if (k >= a.sites()) throw AlignmentError("site index out of range");
        for (auto count : a.counts(k)) table.probabilities.push_back(static_cast<double>(count) / n);
    }
    return table;
}

PooledFrequencies pooled_frequencies(const Alignment& a, std::span<const std::size_t> sites) {
    if (sites.empty()) throw AlignmentError("pooled frequencies need a non-empty site set");
    std::vector<std::uint64_t> totals(static_cast<std::size_t>(a.categories()), 0);
    for (auto k : sites) {
        if (k >= a.sites()) throw AlignmentError("site index out of range");
        const auto counts = a.counts(k);
        for (std::size_t c = 0; c < counts.size(); ++c) totals[c] += counts[c];
    }
    const double cells = static_cast<double>(sites.size()) * static_cast<double>(a.sequences());
    PooledFrequencies out;
    out.site_count = sites.size();
    out.probabilities.reserve(totals.size());
    for (auto t : totals) out.probabilities.push_back(static_cast<double>(t) / cells);
    return out;
}

void write_site_table(std::ostream& out, const Alignment& a, const SiteClassification& classes) {
    const bool dna = a.categories() == kNucleotideCategories;
    out << "site_index\tclass";
    for (int c = 0; c < a.categories(); ++c) {
        out << "\tcount_";
        if (dna) {
            out << kNucleotides[static_cast<std::size_t>(c)];
        } else {
            out << c;
        }
    }
    out << "\tpair_diff_count\n";
    for (std::size_t k = 0; k < a.sites(); ++k) {
        out << a.original_index(k) << '\t' << to_string(classes.classes.at(k));
        for (auto count : a.counts(k)) out << '\t' << count;
        out << '\t' << site_pair_diff_count(a, k) << '\n';
    }
}

}  // namespace neutrality
