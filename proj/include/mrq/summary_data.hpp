#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrq {

enum class OutcomeType { continuous, binary_rare };

std::string_view to_string(OutcomeType t) noexcept;
OutcomeType parse_outcome_type(std::string_view s);

/// One row of a GWAS summary-statistics file.
struct GwasRow {
    std::string snp_id;
    char effect_allele = 'A';
    char other_allele = 'G';
    double beta = 0.0;
    double se = 1.0;
    double pvalue = 1.0;
    std::optional<double> eaf;
};

/// Column names to look up in the header row. Matching is case-insensitive.
struct ColumnMap {
    std::string snp = "snp";
    std::string effect_allele = "ea";
    std::string other_allele = "oa";
    std::string beta = "beta";
    std::string se = "se";
    std::string pvalue = "p";
    std::optional<std::string> eaf;

    /// Overrides from a `key=NAME,key=NAME` list. Keys: snp, ea, oa, beta, se, p, eaf.
    static ColumnMap parse(std::string_view overrides);
};

enum class Delimiter { automatic, tab, comma };

Delimiter parse_delimiter(std::string_view s);

std::vector<GwasRow> parse_gwas_file(const std::filesystem::path& path, const ColumnMap& columns,
                                     Delimiter delim = Delimiter::automatic);

/// Same as parse_gwas_file over an already-open stream; `source` only labels errors.
std::vector<GwasRow> parse_gwas_stream(std::istream& in, const ColumnMap& columns, char delim,
                                       std::string_view source = "<stream>");

/// A harmonized instrument: beta_y refers to the same effect allele as beta_x.
struct InstrumentRecord {
    std::string snp_id;
    double beta_x = 0.0;
    double se_x = 0.0;
    double beta_y = 0.0;
    double se_y = 0.0;
    std::optional<double> eaf_x;
    std::optional<double> eaf_y;

    friend bool operator==(const InstrumentRecord&, const InstrumentRecord&) = default;
};

struct Provenance {
    std::string exposure_source;
    std::string outcome_source;
    double pval_threshold = 5e-8;
    std::size_t exposure_rows = 0;
    std::size_t exposure_duplicates = 0;
    std::size_t outcome_duplicates = 0;
    // Unique exposure SNPs with p below the threshold; equals
    // retained + dropped_mismatch + dropped_no_match.
    std::size_t exposure_passing = 0;
    std::size_t retained = 0;
    std::size_t dropped_mismatch = 0;
    // Subset of dropped_mismatch: palindromic pairs that only match swapped.
    std::size_t dropped_palindromic = 0;
    std::size_t dropped_no_match = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct HarmonizedSet {
    std::vector<InstrumentRecord> records;
    OutcomeType outcome_type = OutcomeType::continuous;
    Provenance provenance;

    std::size_t size() const noexcept { return records.size(); }

    friend bool operator==(const HarmonizedSet&, const HarmonizedSet&) = default;
};

constexpr double kGenomeWideThreshold = 5e-8;

/// Match outcome rows to exposure rows passing `pval_threshold`, aligning
/// alleles. Swapped allele pairs flip the outcome beta and complement its eaf;
/// incompatible pairs and palindromic SNPs needing a swap are dropped.
HarmonizedSet harmonize(std::span<const GwasRow> exposure, std::span<const GwasRow> outcome,
                        double pval_threshold = kGenomeWideThreshold,
                        OutcomeType outcome_type = OutcomeType::continuous);

/// Wraps pre-aligned records (simulation output, bindings) after validating them.
HarmonizedSet make_harmonized(std::vector<InstrumentRecord> records,
                              OutcomeType outcome_type = OutcomeType::continuous);

}  // namespace mrq
