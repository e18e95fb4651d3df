#include "mrq/summary_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include "mrq/error.hpp"

namespace mrq {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

[[noreturn]] void malformed(std::string_view source, std::size_t line, const std::string& reason) {
    throw Error(ErrorCode::MalformedRow,
                std::string(source) + " line " + std::to_string(line) + ": " + reason);
}

double parse_number(std::string_view field, std::string_view name, std::string_view source,
                    std::size_t line) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        malformed(source, line, "column '" + std::string(name) + "' is not a finite number: '" +
                                    std::string(field) + "'");
    }
    return value;
}

char parse_allele(std::string_view field, std::string_view name, std::string_view source,
                  std::size_t line) {
    if (field.size() == 1) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(field[0])));
        if (c == 'A' || c == 'C' || c == 'G' || c == 'T') return c;
    }
    malformed(source, line,
              "column '" + std::string(name) + "' is not one of A/C/G/T: '" + std::string(field) + "'");
}

char complement(char a) {
    switch (a) {
        case 'A': return 'T';
        case 'T': return 'A';
        case 'C': return 'G';
        case 'G': return 'C';
    }
    return a;
}

bool is_palindromic(char a, char b) { return complement(a) == b; }

}  // namespace

std::string_view to_string(OutcomeType t) noexcept {
    return t == OutcomeType::continuous ? "continuous" : "binary-rare";
}

OutcomeType parse_outcome_type(std::string_view s) {
    const std::string v = lower(s);
    if (v == "continuous") return OutcomeType::continuous;
    if (v == "binary-rare" || v == "binary_rare") return OutcomeType::binary_rare;
    throw Error(ErrorCode::InvalidArgument, "unknown outcome type '" + std::string(s) + "'");
}

ColumnMap ColumnMap::parse(std::string_view overrides) {
    ColumnMap map;
    for (std::string_view item : split(overrides, ',')) {
        if (item.empty()) continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::InvalidArgument,
                        "column mapping entry '" + std::string(item) + "' is not key=NAME");
        }
        const std::string key = lower(trim(item.substr(0, eq)));
        const std::string name(trim(item.substr(eq + 1)));
        if (name.empty()) throw Error(ErrorCode::InvalidArgument, "empty column name for '" + key + "'");
        if (key == "snp") map.snp = name;
        else if (key == "ea" || key == "effect_allele") map.effect_allele = name;
        else if (key == "oa" || key == "other_allele") map.other_allele = name;
        else if (key == "beta") map.beta = name;
        else if (key == "se") map.se = name;
        else if (key == "p" || key == "pvalue") map.pvalue = name;
        else if (key == "eaf") map.eaf = name;
        else throw Error(ErrorCode::InvalidArgument, "unknown column key '" + key + "'");
    }
    return map;
}

Delimiter parse_delimiter(std::string_view s) {
    const std::string v = lower(s);
    if (v == "auto") return Delimiter::automatic;
    if (v == "tab" || v == "tsv") return Delimiter::tab;
    if (v == "comma" || v == "csv") return Delimiter::comma;
    throw Error(ErrorCode::InvalidArgument, "unknown delimiter '" + std::string(s) + "'");
}

std::vector<GwasRow> parse_gwas_file(const std::filesystem::path& path, const ColumnMap& columns,
                                     Delimiter delim) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileNotFound, path.string());
    char sep = '\t';
    if (delim == Delimiter::comma) {
        sep = ',';
    } else if (delim == Delimiter::automatic) {
        std::string ext = lower(path.extension().string());
        if (ext == ".gz") throw Error(ErrorCode::InvalidArgument, "compressed input is not supported: " + path.string());
        if (ext == ".csv") sep = ',';
    }
    return parse_gwas_stream(in, columns, sep, path.string());
}

std::vector<GwasRow> parse_gwas_stream(std::istream& in, const ColumnMap& columns, char delim,
                                       std::string_view source) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!have_header && std::getline(in, line)) {
        ++line_no;
        have_header = !trim(line).empty();
    }
    if (!have_header) throw Error(ErrorCode::EmptyFile, std::string(source));

    std::unordered_map<std::string, std::size_t> header;
    {
        const auto names = split(line, delim);
        for (std::size_t i = 0; i < names.size(); ++i) header.emplace(lower(names[i]), i);
    }
    auto locate = [&](const std::string& name) {
        const auto it = header.find(lower(name));
        if (it == header.end()) {
            throw Error(ErrorCode::MissingColumn, "'" + name + "' in " + std::string(source));
        }
        return it->second;
    };
    const std::size_t c_snp = locate(columns.snp);
    const std::size_t c_ea = locate(columns.effect_allele);
    const std::size_t c_oa = locate(columns.other_allele);
    const std::size_t c_beta = locate(columns.beta);
    const std::size_t c_se = locate(columns.se);
    const std::size_t c_p = locate(columns.pvalue);
    std::optional<std::size_t> c_eaf;
    if (columns.eaf) c_eaf = locate(*columns.eaf);
    const std::size_t needed =
        1 + std::max({c_snp, c_ea, c_oa, c_beta, c_se, c_p, c_eaf.value_or(0)});

    std::vector<GwasRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line, delim);
        if (f.size() < needed) {
            malformed(source, line_no,
                      "expected at least " + std::to_string(needed) + " fields, found " +
                          std::to_string(f.size()));
        }
        GwasRow row;
        row.snp_id = std::string(f[c_snp]);
        if (row.snp_id.empty()) malformed(source, line_no, "empty SNP id");
        row.effect_allele = parse_allele(f[c_ea], columns.effect_allele, source, line_no);
        row.other_allele = parse_allele(f[c_oa], columns.other_allele, source, line_no);
        if (row.effect_allele == row.other_allele) {
            malformed(source, line_no, "effect allele equals other allele");
        }
        row.beta = parse_number(f[c_beta], columns.beta, source, line_no);
        row.se = parse_number(f[c_se], columns.se, source, line_no);
        if (!(row.se > 0.0)) malformed(source, line_no, "standard error must be > 0");
        row.pvalue = parse_number(f[c_p], columns.pvalue, source, line_no);
        if (row.pvalue < 0.0 || row.pvalue > 1.0) malformed(source, line_no, "p-value outside [0, 1]");
        if (c_eaf) {
            const double eaf = parse_number(f[*c_eaf], *columns.eaf, source, line_no);
            if (!(eaf > 0.0 && eaf < 1.0)) malformed(source, line_no, "eaf outside (0, 1)");
            row.eaf = eaf;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyFile, std::string(source) + " has no data rows");
    return rows;
}

HarmonizedSet harmonize(std::span<const GwasRow> exposure, std::span<const GwasRow> outcome,
                        double pval_threshold, OutcomeType outcome_type) {
    if (!(pval_threshold > 0.0 && pval_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "p-value threshold must lie in (0, 1]");
    }
    HarmonizedSet out;
    out.outcome_type = outcome_type;
    Provenance& prov = out.provenance;
    prov.pval_threshold = pval_threshold;
    prov.exposure_rows = exposure.size();

    std::unordered_map<std::string_view, const GwasRow*> outcome_by_id;
    outcome_by_id.reserve(outcome.size());
    for (const GwasRow& row : outcome) {
        if (!outcome_by_id.emplace(row.snp_id, &row).second) ++prov.outcome_duplicates;
    }

    std::unordered_set<std::string_view> seen;
    seen.reserve(exposure.size());
    for (const GwasRow& ex : exposure) {
        if (!seen.insert(ex.snp_id).second) {
            ++prov.exposure_duplicates;
            continue;
        }
        if (!(ex.pvalue < pval_threshold)) continue;
        ++prov.exposure_passing;

        const auto it = outcome_by_id.find(ex.snp_id);
        if (it == outcome_by_id.end()) {
            ++prov.dropped_no_match;
            continue;
        }
        const GwasRow& oc = *it->second;
        InstrumentRecord rec{ex.snp_id, ex.beta, ex.se, oc.beta, oc.se, ex.eaf, oc.eaf};
        if (oc.effect_allele == ex.effect_allele && oc.other_allele == ex.other_allele) {
            // direct match
        } else if (oc.effect_allele == ex.other_allele && oc.other_allele == ex.effect_allele) {
            if (is_palindromic(ex.effect_allele, ex.other_allele)) {
                ++prov.dropped_mismatch;
                ++prov.dropped_palindromic;
                continue;
            }
            rec.beta_y = -rec.beta_y;
            if (rec.eaf_y) rec.eaf_y = 1.0 - *rec.eaf_y;
        } else {
            ++prov.dropped_mismatch;
            continue;
        }
        out.records.push_back(std::move(rec));
    }
    prov.retained = out.records.size();
    if (out.records.empty()) {
        throw Error(ErrorCode::NoOverlap,
                    "no SNP retained (" + std::to_string(prov.exposure_passing) +
                        " exposure SNPs passed p < threshold, " + std::to_string(prov.dropped_no_match) +
                        " absent from outcome, " + std::to_string(prov.dropped_mismatch) +
                        " allele mismatches)");
    }
    return out;
}

HarmonizedSet make_harmonized(std::vector<InstrumentRecord> records, OutcomeType outcome_type) {
    if (records.empty()) throw Error(ErrorCode::EmptyInput, "no instruments");
    std::unordered_set<std::string> ids;
    for (const InstrumentRecord& r : records) {
        if (!ids.insert(r.snp_id).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate SNP id '" + r.snp_id + "'");
        }
        if (!std::isfinite(r.beta_x) || !std::isfinite(r.beta_y) || !std::isfinite(r.se_x) ||
            !std::isfinite(r.se_y) || r.se_x < 0.0 || r.se_y < 0.0) {
            throw Error(ErrorCode::InvalidArgument,
                        "instrument '" + r.snp_id + "' needs finite betas and nonnegative SEs");
        }
    }
    HarmonizedSet out;
    out.records = std::move(records);
    out.outcome_type = outcome_type;
    out.provenance.exposure_rows = out.records.size();
    out.provenance.exposure_passing = out.records.size();
    out.provenance.retained = out.records.size();
    out.provenance.pval_threshold = 1.0;
    return out;
}

}  // namespace mrq
