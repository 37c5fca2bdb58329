#include "nftaudit/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "nftaudit/addresses.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit {

std::uint64_t percent_hundredths(std::uint64_t n, std::uint64_t total) {
    if (total == 0) return 0;
    // round-half-up of 10000 * n / total
    unsigned __int128 numerator = static_cast<unsigned __int128>(n) * 10000u * 2u +
                                  total;
    return static_cast<std::uint64_t>(numerator / (static_cast<unsigned __int128>(total) * 2u));
}

std::string format_percent(std::uint64_t hundredths) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu.%02llu",
                  static_cast<unsigned long long>(hundredths / 100),
                  static_cast<unsigned long long>(hundredths % 100));
    return buf;
}

std::vector<TokenCategory> propagate(std::span<const ContractProbe> probes,
                                     std::span<const TokenRef> refs,
                                     std::span<const std::string> cloud_keywords) {
    struct ContractClass {
        StorageCategory category;
        std::string host_root;
    };
    std::unordered_map<std::string, ContractClass> per_contract;
    per_contract.reserve(probes.size());
    for (const auto& probe : probes) {
        ContractClass cls;
        if (probe.readability == Readability::readable && probe.sample_token_uri) {
            UriStem stem = split_uri(*probe.sample_token_uri);
            cls.category = classify_uri(stem, cloud_keywords);
            cls.host_root = stem.host_root.empty() ? stem.scheme : stem.host_root;
        } else {
            cls.category = {StorageKind::unreadable, {}};
        }
        per_contract[probe.contract_address] = std::move(cls);
    }

    std::vector<TokenCategory> tokens;
    tokens.reserve(refs.size());
    for (const auto& ref : refs) {
        auto it = per_contract.find(ref.contract_address);
        if (it == per_contract.end())
            throw DataError("missing probe for contract " + ref.contract_address);
        tokens.push_back({ref, it->second.category, it->second.host_root});
    }
    return tokens;
}

StorageCounts count_storage(std::span<const TokenCategory> tokens) {
    StorageCounts counts{};
    for (const auto& t : tokens)
        ++counts[static_cast<size_t>(t.category.kind)];
    return counts;
}

namespace {

constexpr StorageKind kStorageOrder[] = {
    StorageKind::ipfs,          StorageKind::pinata,
    StorageKind::cloud_provider, StorageKind::private_domain,
    StorageKind::onchain_base64, StorageKind::unreadable,
};

constexpr PermanenceClass kPermanenceOrder[] = {
    PermanenceClass::non_permanent,
    PermanenceClass::not_readable,
    PermanenceClass::permanent,
};

} // namespace

PermanenceReport aggregate(const StorageCounts& counts, std::int64_t generated_at) {
    PermanenceReport report;
    report.generated_at = generated_at;
    for (auto c : counts) report.total_tokens += c;

    for (StorageKind kind : kStorageOrder) {
        std::uint64_t n = counts[static_cast<size_t>(kind)];
        report.by_storage.push_back({std::string(storage_kind_name(kind)), n,
                                     percent_hundredths(n, report.total_tokens)});
    }

    std::array<std::uint64_t, 3> rollup{};
    for (StorageKind kind : kStorageOrder)
        rollup[static_cast<size_t>(map_permanence(kind))] +=
            counts[static_cast<size_t>(kind)];
    for (PermanenceClass cls : kPermanenceOrder) {
        std::uint64_t n = rollup[static_cast<size_t>(cls)];
        report.by_permanence.push_back({std::string(permanence_name(cls)), n,
                                        percent_hundredths(n, report.total_tokens)});
    }
    return report;
}

PermanenceReport aggregate(std::span<const TokenCategory> tokens,
                           std::int64_t generated_at) {
    return aggregate(count_storage(tokens), generated_at);
}

std::vector<CategoryCount> readability_breakdown(std::span<const ContractProbe> probes) {
    std::array<std::uint64_t, 4> counts{};
    for (const auto& probe : probes)
        ++counts[static_cast<size_t>(probe.readability)];
    std::vector<CategoryCount> rows;
    for (Readability r : {Readability::readable, Readability::bytecode_only,
                          Readability::invalid_abi_or_token_id,
                          Readability::empty_string}) {
        std::uint64_t n = counts[static_cast<size_t>(r)];
        rows.push_back({std::string(readability_name(r)), n,
                        percent_hundredths(n, probes.size())});
    }
    return rows;
}

std::vector<StemCount> top_stems(const std::map<std::string, std::uint64_t>& stem_counts,
                                 std::size_t n) {
    std::vector<StemCount> stems;
    stems.reserve(stem_counts.size());
    for (const auto& [stem, count] : stem_counts) stems.push_back({stem, count});
    std::sort(stems.begin(), stems.end(), [](const StemCount& a, const StemCount& b) {
        if (a.n != b.n) return a.n > b.n;
        return a.host_root < b.host_root;
    });
    if (stems.size() > n) stems.resize(n);
    return stems;
}

std::vector<StemCount> top_stems(std::span<const TokenCategory> tokens, std::size_t n) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& t : tokens) {
        if (t.host_root.empty()) continue; // unreadable rows carry no stem
        ++counts[t.host_root];
    }
    return top_stems(counts, n);
}

PermanenceReport build_report(std::span<const ContractProbe> probes,
                              std::span<const TokenCategory> tokens,
                              std::size_t n_stems, std::int64_t generated_at) {
    PermanenceReport report = aggregate(tokens, generated_at);
    report.by_readability = readability_breakdown(probes);
    report.top_stems = top_stems(tokens, n_stems);
    return report;
}

namespace {

nlohmann::ordered_json rows_to_json(const std::vector<CategoryCount>& rows,
                                    std::string_view basis) {
    nlohmann::ordered_json out;
    out["basis"] = basis;
    out["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json r;
        r["label"] = row.label;
        r["n"] = row.n;
        r["percent"] = format_percent(row.percent_hundredths);
        out["rows"].push_back(std::move(r));
    }
    return out;
}

std::string rows_to_csv(const std::vector<CategoryCount>& rows) {
    std::string out = "label,n_tokens,percent\n";
    for (const auto& row : rows) {
        out += row.label;
        out += ',';
        out += std::to_string(row.n);
        out += ',';
        out += format_percent(row.percent_hundredths);
        out += '\n';
    }
    return out;
}

void append_table(std::string& out, std::string_view title, std::string_view unit,
                  std::string_view count_column,
                  const std::vector<CategoryCount>& rows, std::uint64_t total) {
    out += title;
    out += '\n';
    size_t width = 12;
    for (const auto& row : rows) width = std::max(width, row.label.size());
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s  %12s  %7s\n", static_cast<int>(width),
                  std::string(unit).c_str(), std::string(count_column).c_str(), "%");
    out += buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %12s  %7s\n", static_cast<int>(width),
                      row.label.c_str(), std::to_string(row.n).c_str(),
                      format_percent(row.percent_hundredths).c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-*s  %12s  %7s\n\n", static_cast<int>(width),
                  "Total", std::to_string(total).c_str(),
                  format_percent(percent_hundredths(total, total)).c_str());
    out += buf;
}

} // namespace

std::map<std::string, std::string> emit_report(const PermanenceReport& report,
                                               ReportFormat format) {
    std::map<std::string, std::string> files;
    switch (format) {
    case ReportFormat::structured: {
        nlohmann::ordered_json j;
        j["total_tokens"] = report.total_tokens;
        j["generated_at"] = report.generated_at;
        j["by_readability"] = rows_to_json(report.by_readability, "contracts");
        j["by_storage"] = rows_to_json(report.by_storage, "tokens");
        j["by_permanence"] = rows_to_json(report.by_permanence, "tokens");
        nlohmann::ordered_json stems = nlohmann::ordered_json::array();
        for (const auto& stem : report.top_stems) {
            nlohmann::ordered_json s;
            s["host_root"] = stem.host_root;
            s["n_tokens"] = stem.n;
            stems.push_back(std::move(s));
        }
        j["top_stems"] = std::move(stems);
        files["report.json"] = j.dump(2) + "\n";
        break;
    }
    case ReportFormat::delimited: {
        files["report_readability.csv"] = rows_to_csv(report.by_readability);
        files["report_storage.csv"] = rows_to_csv(report.by_storage);
        files["report_permanence.csv"] = rows_to_csv(report.by_permanence);
        std::string stems = "host_root,n_tokens\n";
        for (const auto& stem : report.top_stems) {
            stems += stem.host_root;
            stems += ',';
            stems += std::to_string(stem.n);
            stems += '\n';
        }
        files["report_stems.csv"] = stems;
        break;
    }
    case ReportFormat::human_table: {
        std::string out;
        std::uint64_t contracts = 0;
        for (const auto& row : report.by_readability) contracts += row.n;
        append_table(out, "Readability (per contract)", "readability", "n_contracts",
                     report.by_readability, contracts);
        append_table(out, "Storage category (per token)", "storage", "n_tokens",
                     report.by_storage, report.total_tokens);
        append_table(out, "Permanence (per token)", "permanence", "n_tokens",
                     report.by_permanence, report.total_tokens);
        if (!report.top_stems.empty()) {
            out += "Top URI stems (per token)\n";
            size_t width = 12;
            for (const auto& stem : report.top_stems)
                width = std::max(width, stem.host_root.size());
            char buf[192];
            for (const auto& stem : report.top_stems) {
                std::snprintf(buf, sizeof buf, "%-*s  %12s\n", static_cast<int>(width),
                              stem.host_root.c_str(), std::to_string(stem.n).c_str());
                out += buf;
            }
        }
        files["report.txt"] = out;
        break;
    }
    }
    return files;
}

std::string categories_to_csv(std::span<const TokenCategory> tokens) {
    std::string out = "contract_address,token_id,category,detail,host_root\n";
    for (const auto& t : tokens) {
        out += t.token.contract_address;
        out += ',';
        out += t.token.token_id.str();
        out += ',';
        out += storage_kind_name(t.category.kind);
        out += ',';
        out += t.category.cloud_keyword;
        out += ',';
        out += t.host_root;
        out += '\n';
    }
    return out;
}

std::vector<TokenCategory> read_categories_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("file missing: " + path.string());
    std::string line;
    if (!std::getline(in, line) ||
        trim(line) != "contract_address,token_id,category,detail,host_root")
        throw DataError("schema mismatch: bad categories header in " + path.string());
    std::vector<TokenCategory> tokens;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != 5)
            throw DataError("categories row " + std::to_string(row) +
                            ": expected 5 columns");
        auto addr = normalize_address(cells[0]);
        auto token = TokenId::parse(trim(cells[1]));
        auto kind = parse_storage_kind(trim(cells[2]));
        if (!addr || !token || !kind)
            throw DataError("categories row " + std::to_string(row) +
                            ": malformed value");
        TokenCategory tc;
        tc.token = {*addr, *token};
        tc.category = {*kind, cells[3]};
        tc.host_root = cells[4];
        tokens.push_back(std::move(tc));
    }
    return tokens;
}

} // namespace nftaudit
