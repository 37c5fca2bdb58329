#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nftaudit/chainio.hpp"
#include "nftaudit/classify.hpp"
#include "nftaudit/ingest.hpp"

namespace nftaudit {

struct CategoryCount {
    std::string label;
    std::uint64_t n = 0;
    std::uint64_t percent_hundredths = 0; // 4506 == 45.06%

    bool operator==(const CategoryCount&) const = default;
};

struct StemCount {
    std::string host_root;
    std::uint64_t n = 0;

    bool operator==(const StemCount&) const = default;
};

struct PermanenceReport {
    std::uint64_t total_tokens = 0;
    std::vector<CategoryCount> by_readability; // basis: contracts
    std::vector<CategoryCount> by_storage;     // basis: tokens
    std::vector<CategoryCount> by_permanence;  // basis: tokens
    std::vector<StemCount> top_stems;
    std::int64_t generated_at = 0; // UTC seconds; 0 keeps reruns byte-identical
};

struct TokenCategory {
    TokenRef token;
    StorageCategory category;
    std::string host_root; // empty for unreadable/on-chain rows
};

// round(100 * n / total, 2) under round-half-up, in hundredths of a percent.
std::uint64_t percent_hundredths(std::uint64_t n, std::uint64_t total);
std::string format_percent(std::uint64_t hundredths); // "45.06"

/// Duplicates each contract's sample classification across all of its
/// tokens; contracts that are not readable map every token to unreadable.
/// Throws DataError naming any contract that lacks a probe.
std::vector<TokenCategory> propagate(std::span<const ContractProbe> probes,
                                     std::span<const TokenRef> refs,
                                     std::span<const std::string> cloud_keywords);

using StorageCounts = std::array<std::uint64_t, 6>; // indexed by StorageKind

StorageCounts count_storage(std::span<const TokenCategory> tokens);

/// Counts and percentages per storage category plus the three-way permanence
/// rollup. Percentages follow the CategoryCount rounding contract.
PermanenceReport aggregate(const StorageCounts& counts, std::int64_t generated_at = 0);
PermanenceReport aggregate(std::span<const TokenCategory> tokens,
                           std::int64_t generated_at = 0);

// Readability shares on a contract basis (four fixed rows).
std::vector<CategoryCount> readability_breakdown(std::span<const ContractProbe> probes);

/// Host roots ranked by token count descending, ties broken lexicographically.
std::vector<StemCount> top_stems(const std::map<std::string, std::uint64_t>& stem_counts,
                                 std::size_t n);
std::vector<StemCount> top_stems(std::span<const TokenCategory> tokens, std::size_t n);

PermanenceReport build_report(std::span<const ContractProbe> probes,
                              std::span<const TokenCategory> tokens,
                              std::size_t n_stems, std::int64_t generated_at = 0);

enum class ReportFormat { structured, delimited, human_table };

/// Deterministic bytes per output file: stable key order, fixed decimal
/// formatting. structured -> report.json; delimited -> one file per
/// breakdown; human_table -> report.txt.
std::map<std::string, std::string> emit_report(const PermanenceReport& report,
                                               ReportFormat format);

// Per-token stage file (delimited, header
// contract_address,token_id,category,detail,host_root).
std::string categories_to_csv(std::span<const TokenCategory> tokens);
std::vector<TokenCategory> read_categories_csv(const std::filesystem::path& path);

} // namespace nftaudit
