#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nftaudit/token_id.hpp"

namespace nftaudit {

enum class EventKind { mint, transfer };

/// One mint/transfer row from the on-chain activity export. Addresses are
/// lowercase after loading; kind == mint iff from_address is the zero address.
struct TransferEvent {
    std::string tx_hash;
    std::uint64_t block_number = 0;
    std::uint64_t timestamp = 0; // UTC seconds
    std::string contract_address;
    TokenId token_id;
    std::string from_address;
    std::string to_address;
    EventKind kind = EventKind::transfer;
};

struct TokenRef {
    std::string contract_address;
    TokenId token_id;

    bool operator==(const TokenRef&) const = default;
    auto operator<=>(const TokenRef&) const = default;
};

struct CollectionSample {
    std::string contract_address;
    TokenId sample_token_id; // smallest token id under this contract
    std::uint64_t token_count = 0;
};

enum class EventFormat { delimited_text, line_records };

/// Loads an activity export. delimited_text expects the header
/// tx_hash,block_number,timestamp,contract_address,token_id,from_address,
/// to_address,kind (any column order); line_records expects one JSON object
/// per line with the same field names. Throws DataError naming the offending
/// row/column; file-missing is also a DataError.
std::vector<TransferEvent> load_events(const std::filesystem::path& path,
                                       EventFormat format);

// Picks by content: a first non-space byte of '{' means line_records.
EventFormat detect_event_format(const std::filesystem::path& path);

/// Distinct (contract, token) pairs, sorted ascending. Order-independent in
/// its input.
std::vector<TokenRef> build_reference_list(std::span<const TransferEvent> events);

/// One sample per contract: the smallest token id, plus the distinct-token
/// count. Input must be deduplicated.
std::vector<CollectionSample> sample_collections(std::span<const TokenRef> refs);

// Stage-file round trips (delimited text with headers).
void write_reference_list(const std::filesystem::path& path,
                          std::span<const TokenRef> refs);
std::vector<TokenRef> read_reference_list(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path,
                   std::span<const CollectionSample> samples);
std::vector<CollectionSample> read_samples(const std::filesystem::path& path);

} // namespace nftaudit
