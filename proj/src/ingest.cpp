#include "nftaudit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "nftaudit/addresses.hpp"
#include "nftaudit/errors.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit {

namespace {

const std::vector<std::string> kColumns = {
    "tx_hash",  "block_number", "timestamp",  "contract_address",
    "token_id", "from_address", "to_address", "kind"};

[[noreturn]] void row_error(size_t row, const std::string& what) {
    throw DataError("row " + std::to_string(row) + ": " + what);
}

std::uint64_t parse_u64(std::string_view s, size_t row, const char* column) {
    std::uint64_t v = 0;
    auto t = trim(s);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        row_error(row, std::string("column '") + column + "' is not an unsigned integer");
    return v;
}

EventKind parse_kind(std::string_view s, size_t row) {
    auto t = trim(s);
    if (t == "mint") return EventKind::mint;
    if (t == "transfer") return EventKind::transfer;
    row_error(row, "column 'kind' must be 'mint' or 'transfer', got '" +
                       std::string(t) + "'");
}

TransferEvent make_event(const std::vector<std::string>& fields, size_t row) {
    TransferEvent ev;
    auto tx = normalize_tx_hash(fields[0]);
    if (!tx) row_error(row, "malformed tx_hash '" + fields[0] + "'");
    ev.tx_hash = *tx;
    ev.block_number = parse_u64(fields[1], row, "block_number");
    ev.timestamp = parse_u64(fields[2], row, "timestamp");

    auto contract = normalize_address(fields[3]);
    if (!contract) row_error(row, "malformed contract_address '" + fields[3] + "'");
    ev.contract_address = *contract;

    auto token = TokenId::parse(trim(fields[4]));
    if (!token) row_error(row, "malformed token_id '" + fields[4] + "'");
    ev.token_id = *token;

    auto from = normalize_address(fields[5]);
    if (!from) row_error(row, "malformed from_address '" + fields[5] + "'");
    ev.from_address = *from;
    auto to = normalize_address(fields[6]);
    if (!to) row_error(row, "malformed to_address '" + fields[6] + "'");
    ev.to_address = *to;

    ev.kind = parse_kind(fields[7], row);
    const bool from_zero = ev.from_address == kZeroAddress;
    if ((ev.kind == EventKind::mint) != from_zero)
        row_error(row, "kind/from_address mismatch: mint rows must originate from "
                       "the zero address and transfer rows must not");
    return ev;
}

// Fields here never legitimately contain separators, so quoting is only
// tolerated in its simplest form: a fully quoted cell with doubled quotes.
std::vector<std::string> split_delimited(std::string_view line, size_t row) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            if (!cell.empty()) row_error(row, "stray quote inside cell");
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    if (quoted) row_error(row, "unterminated quoted cell");
    out.push_back(std::move(cell));
    return out;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::vector<TransferEvent> load_delimited(std::ifstream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError("schema mismatch: missing header row");

    auto header = split_delimited(strip_cr(line), 1);
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < header.size(); ++i) {
        std::string name(trim(header[i]));
        if (std::find(kColumns.begin(), kColumns.end(), name) == kColumns.end())
            throw DataError("schema mismatch: unknown column '" + name + "'");
        if (!index.emplace(name, i).second)
            throw DataError("schema mismatch: duplicate column '" + name + "'");
    }
    for (const auto& col : kColumns) {
        if (!index.count(col))
            throw DataError("schema mismatch: missing column '" + col + "'");
    }

    std::vector<TransferEvent> events;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        auto stripped = strip_cr(line);
        if (trim(stripped).empty()) continue;
        auto cells = split_delimited(stripped, row);
        if (cells.size() != header.size())
            row_error(row, "expected " + std::to_string(header.size()) +
                               " columns, got " + std::to_string(cells.size()));
        std::vector<std::string> fields(kColumns.size());
        for (size_t i = 0; i < kColumns.size(); ++i)
            fields[i] = cells[index[kColumns[i]]];
        events.push_back(make_event(fields, row));
    }
    return events;
}

std::string json_field_as_string(const nlohmann::json& obj, const std::string& key,
                                 size_t row) {
    auto it = obj.find(key);
    if (it == obj.end())
        row_error(row, "missing field '" + key + "'");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_unsigned())
        return std::to_string(it->get<std::uint64_t>());
    row_error(row, "field '" + key + "' must be a string or unsigned integer");
}

std::vector<TransferEvent> load_line_records(std::ifstream& in) {
    std::vector<TransferEvent> events;
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        auto stripped = strip_cr(line);
        if (trim(stripped).empty()) continue;
        auto obj = nlohmann::json::parse(stripped, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            row_error(row, "line is not a JSON object");
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find(kColumns.begin(), kColumns.end(), it.key()) == kColumns.end())
                row_error(row, "unknown field '" + it.key() + "'");
        }
        std::vector<std::string> fields;
        fields.reserve(kColumns.size());
        for (const auto& col : kColumns)
            fields.push_back(json_field_as_string(obj, col, row));
        events.push_back(make_event(fields, row));
    }
    return events;
}

// Duplicate rows that disagree on kind for the same action are a schema
// problem, not something to merge silently.
void check_kind_conflicts(const std::vector<TransferEvent>& events) {
    std::map<std::tuple<std::string, std::string, std::string>, EventKind> seen;
    for (size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        auto key = std::make_tuple(ev.tx_hash, ev.contract_address, ev.token_id.str());
        auto [it, inserted] = seen.emplace(key, ev.kind);
        if (!inserted && it->second != ev.kind)
            throw DataError("schema mismatch: tx " + ev.tx_hash + " token " +
                            ev.token_id.str() +
                            " appears with conflicting kind values");
    }
}

} // namespace

std::vector<TransferEvent> load_events(const std::filesystem::path& path,
                                       EventFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file missing: " + path.string());

    std::vector<TransferEvent> events = format == EventFormat::delimited_text
                                            ? load_delimited(in)
                                            : load_line_records(in);
    check_kind_conflicts(events);
    return events;
}

EventFormat detect_event_format(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file missing: " + path.string());
    char c;
    while (in.get(c)) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{' ? EventFormat::line_records : EventFormat::delimited_text;
    }
    return EventFormat::delimited_text;
}

std::vector<TokenRef> build_reference_list(std::span<const TransferEvent> events) {
    std::set<TokenRef> unique;
    for (const auto& ev : events)
        unique.insert(TokenRef{ev.contract_address, ev.token_id});
    return {unique.begin(), unique.end()};
}

std::vector<CollectionSample> sample_collections(std::span<const TokenRef> refs) {
    std::vector<CollectionSample> samples;
    for (const auto& ref : refs) {
        if (!samples.empty() && samples.back().contract_address == ref.contract_address) {
            ++samples.back().token_count;
            if (ref.token_id < samples.back().sample_token_id)
                samples.back().sample_token_id = ref.token_id;
        } else if (!samples.empty() &&
                   samples.back().contract_address > ref.contract_address) {
            throw DataError("sample_collections: reference list is not sorted");
        } else {
            samples.push_back({ref.contract_address, ref.token_id, 1});
        }
    }
    return samples;
}

void write_reference_list(const std::filesystem::path& path,
                          std::span<const TokenRef> refs) {
    std::string out = "contract_address,token_id\n";
    for (const auto& ref : refs) {
        out += ref.contract_address;
        out += ',';
        out += ref.token_id.str();
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<TokenRef> read_reference_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("file missing: " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(strip_cr(line)) != "contract_address,token_id")
        throw DataError("schema mismatch: bad reference list header in " + path.string());
    std::vector<TokenRef> refs;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        auto stripped = strip_cr(line);
        if (trim(stripped).empty()) continue;
        auto cells = split(stripped, ',');
        if (cells.size() != 2) row_error(row, "expected 2 columns");
        auto addr = normalize_address(cells[0]);
        if (!addr) row_error(row, "malformed contract_address '" + cells[0] + "'");
        auto token = TokenId::parse(trim(cells[1]));
        if (!token) row_error(row, "malformed token_id '" + cells[1] + "'");
        refs.push_back({*addr, *token});
    }
    return refs;
}

void write_samples(const std::filesystem::path& path,
                   std::span<const CollectionSample> samples) {
    std::string out = "contract_address,sample_token_id,token_count\n";
    for (const auto& s : samples) {
        out += s.contract_address;
        out += ',';
        out += s.sample_token_id.str();
        out += ',';
        out += std::to_string(s.token_count);
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<CollectionSample> read_samples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("file missing: " + path.string());
    std::string line;
    if (!std::getline(in, line) ||
        trim(strip_cr(line)) != "contract_address,sample_token_id,token_count")
        throw DataError("schema mismatch: bad samples header in " + path.string());
    std::vector<CollectionSample> samples;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        auto stripped = strip_cr(line);
        if (trim(stripped).empty()) continue;
        auto cells = split(stripped, ',');
        if (cells.size() != 3) row_error(row, "expected 3 columns");
        auto addr = normalize_address(cells[0]);
        if (!addr) row_error(row, "malformed contract_address '" + cells[0] + "'");
        auto token = TokenId::parse(trim(cells[1]));
        if (!token) row_error(row, "malformed sample_token_id '" + cells[1] + "'");
        samples.push_back({*addr, *token, parse_u64(cells[2], row, "token_count")});
    }
    return samples;
}

} // namespace nftaudit
