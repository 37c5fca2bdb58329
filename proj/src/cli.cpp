#include "nftaudit/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "nftaudit/addresses.hpp"
#include "nftaudit/chainio.hpp"
#include "nftaudit/classify.hpp"
#include "nftaudit/report.hpp"
#include "nftaudit/resolve.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit::cli {

namespace {

std::int64_t wall_clock_utc() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::vector<std::string> resolve_keywords(const RunConfig& config) {
    if (!config.keyword_list_path.empty())
        return load_cloud_keywords(config.keyword_list_path);
    return default_cloud_keywords();
}

GatewayMap resolve_gateways(const RunConfig& config) {
    if (!config.gateway_map_path.empty())
        return GatewayMap::load(config.gateway_map_path);
    return GatewayMap::defaults();
}

struct Clients {
    std::unique_ptr<ExplorerClient> explorer;
    std::unique_ptr<NodeClient> node;
};

Clients make_clients(const RunConfig& config) {
    const auto& e = config.endpoints;
    if (!e.fixtures_dir.empty())
        return {make_fixture_explorer_client(e.fixtures_dir),
                make_fixture_node_client(e.fixtures_dir)};
    if (e.explorer_api_url.empty() || e.node_rpc_url.empty())
        throw UsageError("no endpoints configured: set EXPLORER_API_URL and "
                         "NODE_RPC_URL, or pass --fixtures");
    return {make_http_explorer_client(e.explorer_api_url, e.explorer_api_key),
            make_http_node_client(e.node_rpc_url)};
}

std::unique_ptr<Fetcher> make_fetcher(const RunConfig& config) {
    if (!config.endpoints.fixtures_dir.empty())
        return make_fixture_fetcher(
            std::filesystem::path(config.endpoints.fixtures_dir) / "http");
    return make_http_fetcher();
}

} // namespace

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw UsageError("config file is not a JSON object: " + path.string());

    config.input_path = j.value("input_path", config.input_path);
    config.format = j.value("format", config.format);
    if (j.contains("workdir")) config.workdir = j["workdir"].get<std::string>();
    config.endpoints.explorer_api_url =
        j.value("explorer_api_url", config.endpoints.explorer_api_url);
    config.endpoints.explorer_api_key =
        j.value("explorer_api_key", config.endpoints.explorer_api_key);
    config.endpoints.node_rpc_url = j.value("node_rpc_url", config.endpoints.node_rpc_url);
    config.endpoints.fixtures_dir = j.value("fixtures", config.endpoints.fixtures_dir);
    config.in_flight = j.value("in_flight", config.in_flight);
    config.rate_per_second = j.value("rate", config.rate_per_second);
    config.max_depth = j.value("max_depth", config.max_depth);
    config.probe_extra = j.value("probe_extra", config.probe_extra);
    config.top_stems = j.value("top_stems", config.top_stems);
    config.sample_fraction = j.value("sample_fraction", config.sample_fraction);
    config.keyword_list_path = j.value("keywords", config.keyword_list_path);
    config.gateway_map_path = j.value("gateway_map", config.gateway_map_path);
    if (j.contains("asset_keys"))
        config.asset_keys = j["asset_keys"].get<std::vector<std::string>>();
}

void apply_environment(RunConfig& config) {
    if (const char* v = std::getenv("EXPLORER_API_URL"))
        config.endpoints.explorer_api_url = v;
    if (const char* v = std::getenv("EXPLORER_API_KEY"))
        config.endpoints.explorer_api_key = v;
    if (const char* v = std::getenv("NODE_RPC_URL")) config.endpoints.node_rpc_url = v;
}

void validate(const RunConfig& config) {
    if (config.in_flight < 1) throw UsageError("--in-flight must be positive");
    if (config.rate_per_second <= 0) throw UsageError("--rate must be positive");
    if (config.max_depth < 1) throw UsageError("--max-depth must be positive");
    if (config.probe_extra < 0) throw UsageError("--probe-extra must be >= 0");
    std::filesystem::create_directories(config.workdir);
    auto probe = config.workdir / ".write_check";
    std::ofstream out(probe);
    if (!out) throw UsageError("workdir is not writable: " + config.workdir.string());
    out.close();
    std::filesystem::remove(probe);
}

std::filesystem::path reference_list_path(const RunConfig& c) {
    return c.workdir / "reference_list.csv";
}
std::filesystem::path samples_path(const RunConfig& c) { return c.workdir / "samples.csv"; }
std::filesystem::path probes_path(const RunConfig& c) { return c.workdir / "probes.jsonl"; }
std::filesystem::path probe_cache_path(const RunConfig& c) {
    return c.workdir / "probe_cache.jsonl";
}
std::filesystem::path probe_failures_path(const RunConfig& c) {
    return c.workdir / "probe_failures.jsonl";
}
std::filesystem::path stem_mismatches_path(const RunConfig& c) {
    return c.workdir / "stem_mismatches.csv";
}
std::filesystem::path categories_path(const RunConfig& c) {
    return c.workdir / "categories.csv";
}
std::filesystem::path traces_path(const RunConfig& c) { return c.workdir / "traces.jsonl"; }

int cmd_ingest(const RunConfig& config, std::ostream& out) {
    if (config.input_path.empty()) throw UsageError("ingest requires --input");
    validate(config);

    EventFormat format;
    if (config.format == "auto")
        format = detect_event_format(config.input_path);
    else if (config.format == "delimited_text")
        format = EventFormat::delimited_text;
    else if (config.format == "line_records")
        format = EventFormat::line_records;
    else
        throw UsageError("unknown --format: " + config.format);

    auto events = load_events(config.input_path, format);
    auto refs = build_reference_list(events);
    auto samples = sample_collections(refs);

    write_reference_list(reference_list_path(config), refs);
    write_samples(samples_path(config), samples);

    out << format_with_separators(refs.size()) << " tokens / "
        << format_with_separators(samples.size()) << " contracts\n";
    return 0;
}

int cmd_probe(const RunConfig& config, std::ostream& out) {
    validate(config);
    auto refs = read_reference_list(reference_list_path(config));
    auto samples = read_samples(samples_path(config));
    auto clients = make_clients(config);
    ProbeCache cache(probe_cache_path(config));

    ProbeLimits limits{config.in_flight, config.rate_per_second, config.probe_extra};
    ProbeRunResult result =
        run_probes(samples, refs, *clients.explorer, *clients.node, cache, limits, {},
                   config.fail_after, wall_clock_utc);

    // Partial progress lives in the cache; failures are persisted for re-run.
    std::string failures;
    for (const auto& f : result.failures) {
        nlohmann::ordered_json j;
        j["contract_address"] = f.contract_address;
        j["error"] = f.error;
        failures += j.dump();
        failures += '\n';
    }
    write_file_atomic(probe_failures_path(config), failures);

    std::string mismatches = "contract_address,sample_stem,token_id,token_stem\n";
    for (const auto& m : result.mismatches)
        mismatches += m.contract_address + "," + m.sample_stem + "," + m.token_id + "," +
                      m.token_stem + "\n";
    write_file_atomic(stem_mismatches_path(config), mismatches);

    out << "contracts: " << format_with_separators(samples.size())
        << " / cached: " << format_with_separators(result.cache_hits)
        << " / failures: " << format_with_separators(result.failures.size())
        << " / stem mismatches: " << format_with_separators(result.mismatches.size())
        << "\n";
    for (const auto& m : result.mismatches)
        out << "stem mismatch: " << m.contract_address << " token " << m.token_id
            << " returned '" << m.token_stem << "' (sample '" << m.sample_stem << "')\n";

    if (result.aborted) {
        out << "probe run aborted before completion; rerun to resume\n";
        return 3;
    }
    if (!result.failures.empty()) {
        write_file_atomic(probes_path(config), probes_to_jsonl(result.probes));
        out << "probe run incomplete: " << result.failures.size()
            << " contracts flagged for re-run\n";
        return 3;
    }
    write_file_atomic(probes_path(config), probes_to_jsonl(result.probes));
    return 0;
}

int cmd_classify(const RunConfig& config, std::ostream& out) {
    validate(config);
    auto refs = read_reference_list(reference_list_path(config));
    auto probes = read_probes_jsonl(probes_path(config));
    auto keywords = resolve_keywords(config);

    auto tokens = propagate(probes, refs, keywords);
    write_file_atomic(categories_path(config), categories_to_csv(tokens));

    StorageCounts counts = count_storage(tokens);
    out << format_with_separators(tokens.size()) << " tokens classified";
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        out << " / " << storage_kind_name(static_cast<StorageKind>(i)) << ": "
            << format_with_separators(counts[i]);
    }
    out << "\n";
    return 0;
}

int cmd_resolve(const RunConfig& config, std::ostream& out) {
    if (config.sample_fraction <= 0.0 || config.sample_fraction > 1.0)
        throw UsageError("--sample-fraction must be in (0, 1]");
    validate(config);

    auto probes = read_probes_jsonl(probes_path(config));
    auto fetcher = make_fetcher(config);
    auto samples = read_samples(samples_path(config));

    ResolveOptions options;
    options.gateways = resolve_gateways(config);
    options.asset_keys = config.asset_keys;
    options.max_depth = config.max_depth;
    options.cloud_keywords = resolve_keywords(config);

    std::map<std::string, TokenId> sample_token;
    for (const auto& s : samples) sample_token[s.contract_address] = s.sample_token_id;

    std::string lines;
    size_t traced = 0, resolved = 0;
    for (const auto& probe : probes) {
        if (probe.readability != Readability::readable || !probe.sample_token_uri)
            continue;
        // Deterministic sample keyed on the contract address.
        if (hash_to_unit(fnv1a64(probe.contract_address)) >= config.sample_fraction)
            continue;
        TokenRef token{probe.contract_address, sample_token[probe.contract_address]};
        ResolutionTrace trace =
            trace_asset(*fetcher, token, *probe.sample_token_uri, options);
        lines += trace_to_json_line(trace);
        lines += '\n';
        ++traced;
        if (trace.status == TraceStatus::resolved) ++resolved;
    }
    write_file_atomic(traces_path(config), lines);
    out << format_with_separators(traced) << " traces / "
        << format_with_separators(resolved) << " resolved\n";
    return 0;
}

int cmd_report(const RunConfig& config, std::ostream& out) {
    validate(config);
    auto probes = read_probes_jsonl(probes_path(config));
    auto tokens = read_categories_csv(categories_path(config));

    std::int64_t generated_at = config.stamp_reports ? wall_clock_utc() : 0;
    PermanenceReport report =
        build_report(probes, tokens, config.top_stems, generated_at);

    for (ReportFormat format : {ReportFormat::structured, ReportFormat::delimited,
                                ReportFormat::human_table}) {
        for (const auto& [name, bytes] : emit_report(report, format))
            write_file_atomic(config.workdir / name, bytes);
    }

    for (const auto& [name, bytes] :
         emit_report(report, ReportFormat::human_table))
        out << bytes;
    return 0;
}

int cmd_audit(const RunConfig& config, const std::string& contract_address,
              const std::string& token_id, std::ostream& out) {
    auto address = normalize_address(contract_address);
    if (!address) throw UsageError("malformed contract address: " + contract_address);
    auto token = TokenId::parse(token_id);
    if (!token) throw UsageError("malformed token id: " + token_id);
    validate(config);

    auto clients = make_clients(config);
    ProbeCache cache(probe_cache_path(config));
    CollectionSample sample{*address, *token, 1};
    ContractProbe probe = probe_contract(sample, *clients.explorer, *clients.node,
                                         &cache, {}, wall_clock_utc());

    out << "contract:     " << *address << "\n";
    out << "token:        " << token->str() << "\n";
    out << "readability:  " << readability_name(probe.readability) << "\n";

    if (probe.readability != Readability::readable) {
        if (probe.raw_error) out << "raw_error:    " << *probe.raw_error << "\n";
        out << "storage:      unreadable\n";
        out << "permanence:   not readable\n";
        out << "summary:      " << readability_name(probe.readability)
            << " / unreadable / not readable\n";
        return 0;
    }

    auto keywords = resolve_keywords(config);
    UriStem stem = split_uri(*probe.sample_token_uri);
    StorageCategory category = classify_uri(stem, keywords);

    out << "token_uri:    " << *probe.sample_token_uri << "\n";
    out << "storage:      " << storage_label(category) << "\n";
    out << "permanence:   " << permanence_of(category) << "\n";

    if (category.kind == StorageKind::onchain_base64) {
        try {
            OnChainAsset asset = decode_onchain_json(*probe.sample_token_uri);
            decode_onchain_image(asset);
            auto written = export_onchain_asset(config.workdir / "assets", *address,
                                                token->str(), asset);
            for (const auto& p : written) out << "decoded:      " << p.string() << "\n";
        } catch (const DecodeError& e) {
            out << "decode error: " << e.what() << "\n";
        }
    }

    ResolveOptions options;
    options.gateways = resolve_gateways(config);
    options.asset_keys = config.asset_keys;
    options.max_depth = config.max_depth;
    options.cloud_keywords = keywords;

    auto fetcher = make_fetcher(config);
    ResolutionTrace trace = trace_asset(*fetcher, TokenRef{*address, *token},
                                        *probe.sample_token_uri, options);
    out << "click_depth:  " << trace.click_depth << "\n";
    out << "trace:        " << trace_status_name(trace.status) << "\n";
    if (trace.final_asset_uri) out << "final_asset:  " << *trace.final_asset_uri << "\n";

    out << "summary:      " << readability_name(probe.readability) << " / "
        << storage_label(category) << " / " << permanence_of(category) << " / depth "
        << trace.click_depth << "\n";
    return 0;
}

} // namespace nftaudit::cli
