#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nftaudit/ingest.hpp"

namespace nftaudit::cli {

struct EndpointConfig {
    std::string explorer_api_url; // EXPLORER_API_URL
    std::string explorer_api_key; // EXPLORER_API_KEY
    std::string node_rpc_url;     // NODE_RPC_URL
    std::string fixtures_dir;     // when set, clients replay fixture files
};

struct RunConfig {
    std::string input_path;
    std::string format = "auto"; // auto | delimited_text | line_records
    std::filesystem::path workdir = "workdir";
    EndpointConfig endpoints;

    int in_flight = 8;
    double rate_per_second = 5.0;
    unsigned max_depth = 5;
    int probe_extra = 0;
    std::size_t top_stems = 17;
    double sample_fraction = 1.0;

    std::string keyword_list_path;
    std::string gateway_map_path;
    std::vector<std::string> asset_keys = {"image", "image_url", "animation_url"};

    bool stamp_reports = false; // embed wall-clock generated_at (breaks rerun identity)
    long fail_after = -1;       // abort probe run after N cache appends (testing)
};

// Overlays, strongest last: JSON config file, environment, CLI flags.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
void apply_environment(RunConfig& config);
// Throws UsageError on non-positive limits or an unwritable workdir.
void validate(const RunConfig& config);

// Fixed stage-file names under the workdir.
std::filesystem::path reference_list_path(const RunConfig&);
std::filesystem::path samples_path(const RunConfig&);
std::filesystem::path probes_path(const RunConfig&);
std::filesystem::path probe_cache_path(const RunConfig&);
std::filesystem::path probe_failures_path(const RunConfig&);
std::filesystem::path stem_mismatches_path(const RunConfig&);
std::filesystem::path categories_path(const RunConfig&);
std::filesystem::path traces_path(const RunConfig&);

// Subcommands; each returns a process exit code (0 success, 1 usage,
// 2 data error, 3 endpoint error) and reports progress on `out`.
int cmd_ingest(const RunConfig& config, std::ostream& out);
int cmd_probe(const RunConfig& config, std::ostream& out);
int cmd_classify(const RunConfig& config, std::ostream& out);
int cmd_resolve(const RunConfig& config, std::ostream& out);
int cmd_report(const RunConfig& config, std::ostream& out);
int cmd_audit(const RunConfig& config, const std::string& contract_address,
              const std::string& token_id, std::ostream& out);

} // namespace nftaudit::cli
