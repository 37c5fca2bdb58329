#include <iostream>

#include <CLI11.hpp>

#include "nftaudit/cli.hpp"
#include "nftaudit/errors.hpp"

using nftaudit::cli::RunConfig;

int main(int argc, char** argv) {
    CLI::App app{"ERC-721 metadata permanence auditor"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;

    app.add_option("--workdir", config.workdir, "directory for caches and stage outputs");
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--fixtures", config.endpoints.fixtures_dir,
                   "replay per-address fixture files instead of live endpoints");
    app.add_option("--rate", config.rate_per_second, "client calls per second per endpoint");
    app.add_option("--in-flight", config.in_flight, "max concurrent contract probes");
    app.add_option("--max-depth", config.max_depth, "resolution fetch bound");
    app.add_option("--probe-extra", config.probe_extra,
                   "validate the collection assumption on N extra tokens per contract");
    app.add_option("--keywords", config.keyword_list_path,
                   "cloud keyword list (one per line)");
    app.add_option("--gateway-map", config.gateway_map_path,
                   "gateway rewrite rules ('prefix -> replacement' per line)");
    app.add_option("--top-stems", config.top_stems, "URI stems to rank in reports");
    app.add_flag("--stamp", config.stamp_reports,
                 "embed wall-clock time in reports (breaks rerun byte-identity)");
    app.add_option("--fail-after", config.fail_after,
                   "abort the probe run after N cache writes (testing)");

    auto* ingest = app.add_subcommand("ingest", "load events, build the reference list");
    ingest->add_option("--input", config.input_path, "activity export")->required();
    ingest->add_option("--format", config.format,
                       "auto | delimited_text | line_records");

    app.add_subcommand("probe", "fetch ABIs and execute tokenURI per contract");
    app.add_subcommand("classify", "assign a storage category to every token");

    auto* resolve = app.add_subcommand("resolve", "follow tokenURIs to final assets");
    resolve->add_option("--sample-fraction", config.sample_fraction,
                        "deterministic contract sample in (0, 1]");

    app.add_subcommand("report", "aggregate counts, percentages and top stems");

    std::string audit_address, audit_token;
    auto* audit = app.add_subcommand("audit", "end-to-end report for a single token");
    audit->add_option("contract_address", audit_address)->required();
    audit->add_option("token_id", audit_token)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (!config_path.empty()) nftaudit::cli::apply_config_file(config, config_path);
        nftaudit::cli::apply_environment(config);

        if (ingest->parsed()) return nftaudit::cli::cmd_ingest(config, std::cout);
        if (app.get_subcommand("probe")->parsed())
            return nftaudit::cli::cmd_probe(config, std::cout);
        if (app.get_subcommand("classify")->parsed())
            return nftaudit::cli::cmd_classify(config, std::cout);
        if (resolve->parsed()) return nftaudit::cli::cmd_resolve(config, std::cout);
        if (app.get_subcommand("report")->parsed())
            return nftaudit::cli::cmd_report(config, std::cout);
        if (audit->parsed())
            return nftaudit::cli::cmd_audit(config, audit_address, audit_token,
                                            std::cout);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const nftaudit::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const nftaudit::EndpointError& e) {
        std::cerr << "endpoint error: " << e.what() << "\n";
        return 3;
    } catch (const nftaudit::TransportError& e) {
        std::cerr << "endpoint error: " << e.what() << "\n";
        return 3;
    } catch (const nftaudit::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
