#include <doctest.h>

#include <atomic>
#include <random>

#include "nftaudit/chainio.hpp"
#include "nftaudit/report.hpp"

#include "test_util.hpp"

using namespace nftaudit;

namespace {

std::string addr(int i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "0x%040x", i);
    return buf;
}

class CountingExplorer : public ExplorerClient {
public:
    explicit CountingExplorer(AbiResult result) : result_(std::move(result)) {}
    AbiResult get_abi(const std::string& address) override {
        ++calls;
        AbiResult r = result_;
        r.contract_address = address;
        return r;
    }
    std::atomic<int> calls{0};

private:
    AbiResult result_;
};

class CountingNode : public NodeClient {
public:
    explicit CountingNode(NodeReply reply) : reply_(std::move(reply)) {}
    NodeReply call_token_uri(const std::string&, const TokenId&) override {
        ++calls;
        return reply_;
    }
    std::atomic<int> calls{0};

private:
    NodeReply reply_;
};

class FlakyExplorer : public ExplorerClient {
public:
    FlakyExplorer(int failures_before_success, AbiResult result)
        : remaining_(failures_before_success), result_(std::move(result)) {}
    AbiResult get_abi(const std::string& address) override {
        ++calls;
        if (remaining_-- > 0) throw TransportError("connection reset");
        AbiResult r = result_;
        r.contract_address = address;
        return r;
    }
    int calls = 0;

private:
    int remaining_;
    AbiResult result_;
};

AbiResult verified_abi(const std::string& address) {
    AbiResult abi;
    abi.contract_address = address;
    abi.status = AbiStatus::verified;
    abi.abi_document = nlohmann::json::parse(testutil::kMinimalErc721Abi);
    abi.raw_response = testutil::explorer_verified_body();
    return abi;
}

AbiResult unverified_abi(const std::string& address) {
    AbiResult abi;
    abi.contract_address = address;
    abi.status = AbiStatus::not_verified;
    abi.raw_response = testutil::errors::not_verified;
    return abi;
}

} // namespace

TEST_CASE("calldata packs the selector and a 32-byte token id") {
    CHECK(build_token_uri_calldata(TokenId(1)) ==
          "0xc87b56dd0000000000000000000000000000000000000000000000000000000000000001");
    CHECK(build_token_uri_calldata(*TokenId::parse("1652610435")) ==
          "0xc87b56dd000000000000000000000000000000000000000000000000000000006280d583");
}

TEST_CASE("decode_eth_string unpacks a dynamic string return") {
    // offset 0x20, length 9, "https://x" padded to a 32-byte word
    std::string hex = "0x";
    hex += std::string(62, '0') + "20";
    hex += std::string(62, '0') + "09";
    std::string data = "68747470733a2f2f78"; // "https://x"
    hex += data + std::string(64 - data.size(), '0');
    auto decoded = decode_eth_string(hex);
    REQUIRE(decoded.has_value());
    CHECK(*decoded == "https://x");

    CHECK(decode_eth_string("0x") == std::string{});
    CHECK_FALSE(decode_eth_string("0x1234").has_value());
}

TEST_CASE("failure strings map onto the outcome taxonomy") {
    CHECK(classify_token_uri_failure(testutil::errors::nonexistent) ==
          TokenUriStatus::nonexistent_token);
    CHECK(classify_token_uri_failure(testutil::errors::no_method) ==
          TokenUriStatus::method_missing);
    // Unrecognized strings land in the invalid-token catch-all bucket.
    CHECK(classify_token_uri_failure("some new revert reason") ==
          TokenUriStatus::nonexistent_token);
}

TEST_CASE("classify_readability covers the full outcome table") {
    auto outcome = [](TokenUriStatus status) {
        TokenUriOutcome o;
        o.status = status;
        if (status == TokenUriStatus::uri) o.value = "https://x/1.json";
        return std::optional<TokenUriOutcome>(o);
    };
    AbiResult verified = verified_abi(addr(1));
    AbiResult unverified = unverified_abi(addr(1));

    CHECK(classify_readability(unverified, std::nullopt) == Readability::bytecode_only);
    CHECK(classify_readability(verified, outcome(TokenUriStatus::uri)) ==
          Readability::readable);
    CHECK(classify_readability(verified, outcome(TokenUriStatus::nonexistent_token)) ==
          Readability::invalid_abi_or_token_id);
    CHECK(classify_readability(verified, outcome(TokenUriStatus::method_missing)) ==
          Readability::invalid_abi_or_token_id);
    CHECK(classify_readability(verified, outcome(TokenUriStatus::empty_string)) ==
          Readability::empty_string);
    CHECK_THROWS_AS(classify_readability(verified, std::nullopt), DataError);
}

TEST_CASE("every abi/outcome pair maps to exactly one category") {
    AbiResult verified = verified_abi(addr(1));
    for (TokenUriStatus status :
         {TokenUriStatus::uri, TokenUriStatus::nonexistent_token,
          TokenUriStatus::method_missing, TokenUriStatus::empty_string}) {
        TokenUriOutcome o;
        o.status = status;
        o.value = status == TokenUriStatus::uri ? "https://x" : "";
        Readability r = classify_readability(verified, o);
        CHECK(parse_readability(readability_name(r)).has_value());
    }
    CHECK(classify_readability(unverified_abi(addr(2)), std::nullopt) ==
          Readability::bytecode_only);
}

TEST_CASE("fetch_abi rejects malformed addresses without calling out") {
    CountingExplorer explorer(verified_abi(addr(1)));
    CHECK_THROWS_AS(fetch_abi(explorer, "0x123", RetryPolicy::no_wait()), DataError);
    CHECK(explorer.calls == 0);
}

TEST_CASE("fetch_abi retries transport failures with backoff") {
    std::vector<std::chrono::milliseconds> sleeps;
    RetryPolicy policy;
    policy.base_delay = std::chrono::milliseconds(100);
    policy.sleep_fn = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };

    FlakyExplorer explorer(2, verified_abi(addr(1)));
    AbiResult abi = fetch_abi(explorer, addr(1), policy);
    CHECK(abi.status == AbiStatus::verified);
    CHECK(explorer.calls == 3);
    REQUIRE(sleeps.size() == 2);
    CHECK(sleeps[0].count() == 100);
    CHECK(sleeps[1].count() == 200); // doubled
}

TEST_CASE("fetch_abi surfaces exhausted retries as an endpoint error") {
    FlakyExplorer explorer(99, verified_abi(addr(1)));
    RetryPolicy policy = RetryPolicy::no_wait();
    CHECK_THROWS_AS(fetch_abi(explorer, addr(1), policy), EndpointError);
    CHECK(explorer.calls == policy.max_attempts);
}

TEST_CASE("rate-limit replies honor the server-supplied delay") {
    struct RateLimitedOnce : ExplorerClient {
        bool first = true;
        AbiResult get_abi(const std::string& address) override {
            if (first) {
                first = false;
                throw RateLimited("slow down", 1500);
            }
            return unverified_abi(address);
        }
    } explorer;
    std::vector<std::chrono::milliseconds> sleeps;
    RetryPolicy policy;
    policy.sleep_fn = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    fetch_abi(explorer, addr(1), policy);
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0].count() == 1500);
}

TEST_CASE("call_token_uri outcomes") {
    AbiResult verified = verified_abi(addr(1));

    SUBCASE("uri with surrounding whitespace is trimmed") {
        CountingNode node(NodeReply{"  https://x/1.json  ", std::nullopt});
        auto outcome = call_token_uri(node, verified, TokenId(1), RetryPolicy::no_wait());
        CHECK(outcome.status == TokenUriStatus::uri);
        CHECK(outcome.value == "https://x/1.json");
    }
    SUBCASE("whitespace-only value is an empty string outcome") {
        CountingNode node(NodeReply{"   ", std::nullopt});
        auto outcome = call_token_uri(node, verified, TokenId(1), RetryPolicy::no_wait());
        CHECK(outcome.status == TokenUriStatus::empty_string);
    }
    SUBCASE("revert strings become failure outcomes with raw preserved") {
        CountingNode node(NodeReply{std::nullopt, testutil::errors::nonexistent});
        auto outcome = call_token_uri(node, verified, TokenId(1), RetryPolicy::no_wait());
        CHECK(outcome.status == TokenUriStatus::nonexistent_token);
        CHECK(*outcome.raw_error == testutil::errors::nonexistent);
    }
    SUBCASE("an ABI without the method skips the node entirely") {
        AbiResult no_method = verified;
        no_method.abi_document = nlohmann::json::parse(
            R"([{"type":"function","name":"name","inputs":[],"outputs":[]}])");
        CountingNode node(NodeReply{"https://x", std::nullopt});
        auto outcome =
            call_token_uri(node, no_method, TokenId(1), RetryPolicy::no_wait());
        CHECK(outcome.status == TokenUriStatus::method_missing);
        CHECK(node.calls == 0);
    }
    SUBCASE("requires a verified ABI") {
        CountingNode node(NodeReply{"https://x", std::nullopt});
        CHECK_THROWS_AS(
            call_token_uri(node, unverified_abi(addr(1)), TokenId(1), RetryPolicy::no_wait()),
            DataError);
    }
}

TEST_CASE("probe_contract never calls the node for unverified contracts") {
    CountingExplorer explorer(unverified_abi(addr(1)));
    CountingNode node(NodeReply{"https://x", std::nullopt});
    CollectionSample sample{addr(1), TokenId(1), 1};
    ContractProbe probe =
        probe_contract(sample, explorer, node, nullptr, RetryPolicy::no_wait(), 1234);
    CHECK(probe.readability == Readability::bytecode_only);
    CHECK_FALSE(probe.sample_token_uri.has_value());
    CHECK(node.calls == 0);
    CHECK(probe.probe_timestamp == 1234);
}

TEST_CASE("probe_contract serves warm-cache hits without client calls") {
    testutil::TempDir tmp("cache");
    ProbeCache cache(tmp.path() / "cache.jsonl");

    CountingExplorer explorer(verified_abi(addr(1)));
    CountingNode node(NodeReply{"https://x/1.json", std::nullopt});
    CollectionSample sample{addr(1), TokenId(1), 1};

    ContractProbe first =
        probe_contract(sample, explorer, node, &cache, RetryPolicy::no_wait(), 7);
    CHECK(first.readability == Readability::readable);
    CHECK(explorer.calls == 1);
    CHECK(node.calls == 1);

    ContractProbe second =
        probe_contract(sample, explorer, node, &cache, RetryPolicy::no_wait(), 8);
    CHECK(explorer.calls == 1);
    CHECK(node.calls == 1);
    CHECK(second.readability == first.readability);
    CHECK(second.sample_token_uri == first.sample_token_uri);
    CHECK(second.probe_timestamp == first.probe_timestamp); // cached verbatim

    // A fresh cache instance reloads the same record from disk.
    ProbeCache reloaded(tmp.path() / "cache.jsonl");
    CHECK(reloaded.size() == 1);
    CHECK(reloaded.find(addr(1))->probe.sample_token_uri == first.sample_token_uri);
}

TEST_CASE("probe cache tolerates a truncated trailing line") {
    testutil::TempDir tmp("cache");
    auto path = tmp.path() / "cache.jsonl";
    {
        ProbeCache cache(path);
        CacheRecord record;
        record.probe.contract_address = addr(1);
        record.probe.readability = Readability::readable;
        record.probe.sample_token_uri = "https://x/1.json";
        cache.append(record);
    }
    // Simulate a crash mid-append.
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << "{\"contract_address\":\"0x00";
    out.close();

    ProbeCache cache(path);
    CHECK(cache.size() == 1);
    CHECK(cache.find(addr(1)).has_value());
}

TEST_CASE("fixture clients replay the error-taxonomy corpus") {
    testutil::TempDir tmp("fixtures");
    testutil::write_corpus_fixtures(tmp.path());
    auto explorer = make_fixture_explorer_client(tmp.path());
    auto node = make_fixture_node_client(tmp.path());

    using namespace testutil::contracts;
    auto probe = [&](const std::string& address, const std::string& token) {
        CollectionSample sample{address, *TokenId::parse(token), 1};
        return probe_contract(sample, *explorer, *node, nullptr,
                              RetryPolicy::no_wait(), 0);
    };

    ContractProbe bytecode = probe(bytecode_only, "1");
    CHECK(bytecode.readability == Readability::bytecode_only);
    REQUIRE(bytecode.raw_error.has_value());
    CHECK(bytecode.raw_error->find("not verified") != std::string::npos);

    ContractProbe invalid = probe(bad_token, "1");
    CHECK(invalid.readability == Readability::invalid_abi_or_token_id);
    REQUIRE(invalid.raw_error.has_value());
    CHECK(invalid.raw_error->find("nonexistent token") != std::string::npos);

    ContractProbe missing = probe(no_method, "454");
    CHECK(missing.readability == Readability::invalid_abi_or_token_id);

    ContractProbe empty = probe(empty_uri, "1");
    CHECK(empty.readability == Readability::empty_string);

    ContractProbe readable = probe(cloud, "1652610435");
    CHECK(readable.readability == Readability::readable);
    CHECK(*readable.sample_token_uri == testutil::uris::cloud_meta);
}

TEST_CASE("run_probes partitions categories and is schedule-independent") {
    testutil::TempDir tmp("fixtures");
    testutil::write_corpus_fixtures(tmp.path());
    auto explorer = make_fixture_explorer_client(tmp.path());
    auto node = make_fixture_node_client(tmp.path());

    using namespace testutil::contracts;
    std::vector<CollectionSample> samples = {
        {bytecode_only, TokenId(1), 2}, {bad_token, TokenId(1), 1},
        {no_method, *TokenId::parse("454"), 1}, {empty_uri, TokenId(1), 1},
        {cloud, *TokenId::parse("1652610435"), 1}, {private_domain, TokenId(0), 1},
        {ipfs, TokenId(10), 1}, {pinata, TokenId(2), 1}, {onchain, TokenId(10), 1}};
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) {
                  return a.contract_address < b.contract_address;
              });
    std::vector<TokenRef> refs;
    for (const auto& s : samples) refs.push_back({s.contract_address, s.sample_token_id});

    std::string baseline;
    for (int in_flight : {1, 4}) {
        testutil::TempDir cache_dir("cachedir");
        ProbeCache cache(cache_dir.path() / "cache.jsonl");
        ProbeLimits limits{in_flight, 10000.0, 0};
        ProbeRunResult result = run_probes(samples, refs, *explorer, *node, cache,
                                           limits, RetryPolicy::no_wait());
        CHECK(result.failures.empty());

        std::array<int, 4> counts{};
        for (const auto& probe : result.probes)
            ++counts[static_cast<size_t>(probe.readability)];
        CHECK(counts[static_cast<size_t>(Readability::readable)] == 5);
        CHECK(counts[static_cast<size_t>(Readability::bytecode_only)] == 1);
        CHECK(counts[static_cast<size_t>(Readability::invalid_abi_or_token_id)] == 2);
        CHECK(counts[static_cast<size_t>(Readability::empty_string)] == 1);
        CHECK(counts[0] + counts[1] + counts[2] + counts[3] ==
              static_cast<int>(result.probes.size()));

        std::string serialized = probes_to_jsonl(result.probes);
        if (baseline.empty())
            baseline = serialized;
        else
            CHECK(serialized == baseline);
    }
}

TEST_CASE("run_probes flags failed contracts for re-run instead of dropping them") {
    struct MissingFixtureExplorer : ExplorerClient {
        AbiResult get_abi(const std::string& address) override {
            throw TransportError("no explorer fixture for " + address);
        }
    } explorer;
    CountingNode node(NodeReply{"https://x", std::nullopt});

    std::vector<CollectionSample> samples = {{addr(1), TokenId(1), 1}};
    testutil::TempDir tmp("cache");
    ProbeCache cache(tmp.path() / "cache.jsonl");
    ProbeRunResult result = run_probes(samples, {}, explorer, node, cache,
                                       ProbeLimits{2, 10000.0, 0}, RetryPolicy::no_wait());
    CHECK(result.probes.empty());
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].contract_address == addr(1));
    CHECK(cache.size() == 0); // failures are never cached as results
}

TEST_CASE("probe_extra validates the one-stem-per-collection assumption") {
    testutil::TempDir tmp("fixtures");
    // Contract A: all tokens share a stem. Contract B: token 2 strays.
    auto write = testutil::write_file;
    write(tmp.path() / "explorer" / (addr(1) + ".json"),
          testutil::explorer_verified_body());
    write(tmp.path() / "explorer" / (addr(2) + ".json"),
          testutil::explorer_verified_body());
    write(tmp.path() / "node" / (addr(1) + ".json"),
          testutil::node_result_body("https://one-stem.example/m/{token_id}.json"));
    write(tmp.path() / "node" / (addr(2) + ".json"),
          testutil::node_result_body("https://first.example/m/{token_id}.json"));
    write(tmp.path() / "node" / (addr(2) + ".2.json"),
          testutil::node_result_body("https://second.example/m/2.json"));

    auto explorer = make_fixture_explorer_client(tmp.path());
    auto node = make_fixture_node_client(tmp.path());

    std::vector<CollectionSample> samples = {{addr(1), TokenId(1), 4},
                                             {addr(2), TokenId(1), 3}};
    std::vector<TokenRef> refs;
    for (int t = 1; t <= 4; ++t) refs.push_back({addr(1), TokenId(t)});
    for (int t = 1; t <= 3; ++t) refs.push_back({addr(2), TokenId(t)});
    std::sort(refs.begin(), refs.end());

    testutil::TempDir cache_dir("cache");
    ProbeCache cache(cache_dir.path() / "cache.jsonl");
    ProbeRunResult result = run_probes(samples, refs, *explorer, *node, cache,
                                       ProbeLimits{4, 10000.0, 3}, RetryPolicy::no_wait());
    CHECK(result.failures.empty());
    REQUIRE(result.mismatches.size() == 1);
    CHECK(result.mismatches[0].contract_address == addr(2));
    CHECK(result.mismatches[0].token_id == "2");
    CHECK(result.mismatches[0].sample_stem == "https://first.example");
    CHECK(result.mismatches[0].token_stem == "https://second.example");
}

TEST_CASE("probes stage file round-trips") {
    std::vector<ContractProbe> probes(2);
    probes[0].contract_address = addr(1);
    probes[0].readability = Readability::readable;
    probes[0].sample_token_uri = "ipfs://QmX/1.json";
    probes[1].contract_address = addr(2);
    probes[1].readability = Readability::bytecode_only;
    probes[1].raw_error = testutil::errors::not_verified;

    testutil::TempDir tmp("probes");
    auto path = tmp.path() / "probes.jsonl";
    testutil::write_file(path, probes_to_jsonl(probes));
    auto loaded = read_probes_jsonl(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].sample_token_uri == probes[0].sample_token_uri);
    CHECK(loaded[1].readability == Readability::bytecode_only);
    CHECK(loaded[1].raw_error == probes[1].raw_error);
}
