#include <doctest.h>

#include <random>

#include "nftaudit/base64.hpp"
#include "nftaudit/classify.hpp"

#include "oracle_base64.hpp"
#include "test_util.hpp"

using namespace nftaudit;

TEST_CASE("split_uri extracts scheme and host root") {
    UriStem stem = split_uri("https://blockdataanalysis.com/v1/22");
    CHECK(stem.scheme == "https");
    CHECK(stem.host_root == "blockdataanalysis.com");
    CHECK(stem.raw == "https://blockdataanalysis.com/v1/22");
}

TEST_CASE("split_uri lowercases scheme and host but preserves raw") {
    UriStem stem = split_uri("HTTPS://BlockDataAnalysis.COM/V1/22");
    CHECK(stem.scheme == "https");
    CHECK(stem.host_root == "blockdataanalysis.com");
    CHECK(stem.raw == "HTTPS://BlockDataAnalysis.COM/V1/22");
}

TEST_CASE("split_uri handles data URIs") {
    UriStem stem = split_uri("data:application/json;base64,AAAA");
    CHECK(stem.scheme == "data");
    CHECK(stem.host_root.empty());
}

TEST_CASE("split_uri keeps gateway-style ipfs hosts") {
    UriStem stem = split_uri("ipfs://ipfs/QmSS78vR7k/image.png");
    CHECK(stem.scheme == "ipfs");
    CHECK(stem.host_root == "ipfs");
}

TEST_CASE("split_uri scheme-less input uses the first path segment") {
    UriStem stem = split_uri("www.foo.com/x/y");
    CHECK(stem.scheme.empty());
    CHECK(stem.host_root == "www.foo.com");
}

TEST_CASE("split_uri rejects empty input") {
    CHECK_THROWS_AS(split_uri("   "), DataError);
}

TEST_CASE("split_uri stops the host at query or fragment") {
    CHECK(split_uri("https://api.foo.com?id=1").host_root == "api.foo.com");
    CHECK(split_uri("https://api.foo.com#frag").host_root == "api.foo.com");
}

namespace {

StorageCategory classify(const std::string& uri) {
    return classify_uri(split_uri(uri), default_cloud_keywords());
}

} // namespace

TEST_CASE("classify_uri places each example URI in its category") {
    CHECK(classify(testutil::uris::cloud_meta).kind == StorageKind::cloud_provider);
    CHECK(classify(testutil::uris::private_meta).kind == StorageKind::private_domain);
    CHECK(classify(testutil::uris::ipfs_meta).kind == StorageKind::ipfs);
    CHECK(classify(testutil::uris::pinata_meta).kind == StorageKind::pinata);
    CHECK(classify("data:application/json;base64,eyJ4IjoxfQ==").kind ==
          StorageKind::onchain_base64);
}

TEST_CASE("classify_uri pinata precedes ipfs for gateway hosts") {
    // The gateway URI contains "ipfs" in host and path; pinata still wins.
    StorageCategory c = classify(testutil::uris::pinata_meta);
    CHECK(c.kind == StorageKind::pinata);
    CHECK(c.kind != StorageKind::ipfs);
}

TEST_CASE("classify_uri matches cloud keywords in list order") {
    // "aws" precedes "s3" in the keyword list and both occur in this host.
    StorageCategory c = classify(testutil::uris::cloud_meta);
    CHECK(c.kind == StorageKind::cloud_provider);
    CHECK(c.cloud_keyword == "aws");

    StorageCategory s3_only = classify("https://mybucket.s3.example-storage.net/1.json");
    CHECK(s3_only.kind == StorageKind::cloud_provider);
    CHECK(s3_only.cloud_keyword == "s3");
}

TEST_CASE("classify_uri detects ipfs by scheme and by host substring") {
    CHECK(classify("ipfs://QmX/1.json").kind == StorageKind::ipfs);
    CHECK(classify(testutil::uris::ipfs_image).kind == StorageKind::ipfs);
    CHECK(classify("https://cloudflare-ipfs.com/ipfs/QmX").kind == StorageKind::ipfs);
}

TEST_CASE("classify_uri does not scan paths for ipfs") {
    // Private domains that merely mention ipfs in the path stay private.
    CHECK(classify("https://example.com/ipfs/QmX").kind == StorageKind::private_domain);
}

TEST_CASE("classify_uri treats base64 image data URIs as on-chain") {
    CHECK(classify("data:image/svg+xml;base64,PHN2Zy8+").kind ==
          StorageKind::onchain_base64);
    // Non-base64, non-JSON data URIs are private-domain-equivalent anomalies.
    CHECK(classify("data:text/plain,hello").kind == StorageKind::private_domain);
}

TEST_CASE("classify_uri is case-insensitive over scheme and host") {
    const std::vector<std::string> samples = {
        testutil::uris::cloud_meta, testutil::uris::private_meta,
        testutil::uris::ipfs_meta,  testutil::uris::pinata_meta,
        "data:application/json;base64,eyJ4IjoxfQ==",
    };
    for (const auto& uri : samples) {
        std::string upper = uri;
        for (char& c : upper)
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        CHECK(classify(uri).kind == classify(upper).kind);
    }
}

TEST_CASE("classify_uri assigns exactly one category to random stems") {
    std::mt19937 rng(11);
    auto random_host = [&] {
        static const std::vector<std::string> parts = {
            "foo",  "bar",   "ipfs", "pinata", "aws", "s3",
            "shop", "media", "art",  "baz",    "qux"};
        std::string host = parts[rng() % parts.size()];
        for (int i = 0; i < 2; ++i) host += "." + parts[rng() % parts.size()];
        return host;
    };
    for (int i = 0; i < 500; ++i) {
        std::string uri = "https://" + random_host() + "/x/" + std::to_string(i);
        StorageCategory c = classify(uri);
        // One of the six kinds, and the rollup covers it.
        auto name = storage_kind_name(c.kind);
        CHECK(parse_storage_kind(name).has_value());
        auto p = map_permanence(c.kind);
        CHECK((p == PermanenceClass::permanent || p == PermanenceClass::non_permanent ||
               p == PermanenceClass::not_readable));
    }
}

TEST_CASE("map_permanence rolls the six categories into three classes") {
    CHECK(map_permanence(StorageKind::ipfs) == PermanenceClass::permanent);
    CHECK(map_permanence(StorageKind::pinata) == PermanenceClass::permanent);
    CHECK(map_permanence(StorageKind::onchain_base64) == PermanenceClass::permanent);
    CHECK(map_permanence(StorageKind::cloud_provider) == PermanenceClass::non_permanent);
    CHECK(map_permanence(StorageKind::private_domain) == PermanenceClass::non_permanent);
    CHECK(map_permanence(StorageKind::unreadable) == PermanenceClass::not_readable);
}

TEST_CASE("load_cloud_keywords reads one keyword per line") {
    testutil::TempDir tmp("keywords");
    testutil::write_file(tmp.path() / "kw.txt", "# comment\nAWS\n\ns3\n");
    auto kws = load_cloud_keywords(tmp.path() / "kw.txt");
    REQUIRE(kws.size() == 2);
    CHECK(kws[0] == "aws");
    CHECK(kws[1] == "s3");
}

TEST_CASE("default keyword list holds the twelve providers") {
    CHECK(default_cloud_keywords().size() == 12);
    CHECK(default_cloud_keywords().front() == "heroku");
    CHECK(default_cloud_keywords().back() == "tencent");
}

// ---- data URI decoding ------------------------------------------------------

TEST_CASE("base64 matches the independent oracle") {
    CHECK(testutil::oracle_base64(R"({"name":"A"})") == "eyJuYW1lIjoiQSJ9");
    CHECK(base64_encode(R"({"name":"A"})") == "eyJuYW1lIjoiQSJ9");
    CHECK(testutil::oracle_base64("<svg/>") == "PHN2Zy8+");
    CHECK(base64_encode("<svg/>") == "PHN2Zy8+");

    std::mt19937 rng(23);
    for (int i = 0; i < 200; ++i) {
        std::string bytes;
        size_t len = rng() % 48;
        for (size_t j = 0; j < len; ++j)
            bytes.push_back(static_cast<char>(rng() & 0xff));
        CHECK(base64_encode(bytes) == testutil::oracle_base64(bytes));
        auto decoded = base64_decode(testutil::oracle_base64(bytes));
        REQUIRE(decoded.has_value());
        CHECK(*decoded == bytes);
    }
}

TEST_CASE("decode_onchain_json decodes a frozen oracle value") {
    OnChainAsset asset =
        decode_onchain_json("data:application/json;base64,eyJuYW1lIjoiQSJ9");
    CHECK(asset.metadata == nlohmann::json{{"name", "A"}});
    CHECK(asset.metadata_raw == R"({"name":"A"})");
}

TEST_CASE("decode_onchain_json rejects bad inputs distinctly") {
    try {
        decode_onchain_json("https://a.com/1.json");
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.kind == DecodeError::Kind::bad_prefix);
    }
    try {
        decode_onchain_json("data:application/json;base64,!!!");
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.kind == DecodeError::Kind::invalid_base64);
    }
    try {
        decode_onchain_json("data:application/json;base64," + base64_encode("not json"));
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.kind == DecodeError::Kind::payload_not_parseable);
        CHECK(e.raw_payload == "not json");
    }
}

TEST_CASE("decode_onchain_json accepts case variation in the media type") {
    OnChainAsset asset =
        decode_onchain_json("data:APPLICATION/JSON;base64,eyJuYW1lIjoiQSJ9");
    CHECK(asset.metadata["name"] == "A");
}

TEST_CASE("decode_onchain_image decodes the second layer") {
    nlohmann::json meta = {{"name", "x"},
                           {"image", "data:image/svg+xml;base64,PHN2Zy8+"}};
    OnChainAsset asset = decode_onchain_json(make_json_data_uri(meta));
    decode_onchain_image(asset);
    REQUIRE(asset.image_payload.has_value());
    CHECK(*asset.image_payload == "<svg/>");
    CHECK(*asset.image_media_type == "image/svg+xml");
}

TEST_CASE("decode_onchain_image leaves remote and absent images alone") {
    nlohmann::json remote = {{"image", "ipfs://QmX/img.png"}};
    OnChainAsset asset = decode_onchain_json(make_json_data_uri(remote));
    decode_onchain_image(asset);
    CHECK_FALSE(asset.image_payload.has_value());
    CHECK_FALSE(asset.image_media_type.has_value());

    nlohmann::json no_image = {{"name", "x"}};
    asset = decode_onchain_json(make_json_data_uri(no_image));
    decode_onchain_image(asset);
    CHECK_FALSE(asset.image_payload.has_value());
}

TEST_CASE("decode_onchain_image flags a corrupt second layer") {
    nlohmann::json meta = {{"image", "data:image/svg+xml;base64,@@@@"}};
    OnChainAsset asset = decode_onchain_json(make_json_data_uri(meta));
    CHECK_THROWS_AS(decode_onchain_image(asset), DecodeError);
}

TEST_CASE("two-layer round trip over random documents and byte strings") {
    std::mt19937 rng(31);
    auto random_text = [&](size_t max_len) {
        static const char chars[] =
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-#";
        std::string s;
        size_t len = rng() % max_len;
        for (size_t i = 0; i < len; ++i) s.push_back(chars[rng() % (sizeof(chars) - 1)]);
        return s;
    };
    for (int i = 0; i < 100; ++i) {
        std::string svg = "<svg>" + random_text(64) + "</svg>";
        nlohmann::json doc = {{"name", random_text(24)},
                              {"description", random_text(48)},
                              {"image", make_svg_data_uri(svg, i % 2 == 1, i % 3 == 0)}};
        bool url_safe = i % 2 == 0;
        bool strip = i % 5 == 0;
        OnChainAsset asset = decode_onchain_json(make_json_data_uri(doc, url_safe, strip));
        CHECK(asset.metadata == doc);
        CHECK(asset.metadata_raw == doc.dump());
        decode_onchain_image(asset);
        REQUIRE(asset.image_payload.has_value());
        CHECK(*asset.image_payload == svg);
    }
}

TEST_CASE("export_onchain_asset writes json and svg files") {
    testutil::TempDir tmp("export");
    nlohmann::json meta = {{"name", "x"}, {"image", make_svg_data_uri("<svg/>")}};
    OnChainAsset asset = decode_onchain_json(make_json_data_uri(meta));
    decode_onchain_image(asset);
    auto written = export_onchain_asset(tmp.path(), "0xabc", "7", asset);
    REQUIRE(written.size() == 2);
    CHECK(testutil::slurp(tmp.path() / "0xabc_7.json") == meta.dump());
    CHECK(testutil::slurp(tmp.path() / "0xabc_7.svg") == "<svg/>");
}

TEST_CASE("storage labels round-trip and annotate cloud keywords") {
    CHECK(storage_label({StorageKind::ipfs, {}}) == "ipfs");
    CHECK(storage_label({StorageKind::cloud_provider, "aws"}) == "cloud_provider(aws)");
    CHECK(*parse_storage_kind("onchain_base64") == StorageKind::onchain_base64);
    CHECK_FALSE(parse_storage_kind("nonsense").has_value());
}
