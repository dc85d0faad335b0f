#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "vtwin/twinning.hpp"

using namespace vtwin;

namespace {

TransferRecord small_record(std::size_t i) {
    TransferRecord r;
    r.rsu_id = "rsu-7";
    r.timestamp = static_cast<double>(i);
    r.payload_names = {"arrival_count", "mean_wait"};
    r.payload_values = {static_cast<double>(i % 13), 0.25 * static_cast<double>(i % 5)};
    return r;
}

std::vector<TransferRecord> make_stream(std::size_t n) {
    std::vector<TransferRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(small_record(i));
    return out;
}

} // namespace

TEST_CASE("achieved rate formula") {
    CHECK(twinning_rate(760, 1000) == 76.0);
    CHECK(twinning_rate(1000, 1000) == 100.0);
    CHECK(twinning_rate(0, 4) == 0.0);
    CHECK_THROWS_AS(twinning_rate(1, 0), invalid_parameter_error);
    CHECK_THROWS_AS(twinning_rate(5, 4), invalid_parameter_error);
}

TEST_CASE("stride sampling at half rate alternates") {
    const auto stream = make_stream(10);
    const TwinStream tw = mirror(stream, {50.0, SamplingMode::stride, 0});
    CHECK(tw.taken == 5);
    CHECK(tw.total == 10);
    CHECK(tw.source_index == std::vector<std::size_t>{1, 3, 5, 7, 9});
}

TEST_CASE("full rate mirrors everything in order") {
    const auto stream = make_stream(128);
    const TwinStream tw = mirror(stream, {100.0, SamplingMode::stride, 0});
    REQUIRE(tw.taken == 128);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        CHECK(tw.source_index[i] == i);
        CHECK(tw.records[i] == stream[i]);
    }
}

TEST_CASE("stride hits the requested rate up to rounding") {
    const auto stream = make_stream(1000);
    for (double gamma : {7.0, 33.3, 76.0, 99.0}) {
        const TwinStream tw = mirror(stream, {gamma, SamplingMode::stride, 0});
        CHECK(twinning_rate(tw.taken, tw.total) == Catch::Approx(gamma).margin(0.1));
    }
}

TEST_CASE("bernoulli sampling is seeded and near the target rate") {
    const auto stream = make_stream(100000);
    const TwinConfig cfg{76.0, SamplingMode::bernoulli, 42};
    const TwinStream a = mirror(stream, cfg);
    const TwinStream b = mirror(stream, cfg);
    CHECK(a.taken == b.taken);
    CHECK(a.source_index == b.source_index);
    CHECK(static_cast<double>(a.taken) / 100000.0 == Catch::Approx(0.76).margin(0.01));
    const TwinStream c = mirror(stream, {76.0, SamplingMode::bernoulli, 43});
    CHECK(c.source_index != a.source_index);
}

TEST_CASE("mirrored volume grows monotonically with the rate") {
    const auto stream = make_stream(10000);
    std::uint64_t prev_taken = 0, prev_ram = 0;
    for (int g = 10; g <= 100; g += 10) {
        const TwinStream tw = mirror(stream, {static_cast<double>(g), SamplingMode::stride, 0});
        CHECK(tw.taken >= prev_taken);
        CHECK(tw.ram_bytes >= prev_ram);
        prev_taken = tw.taken;
        prev_ram = tw.ram_bytes;
    }
}

TEST_CASE("order and indices are preserved") {
    const auto stream = make_stream(997);
    const TwinStream tw = mirror(stream, {37.0, SamplingMode::stride, 0});
    REQUIRE(tw.records.size() == tw.source_index.size());
    for (std::size_t i = 0; i < tw.records.size(); ++i) {
        if (i) CHECK(tw.source_index[i] > tw.source_index[i - 1]);
        CHECK(tw.records[i] == stream[tw.source_index[i]]);
    }
}

TEST_CASE("memory proxy equals the serialized payload size") {
    const auto stream = make_stream(200);
    const TwinStream tw = mirror(stream, {64.0, SamplingMode::stride, 0});
    std::uint64_t expected = 0;
    for (const auto& r : tw.records) expected += encode_transfer(r).size();
    CHECK(ram_usage(tw) == expected);
    CHECK(tw.ram_bytes == expected);
}

TEST_CASE("rate bounds are enforced") {
    const auto stream = make_stream(10);
    CHECK_THROWS_AS(mirror(stream, {0.0, SamplingMode::stride, 0}), invalid_config_error);
    CHECK_THROWS_AS(mirror(stream, {-5.0, SamplingMode::stride, 0}), invalid_config_error);
    CHECK_THROWS_AS(mirror(stream, {100.5, SamplingMode::stride, 0}), invalid_config_error);
}

TEST_CASE("encoding is canonical") {
    TransferRecord r;
    r.schema_version = "1";
    r.rsu_id = "r";
    r.timestamp = 1.0;
    r.payload_names = {"a"};
    r.payload_values = {2.0};
    r.label_hint = 1;
    const std::vector<std::uint8_t> expected = {
        'V', 'T', 'R', '1',
        1, 0, 0, 0, '1',                      // schema version
        1, 0, 0, 0, 'r',                      // rsu id
        0, 0, 0, 0, 0, 0, 0xf0, 0x3f,         // timestamp 1.0
        1, 0, 0, 0,                           // one payload field
        1, 0, 0, 0, 'a',                      // field name
        0, 0, 0, 0, 0, 0, 0, 0x40,            // value 2.0
        1, 1, 0, 0, 0};                       // label present, label = 1
    CHECK(encode_transfer(r) == expected);
    CHECK(encode_transfer(r) == encode_transfer(r));
}

TEST_CASE("encode/decode round-trips arbitrary records") {
    Rng rng(2718);
    for (int trial = 0; trial < 200; ++trial) {
        TransferRecord r;
        r.schema_version = std::to_string(rng.uniform_int(1, 9));
        r.rsu_id = "rsu-" + std::to_string(rng.uniform_int(0, 9999));
        r.timestamp = rng.uniform(-1e6, 1e6);
        const int fields = static_cast<int>(rng.uniform_int(0, 8));
        for (int f = 0; f < fields; ++f) {
            r.payload_names.push_back("f" + std::to_string(f));
            r.payload_values.push_back(rng.normal(0.0, 1e3));
        }
        if (rng.uniform01() < 0.5) r.label_hint = static_cast<int>(rng.uniform_int(0, 1));
        const auto bytes = encode_transfer(r);
        CHECK(decode_transfer(bytes) == r);
    }
}

TEST_CASE("schema violations are rejected") {
    TransferRecord r;
    r.rsu_id = "";
    CHECK_THROWS_AS(encode_transfer(r), schema_error);

    r.rsu_id = "x";
    r.schema_version = "";
    CHECK_THROWS_AS(encode_transfer(r), schema_error);

    r.schema_version = "1";
    r.payload_names = {"a", "b"};
    r.payload_values = {1.0};
    CHECK_THROWS_AS(encode_transfer(r), schema_error);

    r.payload_values = {1.0, 2.0};
    auto bytes = encode_transfer(r);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_transfer(truncated), schema_error);
    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS(decode_transfer(padded), schema_error);
    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(decode_transfer(corrupt), schema_error);
    CHECK_THROWS_AS(decode_transfer(std::vector<std::uint8_t>{'V', 'T'}), schema_error);
}

TEST_CASE("feature windows become transfer records") {
    FeatureTable t;
    t.column_names = {"arrival_count", "mean_wait"};
    t.rows = {{3.0, 0.5}, {4.0, 0.25}, {9.0, 1.5}};
    t.labels = std::vector<int>{0, 1, 0};
    const auto records = to_transfer_records(t, "rsu-3", 2.0);
    REQUIRE(records.size() == 3);
    CHECK(records[0].timestamp == 0.0);
    CHECK(records[2].timestamp == 4.0);
    CHECK(records[1].rsu_id == "rsu-3");
    CHECK(records[1].payload_names == t.column_names);
    CHECK(records[1].payload_values == t.rows[1]);
    REQUIRE(records[1].label_hint.has_value());
    CHECK(*records[1].label_hint == 1);
    t.labels.reset();
    CHECK_FALSE(to_transfer_records(t, "rsu-3", 2.0)[0].label_hint.has_value());
}
