#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtwin/csv.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/rng.hpp"
#include "vtwin/sim.hpp"

namespace vtwin {

enum class SamplingMode { bernoulli, stride };

/// How the twin layer samples the data-layer stream. `gamma` is the twinning
/// rate in percent of items mirrored.
struct TwinConfig {
    double gamma = 100.0;
    SamplingMode sampling = SamplingMode::stride;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(gamma > 0.0) || gamma > 100.0 || !std::isfinite(gamma))
            throw invalid_config_error("twinning: gamma must be in (0, 100]");
    }
};

/// One mirrored observation, shaped for structured transfer to the security
/// layer: fixed schema, canonical field order, named numeric payload.
/// `label_hint` carries ground truth for evaluation only; it must never feed
/// the detector.
struct TransferRecord {
    std::string schema_version = "1";
    std::string rsu_id;
    double timestamp = 0.0;
    std::vector<std::string> payload_names;
    std::vector<double> payload_values;
    std::optional<int> label_hint;

    bool operator==(const TransferRecord&) const = default;
};

/// Result of mirroring a stream: counters for the achieved rate plus the
/// retained records and their cumulative serialized size.
struct TwinStream {
    std::uint64_t taken = 0; // items mirrored into the twin layer
    std::uint64_t total = 0; // items seen at the data layer
    std::vector<TransferRecord> records;
    std::uint64_t ram_bytes = 0;
    // index of each mirrored record in the source stream
    std::vector<std::size_t> source_index;
};

/// Achieved twinning rate in percent: 100 * taken / total.
inline double twinning_rate(std::uint64_t taken, std::uint64_t total) {
    if (total == 0) throw invalid_parameter_error("twinning rate: total count is zero");
    if (taken > total) throw invalid_parameter_error("twinning rate: taken exceeds total");
    return 100.0 * static_cast<double>(taken) / static_cast<double>(total);
}

// ---- canonical byte encoding ----
// Layout (all integers little-endian):
//   magic "VTR1"
//   u32 len + bytes            schema_version
//   u32 len + bytes            rsu_id
//   f64                        timestamp
//   u32 field count, then per field: u32 len + name bytes, f64 value
//   u8 label flag (0/1), i32 label when flag = 1

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct ByteReader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw schema_error("transfer record: truncated encoding");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data.data() + pos), n);
        pos += n;
        return s;
    }
};

} // namespace detail

/// Canonical, byte-stable encoding; identical records produce identical
/// bytes. Throws schema_error when required fields are missing.
inline std::vector<std::uint8_t> encode_transfer(const TransferRecord& r) {
    if (r.schema_version.empty()) throw schema_error("transfer record: schema_version is required");
    if (r.rsu_id.empty()) throw schema_error("transfer record: rsu_id is required");
    if (r.payload_names.size() != r.payload_values.size())
        throw schema_error("transfer record: payload names/values length mismatch");
    std::vector<std::uint8_t> out;
    out.reserve(32 + 16 * r.payload_names.size());
    out.insert(out.end(), {'V', 'T', 'R', '1'});
    detail::put_str(out, r.schema_version);
    detail::put_str(out, r.rsu_id);
    detail::put_f64(out, r.timestamp);
    detail::put_u32(out, static_cast<std::uint32_t>(r.payload_names.size()));
    for (std::size_t i = 0; i < r.payload_names.size(); ++i) {
        detail::put_str(out, r.payload_names[i]);
        detail::put_f64(out, r.payload_values[i]);
    }
    out.push_back(r.label_hint ? 1 : 0);
    if (r.label_hint) detail::put_u32(out, static_cast<std::uint32_t>(*r.label_hint));
    return out;
}

inline TransferRecord decode_transfer(std::span<const std::uint8_t> bytes) {
    detail::ByteReader rd{bytes};
    rd.need(4);
    if (!(bytes[0] == 'V' && bytes[1] == 'T' && bytes[2] == 'R' && bytes[3] == '1'))
        throw schema_error("transfer record: bad magic");
    rd.pos = 4;
    TransferRecord r;
    r.schema_version = rd.str();
    r.rsu_id = rd.str();
    r.timestamp = rd.f64();
    const std::uint32_t nfields = rd.u32();
    r.payload_names.reserve(nfields);
    r.payload_values.reserve(nfields);
    for (std::uint32_t i = 0; i < nfields; ++i) {
        r.payload_names.push_back(rd.str());
        r.payload_values.push_back(rd.f64());
    }
    if (rd.u8()) r.label_hint = static_cast<int>(rd.u32());
    if (rd.pos != bytes.size()) throw schema_error("transfer record: trailing bytes");
    if (r.schema_version.empty() || r.rsu_id.empty())
        throw schema_error("transfer record: required field empty");
    return r;
}

/// Samples the ordered stream into the twin layer. Bernoulli mode keeps each
/// item independently with probability gamma/100; stride mode keeps item k
/// (1-based) iff floor(k*gamma/100) > floor((k-1)*gamma/100), which is
/// deterministic and hits the target rate up to rounding. Order is preserved.
inline TwinStream mirror(std::span<const TransferRecord> stream, const TwinConfig& config) {
    config.validate();
    TwinStream tw;
    tw.total = stream.size();
    Rng rng(derive_seed(config.seed, 0x7731)); // only consumed in bernoulli mode
    const double g = config.gamma / 100.0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        bool take;
        if (config.sampling == SamplingMode::bernoulli) {
            take = rng.uniform01() < g;
        } else {
            const double k = static_cast<double>(i + 1);
            take = std::floor(k * g) > std::floor((k - 1.0) * g);
        }
        if (!take) continue;
        ++tw.taken;
        tw.records.push_back(stream[i]);
        tw.source_index.push_back(i);
        tw.ram_bytes += encode_transfer(stream[i]).size();
    }
    return tw;
}

/// Deterministic memory proxy: cumulative serialized bytes of the retained
/// records.
inline std::uint64_t ram_usage(const TwinStream& tw) { return tw.ram_bytes; }

/// Shapes windowized feature rows into transfer records; row i gets
/// timestamp i * window_seconds. Ground-truth labels ride along as hints.
inline std::vector<TransferRecord> to_transfer_records(const FeatureTable& windows,
                                                       const std::string& rsu_id,
                                                       double window_seconds) {
    std::vector<TransferRecord> out;
    out.reserve(windows.n_rows());
    for (std::size_t i = 0; i < windows.n_rows(); ++i) {
        TransferRecord r;
        r.rsu_id = rsu_id;
        r.timestamp = static_cast<double>(i) * window_seconds;
        r.payload_names = windows.column_names;
        r.payload_values = windows.rows[i];
        if (windows.labels) r.label_hint = (*windows.labels)[i];
        out.push_back(std::move(r));
    }
    return out;
}

/// CSV of the mirrored records plus a sidecar `<path>.meta.json` recording
/// gamma, seed, taken and total.
inline void write_twin_csv(const TwinStream& tw, const TwinConfig& config,
                           const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    os << "source_index,rsu_id,timestamp";
    if (!tw.records.empty())
        for (const auto& name : tw.records.front().payload_names) os << ',' << name;
    os << '\n';
    for (std::size_t i = 0; i < tw.records.size(); ++i) {
        const auto& r = tw.records[i];
        os << tw.source_index[i] << ',' << csv::escape(r.rsu_id) << ','
           << csv::format_double(r.timestamp);
        for (double v : r.payload_values) os << ',' << csv::format_double(v);
        os << '\n';
    }
    std::ofstream meta(path + ".meta.json", std::ios::binary);
    if (!meta) throw io_error("cannot write " + path + ".meta.json");
    meta << "{\n"
         << "  \"gamma\": " << csv::format_double(config.gamma) << ",\n"
         << "  \"sampling\": \""
         << (config.sampling == SamplingMode::bernoulli ? "bernoulli" : "stride") << "\",\n"
         << "  \"seed\": " << config.seed << ",\n"
         << "  \"taken\": " << tw.taken << ",\n"
         << "  \"total\": " << tw.total << "\n}\n";
}

} // namespace vtwin
