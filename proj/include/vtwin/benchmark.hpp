#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vtwin/csv.hpp"
#include "vtwin/datasets.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/sim.hpp"

namespace vtwin {

/// Synthetic stand-ins for the two benchmark corpora, produced by the
/// bundled simulator when no real capture files are configured. Shapes match
/// the ingestion pipeline: jamming-flavored captures for the merge path and a
/// flood-flavored capture for the composition path.

/// Capture scenario behind one jamming-flavored file: sized so each file
/// yields 400 jammed windows and a little over 1000 clean ones, leaving
/// headroom above the 2000 benign rows the composed benchmark needs.
inline Scenario rf_standin_scenario(std::uint64_t seed) {
    Scenario s;
    s.params = {5.0, 4.0, 10};
    s.duration = 1450.0;
    s.seed = seed;
    s.feature_window = 1.0;
    s.attacks = {AttackProfile::jam(500.0, 900.0, 0.5, 7.0)};
    return s;
}

/// Flood-flavored capture: 500 attacked windows out of 700, well over the
/// 400 the composed benchmark draws.
inline Scenario ton_standin_scenario(std::uint64_t seed) {
    Scenario s;
    s.params = {5.0, 4.0, 10};
    s.duration = 700.0;
    s.seed = seed;
    s.feature_window = 1.0;
    s.attacks = {AttackProfile::flood(100.0, 600.0, 7.0)};
    return s;
}

namespace detail {

// Windowized features re-labelled with a source file's column vocabulary,
// plus its ground-truth indicator column.
inline RawTable windows_to_raw(const FeatureTable& windows, const SchemaMap& map,
                               const std::string& source_kind, const std::string& name) {
    const SchemaSource& src = map.source(source_kind);
    RawTable raw;
    raw.source_name = name;
    for (const auto& col : windows.column_names) {
        std::string out_name = col;
        for (const auto& [canonical, source_col] : src.columns)
            if (canonical == col) {
                out_name = source_col;
                break;
            }
        raw.column_names.push_back(out_name);
    }
    raw.column_names.push_back(src.label_column);
    for (std::size_t r = 0; r < windows.n_rows(); ++r) {
        std::vector<std::string> cells;
        cells.reserve(windows.n_cols() + 1);
        for (double v : windows.rows[r]) cells.push_back(csv::format_double(v));
        cells.push_back(windows.labels && (*windows.labels)[r] == kAttack ? "1" : "0");
        raw.rows.push_back(std::move(cells));
    }
    return raw;
}

} // namespace detail

inline RawTable make_rf_standin(std::uint64_t seed, const SchemaMap& map,
                                const std::string& name) {
    const TraceLog trace = run(rf_standin_scenario(seed));
    const FeatureTable windows = windowize(trace, trace.scenario.feature_window);
    return detail::windows_to_raw(windows, map, "rf_jamming", name);
}

inline RawTable make_ton_standin(std::uint64_t seed, const SchemaMap& map,
                                 const std::string& name) {
    const TraceLog trace = run(ton_standin_scenario(seed));
    const FeatureTable windows = windowize(trace, trace.scenario.feature_window);
    RawTable raw = detail::windows_to_raw(windows, map, "ton_iot", name);
    // a connection-state code with no counterpart in the shared schema; the
    // ingestion step must drop it
    raw.column_names.push_back("conn_state");
    for (std::size_t r = 0; r < raw.rows.size(); ++r)
        raw.rows[r].push_back(std::to_string(r % 3 + 1));
    return raw;
}

inline void write_raw_csv(const RawTable& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    csv::write_record(os, t.column_names);
    for (const auto& row : t.rows) csv::write_record(os, row);
}

/// The jamming benchmark table: two capture files merged over their shared
/// columns with per-file collection speeds.
inline FeatureTable build_dataset1(const RawTable& rf_a, const RawTable& rf_b, double speed_a,
                                   double speed_b, const SchemaMap& map, IngestLog* log = nullptr) {
    return merge_rf_jamming(rf_a, rf_b, speed_a, speed_b, map.source("rf_jamming").label_column,
                            log);
}

/// The composed benchmark: benign windows of the merge joined with flood
/// attack windows, columns reduced to the shared canonical set.
inline Composition build_dataset2(const FeatureTable& dataset1, const RawTable& ton,
                                  const SchemaMap& map, std::uint64_t seed,
                                  IngestLog* ton_log = nullptr) {
    const FeatureTable canonical = rename_canonical(dataset1, map, "rf_jamming");
    const FeatureTable attack = to_features(ton, map, "ton_iot", ton_log);
    return compose_dataset2(canonical, attack, seed);
}

} // namespace vtwin
