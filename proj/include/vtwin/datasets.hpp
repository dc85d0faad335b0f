#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtwin/csv.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

/// Verbatim tabular file contents: header plus text cells, nothing coerced.
struct RawTable {
    std::string source_name;
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return column_names.size(); }

    bool has_column(const std::string& name) const {
        return std::find(column_names.begin(), column_names.end(), name) != column_names.end();
    }

    std::size_t col_index(const std::string& name) const {
        for (std::size_t i = 0; i < column_names.size(); ++i)
            if (column_names[i] == name) return i;
        throw schema_error(source_name + ": no column '" + name + "'");
    }
};

inline RawTable load_csv(const std::string& path) {
    const csv::Document doc = csv::parse_file(path);
    RawTable t;
    t.source_name = path;
    t.column_names = doc.header;
    t.rows = doc.rows;
    return t;
}

/// Column-name translation from a source file layout into the canonical
/// feature vocabulary, declared in a versioned mapping file.
struct SchemaSource {
    std::string label_column;                           // source ground-truth column
    std::vector<std::pair<std::string, std::string>> columns; // canonical -> source
};

struct SchemaMap {
    int version = 0;
    std::map<std::string, SchemaSource> sources;

    const SchemaSource& source(const std::string& name) const {
        auto it = sources.find(name);
        if (it == sources.end()) throw schema_error("schema map has no source '" + name + "'");
        return it->second;
    }
};

inline SchemaMap parse_schema_map(const nlohmann::json& j) {
    SchemaMap map;
    try {
        map.version = j.at("version").get<int>();
        for (const auto& [name, src] : j.at("sources").items()) {
            SchemaSource s;
            s.label_column = src.at("label").get<std::string>();
            for (const auto& [canonical, source_col] : src.at("columns").items())
                s.columns.emplace_back(canonical, source_col.get<std::string>());
            std::sort(s.columns.begin(), s.columns.end());
            map.sources[name] = std::move(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("schema map: ") + e.what());
    }
    if (map.version != 1) throw schema_error("schema map: unsupported version");
    return map;
}

inline SchemaMap load_schema_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    return parse_schema_map(j);
}

/// The mapping shipped with the repo (mirrored in data/schema_map.json):
/// traffic-window exports from the bundled simulator under two source
/// flavors, both translated to the canonical window vocabulary.
inline SchemaMap default_schema_map() {
    return parse_schema_map(nlohmann::json::parse(R"({
        "version": 1,
        "sources": {
            "rf_jamming": {
                "label": "attack",
                "columns": {
                    "arrival_count": "pkt_count",
                    "mean_wait": "avg_wait",
                    "max_wait": "max_wait",
                    "drop_count": "dropped",
                    "mean_size": "avg_size",
                    "mean_rssi": "avg_rssi",
                    "mean_speed": "rel_speed",
                    "busy_fraction": "busy"
                }
            },
            "ton_iot": {
                "label": "label",
                "columns": {
                    "arrival_count": "pkt_rate",
                    "mean_wait": "mean_delay",
                    "max_wait": "peak_delay",
                    "drop_count": "loss_cnt",
                    "mean_size": "avg_len",
                    "mean_rssi": "sig_strength",
                    "mean_speed": "speed_est",
                    "busy_fraction": "chan_busy"
                }
            }
        }
    })"));
}

/// Bookkeeping from an ingestion step, surfaced into dataset manifests.
struct IngestLog {
    std::size_t dropped_rows = 0;              // non-numeric / non-finite cells
    std::vector<std::string> dropped_columns;  // present in input, not mappable
};

namespace detail {

inline std::optional<double> to_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

inline int label_from_cell(const std::string& cell, const std::string& context) {
    const auto v = to_number(cell);
    if (!v) throw parse_error(context + ": unreadable label '" + cell + "'");
    return *v != 0.0 ? kAttack : kBenign;
}

} // namespace detail

/// Converts a raw file into canonical numeric features using the schema map:
/// mapped columns are renamed, the source label column becomes the label
/// vector, unmapped columns are dropped (logged), and rows with unreadable or
/// non-finite mapped cells are dropped (counted).
inline FeatureTable to_features(const RawTable& raw, const SchemaMap& map,
                                const std::string& source_kind, IngestLog* log = nullptr) {
    const SchemaSource& src = map.source(source_kind);
    if (!raw.has_column(src.label_column))
        throw schema_error(raw.source_name + ": missing label column '" + src.label_column + "'");
    const std::size_t label_idx = raw.col_index(src.label_column);

    FeatureTable out;
    std::vector<std::size_t> take; // source column index per output column
    std::vector<bool> used(raw.n_cols(), false);
    used[label_idx] = true;
    for (const auto& [canonical, source_col] : src.columns) {
        if (!raw.has_column(source_col)) continue; // partial files allowed
        out.column_names.push_back(canonical);
        take.push_back(raw.col_index(source_col));
        used[take.back()] = true;
    }
    if (out.column_names.empty())
        throw schema_error(raw.source_name + ": no mappable columns for source '" + source_kind +
                           "'");
    if (log)
        for (std::size_t c = 0; c < raw.n_cols(); ++c)
            if (!used[c]) log->dropped_columns.push_back(raw.column_names[c]);

    std::vector<int> labels;
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
        std::vector<double> row;
        row.reserve(take.size());
        bool ok = true;
        for (std::size_t c : take) {
            const auto v = detail::to_number(raw.rows[r][c]);
            if (!v) {
                ok = false;
                break;
            }
            row.push_back(*v);
        }
        if (!ok) {
            if (log) ++log->dropped_rows;
            continue;
        }
        labels.push_back(detail::label_from_cell(raw.rows[r][label_idx],
                                                 raw.source_name + " row " + std::to_string(r)));
        out.rows.push_back(std::move(row));
    }
    out.labels = std::move(labels);
    return out;
}

/// Renames source-flavored columns of an already-numeric table to canonical
/// names; columns outside the mapping keep their names.
inline FeatureTable rename_canonical(const FeatureTable& t, const SchemaMap& map,
                                     const std::string& source_kind) {
    const SchemaSource& src = map.source(source_kind);
    FeatureTable out = t;
    for (auto& name : out.column_names)
        for (const auto& [canonical, source_col] : src.columns)
            if (name == source_col) {
                name = canonical;
                break;
            }
    return out;
}

/// Row-concatenates two same-schema capture files over their shared columns
/// and appends a max_est_rel_speed column holding each file's collection
/// speed. Labels come from the shared attack indicator column.
inline FeatureTable merge_rf_jamming(const RawTable& a, const RawTable& b, double speed_a,
                                     double speed_b, const std::string& label_column = "attack",
                                     IngestLog* log = nullptr) {
    std::vector<std::string> shared;
    for (const auto& name : a.column_names)
        if (name != label_column && b.has_column(name)) shared.push_back(name);
    if (shared.empty())
        throw schema_error("merge: '" + a.source_name + "' and '" + b.source_name +
                           "' have no common feature columns");
    if (!a.has_column(label_column) || !b.has_column(label_column))
        throw schema_error("merge: missing attack indicator column '" + label_column + "'");
    if (log)
        for (const auto& name : a.column_names)
            if (name != label_column && !b.has_column(name)) log->dropped_columns.push_back(name);

    FeatureTable out;
    out.column_names = shared;
    out.column_names.push_back("max_est_rel_speed");
    std::vector<int> labels;
    const auto append = [&](const RawTable& t, double speed) {
        std::vector<std::size_t> take;
        for (const auto& name : shared) take.push_back(t.col_index(name));
        const std::size_t label_idx = t.col_index(label_column);
        for (std::size_t r = 0; r < t.n_rows(); ++r) {
            std::vector<double> row;
            row.reserve(take.size() + 1);
            bool ok = true;
            for (std::size_t c : take) {
                const auto v = detail::to_number(t.rows[r][c]);
                if (!v) {
                    ok = false;
                    break;
                }
                row.push_back(*v);
            }
            if (!ok) {
                if (log) ++log->dropped_rows;
                continue;
            }
            row.push_back(speed);
            labels.push_back(detail::label_from_cell(t.rows[r][label_idx],
                                                     t.source_name + " row " + std::to_string(r)));
            out.rows.push_back(std::move(row));
        }
    };
    append(a, speed_a);
    append(b, speed_b);
    out.labels = std::move(labels);
    return out;
}

/// Benign windows from the capture merge joined with attack windows from the
/// flood-style source: 2000 benign + 400 attack rows over the shared
/// canonical columns. Attack rows are drawn uniformly without replacement
/// under the seed; labels are set purely by which table a row came from.
struct Composition {
    FeatureTable table;
    std::vector<std::string> dropped_no_attack_columns;
    std::vector<std::string> dropped_attack_columns;
};

inline Composition compose_dataset2(const FeatureTable& no_attack, const FeatureTable& attack,
                                    std::uint64_t seed = 0) {
    no_attack.validate();
    attack.validate();
    constexpr std::size_t kBenignRows = 2000, kAttackRows = 400;

    std::vector<std::string> shared;
    for (const auto& name : no_attack.column_names)
        if (attack.has_column(name)) shared.push_back(name);
    if (shared.empty()) throw schema_error("compose: tables share no columns");

    Composition comp;
    for (const auto& name : no_attack.column_names)
        if (!attack.has_column(name)) comp.dropped_no_attack_columns.push_back(name);
    for (const auto& name : attack.column_names)
        if (!no_attack.has_column(name)) comp.dropped_attack_columns.push_back(name);

    std::vector<std::size_t> benign_rows;
    for (std::size_t r = 0; r < no_attack.n_rows(); ++r)
        if (!no_attack.labels || (*no_attack.labels)[r] == kBenign) benign_rows.push_back(r);
    if (benign_rows.size() < kBenignRows)
        throw insufficient_data_error("compose: need " + std::to_string(kBenignRows) +
                                      " benign rows, have " + std::to_string(benign_rows.size()));
    benign_rows.resize(kBenignRows);

    std::vector<std::size_t> attack_rows;
    for (std::size_t r = 0; r < attack.n_rows(); ++r)
        if (!attack.labels || (*attack.labels)[r] == kAttack) attack_rows.push_back(r);
    if (attack_rows.size() < kAttackRows)
        throw insufficient_data_error("compose: need " + std::to_string(kAttackRows) +
                                      " attack rows, have " + std::to_string(attack_rows.size()));
    Rng rng(derive_seed(seed, 0x6432));
    rng.shuffle(attack_rows);
    attack_rows.resize(kAttackRows);
    std::sort(attack_rows.begin(), attack_rows.end()); // keep source time order

    const FeatureTable benign_part = select_columns(no_attack, [&] {
        std::vector<std::size_t> idx;
        for (const auto& name : shared) idx.push_back(no_attack.col_index(name));
        return idx;
    }());
    const FeatureTable attack_part = select_columns(attack, [&] {
        std::vector<std::size_t> idx;
        for (const auto& name : shared) idx.push_back(attack.col_index(name));
        return idx;
    }());

    comp.table.column_names = shared;
    std::vector<int> labels;
    for (std::size_t r : benign_rows) {
        comp.table.rows.push_back(benign_part.rows[r]);
        labels.push_back(kBenign);
    }
    for (std::size_t r : attack_rows) {
        comp.table.rows.push_back(attack_part.rows[r]);
        labels.push_back(kAttack);
    }
    comp.table.labels = std::move(labels);
    return comp;
}

/// Fractions must be in (0,1) and sum to 1. Stratified mode keeps each class
/// ratio within one row per class per part.
struct SplitSpec {
    double train_fraction = 0.7;
    double validation_fraction = 0.15;
    double test_fraction = 0.15;
    bool stratified = true;
    std::uint64_t seed = 0;

    void validate() const {
        for (double f : {train_fraction, validation_fraction, test_fraction})
            if (!(f > 0.0 && f < 1.0))
                throw invalid_parameter_error("split: fractions must lie in (0,1)");
        if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9)
            throw invalid_parameter_error("split: fractions must sum to 1");
    }
};

struct Splits {
    FeatureTable train, validation, test;
};

namespace detail {

// Largest-remainder apportionment of n rows over the three fractions;
// remainders tie toward the earlier part.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitSpec& spec) {
    const double f[3] = {spec.train_fraction, spec.validation_fraction, spec.test_fraction};
    std::array<std::size_t, 3> out{};
    double frac[3];
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * f[i];
        out[i] = static_cast<std::size_t>(std::floor(exact));
        frac[i] = exact - std::floor(exact);
        used += out[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::size_t r = 0; used < n; ++r, ++used) ++out[order[r % 3]];
    return out;
}

} // namespace detail

inline Splits split(const FeatureTable& table, const SplitSpec& spec) {
    spec.validate();
    table.validate();
    if (!table.labels) throw invalid_parameter_error("split: table has no labels");
    if (table.n_rows() < 3) throw insufficient_data_error("split: fewer than 3 rows");

    std::vector<std::vector<std::size_t>> groups;
    if (spec.stratified) {
        std::vector<std::size_t> by_class[2];
        for (std::size_t r = 0; r < table.n_rows(); ++r) by_class[(*table.labels)[r]].push_back(r);
        for (int c = 0; c < 2; ++c)
            if (by_class[c].size() < 3)
                throw class_too_small_error("split: class " + std::to_string(c) + " has " +
                                            std::to_string(by_class[c].size()) +
                                            " rows, stratification needs at least 3");
        groups.push_back(std::move(by_class[0]));
        groups.push_back(std::move(by_class[1]));
    } else {
        std::vector<std::size_t> all(table.n_rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        groups.push_back(std::move(all));
    }

    Rng rng(derive_seed(spec.seed, 0x7370));
    std::vector<std::size_t> part_rows[3];
    for (auto& g : groups) {
        rng.shuffle(g);
        const auto counts = detail::apportion(g.size(), spec);
        std::size_t at = 0;
        for (int p = 0; p < 3; ++p)
            for (std::size_t i = 0; i < counts[p]; ++i) part_rows[p].push_back(g[at++]);
    }
    for (auto& rows : part_rows) std::sort(rows.begin(), rows.end()); // keep original order

    Splits out;
    out.train = take_rows(table, part_rows[0]);
    out.validation = take_rows(table, part_rows[1]);
    out.test = take_rows(table, part_rows[2]);
    return out;
}

/// Canonical on-disk form of a FeatureTable: feature columns in table order,
/// then a trailing `label` column when labels are present.
inline void write_features_csv(const FeatureTable& t, std::ostream& os) {
    t.validate();
    std::vector<std::string> rec = t.column_names;
    if (t.labels) rec.push_back("label");
    csv::write_record(os, rec);
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
        rec.clear();
        for (double v : t.rows[r]) rec.push_back(csv::format_double(v));
        if (t.labels) rec.push_back(std::to_string((*t.labels)[r]));
        csv::write_record(os, rec);
    }
}

inline void write_features_csv(const FeatureTable& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    write_features_csv(t, os);
}

inline FeatureTable read_features_csv(const std::string& path) {
    const csv::Document doc = csv::parse_file(path);
    FeatureTable t;
    bool labelled = !doc.header.empty() && doc.header.back() == "label";
    t.column_names.assign(doc.header.begin(), labelled ? doc.header.end() - 1 : doc.header.end());
    std::vector<int> labels;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        std::vector<double> row;
        row.reserve(t.column_names.size());
        for (std::size_t c = 0; c < t.column_names.size(); ++c)
            row.push_back(csv::parse_double(doc.rows[r][c], path + " row " + std::to_string(r)));
        if (labelled)
            labels.push_back(detail::label_from_cell(doc.rows[r].back(),
                                                     path + " row " + std::to_string(r)));
        t.rows.push_back(std::move(row));
    }
    if (labelled) t.labels = std::move(labels);
    t.validate();
    return t;
}

/// Sidecar describing how a dataset file was produced. Paths are reduced to
/// basenames so reruns from different directories stay byte-identical.
inline void write_dataset_manifest(const std::string& dataset_path,
                                   const std::vector<std::string>& source_files,
                                   const IngestLog& log, std::uint64_t seed) {
    nlohmann::json j;
    j["seed"] = seed;
    j["dropped_rows"] = log.dropped_rows;
    j["dropped_columns"] = log.dropped_columns;
    std::vector<std::string> bases;
    for (const auto& s : source_files) {
        const auto slash = s.find_last_of('/');
        bases.push_back(slash == std::string::npos ? s : s.substr(slash + 1));
    }
    j["sources"] = bases;
    const std::string path = dataset_path + ".manifest.json";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    os << j.dump(2) << '\n';
}

} // namespace vtwin
