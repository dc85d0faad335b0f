#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vtwin/clustering.hpp"
#include "vtwin/csv.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/feature_selection.hpp"
#include "vtwin/features.hpp"
#include "vtwin/mlp.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

struct PipelineConfig {
    std::size_t fs_k = 0; // 0 = default for the column count
    std::size_t epochs = 60;
    std::array<std::size_t, 3> hidden{32, 16, 8};
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    // When set, training uses the labels attached to the input table instead
    // of deriving its own; useful as a ceiling reference.
    bool supervised_labels = false;
    ProbeConfig probe{};
};

/// Trained detection pipeline: standardizer fit on the training windows,
/// the surviving column subset, and the classifier over those columns.
struct PsModel {
    Standardizer scaler;
    std::vector<std::size_t> selected;
    FsMethod fs_method{};
    std::vector<std::string> input_columns;
    MlpModel classifier;
    std::vector<int> training_labels; // labels the classifier was fit on
};

/// Fits the full pipeline on unlabeled traffic windows: standardize, derive
/// labels by clustering, pick the feature subset, train the classifier.
inline PsModel ps_train(const FeatureTable& features, std::uint64_t seed,
                        const PipelineConfig& cfg = {}) {
    features.validate();
    check_no_label_columns(features);
    if (features.n_rows() < 10) throw insufficient_data_error("pipeline needs at least 10 rows");

    PsModel model;
    model.input_columns = features.column_names;
    model.scaler.fit(features);
    FeatureTable scaled = model.scaler.apply(features);

    if (cfg.supervised_labels) {
        if (!features.labels)
            throw invalid_parameter_error("pipeline: supervised mode requires labels");
        model.training_labels = *features.labels;
    } else {
        model.training_labels = label_unsupervised(scaled, derive_seed(seed, 0x4c42));
    }
    scaled.labels = model.training_labels;

    // hold out a slice of the training windows so the selector has an honest
    // comparison set; the final classifier then uses every window
    const std::uint64_t fs_seed = derive_seed(seed, 0x4653);
    auto [fs_train_idx, fs_val_idx] =
        detail::probe_split(scaled.n_rows(), cfg.probe.validation_fraction, fs_seed);
    const AutoFsReport fs = autofs_select(take_rows(scaled, fs_train_idx),
                                          take_rows(scaled, fs_val_idx), cfg.fs_k, fs_seed,
                                          cfg.probe);
    model.fs_method = fs.chosen;
    model.selected = fs.selected;

    const FeatureTable train = select_columns(scaled, model.selected);
    model.classifier =
        MlpModel(model.selected.size(), cfg.hidden, cfg.learning_rate, derive_seed(seed, 0x4e4e));
    mlp_fit(model.classifier, train, cfg.epochs, derive_seed(seed, 0x4e4e));
    return model;
}

inline int ps_predict_row(const PsModel& model, std::span<const double> row) {
    if (row.size() != model.scaler.mean.size())
        throw dimension_mismatch_error("pipeline: row width does not match the trained model");
    std::vector<double> scaled(row.size());
    model.scaler.transform_row(row, scaled);
    std::vector<double> picked;
    picked.reserve(model.selected.size());
    for (std::size_t c : model.selected) picked.push_back(scaled[c]);
    return mlp_predict(model.classifier, picked).label;
}

inline std::vector<int> ps_predict(const PsModel& model, const FeatureTable& features) {
    features.validate();
    std::vector<int> out(features.n_rows());
    for (std::size_t i = 0; i < features.n_rows(); ++i)
        out[i] = ps_predict_row(model, features.rows[i]);
    return out;
}

inline void save_ps(const PsModel& model, std::ostream& os) {
    os << "vtwin-ps 1\n";
    os << "columns";
    for (const auto& name : model.input_columns) os << ' ' << name;
    os << '\n';
    os << "scaler_mean";
    for (double v : model.scaler.mean) os << ' ' << csv::format_double(v);
    os << '\n';
    os << "scaler_stdev";
    for (double v : model.scaler.stdev) os << ' ' << csv::format_double(v);
    os << '\n';
    os << "fs_method " << fs_method_name(model.fs_method) << '\n';
    os << "selected";
    for (std::size_t c : model.selected) os << ' ' << c;
    os << '\n';
    save_mlp(model.classifier, os);
}

inline void save_ps(const PsModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    save_ps(model, os);
}

inline PsModel load_ps(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "vtwin-ps 1")
        throw parse_error("not a pipeline model file");
    PsModel model;
    const auto next_fields = [&](const std::string& expect) {
        if (!std::getline(in, line)) throw parse_error("pipeline model truncated");
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key != expect) throw parse_error("pipeline model: expected '" + expect + "'");
        return ss;
    };
    {
        auto ss = next_fields("columns");
        std::string name;
        while (ss >> name) model.input_columns.push_back(name);
    }
    {
        auto ss = next_fields("scaler_mean");
        double v;
        while (ss >> v) model.scaler.mean.push_back(v);
    }
    {
        auto ss = next_fields("scaler_stdev");
        double v;
        while (ss >> v) model.scaler.stdev.push_back(v);
    }
    {
        auto ss = next_fields("fs_method");
        std::string name;
        ss >> name;
        model.fs_method = fs_method_from_name(name);
    }
    {
        auto ss = next_fields("selected");
        std::size_t c;
        while (ss >> c) model.selected.push_back(c);
    }
    if (model.scaler.mean.size() != model.input_columns.size() ||
        model.scaler.stdev.size() != model.input_columns.size())
        throw parse_error("pipeline model: scaler width mismatch");
    for (std::size_t c : model.selected)
        if (c >= model.input_columns.size())
            throw parse_error("pipeline model: selected column out of range");
    model.classifier = load_mlp(in);
    if (model.classifier.input_dim() != model.selected.size())
        throw parse_error("pipeline model: classifier width mismatch");
    return model;
}

inline PsModel load_ps_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return load_ps(in);
}

} // namespace vtwin
