#pragma once

#include <stdexcept>
#include <string>

namespace vtwin {

// Base of every exception thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad parameters, scenarios or experiment configs. CLI maps these to exit code 2.
struct config_error : error {
    using error::error;
};

// Problems with input data or derived state. CLI maps these to exit code 3.
struct data_error : error {
    using error::error;
};

struct invalid_parameter_error : config_error {
    using config_error::config_error;
};

// Offered load meets or exceeds capacity; steady-state quantities do not exist.
struct unstable_system_error : config_error {
    using config_error::config_error;
};

struct invalid_scenario_error : config_error {
    using config_error::config_error;
};

struct invalid_config_error : config_error {
    using config_error::config_error;
};

struct dimension_mismatch_error : config_error {
    using config_error::config_error;
};

struct io_error : data_error {
    using data_error::data_error;
};

// Malformed tabular input (missing header, ragged row, unparseable cell).
struct parse_error : data_error {
    using data_error::data_error;
};

// Transfer record missing required fields or undecodable bytes.
struct schema_error : data_error {
    using data_error::data_error;
};

struct insufficient_data_error : data_error {
    using data_error::data_error;
};

struct single_class_error : data_error {
    using data_error::data_error;
};

struct degenerate_cluster_error : data_error {
    using data_error::data_error;
};

struct class_too_small_error : data_error {
    using data_error::data_error;
};

struct empty_input_error : data_error {
    using data_error::data_error;
};

// Training loss or ingested value left the finite range.
struct nonfinite_error : data_error {
    using data_error::data_error;
};

} // namespace vtwin
