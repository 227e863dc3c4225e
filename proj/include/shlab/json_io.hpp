#pragma once

#include <string>

#include "json.hpp"

#include "shlab/field.hpp"

namespace shlab {

using OrderedJson = nlohmann::ordered_json;

// 17 significant digits, enough to reproduce the double exactly; nonfinite
// values become "inf", "-inf", "nan".
std::string format_sig17(double value);

// JSON text with every float rendered by format_sig17 (nonfinite floats as
// strings, since JSON has no literals for them). indent < 0 gives one line.
std::string dump_json(const OrderedJson& j, int indent = 2);

// {"schema_version": N, "config": resolved}; the caller adds payload keys.
OrderedJson artifact_envelope(const OrderedJson& resolved_config);

// Comment lines carrying the schema version and the one-line resolved config,
// prepended to every CSV artifact.
std::string csv_preamble(const OrderedJson& resolved_config);

// Writes through a temporary file in the same directory plus a rename, so
// concurrent sweep points never expose partial files. Creates parent
// directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Columns x,u after the preamble.
std::string field_to_csv(const Field& f, const OrderedJson& resolved_config);

// Parses the field_to_csv layout (comments and a header are skipped). The
// topology is inferred from the nodes: a torus when the uniform spacing
// continues past the last node to x0 + 1, an interval otherwise.
Field read_field_csv(const std::string& path);

}  // namespace shlab
