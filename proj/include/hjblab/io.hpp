#pragma once

#include "hjblab/grid.hpp"

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

namespace hjblab {

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// CSV with header `t,x[,y],value` (vector fields: value_0, value_1, ...).
void write_field_csv(std::ostream& out, const Field& field);
void write_field_csv(const std::string& path, const Field& field);

/**
 * Reads a scalar field written by write_field_csv. The node layout (nt + 1 time
 * levels, nx per axis) is recovered from the coordinates; `kind` decides whether
 * they are read as cell centers (torus) or endpoint-inclusive nodes (box).
 * Throws std::runtime_error naming the path on malformed input.
 */
Field read_field_csv(const std::string& path, DomainKind kind);

/// {"kind", "dim", "T", "nt", "axes": [{lo, hi, n}], "arity", "values": [[level 0], [level 1], ...]}
nlohmann::json field_to_json(const Field& field);
Field field_from_json(const nlohmann::json& j);

/// Writes `text` to `path` via a temporary file and rename.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace hjblab
