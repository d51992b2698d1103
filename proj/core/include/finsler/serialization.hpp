#pragma once

#include <string>

#include <json.hpp>

#include "finsler/comparison.hpp"
#include "finsler/mesh.hpp"

namespace finsler {

/// Metric descriptors: {"variant": "euclidean"|"riemannian"|"randers",
/// "dimension": n, "a": "identity" | row-major matrix | {"family": ...},
/// "b": array}. Throws InvalidInput/InvalidMetric on malformed input.
nlohmann::json to_json(const MetricDescriptor& m);
MetricDescriptor metric_from_json(const nlohmann::json& j);

/// Measure spaces: metric + {"log_density": {...}, "certified_bounds":
/// {"K","k","alpha"}, "domain": {...}}. {"builtin": "flat"|"gaussian"|
/// "hyperbolic"|"randers"} loads a certified example.
nlohmann::json to_json(const MeasureSpace& s);
MeasureSpace space_from_json(const nlohmann::json& j);

std::string geodesic_csv(const MeasureSpace& space, const GeodesicPath& path);
std::string polar_table_csv(const PolarDensityTable& table);
std::string solution_csv(const Mesh& mesh, const Vec& values);
std::string mesh_nodes_csv(const Mesh& mesh);
std::string mesh_cells_csv(const Mesh& mesh);
Mesh mesh_from_csv(const MeasureSpace& space, const std::string& nodes_csv,
                   const std::string& cells_csv);

}  // namespace finsler
