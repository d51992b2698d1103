#include "finsler/serialization.hpp"

#include <sstream>

#include "finsler/error.hpp"

namespace finsler {

namespace {

nlohmann::json matrix_field_json(const MatrixField& f) {
  switch (f.family) {
    case MatrixFamily::Constant: {
      if (f.constant.isIdentity(0.0)) return "identity";
      nlohmann::json rows = nlohmann::json::array();
      for (int i = 0; i < f.dim; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < f.dim; ++j) row.push_back(f.constant(i, j));
        rows.push_back(row);
      }
      return rows;
    }
    case MatrixFamily::GaussianConformal: {
      nlohmann::json j;
      j["family"] = "gaussian-conformal";
      j["c"] = f.strength;
      j["center"] = std::vector<double>(f.center.data(), f.center.data() + f.center.size());
      return j;
    }
    case MatrixFamily::PoincareDisk:
      return nlohmann::json{{"family", "poincare-disk"}};
  }
  return "identity";
}

MatrixField matrix_field_from_json(const nlohmann::json& j, int n) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "identity") return MatrixField::identity(n);
    throw InvalidInput("unknown matrix field name: " + s);
  }
  if (j.is_array()) {
    Mat a(n, n);
    if (static_cast<int>(j.size()) != n) throw InvalidInput("matrix row count != dimension");
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) a(i, k) = j.at(i).at(k).get<double>();
    return MatrixField::constant_matrix(a);
  }
  if (j.is_object()) {
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "constant") return matrix_field_from_json(j.at("matrix"), n);
    if (fam == "gaussian-conformal") {
      Vec center = Vec::Zero(n);
      if (j.contains("center")) {
        const auto c = j.at("center").get<std::vector<double>>();
        for (int i = 0; i < n; ++i) center[i] = c.at(i);
      }
      return MatrixField::gaussian_conformal(n, j.value("c", 0.0), center);
    }
    if (fam == "poincare-disk") return MatrixField::poincare_disk(n);
    throw InvalidInput("unknown matrix family: " + fam);
  }
  throw InvalidInput("matrix field must be \"identity\", a matrix, or a family object");
}

}  // namespace

nlohmann::json to_json(const MetricDescriptor& m) {
  nlohmann::json j;
  j["dimension"] = m.dim();
  switch (m.variant()) {
    case MetricVariant::Euclidean:
      j["variant"] = "euclidean";
      break;
    case MetricVariant::Riemannian:
      j["variant"] = "riemannian";
      j["a"] = matrix_field_json(m.a_field());
      break;
    case MetricVariant::Randers: {
      j["variant"] = "randers";
      j["a"] = matrix_field_json(m.a_field());
      const Vec& b = m.b_field().constant;
      j["b"] = std::vector<double>(b.data(), b.data() + b.size());
      break;
    }
  }
  return j;
}

MetricDescriptor metric_from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  const int n = j.at("dimension").get<int>();
  if (n < 2) throw InvalidInput("metric dimension must be >= 2");
  if (variant == "euclidean") return MetricDescriptor::euclidean(n);
  if (variant == "riemannian")
    return MetricDescriptor::riemannian(matrix_field_from_json(j.at("a"), n));
  if (variant == "randers") {
    MatrixField a = j.contains("a") ? matrix_field_from_json(j.at("a"), n)
                                    : MatrixField::identity(n);
    const auto bv = j.at("b").get<std::vector<double>>();
    if (static_cast<int>(bv.size()) != n) throw InvalidInput("drift covector size != dimension");
    Vec b(n);
    for (int i = 0; i < n; ++i) b[i] = bv[i];
    MetricDescriptor m = MetricDescriptor::randers(std::move(a), CovectorField::constant_covector(b));
    return m;
  }
  throw InvalidInput("unknown metric variant: " + variant);
}

nlohmann::json to_json(const MeasureSpace& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["metric"] = to_json(s.metric);
  nlohmann::json ld;
  ld["family"] = to_string(s.log_density.family);
  if (s.log_density.family == DensityFamily::Gaussian) {
    ld["strength"] = s.log_density.strength;
    ld["center"] = std::vector<double>(s.log_density.center.data(),
                                       s.log_density.center.data() + s.log_density.center.size());
  }
  j["log_density"] = ld;
  nlohmann::json cb;
  cb["K"] = s.certified.ric_inf_lower;
  if (s.certified.distortion_bound) cb["k"] = *s.certified.distortion_bound;
  if (s.certified.s_curvature_alpha) cb["alpha"] = *s.certified.s_curvature_alpha;
  j["certified_bounds"] = cb;
  if (s.domain) {
    j["domain"] = {{"center", std::vector<double>(s.domain->center.data(),
                                                  s.domain->center.data() + s.domain->center.size())},
                   {"radius", s.domain->radius}};
  }
  return j;
}

MeasureSpace space_from_json(const nlohmann::json& j) {
  if (j.is_string() || j.contains("builtin")) {
    const std::string name = j.is_string() ? j.get<std::string>() : j.at("builtin").get<std::string>();
    if (name == "flat") return spaces::flat();
    if (name == "gaussian") return spaces::gaussian();
    if (name == "hyperbolic") return spaces::hyperbolic();
    if (name == "randers") return spaces::randers_const();
    throw InvalidInput("unknown builtin space: " + name);
  }
  MeasureSpace s;
  s.name = j.value("name", "custom");
  s.metric = metric_from_json(j.at("metric"));
  const int n = s.metric.dim();
  if (j.contains("log_density")) {
    const auto& ld = j.at("log_density");
    const std::string fam = ld.at("family").get<std::string>();
    if (fam == "lebesgue") {
      s.log_density = LogDensityField::lebesgue();
    } else if (fam == "gaussian") {
      s.log_density = LogDensityField::gaussian(n, ld.value("strength", 1.0));
      if (ld.contains("center")) {
        const auto c = ld.at("center").get<std::vector<double>>();
        for (int i = 0; i < n; ++i) s.log_density.center[i] = c.at(i);
      }
    } else if (fam == "riemannian-volume") {
      s.log_density = LogDensityField::riemannian_volume();
    } else {
      throw InvalidInput("unknown log-density family: " + fam);
    }
  }
  if (j.contains("certified_bounds")) {
    const auto& cb = j.at("certified_bounds");
    s.certified.ric_inf_lower = cb.value("K", 0.0);
    if (cb.contains("k")) s.certified.distortion_bound = cb.at("k").get<double>();
    if (cb.contains("alpha")) s.certified.s_curvature_alpha = cb.at("alpha").get<double>();
  }
  if (j.contains("domain")) {
    WorkingDomain d;
    const auto c = j.at("domain").at("center").get<std::vector<double>>();
    d.center = Vec::Zero(n);
    for (int i = 0; i < n; ++i) d.center[i] = c.at(i);
    d.radius = j.at("domain").at("radius").get<double>();
    s.domain = d;
  }
  // fail fast on invalid metrics (e.g. Randers drift with a-norm >= 1)
  s.metric.validate_at(s.domain ? s.domain->center : Vec::Zero(n));
  return s;
}

std::string geodesic_csv(const MeasureSpace& space, const GeodesicPath& path) {
  std::ostringstream os;
  os.precision(17);
  const int n = space.dim();
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",v" << i;
  os << ",F\n";
  for (std::size_t s = 0; s < path.size(); ++s) {
    os << path.t[s];
    for (int i = 0; i < n; ++i) os << ',' << path.x[s][i];
    for (int i = 0; i < n; ++i) os << ',' << path.v[s][i];
    os << ',' << space.metric.norm(path.x[s], path.v[s]) << '\n';
  }
  return os.str();
}

std::string polar_table_csv(const PolarDensityTable& table) {
  std::ostringstream os;
  os.precision(17);
  os << "r,theta_index,sigma,minimal\n";
  for (int j = 0; j < table.n_dirs(); ++j)
    for (int i = 0; i < table.n_radii(); ++i)
      os << table.radii[i] << ',' << j << ',' << table.sigma(j, i) << ','
         << (table.minimal[j][i] ? 1 : 0) << '\n';
  return os.str();
}

std::string solution_csv(const Mesh& mesh, const Vec& values) {
  std::ostringstream os;
  os.precision(17);
  os << "node_id,x1,x2,u\n";
  for (int i = 0; i < mesh.n_nodes(); ++i)
    os << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1] << ',' << values[i] << '\n';
  return os.str();
}

std::string mesh_nodes_csv(const Mesh& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << "id,x1,x2,boundary\n";
  for (int i = 0; i < mesh.n_nodes(); ++i)
    os << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1] << ','
       << (mesh.boundary[i] ? 1 : 0) << '\n';
  return os.str();
}

std::string mesh_cells_csv(const Mesh& mesh) {
  std::ostringstream os;
  os << "id,n0,n1,n2\n";
  for (int c = 0; c < mesh.n_cells(); ++c)
    os << c << ',' << mesh.cells[c][0] << ',' << mesh.cells[c][1] << ',' << mesh.cells[c][2]
       << '\n';
  return os.str();
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) row.push_back(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Mesh mesh_from_csv(const MeasureSpace& space, const std::string& nodes_csv,
                   const std::string& cells_csv) {
  Mesh m;
  const auto nrows = parse_csv(nodes_csv);
  const auto crows = parse_csv(cells_csv);
  if (nrows.empty() || crows.empty()) throw InvalidInput("empty mesh CSV");
  for (std::size_t r = 1; r < nrows.size(); ++r) {
    const auto& row = nrows[r];
    if (row.size() < 4) throw InvalidInput("node row needs id,x1,x2,boundary");
    m.nodes.push_back(vec2(std::stod(row[1]), std::stod(row[2])));
    m.boundary.push_back(std::stoi(row[3]) != 0 ? 1 : 0);
  }
  for (std::size_t r = 1; r < crows.size(); ++r) {
    const auto& row = crows[r];
    if (row.size() < 4) throw InvalidInput("cell row needs id,n0,n1,n2");
    m.cells.push_back({std::stoi(row[1]), std::stoi(row[2]), std::stoi(row[3])});
  }
  m.finalize(space);
  return m;
}

}  // namespace finsler
