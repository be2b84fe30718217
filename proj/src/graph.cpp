#include "tailcast/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "tailcast/errors.hpp"

namespace tailcast {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDegToRad = 0.017453292519943295;

void check_coordinates(const Station& s) {
  if (!(s.latitude >= -90.0 && s.latitude <= 90.0) ||
      !(s.longitude >= -180.0 && s.longitude <= 180.0)) {
    throw std::domain_error("station " + s.id + ": coordinates out of range");
  }
}

}  // namespace

double geodesic_distance_km(const Station& a, const Station& b) {
  check_coordinates(a);
  check_coordinates(b);
  const double lat1 = a.latitude * kDegToRad;
  const double lat2 = b.latitude * kDegToRad;
  const double dlat = 0.5 * (lat2 - lat1);
  const double dlon = 0.5 * (b.longitude - a.longitude) * kDegToRad;
  const double h = std::sin(dlat) * std::sin(dlat) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon) * std::sin(dlon);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

int StationGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (stations[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<GraphEdge> StationGraph::message_edges() const {
  std::vector<GraphEdge> out;
  out.reserve(edges.size() + stations.size());
  for (const auto& [i, j] : edges) {
    out.push_back({i, j, weight(i, j)});
  }
  for (int i = 0; i < size(); ++i) {
    out.push_back({i, i, 1.0});
  }
  std::sort(out.begin(), out.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return std::tie(a.dst, a.src) < std::tie(b.dst, b.src);
  });
  return out;
}

StationGraph build_graph(std::vector<Station> stations, double d_max_km,
                         WeightNormalization norm) {
  if (stations.empty()) throw validation_error("build_graph: need at least one station");
  if (!(d_max_km > 0.0)) throw validation_error("build_graph: d_max must be > 0");
  std::unordered_set<std::string> seen;
  for (const auto& s : stations) {
    check_coordinates(s);
    if (!seen.insert(s.id).second) {
      throw validation_error("build_graph: duplicate station id " + s.id);
    }
  }
  const int n = static_cast<int>(stations.size());
  StationGraph g;
  g.stations = std::move(stations);
  g.d_max_km = d_max_km;
  g.distance_km = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = geodesic_distance_km(g.stations[i], g.stations[j]);
      if (d == 0.0) {
        throw validation_error("build_graph: stations " + g.stations[i].id + " and " +
                               g.stations[j].id + " are coincident");
      }
      g.distance_km(i, j) = d;
      g.distance_km(j, i) = d;
    }
  }
  // raw weights 1/d on thresholded pairs, then divide by the maximum raw
  // weight, then pin self-connections to 1
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  double global_max = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (g.distance_km(i, j) <= d_max_km) {
        raw(i, j) = 1.0 / g.distance_km(i, j);
        global_max = std::max(global_max, raw(i, j));
        g.edges.emplace_back(i, j);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.weight = Eigen::MatrixXd::Zero(n, n);
  if (norm == WeightNormalization::GlobalMax) {
    if (global_max > 0.0) g.weight = raw / global_max;
  } else {
    for (int i = 0; i < n; ++i) {
      const double row_max = raw.row(i).maxCoeff();
      if (row_max > 0.0) g.weight.row(i) = raw.row(i) / row_max;
    }
  }
  for (int i = 0; i < n; ++i) g.weight(i, i) = 1.0;
  return g;
}

std::vector<Station> load_stations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open station file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("empty station file: " + path);
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "station_id,lat,lon,alt") {
    throw validation_error("station CSV header must be 'station_id,lat,lon,alt', got '" +
                           line + "'");
  }
  std::vector<Station> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    Station s;
    std::string field;
    try {
      std::getline(ss, s.id, ',');
      std::getline(ss, field, ',');
      s.latitude = std::stod(field);
      std::getline(ss, field, ',');
      s.longitude = std::stod(field);
      std::getline(ss, field, ',');
      s.altitude = std::stod(field);
    } catch (const std::exception&) {
      throw validation_error("bad station row at line " + std::to_string(line_no) +
                             " in " + path);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_stations_csv(const std::vector<Station>& stations, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write station file: " + path);
  out << "station_id,lat,lon,alt\n";
  char buf[160];
  for (const auto& s : stations) {
    std::snprintf(buf, sizeof(buf), "%s,%.*g,%.*g,%.*g\n", s.id.c_str(), 17,
                  s.latitude, 17, s.longitude, 17, s.altitude);
    out << buf;
  }
}

}  // namespace tailcast
