#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tailcast {

struct Station {
  std::string id;
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]
  double altitude = 0.0;   // meters, optional feature
};

enum class WeightNormalization { GlobalMax, PerNodeMax };

/// Message-passing edge; includes self-loops (weight 1).
struct GraphEdge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
};

/// Station graph G = (V, E, X, D, W): nodes with coordinates, edges wherever
/// the great-circle distance is at most d_max, inverse-distance weights
/// normalized by the global maximum, self-loop weight pinned to 1.
struct StationGraph {
  std::vector<Station> stations;
  Eigen::MatrixXd distance_km;              // symmetric, zero diagonal
  std::vector<std::pair<int, int>> edges;   // directed both ways, no self loops, sorted
  Eigen::MatrixXd weight;                   // W(i,i) = 1; 0 where no edge
  double d_max_km = 0.0;

  int size() const { return static_cast<int>(stations.size()); }
  int index_of(const std::string& id) const;  // -1 when absent

  /// Edges for message passing: every stored directed edge plus one self-loop
  /// per node, ordered by (dst, src).
  std::vector<GraphEdge> message_edges() const;
};

/// Haversine great-circle distance with Earth radius 6371.0 km.
double geodesic_distance_km(const Station& a, const Station& b);

/// Builds the graph. Throws validation_error on duplicate ids, out-of-range
/// coordinates, or coincident distinct stations (infinite raw weight).
StationGraph build_graph(std::vector<Station> stations, double d_max_km,
                         WeightNormalization norm = WeightNormalization::GlobalMax);

/// Reads `station_id,lat,lon,alt` CSV (header required).
std::vector<Station> load_stations_csv(const std::string& path);
void save_stations_csv(const std::vector<Station>& stations, const std::string& path);

}  // namespace tailcast
