#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qgnls {

using VertexId = std::size_t;
using EdgeId = std::size_t;

/// Marks the far end of a truncated half-line, which carries a homogeneous
/// Dirichlet condition instead of a vertex.
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

enum class EdgeEnd { From, To };

struct Vertex {
  std::string name;
};

struct Edge {
  std::string name;
  VertexId from = 0;
  VertexId to = kNoVertex;
  double length = 0.0;          // after truncation of half-lines
  double nominal_length = 0.0;  // length of the parent edge before midpoint splitting
  bool unbounded = false;

  bool is_half_line() const noexcept { return to == kNoVertex; }
  bool is_loop() const noexcept { return to == from; }
};

struct Incidence {
  EdgeId edge;
  EdgeEnd end;
};

/// Plain description of a graph as read from a file, before validation.
struct EdgeDescription {
  std::string name;
  std::string from;
  std::optional<std::string> to;  // absent for half-lines
  std::optional<double> length;   // absent means unbounded
};

struct GraphDescription {
  std::vector<std::string> vertices;
  std::vector<EdgeDescription> edges;
  std::optional<double> truncation;
};

/// Strict JSON reader for the graph file format (see README). Unknown fields
/// are rejected with ErrorCode::Parse.
GraphDescription parse_graph_description(std::string_view json_text);
GraphDescription load_graph_description(const std::string& path);

/// Connected metric graph with finitely many vertices and edges. Immutable once
/// built; unbounded edges are stored as intervals of `truncation_length()`.
class MetricGraph {
 public:
  /// Validates the description: positive lengths, known endpoints, no isolated
  /// vertices, connectivity. `default_truncation` applies when the description
  /// carries none.
  static MetricGraph build(const GraphDescription& description,
                           double default_truncation = 10.0);

  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const Vertex& vertex(VertexId v) const { return vertices_.at(v); }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::optional<VertexId> find_vertex(std::string_view name) const;
  /// Throws ErrorCode::UnknownVertex.
  VertexId vertex_id(std::string_view name) const;
  std::optional<EdgeId> find_edge(std::string_view name) const;

  /// Number of edge ends at `v`; a self-loop counts twice.
  int degree(VertexId v) const { return static_cast<int>(incidences_.at(v).size()); }
  std::span<const Incidence> incidences(VertexId v) const { return incidences_.at(v); }

  double truncation_length() const noexcept { return truncation_; }
  bool is_compact() const noexcept;
  double total_length() const noexcept;

  /// Copy of the graph where every edge joining two distinct vertices of
  /// `peaks` is split at its midpoint by a new degree-2 vertex.
  MetricGraph with_midpoints(std::span<const VertexId> peaks) const;

  /// Round-trips to the description format (lengths after truncation are not
  /// written back for half-lines).
  GraphDescription describe() const;

 private:
  MetricGraph() = default;
  void index_incidences();

  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> incidences_;
  double truncation_ = 10.0;
};

MetricGraph load_graph(const std::string& path, double default_truncation = 10.0);

/// Shortest-path distance from `source` to every vertex.
std::vector<double> vertex_distances(const MetricGraph& g, VertexId source);

/// One connected piece of a metric ball restricted to an edge: the points at
/// edge-coordinate distance in [0, length) from the `anchor` end. A piece with
/// `whole` set covers the full edge.
struct BallPiece {
  EdgeId edge;
  EdgeEnd anchor;
  double length;
  bool whole = false;
};

/// Points at graph distance < r from vertex v, as per-edge intervals measured
/// from the endpoint nearer v.
std::vector<BallPiece> metric_ball(const MetricGraph& g, VertexId v, double r);

/// Vertices of odd degree >= min_degree, in vertex order.
std::vector<VertexId> odd_degree_vertices(const MetricGraph& g, int min_degree = 3);

enum class PeakMode { Single, Multi };

/// An edge end at the star center. For loops each end is its own slot and the
/// arm reaches only to the loop midpoint.
struct StarSlot {
  EdgeId edge;
  EdgeEnd end;
  double arm_length;
};

struct StarNeighborhood {
  VertexId center = 0;
  std::vector<StarSlot> slots;
  int degree = 0;
  double radius = 0.0;  // cutoff radius; the cutoff vanishes beyond 2*radius
};

/// Star around `center` with radius min(arm)/2 (single peak) or
/// min(nominal edge length)/4 (multi peak).
StarNeighborhood star_neighborhood(const MetricGraph& g, VertexId center, PeakMode mode);

/// Finite generation of an infinite tree: the root has degree `root_degree`,
/// every other internal vertex has one parent and `branching` children. Leaves
/// at `depth` either stay degree-1 vertices or carry half-lines.
MetricGraph make_regular_tree(int root_degree, int branching, int depth,
                              double edge_length, bool half_line_leaves,
                              double truncation = 10.0);

}  // namespace qgnls
