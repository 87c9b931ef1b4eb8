#include "qgnls/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "qgnls/error.hpp"

namespace qgnls {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::Parse,
                  "unknown field '" + key + "' in " + std::string(where));
    }
  }
}

std::string id_string(const json& value, std::string_view where) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw Error(ErrorCode::Parse, std::string(where) + " must be a string or integer id");
}

}  // namespace

GraphDescription parse_graph_description(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("graph description: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "graph description must be an object");
  reject_unknown_keys(doc, {"vertices", "edges", "truncation"}, "graph description");
  if (!doc.contains("vertices") || !doc["vertices"].is_array()) {
    throw Error(ErrorCode::Parse, "graph description needs a 'vertices' array");
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw Error(ErrorCode::Parse, "graph description needs an 'edges' array");
  }

  GraphDescription out;
  for (const auto& v : doc["vertices"]) out.vertices.push_back(id_string(v, "vertex"));

  for (const auto& e : doc["edges"]) {
    if (!e.is_object()) throw Error(ErrorCode::Parse, "edge entries must be objects");
    reject_unknown_keys(e, {"id", "from", "to", "length"}, "edge");
    EdgeDescription edge;
    if (!e.contains("id")) throw Error(ErrorCode::Parse, "edge without 'id'");
    edge.name = id_string(e["id"], "edge id");
    if (!e.contains("from")) throw Error(ErrorCode::Parse, "edge '" + edge.name + "' without 'from'");
    edge.from = id_string(e["from"], "edge 'from'");
    if (e.contains("to") && !e["to"].is_null()) edge.to = id_string(e["to"], "edge 'to'");
    if (!e.contains("length")) throw Error(ErrorCode::Parse, "edge '" + edge.name + "' without 'length'");
    const auto& len = e["length"];
    if (len.is_string()) {
      if (len.get<std::string>() != "inf") {
        throw Error(ErrorCode::Parse, "edge '" + edge.name + "': length must be a number or \"inf\"");
      }
    } else if (len.is_number()) {
      edge.length = len.get<double>();
    } else {
      throw Error(ErrorCode::Parse, "edge '" + edge.name + "': length must be a number or \"inf\"");
    }
    if (!edge.length && edge.to) {
      throw Error(ErrorCode::Parse,
                  "edge '" + edge.name + "': an unbounded edge has a single endpoint ('from')");
    }
    if (edge.length && !edge.to) {
      throw Error(ErrorCode::Parse, "edge '" + edge.name + "': bounded edge needs 'to'");
    }
    out.edges.push_back(std::move(edge));
  }

  if (doc.contains("truncation")) {
    if (!doc["truncation"].is_number()) throw Error(ErrorCode::Parse, "'truncation' must be a number");
    out.truncation = doc["truncation"].get<double>();
  }
  return out;
}

GraphDescription load_graph_description(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open graph file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_graph_description(buffer.str());
}

MetricGraph MetricGraph::build(const GraphDescription& description, double default_truncation) {
  MetricGraph g;
  g.truncation_ = description.truncation.value_or(default_truncation);
  if (!(g.truncation_ > 0.0) || !std::isfinite(g.truncation_)) {
    throw Error(ErrorCode::NonpositiveEdgeLength, "truncation length must be positive and finite");
  }
  if (description.vertices.empty()) {
    throw Error(ErrorCode::InvalidArgument, "graph needs at least one vertex");
  }

  std::unordered_map<std::string, VertexId> by_name;
  for (const auto& name : description.vertices) {
    if (!by_name.emplace(name, g.vertices_.size()).second) {
      throw Error(ErrorCode::Parse, "duplicate vertex id '" + name + "'");
    }
    g.vertices_.push_back({name});
  }

  auto lookup = [&](const std::string& name, const std::string& edge) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::DanglingEndpoint,
                  "edge '" + edge + "' references unknown vertex '" + name + "'");
    }
    return it->second;
  };

  std::set<std::string> edge_names;
  for (const auto& d : description.edges) {
    if (!edge_names.insert(d.name).second) {
      throw Error(ErrorCode::Parse, "duplicate edge id '" + d.name + "'");
    }
    Edge e;
    e.name = d.name;
    e.from = lookup(d.from, d.name);
    if (d.length) {
      if (!(*d.length > 0.0) || !std::isfinite(*d.length)) {
        throw Error(ErrorCode::NonpositiveEdgeLength,
                    "edge '" + d.name + "' has non-positive length");
      }
      e.to = lookup(*d.to, d.name);
      e.length = *d.length;
    } else {
      e.to = kNoVertex;
      e.unbounded = true;
      e.length = g.truncation_;
    }
    e.nominal_length = e.length;
    g.edges_.push_back(std::move(e));
  }

  g.index_incidences();

  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (g.degree(v) == 0) {
      throw Error(ErrorCode::DisconnectedGraph,
                  "vertex '" + g.vertices_[v].name + "' has no incident edge");
    }
  }
  const auto dist = vertex_distances(g, 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (!std::isfinite(dist[v])) {
      throw Error(ErrorCode::DisconnectedGraph,
                  "vertex '" + g.vertices_[v].name + "' is not reachable from '" +
                      g.vertices_[0].name + "'");
    }
  }
  return g;
}

void MetricGraph::index_incidences() {
  incidences_.assign(vertices_.size(), {});
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    incidences_[edges_[e].from].push_back({e, EdgeEnd::From});
    if (edges_[e].to != kNoVertex) incidences_[edges_[e].to].push_back({e, EdgeEnd::To});
  }
}

std::optional<VertexId> MetricGraph::find_vertex(std::string_view name) const {
  for (VertexId v = 0; v < vertices_.size(); ++v) {
    if (vertices_[v].name == name) return v;
  }
  return std::nullopt;
}

VertexId MetricGraph::vertex_id(std::string_view name) const {
  auto v = find_vertex(name);
  if (!v) throw Error(ErrorCode::UnknownVertex, "unknown vertex '" + std::string(name) + "'");
  return *v;
}

std::optional<EdgeId> MetricGraph::find_edge(std::string_view name) const {
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    if (edges_[e].name == name) return e;
  }
  return std::nullopt;
}

bool MetricGraph::is_compact() const noexcept {
  return std::none_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.unbounded; });
}

double MetricGraph::total_length() const noexcept {
  return std::accumulate(edges_.begin(), edges_.end(), 0.0,
                         [](double acc, const Edge& e) { return acc + e.length; });
}

MetricGraph MetricGraph::with_midpoints(std::span<const VertexId> peaks) const {
  std::set<VertexId> peak_set(peaks.begin(), peaks.end());
  MetricGraph out;
  out.truncation_ = truncation_;
  out.vertices_ = vertices_;
  for (const Edge& e : edges_) {
    const bool shared = !e.is_half_line() && !e.is_loop() && peak_set.count(e.from) &&
                        peak_set.count(e.to);
    if (!shared) {
      out.edges_.push_back(e);
      continue;
    }
    const VertexId mid = out.vertices_.size();
    out.vertices_.push_back({e.name + "_mid"});
    Edge first = e;
    first.name = e.name + "#1";
    first.to = mid;
    first.length = e.length / 2.0;
    Edge second = e;
    second.name = e.name + "#2";
    second.from = mid;
    second.length = e.length / 2.0;
    out.edges_.push_back(std::move(first));
    out.edges_.push_back(std::move(second));
  }
  out.index_incidences();
  return out;
}

GraphDescription MetricGraph::describe() const {
  GraphDescription d;
  for (const auto& v : vertices_) d.vertices.push_back(v.name);
  for (const auto& e : edges_) {
    EdgeDescription ed;
    ed.name = e.name;
    ed.from = vertices_[e.from].name;
    if (!e.unbounded) {
      ed.to = vertices_[e.to].name;
      ed.length = e.length;
    }
    d.edges.push_back(std::move(ed));
  }
  d.truncation = truncation_;
  return d;
}

MetricGraph load_graph(const std::string& path, double default_truncation) {
  return MetricGraph::build(load_graph_description(path), default_truncation);
}

std::vector<double> vertex_distances(const MetricGraph& g, VertexId source) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.vertex_count(), inf);
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist.at(source) = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const Incidence& inc : g.incidences(v)) {
      const Edge& e = g.edge(inc.edge);
      if (e.is_half_line()) continue;
      const VertexId w = inc.end == EdgeEnd::From ? e.to : e.from;
      if (d + e.length < dist[w]) {
        dist[w] = d + e.length;
        queue.push({dist[w], w});
      }
    }
  }
  return dist;
}

std::vector<BallPiece> metric_ball(const MetricGraph& g, VertexId v, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const auto dist = vertex_distances(g, v);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<BallPiece> pieces;
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    const double reach_from = r - dist[e.from];
    const double reach_to = e.is_half_line() ? -inf : r - dist[e.to];
    if (std::max(reach_from, 0.0) + std::max(reach_to, 0.0) >= e.length) {
      const EdgeEnd anchor = reach_from >= reach_to ? EdgeEnd::From : EdgeEnd::To;
      pieces.push_back({id, anchor, e.length, true});
      continue;
    }
    if (reach_from > 0.0) pieces.push_back({id, EdgeEnd::From, reach_from});
    if (reach_to > 0.0) pieces.push_back({id, EdgeEnd::To, reach_to});
  }
  return pieces;
}

std::vector<VertexId> odd_degree_vertices(const MetricGraph& g, int min_degree) {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    const int deg = g.degree(v);
    if (deg % 2 == 1 && deg >= min_degree) out.push_back(v);
  }
  return out;
}

StarNeighborhood star_neighborhood(const MetricGraph& g, VertexId center, PeakMode mode) {
  StarNeighborhood star;
  star.center = center;
  double min_arm = std::numeric_limits<double>::infinity();
  double min_nominal = std::numeric_limits<double>::infinity();
  for (const Incidence& inc : g.incidences(center)) {
    const Edge& e = g.edge(inc.edge);
    const double arm = e.is_loop() ? e.length / 2.0 : e.length;
    star.slots.push_back({inc.edge, inc.end, arm});
    min_arm = std::min(min_arm, arm);
    min_nominal = std::min(min_nominal, e.is_loop() ? e.nominal_length / 2.0 : e.nominal_length);
  }
  star.degree = static_cast<int>(star.slots.size());
  star.radius = mode == PeakMode::Single ? min_arm / 2.0 : min_nominal / 4.0;
  return star;
}

MetricGraph make_regular_tree(int root_degree, int branching, int depth, double edge_length,
                              bool half_line_leaves, double truncation) {
  if (root_degree < 1 || branching < 1 || depth < 1 || !(edge_length > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tree generation parameters must be positive");
  }
  GraphDescription d;
  d.truncation = truncation;
  d.vertices.push_back("r");
  std::vector<std::string> frontier{"r"};
  int edge_counter = 0;
  for (int level = 1; level <= depth; ++level) {
    std::vector<std::string> next;
    for (const auto& parent : frontier) {
      const int children = level == 1 ? root_degree : branching;
      for (int c = 0; c < children; ++c) {
        std::string child = parent + "." + std::to_string(c);
        d.vertices.push_back(child);
        d.edges.push_back({"t" + std::to_string(edge_counter++), parent, child, edge_length});
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  if (half_line_leaves) {
    for (const auto& leaf : frontier) {
      d.edges.push_back({"t" + std::to_string(edge_counter++), leaf, std::nullopt, std::nullopt});
    }
  }
  return MetricGraph::build(d, truncation);
}

}  // namespace qgnls
