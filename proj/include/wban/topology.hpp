#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "wban/channel.hpp"
#include "wban/error.hpp"

namespace wban {

struct BodyNode {
  NodeId id = 0;
  std::string label;
};

// Node ids are dense: an N-node topology uses exactly 0..N-1.
struct BodyTopology {
  std::vector<BodyNode> nodes;
  NodeId sink = 0;
  std::vector<NodeId> sources;  // ascending

  int size() const { return static_cast<int>(nodes.size()); }
  bool is_source(NodeId v) const { return std::binary_search(sources.begin(), sources.end(), v); }
};

inline std::vector<BodyNode> default_body_nodes() {
  return {{0, "navel"}, {1, "chest"}, {2, "head"},  {3, "upper arm"},
          {4, "ankle"}, {5, "thigh"}, {6, "wrist"}};
}

inline BodyTopology make_topology(std::vector<BodyNode> nodes, NodeId sink,
                                  std::optional<std::vector<NodeId>> sources = std::nullopt) {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) throw ConfigError("topology needs at least two nodes");
  std::sort(nodes.begin(), nodes.end(), [](auto& x, auto& y) { return x.id < y.id; });
  std::set<std::string> labels;
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (node.id < 0 || node.id >= n) {
      throw ConfigError("node id " + std::to_string(node.id) + " outside 0.." +
                        std::to_string(n - 1));
    }
    if (node.id != i) throw ConfigError("duplicate node id " + std::to_string(node.id));
    if (!labels.insert(node.label).second) {
      throw ConfigError("duplicate node label '" + node.label + "'");
    }
  }
  if (sink < 0 || sink >= n) {
    throw ConfigError("sink " + std::to_string(sink) + " is not among the topology nodes");
  }

  BodyTopology topo{std::move(nodes), sink, {}};
  if (sources) {
    std::set<NodeId> unique(sources->begin(), sources->end());
    for (auto s : unique) {
      if (s < 0 || s >= n) throw ConfigError("source " + std::to_string(s) + " is not a node");
      if (s == sink) throw ConfigError("the sink cannot be a source");
    }
    topo.sources.assign(unique.begin(), unique.end());
  } else {
    for (NodeId v = 0; v < n; ++v) {
      if (v != sink) topo.sources.push_back(v);
    }
  }
  return topo;
}

inline BodyTopology default_topology() { return make_topology(default_body_nodes(), 0); }

inline std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (auto field : detail::split(text, ',')) {
    if (field.empty()) continue;
    int v = 0;
    if (!detail::parse_number(field, v)) {
      throw ConfigError(what + ": '" + std::string(field) + "' is not an integer");
    }
    out.push_back(v);
  }
  return out;
}

namespace detail {

inline std::optional<int> int_key(const boost::property_tree::ptree& section, const std::string& key) {
  auto text = section.get_optional<std::string>(key);
  if (!text) return std::nullopt;
  int v = 0;
  if (!parse_number(trim(*text), v)) {
    throw ConfigError("topology." + key + ": '" + *text + "' is not an integer");
  }
  return v;
}

}  // namespace detail

// [topology] section: size, nodes ("id:label,..."), sink, sources.
// Every key is optional; the empty section yields the seven-node body.
inline BodyTopology load_topology(const boost::property_tree::ptree& section) {
  std::vector<BodyNode> nodes;
  auto size = detail::int_key(section, "size");
  if (auto listed = section.get_optional<std::string>("nodes")) {
    for (auto item : detail::split(*listed, ',')) {
      if (item.empty()) continue;
      auto colon = item.find(':');
      BodyNode node;
      auto id_text = detail::trim(item.substr(0, colon));
      if (!detail::parse_number(id_text, node.id)) {
        throw ConfigError("topology.nodes: bad node id '" + std::string(id_text) + "'");
      }
      node.label = colon == std::string_view::npos
                       ? "node" + std::to_string(node.id)
                       : std::string(detail::trim(item.substr(colon + 1)));
      nodes.push_back(std::move(node));
    }
    if (size && *size != static_cast<int>(nodes.size())) {
      for (const auto& node : nodes) {
        if (node.id >= *size) {
          throw ConfigError("node id " + std::to_string(node.id) + " outside 0.." +
                            std::to_string(*size - 1));
        }
      }
      throw ConfigError("topology.size " + std::to_string(*size) + " does not match " +
                        std::to_string(nodes.size()) + " listed nodes");
    }
  } else if (!size || *size == 7) {
    nodes = default_body_nodes();
  } else {
    for (int i = 0; i < *size; ++i) nodes.push_back({i, "node" + std::to_string(i)});
  }

  std::optional<std::vector<NodeId>> sources;
  if (auto text = section.get_optional<std::string>("sources")) {
    sources = parse_int_list(*text, "topology.sources");
  }
  return make_topology(std::move(nodes), detail::int_key(section, "sink").value_or(0), sources);
}

}  // namespace wban
