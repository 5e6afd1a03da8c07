#include <gtest/gtest.h>

#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "wban/topology.hpp"

using namespace wban;

namespace {

BodyTopology from_ini(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree root;
  boost::property_tree::read_ini(in, root);
  static const boost::property_tree::ptree empty;
  return load_topology(root.get_child("topology", empty));
}

}  // namespace

TEST(Topology, DefaultBody) {
  auto t = default_topology();
  ASSERT_EQ(t.size(), 7);
  EXPECT_EQ(t.sink, 0);
  EXPECT_EQ(t.sources, (std::vector<NodeId>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(t.nodes[0].label, "navel");
  EXPECT_EQ(t.nodes[6].label, "wrist");
  EXPECT_FALSE(t.is_source(0));
}

TEST(Topology, EmptySectionIsDefault) {
  auto t = from_ini("");
  EXPECT_EQ(t.size(), 7);
  EXPECT_EQ(t.sink, 0);
}

TEST(Topology, SinkOneComplement) {
  auto t = from_ini("[topology]\nsink = 1\n");
  EXPECT_EQ(t.sources, (std::vector<NodeId>{0, 2, 3, 4, 5, 6}));
}

TEST(Topology, NodeOutsideDeclaredSize) {
  EXPECT_THROW(from_ini("[topology]\nsize = 7\nnodes = 0:a,1:b,2:c,3:d,4:e,5:f,7:g\n"), ConfigError);
  EXPECT_THROW(from_ini("[topology]\nsize = 7\nnodes = 0:a,1:b,2:c,3:d,4:e,5:f,6:g,7:h\n"),
               ConfigError);
}

TEST(Topology, Errors) {
  EXPECT_THROW(from_ini("[topology]\nsink = 9\n"), ConfigError);
  EXPECT_THROW(from_ini("[topology]\nnodes = 0:a,0:b\n"), ConfigError);
  EXPECT_THROW(from_ini("[topology]\nnodes = 0:a,1:a\n"), ConfigError);
  EXPECT_THROW(from_ini("[topology]\nsources = 0,1\n"), ConfigError);
  EXPECT_THROW(from_ini("[topology]\nsources = 1,x\n"), ConfigError);
}

TEST(Topology, CustomSizeAndSources) {
  auto t = from_ini("[topology]\nsize = 4\nsink = 3\nsources = 2,0\n");
  EXPECT_EQ(t.size(), 4);
  EXPECT_EQ(t.sources, (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(t.nodes[1].label, "node1");
}

TEST(Topology, PureValidation) {
  const std::string text = "[topology]\nnodes = 0:hub,1:left,2:right\nsink = 0\n";
  auto a = from_ini(text), b = from_ini(text);
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) EXPECT_EQ(a.nodes[i].label, b.nodes[i].label);
  EXPECT_EQ(a.sources, b.sources);
}

TEST(Topology, NonNumericKeysRejected) {
  EXPECT_THROW(from_ini("[topology]\nsize = seven\n"), ConfigError);
  EXPECT_THROW(from_ini("[topology]\nsink = navel\n"), ConfigError);
}
