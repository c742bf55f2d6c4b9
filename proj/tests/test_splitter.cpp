#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "tgnt/ctdg.hpp"
#include "tgnt/splitter.hpp"
#include "support.hpp"

namespace tgnt {
namespace {

using test::modularity_oracle;

// Maximum modularity over every set partition (restricted growth strings).
auto best_modularity(const WeightedGraph& g) -> double {
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> c(n, 0);
  double best = -1.0;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == n) {
      best = std::max(best, modularity_oracle(g, c));
      return;
    }
    for (std::size_t b = 0; b <= used && b < n; ++b) {
      c[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  rec(0, 0);
  return best;
}

auto two_cliques(std::size_t k) -> WeightedGraph {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t off : {std::size_t{0}, k})
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) e.emplace_back(off + i, off + j);
  e.emplace_back(0, k);
  return WeightedGraph::from_edges(2 * k, e);
}

TEST(Modularity, MatchesDefinitionOnRandomGraphs) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::uniform_int_distribution<std::size_t> nd(2, 12);
    const std::size_t n = nd(rng);
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    std::uniform_real_distribution<double> w(0.5, 3.0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> weights;
    for (std::size_t m = 0; m < 2 * n; ++m) {
      edges.emplace_back(node(rng), node(rng));  // self-loops allowed
      weights.push_back(w(rng));
    }
    const auto g = WeightedGraph::from_edges(n, edges, weights);
    std::uniform_int_distribution<std::size_t> comm(0, 3);
    std::vector<std::size_t> c(n);
    for (auto& x : c) x = comm(rng);
    EXPECT_NEAR(modularity(g, c), modularity_oracle(g, c), 1e-12);
  }
}

TEST(Louvain, FindsOptimumOfTwoJoinedCliques) {
  const auto g = two_cliques(5);
  Rng rng(2);
  const auto a = louvain(g, rng);
  EXPECT_EQ(a.num_communities, 2u);
  EXPECT_NEAR(a.modularity, best_modularity(g), 1e-12);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_EQ(a.community_of[i], a.community_of[0]);
    EXPECT_EQ(a.community_of[5 + i], a.community_of[5]);
  }
  EXPECT_NE(a.community_of[0], a.community_of[5]);
}

TEST(Louvain, ReportedModularityIsRecomputable) {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    GeneratorSpec spec;
    spec.num_communities = 2 + static_cast<std::size_t>(t % 3);
    spec.nodes_per_community = 8;
    spec.num_events = 400;
    const auto s = generate_synthetic(spec, rng);
    const auto g = aggregate_static(s);
    const auto a = louvain(g, rng);
    EXPECT_NEAR(a.modularity, modularity_oracle(g, a.community_of), 1e-9);
    EXPECT_NEAR(a.modularity, modularity(g, a.community_of), 1e-12);
    for (std::size_t i = 1; i < a.modularity_trace.size(); ++i)
      EXPECT_GE(a.modularity_trace[i], a.modularity_trace[i - 1] - 1e-12);
  }
}

TEST(Louvain, RecoversPlantedTwoBlocks) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GeneratorSpec spec;
    spec.num_communities = 2;
    spec.nodes_per_community = 30;
    spec.num_events = 3000;
    Rng data(seed);
    const auto s = generate_synthetic(spec, data);
    Rng rng(seed + 100);
    const auto a = louvain(aggregate_static(s), rng);
    EXPECT_GE(test::planted_agreement(a.community_of, planted_communities(s, spec)), 0.9) << "seed " << seed;
  }
}

TEST(Louvain, EdgelessGraphKeepsSingletons) {
  Rng rng(4);
  const auto a = louvain(WeightedGraph(4), rng);
  EXPECT_EQ(a.num_communities, 4u);
  EXPECT_EQ(a.modularity, 0.0);
}

TEST(TransferSplit, GroupsAreNodeDisjoint) {
  GeneratorSpec spec;
  spec.num_communities = 3;
  spec.nodes_per_community = 20;
  spec.num_events = 3000;
  Rng data(5);
  const auto s = generate_synthetic(spec, data);
  Rng rng(6);
  const auto a = louvain(aggregate_static(s), rng);
  for (std::size_t groups : {2u, 3u}) {
    SplitConfig cfg;
    cfg.groups = groups;
    const auto split = make_transfer_split(s, a, cfg);
    std::set<std::size_t> train(split.train_nodes.begin(), split.train_nodes.end());
    std::set<std::size_t> test(split.test_nodes.begin(), split.test_nodes.end());
    for (auto v : split.test_nodes) EXPECT_EQ(train.count(v), 0u);
    for (auto v : split.val_nodes) {
      EXPECT_EQ(train.count(v), 0u);
      EXPECT_EQ(test.count(v), 0u);
    }
    EXPECT_EQ(split.train.num_nodes, split.train_nodes.size());
    EXPECT_EQ(split.test.num_nodes, split.test_nodes.size());
    if (groups == 2) {
      EXPECT_TRUE(split.val.empty());
    }
    // Every event lands in one group or is dropped.
    EXPECT_EQ(split.train.size() + split.val.size() + split.test.size() + split.dropped_events,
              s.size());
    // Sub-streams stay chronological and keep their original ids.
    for (const auto* sub : {&split.train, &split.test})
      for (std::size_t i = 1; i < sub->size(); ++i)
        EXPECT_LE(sub->events[i - 1].timestamp, sub->events[i].timestamp);
  }
}

TEST(TransferSplit, FailsWhenAGroupIsEmpty) {
  const auto s = finalize_stream({{0, 1, 1.0, {}}, {1, 2, 2.0, {}}}, {"a", "b", "c"});
  CommunityAssignment one;
  one.community_of = {0, 0, 0};
  one.num_communities = 1;
  SplitConfig cfg;
  cfg.groups = 2;
  EXPECT_THROW(make_transfer_split(s, one, cfg), SplitError);
  cfg.groups = 4;
  EXPECT_THROW(make_transfer_split(s, one, cfg), ConfigError);
}

}  // namespace
}  // namespace tgnt
