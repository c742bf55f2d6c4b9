#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tgnt/ctdg.hpp"

namespace tgnt {
namespace {

auto random_csv(std::size_t rows, std::size_t edge_dim, Rng& rng) -> std::string {
  std::ostringstream os;
  std::uniform_int_distribution<int> node(0, 199);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  os << "src,dst,timestamp";
  for (std::size_t f = 0; f < edge_dim; ++f) os << ",f" << f;
  os << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    int a = node(rng), b = node(rng);
    while (b == a) b = node(rng);
    os << "user" << a << ",item" << b << ',' << detail::format_double(std::abs(u(rng)));
    for (std::size_t f = 0; f < edge_dim; ++f) os << ',' << detail::format_double(u(rng) / 7.0);
    os << '\n';
  }
  return os.str();
}

TEST(Csv, RoundTripTenThousandRows) {
  Rng rng(1);
  std::istringstream in(random_csv(10000, 3, rng));
  const auto a = parse_csv(in);
  ASSERT_EQ(a.size(), 10000u);
  EXPECT_EQ(a.edge_dim, 3u);
  std::istringstream again(to_csv_string(a));
  const auto b = parse_csv(again);
  // Dense ids may be assigned differently; the events under original ids agree.
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.events[i];
    const auto& y = b.events[i];
    EXPECT_EQ(a.original_ids[x.src], b.original_ids[y.src]);
    EXPECT_EQ(a.original_ids[x.dst], b.original_ids[y.dst]);
    EXPECT_EQ(x.timestamp, y.timestamp);
    EXPECT_EQ(x.edge_feat, y.edge_feat);
  }
  EXPECT_EQ(a.num_nodes, b.num_nodes);
  EXPECT_EQ(to_csv_string(a), to_csv_string(b));
}

TEST(Csv, SortsByTimeStably) {
  std::istringstream in("a,b,3\nb,c,1\nc,a,1\n");
  const auto s = parse_csv(in);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.events[0].timestamp, 1.0);
  EXPECT_EQ(s.original_ids[s.events[0].src], "b");
  EXPECT_EQ(s.original_ids[s.events[1].src], "c");
  EXPECT_EQ(s.events[2].timestamp, 3.0);
  EXPECT_EQ(s.num_nodes, 3u);
}

TEST(Csv, HeaderDetectionAndComments) {
  std::istringstream with("# comment\nsrc,dst,t,w\n1,2,0.5,9\n");
  const auto s = parse_csv(with);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.edge_dim, 1u);
  EXPECT_EQ(s.events[0].edge_feat, std::vector<double>{9.0});
}

TEST(Csv, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_csv(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("a,b,1\na,b\n"), 2u);
  EXPECT_EQ(line_of("a,b,1\na,b,x\n"), 2u);
  EXPECT_EQ(line_of("src,dst,t\na,b,1\na,b,1,5\n"), 3u);
  EXPECT_EQ(line_of("a,b,1,zz\n"), 1u);
}

TEST(Csv, RejectsInvalidEvents) {
  std::istringstream self_loop("a,a,1\n");
  EXPECT_THROW(parse_csv(self_loop), ValidationError);
  std::istringstream arity("a,b,1,2\nb,c,2\n");
  EXPECT_THROW(parse_csv(arity), Error);
  std::istringstream kind("src,dst,t,kind\na,b,1,edge_deletion\n");
  EXPECT_THROW(parse_csv(kind), ValidationError);
  std::istringstream negative("a,b,-1\n");
  EXPECT_THROW(parse_csv(negative), ValidationError);
}

TEST(Batching, ReconstructsTheStream) {
  Rng rng(2);
  std::istringstream in(random_csv(1037, 0, rng));
  const auto s = parse_csv(in);
  for (std::size_t bs : {1u, 7u, 100u, 1037u, 5000u}) {
    const auto batches = make_batches(s, bs);
    std::vector<TemporalEvent> rebuilt;
    std::size_t expect_begin = 0;
    for (const auto& b : batches) {
      EXPECT_EQ(b.begin, expect_begin);
      EXPECT_LE(b.size(), bs);
      EXPECT_GT(b.size(), 0u);
      EXPECT_EQ(b.start_time, s.events[b.begin].timestamp);
      EXPECT_EQ(b.end_time, s.events[b.end - 1].timestamp);
      for (const auto& e : b.view(s)) rebuilt.push_back(e);
      expect_begin = b.end;
    }
    EXPECT_EQ(rebuilt, s.events) << "batch size " << bs;
  }
  EXPECT_THROW(make_batches(s, 0), ValidationError);
}

TEST(NegativeSampling, NeverTheTrueDestination) {
  Rng rng(3);
  std::istringstream in(random_csv(500, 0, rng));
  const auto s = parse_csv(in);
  const EventBatch all{0, s.size(), s.start_time(), s.end_time()};
  const auto negs = sample_negatives(s, all, s.num_nodes, 20, rng);
  ASSERT_EQ(negs.size(), s.size());
  for (std::size_t i = 0; i < negs.size(); ++i) {
    ASSERT_EQ(negs[i].size(), 20u);
    for (auto n : negs[i]) {
      EXPECT_NE(n, s.events[i].dst);
      EXPECT_LT(n, s.num_nodes);
    }
  }
}

// Chi-square goodness of fit of negatives for one fixed destination against
// the uniform law over the remaining nodes.
TEST(NegativeSampling, UniformOverOtherNodes) {
  const std::size_t n = 11;
  std::vector<std::string> ids;
  for (std::size_t v = 0; v < n; ++v) ids.push_back(std::to_string(v));
  const auto s = finalize_stream({{0, 4, 1.0, {}}}, ids);
  Rng rng(4);
  std::map<NodeId, std::size_t> hist;
  const std::size_t draws = 100000;
  const auto negs = sample_negatives(s, EventBatch{0, 1, 1.0, 1.0}, n, draws, rng);
  for (auto v : negs[0]) ++hist[v];
  EXPECT_EQ(hist.count(4), 0u);
  const double expected = static_cast<double>(draws) / static_cast<double>(n - 1);
  double chi2 = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    if (v == 4) continue;
    const double o = static_cast<double>(hist[v]);
    chi2 += (o - expected) * (o - expected) / expected;
  }
  // 9 degrees of freedom; the 0.999 quantile is 27.88.
  EXPECT_LT(chi2, 27.88);
}

TEST(NegativeSampling, DeterministicAndValidated) {
  Rng data(5);
  std::istringstream in(random_csv(50, 0, data));
  const auto s = parse_csv(in);
  const EventBatch all{0, s.size(), s.start_time(), s.end_time()};
  Rng a(9), b(9);
  EXPECT_EQ(sample_negatives(s, all, s.num_nodes, 4, a), sample_negatives(s, all, s.num_nodes, 4, b));
  EXPECT_THROW(sample_negatives(s, all, 1, 4, a), ValidationError);
  EXPECT_THROW(sample_negatives(s, all, s.num_nodes, 0, a), ValidationError);
}

TEST(Generator, DeterministicAndPlanted) {
  GeneratorSpec spec;
  spec.num_communities = 3;
  spec.nodes_per_community = 10;
  spec.num_events = 3000;
  spec.edge_dim = 2;
  Rng a(7), b(7);
  const auto s1 = generate_synthetic(spec, a);
  const auto s2 = generate_synthetic(spec, b);
  EXPECT_EQ(s1.events, s2.events);
  EXPECT_EQ(s1.size(), 3000u);
  EXPECT_EQ(s1.edge_dim, 2u);
  const auto comm = planted_communities(s1, spec);
  std::size_t intra = 0;
  for (const auto& e : s1.events) intra += comm[e.src] == comm[e.dst];
  // p_in / (p_in + p_out) = 0.9 for fresh partners; repeats preserve it.
  EXPECT_GT(static_cast<double>(intra) / 3000.0, 0.85);
  for (std::size_t i = 1; i < s1.size(); ++i)
    EXPECT_LE(s1.events[i - 1].timestamp, s1.events[i].timestamp);
}

TEST(Generator, RejectsBadSpecs) {
  Rng rng(1);
  GeneratorSpec spec;
  spec.num_communities = 1;
  EXPECT_THROW(generate_synthetic(spec, rng), ValidationError);
  spec = {};
  spec.p_out = spec.p_in;
  EXPECT_THROW(generate_synthetic(spec, rng), ValidationError);
}

TEST(Substream, ReindexesKeptNodes) {
  const auto s = finalize_stream({{0, 1, 1.0, {}}, {1, 2, 2.0, {}}, {2, 3, 3.0, {}}},
                                 {"a", "b", "c", "d"});
  const auto sub = induced_substream(s, {false, true, true, true});
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.num_nodes, 3u);
  EXPECT_EQ(sub.original_ids, (std::vector<std::string>{"b", "c", "d"}));
  EXPECT_EQ(sub.events[0].src, 0u);
  EXPECT_EQ(sub.events[1].dst, 2u);
}

}  // namespace
}  // namespace tgnt
