#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <dlb/adversarial.hpp>
#include <dlb/process.hpp>

namespace {

using namespace dlb;

TEST(RswStuck, GradientLoadIsAFixedPoint) {
  const Graph g = build_cycle(5);
  const InstanceBundle b = rsw_stuck_instance(g, 0);
  EXPECT_EQ(b.x0, (std::vector<std::int64_t>{0, 2, 4, 4, 2}));
  EXPECT_EQ(b.predicate, PredicateTag::fixed_point);
  EXPECT_EQ(b.predicate_params.at("expected_discrepancy").get<std::int64_t>(), 4);
  const VerifyResult r = verify_bundle(b, {.T = 50});
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(RswStuck, SingleEdgeAndTorusCases) {
  const Graph edge = build_path(2);
  const InstanceBundle b = rsw_stuck_instance(edge, 0);
  EXPECT_EQ(b.x0, (std::vector<std::int64_t>{0, 1}));
  EXPECT_TRUE(verify_bundle(b, {.T = 100}).pass);

  const Graph torus = build_torus({4, 4});
  EXPECT_TRUE(verify_bundle(rsw_stuck_instance(torus, 0), {.T = 200}).pass);
}

TEST(RswStuck, RejectsBadAnchorsAndDisconnection) {
  const Graph g = build_cycle(5);
  EXPECT_THROW(rsw_stuck_instance(g, -1), std::invalid_argument);
  EXPECT_THROW(rsw_stuck_instance(g, 5), std::invalid_argument);
  const Graph disc = build_custom(4, {{0, 1}, {2, 3}});
  EXPECT_THROW(rsw_stuck_instance(disc, 0), std::invalid_argument);
}

TEST(HalfLoad, ParityStructureAndPeriodTwoOrbit) {
  const InstanceBundle b = hypercube_halfload(4);
  ASSERT_EQ(b.x0.size(), 16u);
  for (int v = 0; v < 16; ++v) {
    const bool even = std::popcount(static_cast<unsigned>(v)) % 2 == 0;
    EXPECT_EQ(b.x0[v], even ? 4 : 0);
  }
  EXPECT_EQ(b.policy_hint.tie_break, TieBreak::adversarial);
  EXPECT_EQ(b.predicate, PredicateTag::period_2);
  const VerifyResult r = verify_bundle(b, {.T = 60});
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(HalfLoad, SmallestCaseHasHalfTokenDeviation) {
  const InstanceBundle b = hypercube_halfload(1);
  EXPECT_EQ(b.x0, (std::vector<std::int64_t>{1, 0}));
  const auto dev = b.predicate_params.at("deviation_step1");
  EXPECT_EQ(dev.at("num").get<std::int64_t>(), 1);
  EXPECT_EQ(dev.at("den").get<std::int64_t>(), 2);
  EXPECT_TRUE(verify_bundle(b, {.T = 50}).pass);
}

TEST(HalfLoad, WrongTieBreakBreaksThePeriodTwoOrbit) {
  InstanceBundle b = hypercube_halfload(4);
  b.policy_hint = RoundingPolicy{};  // default tie-break, no adversary
  const VerifyResult r = verify_bundle(b, {.T = 60});
  EXPECT_FALSE(r.pass);
}

// With the default tie-break the same start stays within the guaranteed
// envelope instead of locking into the period-2 orbit.
TEST(HalfLoad, DefaultTieBreakStaysWithinBound) {
  const InstanceBundle b = hypercube_halfload(8);
  const Graph g = build_hypercube(8);
  Simulator sim(g, b.x0, RoundingPolicy{});
  const DiffusionMatrix P = diffusion_matrix(g);
  ExactDeviationTracker tracker(P);
  std::vector<std::int64_t> w;
  for (int t = 0; t < 100; ++t) {
    sim.step();
    sim.last_net_errors(w);
    tracker.advance(w);
    ASSERT_TRUE(tracker.max_deviation_le(16, 1));
  }
}

TEST(HalfLoad, DimensionRangeValidated) {
  EXPECT_THROW(hypercube_halfload(0), std::invalid_argument);
  EXPECT_THROW(hypercube_halfload(25), std::invalid_argument);
}

TEST(RandomizedHalfLoad, OddParityLoadedAndFrequentlySpread) {
  const InstanceBundle b = randomized_halfload(10);
  ASSERT_EQ(b.x0.size(), 1024u);
  for (int v = 0; v < 1024; ++v) {
    const bool odd = std::popcount(static_cast<unsigned>(v)) % 2 == 1;
    EXPECT_EQ(b.x0[v], odd ? 10 : 0);
  }
  EXPECT_EQ(b.predicate, PredicateTag::stat_deviation);
  VerifyOptions opts;
  opts.trials = 30;
  opts.seed = 2024;
  const VerifyResult r = verify_bundle(b, opts);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_GE(r.data.at("frequency").get<double>(), 0.99);
}

TEST(RandomizedHalfLoad, StepOneLoadIsBinomial) {
  const InstanceBundle b = randomized_halfload(10);
  const Graph g = build_hypercube(10);
  double mean = 0.0, second = 0.0;
  const int trials = 3000;
  for (int k = 0; k < trials; ++k) {
    RoundingPolicy p;
    p.kind = PolicyKind::randomized;
    p.seed = derive_seed(99, static_cast<std::uint64_t>(k));
    Simulator sim(g, b.x0, p);
    sim.step();
    const double v = static_cast<double>(sim.loads()[1]);  // even-parity vertex
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 10.0);
    mean += v;
    second += v * v;
  }
  mean /= trials;
  const double var = second / trials - mean * mean;
  EXPECT_NEAR(mean, 5.0, 3.0 * std::sqrt(2.5 / trials));
  EXPECT_NEAR(var, 2.5, 0.3);
}

TEST(RandomizedHalfLoad, DimensionRangeValidated) {
  EXPECT_THROW(randomized_halfload(3), std::invalid_argument);
  EXPECT_THROW(randomized_halfload(25), std::invalid_argument);
}

TEST(TorusPolylog, LatticeBumpGeometry) {
  const InstanceBundle b = torus_polylog_instance(1024, 2);
  EXPECT_EQ(b.predicate, PredicateTag::stat_deviation);
  EXPECT_EQ(b.predicate_params.at("l").get<std::int64_t>(), 3);
  EXPECT_EQ(b.predicate_params.at("l_prime").get<std::int64_t>(), 7);
  EXPECT_EQ(b.predicate_params.at("lattice_points").get<std::int64_t>(), 9);
  EXPECT_EQ(b.predicate_params.at("initial_discrepancy").get<std::int64_t>(), 6);
  EXPECT_EQ(*std::max_element(b.x0.begin(), b.x0.end()), 6);
  std::int64_t sum = 0;
  for (std::int64_t v : b.x0) sum += v;
  // 9 bumps: center 6 plus eight cells of height 2 each.
  EXPECT_EQ(sum, 9 * (6 + 8 * 2));
  EXPECT_EQ(discrepancy(b.x0), 6);
}

TEST(TorusPolylog, ObservationalVerifyEmitsPerTrialData) {
  const InstanceBundle b = torus_polylog_instance(1024, 2);
  VerifyOptions opts;
  opts.T = 40;
  opts.trials = 2;
  opts.seed = 7;
  const VerifyResult r = verify_bundle(b, opts);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.data.at("max_deviation_per_trial").size(), 2u);
  EXPECT_GT(r.data.at("median_deviation").get<double>(), 0.0);
}

TEST(TorusPolylog, RejectsDegenerateSizes) {
  EXPECT_THROW(torus_polylog_instance(64, 2), std::invalid_argument);   // lattice empty
  EXPECT_THROW(torus_polylog_instance(512, 3), std::invalid_argument);  // lattice empty
  EXPECT_THROW(torus_polylog_instance(1000, 2), std::invalid_argument);  // not a square
  EXPECT_THROW(torus_polylog_instance(1024, 5), std::invalid_argument);  // dims out of range
}

TEST(Bundles, JsonRoundTripsExactly) {
  const Graph cyc = build_cycle(7);
  const InstanceBundle bundles[] = {
      rsw_stuck_instance(cyc, 2),
      hypercube_halfload(3),
      randomized_halfload(5),
      torus_polylog_instance(1024, 2),
  };
  for (const InstanceBundle& b : bundles) {
    const InstanceBundle back = bundle_from_json(bundle_to_json(b));
    EXPECT_EQ(bundle_to_json(back), bundle_to_json(b));
  }
}

TEST(Bundles, FromJsonValidatesLoadLength) {
  nlohmann::json j = bundle_to_json(hypercube_halfload(2));
  j["x0"] = std::vector<std::int64_t>{1, 2, 3};
  EXPECT_THROW(bundle_from_json(j), std::invalid_argument);
}

TEST(MakeInstance, FactoryDispatchesByName) {
  const InstanceBundle a =
      make_instance("rsw_stuck", {{"graph", "cycle:5"}, {"anchor", 0}});
  EXPECT_EQ(a.x0, (std::vector<std::int64_t>{0, 2, 4, 4, 2}));
  const InstanceBundle b = make_instance("hypercube_halfload", {{"d", 3}});
  EXPECT_EQ(b.x0.size(), 8u);
  const InstanceBundle c = make_instance("randomized_halfload", {{"d", 4}});
  EXPECT_EQ(c.x0.size(), 16u);
  const InstanceBundle d = make_instance("torus_polylog", {{"n", 1024}, {"d", 2}});
  EXPECT_EQ(d.x0.size(), 1024u);
  EXPECT_THROW(make_instance("no_such_instance", {}), std::invalid_argument);
}

TEST(VerifyBundle, FixedPointFailsOnPerturbedLoad) {
  const Graph g = build_cycle(5);
  InstanceBundle b = rsw_stuck_instance(g, 0);
  b.x0[2] += 3;  // no longer a gradient; RSW moves tokens
  const VerifyResult r = verify_bundle(b, {.T = 50});
  EXPECT_FALSE(r.pass);
}

TEST(VerifyBundle, FixedPointChecksDeclaredDiscrepancy) {
  const Graph g = build_cycle(5);
  InstanceBundle b = rsw_stuck_instance(g, 0);
  b.predicate_params["expected_discrepancy"] = 999;
  EXPECT_FALSE(verify_bundle(b, {.T = 10}).pass);
}

}  // namespace
