#include <gtest/gtest.h>

#include <random>

#include "catgates/qec.hpp"

using namespace catgates;

namespace {

CircuitErrorModel uniform_model(double p) {
  CircuitErrorModel m;
  m.p0 = p;
  m.cx_zc = m.cx_zt = m.cx_zczt = p / 3.0;
  return m;
}

// Exhaustive maximum-weight matching for small graphs.
std::int64_t brute_max_weight(int n, const std::vector<BlossomMatcher::Edge>& edges) {
  std::int64_t best = 0;
  std::vector<bool> used(n, false);
  std::function<void(size_t, std::int64_t)> rec = [&](size_t k, std::int64_t acc) {
    best = std::max(best, acc);
    for (size_t e = k; e < edges.size(); ++e) {
      const auto& ed = edges[e];
      if (used[ed.u] || used[ed.v]) continue;
      used[ed.u] = used[ed.v] = true;
      rec(e + 1, acc + ed.w);
      used[ed.u] = used[ed.v] = false;
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(Blossom, MatchesBruteForceOnRandomGraphs) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 9);
    std::vector<BlossomMatcher::Edge> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng() % 3 != 0) edges.push_back({u, v, static_cast<std::int64_t>(rng() % 100)});
    const auto mate = max_weight_matching(n, edges, false);
    std::int64_t w = 0;
    for (const auto& e : edges)
      if (mate[e.u] == e.v) {
        EXPECT_EQ(mate[e.v], e.u);
        w += e.w;
      }
    EXPECT_EQ(w, brute_max_weight(n, edges)) << "trial " << trial;
  }
}

TEST(Blossom, OddCycleNeedsBlossom) {
  // Triangle with a pendant: the optimum uses the pendant edge.
  const auto mate = max_weight_matching(4, {{0, 1, 5}, {1, 2, 5}, {0, 2, 5}, {2, 3, 6}}, false);
  EXPECT_EQ(mate[2], 3);
  EXPECT_TRUE(mate[0] == 1);
}

TEST(Circuit, LayoutAndDetectors) {
  const RepetitionCircuit c(5);
  EXPECT_EQ(c.rounds(), 6);
  EXPECT_EQ(c.num_detectors(), 24);
  EXPECT_EQ(c.detector_coords(c.detector_index(3, 2)), std::make_pair(3, 2));
  EXPECT_THROW(RepetitionCircuit(4), std::invalid_argument);
  const FrameOutcome clean = c.propagate({});
  EXPECT_FALSE(clean.observable);
  for (auto v : clean.detectors) EXPECT_EQ(v, 0);
}

TEST(Circuit, SingleDataFlipGivesAdjacentDefects) {
  const RepetitionCircuit c(5);
  const auto& locs = c.locations();
  auto fired_for = [&](int data) {
    for (size_t i = 0; i < locs.size(); ++i)
      if (locs[i].kind == FaultKind::Idle && locs[i].round == 2 && locs[i].layer == 0 && locs[i].data == data) {
        const FrameOutcome f = c.propagate({{static_cast<int>(i), 1}});
        std::vector<int> fired;
        for (int k = 0; k < c.num_detectors(); ++k)
          if (f.detectors[k]) fired.push_back(k);
        return std::make_pair(fired, f.observable);
      }
    throw std::logic_error("idle location not found");
  };
  // The observable is the Z frame of data mode 0.
  const auto [mid, mid_obs] = fired_for(2);
  EXPECT_EQ(mid, (std::vector<int>{c.detector_index(2, 1), c.detector_index(2, 2)}));
  EXPECT_FALSE(mid_obs);
  const auto [edge, edge_obs] = fired_for(0);
  EXPECT_EQ(edge, (std::vector<int>{c.detector_index(2, 0)}));
  EXPECT_TRUE(edge_obs);
}

TEST(Circuit, PropagationIsLinear) {
  const RepetitionCircuit c(5);
  std::mt19937 rng(9);
  const int n = static_cast<int>(c.locations().size());
  for (int trial = 0; trial < 100; ++trial) {
    const int a = rng() % n, b = (a + 1 + rng() % (n - 1)) % n;
    const int oa = c.locations()[a].kind == FaultKind::Cx ? 1 + rng() % 3 : 1;
    const int ob = c.locations()[b].kind == FaultKind::Cx ? 1 + rng() % 3 : 1;
    const FrameOutcome fa = c.propagate({{a, oa}}), fb = c.propagate({{b, ob}}), fab = c.propagate({{a, oa}, {b, ob}});
    EXPECT_EQ(fab.observable, fa.observable != fb.observable);
    for (int k = 0; k < c.num_detectors(); ++k) EXPECT_EQ(fab.detectors[k], fa.detectors[k] ^ fb.detectors[k]);
  }
}

TEST(Circuit, EveryFaultIsGraphLike) {
  for (int d : {1, 3, 5, 7}) EXPECT_NO_THROW(CircuitModel(d, uniform_model(1e-3)));
}

TEST(Sampler, ZeroFaultsNeverFail) {
  const CircuitModel model(5, CircuitErrorModel{});
  const CircuitSampler s(model);
  for (int i = 0; i < 100; ++i) {
    SplitMix64 rng = SplitMix64::for_shot(1, i);
    const SyndromeRecord r = s.sample(rng);
    EXPECT_TRUE(r.defects.empty());
    EXPECT_FALSE(r.logical);
  }
  const LogicalRate lr = logical_error_rate(5, CircuitErrorModel{}, {.max_shots = 1000});
  EXPECT_EQ(lr.failures, 0);
}

TEST(Sampler, MarginalsWithinThreeSigma) {
  CircuitErrorModel e;
  e.p0 = 0.01;
  e.cx_zc = 0.02;
  e.cx_zt = 0.005;
  e.cx_zczt = 0.008;
  const CircuitModel model(3, e);
  const CircuitSampler s(model);
  const int shots = 100000;
  std::vector<std::array<int, 4>> counts(model.probs.size(), {0, 0, 0, 0});
  for (int i = 0; i < shots; ++i) {
    SplitMix64 rng = SplitMix64::for_shot(42, i);
    for (auto [loc, o] : s.sample_faults(rng)) ++counts[loc][o];
  }
  for (size_t loc = 0; loc < counts.size(); ++loc)
    for (int o = 1; o <= 3; ++o) {
      const double p = model.probs[loc][o];
      const double sigma = std::sqrt(shots * p * (1 - p));
      EXPECT_LE(std::abs(counts[loc][o] - shots * p), 3.0 * sigma + 1.0) << loc << ' ' << o;
    }
}

TEST(Sampler, DefectDensityMatchesExactParity) {
  CircuitErrorModel e;
  e.p0 = 1e-2;
  const CircuitModel model(3, e);
  // Detector k fires with probability (1 - prod(1 - 2 p_i)) / 2 over the
  // independent locations that flip it.
  std::vector<double> prod(model.circuit.num_detectors(), 1.0);
  for (size_t loc = 0; loc < model.probs.size(); ++loc)
    for (int det : model.effects[loc][1].detectors) prod[det] *= 1.0 - 2.0 * model.probs[loc][1];
  const int shots = 200000;
  std::vector<int> fired(prod.size(), 0);
  for (const auto& r : build_and_sample(3, e, shots, 77))
    for (int det : r.defects) ++fired[det];
  for (size_t k = 0; k < prod.size(); ++k) {
    const double p = 0.5 * (1.0 - prod[k]);
    EXPECT_NEAR(fired[k] / static_cast<double>(shots), p, 4.0 * std::sqrt(p * (1 - p) / shots)) << k;
  }
}

TEST(Decoder, MatchesBruteForce) {
  const CircuitModel model(5, CircuitErrorModel::from_rates(1e-3, 8.0, 0.5, 3e-4, 0.0, "test"));
  const int n = model.dem.num_detectors();
  std::mt19937 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + rng() % 8;
    std::set<int> s;
    while (static_cast<int>(s.size()) < k) s.insert(rng() % n);
    const std::vector<int> defects(s.begin(), s.end());
    const MatchingResult m = mwpm_match(defects, model.dem);
    EXPECT_NEAR(m.weight, brute_force_matching_weight(defects, model.dem), 1e-5 * k) << trial;
  }
}

TEST(Decoder, CorrectsSingleFaults) {
  const CircuitModel model(5, uniform_model(1e-3));
  const auto& locs = model.circuit.locations();
  for (size_t i = 0; i < locs.size(); ++i)
    for (int o = 1; o <= (locs[i].kind == FaultKind::Cx ? 3 : 1); ++o) {
      const FrameOutcome f = model.circuit.propagate({{static_cast<int>(i), o}});
      SyndromeRecord r;
      for (int k = 0; k < model.circuit.num_detectors(); ++k)
        if (f.detectors[k]) r.defects.push_back(k);
      EXPECT_EQ(mwpm_decode(r, model.dem), f.observable) << i << ' ' << o;
    }
}

TEST(Statistics, WilsonInterval) {
  const WilsonInterval w = wilson_interval(10, 100);
  EXPECT_NEAR(w.lo, 0.0552, 1e-4);
  EXPECT_NEAR(w.hi, 0.1744, 1e-4);
  EXPECT_EQ(wilson_interval(0, 100).lo, 0.0);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
  McOptions a{.max_shots = 30000, .block = 7000, .seed = 5, .threads = 1};
  McOptions b = a;
  b.threads = 3;
  const LogicalRate ra = logical_error_rate(3, uniform_model(0.01), a);
  const LogicalRate rb = logical_error_rate(3, uniform_model(0.01), b);
  EXPECT_EQ(ra.failures, rb.failures);
  EXPECT_GT(ra.failures, 0);
}

TEST(MonteCarlo, BelowAndAboveThreshold) {
  const McOptions mc{.max_shots = 40000, .seed = 2};
  EXPECT_LT(logical_error_rate(5, uniform_model(0.003), mc).p_lz, logical_error_rate(3, uniform_model(0.003), mc).p_lz);
  EXPECT_GT(logical_error_rate(5, uniform_model(0.12), mc).p_lz, logical_error_rate(3, uniform_model(0.12), mc).p_lz);
}

TEST(MonteCarlo, BitFlipFloorWithoutPhaseNoise) {
  CircuitErrorModel e;
  e.cx_x = 1e-6;
  const LogicalRate r = logical_error_rate(7, e, {.max_shots = 1000});
  EXPECT_EQ(r.p_lz, 0.0);
  EXPECT_DOUBLE_EQ(r.total(), 56e-6);
  EXPECT_THROW(CircuitErrorModel::from_rates(1.0, 8.0, 1.0, 0.0, 0.0, "x"), std::invalid_argument);
}

TEST(Fit, RecoversScalingLaw) {
  for (ScalingForm f : {ScalingForm::Quarter, ScalingForm::Third, ScalingForm::Half}) {
    FitResult truth;
    truth.A = 0.07;
    truth.B = 250.0;
    truth.form = f;
    std::vector<ScalingPoint> pts;
    for (double x : {1e-4, 3e-4, 1e-3})
      for (int d : {3, 5, 7}) pts.push_back({x, d, truth.predict(x, d)});
    const FitResult got = fit_scaling(pts, f);
    EXPECT_NEAR(got.A / truth.A, 1.0, 1e-6);
    EXPECT_NEAR(got.B / truth.B, 1.0, 1e-6);
    EXPECT_LT(got.residual, 1e-8);
  }
  EXPECT_THROW(fit_scaling({{1e-3, 3, 1e-2}, {2e-3, 3, 2e-2}, {3e-3, 3, 3e-2}}, ScalingForm::Half),
               std::invalid_argument);
}

TEST(Surrogate, TimeScalesAndOptimizer) {
  EXPECT_NEAR(dissipative_cx_t_star(1e-3, 8.0), std::numbers::pi / (64.0 * std::sqrt(2e-3)), 1e-12);
  EXPECT_GT(hard_cx_t_star(1e-4, 8.0), hard_cx_t_star(1e-3, 8.0));
  EXPECT_THROW(cx_t_star(Scheme::DBC, 1e-3, 8.0), std::invalid_argument);

  LogicalSurrogate s;
  s.scheme = Scheme::DBC;
  s.curve = GateCurve(Scheme::DBC, {0.4, 1.0, 4.0}, {1e-3, 1e-5, 1e-7}, {1e-9, 1e-10, 1e-11});
  FitResult f;
  f.A = 0.1;
  f.B = 40.0;
  s.fits = {f};
  const std::vector<int> ds = {1, 3, 5, 7, 9, 11, 13, 15};
  double prev = 0.0;
  for (double k1 : {1e-5, 1e-4, 1e-3}) {
    const LogicalOptimum o = optimize_logical(k1, s, optimizer_t_grid(s, k1), ds);
    EXPECT_GT(o.p_l, prev);
    prev = o.p_l;
  }
  // Vanishing loss leaves only the bit-flip floor.
  EXPECT_NEAR(s.p_l(1e-14, 4.0, 3), 12.0 * 1e-11, 1e-14);
  EXPECT_THROW(optimize_logical(1e-4, s, {1.0}, {4}), std::invalid_argument);

  const LogicalSurrogate r = logical_surrogate_from_json(to_json(s));
  EXPECT_EQ(r.scheme, s.scheme);
  EXPECT_DOUBLE_EQ(r.p_l(1e-4, 1.0, 5), s.p_l(1e-4, 1.0, 5));
}

TEST(Surrogate, EtaInterpolation) {
  LogicalSurrogate s;
  s.scheme = Scheme::Dissipative;
  s.curve = GateCurve(Scheme::Dissipative, {0.5, 20.0}, {1e-1, 2.5e-3}, {1e-3, 1e-6});
  s.eta = {0.5, 2.0};
  FitResult a, b;
  a.A = 0.1;
  a.B = 100.0;
  b.A = 0.4;
  b.B = 400.0;
  a.form = b.form = ScalingForm::Quarter;
  s.fits = {a, b};
  const FitResult mid = s.fit_at(1.25);
  EXPECT_NEAR(mid.A, 0.2, 1e-12);
  EXPECT_NEAR(mid.B, 200.0, 1e-9);
  EXPECT_DOUBLE_EQ(s.fit_at(10.0).A, 0.4);
  const auto grid = optimizer_t_grid(s, 1e-4, 5);
  EXPECT_NEAR(grid.front(), 0.5 * dissipative_cx_t_star(1e-4, 8.0), 1e-9);
}
