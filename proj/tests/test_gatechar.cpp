#include <gtest/gtest.h>

#include "catgates/gatechar.hpp"

using namespace catgates;

namespace {

const KerrCatSpectrum& spectrum8() {
  static const KerrCatSpectrum s = diagonalize_kerr_cat(ModeSpace::for_alpha2(8.0), 1.0);
  return s;
}

GateParams params(GateKind k, Scheme s, double T, int pairs = 0) {
  GateParams p;
  p.kind = k;
  p.scheme = s;
  p.T = T;
  p.pairs = pairs;
  return p;
}

GateErrorReport run(GateKind k, Scheme s, double T, double kappa1, SimulationOptions opts = {}, int pairs = 0) {
  NoiseSpec n;
  n.kappa1 = kappa1;
  return extract_error_probs(build_gate(params(k, s, T, pairs), spectrum8()), n, opts);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(ErrorModel, ClosedForm) {
  EXPECT_EQ(error_model_eval(1e-5, 2e-9, 0.0, 8.0, 1.0, 2.0), std::make_pair(1e-5, 2e-9));
  const auto [pz, px] = error_model_eval(1e-5, 0.0, 1e-3 / 8.0, 8.0, 1.0, 2.0);
  EXPECT_NEAR(pz, 2.01e-3, 1e-15);
  EXPECT_EQ(px, 0.0);
  EXPECT_THROW(error_model_eval(-1.0, 0.0, 0.0, 8.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_EQ(loss_beta(GateKind::Z), 1.0);
  EXPECT_EQ(loss_beta(GateKind::ZZ), 2.0);
  EXPECT_EQ(loss_beta(GateKind::CX), 2.0);
}

TEST(Report, BiasFloor) {
  GateErrorReport r;
  r.p_z = 1e-3;
  r.p_x = 1e-15;
  EXPECT_TRUE(std::isinf(r.bias()));
  r.p_x = 1e-6;
  EXPECT_NEAR(r.bias(), 1e3, 1e-9);
  EXPECT_TRUE(to_json(GateErrorReport{})["p_z_na"].is_null());
}

TEST(ZGate, FrozenNoiselessValues) {
  EXPECT_NEAR(run(GateKind::Z, Scheme::DBC, 0.2, 0.0).p_z, 8.5079e-8, 0.01 * 8.5079e-8);
  EXPECT_NEAR(run(GateKind::Z, Scheme::Hard, 0.2, 0.0).p_z, 7.2188e-5, 0.01 * 7.2188e-5);
}

TEST(ZGate, SchemeOrderingAtShortTime) {
  const GateErrorReport dbc = run(GateKind::Z, Scheme::DBC, 0.2, 0.0);
  const GateErrorReport hard = run(GateKind::Z, Scheme::Hard, 0.2, 0.0);
  const GateErrorReport dis = run(GateKind::Z, Scheme::Dissipative, 0.2, 0.0);
  EXPECT_LT(10.0 * dbc.p_z, hard.p_z);
  EXPECT_LT(dbc.p_x, hard.p_x);
  EXPECT_LT(hard.p_z, dis.p_z);
}

TEST(ZGate, LossAsymptote) {
  const double k1 = 1e-4, T = 5.0;
  const GateErrorReport r = run(GateKind::Z, Scheme::DBC, T, k1);
  EXPECT_LT(rel(r.p_z, k1 * 8.0 * T), 0.05);
}

TEST(ZGate, StepHalvingAndBasisStability) {
  SimulationOptions base;
  base.steps = 4000;
  SimulationOptions half = base;
  half.steps = 8000;
  const double a = run(GateKind::Z, Scheme::DBC, 0.3, 1e-3, base).p_z;
  const double b = run(GateKind::Z, Scheme::DBC, 0.3, 1e-3, half).p_z;
  EXPECT_LT(rel(a, b), 0.02);
  const double c = run(GateKind::Z, Scheme::DBC, 0.3, 1e-3, {}, 6).p_z;
  EXPECT_LT(rel(c, b), 0.05);
}

TEST(ZGate, DissipativeNonAdiabaticErrorLinearInInverseTime) {
  std::vector<double> T = {2.0, 5.0, 10.0, 20.0}, p;
  for (double t : T) p.push_back(run(GateKind::Z, Scheme::Dissipative, t, 0.0).p_z);
  EXPECT_NEAR(loglog_fit(T, p).first, -1.0, 0.15);
}

TEST(Tomography, IdentityChannel) {
  std::vector<Mat> ins;
  for (int k = 0; k < 4; ++k) {
    const Vec v = detail::qubit_state(k);
    ins.push_back(projector(v));
  }
  const ChiMatrix chi = fit_chi(ins, ins, identity(2), 1);
  EXPECT_NEAR(chi.chi(0, 0).real(), 1.0, 1e-10);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i || j) {
        EXPECT_LT(std::abs(chi.chi(i, j)), 1e-10);
      }
    }
  EXPECT_LT(chi.condition_number, 1e3);
}

TEST(Tomography, KnownDephasingChannel) {
  const double p = 0.03;
  std::vector<Mat> ins, outs;
  const Mat z = pauli_matrix(3, 1);
  for (int k = 0; k < 4; ++k) {
    const Mat r = projector(detail::qubit_state(k));
    ins.push_back(r);
    outs.push_back((1 - p) * r + p * z * r * z);
  }
  const ChiMatrix chi = fit_chi(ins, outs, identity(2), 1);
  EXPECT_NEAR(chi.diagonal("Z"), p, 1e-10);
  EXPECT_NEAR(chi.z_weight(), p, 1e-10);
  EXPECT_NEAR(chi.x_weight(), 0.0, 1e-10);
  EXPECT_THROW(chi.diagonal("Q"), std::invalid_argument);
}

TEST(Tomography, AgreesWithStateExtraction) {
  NoiseSpec n;
  n.kappa1 = 1e-3;
  const GateModel m = build_gate(params(GateKind::Z, Scheme::DBC, 0.5), spectrum8());
  const ChiMatrix chi = process_tomography(m, n);
  const GateErrorReport r = extract_error_probs(m, n);
  EXPECT_LT(rel(chi.z_weight(), r.p_z), 0.05);
  EXPECT_LT(hermiticity_defect(chi.chi), 1e-8);
  EXPECT_NEAR(chi.chi.trace().real(), 1.0, 1e-6);
  EXPECT_GT(min_eigenvalue(hermitian_part(chi.chi)), -1e-7);
}

TEST(Labels, PauliOrdering) {
  EXPECT_EQ(pauli_label(0, 2), "II");
  EXPECT_EQ(pauli_label(3, 1), "Z");
  EXPECT_EQ(pauli_label(4 * 3 + 1, 2), "ZX");
  EXPECT_LT((pauli_matrix(4 * 3 + 1, 2) - kron(pauli_matrix(3, 1), pauli_matrix(1, 1))).norm(), 1e-15);
}

TEST(Sweep, MinimumLocation) {
  const std::vector<double> T = {1, 2, 4, 8, 16};
  const SweepOptimum mono = locate_minimum(T, {5, 4, 3, 2, 1});
  EXPECT_TRUE(mono.on_boundary);
  EXPECT_EQ(mono.T_star, 16.0);
  std::vector<double> p;
  for (double t : T) p.push_back(1.0 / t + t / 16.0);
  const SweepOptimum o = locate_minimum(T, p);
  EXPECT_FALSE(o.on_boundary);
  EXPECT_TRUE(o.unimodal);
  EXPECT_NEAR(o.T_star, 4.0, 0.5);
  EXPECT_FALSE(locate_minimum(T, {1, 3, 2, 4, 3}).unimodal);
}

TEST(Sweep, GridsAndFits) {
  const auto g = bracket_grid(2.0, 5, 2.0);
  EXPECT_DOUBLE_EQ(g.front(), 0.5);
  EXPECT_DOUBLE_EQ(g[2], 2.0);
  EXPECT_DOUBLE_EQ(g.back(), 8.0);
  const auto l = log_grid(1.0, 100.0, 3);
  EXPECT_NEAR(l[1], 10.0, 1e-12);
  const auto [slope, icpt] = loglog_fit({1, 10, 100}, {3, 3 * std::sqrt(10.0), 30});
  EXPECT_NEAR(slope, 0.5, 1e-12);
  EXPECT_NEAR(std::exp(icpt), 3.0, 1e-12);
}

TEST(Sweep, ZGateLossTradeoff) {
  SweepConfig cfg;
  cfg.base = params(GateKind::Z, Scheme::Hard, 1.0);
  cfg.kappa1 = {1e-4, 1e-3};
  cfg.T_grid = log_grid(0.1, 1.6, 5);
  const SweepResult r = sweep_gate_time(spectrum8(), cfg);
  ASSERT_EQ(r.optima.size(), 2u);
  EXPECT_GE(r.points.size(), 10u);
  EXPECT_LT(r.optima[0].p_z_star, r.optima[1].p_z_star);
  EXPECT_GE(r.optima[0].T_star, r.optima[1].T_star);
  EXPECT_GT(r.exponent, 0.0);
  EXPECT_LT(r.exponent, 1.0);
  cfg.T_grid = {0.1, 0.2};
  EXPECT_THROW(sweep_gate_time(spectrum8(), cfg), std::invalid_argument);
}

TEST(Curve, InterpolationAndSerialization) {
  const GateCurve c(Scheme::DBC, {1, 2, 4}, {1e-2, 1e-4, 1e-6}, {1e-8, 1e-9, 0.0});
  EXPECT_NEAR(c.p_z_at(std::sqrt(2.0)), 1e-3, 1e-15);
  EXPECT_NEAR(c.p_z_at(8.0), 1e-8, 1e-20);
  EXPECT_EQ(c.p_x().back(), 1e-14);
  const GateCurve r = gate_curve_from_json(to_json(c));
  EXPECT_EQ(r.times(), c.times());
  EXPECT_EQ(r.scheme(), Scheme::DBC);
  EXPECT_THROW(GateCurve(Scheme::DBC, {2, 1}, {1, 1}, {1, 1}), std::invalid_argument);
  const double ts = model_t_star(c, 1e-4, 8.0, 2.0);
  EXPECT_GT(ts, 1.0);
  EXPECT_LT(ts, 4.0);
}

TEST(CxGate, DissipativeBitFlipsFallWithTime) {
  double prev = 1.0;
  for (double T : {1.0, 2.0, 4.0}) {
    const double px = run(GateKind::CX, Scheme::Dissipative, T, 0.0).p_x;
    EXPECT_LT(px, prev) << T;
    prev = px;
  }
}

TEST(CxGate, DbcRotationCompensationHelps) {
  const GateModel m = build_gate(params(GateKind::CX, Scheme::DBC, 1.0), spectrum8());
  GateModel bare = m;
  bare.target = detail::cx_target(8.0, 0.0);
  const GateErrorReport with = extract_error_probs(m, NoiseSpec{});
  const GateErrorReport without = extract_error_probs(bare, NoiseSpec{});
  EXPECT_LT(with.p_z, without.p_z);
}
