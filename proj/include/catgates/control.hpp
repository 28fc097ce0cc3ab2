#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "catgates/hilbert.hpp"
#include "catgates/linalg.hpp"
#include "catgates/pulses.hpp"

namespace catgates {

enum class Scheme { Hard, Gaussian, DBC, Dissipative };
enum class GateKind { Z, ZZ, CX };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Hard: return "hard";
    case Scheme::Gaussian: return "gaussian";
    case Scheme::DBC: return "dbc";
    case Scheme::Dissipative: return "dissipative";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "hard") return Scheme::Hard;
  if (s == "gaussian") return Scheme::Gaussian;
  if (s == "dbc") return Scheme::DBC;
  if (s == "dissipative") return Scheme::Dissipative;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

inline std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::Z: return "z";
    case GateKind::ZZ: return "zz";
    case GateKind::CX: return "cx";
  }
  return "?";
}

inline GateKind gate_kind_from_string(const std::string& s) {
  if (s == "z") return GateKind::Z;
  if (s == "zz") return GateKind::ZZ;
  if (s == "cx") return GateKind::CX;
  throw std::invalid_argument("unknown gate kind '" + s + "'");
}

/// Pair counts per mode used by default for each gate.
inline int default_pairs(GateKind k) {
  switch (k) {
    case GateKind::Z: return 5;
    case GateKind::ZZ: return 6;
    case GateKind::CX: return 4;
  }
  return 4;
}

inline constexpr double kZC0 = 0.07;
inline constexpr double kZZC0 = 0.126;

struct GateParams {
  GateKind kind = GateKind::Z;
  Scheme scheme = Scheme::DBC;
  double theta = std::numbers::pi / 2;  // ignored for CX
  double T = 1.0;                       // units of 1/K, or 1/kappa2 for dissipative gates
  double K = 1.0;
  double kappa2 = 1.0;
  double alpha2 = 8.0;
  int pairs = 0;  // 0 selects default_pairs(kind)
  std::optional<double> c0;

  int pair_count() const { return pairs > 0 ? pairs : default_pairs(kind); }
  double alpha() const { return std::sqrt(alpha2); }

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("gate: T must be positive");
    if (!(alpha2 > 0.0)) throw std::invalid_argument("gate: alpha2 must be positive");
    if (kind != GateKind::CX && !(theta > -2 * std::numbers::pi && theta <= 2 * std::numbers::pi))
      throw std::invalid_argument("gate: theta outside (-2pi, 2pi]");
    if (scheme == Scheme::Dissipative && kind == GateKind::ZZ)
      throw std::invalid_argument("gate: no dissipative ZZ construction");
    if (scheme == Scheme::Dissipative && !(kappa2 > 0.0))
      throw std::invalid_argument("gate: kappa2 must be positive");
  }
};

inline nlohmann::json to_json(const GateParams& p) {
  nlohmann::json j = {{"kind", to_string(p.kind)}, {"scheme", to_string(p.scheme)}, {"theta", p.theta},
                      {"T", p.T},           {"K", p.K},                     {"kappa2", p.kappa2},
                      {"alpha2", p.alpha2}, {"pairs", p.pair_count()}};
  if (p.c0) j["c0"] = *p.c0;
  return j;
}

inline GateParams gate_params_from_json(const nlohmann::json& j) {
  GateParams p;
  p.kind = gate_kind_from_string(j.at("kind"));
  p.scheme = scheme_from_string(j.at("scheme"));
  p.theta = j.value("theta", p.theta);
  p.T = j.at("T");
  p.K = j.value("K", 1.0);
  p.kappa2 = j.value("kappa2", 1.0);
  p.alpha2 = j.value("alpha2", 8.0);
  p.pairs = j.value("pairs", 0);
  if (j.contains("c0")) p.c0 = j.at("c0").get<double>();
  return p;
}

using Coefficient = std::function<cplx(double)>;

struct Term {
  std::string name;
  Mat op;
  Coefficient coef;
};

/// Jump operator L(t); the rate is folded into the operator.
struct Jump {
  std::string name;
  std::function<Mat(double)> op;
};

/// Controlled rotation phi(t) of the target for the CX gate.
struct CxSchedule {
  std::string kind;
  double T = 1.0;
  std::function<double(double)> phi, phidot, phiddot;
};

inline CxSchedule cx_schedule(Scheme scheme, double T) {
  CxSchedule s;
  s.T = T;
  if (scheme == Scheme::Hard || scheme == Scheme::Dissipative) {
    s.kind = "linear";
    s.phi = [T](double t) { return std::numbers::pi * std::clamp(t, 0.0, T) / T; };
    s.phidot = [T](double) { return std::numbers::pi / T; };
    s.phiddot = [](double) { return 0.0; };
  } else {
    s.kind = "gaussian2";
    PulseShape g = gaussian_pulse(2, T, std::numbers::pi);
    s.phi = [g](double t) { return g.integral(t).real(); };
    s.phidot = [g](double t) { return g(t).real(); };
    s.phiddot = [g](double t) { return g.derivative(t, 1).real(); };
  }
  return s;
}

/// Frame U(phi) = P_c^- (x) exp(-i phi (n_t - alpha^2)) + P_c^+ on a pair of
/// truncated eigenbases. Lab operators G_c (x) a_t^dag^p a_t^q are mapped
/// block by block: the rotation acts exactly on the monomial in the P^-P^-
/// block, and the cross blocks use the projected Fock-space rotation.
class AdiabaticFrame {
 public:
  AdiabaticFrame(const CatBasis& control, const CatBasis& target)
      : control_(control), target_(target), pm_(control.well_projector(-1)), pp_(control.well_projector(1)) {
    nt_shift_ = target_.monomial(1, 1) - target_.alpha2() * identity(target_.dim());
  }

  const Mat& minus_projector() const { return pm_; }
  const Mat& plus_projector() const { return pp_; }
  const CatBasis& control() const { return control_; }
  const CatBasis& target() const { return target_; }
  int dim() const { return control_.dim() * target_.dim(); }

  Mat rotation(double phi) const { return target_.rotation(phi); }

  Mat unitary(double phi) const {
    Mat u = kron(pm_, rotation(phi));
    u += kron(pp_, identity(target_.dim()));
    return u;
  }

  /// out += U (g (x) f) U^dag where f carries the phase index q - p.
  void add_mapped(const Mat& g, int phase_index, const Mat& f, double phi, const Mat& r, Mat& out) const {
    const Mat mm = pm_ * g * pm_;
    const Mat pp = pp_ * g * pp_;
    const Mat mp = pm_ * g * pp_;
    const Mat pmb = pp_ * g * pm_;
    kron_add(std::exp(kI * (phi * phase_index)), mm, f, out);
    kron_add(1.0, pp, f, out);
    if (mp.norm() > 0.0) kron_add(1.0, mp, r * f, out);
    if (pmb.norm() > 0.0) kron_add(1.0, pmb, f * r.adjoint(), out);
  }

  /// i dU/dt U^dag = phidot P^- (x) (n_t - alpha^2).
  void add_generator(double phidot, Mat& out) const { kron_add(phidot, pm_, nt_shift_, out); }

 private:
  CatBasis control_, target_;
  Mat pm_, pp_;
  Mat nt_shift_;
};

/// Sum of lab-frame products c_j(t) G_j (x) F evaluated in the adiabatic frame.
class FramedOperator {
 public:
  struct Piece {
    std::string name;
    Coefficient coef;
    Mat g;
  };
  struct Group {
    int phase_index;
    Mat f;
    std::vector<Piece> pieces;
  };

  void add(std::string name, Coefficient coef, Mat g, int phase_index, const Mat& f) {
    for (auto& grp : groups_) {
      if (grp.phase_index == phase_index && grp.f.rows() == f.rows() && (grp.f - f).norm() == 0.0) {
        grp.pieces.push_back({std::move(name), std::move(coef), std::move(g)});
        return;
      }
    }
    groups_.push_back({phase_index, f, {{std::move(name), std::move(coef), std::move(g)}}});
  }

  void accumulate(const AdiabaticFrame& frame, double t, double phi, const Mat& r, Mat& out) const {
    for (const auto& grp : groups_) {
      Mat s = Mat::Zero(grp.pieces.front().g.rows(), grp.pieces.front().g.cols());
      bool any = false;
      for (const auto& pc : grp.pieces) {
        const cplx c = pc.coef(t);
        if (c != cplx(0.0)) {
          s += c * pc.g;
          any = true;
        }
      }
      if (any) frame.add_mapped(s, grp.phase_index, grp.f, phi, r, out);
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& g : groups_)
      for (const auto& p : g.pieces) n.push_back(p.name);
    return n;
  }

 private:
  std::vector<Group> groups_;
};

/// Time-dependent gate model on one or two truncated Kerr-cat eigenbases.
struct GateModel {
  GateParams params;
  std::vector<CatBasis> bases;
  Mat static_h;
  std::vector<Term> terms;
  /// Additional contribution added to H(t) (used by the framed CX models).
  std::function<void(double, Mat&)> dynamic_h;
  std::vector<std::string> dynamic_names;
  /// Engineered jumps that are part of the gate (two-photon dissipation).
  std::vector<Jump> jumps;
  /// Unit-rate single-photon loss per mode, in the simulation frame.
  std::vector<Jump> loss;
  /// Lab-to-simulation frame map U(t); empty for lab-frame simulations.
  std::function<Mat(double)> frame;
  /// Ideal logical unitary (with the over-rotation compensation folded in).
  Mat target;
  double delta_theta = 0.0;

  int modes() const { return static_cast<int>(bases.size()); }
  int dim() const { return static_cast<int>(static_h.rows()); }
  double duration() const { return params.T; }

  void hamiltonian(double t, Mat& out) const {
    out = static_h;
    for (const auto& term : terms) {
      const cplx c = term.coef(t);
      if (c != cplx(0.0)) out += c * term.op;
    }
    if (dynamic_h) dynamic_h(t, out);
  }

  Mat hamiltonian(double t) const {
    Mat h;
    hamiltonian(t, h);
    return h;
  }

  /// dim x 2^modes matrix whose columns are the logical computational states.
  Mat logical_isometry() const {
    Mat w = bases.front().logical_isometry();
    for (size_t i = 1; i < bases.size(); ++i) w = kron(w, bases[i].logical_isometry());
    return w;
  }

  std::vector<std::string> term_names() const {
    std::vector<std::string> n;
    for (const auto& t : terms) n.push_back(t.name);
    for (const auto& d : dynamic_names) n.push_back(d);
    return n;
  }
};

namespace detail {

inline Mat pauli_z() {
  Mat z = Mat::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

inline Mat pauli_x() {
  Mat x = Mat::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  return x;
}

/// Energies of a spectrum computed at spec.K rescaled to the requested K.
inline CatBasis basis_for(const KerrCatSpectrum& spec, const GateParams& p) {
  if (std::abs(spec.space.alpha2() - p.alpha2) > 1e-9 * p.alpha2)
    throw std::invalid_argument("gate: spectrum alpha does not match gate parameters");
  const int d = p.pair_count();
  if (d > spec.size()) throw std::invalid_argument("gate: spectrum holds fewer pairs than requested");
  return CatBasis(spec, d);
}

inline Mat kerr_static(const CatBasis& b, double K) { return (K / b.K()) * b.hamiltonian(); }

/// Drive envelope for the Z / ZZ gates. `gaps` are the eigen-gaps of the
/// transitions to suppress; the drive couples with exp(+i Delta t), so the
/// hole construction is applied at -Delta.
inline PulseShape drive_pulse(Scheme scheme, int smooth, double T, double area, const std::vector<double>& gaps,
                              double c0, double delta1) {
  switch (scheme) {
    case Scheme::Hard:
    case Scheme::Dissipative: return hard_pulse(T, area);
    case Scheme::Gaussian: return gaussian_pulse(smooth, T, area);
    case Scheme::DBC: {
      PulseShape base = gaussian_pulse(smooth, T, area);
      GapSet holes;
      for (double g : gaps) holes.gaps.push_back(-g);
      PulseShape corrected = hole_corrected_pulse(base, holes);
      const double cubic = c0 / (delta1 * delta1);
      auto eval = [corrected, base, cubic](double t, int order) -> cplx {
        if (order != 0) throw std::out_of_range("DBC drive: derivatives not tabulated");
        const cplx b = base(t);
        return corrected(t) + cubic * b * b * b;
      };
      return PulseShape("dbc", T, 0, 0, eval);
    }
  }
  throw std::invalid_argument("drive_pulse: unknown scheme");
}

}  // namespace detail

/// Drive envelope of the Z (linear drive) or ZZ (two-mode squeezing) gate.
/// DBC holes sit at Delta_1, Delta_2 (Z) and Delta_1, 2 Delta_1, Delta_1 + Delta_2 (ZZ).
inline PulseShape drive_envelope(const GateParams& params, const KerrCatSpectrum& spec) {
  const double scale = params.K / spec.K;
  const double d1 = scale * spec.gap(1);
  const double d2 = scale * spec.gap(2);
  switch (params.kind) {
    case GateKind::Z:
      return detail::drive_pulse(params.scheme, 2, params.T, params.theta / (4.0 * params.alpha()), {d1, d2},
                                 params.c0.value_or(kZC0), d1);
    case GateKind::ZZ:
      return detail::drive_pulse(params.scheme, 3, params.T, params.theta / (4.0 * params.alpha2),
                                 {d1, 2.0 * d1, d1 + d2}, params.c0.value_or(kZZC0), d1);
    case GateKind::CX: break;
  }
  throw std::invalid_argument("drive_envelope: the CX gate has no drive envelope");
}

/// Z rotation exp(-i theta Z / 2) by a linear drive on a single Kerr cat
/// (or, for the dissipative scheme, on a two-photon-stabilized cat).
inline GateModel z_rotation_gate(const GateParams& params, const KerrCatSpectrum& spec) {
  params.validate();
  if (params.kind != GateKind::Z) throw std::invalid_argument("z_rotation_gate: wrong gate kind");
  GateModel m;
  m.params = params;
  CatBasis b = detail::basis_for(spec, params);
  m.bases = {b};
  PulseShape omega = drive_envelope(params, spec);

  const Mat a = b.a();
  if (params.scheme == Scheme::Dissipative) {
    m.static_h = Mat::Zero(b.dim(), b.dim());
    const Mat l = std::sqrt(params.kappa2) * (b.monomial(0, 2) - params.alpha2 * identity(b.dim()));
    m.jumps.push_back({"two_photon", [l](double) { return l; }});
  } else {
    m.static_h = detail::kerr_static(b, params.K);
  }
  const double T = params.T;
  m.terms.push_back({"drive", a.adjoint(), [omega, T](double t) { return (t < 0 || t > T) ? cplx(0) : omega(t); }});
  m.terms.push_back(
      {"drive_conj", a, [omega, T](double t) { return (t < 0 || t > T) ? cplx(0) : std::conj(omega(t)); }});
  m.loss.push_back({"loss", [a](double) { return a; }});

  Mat target = Mat::Zero(2, 2);
  target(0, 0) = std::exp(-kI * params.theta / 2.0);
  target(1, 1) = std::exp(kI * params.theta / 2.0);
  m.target = target;
  return m;
}

/// ZZ rotation exp(-i theta Z_c Z_t / 2) by two-mode squeezing.
inline GateModel zz_rotation_gate(const GateParams& params, const KerrCatSpectrum& spec) {
  params.validate();
  if (params.kind != GateKind::ZZ) throw std::invalid_argument("zz_rotation_gate: wrong gate kind");
  GateModel m;
  m.params = params;
  CatBasis b = detail::basis_for(spec, params);
  m.bases = {b, b};
  PulseShape omega = drive_envelope(params, spec);

  const Mat id = identity(b.dim());
  const Mat h1 = detail::kerr_static(b, params.K);
  m.static_h = kron(h1, id) + kron(id, h1);
  const Mat a = b.a();
  const Mat pair = kron(a, a);
  const double T = params.T;
  m.terms.push_back(
      {"squeeze", pair.adjoint(), [omega, T](double t) { return (t < 0 || t > T) ? cplx(0) : omega(t); }});
  m.terms.push_back(
      {"squeeze_conj", pair, [omega, T](double t) { return (t < 0 || t > T) ? cplx(0) : std::conj(omega(t)); }});
  const Mat ac = kron(a, id), at = kron(id, a);
  m.loss.push_back({"loss_c", [ac](double) { return ac; }});
  m.loss.push_back({"loss_t", [at](double) { return at; }});

  const Mat zz = kron(detail::pauli_z(), detail::pauli_z());
  Mat target = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) target(i, i) = std::exp(-kI * params.theta / 2.0 * zz(i, i).real());
  m.target = target;
  return m;
}

struct CxDbcConstants {
  double lambda1 = 0.0;
  double delta1 = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

inline CxDbcConstants cx_dbc_constants(const KerrCatSpectrum& spec, double K) {
  CxDbcConstants c;
  const double alpha = spec.space.alpha;
  c.lambda1 = reduced_couplings(spec).lambda1;
  c.delta1 = (K / spec.K) * spec.gap(1);
  c.c1 = 0.25 * K * alpha * (alpha - 0.5 * c.lambda1) * c.lambda1;
  c.c2 = K * alpha * c.lambda1 / 8.0;
  c.c3 = K * alpha * c.lambda1 / 8.0;
  return c;
}

/// Time-dependent 00 -> 11 gap of the CX gate.
inline double cx_gap11(double delta1, double K, double alpha2, double lambda1, double phi) {
  return 2.0 * delta1 - 0.5 * K * alpha2 * (1.0 - 3.0 * lambda1 * lambda1) * (1.0 - std::cos(2.0 * phi));
}

/// Residual control Z rotation generated by the DBC corrections.
inline double cx_delta_theta(const CxSchedule& s, const CxDbcConstants& c, double K, double alpha2) {
  const double alpha = std::sqrt(alpha2);
  auto integrand = [&](double t) -> cplx {
    const double phi = s.phi(t);
    return s.phidot(t) * (1.0 - std::cos(2.0 * phi)) / cx_gap11(c.delta1, K, alpha2, c.lambda1, phi);
  };
  const double integral = integrate_adaptive(integrand, 0.0, s.T, 1e-12).value.real();
  return 0.25 * K * alpha2 * c.lambda1 * (3.0 * alpha - c.lambda1) * integral;
}

/// U(t) mapping lab states into the CX simulation frame.
inline Mat adiabatic_frame_map(const AdiabaticFrame& frame, const CxSchedule& s, double t) {
  return frame.unitary(s.phi(t));
}

namespace detail {

/// Ideal CX with control |1_L> (the -alpha well) flipping the target, including
/// the exp(-i pi alpha^2) phase of the conditional rotation and the
/// compensating control rotation exp(+i dtheta Z_c).
inline Mat cx_target(double alpha2, double dtheta) {
  Mat cx = Mat::Zero(4, 4);
  cx(0, 0) = cx(1, 1) = 1.0;
  const cplx ph = std::exp(-kI * std::numbers::pi * alpha2);
  cx(2, 3) = cx(3, 2) = ph;
  Mat zc = Mat::Zero(4, 4);
  zc(0, 0) = zc(1, 1) = std::exp(kI * dtheta);
  zc(2, 2) = zc(3, 3) = std::exp(-kI * dtheta);
  return zc * cx;
}

}  // namespace detail

/// CX gate simulated in the adiabatic frame of the controlled target rotation.
inline GateModel cx_gate(const GateParams& params, const KerrCatSpectrum& spec) {
  params.validate();
  if (params.kind != GateKind::CX) throw std::invalid_argument("cx_gate: wrong gate kind");
  GateModel m;
  m.params = params;
  CatBasis b = detail::basis_for(spec, params);
  m.bases = {b, b};
  auto frame = std::make_shared<AdiabaticFrame>(b, b);
  CxSchedule sched = cx_schedule(params.scheme, params.T);

  const int n = b.dim();
  const double alpha = params.alpha(), al2 = params.alpha2, K = params.K;
  const Mat id = identity(n);
  const Mat ac = b.a();
  const Mat acd = ac.adjoint();
  const ModeSpace& fs = b.space();
  const Mat af = annihilation_operator(fs);
  const Mat idf = identity(fs.fock_dim);
  // Control-mode operators of the conditional well (alpha - a_c)/(2 alpha).
  const Mat mw = b.project((alpha * idf - af) / (2.0 * alpha));
  const Mat mwd = mw.adjoint();
  const Mat mwdmw = b.project((alpha * idf - af.adjoint()) * (alpha * idf - af)) / (4.0 * al2);
  const Mat nshift = b.monomial(1, 1) - al2 * id;
  const Mat ad2 = b.monomial(2, 0), a2 = b.monomial(0, 2);
  auto phi = sched.phi;
  auto phidot = sched.phidot;
  const double T = params.T;
  auto inside = [T](double t) { return t >= 0.0 && t <= T; };

  auto ham = std::make_shared<FramedOperator>();
  const bool dissipative = params.scheme == Scheme::Dissipative;
  if (!dissipative) {
    // Control Kerr and the expanded target Kerr
    // -K [a^dag^2 - al2 C^dag][a^2 - al2 C],  C = 1 + (e^{2i phi} - 1) M.
    ham->add("kerr_c", [](double) { return cplx(1.0); }, (K / b.K()) * b.hamiltonian(), 0, id);
    ham->add("kerr_t_quartic", [K](double) { return cplx(-K); }, id, 0, b.monomial(2, 2));
    ham->add("kerr_t_ad2", [K, al2](double) { return cplx(K * al2); }, id, -2, ad2);
    ham->add("kerr_t_ad2_cond", [K, al2, phi](double t) { return K * al2 * (std::exp(2.0 * kI * phi(t)) - 1.0); },
             mw, -2, ad2);
    ham->add("kerr_t_a2", [K, al2](double) { return cplx(K * al2); }, id, 2, a2);
    ham->add("kerr_t_a2_cond", [K, al2, phi](double t) { return K * al2 * (std::exp(-2.0 * kI * phi(t)) - 1.0); },
             mwd, 2, a2);
    ham->add("kerr_t_const", [K, al2](double) { return cplx(-K * al2 * al2); }, id, 0, id);
    ham->add("kerr_t_m", [K, al2, phi](double t) { return -K * al2 * al2 * (std::exp(2.0 * kI * phi(t)) - 1.0); },
             mw, 0, id);
    ham->add("kerr_t_md", [K, al2, phi](double t) { return -K * al2 * al2 * (std::exp(-2.0 * kI * phi(t)) - 1.0); },
             mwd, 0, id);
    ham->add("kerr_t_mdm", [K, al2, phi](double t) { return cplx(-K * al2 * al2 * (2.0 - 2.0 * std::cos(2.0 * phi(t)))); },
             mwdmw, 0, id);
  }
  // Feed-forward compensation -phidot/2 (2 alpha - a_c - a_c^dag)/(2 alpha) (x) (n_t - al2).
  const Mat gcp = (2.0 * alpha * id - ac - acd) / (2.0 * alpha);
  ham->add("compensation", [phidot, inside](double t) { return inside(t) ? cplx(-0.5 * phidot(t)) : cplx(0); }, gcp,
           0, nshift);

  if (params.scheme == Scheme::DBC) {
    const CxDbcConstants c = cx_dbc_constants(spec, K);
    auto phiddot = sched.phiddot;
    const double lam = c.lambda1, d1 = c.delta1;
    const double curv = K * al2 * (1.0 - 3.0 * lam * lam);
    auto gap = [=](double t) { return cx_gap11(d1, K, al2, lam, phi(t)); };
    auto ratio = [=](double t) { return inside(t) ? phidot(t) / gap(t) : 0.0; };
    auto ratio_dot = [=](double t) {
      if (!inside(t)) return 0.0;
      const double g = gap(t);
      const double dg = -curv * std::sin(2.0 * phi(t)) * phidot(t);
      return phiddot(t) / g - phidot(t) * dg / (g * g);
    };
    ham->add("dbc0", [ratio_dot](double t) { return kI * ratio_dot(t); }, (ac - acd) / (4.0 * alpha), 0, nshift);
    // Enters with -c1: this is the sign that cancels the first-order
    // Z_c sigma^x term and makes the residual rotation equal delta_theta.
    const double c1 = c.c1, c2 = c.c2, c3 = c.c3;
    ham->add("dbc1", [=](double t) { return cplx(-c1 * ratio(t) * (1.0 - std::cos(2.0 * phi(t)))); }, ac + acd, 0, id);
    ham->add("dbc2", [=](double t) { return kI * c2 * ratio(t) * std::sin(2.0 * phi(t)); },
             b.monomial(0, 2) - b.monomial(2, 0), 0, id);
    ham->add("dbc3", [=](double t) { return c3 * ratio(t) * (std::exp(2.0 * kI * phi(t)) - 1.0); }, id, -2, ad2);
    ham->add("dbc3_conj", [=](double t) { return c3 * ratio(t) * (std::exp(-2.0 * kI * phi(t)) - 1.0); }, id, 2, a2);
    m.delta_theta = cx_delta_theta(sched, c, K, al2);
  }

  m.static_h = Mat::Zero(n * n, n * n);
  m.dynamic_names = ham->names();
  m.dynamic_names.push_back("frame_generator");
  m.dynamic_h = [frame, ham, phi, phidot, inside](double t, Mat& out) {
    const double ph = phi(t);
    const Mat r = frame->rotation(ph);
    ham->accumulate(*frame, t, ph, r, out);
    if (inside(t)) frame->add_generator(phidot(t), out);
  };

  auto framed = [frame, phi](std::shared_ptr<FramedOperator> op) {
    return [frame, phi, op](double t) {
      const int dim = frame->dim();
      Mat out = Mat::Zero(dim, dim);
      const double ph = phi(t);
      op->accumulate(*frame, t, ph, frame->rotation(ph), out);
      return out;
    };
  };
  auto one = [](double) { return cplx(1.0); };
  auto loss_c = std::make_shared<FramedOperator>();
  loss_c->add("a_c", one, ac, 0, id);
  auto loss_t = std::make_shared<FramedOperator>();
  loss_t->add("a_t", one, id, 1, ac);
  m.loss.push_back({"loss_c", framed(loss_c)});
  m.loss.push_back({"loss_t", framed(loss_t)});

  if (dissipative) {
    const double s2 = std::sqrt(params.kappa2);
    auto jc = std::make_shared<FramedOperator>();
    jc->add("a_c^2 - al2", [s2](double) { return cplx(s2); }, b.monomial(0, 2) - al2 * id, 0, id);
    // a_t^2 - al2 [e^{2i phi} M + (1 - M)]
    auto jt = std::make_shared<FramedOperator>();
    jt->add("a_t^2", [s2](double) { return cplx(s2); }, id, 2, a2);
    jt->add("cond_well", [s2, al2, phi](double t) { return -s2 * al2 * (std::exp(2.0 * kI * phi(t)) - 1.0); }, mw, 0,
            id);
    jt->add("well", [s2, al2](double) { return cplx(-s2 * al2); }, id, 0, id);
    m.jumps.push_back({"two_photon_c", framed(jc)});
    m.jumps.push_back({"two_photon_t", framed(jt)});
  }

  m.frame = [frame, phi](double t) { return frame->unitary(phi(t)); };
  m.target = detail::cx_target(al2, m.delta_theta);
  return m;
}

inline GateModel build_gate(const GateParams& params, const KerrCatSpectrum& spec) {
  switch (params.kind) {
    case GateKind::Z: return z_rotation_gate(params, spec);
    case GateKind::ZZ: return zz_rotation_gate(params, spec);
    case GateKind::CX: return cx_gate(params, spec);
  }
  throw std::invalid_argument("build_gate: unknown gate kind");
}

/// Dissipative baseline for the Z rotation or CX gate.
inline GateModel dissipative_gate(GateKind kind, GateParams params, const KerrCatSpectrum& spec) {
  params.kind = kind;
  params.scheme = Scheme::Dissipative;
  return build_gate(params, spec);
}

/// Self-describing record sufficient to rebuild the model exactly.
inline nlohmann::json gate_to_json(const GateModel& m) {
  nlohmann::json j;
  j["schema"] = "catgates.gate/1";
  j["params"] = to_json(m.params);
  j["fock_dim"] = m.bases.front().space().fock_dim;
  j["terms"] = m.term_names();
  j["delta_theta"] = m.delta_theta;
  nlohmann::json jumps = nlohmann::json::array();
  for (const auto& jp : m.jumps) jumps.push_back(jp.name);
  j["jumps"] = jumps;
  return j;
}

inline GateModel gate_from_json(const nlohmann::json& j) {
  if (j.at("schema") != "catgates.gate/1") throw std::invalid_argument("gate_from_json: unknown schema");
  GateParams p = gate_params_from_json(j.at("params"));
  ModeSpace space = ModeSpace::for_alpha2(p.alpha2, j.at("fock_dim").get<int>());
  KerrCatSpectrum spec = diagonalize_kerr_cat(space, 1.0, std::max(3, p.pair_count()), 1e-6);
  return build_gate(p, spec);
}

}  // namespace catgates
