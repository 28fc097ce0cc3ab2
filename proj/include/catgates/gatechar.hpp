#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "catgates/control.hpp"
#include "catgates/dynamics.hpp"
#include "catgates/linalg.hpp"

namespace catgates {

struct SimulationOptions {
  int steps = 0;            // 0 selects auto_steps
  double courant = 0.05;    // used when steps == 0
  double kappa2_strong = 50.0;
};

struct GateErrorReport {
  GateParams params;
  double kappa1 = 0.0;
  double p_z = 0.0;
  double p_x = 0.0;
  double p_z_na = std::numeric_limits<double>::quiet_NaN();
  double p_x_na = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
  double dt = 0.0;
  double delta_theta = 0.0;

  /// p_z / p_x; infinite when p_x is below the 1e-14 numerical floor.
  double bias() const {
    if (p_x < 1e-14) return std::numeric_limits<double>::infinity();
    return p_z / p_x;
  }
};

inline nlohmann::json to_json(const GateErrorReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return "inf";
    return v;
  };
  return {{"gate", to_json(r.params)}, {"kappa1", r.kappa1},   {"p_z", r.p_z},
          {"p_x", r.p_x},              {"p_z_na", num(r.p_z_na)}, {"p_x_na", num(r.p_x_na)},
          {"bias", num(r.bias())},     {"steps", r.steps},     {"dt", r.dt},
          {"delta_theta", r.delta_theta}};
}

/// Runs logical inputs through a gate model, maps back to the lab frame and
/// applies the code projection.
class GateRunner {
 public:
  GateRunner(GateModel model, SimulationOptions opts = {})
      : model_(std::move(model)), opts_(opts), projection_(model_.bases.front(), opts.kappa2_strong) {
    w_ = model_.logical_isometry();
  }

  const GateModel& model() const { return model_; }
  const Mat& isometry() const { return w_; }
  int logical_dim() const { return static_cast<int>(w_.cols()); }

  int steps_for(const NoiseSpec& noise) const {
    return opts_.steps > 0 ? opts_.steps : auto_steps(model_, noise, opts_.courant);
  }

  /// Projected lab-frame density matrix after the gate for a logical input.
  Mat run(const Vec& logical_in, const NoiseSpec& noise, int steps) const {
    const Vec psi0 = w_ * logical_in;
    Mat rho;
    if (noise.noiseless() && model_.jumps.empty()) {
      const Vec psi = propagate_unitary(model_, psi0, steps);
      rho = projector(psi);
    } else {
      rho = propagate_lindblad(model_, projector(psi0), noise, steps);
    }
    if (model_.frame) {
      const Mat u = model_.frame(model_.duration());
      rho = u.adjoint() * rho * u;
    }
    return projection_(rho, model_.modes());
  }

  /// Infidelity against the ideal image of the logical input.
  double infidelity(const Vec& logical_in, const NoiseSpec& noise, int steps) const {
    const Mat rho = run(logical_in, noise, steps);
    const Vec ideal = w_ * (model_.target * logical_in);
    return std::max(0.0, 1.0 - fidelity(rho, ideal));
  }

  /// Logical-subspace density matrix W^dag rho W.
  Mat logical_output(const Vec& logical_in, const NoiseSpec& noise, int steps) const {
    return w_.adjoint() * run(logical_in, noise, steps) * w_;
  }

 private:
  GateModel model_;
  SimulationOptions opts_;
  CodeProjection projection_;
  Mat w_;
};

namespace detail {

inline Vec logical_product(const Vec& single, int modes) {
  Vec v = single;
  for (int k = 1; k < modes; ++k) v = kron(v, single);
  return v;
}

inline Vec qubit_state(int which) {
  const double r = 1.0 / std::sqrt(2.0);
  Vec v(2);
  switch (which) {
    case 0: v << 1.0, 0.0; break;
    case 1: v << 0.0, 1.0; break;
    case 2: v << r, r; break;
    default: v << r, kI * r; break;
  }
  return v;
}

/// Runs `fn(steps)`; with the automatic step policy, a conservation failure
/// doubles the step count (up to `retries` times) before giving up.
template <class F>
auto with_step_refinement(const GateRunner& runner, const SimulationOptions& opts, const NoiseSpec& noise, F&& fn,
                          int retries = 3) {
  int steps = runner.steps_for(noise);
  for (int attempt = 0;; ++attempt) {
    try {
      return fn(steps);
    } catch (const NumericalError&) {
      if (opts.steps > 0 || attempt >= retries) throw;
      steps *= 2;
    }
  }
}

}  // namespace detail

/// p_z from |+...+>, p_x from |0...0>, after the code projection; the CX
/// over-rotation compensation is part of the model's target.
inline GateErrorReport extract_error_probs(const GateModel& model, const NoiseSpec& noise,
                                           const SimulationOptions& opts = {}, bool with_noiseless = false) {
  GateRunner runner(model, opts);
  GateErrorReport r;
  r.params = model.params;
  r.kappa1 = noise.kappa1;
  r.delta_theta = model.delta_theta;
  const int m = model.modes();
  const Vec plus = detail::logical_product(detail::qubit_state(2), m);
  const Vec zero = detail::logical_product(detail::qubit_state(0), m);
  auto measure = [&](const NoiseSpec& nz) {
    return detail::with_step_refinement(runner, opts, nz, [&](int steps) {
      return std::array<double, 3>{runner.infidelity(plus, nz, steps), runner.infidelity(zero, nz, steps),
                                   static_cast<double>(steps)};
    });
  };
  const auto main = measure(noise);
  r.p_z = main[0];
  r.p_x = main[1];
  r.steps = static_cast<int>(main[2]);
  r.dt = model.duration() / r.steps;
  if (noise.noiseless()) {
    r.p_z_na = r.p_z;
    r.p_x_na = r.p_x;
  } else if (with_noiseless) {
    const auto na = measure(NoiseSpec{});
    r.p_z_na = na[0];
    r.p_x_na = na[1];
  }
  return r;
}

/// Pauli-basis label such as "ZI" for index m (first mode most significant).
inline std::string pauli_label(int index, int modes) {
  static const char names[4] = {'I', 'X', 'Y', 'Z'};
  std::string s(modes, 'I');
  for (int k = modes - 1; k >= 0; --k) {
    s[k] = names[index % 4];
    index /= 4;
  }
  return s;
}

inline Mat pauli_matrix(int index, int modes) {
  auto single = [](int p) {
    Mat m = Mat::Zero(2, 2);
    switch (p) {
      case 0: m(0, 0) = m(1, 1) = 1.0; break;
      case 1: m(0, 1) = m(1, 0) = 1.0; break;
      case 2: m(0, 1) = -kI; m(1, 0) = kI; break;
      default: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    }
    return m;
  };
  std::vector<int> digits(modes);
  for (int k = modes - 1; k >= 0; --k) {
    digits[k] = index % 4;
    index /= 4;
  }
  Mat out = single(digits[0]);
  for (int k = 1; k < modes; ++k) out = kron(out, single(digits[k]));
  return out;
}

struct ChiMatrix {
  int modes = 1;
  Mat chi;  // indexed by Pauli labels, relative to the ideal gate image
  double condition_number = 0.0;

  double diagonal(const std::string& label) const {
    for (int i = 0; i < chi.rows(); ++i)
      if (pauli_label(i, modes) == label) return chi(i, i).real();
    throw std::invalid_argument("ChiMatrix: unknown label " + label);
  }

  /// Total weight on Z-type errors (Z-only Paulis other than the identity).
  double z_weight() const {
    double s = 0.0;
    for (int i = 1; i < chi.rows(); ++i) {
      const std::string l = pauli_label(i, modes);
      if (l.find_first_not_of("IZ") == std::string::npos) s += chi(i, i).real();
    }
    return s;
  }

  /// Remaining diagonal error weight.
  double x_weight() const {
    double s = 0.0;
    for (int i = 1; i < chi.rows(); ++i) {
      const std::string l = pauli_label(i, modes);
      if (l.find_first_not_of("IZ") != std::string::npos) s += chi(i, i).real();
    }
    return s;
  }
};

/// Fits chi from logical input/output pairs: E(rho) = sum chi_mn P_m G rho G^dag P_n^dag.
inline ChiMatrix fit_chi(const std::vector<Mat>& inputs, const std::vector<Mat>& outputs, const Mat& gate,
                         int modes, double ridge = 1e-12) {
  if (inputs.size() != outputs.size() || inputs.empty()) throw std::invalid_argument("fit_chi: mismatched data");
  const int d = 1 << modes;
  const int np = d * d;
  std::vector<Mat> paulis;
  for (int i = 0; i < np; ++i) paulis.push_back(pauli_matrix(i, modes));
  const Eigen::Index rows = static_cast<Eigen::Index>(inputs.size()) * d * d;
  Mat a = Mat::Zero(rows, np * np);
  Vec b(rows);
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Mat ideal = gate * inputs[k] * gate.adjoint();
    for (int m = 0; m < np; ++m) {
      const Mat left = paulis[m] * ideal;
      for (int n = 0; n < np; ++n) {
        const Mat term = left * paulis[n].adjoint();
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) a(static_cast<Eigen::Index>(k) * d * d + r * d + c, m * np + n) = term(r, c);
      }
    }
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) b(static_cast<Eigen::Index>(k) * d * d + r * d + c) = outputs[k](r, c);
  }
  Eigen::JacobiSVD<Mat> svd(a);
  const RVec sv = svd.singularValues();
  ChiMatrix out;
  out.modes = modes;
  out.condition_number = sv(0) / sv(sv.size() - 1);
  const Mat normal = a.adjoint() * a + ridge * identity(np * np);
  const Vec x = normal.ldlt().solve(a.adjoint() * b);
  out.chi = Mat(np, np);
  for (int m = 0; m < np; ++m)
    for (int n = 0; n < np; ++n) out.chi(m, n) = x(m * np + n);
  return out;
}

/// Process tomography over the products of {|0>, |1>, |+>, |+i>} per mode.
inline ChiMatrix process_tomography(const GateModel& model, const NoiseSpec& noise,
                                    const SimulationOptions& opts = {}) {
  GateRunner runner(model, opts);
  const int m = model.modes();
  int count = 1;
  for (int k = 0; k < m; ++k) count *= 4;
  std::vector<Vec> kets;
  std::vector<Mat> ins, outs;
  for (int idx = 0; idx < count; ++idx) {
    Vec v = Vec::Ones(1);
    int rest = idx;
    std::vector<int> digits(m);
    for (int k = m - 1; k >= 0; --k) {
      digits[k] = rest % 4;
      rest /= 4;
    }
    for (int k = 0; k < m; ++k) v = kron(v, detail::qubit_state(digits[k]));
    kets.push_back(v);
    ins.push_back(projector(v));
  }
  detail::with_step_refinement(runner, opts, noise, [&](int steps) {
    outs.clear();
    for (const Vec& v : kets) outs.push_back(runner.logical_output(v, noise, steps));
    return 0;
  });
  return fit_chi(ins, outs, model.target, m);
}

/// Total error probabilities from the non-adiabatic parts and the loss term.
inline std::pair<double, double> error_model_eval(double p_z_na, double p_x_na, double kappa1, double alpha2,
                                                  double T, double beta) {
  if (p_z_na < 0 || p_x_na < 0 || kappa1 < 0 || alpha2 < 0 || T < 0 || beta < 0)
    throw std::invalid_argument("error_model_eval: inputs must be nonnegative");
  return {p_z_na + beta * kappa1 * alpha2 * T, p_x_na};
}

/// Loss multiplier: 1 for single-mode gates, 2 for two-mode gates.
inline double loss_beta(GateKind k) { return k == GateKind::Z ? 1.0 : 2.0; }

struct SweepPoint {
  double kappa1 = 0.0;
  double T = 0.0;
  double p_z = 0.0;
  double p_x = 0.0;
};

struct SweepOptimum {
  double kappa1 = 0.0;
  double T_star = 0.0;
  double p_z_star = 0.0;
  bool on_boundary = false;
  bool unimodal = true;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<SweepOptimum> optima;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double prefactor = std::numeric_limits<double>::quiet_NaN();
};

/// Least-squares slope and intercept of log y against log x.
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw std::invalid_argument("loglog_fit: nonpositive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) throw std::invalid_argument("loglog_fit: degenerate abscissae");
  const double slope = (n * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / n};
}

/// Minimum of p(T) on a grid, refined by a parabola through the three points
/// around the grid minimum in (log T, log p).
inline SweepOptimum locate_minimum(const std::vector<double>& T, const std::vector<double>& p) {
  if (T.size() != p.size() || T.size() < 3) throw std::invalid_argument("locate_minimum: need >= 3 points");
  SweepOptimum o;
  size_t best = 0;
  for (size_t i = 1; i < p.size(); ++i)
    if (p[i] < p[best]) best = i;
  o.T_star = T[best];
  o.p_z_star = p[best];
  int turns = 0;
  for (size_t i = 1; i + 1 < p.size(); ++i)
    if ((p[i] - p[i - 1]) * (p[i + 1] - p[i]) < 0) ++turns;
  o.unimodal = turns <= 1;
  if (best == 0 || best + 1 == p.size()) {
    o.on_boundary = true;
    return o;
  }
  const double x0 = std::log(T[best - 1]), x1 = std::log(T[best]), x2 = std::log(T[best + 1]);
  const double y0 = std::log(p[best - 1]), y1 = std::log(p[best]), y2 = std::log(p[best + 1]);
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double curv = (d12 - d01) / (x2 - x0);
  if (curv > 0) {
    // Vertex of the Newton-form parabola y0 + d01 (x - x0) + curv (x - x0)(x - x1).
    const double xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    if (xv > x0 && xv < x2) {
      const double yv = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
      o.T_star = std::exp(xv);
      o.p_z_star = std::exp(yv);
    }
  }
  return o;
}

/// Noiseless error curves p_z^NA(T), p_x^NA(T) with log-log interpolation;
/// outside the sampled range the end segments are extended.
class GateCurve {
 public:
  GateCurve() = default;
  GateCurve(Scheme scheme, std::vector<double> T, std::vector<double> p_z, std::vector<double> p_x)
      : scheme_(scheme), T_(std::move(T)), pz_(std::move(p_z)), px_(std::move(p_x)) {
    if (T_.size() < 2 || pz_.size() != T_.size() || px_.size() != T_.size())
      throw std::invalid_argument("GateCurve: need >= 2 matching samples");
    for (size_t i = 0; i < T_.size(); ++i) {
      if (i > 0 && !(T_[i] > T_[i - 1])) throw std::invalid_argument("GateCurve: T must increase");
      pz_[i] = std::max(pz_[i], 1e-14);
      px_[i] = std::max(px_[i], 1e-14);
    }
  }

  Scheme scheme() const { return scheme_; }
  const std::vector<double>& times() const { return T_; }
  const std::vector<double>& p_z() const { return pz_; }
  const std::vector<double>& p_x() const { return px_; }
  double t_min() const { return T_.front(); }
  double t_max() const { return T_.back(); }

  double p_z_at(double T) const { return interp(pz_, T); }
  double p_x_at(double T) const { return interp(px_, T); }

 private:
  double interp(const std::vector<double>& y, double T) const {
    if (!(T > 0.0)) throw std::invalid_argument("GateCurve: T must be positive");
    size_t i = std::upper_bound(T_.begin(), T_.end(), T) - T_.begin();
    i = std::clamp<size_t>(i, 1, T_.size() - 1);
    const double x0 = std::log(T_[i - 1]), x1 = std::log(T_[i]);
    const double y0 = std::log(y[i - 1]), y1 = std::log(y[i]);
    return std::exp(y0 + (y1 - y0) * (std::log(T) - x0) / (x1 - x0));
  }

  Scheme scheme_ = Scheme::DBC;
  std::vector<double> T_, pz_, px_;
};

inline nlohmann::json to_json(const GateCurve& c) {
  return {{"scheme", to_string(c.scheme())}, {"T", c.times()}, {"p_z_na", c.p_z()}, {"p_x_na", c.p_x()}};
}

inline GateCurve gate_curve_from_json(const nlohmann::json& j) {
  return GateCurve(scheme_from_string(j.at("scheme")), j.at("T").get<std::vector<double>>(),
                   j.at("p_z_na").get<std::vector<double>>(), j.at("p_x_na").get<std::vector<double>>());
}

/// Log-spaced grid of `n` points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

/// Noiseless curve sampled on a grid of gate times.
inline GateCurve noiseless_curve(const GateParams& base, const KerrCatSpectrum& spec, const std::vector<double>& T,
                                 const SimulationOptions& opts = {}) {
  std::vector<double> pz, px;
  for (double t : T) {
    GateParams p = base;
    p.T = t;
    const GateErrorReport r = extract_error_probs(build_gate(p, spec), NoiseSpec{}, opts);
    pz.push_back(r.p_z);
    px.push_back(r.p_x);
  }
  return GateCurve(base.scheme, T, pz, px);
}

/// Gate time minimizing the additive error model on a curve (dense log search).
inline double model_t_star(const GateCurve& c, double kappa1, double alpha2, double beta, int samples = 2000) {
  double best_t = c.t_min(), best = std::numeric_limits<double>::infinity();
  for (double t : log_grid(c.t_min(), c.t_max(), samples)) {
    const double v = error_model_eval(c.p_z_at(t), c.p_x_at(t), kappa1, alpha2, t, beta).first;
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  return best_t;
}

/// `n` points geometrically spaced by `ratio` around `centre`.
inline std::vector<double> bracket_grid(double centre, int n = 5, double ratio = std::sqrt(2.0)) {
  if (n < 3 || !(ratio > 1.0) || !(centre > 0.0)) throw std::invalid_argument("bracket_grid: bad arguments");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = centre * std::pow(ratio, i - (n - 1) / 2.0);
  return g;
}

struct SweepConfig {
  GateParams base;                  // kind, scheme and physics; T is overwritten
  std::vector<double> kappa1;
  std::vector<double> T_grid;       // shared grid, used when grid_for is empty
  std::function<std::vector<double>(double)> grid_for;  // per-kappa1 grid
  SimulationOptions sim;
  int max_extensions = 3;           // grid extensions when the minimum sits on an edge
};

/// Full noisy simulation over (kappa1, T); for each kappa1 the minimizing T
/// is located and P*_z is fitted as a power of kappa1.
inline SweepResult sweep_gate_time(const KerrCatSpectrum& spec, const SweepConfig& cfg) {
  if (cfg.kappa1.empty()) throw std::invalid_argument("sweep_gate_time: empty kappa1 list");
  SweepResult out;
  for (double k1 : cfg.kappa1) {
    if (!(k1 >= 0.0)) throw std::invalid_argument("sweep_gate_time: kappa1 must be nonnegative");
    std::vector<double> grid = cfg.grid_for ? cfg.grid_for(k1) : cfg.T_grid;
    if (grid.size() < 5) throw std::invalid_argument("sweep_gate_time: need >= 5 grid points per kappa1");
    std::sort(grid.begin(), grid.end());
    std::map<double, SweepPoint> pts;
    auto eval = [&](double T) {
      if (pts.count(T)) return;
      GateParams p = cfg.base;
      p.T = T;
      NoiseSpec n;
      n.kappa1 = k1;
      const GateErrorReport r = extract_error_probs(build_gate(p, spec), n, cfg.sim);
      pts[T] = {k1, T, r.p_z, r.p_x};
    };
    for (double T : grid) eval(T);
    SweepOptimum opt;
    for (int ext = 0;; ++ext) {
      std::vector<double> ts, ps;
      for (const auto& [t, pt] : pts) {
        ts.push_back(t);
        ps.push_back(pt.p_z);
      }
      opt = locate_minimum(ts, ps);
      if (!opt.on_boundary || ext >= cfg.max_extensions || k1 == 0.0) break;
      // Extend one step beyond the edge holding the minimum.
      const bool low = opt.T_star <= ts.front();
      const double ratio = low ? ts[0] / ts[1] : ts.back() / ts[ts.size() - 2];
      eval(low ? ts.front() * ratio : ts.back() * ratio);
    }
    opt.kappa1 = k1;
    for (const auto& [t, pt] : pts) out.points.push_back(pt);
    out.optima.push_back(opt);
  }
  std::vector<double> xs, ys;
  for (const auto& o : out.optima)
    if (o.kappa1 > 0.0) {
      xs.push_back(o.kappa1);
      ys.push_back(o.p_z_star);
    }
  if (xs.size() >= 2) {
    const auto [slope, icpt] = loglog_fit(xs, ys);
    out.exponent = slope;
    out.prefactor = std::exp(icpt);
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& r, const GateParams& base) {
  std::ostringstream os;
  os << std::setprecision(10) << "scheme,kappa1,T,p_z,p_x\n";
  for (const auto& p : r.points) os << to_string(base.scheme) << ',' << p.kappa1 << ',' << p.T << ',' << p.p_z << ',' << p.p_x << '\n';
  return os.str();
}

}  // namespace catgates
