#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "catgates/control.hpp"
#include "catgates/hilbert.hpp"
#include "catgates/linalg.hpp"

namespace catgates {

struct NoiseSpec {
  double kappa1 = 0.0;  // single-photon loss per mode
  double kappa2 = 0.0;  // extra two-photon dissipation per mode (lab-frame models only)

  void validate() const {
    if (kappa1 < 0.0 || kappa2 < 0.0) throw std::invalid_argument("NoiseSpec: rates must be nonnegative");
  }
  bool noiseless() const { return kappa1 == 0.0 && kappa2 == 0.0; }
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional per-step hook receiving (t, state).
using KetObserver = std::function<void(double, const Vec&)>;
using RhoObserver = std::function<void(double, const Mat&)>;

namespace detail {

/// All jump operators acting at time t, rates folded in.
inline std::vector<Mat> collect_jumps(const GateModel& model, const NoiseSpec& noise, double t) {
  std::vector<Mat> out;
  for (const auto& j : model.jumps) out.push_back(j.op(t));
  if (noise.kappa1 > 0.0) {
    const double s = std::sqrt(noise.kappa1);
    for (const auto& j : model.loss) out.push_back(s * j.op(t));
  }
  if (noise.kappa2 > 0.0) {
    if (model.frame) throw std::invalid_argument("NoiseSpec.kappa2 is supported only for lab-frame models");
    const double s = std::sqrt(noise.kappa2);
    const int nm = model.modes();
    for (int k = 0; k < nm; ++k) {
      const CatBasis& b = model.bases[k];
      Mat l = b.monomial(0, 2) - b.alpha2() * identity(b.dim());
      Mat full = identity(1);
      for (int q = 0; q < nm; ++q) full = kron(full, q == k ? l : identity(model.bases[q].dim()));
      out.push_back(s * full);
    }
  }
  return out;
}

struct Generator {
  Mat heff;  // H - i/2 sum L^dag L
  std::vector<Mat> jumps;
};

inline Generator generator_at(const GateModel& model, const NoiseSpec& noise, double t) {
  Generator g;
  model.hamiltonian(t, g.heff);
  g.jumps = collect_jumps(model, noise, t);
  for (const auto& l : g.jumps) g.heff.noalias() -= (0.5 * kI) * (l.adjoint() * l);
  return g;
}

inline void lindblad_rhs(const Generator& g, const Mat& rho, Mat& out, Mat& scratch) {
  scratch.noalias() = g.heff * rho;
  out = -kI * scratch;
  out += kI * scratch.adjoint();
  for (const auto& l : g.jumps) {
    scratch.noalias() = l * rho;
    out.noalias() += scratch * l.adjoint();
  }
}

}  // namespace detail

/// Largest rate in the generator over sampled times; sets the RK4 step scale.
inline double generator_scale(const GateModel& model, const NoiseSpec& noise, int samples = 9) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = model.duration() * i / (samples - 1);
    Mat h = model.hamiltonian(t);
    RVec ev = hermitian_eigenvalues(h);
    double r = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    Mat d = Mat::Zero(h.rows(), h.cols());
    for (const auto& l : detail::collect_jumps(model, noise, t)) d += l.adjoint() * l;
    if (d.norm() > 0.0) r += 0.5 * hermitian_eigenvalues(d).maxCoeff();
    worst = std::max(worst, r);
  }
  return worst;
}

/// Step count with h * (largest rate) <= `courant`.
inline int auto_steps(const GateModel& model, const NoiseSpec& noise, double courant = 0.05, int min_steps = 200) {
  const double scale = generator_scale(model, noise);
  return std::max(min_steps, static_cast<int>(std::ceil(model.duration() * scale / courant)));
}

/// Fixed-step RK4 for i d psi/dt = H(t) psi over [0, T].
inline Vec propagate_unitary(const GateModel& model, const Vec& psi0, int steps, const KetObserver& observe = {}) {
  if (steps < 1) throw std::invalid_argument("propagate_unitary: steps must be positive");
  if (psi0.size() != model.dim()) throw std::invalid_argument("propagate_unitary: dimension mismatch");
  const double T = model.duration();
  const double dt = T / steps;
  Vec psi = psi0;
  Mat h0 = model.hamiltonian(0.0), hm, h1;
  Vec k1, k2, k3, k4;
  for (int s = 0; s < steps; ++s) {
    const double t = s * dt;
    model.hamiltonian(t + 0.5 * dt, hm);
    model.hamiltonian(t + dt, h1);
    k1.noalias() = -kI * (h0 * psi);
    k2.noalias() = -kI * (hm * (psi + 0.5 * dt * k1));
    k3.noalias() = -kI * (hm * (psi + 0.5 * dt * k2));
    k4.noalias() = -kI * (h1 * (psi + dt * k3));
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    std::swap(h0, h1);
    if (observe) observe(t + dt, psi);
  }
  const double drift = std::abs(psi.squaredNorm() - psi0.squaredNorm());
  if (drift > 1e-8)
    throw NumericalError("propagate_unitary: norm drift " + std::to_string(drift) + " exceeds 1e-8");
  return psi;
}

struct LindbladDiagnostics {
  double trace_drift = 0.0;
  double min_eigenvalue = 0.0;
  double hermiticity = 0.0;
};

/// Fixed-step RK4 on the master equation with Hermitian symmetrization after
/// every step. Throws on trace drift above 1e-8 or eigenvalues below -1e-7.
inline Mat propagate_lindblad(const GateModel& model, const Mat& rho0, const NoiseSpec& noise, int steps,
                              LindbladDiagnostics* diag = nullptr, const RhoObserver& observe = {}) {
  noise.validate();
  if (steps < 1) throw std::invalid_argument("propagate_lindblad: steps must be positive");
  if (rho0.rows() != model.dim() || rho0.cols() != model.dim())
    throw std::invalid_argument("propagate_lindblad: dimension mismatch");
  const double T = model.duration();
  const double dt = T / steps;
  const cplx tr0 = rho0.trace();
  Mat rho = rho0;
  detail::Generator g0 = detail::generator_at(model, noise, 0.0), gm, g1;
  const Eigen::Index n = rho.rows();
  Mat k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n), scratch(n, n);
  for (int s = 0; s < steps; ++s) {
    const double t = s * dt;
    gm = detail::generator_at(model, noise, t + 0.5 * dt);
    g1 = detail::generator_at(model, noise, t + dt);
    detail::lindblad_rhs(g0, rho, k1, scratch);
    tmp = rho + (0.5 * dt) * k1;
    detail::lindblad_rhs(gm, tmp, k2, scratch);
    tmp = rho + (0.5 * dt) * k2;
    detail::lindblad_rhs(gm, tmp, k3, scratch);
    tmp = rho + dt * k3;
    detail::lindblad_rhs(g1, tmp, k4, scratch);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = hermitian_part(rho);
    std::swap(g0, g1);
    if (observe) observe(t + dt, rho);
  }
  LindbladDiagnostics d;
  d.trace_drift = std::abs(rho.trace() - tr0);
  d.min_eigenvalue = min_eigenvalue(rho);
  d.hermiticity = (rho - rho.adjoint()).norm();
  if (diag) *diag = d;
  if (d.trace_drift > 1e-8)
    throw NumericalError("propagate_lindblad: trace drift " + std::to_string(d.trace_drift) + " exceeds 1e-8");
  if (d.min_eigenvalue < -1e-7)
    throw NumericalError("propagate_lindblad: positivity violated (min eigenvalue " +
                         std::to_string(d.min_eigenvalue) + ")");
  return rho;
}

/// Row-major vectorized Lindblad superoperator for the given jumps.
inline Mat lindblad_superoperator(const std::vector<Mat>& jumps, const Mat& h = Mat()) {
  if (jumps.empty() && h.size() == 0) throw std::invalid_argument("lindblad_superoperator: empty generator");
  const Eigen::Index n = jumps.empty() ? h.rows() : jumps.front().rows();
  const Mat id = identity(n);
  Mat s = Mat::Zero(n * n, n * n);
  if (h.size() > 0) s += -kI * kron(h, id) + kI * kron(id, h.transpose());
  for (const auto& l : jumps) {
    const Mat ldl = l.adjoint() * l;
    s += kron(l, l.conjugate()) - 0.5 * kron(ldl, id) - 0.5 * kron(id, ldl.transpose());
  }
  return s;
}

/// Strong two-photon dissipation applied independently to every mode, used
/// to return leaked population to the cat manifold at the end of a gate.
class CodeProjection {
 public:
  CodeProjection(const CatBasis& basis, double kappa2_strong = 50.0, double duration = 0.0)
      : n_(basis.dim()), kappa2_(kappa2_strong) {
    if (!(kappa2_strong > 0.0)) throw std::invalid_argument("CodeProjection: rate must be positive");
    duration_ = duration > 0.0 ? duration : 10.0 / (kappa2_strong * basis.alpha2());
    const Mat l = std::sqrt(kappa2_strong) * (basis.monomial(0, 2) - basis.alpha2() * identity(n_));
    channel_ = expm(lindblad_superoperator({l}) * duration_);
  }

  int mode_dim() const { return n_; }
  double duration() const { return duration_; }
  const Mat& channel() const { return channel_; }

  /// One application of the channel on mode `k` of an `modes`-mode state.
  Mat apply_once(const Mat& rho, int k, int modes) const {
    const Eigen::Index inner = ipow(n_, modes - 1 - k);
    const Eigen::Index outer = ipow(n_, k);
    const Eigen::Index n2 = static_cast<Eigen::Index>(n_) * n_;
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    Vec v(n2), w(n2);
    auto index = [&](Eigen::Index o, Eigen::Index e, Eigen::Index i) { return (o * n_ + e) * inner + i; };
    for (Eigen::Index o = 0; o < outer; ++o)
      for (Eigen::Index op = 0; op < outer; ++op)
        for (Eigen::Index i = 0; i < inner; ++i)
          for (Eigen::Index ip = 0; ip < inner; ++ip) {
            for (int e = 0; e < n_; ++e)
              for (int ep = 0; ep < n_; ++ep) v(e * n_ + ep) = rho(index(o, e, i), index(op, ep, ip));
            w.noalias() = channel_ * v;
            for (int e = 0; e < n_; ++e)
              for (int ep = 0; ep < n_; ++ep) out(index(o, e, i), index(op, ep, ip)) = w(e * n_ + ep);
          }
    return out;
  }

  /// Largest per-mode population outside the ground pair.
  double leakage(const Mat& rho, int modes) const {
    double worst = 0.0;
    for (int k = 0; k < modes; ++k) {
      const Mat r = reduced(rho, k, modes);
      worst = std::max(worst, (r.trace() - r.topLeftCorner(2, 2).trace()).real());
    }
    return worst;
  }

  /// Reduced density matrix of mode k.
  Mat reduced(const Mat& rho, int k, int modes) const {
    const Eigen::Index inner = ipow(n_, modes - 1 - k);
    const Eigen::Index outer = ipow(n_, k);
    Mat r = Mat::Zero(n_, n_);
    for (Eigen::Index o = 0; o < outer; ++o)
      for (Eigen::Index i = 0; i < inner; ++i)
        for (int e = 0; e < n_; ++e)
          for (int ep = 0; ep < n_; ++ep)
            r(e, ep) += rho((o * n_ + e) * inner + i, (o * n_ + ep) * inner + i);
    return r;
  }

  /// Applies the channel to every mode, repeating until each mode's leakage
  /// is below `tolerance`.
  Mat operator()(const Mat& rho, int modes, double tolerance = 1e-8, int max_rounds = 20) const {
    Mat out = rho;
    for (int round = 0; round < max_rounds; ++round) {
      for (int k = 0; k < modes; ++k) out = apply_once(out, k, modes);
      if (leakage(out, modes) < tolerance) return out;
    }
    throw NumericalError("project_to_code: leakage did not drain below tolerance");
  }

 private:
  static Eigen::Index ipow(Eigen::Index b, int e) {
    Eigen::Index r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }

  int n_;
  double kappa2_;
  double duration_ = 0.0;
  Mat channel_;
};

inline Mat project_to_code(const Mat& rho, const CatBasis& basis, int modes, double kappa2_strong = 50.0) {
  return CodeProjection(basis, kappa2_strong)(rho, modes);
}

/// |<a|b>|^2.
inline double fidelity(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fidelity: dimension mismatch");
  return std::norm(a.dot(b));
}

/// <psi|rho|psi>.
inline double fidelity(const Mat& rho, const Vec& psi) {
  if (rho.rows() != psi.size()) throw std::invalid_argument("fidelity: dimension mismatch");
  return psi.dot(rho * psi).real();
}

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const Mat& rho, const Mat& sigma) {
  if (rho.rows() != sigma.rows()) throw std::invalid_argument("fidelity: dimension mismatch");
  const Mat s = psd_sqrt(rho);
  const Mat inner = s * sigma * s;
  const double tr = psd_sqrt(inner).trace().real();
  return tr * tr;
}

}  // namespace catgates
