#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "catgates/linalg.hpp"

namespace catgates {

/// Smooth envelope on [0, T] with analytic derivatives.
class PulseShape {
 public:
  using Evaluator = std::function<cplx(double t, int order)>;

  PulseShape() = default;
  PulseShape(std::string kind, double duration, int smoothness, int max_order, Evaluator eval,
             std::function<cplx(double)> antiderivative = {})
      : kind_(std::move(kind)),
        duration_(duration),
        smoothness_(smoothness),
        max_order_(max_order),
        eval_(std::move(eval)),
        antiderivative_(std::move(antiderivative)) {
    if (!(duration > 0.0)) throw std::invalid_argument("PulseShape: duration must be positive");
  }

  cplx operator()(double t) const { return eval_(t, 0); }

  cplx derivative(double t, int order) const {
    if (order < 0 || order > max_order_)
      throw std::out_of_range("PulseShape: derivative order " + std::to_string(order) + " unavailable");
    return eval_(t, order);
  }

  /// Integral from 0 to t; closed form when known, otherwise quadrature.
  cplx integral(double t) const;

  const std::string& kind() const { return kind_; }
  double duration() const { return duration_; }
  /// Number of derivative orders (counting the value itself) that vanish at both endpoints.
  int smoothness_order() const { return smoothness_; }
  int max_order() const { return max_order_; }
  bool has_closed_form_integral() const { return static_cast<bool>(antiderivative_); }

  double peak(int samples = 2001) const {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) m = std::max(m, std::abs((*this)(duration_ * i / (samples - 1))));
    return m;
  }

 private:
  std::string kind_;
  double duration_ = 1.0;
  int smoothness_ = 0;
  int max_order_ = 0;
  Evaluator eval_;
  std::function<cplx(double)> antiderivative_;
};

struct QuadratureResult {
  cplx value;
  double error;
};

/// Adaptive Gauss-Kronrod (31 point) integration of a complex integrand.
/// Throws if the error estimate exceeds both `abs_tol` and the roundoff floor
/// of the integrand's L1 norm.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, unsigned max_depth = 15) {
  double err = 0.0;
  double l1 = 0.0;
  cplx v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, 1e-12, &err, &l1);
  const double floor = 1024.0 * std::numeric_limits<double>::epsilon() * l1;
  if (err > abs_tol && err > floor) throw std::runtime_error("integrate_adaptive: quadrature did not converge");
  return {v, err};
}

inline cplx PulseShape::integral(double t) const {
  if (antiderivative_) return antiderivative_(t);
  if (t <= 0.0) return 0.0;
  auto f = [this](double s) { return (*this)(s); };
  return integrate_adaptive(f, 0.0, t, 1e-10 * std::max(1.0, peak(201) * t)).value;
}

namespace detail {

/// Taylor coefficients c_k = g^(k)(t)/k! of g(t) = exp(-(t-c)^2/(2 sigma^2)).
inline std::vector<double> gaussian_taylor(double t, double c, double sigma, int order) {
  // g^(k) = (-1/sigma)^k He_k(x/sigma) g with probabilists' Hermite polynomials.
  const double u = (t - c) / sigma;
  const double g = std::exp(-0.5 * u * u);
  std::vector<double> he(order + 1);
  he[0] = 1.0;
  if (order >= 1) he[1] = u;
  for (int k = 2; k <= order; ++k) he[k] = u * he[k - 1] - (k - 1) * he[k - 2];
  std::vector<double> out(order + 1);
  double fact = 1.0;
  double scale = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) {
      fact *= k;
      scale *= -1.0 / sigma;
    }
    out[k] = scale * he[k] * g / fact;
  }
  return out;
}

inline std::vector<double> series_product(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = std::min(a.size(), b.size());
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; i + j < n; ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

inline constexpr int kGaussianMaxOrder = 8;

/// A { exp(-(t-T/2)^2/(2 sigma^2)) - exp(-(T/2)^2/(2 sigma^2)) }^m with A set
/// by the requested area.
inline PulseShape gaussian_pulse(int m, double T, double area, double sigma = 0.0) {
  if (m < 1 || m > 3) throw std::invalid_argument("gaussian_pulse: m must be 1, 2 or 3");
  if (!(T > 0.0)) throw std::invalid_argument("gaussian_pulse: T must be positive");
  if (sigma <= 0.0) sigma = T;
  const double c = T / 2.0;
  const double g0 = std::exp(-c * c / (2.0 * sigma * sigma));

  // Closed-form integral of (g - g0)^m via erf.
  auto raw_integral = [=](double t) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) {
      const double coef = detail::binomial(m, j) * std::pow(-g0, m - j);
      double prim;
      if (j == 0) {
        prim = t;
      } else {
        const double k = std::sqrt(static_cast<double>(j)) / (std::sqrt(2.0) * sigma);
        prim = sigma * std::sqrt(std::numbers::pi / (2.0 * j)) * (std::erf(k * (t - c)) - std::erf(-k * c));
      }
      s += coef * prim;
    }
    return s;
  };
  const double norm = raw_integral(T);
  const double amp = area / norm;

  auto eval = [=](double t, int order) -> cplx {
    std::vector<double> f = detail::gaussian_taylor(t, c, sigma, order);
    f[0] -= g0;
    std::vector<double> p = f;
    for (int i = 1; i < m; ++i) p = detail::series_product(p, f);
    double fact = 1.0;
    for (int k = 2; k <= order; ++k) fact *= k;
    return amp * p[order] * fact;
  };
  auto prim = [=](double t) -> cplx { return amp * raw_integral(std::clamp(t, 0.0, T)); };
  return PulseShape("gaussian" + std::to_string(m), T, m, kGaussianMaxOrder, eval, prim);
}

/// Constant pulse of the given area on [0, T].
inline PulseShape hard_pulse(double T, double area) {
  const double amp = area / T;
  auto eval = [=](double, int order) -> cplx { return order == 0 ? amp : 0.0; };
  auto prim = [=](double t) -> cplx { return amp * std::clamp(t, 0.0, T); };
  return PulseShape("hard", T, 0, kGaussianMaxOrder, eval, prim);
}

inline PulseShape scaled(const PulseShape& p, cplx factor) {
  auto eval = [p, factor](double t, int k) { return factor * p.derivative(t, k); };
  std::function<cplx(double)> prim;
  if (p.has_closed_form_integral()) prim = [p, factor](double t) { return factor * p.integral(t); };
  return PulseShape(p.kind(), p.duration(), p.smoothness_order(), p.max_order(), eval, prim);
}

/// F(Omega, Delta, T) = int_0^T Omega(t) exp(-i Delta t) dt.
inline cplx finite_time_fourier(const PulseShape& pulse, double delta, double T, double rel_tol = 1e-12) {
  auto f = [&](double t) { return pulse(t) * std::exp(-kI * delta * t); };
  const double scale = std::max(pulse.peak(401) * T, 1e-300);
  return integrate_adaptive(f, 0.0, T, rel_tol * scale).value;
}

/// Fourier transform of an arbitrary scalar function on [0, T].
template <class F>
cplx finite_time_fourier_fn(F&& fn, double delta, double T, double abs_tol) {
  auto f = [&](double t) { return cplx(fn(t)) * std::exp(-kI * delta * t); };
  return integrate_adaptive(f, 0.0, T, abs_tol).value;
}

struct GapSet {
  std::vector<double> gaps;

  void validate() const {
    for (double g : gaps)
      if (!(std::abs(g) > 0.0)) throw std::invalid_argument("GapSet: gaps must be nonzero");
  }
};

/// prod_k (1 + i d/dt / Delta_k) applied to the base pulse. Each factor nulls
/// the finite-time Fourier component at Delta_k because the base pulse and its
/// first N-1 derivatives vanish at the endpoints.
inline PulseShape hole_corrected_pulse(const PulseShape& base, const GapSet& gaps) {
  gaps.validate();
  const int n = static_cast<int>(gaps.gaps.size());
  if (base.smoothness_order() < n)
    throw std::invalid_argument("hole_corrected_pulse: base pulse not smooth enough for " + std::to_string(n) +
                                " holes");
  if (base.max_order() < n) throw std::invalid_argument("hole_corrected_pulse: base derivatives unavailable");
  // Coefficients of d^j: i^j e_j(1/Delta_1, ..., 1/Delta_N).
  std::vector<cplx> coef(n + 1, 0.0);
  coef[0] = 1.0;
  for (double g : gaps.gaps)
    for (int j = n; j >= 1; --j) coef[j] += coef[j - 1] * (kI / g);
  auto eval = [base, coef, n](double t, int order) {
    cplx s = 0.0;
    for (int j = 0; j <= n; ++j) s += coef[j] * base.derivative(t, j + order);
    return s;
  };
  // Derivative terms integrate to boundary values, which vanish except for the top order.
  std::function<cplx(double)> prim;
  if (base.has_closed_form_integral()) {
    prim = [base, coef, n](double t) {
      cplx s = coef[0] * base.integral(t);
      for (int j = 1; j <= n; ++j) s += coef[j] * (base.derivative(t, j - 1) - base.derivative(0.0, j - 1));
      return s;
    };
  }
  return PulseShape(base.kind() + "+holes" + std::to_string(n), base.duration(),
                    std::max(0, base.smoothness_order() - n), base.max_order() - n, eval, prim);
}

/// Asymptotic n-th order excitation |F(Omega^n / Delta^(n-1), Delta, T)|^2.
inline double leakage_order_estimate(const PulseShape& pulse, double delta, double T, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("leakage_order_estimate: order must be 1 or 2");
  const double scale = std::pow(std::max(pulse.peak(401), 1e-300), order) * T / std::pow(std::abs(delta), order - 1);
  auto fn = [&](double t) { return std::pow(pulse(t), order) / std::pow(delta, order - 1); };
  return std::norm(finite_time_fourier_fn(fn, delta, T, 1e-12 * scale));
}

/// Closed form |F|^2 for a constant pulse of amplitude omega0.
inline double hard_pulse_excitation(double omega0, double delta, double T) {
  const double s = std::sin(delta * T / 2.0);
  return 4.0 * omega0 * omega0 * s * s / (delta * delta);
}

/// Samples as CSV rows "t,re,im".
inline std::string pulse_csv(const PulseShape& pulse, int samples) {
  if (samples < 2) throw std::invalid_argument("pulse_csv: need at least 2 samples");
  std::ostringstream os;
  os << std::setprecision(17) << "t,re,im\n";
  for (int i = 0; i < samples; ++i) {
    const double t = pulse.duration() * i / (samples - 1);
    const cplx v = pulse(t);
    os << t << ',' << v.real() << ',' << v.imag() << '\n';
  }
  return os.str();
}

}  // namespace catgates
