#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "catgates/linalg.hpp"

namespace catgates {

enum class BasisKind { Fock, ShiftedFock, KerrEigen };

/// Default Fock cutoff for a cat of mean photon number `alpha2`; small cats
/// still need room for the excited pairs.
inline int default_fock_dim(double alpha2) {
  return std::max(40, static_cast<int>(std::ceil(alpha2 + 12.0 * std::sqrt(alpha2))));
}

struct ModeSpace {
  int fock_dim = 42;
  double alpha = std::sqrt(8.0);
  BasisKind basis_kind = BasisKind::Fock;

  static ModeSpace for_alpha2(double alpha2, int fock_dim = 0) {
    ModeSpace s;
    s.alpha = std::sqrt(alpha2);
    s.fock_dim = fock_dim > 0 ? fock_dim : default_fock_dim(alpha2);
    s.validate();
    return s;
  }

  double alpha2() const { return alpha * alpha; }

  void validate() const {
    if (fock_dim < 2) throw std::invalid_argument("ModeSpace: fock_dim must be >= 2");
    if (!(alpha > 0.0)) throw std::invalid_argument("ModeSpace: alpha must be positive");
  }
};

inline Mat annihilation_operator(int dim) {
  if (dim < 2) throw std::invalid_argument("annihilation_operator: dimension must be >= 2");
  Mat a = Mat::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Mat annihilation_operator(const ModeSpace& space) {
  space.validate();
  return annihilation_operator(space.fock_dim);
}

inline Mat number_operator(const ModeSpace& space) {
  Mat n = Mat::Zero(space.fock_dim, space.fock_dim);
  for (int k = 0; k < space.fock_dim; ++k) n(k, k) = k;
  return n;
}

inline Mat parity_operator(const ModeSpace& space) {
  Mat p = Mat::Zero(space.fock_dim, space.fock_dim);
  for (int k = 0; k < space.fock_dim; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
  return p;
}

/// (a^2 - alpha^2), the operator whose kernel is the cat manifold.
inline Mat two_photon_operator(const ModeSpace& space) {
  Mat a = annihilation_operator(space);
  return a * a - space.alpha2() * identity(space.fock_dim);
}

/// -K (a^dag^2 - alpha^2)(a^2 - alpha^2).
inline Mat kerr_hamiltonian(const ModeSpace& space, double K) {
  Mat l = two_photon_operator(space);
  return -K * (l.adjoint() * l);
}

/// D(beta) on the truncated space, exponentiated on a padded space and cut back
/// so that the retained block is free of truncation artefacts.
inline Mat displacement(const ModeSpace& space, cplx beta, int padding = 40) {
  const int big = space.fock_dim + padding;
  Mat a = annihilation_operator(big);
  Mat gen = beta * a.adjoint() - std::conj(beta) * a;
  Mat d = expm(gen);
  return d.topLeftCorner(space.fock_dim, space.fock_dim);
}

inline Vec coherent_state(const ModeSpace& space, cplx beta) {
  Vec v = displacement(space, beta).col(0);
  return v / v.norm();
}

inline Vec shifted_fock_state(const ModeSpace& space, int level, int parity, const Mat& d_plus,
                              const Mat& d_minus) {
  if (level < 0 || 2 * level >= space.fock_dim)
    throw std::invalid_argument("shifted_fock_state: level too high for truncation");
  if (parity != 1 && parity != -1) throw std::invalid_argument("shifted_fock_state: parity must be +1 or -1");
  const double sign = parity * ((level % 2 == 0) ? 1.0 : -1.0);
  Vec v = d_plus.col(level) + sign * d_minus.col(level);
  const double nrm = v.norm();
  if (nrm < 1e-300) throw std::runtime_error("shifted_fock_state: vanishing norm");
  return v / nrm;
}

/// Normalized N[D(alpha) +- (-1)^n D(-alpha)]|n>.
inline Vec shifted_fock_state(const ModeSpace& space, int level, int parity) {
  return shifted_fock_state(space, level, parity, displacement(space, space.alpha),
                            displacement(space, -space.alpha));
}

inline double parity_expectation(const Vec& ket) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < ket.size(); ++k) s += ((k % 2 == 0) ? 1.0 : -1.0) * std::norm(ket(k));
  return s / ket.squaredNorm();
}

struct KerrPair {
  double e_plus = 0.0;
  double e_minus = 0.0;
  Vec plus;
  Vec minus;

  double mean_energy() const { return 0.5 * (e_plus + e_minus); }
  double splitting() const { return e_plus - e_minus; }
};

struct KerrCatSpectrum {
  ModeSpace space;
  double K = 1.0;
  std::vector<KerrPair> pairs;

  /// Mean pair energy relative to the ground pair.
  double gap(int n) const { return pairs.at(n).mean_energy() - pairs.at(0).mean_energy(); }
  double splitting(int n) const { return pairs.at(n).splitting(); }
  int size() const { return static_cast<int>(pairs.size()); }

  /// Largest population on the top quarter of the Fock ladder among the first
  /// `n` pairs; a truncation-quality indicator.
  double tail_population(int n) const {
    const int cut = space.fock_dim - std::max(2, space.fock_dim / 4);
    double worst = 0.0;
    for (int i = 0; i < n && i < size(); ++i) {
      for (const Vec* v : {&pairs[i].plus, &pairs[i].minus})
        worst = std::max(worst, v->tail(space.fock_dim - cut).squaredNorm());
    }
    return worst;
  }
};

/// Exact diagonalization of the Kerr Hamiltonian, split by photon-number
/// parity. Pairs are ordered by increasing |E|; eigenvectors are phased so the
/// dominant shifted-Fock component is real positive. Throws if the first
/// `converged_pairs` eigenvectors leak into the top of the truncated ladder.
inline KerrCatSpectrum diagonalize_kerr_cat(const ModeSpace& space, double K, int converged_pairs = 3,
                                            double tail_tolerance = 1e-8) {
  space.validate();
  const int n = space.fock_dim;
  Mat h = kerr_hamiltonian(space, K);
  Eigen::MatrixXd hr = h.real();

  struct Block {
    std::vector<double> e;
    std::vector<Vec> v;
  };
  auto solve = [&](int parity) {
    std::vector<int> idx;
    for (int k = 0; k < n; ++k)
      if ((k % 2 == 0) == (parity == 1)) idx.push_back(k);
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub(i, j) = hr(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize_kerr_cat: eigensolver failed");
    Block b;
    // Eigen sorts ascending; energies are <= 0 so reverse for increasing |E|.
    for (int c = m - 1; c >= 0; --c) {
      Vec v = Vec::Zero(n);
      for (int i = 0; i < m; ++i) v(idx[i]) = es.eigenvectors()(i, c);
      b.e.push_back(es.eigenvalues()(c));
      b.v.push_back(v);
    }
    return b;
  };
  Block even = solve(1);
  Block odd = solve(-1);

  const Mat dp = displacement(space, space.alpha);
  const Mat dm = displacement(space, -space.alpha);
  const int levels = std::min(n / 2, 20);
  std::vector<Vec> sf_even, sf_odd;
  for (int k = 0; k < levels; ++k) {
    sf_even.push_back(shifted_fock_state(space, k, 1, dp, dm));
    sf_odd.push_back(shifted_fock_state(space, k, -1, dp, dm));
  }
  auto fix_phase = [&](Vec& v, const std::vector<Vec>& basis) {
    cplx best = 0.0;
    for (const Vec& s : basis) {
      cplx ov = s.dot(v);
      if (std::abs(ov) > std::abs(best)) best = ov;
    }
    if (std::abs(best) > 0.0) v *= std::abs(best) / best;
  };

  KerrCatSpectrum spec;
  spec.space = space;
  spec.space.basis_kind = BasisKind::KerrEigen;
  spec.K = K;
  const size_t npairs = std::min(even.e.size(), odd.e.size());
  for (size_t i = 0; i < npairs; ++i) {
    KerrPair p;
    p.e_plus = even.e[i];
    p.e_minus = odd.e[i];
    p.plus = even.v[i];
    p.minus = odd.v[i];
    fix_phase(p.plus, sf_even);
    fix_phase(p.minus, sf_odd);
    spec.pairs.push_back(std::move(p));
  }
  if (converged_pairs > spec.size())
    throw std::invalid_argument("diagonalize_kerr_cat: more pairs requested than the truncation holds");
  if (spec.tail_population(converged_pairs) > tail_tolerance)
    throw std::runtime_error("diagonalize_kerr_cat: insufficient Fock truncation (tail population " +
                             std::to_string(spec.tail_population(converged_pairs)) + ")");
  return spec;
}

struct LogicalStates {
  Vec ket0, ket1, plus, minus;
};

/// Logical basis in the Fock representation built from the ground pair.
inline LogicalStates logical_states(const KerrCatSpectrum& spec) {
  if (spec.size() < 1) throw std::invalid_argument("logical_states: empty spectrum");
  const double r = 1.0 / std::sqrt(2.0);
  const KerrPair& g = spec.pairs[0];
  return {r * (g.plus + g.minus), r * (g.plus - g.minus), g.plus, g.minus};
}

struct ReducedCouplings {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double eta_me = 0.0;
  // The two parity blocks of a give slightly different values.
  double lambda1_odd_even = 0.0;
  double lambda2_odd_even = 0.0;
  double eta_even_odd = 0.0;
};

/// First-order closed forms in 1/alpha.
inline ReducedCouplings reduced_couplings_first_order(double alpha) {
  const double a2 = alpha * alpha;
  ReducedCouplings c;
  c.lambda1 = c.lambda1_odd_even = 2.0 * alpha / (2.0 * a2 + 1.0);
  c.lambda2 = c.lambda2_odd_even = 3.0 * alpha / (a2 + 1.0);
  c.eta_me = c.eta_even_odd = std::sqrt(2.0) * alpha / (2.0 * a2 + 1.0);
  return c;
}

/// Matrix elements of a in the Kerr-cat eigenbasis: a restricted to a pair
/// acts as Z (x) (a' + alpha), so lambda_n = alpha - <psi_n^-|a|psi_n^+> and
/// eta is the <0''|a'|2''> element.
inline ReducedCouplings reduced_couplings(const KerrCatSpectrum& spec) {
  if (spec.size() < 3) throw std::invalid_argument("reduced_couplings: need at least 3 pairs");
  const Mat a = annihilation_operator(spec.space);
  const double alpha = spec.space.alpha;
  auto me = [&](const Vec& bra, const Vec& ket) { return bra.dot(a * ket).real(); };
  const auto& p = spec.pairs;
  ReducedCouplings c;
  c.lambda1 = alpha - me(p[1].minus, p[1].plus);
  c.lambda2 = alpha - me(p[2].minus, p[2].plus);
  c.eta_me = me(p[0].plus, p[2].minus);
  c.lambda1_odd_even = alpha - me(p[1].plus, p[1].minus);
  c.lambda2_odd_even = alpha - me(p[2].plus, p[2].minus);
  c.eta_even_odd = me(p[0].minus, p[2].plus);
  return c;
}

/// Eigenbasis truncated to `pairs` pairs, ordered psi0+, psi0-, psi1+, psi1-, ...
/// All operators are formed exactly in the Fock space and then projected.
class CatBasis {
 public:
  CatBasis() = default;
  CatBasis(const KerrCatSpectrum& spec, int pairs) : space_(spec.space), K_(spec.K), pairs_(pairs) {
    if (pairs < 1 || pairs > spec.size()) throw std::invalid_argument("CatBasis: invalid pair count");
    vecs_ = Mat::Zero(space_.fock_dim, 2 * pairs);
    energies_ = RVec::Zero(2 * pairs);
    for (int n = 0; n < pairs; ++n) {
      vecs_.col(2 * n) = spec.pairs[n].plus;
      vecs_.col(2 * n + 1) = spec.pairs[n].minus;
      energies_(2 * n) = spec.pairs[n].e_plus;
      energies_(2 * n + 1) = spec.pairs[n].e_minus;
    }
    a_ = project(annihilation_operator(space_));
    const double r = 1.0 / std::sqrt(2.0);
    ket0_ = Vec::Zero(dim());
    ket1_ = Vec::Zero(dim());
    ket0_(0) = ket0_(1) = r;
    ket1_(0) = r;
    ket1_(1) = -r;
  }

  int pairs() const { return pairs_; }
  int dim() const { return 2 * pairs_; }
  double alpha() const { return space_.alpha; }
  double alpha2() const { return space_.alpha2(); }
  double K() const { return K_; }
  const ModeSpace& space() const { return space_; }
  const Mat& vectors() const { return vecs_; }
  const RVec& energies() const { return energies_; }
  const Mat& a() const { return a_; }

  Mat project(const Mat& fock_op) const { return vecs_.adjoint() * fock_op * vecs_; }
  Vec project_ket(const Vec& fock_ket) const { return vecs_.adjoint() * fock_ket; }
  Vec lift(const Vec& ket) const { return vecs_ * ket; }

  Mat hamiltonian() const { return energies_.cast<cplx>().asDiagonal(); }

  /// Projection of the Fock-space monomial a^dag^p a^q.
  Mat monomial(int p, int q) const {
    Mat af = annihilation_operator(space_);
    return project(matrix_power(af.adjoint(), p) * matrix_power(af, q));
  }

  const Vec& ket0() const { return ket0_; }
  const Vec& ket1() const { return ket1_; }
  Vec plus() const { return (ket0_ + ket1_) / std::sqrt(2.0); }
  Vec minus() const { return (ket0_ - ket1_) / std::sqrt(2.0); }
  Vec plus_i() const { return (ket0_ + kI * ket1_) / std::sqrt(2.0); }

  /// Columns |0_L>, |1_L>.
  Mat logical_isometry() const {
    Mat w(dim(), 2);
    w.col(0) = ket0_;
    w.col(1) = ket1_;
    return w;
  }

  /// Projector onto the well at sign*alpha: sum_n |(psi_n+ + sign psi_n-)/sqrt2><.|.
  Mat well_projector(int sign) const {
    Mat p = Mat::Zero(dim(), dim());
    for (int n = 0; n < pairs_; ++n) {
      Vec v = Vec::Zero(dim());
      v(2 * n) = 1.0 / std::sqrt(2.0);
      v(2 * n + 1) = sign / std::sqrt(2.0);
      p += projector(v);
    }
    return p;
  }

  /// Projection of exp(-i phi (a^dag a - alpha^2)) taken in the full Fock space.
  Mat rotation(double phi) const {
    Vec ph(space_.fock_dim);
    for (int k = 0; k < space_.fock_dim; ++k) ph(k) = std::exp(-kI * phi * (k - alpha2()));
    return vecs_.adjoint() * ph.asDiagonal() * vecs_;
  }

  /// Population outside the ground pair.
  double leakage(const Mat& rho) const { return (rho.trace() - rho.topLeftCorner(2, 2).trace()).real(); }

 private:
  ModeSpace space_;
  double K_ = 1.0;
  int pairs_ = 0;
  Mat vecs_;
  RVec energies_;
  Mat a_;
  Vec ket0_, ket1_;
};

inline nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Mat matrix_from_json(const nlohmann::json& j) {
  Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const auto& e = j.at("data").at(i).at(k);
      m(i, k) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return m;
}

inline nlohmann::json spectrum_to_json(const KerrCatSpectrum& spec, bool with_vectors = false) {
  nlohmann::json j;
  j["schema"] = "catgates.spectrum/1";
  j["fock_dim"] = spec.space.fock_dim;
  j["alpha"] = spec.space.alpha;
  j["K"] = spec.K;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : spec.pairs) {
    nlohmann::json e = {{"e_plus", p.e_plus}, {"e_minus", p.e_minus}};
    if (with_vectors) {
      e["plus"] = matrix_to_json(p.plus);
      e["minus"] = matrix_to_json(p.minus);
    }
    pairs.push_back(e);
  }
  j["pairs"] = pairs;
  return j;
}

inline KerrCatSpectrum spectrum_from_json(const nlohmann::json& j) {
  if (j.at("schema") != "catgates.spectrum/1") throw std::invalid_argument("spectrum_from_json: unknown schema");
  KerrCatSpectrum s;
  s.space.fock_dim = j.at("fock_dim");
  s.space.alpha = j.at("alpha");
  s.space.basis_kind = BasisKind::KerrEigen;
  s.K = j.at("K");
  for (const auto& e : j.at("pairs")) {
    KerrPair p;
    p.e_plus = e.at("e_plus");
    p.e_minus = e.at("e_minus");
    if (e.contains("plus")) {
      p.plus = matrix_from_json(e.at("plus"));
      p.minus = matrix_from_json(e.at("minus"));
    }
    s.pairs.push_back(std::move(p));
  }
  return s;
}

}  // namespace catgates
