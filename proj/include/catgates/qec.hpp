#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "catgates/control.hpp"
#include "catgates/gatechar.hpp"
#include "catgates/matching.hpp"

namespace catgates {

/// Per-location Z/X fault probabilities of the repetition-code circuit.
struct CircuitErrorModel {
  double p0 = 0.0;       // prep, idle and measurement Z rate
  double cx_zc = 0.0;    // Z on the CX control (ancilla)
  double cx_zt = 0.0;    // Z on the CX target (data)
  double cx_zczt = 0.0;  // correlated Z on both
  double cx_x = 0.0;     // X rate of the CX, aggregated outside the Monte Carlo
  std::string source = "analytic";

  void validate() const {
    for (double p : {p0, cx_zc, cx_zt, cx_zczt, cx_x})
      if (!(p >= 0.0 && p <= 0.5)) throw std::invalid_argument("CircuitErrorModel: probabilities must be in [0, 0.5]");
    if (cx_zc + cx_zt + cx_zczt > 1.0) throw std::invalid_argument("CircuitErrorModel: CX fault probabilities exceed 1");
  }

  /// Loss-dominated model: p0 = kappa1 alpha^2 T, with the control also
  /// carrying the non-adiabatic Z error.
  static CircuitErrorModel from_rates(double kappa1, double alpha2, double T_cx, double p_z_na, double p_x,
                                      std::string source) {
    CircuitErrorModel m;
    m.p0 = kappa1 * alpha2 * T_cx;
    m.cx_zc = p_z_na + m.p0;
    m.cx_zt = 0.5 * m.p0;
    m.cx_zczt = 0.5 * m.p0;
    m.cx_x = p_x;
    m.source = std::move(source);
    m.validate();
    return m;
  }
};

inline nlohmann::json to_json(const CircuitErrorModel& m) {
  return {{"p0", m.p0},           {"cx_zc", m.cx_zc}, {"cx_zt", m.cx_zt},
          {"cx_zczt", m.cx_zczt}, {"cx_x", m.cx_x},   {"source", m.source}};
}

enum class FaultKind { Prep, Idle, Cx, Measure };

/// One fault site; CX sites carry three exclusive outcomes.
struct FaultLocation {
  FaultKind kind;
  int round;
  int layer;  // 0 prep, 1 and 2 the two CX layers, 3 measurement
  int ancilla = -1;
  int data = -1;
};

/// Pauli-Z frame after propagation: ancilla outcomes per round and final data frame.
struct FrameOutcome {
  std::vector<std::uint8_t> detectors;
  bool observable = false;
};

/// Phase-flip repetition code with d data modes and d-1 ancillas measuring
/// X_i X_{i+1}; d noisy rounds followed by one perfect round.
class RepetitionCircuit {
 public:
  explicit RepetitionCircuit(int d) : d_(d) {
    if (d < 1 || d % 2 == 0) throw std::invalid_argument("RepetitionCircuit: d must be odd and >= 1");
    for (int r = 0; r < d_; ++r) {
      for (int j = 0; j < d_ - 1; ++j) locations_.push_back({FaultKind::Prep, r, 0, j, -1});
      for (int i = 0; i < d_; ++i) locations_.push_back({FaultKind::Idle, r, 0, -1, i});
      for (int layer = 1; layer <= 2; ++layer) {
        for (int j = 0; j < d_ - 1; ++j) locations_.push_back({FaultKind::Cx, r, layer, j, j + layer - 1});
        const int idle = layer == 1 ? d_ - 1 : 0;
        if (d_ > 1) locations_.push_back({FaultKind::Idle, r, layer, -1, idle});
      }
      for (int j = 0; j < d_ - 1; ++j) locations_.push_back({FaultKind::Measure, r, 3, j, -1});
    }
  }

  int distance() const { return d_; }
  int rounds() const { return d_ + 1; }
  int ancillas() const { return d_ - 1; }
  int num_detectors() const { return rounds() * ancillas(); }
  int detector_index(int round, int ancilla) const { return round * ancillas() + ancilla; }
  std::pair<int, int> detector_coords(int index) const { return {index / ancillas(), index % ancillas()}; }
  const std::vector<FaultLocation>& locations() const { return locations_; }

  /// Fault outcome codes: CX sites use 1 = Z_c, 2 = Z_t, 3 = Z_c Z_t; other
  /// sites use 1 for their single Z fault.
  using FaultAssignment = std::vector<std::pair<int, int>>;  // (location index, outcome)

  /// Propagates the Z frame through the whole circuit with the given faults.
  FrameOutcome propagate(const FaultAssignment& faults) const {
    std::vector<int> outcome(locations_.size(), 0);
    for (auto [loc, o] : faults) {
      if (loc < 0 || loc >= static_cast<int>(locations_.size())) throw std::out_of_range("propagate: bad location");
      outcome[loc] = o;
    }
    std::vector<std::uint8_t> data(d_, 0), anc(std::max(0, d_ - 1), 0), prev(std::max(0, d_ - 1), 0);
    FrameOutcome out;
    out.detectors.assign(num_detectors(), 0);
    size_t li = 0;
    auto fault_at = [&](size_t idx) { return outcome[idx]; };
    for (int r = 0; r < rounds(); ++r) {
      const bool noisy = r < d_;
      std::fill(anc.begin(), anc.end(), 0);
      if (noisy) {
        for (int j = 0; j < d_ - 1; ++j, ++li)
          if (fault_at(li)) anc[j] ^= 1;
        for (int i = 0; i < d_; ++i, ++li)
          if (fault_at(li)) data[i] ^= 1;
      }
      for (int layer = 1; layer <= 2; ++layer) {
        for (int j = 0; j < d_ - 1; ++j) {
          const int di = j + layer - 1;
          anc[j] ^= data[di];  // CX from ancilla onto data copies data Z onto the ancilla
          if (noisy) {
            const int o = fault_at(li++);
            if (o & 1) anc[j] ^= 1;
            if (o & 2) data[di] ^= 1;
          }
        }
        if (noisy && d_ > 1) {
          const int idle = layer == 1 ? d_ - 1 : 0;
          if (fault_at(li++)) data[idle] ^= 1;
        }
      }
      if (noisy)
        for (int j = 0; j < d_ - 1; ++j, ++li)
          if (fault_at(li)) anc[j] ^= 1;
      for (int j = 0; j < d_ - 1; ++j) {
        out.detectors[detector_index(r, j)] = anc[j] ^ prev[j];
        prev[j] = anc[j];
      }
    }
    out.observable = data[0] != 0;
    return out;
  }

 private:
  int d_;
  std::vector<FaultLocation> locations_;
};

/// Effect of a single fault mechanism on detectors and the logical observable.
struct FaultEffect {
  std::vector<int> detectors;
  bool observable = false;
};

struct DemEdge {
  int u, v;  // v == boundary for single-detector mechanisms
  double p;
  bool observable;
};

/// Graph-like detector error model with shortest-path distances.
class DetectorErrorModel {
 public:
  DetectorErrorModel() = default;

  DetectorErrorModel(int num_detectors, std::vector<DemEdge> edges) : n_(num_detectors), edges_(std::move(edges)) {
    build_distances();
  }

  int num_detectors() const { return n_; }
  int boundary() const { return n_; }
  const std::vector<DemEdge>& edges() const { return edges_; }

  static double weight(double p) { return std::log((1.0 - p) / p); }

  double distance(int u, int v) const { return dist_[idx(u, v)]; }
  bool path_observable(int u, int v) const { return parity_[idx(u, v)] != 0; }

 private:
  size_t idx(int u, int v) const { return static_cast<size_t>(u) * (n_ + 1) + v; }

  void build_distances() {
    const int V = n_ + 1;
    const double inf = std::numeric_limits<double>::infinity();
    dist_.assign(static_cast<size_t>(V) * V, inf);
    parity_.assign(static_cast<size_t>(V) * V, 0);
    for (int i = 0; i < V; ++i) dist_[idx(i, i)] = 0.0;
    for (const auto& e : edges_) {
      if (!(e.p > 0.0)) continue;
      if (e.p >= 0.5) throw std::invalid_argument("DetectorErrorModel: edge probability >= 0.5");
      const double w = weight(e.p);
      if (w < dist_[idx(e.u, e.v)]) {
        dist_[idx(e.u, e.v)] = dist_[idx(e.v, e.u)] = w;
        parity_[idx(e.u, e.v)] = parity_[idx(e.v, e.u)] = e.observable;
      }
    }
    for (int k = 0; k < V; ++k)
      for (int i = 0; i < V; ++i) {
        const double dik = dist_[idx(i, k)];
        if (dik == inf) continue;
        for (int j = 0; j < V; ++j) {
          const double cand = dik + dist_[idx(k, j)];
          if (cand < dist_[idx(i, j)]) {
            dist_[idx(i, j)] = cand;
            parity_[idx(i, j)] = parity_[idx(i, k)] ^ parity_[idx(k, j)];
          }
        }
      }
  }

  int n_ = 0;
  std::vector<DemEdge> edges_;
  std::vector<double> dist_;
  std::vector<std::uint8_t> parity_;
};

/// Per-location fault effects obtained by propagating one fault at a time.
struct CircuitModel {
  RepetitionCircuit circuit;
  CircuitErrorModel errors;
  // For each location: outcome probabilities and effects (index 1..3).
  std::vector<std::array<double, 4>> probs;
  std::vector<std::array<FaultEffect, 4>> effects;
  DetectorErrorModel dem;

  CircuitModel(int d, const CircuitErrorModel& e) : circuit(d), errors(e) {
    e.validate();
    const auto& locs = circuit.locations();
    probs.resize(locs.size());
    effects.resize(locs.size());
    std::map<std::pair<std::vector<int>, bool>, double> merged;
    for (size_t i = 0; i < locs.size(); ++i) {
      probs[i] = {0.0, 0.0, 0.0, 0.0};
      if (locs[i].kind == FaultKind::Cx) {
        probs[i][1] = e.cx_zc;
        probs[i][2] = e.cx_zt;
        probs[i][3] = e.cx_zczt;
      } else {
        probs[i][1] = e.p0;
      }
      for (int o = 1; o <= 3; ++o) {
        if (locs[i].kind != FaultKind::Cx && o > 1) break;
        const FrameOutcome f = circuit.propagate({{static_cast<int>(i), o}});
        FaultEffect eff;
        for (int k = 0; k < circuit.num_detectors(); ++k)
          if (f.detectors[k]) eff.detectors.push_back(k);
        eff.observable = f.observable;
        if (eff.detectors.size() > 2) throw std::logic_error("CircuitModel: fault is not graph-like");
        effects[i][o] = eff;
        const double p = probs[i][o];
        if (p > 0.0 && !eff.detectors.empty()) {
          double& q = merged[{eff.detectors, eff.observable}];
          q = q + p - 2.0 * q * p;
        }
      }
    }
    std::vector<DemEdge> edges;
    const int nb = circuit.num_detectors();
    for (const auto& [key, p] : merged) {
      const auto& det = key.first;
      edges.push_back({det[0], det.size() == 2 ? det[1] : nb, std::min(p, 0.499999), key.second});
    }
    dem = DetectorErrorModel(nb, std::move(edges));
  }
};

struct SyndromeRecord {
  int d = 0;
  int rounds = 0;
  std::vector<int> defects;  // detector indices, sorted
  bool logical = false;      // true residual logical Z flip before decoding
};

/// Counter-based splitmix64 stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static SplitMix64 for_shot(std::uint64_t root, std::uint64_t shot) {
    SplitMix64 g(root ^ (0x9E3779B97F4A7C15ULL * (shot + 1)));
    g();
    return g;
  }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Samples fault records shot by shot; faults at each location are i.i.d.
class CircuitSampler {
 public:
  explicit CircuitSampler(const CircuitModel& model) : model_(&model) {
    const auto& probs = model.probs;
    // Group locations by total fault probability for geometric skipping.
    std::map<double, std::vector<int>> groups;
    for (size_t i = 0; i < probs.size(); ++i) {
      const double tot = probs[i][1] + probs[i][2] + probs[i][3];
      if (tot > 0.0) groups[tot].push_back(static_cast<int>(i));
    }
    for (auto& [p, locs] : groups) groups_.push_back({p, std::log1p(-p), std::move(locs)});
  }

  /// Faults drawn for one shot (location, outcome).
  RepetitionCircuit::FaultAssignment sample_faults(SplitMix64& rng) const {
    RepetitionCircuit::FaultAssignment faults;
    for (const auto& g : groups_) {
      const size_t n = g.locations.size();
      size_t i = 0;
      while (true) {
        if (g.p < 1.0) {
          const double u = rng.uniform();
          const double skip = std::floor(std::log1p(-u) / g.log1mp);
          if (skip >= static_cast<double>(n - i)) break;
          i += static_cast<size_t>(skip);
        }
        if (i >= n) break;
        const int loc = g.locations[i];
        const auto& pr = model_->probs[loc];
        double u = rng.uniform() * g.p;
        int o = 1;
        while (o < 3 && u >= pr[o]) u -= pr[o++];
        faults.push_back({loc, o});
        ++i;
      }
    }
    return faults;
  }

  /// Syndrome record from sampled faults using the precomputed effects.
  SyndromeRecord sample(SplitMix64& rng) const {
    const auto faults = sample_faults(rng);
    SyndromeRecord rec;
    rec.d = model_->circuit.distance();
    rec.rounds = model_->circuit.rounds();
    std::vector<int> touched;
    for (auto [loc, o] : faults) {
      const FaultEffect& e = model_->effects[loc][o];
      touched.insert(touched.end(), e.detectors.begin(), e.detectors.end());
      rec.logical ^= e.observable;
    }
    std::sort(touched.begin(), touched.end());
    for (size_t i = 0; i < touched.size();) {
      size_t j = i;
      while (j < touched.size() && touched[j] == touched[i]) ++j;
      if ((j - i) % 2 == 1) rec.defects.push_back(touched[i]);
      i = j;
    }
    return rec;
  }

 private:
  struct Group {
    double p;
    double log1mp;
    std::vector<int> locations;
  };
  const CircuitModel* model_;
  std::vector<Group> groups_;
};

/// Samples `shots` records with per-shot streams derived from `seed`.
inline std::vector<SyndromeRecord> build_and_sample(int d, const CircuitErrorModel& errors, std::int64_t shots,
                                                    std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("build_and_sample: shots must be >= 1");
  CircuitModel model(d, errors);
  CircuitSampler sampler(model);
  std::vector<SyndromeRecord> out;
  out.reserve(static_cast<size_t>(shots));
  for (std::int64_t s = 0; s < shots; ++s) {
    SplitMix64 rng = SplitMix64::for_shot(seed, static_cast<std::uint64_t>(s));
    out.push_back(sampler.sample(rng));
  }
  return out;
}

struct MatchingResult {
  double weight = 0.0;
  bool flip = false;
  std::vector<std::pair<int, int>> pairs;  // detector pairs; second == -1 for boundary
};

/// Fixed-point resolution of matching weights.
inline constexpr double kWeightScale = 1e6;

/// Exact minimum-weight matching of defects to each other or to the boundary,
/// solved as a maximum-weight perfect matching with one boundary twin per defect.
inline MatchingResult mwpm_match(const std::vector<int>& defects, const DetectorErrorModel& dem) {
  MatchingResult res;
  const int n = static_cast<int>(defects.size());
  if (n == 0) return res;
  const int b = dem.boundary();
  double wmax = 0.0;
  for (int i = 0; i < n; ++i) wmax = std::max(wmax, dem.distance(defects[i], b));
  if (!std::isfinite(wmax)) throw std::invalid_argument("mwpm_match: defect cannot reach the boundary");
  // Fixed-point weights, negated: the maximum-weight maximum-cardinality
  // matching is then a minimum-weight perfect matching.
  auto fixed = [](double w) { return static_cast<BlossomMatcher::Weight>(std::llround(w * kWeightScale)); };
  std::vector<BlossomMatcher::Edge> edges;
  for (int i = 0; i < n; ++i) {
    edges.push_back({i, n + i, -fixed(dem.distance(defects[i], b))});
    for (int j = i + 1; j < n; ++j) {
      const double dij = dem.distance(defects[i], defects[j]);
      if (std::isfinite(dij)) edges.push_back({i, j, -fixed(dij)});
      edges.push_back({n + i, n + j, 0});
    }
  }
  const auto mate = max_weight_matching(2 * n, std::move(edges), true);
  for (int i = 0; i < n; ++i) {
    const int m = static_cast<int>(mate[i]);
    if (m < 0)
      throw std::logic_error("mwpm_match: matching is not perfect");
    if (m == n + i) {
      res.weight += dem.distance(defects[i], b);
      res.flip ^= dem.path_observable(defects[i], b);
      res.pairs.push_back({defects[i], -1});
    } else if (m < n && m > i) {
      res.weight += dem.distance(defects[i], defects[m]);
      res.flip ^= dem.path_observable(defects[i], defects[m]);
      res.pairs.push_back({defects[i], defects[m]});
    } else if (m >= n && m != n + i) {
      throw std::logic_error("mwpm_match: defect matched to a foreign boundary twin");
    }
  }
  return res;
}

/// Exhaustive minimum over all pairings (with boundary) for small instances.
inline double brute_force_matching_weight(const std::vector<int>& defects, const DetectorErrorModel& dem) {
  if (defects.size() > 12) throw std::invalid_argument("brute_force_matching_weight: too many defects");
  const int b = dem.boundary();
  std::function<double(std::vector<int>)> rec = [&](std::vector<int> rest) -> double {
    if (rest.empty()) return 0.0;
    const int first = rest.front();
    std::vector<int> tail(rest.begin() + 1, rest.end());
    double best = dem.distance(first, b) + rec(tail);
    for (size_t k = 0; k < tail.size(); ++k) {
      std::vector<int> sub = tail;
      sub.erase(sub.begin() + static_cast<long>(k));
      best = std::min(best, dem.distance(first, tail[k]) + rec(sub));
    }
    return best;
  };
  return rec(defects);
}

/// Decoder's logical Z estimate for a record.
inline bool mwpm_decode(const SyndromeRecord& rec, const DetectorErrorModel& dem) {
  return mwpm_match(rec.defects, dem).flip;
}

struct WilsonInterval {
  double lo = 0.0, hi = 1.0;
};

inline WilsonInterval wilson_interval(std::int64_t failures, std::int64_t shots, double z = 1.96) {
  if (shots <= 0) return {};
  const double n = static_cast<double>(shots);
  const double p = static_cast<double>(failures) / n;
  const double den = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / den;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct LogicalRate {
  int d = 0;
  std::int64_t shots = 0;
  std::int64_t failures = 0;
  double p_lz = 0.0;
  WilsonInterval ci;
  double p_lx = 0.0;  // union bound d (d + 1) p_x
  double total() const { return p_lz + p_lx; }
  bool ci_target_met = true;
};

inline nlohmann::json to_json(const LogicalRate& r) {
  return {{"d", r.d},           {"shots", r.shots}, {"failures", r.failures}, {"p_lz", r.p_lz},
          {"ci_lo", r.ci.lo},   {"ci_hi", r.ci.hi}, {"p_lx", r.p_lx},         {"p_l", r.total()},
          {"p_lx_rule", "union bound d(d+1) p_x"}, {"ci_target_met", r.ci_target_met}};
}

struct McOptions {
  std::int64_t max_shots = 100000;
  std::int64_t target_failures = 0;  // stop early once reached (0 disables)
  std::int64_t block = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  double target_rel_ci = 0.0;  // flag when the relative CI half-width exceeds this
};

/// Monte Carlo P_L^Z with MWPM decoding plus the X union bound.
inline LogicalRate logical_error_rate(int d, const CircuitErrorModel& errors, const McOptions& opt = {}) {
  if (opt.max_shots < 1 || opt.block < 1) throw std::invalid_argument("logical_error_rate: bad shot budget");
  CircuitModel model(d, errors);
  CircuitSampler sampler(model);
  const int threads = std::max(1, opt.threads);
  LogicalRate r;
  r.d = d;
  std::int64_t done = 0;
  while (done < opt.max_shots) {
    const std::int64_t n = std::min(opt.block, opt.max_shots - done);
    std::vector<std::int64_t> fails(threads, 0);
    auto work = [&](int t) {
      std::unordered_map<std::string, bool> cache;
      for (std::int64_t s = done + t; s < done + n; s += threads) {
        SplitMix64 rng = SplitMix64::for_shot(opt.seed, static_cast<std::uint64_t>(s));
        const SyndromeRecord rec = sampler.sample(rng);
        bool flip = false;
        if (!rec.defects.empty()) {
          std::string key(reinterpret_cast<const char*>(rec.defects.data()), rec.defects.size() * sizeof(int));
          auto it = cache.find(key);
          if (it == cache.end()) it = cache.emplace(std::move(key), mwpm_decode(rec, model.dem)).first;
          flip = it->second;
        }
        if (flip != rec.logical) ++fails[t];
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    for (auto f : fails) r.failures += f;
    done += n;
    if (opt.target_failures > 0 && r.failures >= opt.target_failures) break;
  }
  r.shots = done;
  r.p_lz = static_cast<double>(r.failures) / static_cast<double>(r.shots);
  r.ci = wilson_interval(r.failures, r.shots);
  r.p_lx = std::min(1.0, d * (d + 1.0) * errors.cx_x);
  if (opt.target_rel_ci > 0.0)
    r.ci_target_met = r.failures > 0 && 0.5 * (r.ci.hi - r.ci.lo) <= opt.target_rel_ci * r.p_lz;
  return r;
}

/// Exponent divisor k in P = A (B x)^{(d+1)/k}.
enum class ScalingForm { Quarter = 4, Third = 3, Half = 2 };

inline ScalingForm scaling_form_for(Scheme s) {
  switch (s) {
    case Scheme::Dissipative: return ScalingForm::Quarter;
    case Scheme::Hard:
    case Scheme::Gaussian: return ScalingForm::Third;
    case Scheme::DBC: return ScalingForm::Half;
  }
  return ScalingForm::Half;
}

inline std::string to_string(ScalingForm f) {
  switch (f) {
    case ScalingForm::Quarter: return "(d+1)/4";
    case ScalingForm::Third: return "(d+1)/3";
    case ScalingForm::Half: return "(d+1)/2";
  }
  return "?";
}

struct ScalingPoint {
  double x;  // kappa1 (relative to K or kappa2) or p0, depending on the form
  int d;
  double p;
};

struct FitResult {
  double A = 0.0;
  double B = 0.0;
  ScalingForm form = ScalingForm::Half;
  double residual = 0.0;  // RMS of log10 residuals

  double predict(double x, int d) const {
    return A * std::pow(B * x, (d + 1.0) / static_cast<double>(static_cast<int>(form)));
  }
};

inline nlohmann::json to_json(const FitResult& f) {
  return {{"A", f.A}, {"B", f.B}, {"form", to_string(f.form)}, {"residual", f.residual}};
}

/// Log-space least squares for log A and log B.
inline FitResult fit_scaling(const std::vector<ScalingPoint>& pts, ScalingForm form) {
  if (pts.size() < 3) throw std::invalid_argument("fit_scaling: need at least 3 points");
  const double k = static_cast<double>(static_cast<int>(form));
  Eigen::MatrixXd a(pts.size(), 2);
  Eigen::VectorXd y(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].x > 0.0) || !(pts[i].p > 0.0)) throw std::invalid_argument("fit_scaling: nonpositive data");
    const double e = (pts[i].d + 1.0) / k;
    a(i, 0) = 1.0;
    a(i, 1) = e;
    y(i) = std::log(pts[i].p) - e * std::log(pts[i].x);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 2) throw std::invalid_argument("fit_scaling: rank-deficient fit (need two distances)");
  const Eigen::VectorXd sol = qr.solve(y);
  FitResult f;
  f.A = std::exp(sol(0));
  f.B = std::exp(sol(1));
  f.form = form;
  const Eigen::VectorXd res = a * sol - y;
  f.residual = std::sqrt(res.squaredNorm() / static_cast<double>(pts.size())) / std::log(10.0);
  return f;
}

/// Gate time maximizing the physical CX fidelity, from closed forms.
inline double dissipative_cx_t_star(double kappa1, double alpha2, double kappa2 = 1.0) {
  return std::numbers::pi / (8.0 * alpha2 * std::sqrt(2.0 * kappa1 * kappa2));
}

inline double hard_cx_t_star(double kappa1, double alpha2, double K = 1.0) {
  return std::cbrt(std::numbers::pi * std::numbers::pi / (512.0 * alpha2 * alpha2 * alpha2 * kappa1 * K * K));
}

/// Optimal physical CX time for a scheme; Kerr DBC has no closed form and
/// takes it from the error model on its noiseless curve.
inline double cx_t_star(Scheme s, double kappa1, double alpha2, const GateCurve* curve = nullptr) {
  switch (s) {
    case Scheme::Dissipative: return dissipative_cx_t_star(kappa1, alpha2);
    case Scheme::Hard: return hard_cx_t_star(kappa1, alpha2);
    default:
      if (!curve) throw std::invalid_argument("cx_t_star: scheme needs a noiseless curve");
      return model_t_star(*curve, kappa1, alpha2, 2.0);
  }
}

/// Circuit error model of a scheme at (kappa1, T_cx) from its noiseless curve.
inline CircuitErrorModel circuit_model_from_curve(const GateCurve& c, double kappa1, double alpha2, double T_cx) {
  return CircuitErrorModel::from_rates(kappa1, alpha2, T_cx, c.p_z_at(T_cx), c.p_x_at(T_cx),
                                       "simulated noiseless curve (" + to_string(c.scheme()) + ") + loss");
}

/// Fitted P_L^Z model of one scheme plus its X union bound.
///  - Dissipative / Hard: P = A(eta) [B(eta) kappa1]^{(d+1)/k}, eta = T / T*(kappa1),
///    with log A and log B interpolated linearly in eta.
///  - DBC: P = A [B p0]^{(d+1)/2}, p0 = kappa1 alpha^2 T.
struct LogicalSurrogate {
  Scheme scheme = Scheme::DBC;
  double alpha2 = 8.0;
  GateCurve curve;
  std::vector<double> eta;      // increasing; empty for the p0 form
  std::vector<FitResult> fits;  // one per eta, or a single p0 fit

  bool uses_eta() const { return !eta.empty(); }

  FitResult fit_at(double e) const {
    if (!uses_eta()) return fits.front();
    if (e <= eta.front()) return fits.front();
    if (e >= eta.back()) return fits.back();
    size_t i = std::upper_bound(eta.begin(), eta.end(), e) - eta.begin();
    const double w = (e - eta[i - 1]) / (eta[i] - eta[i - 1]);
    FitResult f = fits[i];
    f.A = std::exp((1 - w) * std::log(fits[i - 1].A) + w * std::log(fits[i].A));
    f.B = std::exp((1 - w) * std::log(fits[i - 1].B) + w * std::log(fits[i].B));
    return f;
  }

  double p_lz(double kappa1, double T, int d) const {
    if (uses_eta()) {
      const double ts = cx_t_star(scheme, kappa1, alpha2);
      return std::min(1.0, fit_at(T / ts).predict(kappa1, d));
    }
    return std::min(1.0, fits.front().predict(kappa1 * alpha2 * T, d));
  }

  double p_lx(double T, int d) const { return std::min(1.0, d * (d + 1.0) * curve.p_x_at(T)); }
  double p_l(double kappa1, double T, int d) const { return p_lz(kappa1, T, d) + p_lx(T, d); }
};

struct LogicalOptimum {
  double kappa1 = 0.0;
  double p_l = 0.0;
  int d = 0;
  double T = 0.0;
  bool on_boundary = false;
};

inline nlohmann::json to_json(const LogicalOptimum& o) {
  return {{"kappa1", o.kappa1}, {"p_l", o.p_l}, {"d", o.d}, {"T", o.T}, {"on_boundary", o.on_boundary}};
}

/// Grid minimization of the surrogate P_L over T and odd d.
inline LogicalOptimum optimize_logical(double kappa1, const LogicalSurrogate& s, const std::vector<double>& T_grid,
                                       const std::vector<int>& d_grid) {
  if (T_grid.empty() || d_grid.empty()) throw std::invalid_argument("optimize_logical: empty grid");
  LogicalOptimum best;
  best.kappa1 = kappa1;
  best.p_l = std::numeric_limits<double>::infinity();
  size_t bi = 0, bj = 0;
  for (size_t i = 0; i < T_grid.size(); ++i)
    for (size_t j = 0; j < d_grid.size(); ++j) {
      if (d_grid[j] < 1 || d_grid[j] % 2 == 0) throw std::invalid_argument("optimize_logical: d must be odd");
      const double v = s.p_l(kappa1, T_grid[i], d_grid[j]);
      if (v < best.p_l) {
        best.p_l = v;
        best.T = T_grid[i];
        best.d = d_grid[j];
        bi = i;
        bj = j;
      }
    }
  best.on_boundary = bi == 0 || bi + 1 == T_grid.size() || bj + 1 == d_grid.size();
  return best;
}

/// Gate-time grid for the optimizer: eta in [eta_lo, eta_hi] around T* for the
/// eta-indexed surrogates, otherwise the span of the noiseless curve.
inline std::vector<double> optimizer_t_grid(const LogicalSurrogate& s, double kappa1, int n = 61) {
  if (s.uses_eta()) {
    const double ts = cx_t_star(s.scheme, kappa1, s.alpha2);
    return log_grid(s.eta.front() * ts, s.eta.back() * ts, n);
  }
  return log_grid(s.curve.t_min(), s.curve.t_max(), n);
}

struct SurrogateConfig {
  std::vector<double> eta = {0.5, 0.75, 1.0, 1.5, 2.0};
  std::vector<double> kappa1;
  std::vector<int> d = {3, 5, 7, 9};
  McOptions mc;
  std::int64_t min_failures = 20;  // sparser points are left out of the fit
};

struct SurrogateSample {
  double eta = 0.0;
  double kappa1 = 0.0;
  double T = 0.0;
  CircuitErrorModel errors;
  LogicalRate rate;
  bool used = false;
};

struct SurrogateBuild {
  LogicalSurrogate surrogate;
  std::vector<SurrogateSample> samples;
};

/// Monte Carlo over (eta, kappa1, d) at T = eta T*(kappa1) and the fits that
/// make up the surrogate. The p0 form (DBC) pools every sample into one fit.
inline SurrogateBuild fit_logical_surrogate(Scheme scheme, const GateCurve& curve, double alpha2,
                                            const SurrogateConfig& cfg) {
  if (cfg.eta.empty() || cfg.kappa1.empty() || cfg.d.empty())
    throw std::invalid_argument("fit_logical_surrogate: empty grid");
  const ScalingForm form = scaling_form_for(scheme);
  const bool p0_form = form == ScalingForm::Half;
  SurrogateBuild out;
  out.surrogate.scheme = scheme;
  out.surrogate.alpha2 = alpha2;
  out.surrogate.curve = curve;
  std::vector<ScalingPoint> pooled;
  for (double e : cfg.eta) {
    std::vector<ScalingPoint> pts;
    for (double k1 : cfg.kappa1) {
      const double T = e * cx_t_star(scheme, k1, alpha2, &curve);
      const CircuitErrorModel em = circuit_model_from_curve(curve, k1, alpha2, T);
      for (int d : cfg.d) {
        SurrogateSample s{e, k1, T, em, logical_error_rate(d, em, cfg.mc), false};
        if (s.rate.failures >= cfg.min_failures) {
          s.used = true;
          (p0_form ? pooled : pts).push_back({p0_form ? em.p0 : k1, d, s.rate.p_lz});
        }
        out.samples.push_back(std::move(s));
      }
    }
    if (p0_form) continue;
    std::set<int> dists;
    for (const auto& q : pts) dists.insert(q.d);
    if (pts.size() < 3 || dists.size() < 2) {
      // Too few failures to pin both A and B at this eta.
      for (auto& s : out.samples)
        if (s.eta == e) s.used = false;
      continue;
    }
    out.surrogate.eta.push_back(e);
    out.surrogate.fits.push_back(fit_scaling(pts, form));
  }
  if (p0_form) out.surrogate.fits.push_back(fit_scaling(pooled, form));
  else if (out.surrogate.fits.empty())
    throw std::invalid_argument("fit_logical_surrogate: no eta slice has failures at two distances");
  return out;
}

/// Monte Carlo check of a surrogate optimum.
inline LogicalRate validate_optimum(const LogicalOptimum& opt, const LogicalSurrogate& s, const McOptions& mc) {
  return logical_error_rate(opt.d, circuit_model_from_curve(s.curve, opt.kappa1, s.alpha2, opt.T), mc);
}

inline nlohmann::json to_json(const LogicalSurrogate& s) {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : s.fits) fits.push_back(to_json(f));
  return {{"scheme", to_string(s.scheme)}, {"alpha2", s.alpha2}, {"eta", s.eta}, {"fits", fits},
          {"curve", to_json(s.curve)}};
}

inline LogicalSurrogate logical_surrogate_from_json(const nlohmann::json& j) {
  LogicalSurrogate s;
  s.scheme = scheme_from_string(j.at("scheme"));
  s.alpha2 = j.at("alpha2");
  s.eta = j.at("eta").get<std::vector<double>>();
  for (const auto& f : j.at("fits")) {
    FitResult r;
    r.A = f.at("A");
    r.B = f.at("B");
    r.form = scaling_form_for(s.scheme);
    r.residual = f.value("residual", 0.0);
    s.fits.push_back(r);
  }
  s.curve = gate_curve_from_json(j.at("curve"));
  return s;
}

}  // namespace catgates
