// catgates: batch front-end for spectra, gate simulations, sweeps,
// tomography, repetition-code Monte Carlo and logical-error optimization.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "catgates/control.hpp"
#include "catgates/dynamics.hpp"
#include "catgates/gatechar.hpp"
#include "catgates/hilbert.hpp"
#include "catgates/pulses.hpp"
#include "catgates/qec.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace catgates;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutputEnv = "CATGATES_OUTPUT_DIR";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

const std::set<std::string> kExperiments = {"spectrum", "pulse",  "gate",    "gate-sweep",
                                            "tomography", "qec-mc", "qec-fit", "optimize"};
const std::set<std::string> kTopKeys = {"experiment", "output_dir", "physics", "numerics", "inputs"};
const std::set<std::string> kPhysicsKeys = {"alpha2", "K", "kappa2", "kappa1", "theta",
                                            "schemes", "gate", "T", "eta"};
const std::set<std::string> kNumericsKeys = {"fock_dim",      "pairs",           "steps",        "courant",
                                             "kappa2_strong", "shots",           "target_failures", "seed",
                                             "threads",       "distances",       "samples",      "bracket_points",
                                             "bracket_ratio", "min_failures",    "opt_distances", "opt_points"};
const std::set<std::string> kInputKeys = {"curves", "surrogates"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

struct RunConfig {
  std::string experiment;
  std::string output_dir;
  // physics
  double alpha2 = 8.0, K = 1.0, kappa2 = 1.0, theta = std::numbers::pi / 2;
  std::vector<double> kappa1, T, eta = {1.0};
  std::vector<Scheme> schemes = {Scheme::DBC};
  GateKind gate = GateKind::CX;
  // numerics
  int fock_dim = 0, pairs = 0, steps = 0;
  double courant = 0.05, kappa2_strong = 50.0;
  std::int64_t shots = 100000, target_failures = 0, min_failures = 20;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<int> distances = {3, 5, 7, 9};
  std::vector<int> opt_distances;
  int samples = 401, bracket_points = 5, opt_points = 61;
  double bracket_ratio = std::sqrt(2.0);
  // inputs
  std::string curves_file, surrogates_file;
  json raw;

  SimulationOptions sim() const { return {steps, courant, kappa2_strong}; }

  GateParams gate_params(Scheme s, double t) const {
    GateParams p;
    p.kind = gate;
    p.scheme = s;
    p.theta = theta;
    p.T = t;
    p.K = K;
    p.kappa2 = kappa2;
    p.alpha2 = alpha2;
    p.pairs = pairs;
    return p;
  }

  McOptions mc() const {
    McOptions o;
    o.max_shots = shots;
    o.target_failures = target_failures;
    o.seed = seed;
    o.threads = threads;
    return o;
  }
};

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for '" + key + "' in " + where);
  }
}

RunConfig parse_config(const json& j) {
  reject_unknown(j, kTopKeys, "config");
  RunConfig c;
  c.raw = j;
  if (!j.contains("experiment")) throw ConfigError("missing 'experiment'");
  c.experiment = get_as<std::string>(j, "experiment", "config");
  if (!kExperiments.count(c.experiment)) throw ConfigError("unknown experiment '" + c.experiment + "'");
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir", "config");

  const json ph = j.value("physics", json::object());
  reject_unknown(ph, kPhysicsKeys, "physics");
  if (ph.contains("alpha2")) c.alpha2 = get_as<double>(ph, "alpha2", "physics");
  if (ph.contains("K")) c.K = get_as<double>(ph, "K", "physics");
  if (ph.contains("kappa2")) c.kappa2 = get_as<double>(ph, "kappa2", "physics");
  if (ph.contains("theta")) c.theta = get_as<double>(ph, "theta", "physics");
  if (ph.contains("kappa1")) c.kappa1 = get_as<std::vector<double>>(ph, "kappa1", "physics");
  if (ph.contains("T")) c.T = get_as<std::vector<double>>(ph, "T", "physics");
  if (ph.contains("eta")) c.eta = get_as<std::vector<double>>(ph, "eta", "physics");
  if (ph.contains("gate")) {
    try {
      c.gate = gate_kind_from_string(get_as<std::string>(ph, "gate", "physics"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (ph.contains("schemes")) {
    c.schemes.clear();
    for (const auto& s : get_as<std::vector<std::string>>(ph, "schemes", "physics")) {
      try {
        c.schemes.push_back(scheme_from_string(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }

  const json nu = j.value("numerics", json::object());
  reject_unknown(nu, kNumericsKeys, "numerics");
  auto num_int = [&](const char* k, int& out) {
    if (nu.contains(k)) out = get_as<int>(nu, k, "numerics");
  };
  num_int("fock_dim", c.fock_dim);
  num_int("pairs", c.pairs);
  num_int("steps", c.steps);
  num_int("threads", c.threads);
  num_int("samples", c.samples);
  num_int("bracket_points", c.bracket_points);
  num_int("opt_points", c.opt_points);
  if (nu.contains("courant")) c.courant = get_as<double>(nu, "courant", "numerics");
  if (nu.contains("kappa2_strong")) c.kappa2_strong = get_as<double>(nu, "kappa2_strong", "numerics");
  if (nu.contains("bracket_ratio")) c.bracket_ratio = get_as<double>(nu, "bracket_ratio", "numerics");
  if (nu.contains("shots")) c.shots = get_as<std::int64_t>(nu, "shots", "numerics");
  if (nu.contains("target_failures")) c.target_failures = get_as<std::int64_t>(nu, "target_failures", "numerics");
  if (nu.contains("min_failures")) c.min_failures = get_as<std::int64_t>(nu, "min_failures", "numerics");
  if (nu.contains("seed")) c.seed = get_as<std::uint64_t>(nu, "seed", "numerics");
  if (nu.contains("distances")) c.distances = get_as<std::vector<int>>(nu, "distances", "numerics");
  if (nu.contains("opt_distances")) c.opt_distances = get_as<std::vector<int>>(nu, "opt_distances", "numerics");
  if (c.opt_distances.empty())
    for (int d = 1; d <= 25; d += 2) c.opt_distances.push_back(d);

  const json in = j.value("inputs", json::object());
  reject_unknown(in, kInputKeys, "inputs");
  if (in.contains("curves")) c.curves_file = get_as<std::string>(in, "curves", "inputs");
  if (in.contains("surrogates")) c.surrogates_file = get_as<std::string>(in, "surrogates", "inputs");
  return c;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void validate(const RunConfig& c) {
  require(c.alpha2 > 0.0, "physics.alpha2 must be positive");
  require(c.K > 0.0 && c.kappa2 > 0.0, "physics.K and physics.kappa2 must be positive");
  require(c.fock_dim == 0 || c.fock_dim >= 8, "numerics.fock_dim must be 0 (auto) or >= 8");
  require(c.pairs >= 0 && c.steps >= 0, "numerics.pairs and numerics.steps must be nonnegative");
  require(c.courant > 0.0 && c.kappa2_strong > 0.0, "numerics.courant and numerics.kappa2_strong must be positive");
  require(c.threads >= 1, "numerics.threads must be >= 1");
  require(c.shots >= 1, "numerics.shots must be >= 1");
  for (double t : c.T) require(t > 0.0, "physics.T entries must be positive");
  for (double k : c.kappa1) require(k >= 0.0, "physics.kappa1 entries must be nonnegative");
  for (double e : c.eta) require(e > 0.0, "physics.eta entries must be positive");
  for (int d : c.distances) require(d >= 1 && d % 2 == 1, "numerics.distances must be odd and >= 1");
  for (int d : c.opt_distances) require(d >= 1 && d % 2 == 1, "numerics.opt_distances must be odd and >= 1");
  const std::string& e = c.experiment;
  const bool needs_gate = e == "pulse" || e == "gate" || e == "gate-sweep" || e == "tomography";
  const bool qec = e == "qec-mc" || e == "qec-fit" || e == "optimize";
  if (needs_gate || qec) require(!c.schemes.empty(), "physics.schemes must not be empty");
  if (needs_gate || ((qec) && c.curves_file.empty() && c.surrogates_file.empty()))
    require(!c.T.empty(), "physics.T must not be empty");
  if (e == "pulse") require(c.gate != GateKind::CX, "pulse: gate must be z or zz");
  if (e == "gate" || e == "gate-sweep" || e == "tomography" || qec)
    require(!c.kappa1.empty(), "physics.kappa1 must not be empty");
  if (e == "gate-sweep") {
    require(c.T.size() >= 5 || c.bracket_points >= 5, "gate-sweep: need >= 5 gate times per kappa1");
    for (double k : c.kappa1) require(k > 0.0, "gate-sweep: kappa1 entries must be positive");
  }
  if (qec) {
    require(c.gate == GateKind::CX, "qec experiments use the CX gate");
    for (double k : c.kappa1) require(k > 0.0, "qec: kappa1 entries must be positive");
    require(!c.distances.empty(), "numerics.distances must not be empty");
  }
  if (e == "qec-fit") require(c.distances.size() >= 2, "qec-fit: need at least two distances");
  for (Scheme s : c.schemes) {
    if (s == Scheme::Dissipative && c.gate == GateKind::ZZ && (needs_gate || qec))
      throw ConfigError("no dissipative ZZ construction");
    if (qec && s == Scheme::Gaussian) throw ConfigError("qec: scheme gaussian has no logical surrogate");
  }
}

// ---------------------------------------------------------------- helpers

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// FNV-1a over the canonical (key-sorted) dump.
std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

std::string time_unit(Scheme s) { return s == Scheme::Dissipative ? "1/kappa2" : "1/K"; }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    os_ << std::setprecision(10);
    row(header);
  }
  template <class... Ts>
  void add(const Ts&... vals) {
    bool first = true;
    ((os_ << (first ? "" : ",") << vals, first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }
  std::ostringstream os_;
};

/// Runs fn(i) for i in [0, n) on `threads` workers; results are written by index.
template <class F>
void parallel_for(size_t n, int threads, F&& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    names_.push_back(name);
  }
  void write(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

struct Context {
  const RunConfig& cfg;
  Artifacts& out;
  json summary = json::object();
};

KerrCatSpectrum spectrum_for(const RunConfig& c) {
  return diagonalize_kerr_cat(ModeSpace::for_alpha2(c.alpha2, c.fock_dim), 1.0);
}

// ---------------------------------------------------------------- experiments

void run_spectrum(Context& ctx) {
  const auto& c = ctx.cfg;
  const KerrCatSpectrum spec = spectrum_for(c);
  const ReducedCouplings rc = reduced_couplings(spec);
  json j = spectrum_to_json(spec);
  j["K"] = c.K;
  const double s = c.K / spec.K;
  j["delta0"] = s * spec.splitting(0);
  j["Delta1"] = s * spec.gap(1);
  j["Delta2"] = s * spec.gap(2);
  j["lambda1"] = rc.lambda1;
  j["lambda2"] = rc.lambda2;
  j["eta_me"] = rc.eta_me;
  j["energy_unit"] = "K";
  ctx.out.write("spectrum.json", j);
  ctx.summary = {{"delta0", j["delta0"]}, {"Delta1", j["Delta1"]}, {"Delta2", j["Delta2"]},
                 {"lambda1", rc.lambda1}, {"lambda2", rc.lambda2}, {"eta_me", rc.eta_me}};
}

void run_pulse(Context& ctx) {
  const auto& c = ctx.cfg;
  const KerrCatSpectrum spec = spectrum_for(c);
  const double s = c.K / spec.K;
  std::vector<double> gaps = {s * spec.gap(1), s * spec.gap(2)};
  if (c.gate == GateKind::ZZ) gaps = {s * spec.gap(1), 2.0 * s * spec.gap(1), s * (spec.gap(1) + spec.gap(2))};
  json rows = json::array();
  int idx = 0;
  for (Scheme sc : c.schemes)
    for (double T : c.T) {
      const GateParams p = c.gate_params(sc, T);
      p.validate();
      const PulseShape env = drive_envelope(p, spec);
      const std::string name = "pulse_" + to_string(sc) + "_" + std::to_string(idx++) + ".csv";
      ctx.out.write(name, pulse_csv(env, c.samples));
      json f = json::array();
      for (double g : gaps) f.push_back(std::abs(finite_time_fourier(env, -g, T)));
      rows.push_back({{"scheme", to_string(sc)}, {"T", T}, {"time_unit", time_unit(sc)}, {"file", name},
                      {"gaps", gaps}, {"abs_F_at_gaps", f}, {"peak", env.peak()}});
    }
  ctx.out.write("pulse.json", json{{"gate", to_string(c.gate)}, {"pulses", rows}});
  ctx.summary = {{"pulses", rows.size()}};
}

struct GateJob {
  Scheme scheme;
  double T;
  double kappa1;
};

void run_gate(Context& ctx) {
  const auto& c = ctx.cfg;
  const KerrCatSpectrum spec = spectrum_for(c);
  std::vector<GateJob> jobs;
  for (Scheme s : c.schemes)
    for (double T : c.T)
      for (double k : c.kappa1) jobs.push_back({s, T, k});
  std::vector<GateErrorReport> reps(jobs.size());
  parallel_for(jobs.size(), c.threads, [&](size_t i) {
    NoiseSpec n;
    n.kappa1 = jobs[i].kappa1;
    reps[i] = extract_error_probs(build_gate(c.gate_params(jobs[i].scheme, jobs[i].T), spec), n, c.sim(), true);
  });
  Csv csv({"gate", "scheme", "T", "time_unit", "kappa1", "p_z", "p_x", "p_z_na", "p_x_na", "steps", "delta_theta"});
  json all = json::array();
  for (size_t i = 0; i < jobs.size(); ++i) {
    const auto& r = reps[i];
    csv.add(to_string(c.gate), to_string(jobs[i].scheme), jobs[i].T, time_unit(jobs[i].scheme), jobs[i].kappa1,
            r.p_z, r.p_x, r.p_z_na, r.p_x_na, r.steps, r.delta_theta);
    all.push_back(to_json(r));
  }
  ctx.out.write("gate.csv", csv.str());
  ctx.out.write("gate.json", json{{"reports", all}});
  ctx.summary = {{"points", jobs.size()}};
}

std::map<Scheme, GateCurve> load_or_build_curves(const RunConfig& c, const KerrCatSpectrum& spec, Artifacts* out) {
  std::map<Scheme, GateCurve> curves;
  if (!c.curves_file.empty()) {
    std::ifstream f(c.curves_file);
    if (!f) throw ConfigError("cannot read inputs.curves file " + c.curves_file);
    json j;
    try {
      f >> j;
      for (const auto& e : j.at("curves")) {
        GateCurve g = gate_curve_from_json(e);
        curves[g.scheme()] = g;
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("corrupt curves file: ") + e.what());
    }
    for (Scheme s : c.schemes)
      if (!curves.count(s)) throw ConfigError("curves file lacks scheme " + to_string(s));
    return curves;
  }
  std::vector<std::pair<Scheme, double>> jobs;
  for (Scheme s : c.schemes)
    for (double T : c.T) jobs.push_back({s, T});
  std::vector<GateErrorReport> reps(jobs.size());
  parallel_for(jobs.size(), c.threads, [&](size_t i) {
    reps[i] = extract_error_probs(build_gate(c.gate_params(jobs[i].first, jobs[i].second), spec), NoiseSpec{}, c.sim());
  });
  Csv csv({"gate", "scheme", "T", "time_unit", "p_z_na", "p_x_na"});
  json list = json::array();
  size_t k = 0;
  for (Scheme s : c.schemes) {
    std::vector<double> T, pz, px;
    for (size_t i = 0; i < c.T.size(); ++i, ++k) {
      T.push_back(jobs[k].second);
      pz.push_back(reps[k].p_z);
      px.push_back(reps[k].p_x);
      csv.add(to_string(c.gate), to_string(s), jobs[k].second, time_unit(s), reps[k].p_z, reps[k].p_x);
    }
    std::vector<size_t> order(T.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return T[a] < T[b]; });
    std::vector<double> Ts, zs, xs;
    for (size_t o : order) {
      Ts.push_back(T[o]);
      zs.push_back(pz[o]);
      xs.push_back(px[o]);
    }
    curves[s] = GateCurve(s, Ts, zs, xs);
    list.push_back(to_json(curves[s]));
  }
  if (out) {
    out->write("noiseless.csv", csv.str());
    out->write("curves.json", json{{"gate", to_string(c.gate)}, {"curves", list}});
  }
  return curves;
}

void run_gate_sweep(Context& ctx) {
  const auto& c = ctx.cfg;
  const KerrCatSpectrum spec = spectrum_for(c);
  const auto curves = load_or_build_curves(c, spec, &ctx.out);
  Csv csv({"gate", "scheme", "kappa1", "T", "time_unit", "p_z", "p_x"});
  Csv opt({"gate", "scheme", "kappa1", "T_star", "time_unit", "p_z_star", "on_boundary", "unimodal"});
  json res = json::array();
  for (Scheme s : c.schemes) {
    SweepConfig sc;
    sc.base = c.gate_params(s, 1.0);
    sc.kappa1 = c.kappa1;
    sc.sim = c.sim();
    if (c.bracket_points >= 5) {
      const GateCurve& curve = curves.at(s);
      const double beta = loss_beta(c.gate);
      const double a2 = c.alpha2, ratio = c.bracket_ratio;
      const int n = c.bracket_points;
      sc.grid_for = [&curve, beta, a2, ratio, n](double k1) {
        return bracket_grid(model_t_star(curve, k1, a2, beta), n, ratio);
      };
    } else {
      sc.T_grid = c.T;
    }
    const SweepResult r = sweep_gate_time(spec, sc);
    for (const auto& p : r.points) csv.add(to_string(c.gate), to_string(s), p.kappa1, p.T, time_unit(s), p.p_z, p.p_x);
    json optima = json::array();
    for (const auto& o : r.optima) {
      opt.add(to_string(c.gate), to_string(s), o.kappa1, o.T_star, time_unit(s), o.p_z_star, o.on_boundary, o.unimodal);
      optima.push_back({{"kappa1", o.kappa1}, {"T_star", o.T_star}, {"p_z_star", o.p_z_star},
                        {"on_boundary", o.on_boundary}, {"unimodal", o.unimodal}});
    }
    res.push_back({{"scheme", to_string(s)}, {"exponent", r.exponent}, {"prefactor", r.prefactor},
                   {"time_unit", time_unit(s)}, {"optima", optima}});
  }
  ctx.out.write("sweep.csv", csv.str());
  ctx.out.write("sweep_optima.csv", opt.str());
  ctx.out.write("sweep.json", json{{"gate", to_string(c.gate)}, {"schemes", res}});
  ctx.summary = {{"schemes", res.size()}};
}

void run_tomography(Context& ctx) {
  const auto& c = ctx.cfg;
  const KerrCatSpectrum spec = spectrum_for(c);
  Csv csv({"gate", "scheme", "T", "time_unit", "kappa1", "chi_z_weight", "chi_x_weight", "p_z_state", "chi_min_eig",
           "condition_number"});
  json list = json::array();
  int idx = 0;
  for (Scheme s : c.schemes)
    for (double T : c.T)
      for (double k : c.kappa1) {
        NoiseSpec n;
        n.kappa1 = k;
        const GateModel m = build_gate(c.gate_params(s, T), spec);
        const ChiMatrix chi = process_tomography(m, n, c.sim());
        const GateErrorReport r = extract_error_probs(m, n, c.sim());
        const double min_eig = min_eigenvalue(hermitian_part(chi.chi));
        const std::string name = "chi_" + to_string(s) + "_" + std::to_string(idx++) + ".json";
        std::vector<std::pair<double, std::string>> diag;
        for (int i = 0; i < chi.chi.rows(); ++i) diag.push_back({chi.chi(i, i).real(), pauli_label(i, chi.modes)});
        std::sort(diag.begin(), diag.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        json dj = json::array();
        for (const auto& [v, l] : diag) dj.push_back({{"pauli", l}, {"value", v}});
        ctx.out.write(name, json{{"scheme", to_string(s)}, {"T", T}, {"kappa1", k}, {"chi", matrix_to_json(chi.chi)},
                                 {"diagonal", dj}, {"condition_number", chi.condition_number}});
        csv.add(to_string(c.gate), to_string(s), T, time_unit(s), k, chi.z_weight(), chi.x_weight(), r.p_z, min_eig,
                chi.condition_number);
        list.push_back(name);
      }
  ctx.out.write("tomography.csv", csv.str());
  ctx.summary = {{"chi_files", list}};
}

struct McJob {
  Scheme scheme;
  double eta, kappa1, T;
  int d;
  CircuitErrorModel errors;
};

void run_qec_mc(Context& ctx) {
  const auto& c = ctx.cfg;
  std::map<Scheme, GateCurve> curves;
  if (c.curves_file.empty()) {
    const KerrCatSpectrum spec = spectrum_for(c);
    curves = load_or_build_curves(c, spec, &ctx.out);
  } else {
    curves = load_or_build_curves(c, KerrCatSpectrum{}, nullptr);
  }
  Csv csv({"scheme", "eta", "kappa1", "T_cx", "time_unit", "d", "p0", "shots", "failures", "p_lz", "ci_lo", "ci_hi",
           "p_lx", "p_l"});
  for (Scheme s : c.schemes)
    for (double e : c.eta)
      for (double k : c.kappa1) {
        const double T = e * cx_t_star(s, k, c.alpha2, &curves.at(s));
        const CircuitErrorModel em = circuit_model_from_curve(curves.at(s), k, c.alpha2, T);
        for (int d : c.distances) {
          const LogicalRate r = logical_error_rate(d, em, c.mc());
          csv.add(to_string(s), e, k, T, time_unit(s), d, em.p0, r.shots, r.failures, r.p_lz, r.ci.lo, r.ci.hi,
                  r.p_lx, r.total());
        }
      }
  ctx.out.write("qec_mc.csv", csv.str());
  ctx.summary = {{"p_lx_rule", "union bound d(d+1) p_x"}, {"seed", c.seed}};
}

json build_surrogates(Context& ctx, std::map<Scheme, LogicalSurrogate>& out_map) {
  const auto& c = ctx.cfg;
  std::map<Scheme, GateCurve> curves;
  if (c.curves_file.empty()) {
    const KerrCatSpectrum spec = spectrum_for(c);
    curves = load_or_build_curves(c, spec, &ctx.out);
  } else {
    curves = load_or_build_curves(c, KerrCatSpectrum{}, nullptr);
  }
  Csv csv({"scheme", "eta", "kappa1", "T_cx", "time_unit", "d", "p0", "shots", "failures", "p_lz", "ci_lo", "ci_hi",
           "used_in_fit"});
  json bundle = json::array();
  for (Scheme s : c.schemes) {
    SurrogateConfig sc;
    sc.eta = c.eta;
    sc.kappa1 = c.kappa1;
    sc.d = c.distances;
    sc.mc = c.mc();
    sc.min_failures = c.min_failures;
    const SurrogateBuild b = fit_logical_surrogate(s, curves.at(s), c.alpha2, sc);
    for (const auto& x : b.samples)
      csv.add(to_string(s), x.eta, x.kappa1, x.T, time_unit(s), x.rate.d, x.errors.p0, x.rate.shots, x.rate.failures,
              x.rate.p_lz, x.rate.ci.lo, x.rate.ci.hi, x.used);
    out_map[s] = b.surrogate;
    bundle.push_back(to_json(b.surrogate));
  }
  ctx.out.write("qec_fit.csv", csv.str());
  json j = {{"surrogates", bundle}, {"seed", c.seed}, {"p_lx_rule", "union bound d(d+1) p_x"}};
  ctx.out.write("fits.json", j);
  return j;
}

void run_qec_fit(Context& ctx) {
  std::map<Scheme, LogicalSurrogate> m;
  const json j = build_surrogates(ctx, m);
  json s = json::array();
  for (const auto& e : j.at("surrogates")) s.push_back({{"scheme", e.at("scheme")}, {"eta", e.at("eta")}, {"fits", e.at("fits")}});
  ctx.summary = {{"fits", s}};
}

void run_optimize(Context& ctx) {
  const auto& c = ctx.cfg;
  std::map<Scheme, LogicalSurrogate> sur;
  if (!c.surrogates_file.empty()) {
    std::ifstream f(c.surrogates_file);
    if (!f) throw ConfigError("cannot read inputs.surrogates file " + c.surrogates_file);
    try {
      json j;
      f >> j;
      for (const auto& e : j.at("surrogates")) {
        LogicalSurrogate s = logical_surrogate_from_json(e);
        sur[s.scheme] = s;
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("corrupt surrogates file: ") + e.what());
    }
    for (Scheme s : c.schemes)
      if (!sur.count(s)) throw ConfigError("surrogates file lacks scheme " + to_string(s));
  } else {
    build_surrogates(ctx, sur);
  }
  Csv csv({"scheme", "kappa1", "p_l_star", "d_star", "T_star", "time_unit", "on_boundary", "mc_p_l", "mc_ci_lo",
           "mc_ci_hi", "mc_shots"});
  json rows = json::array();
  for (Scheme s : c.schemes)
    for (double k : c.kappa1) {
      const LogicalSurrogate& sg = sur.at(s);
      const LogicalOptimum o = optimize_logical(k, sg, optimizer_t_grid(sg, k, c.opt_points), c.opt_distances);
      const LogicalRate v = validate_optimum(o, sg, c.mc());
      csv.add(to_string(s), k, o.p_l, o.d, o.T, time_unit(s), o.on_boundary, v.total(), v.ci.lo + v.p_lx,
              v.ci.hi + v.p_lx, v.shots);
      json r = to_json(o);
      r["scheme"] = to_string(s);
      r["mc_p_l"] = v.total();
      rows.push_back(r);
    }
  ctx.out.write("optimize.csv", csv.str());
  ctx.out.write("optimize.json", json{{"optima", rows}});
  ctx.summary = {{"optima", rows}};
}

// ---------------------------------------------------------------- commands

int cmd_run(const std::string& config_path, const std::string& experiment, int threads_override,
            const std::string& out_override) {
  json raw;
  RunConfig cfg;
  try {
    std::ifstream f(config_path);
    if (!f) throw ConfigError("cannot read config " + config_path);
    try {
      f >> raw;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!experiment.empty()) raw["experiment"] = experiment;
    cfg = parse_config(raw);
    if (threads_override > 0) cfg.threads = threads_override;
    validate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "catgates: invalid config: " << e.what() << "\n";
    return 2;
  }
  std::string dir = out_override;
  if (dir.empty()) dir = cfg.output_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputEnv);
    dir = env ? env : "catgates_out";
  }
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Artifacts out(dir);
    Context ctx{cfg, out};
    const std::string& e = cfg.experiment;
    if (e == "spectrum") run_spectrum(ctx);
    else if (e == "pulse") run_pulse(ctx);
    else if (e == "gate") run_gate(ctx);
    else if (e == "gate-sweep") run_gate_sweep(ctx);
    else if (e == "tomography") run_tomography(ctx);
    else if (e == "qec-mc") run_qec_mc(ctx);
    else if (e == "qec-fit") run_qec_fit(ctx);
    else if (e == "optimize") run_optimize(ctx);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest = {{"tool", "catgates"},
                     {"version", kVersion},
                     {"experiment", e},
                     {"config", raw},
                     {"config_hash", config_hash(raw)},
                     {"seed", cfg.seed},
                     {"threads", cfg.threads},
                     {"time_units", {{"kerr", "1/K"}, {"dissipative", "1/kappa2"}}},
                     {"wall_time_s", wall},
                     {"artifacts", out.names()},
                     {"summary", ctx.summary}};
    out.write("manifest.json", manifest);
    std::cout << e << ": wrote " << out.names().size() << " artifacts to " << out.dir().string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "catgates: invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "catgates: invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "catgates: numerical failure: " << e.what() << "\n";
    return 3;
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

void print_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return;
  std::vector<size_t> w;
  for (const auto& r : rows)
    for (size_t i = 0; i < r.size(); ++i) {
      if (w.size() <= i) w.push_back(0);
      w[i] = std::max(w[i], r[i].size());
    }
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) std::cout << std::left << std::setw(static_cast<int>(w[i]) + 2) << r[i];
    std::cout << "\n";
  }
}

std::vector<std::vector<std::string>> select(const std::vector<std::vector<std::string>>& rows,
                                             const std::vector<std::string>& cols) {
  std::vector<std::vector<std::string>> out;
  if (rows.empty()) return out;
  std::vector<size_t> idx;
  for (const auto& c : cols) {
    auto it = std::find(rows[0].begin(), rows[0].end(), c);
    if (it == rows[0].end()) throw std::runtime_error("artifact lacks column " + c);
    idx.push_back(static_cast<size_t>(it - rows[0].begin()));
  }
  for (const auto& r : rows) {
    std::vector<std::string> s;
    for (size_t i : idx) s.push_back(i < r.size() ? r[i] : "");
    out.push_back(s);
  }
  return out;
}

int cmd_report(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root) || fs::is_empty(root)) {
    std::cout << "no results in " << dir << "\n";
    return 0;
  }
  const fs::path mpath = root / "manifest.json";
  if (!fs::exists(mpath)) {
    std::cerr << "catgates: " << dir << " holds no manifest; refusing unmanifested data\n";
    return 2;
  }
  json m;
  try {
    std::ifstream f(mpath);
    f >> m;
    m.at("experiment");
    m.at("artifacts");
  } catch (const std::exception& e) {
    std::cerr << "catgates: corrupt manifest: " << e.what() << "\n";
    return 2;
  }
  const std::string e = m["experiment"];
  std::cout << "experiment " << e << "  version " << m.value("version", "?") << "  config " << m.value("config_hash", "?")
            << "  seed " << m.value("seed", 0) << "  wall " << std::setprecision(3) << m.value("wall_time_s", 0.0)
            << " s\n\n";
  try {
    if (e == "spectrum") {
      for (const auto& [k, v] : m.at("summary").items()) std::cout << std::left << std::setw(10) << k << v << "\n";
    } else if (e == "gate") {
      print_table(select(read_csv(root / "gate.csv"), {"scheme", "T", "kappa1", "p_z", "p_x", "p_z_na", "p_x_na"}));
    } else if (e == "gate-sweep") {
      print_table(select(read_csv(root / "sweep_optima.csv"), {"scheme", "kappa1", "T_star", "p_z_star", "on_boundary"}));
      std::ifstream f(root / "sweep.json");
      json j;
      f >> j;
      std::cout << "\n";
      for (const auto& s : j.at("schemes"))
        std::cout << "P*_z ~ kappa1^p  " << s.at("scheme").get<std::string>() << "  p = " << s.at("exponent") << "\n";
    } else if (e == "tomography") {
      for (const auto& name : m.at("summary").at("chi_files")) {
        std::ifstream f(root / name.get<std::string>());
        json j;
        f >> j;
        std::cout << j.at("scheme").get<std::string>() << " T=" << j.at("T") << " kappa1=" << j.at("kappa1") << "\n";
        std::vector<std::vector<std::string>> rows = {{"pauli", "chi"}};
        const auto& diag = j.at("diagonal");
        for (size_t i = 0; i < diag.size() && i < 5; ++i)
          rows.push_back({diag[i].at("pauli").get<std::string>(), diag[i].at("value").dump()});
        print_table(rows);
        std::cout << "\n";
      }
    } else if (e == "qec-mc") {
      print_table(select(read_csv(root / "qec_mc.csv"), {"scheme", "eta", "kappa1", "d", "shots", "p_lz", "p_lx", "p_l"}));
    } else if (e == "qec-fit") {
      for (const auto& s : m.at("summary").at("fits")) std::cout << s.dump() << "\n";
    } else if (e == "optimize") {
      print_table(select(read_csv(root / "optimize.csv"), {"scheme", "kappa1", "p_l_star", "d_star", "T_star", "mc_p_l"}));
    } else {
      for (const auto& a : m.at("artifacts")) std::cout << a.get<std::string>() << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "catgates: corrupt artifacts: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias-preserving gates on Kerr-cat qubits: simulation and QEC benchmarking"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config, experiment, out_dir, report_dir;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("-c,--config", config, "JSON run config")->required();
  run->add_option("-e,--experiment", experiment, "Experiment kind (overrides the config)");
  run->add_option("--threads", threads, "Worker threads (overrides numerics.threads)")->check(CLI::PositiveNumber);
  run->add_option("-o,--output-dir", out_dir,
                  std::string("Artifact directory (default: config output_dir, then $") + kOutputEnv + ")");
  auto* report = app.add_subcommand("report", "Summarize the artifacts of a run");
  report->add_option("dir", report_dir, "Artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*run) return cmd_run(config, experiment, threads, out_dir);
  return cmd_report(report_dir);
}
