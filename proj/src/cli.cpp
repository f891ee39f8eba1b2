#include "ellipspin/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "ellipspin/elliptic.hpp"
#include "ellipspin/error.hpp"
#include "ellipspin/heun.hpp"
#include "ellipspin/observables.hpp"
#include "ellipspin/wigner.hpp"

namespace ellipspin::cli {

ConfigError::ConfigError(const std::string& what, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

bool Scenario::wants(std::string_view output) const {
  return std::find(outputs.begin(), outputs.end(), output) != outputs.end();
}

namespace {

struct Entry {
  std::string value;
  int line;
  int key_col;
  int value_col;
};

std::string_view trim(std::string_view s, int* lead = nullptr) {
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  std::size_t e = s.size();
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (lead) *lead = static_cast<int>(b);
  return s.substr(b, e - b);
}

const std::vector<std::string_view> kKnownKeys{
    "k",           "h_over_omega", "delta_over_omega", "tau_max",     "n_samples",   "tol",
    "spin_j",      "initial_re1",  "initial_im1",      "initial_re2", "initial_im2", "outputs",
    "g",           "h0_tesla",     "H0_tesla",         "omega_rad_s", "k_values",    "delta_values",
    "h_values",    "max_runs"};

const std::vector<std::string_view> kOutputs{"trajectory", "probability", "polarization", "heun_check", "wigner"};

double parse_real(std::string_view text, int line, int column) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("expected a real number, got '" + std::string(text) + "'", line, column);
  }
  return v;
}

template <class F>
void for_each_item(const Entry& e, F&& f) {
  std::string_view rest = e.value;
  int offset = 0;
  while (true) {
    const auto comma = rest.find(',');
    const auto piece = rest.substr(0, comma);
    int lead = 0;
    const auto item = trim(piece, &lead);
    if (item.empty()) throw ConfigError("empty list item", e.line, e.value_col + offset + lead);
    f(item, e.value_col + offset + lead);
    if (comma == std::string_view::npos) break;
    offset += static_cast<int>(comma) + 1;
    rest = rest.substr(comma + 1);
  }
}

std::vector<double> parse_list(const Entry& e) {
  std::vector<double> out;
  for_each_item(e, [&](std::string_view item, int col) { out.push_back(parse_real(item, e.line, col)); });
  return out;
}

SpinState read_initial(const std::map<std::string, Entry, std::less<>>& entries) {
  auto get = [&](std::string_view key, double fallback) {
    const auto it = entries.find(key);
    return it == entries.end() ? fallback : parse_real(it->second.value, it->second.line, it->second.value_col);
  };
  return {cplx(get("initial_re1", 1.0), get("initial_im1", 0.0)),
          cplx(get("initial_re2", 0.0), get("initial_im2", 0.0))};
}

void check_row(std::ostream& out, const std::string& name, double value, double limit, std::vector<std::string>& failed) {
  const bool pass = value < limit;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-38s max %.3e  limit %.1e  %s\n", name.c_str(), value, limit, pass ? "PASS" : "FAIL");
  out << buf;
  if (!pass) failed.push_back(name);
}

using Check = std::function<double()>;

struct NamedCheck {
  std::string name;
  double limit;
  Check run;
};

std::vector<SimParams> param_sets(unsigned seed, int n, double k_lo, double k_hi) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> h(0.05, 0.6), d(-0.4, 0.4), k(k_lo, k_hi);
  std::vector<SimParams> out;
  for (int i = 0; i < n; ++i) {
    const double hv = h(g), dv = d(g), kv = k(g);
    out.push_back(SimParams::from_detuning(hv, dv, kv));
  }
  return out;
}

std::vector<NamedCheck> invariant_checks(double tol) {
  std::vector<NamedCheck> checks;
  auto sets = std::make_shared<std::vector<Trajectory>>();
  const auto params = param_sets(11, 10, 0.0, 0.95);
  auto trajectories = [sets, params, tol]() -> const std::vector<Trajectory>& {
    if (sets->empty()) {
      const auto grid = uniform_grid(50.0, 501);
      for (const auto& p : params) sets->push_back(evolve({1.0, 0.0}, p, grid, tol));
    }
    return *sets;
  };
  checks.push_back({"norm drift (tau <= 50)", 1e-8, [=] {
                      double worst = 0;
                      for (const auto& t : trajectories())
                        for (const auto& s : t.samples) worst = std::max(worst, std::abs(s.lab_state.norm() - 1.0));
                      return worst;
                    }});
  checks.push_back({"four-vector conservation laws", 1e-8, [=] {
                      double worst = 0;
                      const auto& ts = trajectories();
                      for (std::size_t i = 0; i < ts.size(); ++i)
                        for (const auto& s : ts[i].samples)
                          worst = std::max(worst, four_vector_residuals(s.tau, params[i], s.rot_state,
                                                                        rotating_rhs(s.tau, params[i], s.rot_state))
                                                      .max());
                      return worst;
                    }});
  checks.push_back({"second-order phi2 equation", 1e-8, [tol] {
                      double worst = 0;
                      std::mt19937_64 g(23);
                      std::uniform_real_distribution<double> tau(0.0, 20.0);
                      for (const auto& p : param_sets(13, 5, 0.0, 0.95))
                        for (int i = 0; i < 10; ++i) worst = std::max(worst, lame_residual(p, tau(g), tol));
                      return worst;
                    }});
  checks.push_back({"resonant flip independent of k", 1e-8, [tol] {
                      double worst = 0;
                      const auto grid = uniform_grid(20.0, 2000);
                      for (double k : {0.0, 0.3, 0.7, 0.99}) {
                        const auto t = evolve({1.0, 0.0}, SimParams::from_detuning(0.25, 0.0, k), grid, tol);
                        for (const auto& s : t.samples) {
                          const double sn = std::sin(0.25 * s.tau);
                          worst = std::max(worst, std::abs(s.p_flip - sn * sn));
                        }
                      }
                      return worst;
                    }});
  checks.push_back({"Rabi limit", 1e-8, [tol] {
                      const auto p = SimParams::from_detuning(0.3, 0.4, 0.0);
                      const auto t = evolve({1.0, 0.0}, p, uniform_grid(20.0, 2000), tol);
                      double worst = 0;
                      for (const auto& s : t.samples) worst = std::max(worst, std::abs(s.p_flip - rabi_probability(s.tau, p)));
                      return worst;
                    }});
  checks.push_back({"Bloch equation, resonant closed form", 1e-5, [] {
                      double worst = 0;
                      for (double k : {0.0, 0.5, 0.9}) {
                        const auto p = SimParams::from_detuning(0.25, 0.0, k);
                        std::vector<double> taus;
                        std::vector<Polarization> pols;
                        for (int i = 0; i <= 10000; ++i) {
                          taus.push_back(1e-3 * i);
                          pols.push_back(resonance_polarization(taus.back(), p));
                        }
                        worst = std::max(worst, bloch_residual(taus, pols, p));
                      }
                      return worst;
                    }});
  return checks;
}

std::vector<NamedCheck> heun_checks(double tol) {
  std::vector<NamedCheck> checks;
  checks.push_back({"singular coefficient sum", 1e-12, [] {
                      double worst = 0;
                      for (const auto& p : param_sets(17, 100, 0.05, 0.95)) {
                        const auto c = heun::algebraic_coefficients(p);
                        worst = std::max(worst, std::abs(c.c1 + c.c2 + c.c3));
                      }
                      return worst;
                    }});
  checks.push_back({"Fuchs relation, all selections", 1e-12, [] {
                      double worst = 0;
                      for (const auto& p : param_sets(19, 100, 0.05, 0.95))
                        for (const auto sel : heun::ExponentSelection::all()) {
                          const auto d = heun::heun_parameters(p, sel);
                          worst = std::max(worst, std::abs(d.gamma + d.delta + d.epsilon - d.alpha - d.beta - 1.0));
                        }
                      return worst;
                    }});
  checks.push_back({"Heun flip probability vs ODE", 1e-6, [tol] {
                      double worst = 0;
                      for (double k : {0.3, 0.5, 0.7})
                        for (double d : {0.0, 0.05, 0.1})
                          for (double tau : {0.5, 1.0, 2.0, 5.0, 10.0}) {
                            const auto p = SimParams::from_detuning(0.2, d, k);
                            const std::vector<double> grid{0.0, tau};
                            const double ode = evolve({1.0, 0.0}, p, grid, tol).samples.back().p_flip;
                            worst = std::max(worst, std::abs(heun::flip_probability_heun(tau, p) - ode));
                          }
                      return worst;
                    }});
  return checks;
}

std::vector<NamedCheck> wigner_checks(double tol) {
  std::vector<NamedCheck> checks;
  struct Case {
    SimParams p;
    double tau;
    Propagator u;
    double p_flip;
  };
  auto cases = std::make_shared<std::vector<Case>>();
  auto get = [cases, tol]() -> const std::vector<Case>& {
    if (cases->empty()) {
      std::mt19937_64 g(29);
      std::uniform_real_distribution<double> tau(0.5, 20.0);
      for (const auto& p : param_sets(31, 20, 0.0, 0.95)) {
        const double t = tau(g);
        const std::vector<double> grid{0.0, t};
        cases->push_back({p, t, propagator(t, p, tol), evolve({1.0, 0.0}, p, grid, tol).samples.back().p_flip});
      }
    }
    return *cases;
  };
  checks.push_back({"propagator unitarity", 1e-9, [=] {
                      double worst = 0;
                      for (const auto& c : get()) worst = std::max(worst, c.u.unitarity_error());
                      return worst;
                    }});
  checks.push_back({"sin^2(theta/2) vs flip probability", 1e-8, [=] {
                      double worst = 0;
                      for (const auto& c : get()) {
                        const double s = std::sin(0.5 * euler_angles(c.u).theta);
                        worst = std::max(worst, std::abs(s * s - c.p_flip));
                      }
                      return worst;
                    }});
  checks.push_back({"spin-1/2 rotation rebuilds U", 1e-8, [=] {
                      double worst = 0;
                      for (const auto& c : get()) {
                        const auto d = wigner_d(0.5, euler_angles(c.u));
                        worst = std::max({worst, std::abs(d(0, 0) - c.u.u11), std::abs(d(0, 1) - c.u.u12),
                                          std::abs(d(1, 0) - c.u.u21), std::abs(d(1, 1) - c.u.u22)});
                      }
                      return worst;
                    }});
  checks.push_back({"spin-J row sums and closed form", 1e-10, [=] {
                      double worst = 0;
                      for (const auto& c : get()) {
                        const auto e = euler_angles(c.u);
                        for (double j : {0.5, 1.0, 1.5, 2.0, 5.0}) {
                          const auto d = wigner_d(j, e);
                          worst = std::max(worst, d.unitarity_error());
                          for (int r = 0; r < d.dim; ++r) {
                            double row = 0;
                            for (int col = 0; col < d.dim; ++col) {
                              const double prob = transition_probability_j(j, j - r, j - col, e.theta);
                              worst = std::max(worst, std::abs(prob - std::norm(d(r, col))));
                              row += prob;
                            }
                            worst = std::max(worst, std::abs(row - 1.0));
                          }
                        }
                      }
                      return worst;
                    }});
  return checks;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_number(v);
    first = false;
  }
  out << '\n';
}

void heun_report(const Scenario& s, const Trajectory& traj, std::ostream& report) {
  if (!(s.params.k > 0.0 && s.params.k < 1.0) || std::abs(s.initial.psi1 - 1.0) > 0 || std::abs(s.initial.psi2) > 0) {
    report << "heun_check: skipped (needs 0 < k < 1 and initial state (1, 0))\n";
    return;
  }
  double worst = 0;
  for (const auto& smp : traj.samples) {
    worst = std::max(worst, std::abs(heun::flip_probability_heun(smp.tau, s.params) - smp.p_flip));
  }
  report << "heun_check: max |p_heun - p_ode| = " << format_number(worst) << '\n';
}

void wigner_report(const Scenario& s, std::ostream& report) {
  const auto u = propagator(s.tau_max, s.params, s.tol);
  const auto e = euler_angles(u);
  report << "wigner: tau = " << format_number(s.tau_max) << ", phi = " << format_number(e.phi)
         << ", theta = " << format_number(e.theta) << ", psi = " << format_number(e.psi) << '\n';
  report << "m,m_prime,probability\n";
  const int dim = static_cast<int>(std::lround(2 * s.spin_j)) + 1;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      const double m = s.spin_j - r, mp = s.spin_j - c;
      write_row(report, {m, mp, transition_probability_j(s.spin_j, m, mp, e.theta)});
    }
}

}  // namespace

Scenario parse_config(std::string_view text, std::ostream& warnings) {
  std::map<std::string, Entry, std::less<>> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    int lead = 0;
    if (trim(raw, &lead).empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, lead + 1);
    int key_lead = 0, val_lead = 0;
    const auto key = trim(raw.substr(0, eq), &key_lead);
    const auto value = trim(raw.substr(eq + 1), &val_lead);
    const int key_col = key_lead + 1;
    const int val_col = static_cast<int>(eq) + 2 + val_lead;
    if (key.empty()) throw ConfigError("missing key", line_no, key_col);
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw ConfigError("unknown key '" + std::string(key) + "'", line_no, key_col);
    }
    if (value.empty()) throw ConfigError("missing value for '" + std::string(key) + "'", line_no, val_col);
    if (entries.count(key)) throw ConfigError("duplicate key '" + std::string(key) + "'", line_no, key_col);
    entries.emplace(std::string(key), Entry{std::string(value), line_no, key_col, val_col});
  }

  auto real = [&](std::string_view key) -> std::optional<double> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    return parse_real(it->second.value, it->second.line, it->second.value_col);
  };
  auto where = [&](std::string_view key) {
    const auto it = entries.find(key);
    return it == entries.end() ? std::pair{line_no, 1} : std::pair{it->second.line, it->second.value_col};
  };
  auto fail_at = [&](std::string_view key, const std::string& msg) -> ConfigError {
    const auto [l, c] = where(key);
    return ConfigError(msg, l, c);
  };

  Scenario s;
  s.params.k = real("k").value_or(0.0);
  if (!(s.params.k >= 0.0 && s.params.k <= 1.0)) throw fail_at("k", "k must lie in [0, 1]");

  const std::array<std::string_view, 4> physical{"g", "h0_tesla", "H0_tesla", "omega_rad_s"};
  const auto n_physical = std::count_if(physical.begin(), physical.end(), [&](auto key) { return entries.count(key) > 0; });
  std::optional<double> h = real("h_over_omega");
  std::optional<double> delta = real("delta_over_omega");
  if (n_physical > 0) {
    if (n_physical != 4) throw fail_at(physical[0], "physical parameters need all of g, h0_tesla, H0_tesla, omega_rad_s");
    SimParams derived;
    try {
      derived = derive_parameters(*real("g"), *real("h0_tesla"), *real("H0_tesla"), *real("omega_rad_s"));
    } catch (const std::exception& e) {
      throw fail_at("omega_rad_s", e.what());
    }
    if (h) {
      warnings << "warning: h_over_omega overrides the value derived from h0_tesla\n";
    } else {
      h = derived.h_over_omega;
    }
    if (delta) {
      warnings << "warning: delta_over_omega overrides the value derived from H0_tesla\n";
    } else {
      delta = derived.delta_over_omega();
    }
  }
  if (!h) {
    if (const auto it = entries.find("h_values"); it != entries.end()) h = parse_list(it->second).front();
  }
  if (!h) throw fail_at("h_over_omega", "h_over_omega is required");
  s.params.h_over_omega = *h;
  s.params.H_over_omega = delta.value_or(0.0) + 0.5;

  if (!entries.count("tau_max")) throw fail_at("tau_max", "tau_max is required");
  s.tau_max = *real("tau_max");
  if (!(s.tau_max > 0.0)) throw fail_at("tau_max", "tau_max must be > 0");

  if (!entries.count("n_samples")) throw fail_at("n_samples", "n_samples is required");
  {
    const auto& e = entries.at("n_samples");
    long long n = 0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, n);
    if (ec != std::errc() || ptr != end) throw ConfigError("n_samples must be an integer", e.line, e.value_col);
    if (n < 2 || n > 100'000'000) throw ConfigError("n_samples must be at least 2", e.line, e.value_col);
    s.n_samples = static_cast<int>(n);
  }

  s.tol = real("tol").value_or(kDefaultTolerance);
  if (!(s.tol > 0.0 && s.tol <= 1e-4)) throw fail_at("tol", "tol must lie in (0, 1e-4]");

  s.spin_j = real("spin_j").value_or(0.5);
  if (s.spin_j < 0.5 || s.spin_j > kMaxSpin || std::abs(2 * s.spin_j - std::round(2 * s.spin_j)) > 0) {
    throw fail_at("spin_j", "spin_j must be a half-integer in [1/2, 25]");
  }

  s.initial = read_initial(entries);
  if (std::abs(s.initial.norm() - 1.0) > 1e-12) {
    throw fail_at(entries.count("initial_re1") ? "initial_re1" : "initial_re2", "initial state must be normalized");
  }

  if (const auto it = entries.find("outputs"); it != entries.end()) {
    s.outputs.clear();
    for_each_item(it->second, [&](std::string_view item, int col) {
      if (std::find(kOutputs.begin(), kOutputs.end(), item) == kOutputs.end()) {
        throw ConfigError("unknown output '" + std::string(item) + "'", it->second.line, col);
      }
      s.outputs.emplace_back(item);
    });
  }

  if (const auto it = entries.find("k_values"); it != entries.end()) {
    s.k_values = parse_list(it->second);
    for (double k : s.k_values)
      if (!(k >= 0.0 && k <= 1.0)) throw fail_at("k_values", "k values must lie in [0, 1]");
  }
  if (const auto it = entries.find("delta_values"); it != entries.end()) s.delta_values = parse_list(it->second);
  if (const auto it = entries.find("h_values"); it != entries.end()) s.h_values = parse_list(it->second);
  if (const auto v = real("max_runs")) {
    if (!(*v >= 1.0) || *v != std::floor(*v)) throw fail_at("max_runs", "max_runs must be a positive integer");
    s.max_runs = static_cast<std::size_t>(*v);
  }
  return s;
}

Scenario load_config(const std::string& path, std::ostream& warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'", 0, 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), warnings);
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double initial_norm) {
  out << "tau,re_psi1,im_psi1,re_psi2,im_psi2,p_flip,px,py,pz,norm_drift\n";
  for (const auto& s : traj.samples) {
    const auto& st = s.lab_state;
    write_row(out, {s.tau, st.psi1.real(), st.psi1.imag(), st.psi2.real(), st.psi2.imag(), s.p_flip,
                    s.polarization.px, s.polarization.py, s.polarization.pz, st.norm() - initial_norm});
  }
}

int cmd_simulate(const Scenario& s, std::ostream& csv, std::ostream& report) {
  try {
    const auto traj = evolve(s.initial, s.params, uniform_grid(s.tau_max, s.n_samples), s.tol);
    write_trajectory_csv(csv, traj, s.initial.norm());
    if (s.wants("heun_check")) heun_report(s, traj, report);
    if (s.wants("wigner")) wigner_report(s, report);
  } catch (const IntegrationError& e) {
    report << "error: integration failed, last good tau = " << format_number(e.last_good_tau()) << ": " << e.what()
           << '\n';
    return kRuntimeError;
  } catch (const std::runtime_error& e) {
    report << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

unsigned sweep_threads(std::size_t runs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ELLIPSPIN_THREADS")) {
    unsigned v = 0;
    const std::string_view sv(env);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec == std::errc() && ptr == sv.data() + sv.size() && v > 0) n = v;
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(runs, 1)));
}

int cmd_sweep(const Scenario& s, std::ostream& csv, std::ostream& report) {
  const auto ks = s.k_values.empty() ? std::vector<double>{s.params.k} : s.k_values;
  const auto ds = s.delta_values.empty() ? std::vector<double>{s.params.delta_over_omega()} : s.delta_values;
  const auto hs = s.h_values.empty() ? std::vector<double>{s.params.h_over_omega} : s.h_values;
  const std::size_t runs = ks.size() * ds.size() * hs.size();
  if (runs > s.max_runs) {
    report << "error: sweep needs " << runs << " runs, cap is " << s.max_runs << '\n';
    return kConfigError;
  }
  const auto grid = uniform_grid(s.tau_max, s.n_samples);
  std::vector<std::vector<double>> results(runs);
  std::vector<std::string> errors(runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      const std::size_t ih = i % hs.size();
      const std::size_t id = (i / hs.size()) % ds.size();
      const std::size_t ik = i / (hs.size() * ds.size());
      try {
        const auto t = evolve(s.initial, SimParams::from_detuning(hs[ih], ds[id], ks[ik]), grid, s.tol);
        auto& r = results[i];
        r.reserve(t.samples.size());
        for (const auto& smp : t.samples) r.push_back(smp.p_flip);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = sweep_threads(runs);
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < runs; ++i) {
    if (!errors[i].empty()) {
      report << "error: run " << i << " failed: " << errors[i] << '\n';
      return kRuntimeError;
    }
  }
  csv << "k,delta_over_omega,h_over_omega,tau,p_flip\n";
  for (std::size_t i = 0; i < runs; ++i) {
    const double k = ks[i / (hs.size() * ds.size())];
    const double d = ds[(i / hs.size()) % ds.size()];
    const double h = hs[i % hs.size()];
    for (std::size_t j = 0; j < grid.size(); ++j) write_row(csv, {k, d, h, grid[j], results[i][j]});
  }
  return kOk;
}

int cmd_verify(const std::string& suite, double tol, std::ostream& out) {
  std::vector<NamedCheck> checks;
  auto add = [&](std::vector<NamedCheck> more) { checks.insert(checks.end(), more.begin(), more.end()); };
  if (suite == "invariants" || suite == "all") add(invariant_checks(tol));
  if (suite == "heun" || suite == "all") add(heun_checks(tol));
  if (suite == "wigner" || suite == "all") add(wigner_checks(tol));
  if (checks.empty()) {
    out << "unknown suite '" << suite << "'\n";
    return kConfigError;
  }
  std::vector<std::string> failed;
  for (const auto& c : checks) {
    double value = 0;
    try {
      value = c.run();
    } catch (const std::exception& e) {
      out << c.name << ": " << e.what() << '\n';
      value = std::numeric_limits<double>::infinity();
    }
    check_row(out, c.name, value, c.limit, failed);
  }
  if (failed.empty()) {
    out << "verify " << suite << ": " << checks.size() << " checks passed\n";
    return kOk;
  }
  out << "verify " << suite << ": failed";
  for (const auto& f : failed) out << " [" << f << "]";
  out << '\n';
  return kVerifyFailed;
}

int cmd_elliptic_table(double k, double u_max, int n, std::ostream& csv, std::ostream& err) {
  if (!(k >= 0.0 && k <= 1.0) || !(u_max > 0.0) || !std::isfinite(u_max) || n < 2) {
    err << "error: need 0 <= k <= 1, u_max > 0 and n >= 2\n";
    return kConfigError;
  }
  csv << "u,sn,cn,dn\n";
  for (int i = 0; i < n; ++i) {
    const double u = u_max * i / (n - 1);
    const auto e = elliptic::jacobi(u, k);
    write_row(csv, {u, e.sn, e.cn, e.dn});
  }
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spin dynamics in elliptic-function driven fields"};
  app.require_subcommand(1);

  std::string config, output;
  auto* sim = app.add_subcommand("simulate", "Integrate one scenario and write its trajectory as CSV");
  sim->add_option("config", config, "Config file")->required();
  sim->add_option("-o,--output", output, "Write CSV here instead of stdout");

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Flip probability over a grid of k, detuning and h");
  sweep->add_option("config", sweep_config, "Config file")->required();
  sweep->add_option("-o,--output", output, "Write CSV here instead of stdout");

  std::string suite = "all";
  double tol = kDefaultTolerance;
  auto* verify = app.add_subcommand("verify", "Run the residual checks");
  verify->add_option("suite", suite, "invariants, heun, wigner or all")
      ->check(CLI::IsMember({"invariants", "heun", "wigner", "all"}));
  verify->add_option("--tol", tol, "Integrator tolerance")->check(CLI::PositiveNumber);

  double k = 0, u_max = 0;
  int n = 0;
  auto* table = app.add_subcommand("elliptic-table", "Tabulate sn, cn, dn");
  table->add_option("k", k)->required();
  table->add_option("u_max", u_max)->required();
  table->add_option("n", n)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  auto with_output = [&](auto&& body) -> int {
    if (output.empty()) return body(out);
    std::ofstream file(output, std::ios::binary);
    if (!file) {
      err << "error: cannot write '" << output << "'\n";
      return kRuntimeError;
    }
    return body(file);
  };

  if (*sim || *sweep) {
    Scenario s;
    try {
      s = load_config(*sim ? config : sweep_config, err);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    return with_output([&](std::ostream& o) { return *sim ? cmd_simulate(s, o, err) : cmd_sweep(s, o, err); });
  }
  if (*verify) return cmd_verify(suite, tol, out);
  return cmd_elliptic_table(k, u_max, n, out, err);
}

}  // namespace ellipspin::cli
