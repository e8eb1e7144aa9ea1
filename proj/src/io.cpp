/* ------------------------------------------------------------------------- *
 * crawl - dynamic inchworm crawling simulation and optimization toolkit
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you may
 * not use this file except in compliance with the License. You may obtain a
 * copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * ------------------------------------------------------------------------- */
#include "crawl/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace crawl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::invalid_argument(path + ": " + msg);
}

// Object cursor that tracks consumed keys so typos surface as "unknown
// key" with a full path instead of being silently ignored.
struct Obj {
  const json* j;
  std::string path;
  std::set<std::string> seen;

  Obj(const json& jj, std::string p) : j(&jj), path(std::move(p)) {
    if (!jj.is_object()) fail(path, "expected an object");
  }

  bool has(const std::string& k) const { return j->contains(k); }

  const json& raw(const std::string& k) {
    seen.insert(k);
    return (*j)[k];
  }

  double num(const std::string& k, double dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_number()) fail(path + "." + k, "expected a number");
    return v.get<double>();
  }

  long integer(const std::string& k, long dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_number_integer()) fail(path + "." + k, "expected an integer");
    return v.get<long>();
  }

  bool boolean(const std::string& k, bool dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_boolean()) fail(path + "." + k, "expected a boolean");
    return v.get<bool>();
  }

  std::string str(const std::string& k, const std::string& dflt) {
    if (!has(k)) return dflt;
    const json& v = raw(k);
    if (!v.is_string()) fail(path + "." + k, "expected a string");
    return v.get<std::string>();
  }

  // Angle in radians, accepting "<k>_deg" as a degree-valued alternative.
  double angle(const std::string& k, double dflt) {
    const bool r = has(k), d = has(k + "_deg");
    if (r && d)
      fail(path + "." + k, "given in both radians and degrees");
    if (d) return rad(num(k + "_deg", 0));
    return num(k, dflt);
  }

  void done() const {
    for (auto it = j->begin(); it != j->end(); ++it)
      if (!seen.count(it.key())) fail(path + "." + it.key(), "unknown key");
  }
};

const std::set<std::string>& axis_names() {
  static const std::set<std::string> n = {
      "omega", "psi",     "phi0", "A", "alpha", "upsilon",
      "mu",    "m1_over_m2", "leg_mass_fraction"};
  return n;
}

bool is_angle_axis(const std::string& name) {
  return name == "psi" || name == "phi0" || name == "A" ||
         name == "upsilon";
}

// Resolve "<name>_deg" to its SI axis name; reports whether conversion to
// radians is needed.
std::string normalize_axis(const std::string& raw, bool& deg,
                           const std::string& path) {
  deg = false;
  std::string name = raw;
  if (name.size() > 4 && name.substr(name.size() - 4) == "_deg") {
    name = name.substr(0, name.size() - 4);
    deg = true;
  }
  if (!axis_names().count(name)) fail(path, "unknown axis '" + raw + "'");
  if (deg && !is_angle_axis(name))
    fail(path, "'" + raw + "' is not an angle");
  return name;
}

std::vector<double> parse_grid(Obj& a) {
  std::vector<double> vals;
  if (a.has("values")) {
    const json& v = a.raw("values");
    if (!v.is_array() || v.empty())
      fail(a.path + ".values", "expected a non-empty array");
    for (const json& x : v) {
      if (!x.is_number()) fail(a.path + ".values", "expected numbers");
      vals.push_back(x.get<double>());
    }
    return vals;
  }
  const double lo = a.num("min", 0), hi = a.num("max", 0);
  const long n = a.integer("n", 0);
  const std::string scale = a.str("scale", "lin");
  if (n < 2) fail(a.path + ".n", "need n >= 2 (or give explicit values)");
  if (scale != "lin" && scale != "log")
    fail(a.path + ".scale", "expected 'lin' or 'log'");
  if (scale == "log" && (lo <= 0 || hi <= 0))
    fail(a.path + ".min", "log grids need positive endpoints");
  for (long i = 0; i < n; ++i) {
    const double w = static_cast<double>(i) / (n - 1);
    vals.push_back(scale == "log" ? lo * std::pow(hi / lo, w)
                                  : lo + w * (hi - lo));
  }
  return vals;
}

std::vector<double> parse_grid_or_array(const json& v,
                                        const std::string& path) {
  if (v.is_array()) {
    std::vector<double> vals;
    if (v.empty()) fail(path, "expected a non-empty array");
    for (const json& x : v) {
      if (!x.is_number()) fail(path, "expected numbers");
      vals.push_back(x.get<double>());
    }
    return vals;
  }
  Obj g(v, path);
  std::vector<double> vals = parse_grid(g);
  g.done();
  return vals;
}

std::vector<Axis> parse_axes(Obj& o, const std::string& key) {
  std::vector<Axis> axes;
  if (!o.has(key)) return axes;
  const json& arr = o.raw(key);
  const std::string path = o.path + "." + key;
  if (!arr.is_array()) fail(path, "expected an array of axes");
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string apath = path + "[" + std::to_string(i) + "]";
    Obj a(arr[i], apath);
    bool deg = false;
    const std::string name =
        normalize_axis(a.str("name", ""), deg, apath + ".name");
    std::vector<double> vals = parse_grid(a);
    if (deg)
      for (double& v : vals) v = rad(v);
    a.done();
    axes.push_back({name, std::move(vals)});
  }
  return axes;
}

Objective parse_objective(Obj& o) {
  const std::string s = o.str("objective", "S");
  try {
    return objective_from_string(s);
  } catch (const std::exception&) {
    fail(o.path + ".objective", "unknown objective '" + s + "'");
  }
}

RobotParams parse_robot(const json& j) {
  Obj o(j, "robot");
  RobotParams p;
  const std::string tips = o.str("tips", "");
  if (tips == "hard") {
    p = RobotParams::hard_tips();
  } else if (tips == "soft") {
    p = RobotParams::soft_tips();
  } else if (!tips.empty()) {
    fail("robot.tips", "expected 'hard' or 'soft'");
  }
  p.m0 = o.num("m0", p.m0);
  p.l0 = o.num("l0", p.l0);
  p.J0 = o.num("J0", p.J0);
  p.m1 = o.num("m1", p.m1);
  p.m2 = o.num("m2", p.m2);
  p.l1 = o.num("l1", p.l1);
  p.l2 = o.num("l2", p.l2);
  p.J1 = o.num("J1", p.J1);
  p.J2 = o.num("J2", p.J2);
  if (o.has("mu")) p.mu1 = p.mu2 = o.num("mu", 0);
  p.mu1 = o.num("mu1", p.mu1);
  p.mu2 = o.num("mu2", p.mu2);
  p.g = o.num("g", p.g);
  o.done();

  auto positive = [](double v, const char* field) {
    if (!(v > 0)) fail(std::string("robot.") + field, "must be positive");
  };
  positive(p.m0, "m0");
  positive(p.m1, "m1");
  positive(p.m2, "m2");
  positive(p.l0, "l0");
  positive(p.l1, "l1");
  positive(p.l2, "l2");
  positive(p.J0, "J0");
  positive(p.J1, "J1");
  positive(p.J2, "J2");
  positive(p.g, "g");
  if (p.mu1 < 0) fail("robot.mu1", "must be non-negative");
  if (p.mu2 < 0) fail("robot.mu2", "must be non-negative");
  return p;
}

InputSpec parse_input(const json& j) {
  Obj o(j, "input");
  InputSpec in;
  in.phi0 = o.angle("phi0", in.phi0);
  in.A = o.angle("A", in.A);
  in.psi = o.angle("psi", in.psi);
  in.upsilon = o.angle("upsilon", in.upsilon);
  in.omega = o.num("omega", in.omega);
  in.alpha = o.num("alpha", in.alpha);
  o.done();
  in.validate();
  return in;
}

SimOptions parse_sim(const json& j) {
  Obj o(j, "sim");
  SimOptions s;
  s.rel_tol = o.num("rel_tol", s.rel_tol);
  s.abs_tol = o.num("abs_tol", s.abs_tol);
  s.stick_vel_tol = o.num("stick_vel_tol", s.stick_vel_tol);
  s.event_tol = o.num("event_tol", s.event_tol);
  s.max_step = o.num("max_step", s.max_step);
  s.record_dt = o.num("record_dt", s.record_dt);
  s.arm_window_frac = o.num("arm_window_frac", s.arm_window_frac);
  s.guard_subdiv = static_cast<int>(o.integer("guard_subdiv", s.guard_subdiv));
  s.tol_scale = o.num("tol_scale", s.tol_scale);
  s.record_world = o.boolean("record_world", s.record_world);
  s.max_events = o.integer("max_events", s.max_events);
  o.done();

  if (!(s.rel_tol > 0)) fail("sim.rel_tol", "must be positive");
  if (!(s.abs_tol > 0)) fail("sim.abs_tol", "must be positive");
  if (!(s.event_tol > 0)) fail("sim.event_tol", "must be positive");
  if (!(s.tol_scale > 0)) fail("sim.tol_scale", "must be positive");
  if (s.guard_subdiv < 1) fail("sim.guard_subdiv", "must be >= 1");
  return s;
}

Mat2 parse_gain(Obj& o, const std::string& k, const Mat2& dflt) {
  if (!o.has(k)) return dflt;
  const json& v = o.raw(k);
  if (v.is_number()) return v.get<double>() * Mat2::Identity();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    Mat2 m = Mat2::Zero();
    m(0, 0) = v[0].get<double>();
    m(1, 1) = v[1].get<double>();
    return m;
  }
  fail(o.path + "." + k, "expected a scalar or [diag0, diag1]");
}

ControllerConfig parse_controller(const json& j) {
  Obj o(j, "controller");
  ControllerConfig c;
  c.Kv = parse_gain(o, "Kv", c.Kv);
  c.KP = parse_gain(o, "KP", c.KP);
  c.KD = parse_gain(o, "KD", c.KD);
  c.phi_min = o.angle("phi_min", c.phi_min);
  c.phi_max = o.angle("phi_max", c.phi_max);
  c.min_dwell = o.num("min_dwell", c.min_dwell);
  c.s1_cond_max = o.num("s1_cond_max", c.s1_cond_max);
  if (o.has("switch_phase") || o.has("switch_phase_deg"))
    c.switch_phase = o.angle("switch_phase", 0);
  o.done();
  c.validate();
  return c;
}

std::pair<double, double> parse_bound(const json& v, const std::string& path,
                                      bool deg) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number())
    fail(path, "expected [lo, hi]");
  double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (deg) {
    lo = rad(lo);
    hi = rad(hi);
  }
  if (!(hi > lo)) fail(path, "need lo < hi");
  return {lo, hi};
}

json gain_json(const Mat2& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}),
                      json::array({m(1, 0), m(1, 1)})});
}

json axes_json(const std::vector<Axis>& axes) {
  json arr = json::array();
  for (const Axis& a : axes)
    arr.push_back(json{{"name", a.name}, {"values", a.values}});
  return arr;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  Obj top(j, "config");
  ExperimentConfig cfg;
  if (top.has("robot")) cfg.robot = parse_robot(top.raw("robot"));
  if (top.has("input")) cfg.input = parse_input(top.raw("input"));
  if (top.has("sim")) cfg.sim = parse_sim(top.raw("sim"));
  if (top.has("controller"))
    cfg.controller = parse_controller(top.raw("controller"));
  cfg.cycles = top.num("cycles", cfg.cycles);
  cfg.n_ss = static_cast<int>(top.integer("n_ss", cfg.n_ss));
  cfg.jobs = static_cast<int>(top.integer("jobs", cfg.jobs));
  cfg.command = top.str("command", "");
  if (!(cfg.cycles > 0)) fail("config.cycles", "must be positive");
  if (cfg.n_ss < 0) fail("config.n_ss", "must be >= 0");

  if (top.has("sweep")) {
    Obj o(top.raw("sweep"), "sweep");
    cfg.sweep.axes = parse_axes(o, "axes");
    cfg.sweep.objective = parse_objective(o);
    o.done();
    if (cfg.sweep.axes.empty()) fail("sweep.axes", "at least one axis");
  }
  if (top.has("robustness")) {
    Obj o(top.raw("robustness"), "robustness");
    cfg.robustness.axes = parse_axes(o, "axes");
    cfg.robustness.eps = o.num("eps", cfg.robustness.eps);
    cfg.robustness.grid_n =
        static_cast<int>(o.integer("grid_n", cfg.robustness.grid_n));
    o.done();
    if (cfg.robustness.eps < 0) fail("robustness.eps", "must be >= 0");
    if (cfg.robustness.grid_n < 1) fail("robustness.grid_n", "must be >= 1");
  }
  if (top.has("phase")) {
    Obj o(top.raw("phase"), "phase");
    cfg.phase.omega = parse_grid_or_array(o.raw("omega"), "phase.omega");
    cfg.phase.psi = parse_grid_or_array(o.raw("psi"), "phase.psi");
    if (o.boolean("psi_in_deg", false))
      for (double& v : cfg.phase.psi) v = rad(v);
    cfg.phase.objective = parse_objective(o);
    cfg.phase.ma_window =
        static_cast<int>(o.integer("ma_window", cfg.phase.ma_window));
    o.done();
    if (cfg.phase.ma_window < 1) fail("phase.ma_window", "must be >= 1");
  }
  if (top.has("optimize")) {
    Obj o(top.raw("optimize"), "optimize");
    const json& params = o.raw("params");
    if (!params.is_array() || params.empty())
      fail("optimize.params", "expected a non-empty array");
    const json& bounds = o.raw("bounds");
    if (!bounds.is_array() || bounds.size() != params.size())
      fail("optimize.bounds", "expected one [lo, hi] per parameter");
    for (size_t i = 0; i < params.size(); ++i) {
      const std::string ppath =
          "optimize.params[" + std::to_string(i) + "]";
      if (!params[i].is_string()) fail(ppath, "expected a string");
      bool deg = false;
      const std::string name =
          normalize_axis(params[i].get<std::string>(), deg, ppath);
      cfg.optimize.params.push_back(name);
      cfg.optimize.bounds.push_back(parse_bound(
          bounds[i], "optimize.bounds[" + std::to_string(i) + "]", deg));
    }
    cfg.optimize.objective = parse_objective(o);
    cfg.optimize.bo.budget =
        static_cast<int>(o.integer("budget", cfg.optimize.bo.budget));
    cfg.optimize.bo.init =
        static_cast<int>(o.integer("init", cfg.optimize.bo.init));
    cfg.optimize.bo.candidates = static_cast<int>(
        o.integer("candidates", cfg.optimize.bo.candidates));
    cfg.optimize.bo.seed = static_cast<uint64_t>(
        o.integer("seed", static_cast<long>(cfg.optimize.bo.seed)));
    cfg.optimize.bo.explore = o.num("explore", cfg.optimize.bo.explore);
    o.done();
    if (cfg.optimize.bo.budget < 1) fail("optimize.budget", "must be >= 1");
  }
  top.done();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

std::vector<std::string> validate_config(const json& j) {
  std::vector<std::string> findings;
  if (!j.is_object()) {
    findings.push_back("config: expected an object");
    return findings;
  }
  // Check sections independently so one bad field does not mask others.
  auto check = [&](const char* key, auto&& parse) {
    if (!j.contains(key)) return;
    try {
      parse(j[key]);
    } catch (const std::exception& e) {
      findings.push_back(e.what());
    }
  };
  check("robot", [](const json& v) { parse_robot(v); });
  check("input", [](const json& v) { parse_input(v); });
  check("sim", [](const json& v) { parse_sim(v); });
  check("controller", [](const json& v) { parse_controller(v); });
  try {
    config_from_json(j);
  } catch (const std::exception& e) {
    if (findings.empty() ||
        std::string(e.what()) != findings.back())
      findings.push_back(e.what());
  }
  // Deduplicate section findings re-raised by the full parse.
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& f : findings)
    if (seen.insert(f).second) out.push_back(f);
  return out;
}

json ExperimentConfig::resolved() const {
  json r;
  r["robot"] = {{"m0", robot.m0}, {"l0", robot.l0}, {"J0", robot.J0},
                {"m1", robot.m1}, {"m2", robot.m2}, {"l1", robot.l1},
                {"l2", robot.l2}, {"J1", robot.J1}, {"J2", robot.J2},
                {"mu1", robot.mu1}, {"mu2", robot.mu2}, {"g", robot.g}};
  r["input"] = {{"phi0", input.phi0}, {"A", input.A},
                {"omega", input.omega}, {"psi", input.psi},
                {"alpha", input.alpha}, {"upsilon", input.upsilon}};
  r["sim"] = {{"rel_tol", sim.rel_tol},
              {"abs_tol", sim.abs_tol},
              {"stick_vel_tol", sim.stick_vel_tol},
              {"event_tol", sim.event_tol},
              {"max_step", sim.max_step},
              {"record_dt", sim.record_dt},
              {"arm_window_frac", sim.arm_window_frac},
              {"guard_subdiv", sim.guard_subdiv},
              {"tol_scale", sim.tol_scale},
              {"record_world", sim.record_world},
              {"max_events", sim.max_events}};
  r["controller"] = {{"Kv", gain_json(controller.Kv)},
                     {"KP", gain_json(controller.KP)},
                     {"KD", gain_json(controller.KD)},
                     {"phi_min", controller.phi_min},
                     {"phi_max", controller.phi_max},
                     {"min_dwell", controller.min_dwell},
                     {"s1_cond_max", controller.s1_cond_max}};
  r["controller"]["switch_phase"] =
      controller.switch_phase ? json(*controller.switch_phase)
                              : json(nullptr);
  r["cycles"] = cycles;
  r["n_ss"] = n_ss;
  if (!command.empty()) r["command"] = command;
  if (!sweep.axes.empty())
    r["sweep"] = {{"axes", axes_json(sweep.axes)},
                  {"objective", to_string(sweep.objective)}};
  if (!robustness.axes.empty())
    r["robustness"] = {{"axes", axes_json(robustness.axes)},
                       {"eps", robustness.eps},
                       {"grid_n", robustness.grid_n}};
  if (!phase.omega.empty())
    r["phase"] = {{"omega", phase.omega},
                  {"psi", phase.psi},
                  {"objective", to_string(phase.objective)},
                  {"ma_window", phase.ma_window}};
  if (!optimize.params.empty()) {
    json b = json::array();
    for (const auto& [lo, hi] : optimize.bounds)
      b.push_back(json::array({lo, hi}));
    r["optimize"] = {{"params", optimize.params},
                     {"bounds", b},
                     {"objective", to_string(optimize.objective)},
                     {"budget", optimize.bo.budget},
                     {"init", optimize.bo.init},
                     {"candidates", optimize.bo.candidates},
                     {"seed", optimize.bo.seed},
                     {"explore", optimize.bo.explore}};
  }
  return r;
}

// ----------------------------------------------------------------------
// CSV

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header(const std::string& kind, const json& config,
                       const std::string& data) {
  std::ostringstream os;
  os << "# crawl-csv: " << kind << "\n";
  os << "# config:\n";
  std::istringstream cfg(config.dump(2));
  std::string line;
  while (std::getline(cfg, line)) os << "#   " << line << "\n";
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  os << "# content-hash: fnv1a64:" << hash << "\n";
  os << data;
  return os.str();
}

std::string trajectory_csv(const Trajectory& traj, const json& config,
                           bool commanded_columns) {
  std::ostringstream os;
  os << "t,x,y,theta,phi1,phi2,xdot,ydot,thetadot,phi1dot,phi2dot,"
        "f1x,f1y,f2x,f2y,tau1,tau2,mode";
  if (commanded_columns) os << ",qddc1,qddc2";
  os << "\n";
  for (const Sample& s : traj.samples) {
    os << csv_number(s.t);
    for (int i = 0; i < 5; ++i) os << "," << csv_number(s.q[i]);
    for (int i = 0; i < 5; ++i) os << "," << csv_number(s.qd[i]);
    os << "," << csv_number(s.f1[0]) << "," << csv_number(s.f1[1]);
    os << "," << csv_number(s.f2[0]) << "," << csv_number(s.f2[1]);
    os << "," << csv_number(s.tau[0]) << "," << csv_number(s.tau[1]);
    os << "," << s.mode_id;
    if (commanded_columns)
      os << "," << csv_number(s.qdd_c[0]) << "," << csv_number(s.qdd_c[1]);
    os << "\n";
  }
  return csv_header("trajectory", config, os.str());
}

std::string events_csv(const Trajectory& traj, const json& config) {
  std::ostringstream os;
  os << "t,guard,from,to,from_id,to_id\n";
  for (const SimEvent& e : traj.events) {
    std::string guard = e.guard;
    for (char& c : guard)
      if (c == ',') c = ';';
    os << csv_number(e.t) << "," << guard << "," << e.from.name() << ","
       << e.to.name() << "," << e.from.id() << "," << e.to.id() << "\n";
  }
  return csv_header("events", config, os.str());
}

std::string metrics_csv(const StepMetrics& m, const SlipFractions& sf,
                        const json& config) {
  std::ostringstream os;
  os << "S,V,steady,k,spread,termination,"
        "time_back_frac1,time_back_frac2,dist_back_frac1,dist_back_frac2,"
        "both_forward\n";
  os << csv_number(m.S) << "," << csv_number(m.V) << ","
     << (m.steady ? 1 : 0) << "," << m.k << "," << csv_number(m.spread)
     << "," << to_string(m.termination) << ","
     << csv_number(sf.time_frac[0]) << "," << csv_number(sf.time_frac[1])
     << "," << csv_number(sf.dist_frac[0]) << ","
     << csv_number(sf.dist_frac[1]) << "," << (sf.both_forward ? 1 : 0)
     << "\n";
  return csv_header("metrics", config, os.str());
}

std::string sweep_csv(const SweepResult& r, const json& config) {
  std::ostringstream os;
  for (const Axis& a : r.axes) os << a.name << ",";
  os << "objective,S,V,steady,ok,status\n";
  for (const SweepRow& row : r.rows) {
    for (const double c : row.coords) os << csv_number(c) << ",";
    std::string status = row.status;
    for (char& c : status)
      if (c == ',') c = ';';
    os << csv_number(row.objective) << "," << csv_number(row.S) << ","
       << csv_number(row.V) << "," << (row.steady ? 1 : 0) << ","
       << (row.ok ? 1 : 0) << "," << status << "\n";
  }
  return csv_header("sweep", config, os.str());
}

std::string phase_csv(const PhaseCurve& c, const json& config) {
  std::ostringstream os;
  os << "omega,psi_raw,psi,value\n";
  for (size_t i = 0; i < c.omega.size(); ++i)
    os << csv_number(c.omega[i]) << "," << csv_number(c.psi_raw[i]) << ","
       << csv_number(c.psi[i]) << "," << csv_number(c.value[i]) << "\n";
  return csv_header("phase", config, os.str());
}

std::string bo_csv(const BoResult& r, const std::vector<std::string>& names,
                   const json& config) {
  std::ostringstream os;
  os << "iter";
  for (const std::string& n : names) os << "," << n;
  os << ",objective,is_best\n";
  int best = -1;
  for (size_t i = 0; i < r.history.size(); ++i) {
    const double y = r.history[i].y;
    if (std::isfinite(y) &&
        (best < 0 || y > r.history[best].y))
      best = static_cast<int>(i);
  }
  for (size_t i = 0; i < r.history.size(); ++i) {
    os << i;
    for (int k = 0; k < r.history[i].x.size(); ++k)
      os << "," << csv_number(r.history[i].x[k]);
    os << "," << csv_number(r.history[i].y) << ","
       << (static_cast<int>(i) == best ? 1 : 0) << "\n";
  }
  return csv_header("optimize", config, os.str());
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace crawl
