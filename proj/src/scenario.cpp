#include "flexprice/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "flexprice/util.hpp"

namespace flexprice::sim {

using nlohmann::json;

void TimelineConfig::validate() const {
  if (!(t_end_s > t_start_s)) throw std::invalid_argument("timeline: empty window");
  if (!(t2_s > 0.0) || !(t1_s > 0.0) || !(dt_plan_s > 0.0))
    throw std::invalid_argument("timeline: cadences must be positive");
  auto divides = [](double a, double b) { return std::abs(std::remainder(b, a)) < 1e-9; };
  if (!divides(t2_s, t1_s)) throw std::invalid_argument("timeline: t1 must be a multiple of t2");
  if (dt_plan_s != t1_s) throw std::invalid_argument("timeline: dt_plan must equal t1");
  if (!divides(dt_plan_s, t_end_s - t_start_s))
    throw std::invalid_argument("timeline: window must be a whole number of plan steps");
  if (admm_budget_iters < 1) throw std::invalid_argument("timeline: budget must be at least 1");
}

namespace {

// ---- strict json helpers -------------------------------------------------

struct Errors {
  std::vector<std::string> list;
  void add(const std::string& where, const std::string& what) {
    list.push_back(where + ": " + what);
  }
  bool ok() const { return list.empty(); }
};

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed, Errors& errs) {
  if (!j.is_object()) {
    errs.add(where, "expected an object");
    return;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known) errs.add(where, "unknown key '" + it.key() + "'");
  }
}

double num_or(const json& j, const char* key, double fallback, const std::string& where,
              Errors& errs) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    errs.add(where, std::string("'") + key + "' must be a number");
    return fallback;
  }
  return j[key].get<double>();
}

double num_req(const json& j, const char* key, const std::string& where, Errors& errs) {
  if (!j.contains(key) || !j[key].is_number()) {
    errs.add(where, std::string("missing numeric '") + key + "'");
    return 0.0;
  }
  return j[key].get<double>();
}

std::string str_req(const json& j, const char* key, const std::string& where, Errors& errs) {
  if (!j.contains(key) || !j[key].is_string()) {
    errs.add(where, std::string("missing string '") + key + "'");
    return {};
  }
  return j[key].get<std::string>();
}

SeriesSpec parse_series(const json& j, const std::string& where, Errors& errs) {
  SeriesSpec s;
  check_keys(j, where,
             {"kind", "value", "peak_kw", "base_kw", "noise_kw", "center_h", "width_h", "factor",
              "day", "file", "values", "steps"},
             errs);
  if (!j.is_object()) return s;
  s.kind = str_req(j, "kind", where, errs);
  s.value = num_or(j, "value", 0.0, where, errs);
  s.peak_kw = num_or(j, "peak_kw", 0.0, where, errs);
  s.base_kw = num_or(j, "base_kw", 0.0, where, errs);
  s.noise_kw = num_or(j, "noise_kw", 0.0, where, errs);
  s.center_h = num_or(j, "center_h", 12.5, where, errs);
  s.width_h = num_or(j, "width_h", 2.2, where, errs);
  s.factor = num_or(j, "factor", 1.0, where, errs);
  s.day = static_cast<int>(num_or(j, "day", 0, where, errs));
  if (j.contains("file")) s.file = j["file"].get<std::string>();
  if (j.contains("values")) {
    for (const auto& v : j["values"]) s.values.push_back(v.get<double>());
  }
  if (j.contains("steps")) {
    for (const auto& e : j["steps"]) {
      check_keys(e, where + ".steps", {"from_s", "to_s", "value"}, errs);
      StepEvent ev;
      ev.from_s = num_req(e, "from_s", where, errs);
      ev.to_s = num_req(e, "to_s", where, errs);
      ev.value = num_req(e, "value", where, errs);
      s.steps.push_back(ev);
    }
  }
  const std::vector<std::string> kinds = {"constant", "bell",   "office", "scaled_forecast",
                                          "steps",    "file",   "values"};
  if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end())
    errs.add(where, "unknown series kind '" + s.kind + "'");
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::string& base_dir) {
  Errors errs;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("scenario: invalid json: ") + e.what());
  }

  Scenario sc;
  sc.base_dir = base_dir;
  check_keys(j, "scenario",
             {"name", "network", "limits", "timeline", "tariff", "slack_voltage", "prosumers",
              "seed", "coordination", "admm"},
             errs);
  sc.name = j.value("name", "scenario");
  sc.seed = static_cast<std::uint64_t>(j.value("seed", 0.0));
  sc.coordination = j.value("coordination", true);

  if (j.contains("network")) {
    const json& n = j["network"];
    check_keys(n, "network", {"buses", "lines", "bases", "slack_v_pu"}, errs);
    if (n.contains("buses"))
      for (const auto& b : n["buses"]) {
        check_keys(b, "network.buses", {"id", "type"}, errs);
        grid::Bus bus;
        bus.id = str_req(b, "id", "network.buses", errs);
        const std::string type = b.value("type", "pq");
        if (type == "slack")
          bus.type = grid::BusType::Slack;
        else if (type == "pq")
          bus.type = grid::BusType::PQ;
        else
          errs.add("network.buses", "unknown bus type '" + type + "'");
        sc.network.buses.push_back(bus);
      }
    else
      errs.add("network", "missing 'buses'");
    if (n.contains("lines"))
      for (const auto& l : n["lines"]) {
        check_keys(l, "network.lines", {"from", "to", "r_ohm", "x_ohm", "b_shunt_s"}, errs);
        grid::Line line;
        line.from = str_req(l, "from", "network.lines", errs);
        line.to = str_req(l, "to", "network.lines", errs);
        line.r_ohm = num_req(l, "r_ohm", "network.lines", errs);
        line.x_ohm = num_req(l, "x_ohm", "network.lines", errs);
        line.b_shunt_s = num_or(l, "b_shunt_s", 0.0, "network.lines", errs);
        sc.network.lines.push_back(line);
      }
    if (n.contains("bases")) {
      check_keys(n["bases"], "network.bases", {"v_base_v", "s_base_va"}, errs);
      sc.network.bases.v_base_v = num_req(n["bases"], "v_base_v", "network.bases", errs);
      sc.network.bases.s_base_va = num_req(n["bases"], "s_base_va", "network.bases", errs);
    }
    sc.network.slack_v_pu = num_or(n, "slack_v_pu", 1.0, "network", errs);
  } else {
    errs.add("scenario", "missing 'network'");
  }

  if (j.contains("limits")) {
    const json& l = j["limits"];
    check_keys(l, "limits", {"v_min", "v_max", "q_s_max_pu", "s_s_max_pu"}, errs);
    sc.limits.v_min = num_or(l, "v_min", 0.9, "limits", errs);
    sc.limits.v_max = num_or(l, "v_max", 1.05, "limits", errs);
    sc.limits.q_s_max_pu = num_or(l, "q_s_max_pu", 0.5, "limits", errs);
    sc.limits.s_s_max_pu = num_or(l, "s_s_max_pu", 5.0, "limits", errs);
  }

  if (j.contains("timeline")) {
    const json& t = j["timeline"];
    check_keys(t, "timeline",
               {"t_start_s", "t_end_s", "dt_plan_s", "t1_s", "t2_s", "admm_budget_iters"}, errs);
    sc.timeline.t_start_s = num_req(t, "t_start_s", "timeline", errs);
    sc.timeline.t_end_s = num_req(t, "t_end_s", "timeline", errs);
    sc.timeline.dt_plan_s = num_or(t, "dt_plan_s", 600.0, "timeline", errs);
    sc.timeline.t1_s = num_or(t, "t1_s", 600.0, "timeline", errs);
    sc.timeline.t2_s = num_or(t, "t2_s", 30.0, "timeline", errs);
    sc.timeline.admm_budget_iters =
        static_cast<int>(num_or(t, "admm_budget_iters", 150, "timeline", errs));
  } else {
    errs.add("scenario", "missing 'timeline'");
  }

  if (j.contains("tariff")) {
    const json& t = j["tariff"];
    check_keys(t, "tariff",
               {"kind", "low_chf_per_kwh", "high_chf_per_kwh", "high_start_s", "high_end_s",
                "file", "values"},
               errs);
    sc.tariff.kind = t.value("kind", "tou");
    sc.tariff.low_chf_per_kwh = num_or(t, "low_chf_per_kwh", 0.08, "tariff", errs);
    sc.tariff.high_chf_per_kwh = num_or(t, "high_chf_per_kwh", 0.24, "tariff", errs);
    sc.tariff.high_start_s = num_or(t, "high_start_s", 54000.0, "tariff", errs);
    sc.tariff.high_end_s = num_or(t, "high_end_s", 86400.0, "tariff", errs);
    if (t.contains("file")) sc.tariff.file = t["file"].get<std::string>();
    if (t.contains("values"))
      for (const auto& v : t["values"]) sc.tariff.values.push_back(v.get<double>());
    if (sc.tariff.kind != "tou" && sc.tariff.kind != "series")
      errs.add("tariff", "unknown kind '" + sc.tariff.kind + "'");
  }

  if (j.contains("slack_voltage")) {
    const json& s = j["slack_voltage"];
    check_keys(s, "slack_voltage", {"forecast", "realization"}, errs);
    if (s.contains("forecast"))
      sc.slack_forecast = parse_series(s["forecast"], "slack_voltage.forecast", errs);
    if (s.contains("realization"))
      sc.slack_realization = parse_series(s["realization"], "slack_voltage.realization", errs);
  }
  if (sc.slack_forecast.kind.empty()) {
    sc.slack_forecast.kind = "constant";
    sc.slack_forecast.value = sc.network.slack_v_pu;
  }
  if (sc.slack_realization.kind.empty()) sc.slack_realization = sc.slack_forecast;

  if (j.contains("prosumers")) {
    int idx = 0;
    for (const auto& p : j["prosumers"]) {
      const std::string where = "prosumers[" + std::to_string(idx++) + "]";
      check_keys(p, where, {"name", "bus", "bess", "load", "pv", "power_factor"}, errs);
      ProsumerEntry e;
      e.name = str_req(p, "name", where, errs);
      e.bus = str_req(p, "bus", where, errs);
      if (p.contains("bess")) {
        const json& b = p["bess"];
        check_keys(b, where + ".bess", {"s_max_kva", "e_kwh", "soc_min", "soc_max", "soc_init"},
                   errs);
        e.bess.s_max_kva = num_req(b, "s_max_kva", where, errs);
        e.bess.e_kwh = num_req(b, "e_kwh", where, errs);
        e.bess.soc_min = num_or(b, "soc_min", 0.0, where, errs);
        e.bess.soc_max = num_or(b, "soc_max", 1.0, where, errs);
        e.bess.soc_init = num_or(b, "soc_init", 0.5, where, errs);
      } else {
        errs.add(where, "missing 'bess'");
      }
      if (p.contains("load")) {
        check_keys(p["load"], where + ".load", {"forecast", "realization"}, errs);
        if (p["load"].contains("forecast"))
          e.load_forecast = parse_series(p["load"]["forecast"], where + ".load.forecast", errs);
        else
          errs.add(where + ".load", "missing 'forecast'");
        if (p["load"].contains("realization"))
          e.load_realization =
              parse_series(p["load"]["realization"], where + ".load.realization", errs);
        else
          e.load_realization = e.load_forecast;
      } else {
        errs.add(where, "missing 'load'");
      }
      if (p.contains("pv")) {
        check_keys(p["pv"], where + ".pv", {"forecast", "realization"}, errs);
        if (p["pv"].contains("forecast"))
          e.pv_forecast = parse_series(p["pv"]["forecast"], where + ".pv.forecast", errs);
        else
          errs.add(where + ".pv", "missing 'forecast'");
        if (p["pv"].contains("realization"))
          e.pv_realization = parse_series(p["pv"]["realization"], where + ".pv.realization", errs);
        else
          e.pv_realization = e.pv_forecast;
      } else {
        errs.add(where, "missing 'pv'");
      }
      e.power_factor = num_or(p, "power_factor", 1.0, where, errs);
      if (!(e.power_factor > 0.0 && e.power_factor <= 1.0))
        errs.add(where, "power_factor must be in (0, 1]");
      sc.prosumers.push_back(e);
    }
  } else {
    errs.add("scenario", "missing 'prosumers'");
  }

  if (j.contains("admm")) {
    const json& a = j["admm"];
    check_keys(a, "admm",
               {"rho0", "eps_abs", "eps_rel", "mu", "tau_incr", "tau_decr", "adaptive_rho",
                "relinearize", "tol_lin", "relin_every"},
               errs);
    sc.admm.rho0 = num_or(a, "rho0", 1.0, "admm", errs);
    sc.admm.eps_abs = num_or(a, "eps_abs", 1e-5, "admm", errs);
    sc.admm.eps_rel = num_or(a, "eps_rel", 1e-4, "admm", errs);
    sc.admm.mu = num_or(a, "mu", 10.0, "admm", errs);
    sc.admm.tau_incr = num_or(a, "tau_incr", 1.01, "admm", errs);
    sc.admm.tau_decr = num_or(a, "tau_decr", 1.01, "admm", errs);
    if (a.contains("adaptive_rho")) sc.admm.adaptive_rho = a["adaptive_rho"].get<bool>();
    if (a.contains("relinearize")) sc.admm.relinearize = a["relinearize"].get<bool>();
    sc.admm.tol_lin = num_or(a, "tol_lin", 1e-3, "admm", errs);
    sc.admm.relin_every = static_cast<int>(num_or(a, "relin_every", 5, "admm", errs));
  }
  sc.admm.max_iter = sc.timeline.admm_budget_iters;

  if (!errs.ok()) {
    std::string msg = "scenario has " + std::to_string(errs.list.size()) + " problem(s):";
    for (const auto& e : errs.list) msg += "\n  - " + e;
    throw std::runtime_error(msg);
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  const std::string text = util::read_file(path);
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_scenario(text, dir);
}

std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> errs;
  auto guard = [&errs](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errs.push_back(std::string(where) + ": " + e.what());
    }
  };
  guard("network", [&] { sc.network.validate(); });
  guard("limits", [&] { sc.limits.validate(); });
  guard("timeline", [&] { sc.timeline.validate(); });
  for (const auto& p : sc.prosumers) {
    guard(p.name.c_str(), [&] { p.bess.validate(); });
    guard(p.name.c_str(), [&] { (void)sc.network.bus_index(p.bus); });
  }
  if (sc.prosumers.empty()) errs.push_back("scenario: no prosumers");
  if (sc.tariff.kind == "series" && sc.tariff.file.empty() &&
      static_cast<int>(sc.tariff.values.size()) != sc.timeline.horizon())
    errs.push_back("tariff: series length must equal the horizon");
  return errs;
}

namespace {

std::uint64_t series_seed(const Scenario& sc, const std::string& name, const std::string& role,
                          int day) {
  return sc.seed ^ util::fnv1a(name + "/" + role) ^ (0x9e3779b97f4a7c15ull * (day + 1));
}

Eigen::VectorXd sample_file_series(const Scenario& sc, const SeriesSpec& s, int n_rt) {
  const std::string path =
      sc.base_dir.empty() ? s.file : sc.base_dir + "/" + s.file;
  util::Table t = util::Table::from_csv(util::read_file(path));
  if (t.columns.size() < 2) throw std::runtime_error("series file needs (time_s, value) columns");
  Eigen::VectorXd out(n_rt);
  size_t row = 0;
  for (int i = 0; i < n_rt; ++i) {
    const double t_s = sc.timeline.t_start_s + i * sc.timeline.t2_s;
    while (row + 1 < t.rows.size() && t.rows[row + 1][0] <= t_s) ++row;
    out(i) = t.rows[row][1];
  }
  return out;
}

// Synthetic profile shapes. Hours are wall-clock within the day.
double office_window(double h) {
  if (h < 8.0 || h > 18.0) return 0.0;
  return 0.5 * (1.0 - std::cos(2.0 * M_PI * (h - 8.0) / 10.0));
}

Eigen::VectorXd synth_series(const Scenario& sc, const SeriesSpec& s, const std::string& name,
                             const std::string& role, int n_rt) {
  const TimelineConfig& tl = sc.timeline;
  Eigen::VectorXd out(n_rt);
  if (s.kind == "constant") {
    out.setConstant(s.value);
    return out;
  }
  if (s.kind == "steps") {
    out.setConstant(s.value);
    for (int i = 0; i < n_rt; ++i) {
      const double t_s = tl.t_start_s + i * tl.t2_s;
      for (const auto& ev : s.steps)
        if (t_s >= ev.from_s && t_s < ev.to_s) out(i) = ev.value;
    }
    return out;
  }
  if (s.kind == "values") {
    if (static_cast<int>(s.values.size()) != n_rt)
      throw std::runtime_error("inline series length must match the rt grid");
    for (int i = 0; i < n_rt; ++i) out(i) = s.values[i];
    return out;
  }
  if (s.kind == "file") return sample_file_series(sc, s, n_rt);
  if (s.kind == "bell") {
    for (int i = 0; i < n_rt; ++i) {
      const double h = (tl.t_start_s + i * tl.t2_s) / 3600.0;
      const double z = (h - s.center_h) / s.width_h;
      double v = s.peak_kw * std::exp(-0.5 * z * z);
      out(i) = v < 0.01 * s.peak_kw ? 0.0 : v;
    }
    return out;
  }
  if (s.kind == "office") {
    // smooth noise: linear interpolation between 10-minute knots
    std::mt19937_64 rng(series_seed(sc, name, role, s.day));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const int knots = static_cast<int>((tl.t_end_s - tl.t_start_s) / 600.0) + 2;
    std::vector<double> knot(knots);
    for (int i = 0; i < knots; ++i) knot[i] = uni(rng) * s.noise_kw;
    for (int i = 0; i < n_rt; ++i) {
      const double t_s = tl.t_start_s + i * tl.t2_s;
      const double h = t_s / 3600.0;
      const double pos = (t_s - tl.t_start_s) / 600.0;
      const int k0 = static_cast<int>(pos);
      const double frac = pos - k0;
      const double noise = knot[k0] * (1.0 - frac) + knot[k0 + 1] * frac;
      out(i) = std::max(0.0, s.base_kw + s.peak_kw * office_window(h) + noise);
    }
    return out;
  }
  throw std::runtime_error("cannot synthesize series kind '" + s.kind + "' here");
}

}  // namespace

Eigen::VectorXd MaterializedScenario::aggregate(const Eigen::VectorXd& rt, int samples_per_step,
                                                int skip) {
  const int k = static_cast<int>(rt.size()) / samples_per_step;
  Eigen::VectorXd out(k - skip);
  for (int t = skip; t < k; ++t)
    out(t - skip) = rt.segment(t * samples_per_step, samples_per_step).mean();
  return out;
}

MaterializedScenario materialize(const Scenario& sc) {
  sc.timeline.validate();
  MaterializedScenario m;
  m.n_rt = sc.timeline.rt_steps();
  const int k = sc.timeline.horizon();

  m.price_plan.resize(k);
  if (sc.tariff.kind == "tou") {
    for (int t = 0; t < k; ++t) {
      const double t_s = sc.timeline.t_start_s + t * sc.timeline.dt_plan_s;
      const bool high = t_s >= sc.tariff.high_start_s && t_s < sc.tariff.high_end_s;
      m.price_plan(t) = high ? sc.tariff.high_chf_per_kwh : sc.tariff.low_chf_per_kwh;
    }
  } else {
    if (!sc.tariff.file.empty()) {
      SeriesSpec fs;
      fs.kind = "file";
      fs.file = sc.tariff.file;
      Eigen::VectorXd rt = sample_file_series(sc, fs, m.n_rt);
      m.price_plan = MaterializedScenario::aggregate(rt, sc.timeline.samples_per_step());
    } else {
      if (static_cast<int>(sc.tariff.values.size()) != k)
        throw std::runtime_error("tariff series length must equal the horizon");
      for (int t = 0; t < k; ++t) m.price_plan(t) = sc.tariff.values[t];
    }
  }

  m.slack_fc = synth_series(sc, sc.slack_forecast, "slack", "fc", m.n_rt);
  m.slack_re = synth_series(sc, sc.slack_realization, "slack", "re", m.n_rt);

  const int n = static_cast<int>(sc.prosumers.size());
  m.load_p_fc.resize(n);
  m.load_p_re.resize(n);
  m.load_q_fc.resize(n);
  m.load_q_re.resize(n);
  m.pv_fc.resize(n);
  m.pv_re.resize(n);
  m.placement.bus.resize(n);
  for (int i = 0; i < n; ++i) {
    const ProsumerEntry& p = sc.prosumers[i];
    m.placement.bus[i] = sc.network.bus_index(p.bus);
    m.load_p_fc[i] = synth_series(sc, p.load_forecast, p.name, "load_fc", m.n_rt);
    m.load_p_re[i] = p.load_realization.kind == "scaled_forecast"
                         ? Eigen::VectorXd(p.load_realization.factor * m.load_p_fc[i])
                         : synth_series(sc, p.load_realization, p.name, "load_re", m.n_rt);
    m.pv_fc[i] = synth_series(sc, p.pv_forecast, p.name, "pv_fc", m.n_rt);
    m.pv_re[i] = p.pv_realization.kind == "scaled_forecast"
                     ? Eigen::VectorXd(p.pv_realization.factor * m.pv_fc[i])
                     : synth_series(sc, p.pv_realization, p.name, "pv_re", m.n_rt);
    // constant power factor on the inflexible load; pf = 1 keeps q at zero
    const double tan_phi =
        std::tan(std::acos(std::clamp(sc.prosumers[i].power_factor, 1e-3, 1.0)));
    m.load_q_fc[i] = tan_phi * m.load_p_fc[i];
    m.load_q_re[i] = tan_phi * m.load_p_re[i];
  }
  return m;
}

std::string replica_scenario_json(bool full_day) {
  json j;
  j["name"] = full_day ? "replica-dayahead" : "replica-closedloop";
  j["seed"] = 42;
  j["coordination"] = true;
  j["network"] = {
      {"buses",
       {{{"id", "N1"}, {"type", "slack"}},
        {{"id", "N3"}, {"type", "pq"}},
        {{"id", "N4"}, {"type", "pq"}},
        {{"id", "N5"}, {"type", "pq"}},
        {{"id", "N7"}, {"type", "pq"}},
        {{"id", "N8"}, {"type", "pq"}},
        {{"id", "N9"}, {"type", "pq"}}}},
      {"lines",
       {{{"from", "N1"}, {"to", "N3"}, {"r_ohm", 0.5851}, {"x_ohm", 0.3057}},
        {{"from", "N3"}, {"to", "N4"}, {"r_ohm", 0.1941}, {"x_ohm", 0.1613}},
        {{"from", "N4"}, {"to", "N5"}, {"r_ohm", 0.2161}, {"x_ohm", 0.1778}},
        {{"from", "N5"}, {"to", "N7"}, {"r_ohm", 0.2}, {"x_ohm", 0.0}},
        {{"from", "N7"}, {"to", "N8"}, {"r_ohm", 0.597}, {"x_ohm", 0.2962}},
        {{"from", "N8"}, {"to", "N9"}, {"r_ohm", 0.1944}, {"x_ohm", 0.1664}}}},
      {"bases", {{"v_base_v", 400.0}, {"s_base_va", 10000.0}}},
      {"slack_v_pu", 1.0}};
  j["limits"] = {{"v_min", 0.9}, {"v_max", 1.05}, {"q_s_max_pu", 0.5}, {"s_s_max_pu", 5.0}};
  if (full_day) {
    j["timeline"] = {{"t_start_s", 0.0},    {"t_end_s", 86400.0}, {"dt_plan_s", 600.0},
                     {"t1_s", 600.0},       {"t2_s", 30.0},       {"admm_budget_iters", 200}};
  } else {
    j["timeline"] = {{"t_start_s", 36000.0}, {"t_end_s", 68400.0}, {"dt_plan_s", 600.0},
                     {"t1_s", 600.0},        {"t2_s", 30.0},       {"admm_budget_iters", 150}};
    j["slack_voltage"] = {
        {"forecast", {{"kind", "constant"}, {"value", 1.0}}},
        {"realization",
         {{"kind", "steps"},
          {"value", 1.0},
          {"steps", {{{"from_s", 45300.0}, {"to_s", 47100.0}, {"value", 1.012}}}}}}};
  }
  j["tariff"] = {{"kind", "tou"},
                 {"low_chf_per_kwh", 0.08},
                 {"high_chf_per_kwh", 0.24},
                 {"high_start_s", 54000.0},
                 {"high_end_s", 86400.0}};

  const char* names[5] = {"N3", "N4", "N5", "N7", "N9"};
  json pros = json::array();
  for (int i = 0; i < 5; ++i) {
    json p;
    p["name"] = std::string("P-") + names[i];
    p["bus"] = names[i];
    p["bess"] = {{"s_max_kva", 2.5}, {"e_kwh", 2.5}, {"soc_min", 0.1}, {"soc_max", 0.9},
                 {"soc_init", 0.5}};
    p["load"] = {{"forecast",
                  {{"kind", "office"}, {"base_kw", 0.3}, {"peak_kw", 1.4}, {"noise_kw", 0.15},
                   {"day", 0}}},
                 {"realization",
                  {{"kind", "office"}, {"base_kw", 0.3}, {"peak_kw", 1.4}, {"noise_kw", 0.15},
                   {"day", 1}}}};
    p["pv"] = {{"forecast", {{"kind", "bell"}, {"peak_kw", 4.2}, {"center_h", 12.5},
                             {"width_h", 2.6}}},
               {"realization", {{"kind", "scaled_forecast"}, {"factor", 0.9}}}};
    pros.push_back(p);
  }
  j["prosumers"] = pros;
  return j.dump(2);
}

}  // namespace flexprice::sim
