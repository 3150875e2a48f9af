#include "sddestab/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sddestab/errors.hpp"

namespace sddestab {

using nlohmann::json;

namespace {

double require_number(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key) || !obj.at(key).is_number())
    throw ConfigError(std::string(where) + ": missing numeric field '" + key + "'");
  return obj.at(key).get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError(std::string("field '") + key + "' must be a number");
  return obj.at(key).get<double>();
}

MonomialTable parse_monomials(const json& obj, const char* where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object of 'px,py' keys");
  MonomialTable table;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    int px = 0, py = 0;
    char extra = 0;
    if (std::sscanf(it.key().c_str(), "%d,%d%c", &px, &py, &extra) != 2 || px < 0 || py < 0)
      throw ConfigError(std::string(where) + ": bad monomial key '" + it.key() +
                        "' (expected 'px,py' with nonnegative integers)");
    if (!it.value().is_number())
      throw ConfigError(std::string(where) + ": coefficient for '" + it.key() + "' must be a number");
    table.terms.push_back({px, py, it.value().get<double>()});
  }
  return table;
}

json monomials_json(const MonomialTable& table) {
  json obj = json::object();
  char key[32];
  for (const Monomial& m : table.terms) {
    std::snprintf(key, sizeof(key), "%d,%d", m.px, m.py);
    obj[key] = m.coeff;
  }
  return obj;
}

DelayFunction parse_delay(const json& obj) {
  if (!obj.is_object() || !obj.contains("kind"))
    throw ConfigError("delay: expected an object with a 'kind' field");
  const std::string kind = obj.at("kind").get<std::string>();
  DelayFunction delay;
  if (kind == "constant") {
    delay = DelayFunction::constant(require_number(obj, "value", "delay"));
  } else if (kind == "sawtooth") {
    delay = DelayFunction::sawtooth(require_number(obj, "base", "delay"),
                                    require_number(obj, "amplitude", "delay"),
                                    require_number(obj, "period", "delay"));
  } else {
    throw ConfigError("delay: unknown kind '" + kind + "' (expected 'constant' or 'sawtooth')");
  }
  if (obj.contains("h_star")) delay.h_star = require_number(obj, "h_star", "delay");
  return delay;
}

GrowthParams parse_growth(const json& obj) {
  GrowthParams g;
  g.K = require_number(obj, "K", "growth");
  g.p = require_number(obj, "p", "growth");
  g.q = require_number(obj, "q", "growth");
  g.q1 = require_number(obj, "q1", "growth");
  g.q2 = require_number(obj, "q2", "growth");
  g.q3 = require_number(obj, "q3", "growth");
  g.q4 = require_number(obj, "q4", "growth");
  g.alpha1 = require_number(obj, "alpha1", "growth");
  g.alpha2 = require_number(obj, "alpha2", "growth");
  g.L = require_number(obj, "L", "growth");
  if (obj.contains("K_poly")) g.K_poly = require_number(obj, "K_poly", "growth");
  return g;
}

InitialHistory parse_history(const json& obj, int n_modes) {
  InitialHistory h;
  if (!obj.is_object()) throw ConfigError("history: expected an object");
  if (obj.contains("constant")) {
    const json& c = obj.at("constant");
    if (c.is_number()) {
      h.constant = {c.get<double>()};
    } else if (c.is_array()) {
      for (const json& v : c) h.constant.push_back(v.get<double>());
    } else {
      throw ConfigError("history: 'constant' must be a number or an array");
    }
  }
  if (obj.contains("table")) {
    for (const json& row : obj.at("table")) {
      if (!row.is_array() || row.size() != 2)
        throw ConfigError("history: table rows must be [s, value] pairs");
      std::vector<double> x;
      if (row[1].is_number()) {
        x = {row[1].get<double>()};
      } else {
        for (const json& v : row[1]) x.push_back(v.get<double>());
      }
      h.table.emplace_back(row[0].get<double>(), std::move(x));
    }
  }
  const int r0_file = static_cast<int>(require_number(obj, "r0", "history"));
  if (r0_file < 1 || r0_file > n_modes)
    throw ConfigError("history: initial mode index out of range (modes are numbered from 1)");
  h.r0 = r0_file - 1;
  return h;
}

ControlSchedule parse_schedule(const json& obj) {
  ControlSchedule s;
  s.period = require_number(obj, "period", "schedule");
  s.width = require_number(obj, "width", "schedule");
  s.obs_gap = require_number(obj, "obs_gap", "schedule");
  s.phase_start = static_cast<int>(number_or(obj, "phase_start", 0.0));
  return s;
}

ModeGains parse_gains(const json& obj) {
  ModeGains g;
  g.k1 = require_number(obj, "k1", "condition_gains");
  g.l1 = require_number(obj, "l1", "condition_gains");
  g.beta1 = require_number(obj, "beta1", "condition_gains");
  g.g1 = require_number(obj, "g1", "condition_gains");
  g.k2 = require_number(obj, "k2", "condition_gains");
  g.l2 = require_number(obj, "l2", "condition_gains");
  g.beta2 = require_number(obj, "beta2", "condition_gains");
  g.g2 = require_number(obj, "g2", "condition_gains");
  return g;
}

RateConstants parse_rates(const json& obj) {
  RateConstants r;
  r.gamma1 = require_number(obj, "gamma1", "rate_constants");
  r.gamma2 = require_number(obj, "gamma2", "rate_constants");
  r.gamma3 = require_number(obj, "gamma3", "rate_constants");
  r.gamma4 = require_number(obj, "gamma4", "rate_constants");
  r.gamma5 = require_number(obj, "gamma5", "rate_constants");
  r.gamma6 = require_number(obj, "gamma6", "rate_constants");
  r.gamma4p = require_number(obj, "gamma4p", "rate_constants");
  r.gamma5p = require_number(obj, "gamma5p", "rate_constants");
  r.gamma6p = require_number(obj, "gamma6p", "rate_constants");
  r.gamma7 = require_number(obj, "gamma7", "rate_constants");
  r.gamma8 = require_number(obj, "gamma8", "rate_constants");
  if (!obj.contains("W") || !obj.at("W").is_object())
    throw ConfigError("rate_constants: missing 'W' object mapping even exponents to coefficients");
  for (auto it = obj.at("W").begin(); it != obj.at("W").end(); ++it) {
    int expo = 0;
    char extra = 0;
    if (std::sscanf(it.key().c_str(), "%d%c", &expo, &extra) != 1 || expo < 2 || expo % 2 != 0)
      throw ConfigError("rate_constants: W exponents must be even integers >= 2");
    r.W.emplace_back(expo, it.value().get<double>());
  }
  return r;
}

} // namespace

RunConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;

    if (!root.contains("generator") || !root.at("generator").is_array())
      throw ConfigError("config: missing 'generator' rate matrix");
    std::vector<std::vector<double>> rows;
    for (const json& row : root.at("generator")) {
      std::vector<double> r;
      for (const json& v : row) r.push_back(v.get<double>());
      rows.push_back(std::move(r));
    }
    cfg.system.generator = GeneratorMatrix::from_rows(rows);
    const int n_modes = cfg.system.generator.n_modes;

    if (!root.contains("modes") || !root.at("modes").is_array())
      throw ConfigError("config: missing 'modes' array");
    std::vector<ScalarModeCoeffs> modes;
    for (const json& m : root.at("modes")) {
      ScalarModeCoeffs c;
      if (m.contains("drift")) c.drift = parse_monomials(m.at("drift"), "modes.drift");
      if (m.contains("diffusion")) c.diffusion = parse_monomials(m.at("diffusion"), "modes.diffusion");
      c.control_gain = number_or(m, "control_gain", 0.0);
      modes.push_back(std::move(c));
    }
    if (static_cast<int>(modes.size()) != n_modes)
      throw ConfigError("config: 'modes' must list exactly one entry per generator row");
    cfg.system.coeffs = std::move(modes);

    if (!root.contains("delay")) throw ConfigError("config: missing 'delay'");
    cfg.system.delay = parse_delay(root.at("delay"));
    if (!root.contains("growth")) throw ConfigError("config: missing 'growth'");
    cfg.system.growth = parse_growth(root.at("growth"));
    if (!root.contains("history")) throw ConfigError("config: missing 'history'");
    cfg.system.history = parse_history(root.at("history"), n_modes);
    if (!root.contains("schedule")) throw ConfigError("config: missing 'schedule'");
    cfg.schedule = parse_schedule(root.at("schedule"));

    if (root.contains("condition_gains")) {
      for (const json& g : root.at("condition_gains")) cfg.gains.push_back(parse_gains(g));
      if (static_cast<int>(cfg.gains.size()) != n_modes)
        throw ConfigError("config: 'condition_gains' must list exactly one entry per mode");
      cfg.has_gains = true;
    }
    if (root.contains("rate_constants")) {
      cfg.rates = parse_rates(root.at("rate_constants"));
      cfg.has_rates = true;
    }
    if (root.contains("certificate")) {
      const json& c = root.at("certificate");
      cfg.cert_delta = number_or(c, "delta", cfg.cert_delta);
      cfg.epsilon = number_or(c, "epsilon", cfg.epsilon);
    }
    if (root.contains("grid")) {
      const json& g = root.at("grid");
      cfg.grid.radius = number_or(g, "radius", cfg.grid.radius);
      cfg.grid.points_per_axis = static_cast<int>(number_or(g, "points", cfg.grid.points_per_axis));
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

std::string config_json(const RunConfig& config) {
  json root;
  const GeneratorMatrix& gen = config.system.generator;
  json grows = json::array();
  for (int i = 0; i < gen.n_modes; ++i) {
    json row = json::array();
    for (int j = 0; j < gen.n_modes; ++j) row.push_back(gen.rate(i, j));
    grows.push_back(std::move(row));
  }
  root["generator"] = std::move(grows);

  if (!config.system.is_scalar())
    throw ConfigError("config_json: only coefficient-table systems can be serialized");
  json modes = json::array();
  for (const ScalarModeCoeffs& c : config.system.scalar_coeffs()) {
    json m;
    m["drift"] = monomials_json(c.drift);
    m["diffusion"] = monomials_json(c.diffusion);
    m["control_gain"] = c.control_gain;
    modes.push_back(std::move(m));
  }
  root["modes"] = std::move(modes);

  const DelayFunction& d = config.system.delay;
  json delay;
  if (d.kind == DelayKind::Constant) {
    delay["kind"] = "constant";
    delay["value"] = d.base;
  } else if (d.kind == DelayKind::Sawtooth) {
    delay["kind"] = "sawtooth";
    delay["base"] = d.base;
    delay["amplitude"] = d.amplitude;
    delay["period"] = d.period;
  } else {
    throw ConfigError("config_json: callback delays cannot be serialized");
  }
  root["delay"] = std::move(delay);

  const GrowthParams& g = config.system.growth;
  json growth;
  growth["K"] = g.K;
  if (g.K_poly) growth["K_poly"] = *g.K_poly;
  growth["p"] = g.p;
  growth["q"] = g.q;
  growth["q1"] = g.q1;
  growth["q2"] = g.q2;
  growth["q3"] = g.q3;
  growth["q4"] = g.q4;
  growth["alpha1"] = g.alpha1;
  growth["alpha2"] = g.alpha2;
  growth["L"] = g.L;
  root["growth"] = std::move(growth);

  json history;
  if (!config.system.history.table.empty()) {
    json table = json::array();
    for (const auto& [s, x] : config.system.history.table) {
      json val = x.size() == 1 ? json(x[0]) : json(x);
      table.push_back(json::array({s, std::move(val)}));
    }
    history["table"] = std::move(table);
  } else {
    const std::vector<double>& c = config.system.history.constant;
    history["constant"] = c.size() == 1 ? json(c[0]) : json(c);
  }
  history["r0"] = config.system.history.r0 + 1;
  root["history"] = std::move(history);

  json schedule;
  schedule["period"] = config.schedule.period;
  schedule["width"] = config.schedule.width;
  schedule["obs_gap"] = config.schedule.obs_gap;
  schedule["phase_start"] = config.schedule.phase_start;
  root["schedule"] = std::move(schedule);

  if (config.has_gains) {
    json gains = json::array();
    for (const ModeGains& mg : config.gains) {
      json e;
      e["k1"] = mg.k1;
      e["l1"] = mg.l1;
      e["beta1"] = mg.beta1;
      e["g1"] = mg.g1;
      e["k2"] = mg.k2;
      e["l2"] = mg.l2;
      e["beta2"] = mg.beta2;
      e["g2"] = mg.g2;
      gains.push_back(std::move(e));
    }
    root["condition_gains"] = std::move(gains);
  }
  if (config.has_rates) {
    const RateConstants& r = config.rates;
    json rates;
    rates["gamma1"] = r.gamma1;
    rates["gamma2"] = r.gamma2;
    rates["gamma3"] = r.gamma3;
    rates["gamma4"] = r.gamma4;
    rates["gamma5"] = r.gamma5;
    rates["gamma6"] = r.gamma6;
    rates["gamma4p"] = r.gamma4p;
    rates["gamma5p"] = r.gamma5p;
    rates["gamma6p"] = r.gamma6p;
    rates["gamma7"] = r.gamma7;
    rates["gamma8"] = r.gamma8;
    json w = json::object();
    char key[32];
    for (const auto& [expo, coeff] : r.W) {
      std::snprintf(key, sizeof(key), "%d", expo);
      w[key] = coeff;
    }
    rates["W"] = std::move(w);
    root["rate_constants"] = std::move(rates);
  }

  json cert;
  cert["delta"] = config.cert_delta;
  cert["epsilon"] = config.epsilon;
  root["certificate"] = std::move(cert);

  json grid;
  grid["radius"] = config.grid.radius;
  grid["points"] = config.grid.points_per_axis;
  root["grid"] = std::move(grid);

  return root.dump(2) + "\n";
}

RunConfig example5_preset() {
  RunConfig cfg;

  cfg.system.generator = GeneratorMatrix::from_rows({{-2.0, 2.0}, {1.0, -1.0}});

  std::vector<ScalarModeCoeffs> modes(2);
  modes[0].drift.terms = {{1, 0, 0.5}, {3, 0, -12.0}, {0, 1, 0.2}, {0, 3, 0.5}};
  modes[0].diffusion.terms = {{0, 1, 0.4}, {0, 2, 0.5}};
  modes[0].control_gain = 8.0;
  modes[1].drift.terms = {{1, 0, 0.8}, {3, 0, -15.0}, {0, 1, 0.4}, {0, 3, 0.8}};
  modes[1].diffusion.terms = {{0, 1, 0.5}, {0, 2, 0.6}};
  modes[1].control_gain = 9.0;
  cfg.system.coeffs = std::move(modes);

  cfg.system.delay = DelayFunction::sawtooth(0.15, 0.05, 2.0);

  GrowthParams& g = cfg.system.growth;
  g.K = 1.85;
  g.K_poly = 15.0;
  g.p = 4.0;
  g.q = 7.0;
  g.q1 = 3.0;
  g.q2 = 3.0;
  g.q3 = 2.0;
  g.q4 = 2.0;
  g.alpha1 = 11.875;
  g.alpha2 = 2.58;
  g.L = 9.0;

  cfg.system.history.constant = {1.0};
  cfg.system.history.r0 = 0;

  cfg.schedule.period = 1.0;
  cfg.schedule.width = 0.6;
  cfg.schedule.obs_gap = 0.01;
  cfg.schedule.phase_start = 0;

  cfg.gains = {
      {-7.4, 0.26, 11.875, 0.625, -7.4, 0.58, 11.875, 1.125},
      {-8.0, 0.45, 14.8, 0.96, -8.0, 0.95, 14.8, 1.68},
  };
  cfg.has_gains = true;

  RateConstants& r = cfg.rates;
  r.gamma1 = 1.0;
  r.gamma2 = 0.001;
  r.gamma3 = 0.002;
  r.gamma4 = 0.981294;
  r.gamma5 = 0.06143;
  r.gamma6 = 0.181265 / 1.472202;
  r.gamma4p = 0.13;
  r.gamma5p = 0.05985;
  r.gamma6p = 0.181345 / 1.472202;
  r.gamma7 = 1.39289664;
  r.gamma8 = 2.86509864;
  r.W = {{4, 1.472202}, {6, 1.39289664}};
  cfg.has_rates = true;

  cfg.cert_delta = 1e-5;
  cfg.epsilon = 1.0;
  return cfg;
}

} // namespace sddestab
