#include "etfrp/json_io.hpp"

#include <algorithm>
#include <cmath>

#include "etfrp/errors.hpp"
#include "etfrp/numfmt.hpp"

namespace etfrp {
namespace {

constexpr const char* kInstanceFormat = "etfrp-instance/1";

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "/" + key, "missing required field");
  return *it;
}

double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path, "expected number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(path, "expected finite number");
  return x;
}

int as_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path, "expected integer");
  return v.get<int>();
}

bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw ParseError(path, "expected boolean");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected string");
  return v.get<std::string>();
}

const Json& as_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path, "expected array");
  return v;
}

double number_or(const Json& obj, const std::string& key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, path + "/" + key);
}

int int_or(const Json& obj, const std::string& key, int fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_int(*it, path + "/" + key);
}

bool bool_or(const Json& obj, const std::string& key, bool fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_bool(*it, path + "/" + key);
}

std::pair<double, double> number_pair(const Json& v, const std::string& path) {
  as_array(v, path);
  if (v.size() != 2) throw ParseError(path, "expected [low, high]");
  return {as_number(v[0], path + "/0"), as_number(v[1], path + "/1")};
}

Matrix matrix_from_json(const Json& v, const std::string& path) {
  as_array(v, path);
  const int n = static_cast<int>(v.size());
  Matrix m(n);
  for (int i = 0; i < n; ++i) {
    const std::string row_path = path + "/" + std::to_string(i);
    const Json& row = as_array(v[static_cast<std::size_t>(i)], row_path);
    if (static_cast<int>(row.size()) != n) throw ParseError(row_path, "matrix must be square");
    for (int j = 0; j < n; ++j) {
      m(i, j) = as_number(row[static_cast<std::size_t>(j)], row_path + "/" + std::to_string(j));
    }
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.size(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

NodeKind kind_from_string(const std::string& s, const std::string& path) {
  if (s == "plain") return NodeKind::kPlain;
  if (s == "delivery") return NodeKind::kDelivery;
  if (s == "charger") return NodeKind::kCharger;
  if (s == "depot") return NodeKind::kDepot;
  throw ParseError(path, "unknown node kind '" + s + "'");
}

DeliveryMode mode_from_string(const std::string& s, const std::string& path) {
  if (s == "sequential") return DeliveryMode::kSequential;
  if (s == "flexible") return DeliveryMode::kFlexible;
  throw ParseError(path, "unknown delivery mode '" + s + "'");
}

Json stochastic_to_json(const StochasticParams& p) {
  Json windows = Json::array();
  for (const auto& w : p.rush_windows) windows.push_back({w.start_hour, w.end_hour});
  Json unloading;
  if (p.unloading.stochastic) {
    unloading = {{"mode", "gaussian"},
                 {"mean", p.unloading.hours},
                 {"std", p.unloading.std},
                 {"clip", {p.unloading.clip_low, p.unloading.clip_high}}};
  } else {
    unloading = {{"mode", "fixed"}, {"hours", p.unloading.hours}};
  }
  return {{"deterministic", p.deterministic},
          {"travel_std_factor", p.travel_std_factor},
          {"rush_multiplier", p.rush_multiplier},
          {"rush_windows", windows},
          {"day_start_hour", p.day_start_hour},
          {"travel_clip", {p.travel_clip_low, p.travel_clip_high}},
          {"energy_clip", {p.xi_low, p.xi_high}},
          {"energy_noise_std", p.energy_noise_std},
          {"unloading", unloading}};
}

StochasticParams stochastic_from_json(const Json& v, const std::string& path) {
  if (!v.is_object()) throw ParseError(path, "expected object");
  StochasticParams p;
  p.deterministic = bool_or(v, "deterministic", p.deterministic, path);
  p.travel_std_factor = number_or(v, "travel_std_factor", p.travel_std_factor, path);
  p.rush_multiplier = number_or(v, "rush_multiplier", p.rush_multiplier, path);
  p.day_start_hour = number_or(v, "day_start_hour", p.day_start_hour, path);
  p.energy_noise_std = number_or(v, "energy_noise_std", p.energy_noise_std, path);
  if (auto it = v.find("rush_windows"); it != v.end()) {
    const std::string wp = path + "/rush_windows";
    as_array(*it, wp);
    p.rush_windows.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto [a, b] = number_pair((*it)[i], wp + "/" + std::to_string(i));
      p.rush_windows.push_back({a, b});
    }
  }
  if (auto it = v.find("travel_clip"); it != v.end()) {
    std::tie(p.travel_clip_low, p.travel_clip_high) = number_pair(*it, path + "/travel_clip");
  }
  if (auto it = v.find("energy_clip"); it != v.end()) {
    std::tie(p.xi_low, p.xi_high) = number_pair(*it, path + "/energy_clip");
  }
  if (auto it = v.find("unloading"); it != v.end()) {
    const std::string up = path + "/unloading";
    const std::string mode = as_string(require(*it, "mode", up), up + "/mode");
    if (mode == "fixed") {
      p.unloading.stochastic = false;
      p.unloading.hours = as_number(require(*it, "hours", up), up + "/hours");
    } else if (mode == "gaussian") {
      p.unloading.stochastic = true;
      p.unloading.hours = as_number(require(*it, "mean", up), up + "/mean");
      p.unloading.std = as_number(require(*it, "std", up), up + "/std");
      std::tie(p.unloading.clip_low, p.unloading.clip_high) =
          number_pair(require(*it, "clip", up), up + "/clip");
    } else {
      throw ParseError(up + "/mode", "expected \"fixed\" or \"gaussian\"");
    }
  }
  return p;
}

bool is_scalar(const Json& v) { return !v.is_array() && !v.is_object(); }

void emit(const Json& v, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (v.is_number_float()) {
    out += format_sig9(v.get<double>());
  } else if (v.is_object()) {
    if (v.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner + Json(it.key()).dump() + ": ";
      emit(it.value(), out, indent + 2);
    }
    out += "\n" + pad + "}";
  } else if (v.is_array()) {
    const bool flat = std::all_of(v.begin(), v.end(), is_scalar);
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        emit(v[i], out, indent);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",\n";
      out += inner;
      emit(v[i], out, indent + 2);
    }
    out += "\n" + pad + "]";
  } else {
    out += v.dump();
  }
}

}  // namespace

Json config_to_json(const ScenarioConfig& c) {
  return {{"alpha", c.alpha},
          {"allow_unsafe_alpha", c.allow_unsafe_alpha},
          {"duration_set", c.duration_set},
          {"charge_dt", c.charge_dt},
          {"horizon_T", c.horizon_T},
          {"time_limit_h", c.time_limit_h},
          {"k_chg", c.k_chg},
          {"mask_full_stations", c.mask_full_stations},
          {"stochastic", stochastic_to_json(c.stochastic)},
          {"reward",
           {{"lambda1", c.reward.lambda1}, {"lambda2", c.reward.lambda2}, {"lambda3", c.reward.lambda3}}}};
}

ScenarioConfig config_from_json(const Json& v, const std::string& path) {
  if (!v.is_object()) throw ParseError(path, "expected object");
  ScenarioConfig c;
  c.alpha = number_or(v, "alpha", c.alpha, path);
  c.allow_unsafe_alpha = bool_or(v, "allow_unsafe_alpha", c.allow_unsafe_alpha, path);
  c.charge_dt = number_or(v, "charge_dt", c.charge_dt, path);
  c.horizon_T = number_or(v, "horizon_T", c.horizon_T, path);
  c.time_limit_h = number_or(v, "time_limit_h", c.time_limit_h, path);
  c.k_chg = int_or(v, "k_chg", c.k_chg, path);
  c.mask_full_stations = bool_or(v, "mask_full_stations", c.mask_full_stations, path);
  if (auto it = v.find("duration_set"); it != v.end()) {
    const std::string dp = path + "/duration_set";
    as_array(*it, dp);
    c.duration_set.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.duration_set.push_back(as_number((*it)[i], dp + "/" + std::to_string(i)));
    }
  }
  if (auto it = v.find("stochastic"); it != v.end()) {
    c.stochastic = stochastic_from_json(*it, path + "/stochastic");
  }
  if (auto it = v.find("reward"); it != v.end()) {
    const std::string rp = path + "/reward";
    if (!it->is_object()) throw ParseError(rp, "expected object");
    c.reward.lambda1 = number_or(*it, "lambda1", c.reward.lambda1, rp);
    c.reward.lambda2 = number_or(*it, "lambda2", c.reward.lambda2, rp);
    c.reward.lambda3 = number_or(*it, "lambda3", c.reward.lambda3, rp);
  }
  return c;
}

Json instance_to_json(const NetworkInstance& inst) {
  Json nodes = Json::array();
  for (const auto& n : inst.nodes) {
    nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"x", n.x}, {"y", n.y}});
  }
  Json chargers = Json::array();
  for (const auto& c : inst.chargers) {
    chargers.push_back(
        {{"node", c.node}, {"p_max", c.p_max}, {"p_min", c.p_min}, {"eta", c.eta}, {"ports", c.ports}});
  }
  Json trucks = Json::array();
  for (const auto& t : inst.trucks) {
    trucks.push_back({{"id", t.id},
                      {"start_node", t.start_node},
                      {"battery_capacity", t.battery_capacity},
                      {"initial_battery", t.initial_battery},
                      {"battery_floor", t.battery_floor},
                      {"deliveries", t.deliveries},
                      {"mode", std::string(to_string(t.mode))}});
  }
  return {{"format", kInstanceFormat},
          {"meta", {{"name", inst.name}}},
          {"nodes", nodes},
          {"tau", matrix_to_json(inst.tau)},
          {"energy", matrix_to_json(inst.energy)},
          {"chargers", chargers},
          {"trucks", trucks},
          {"config", config_to_json(inst.config)}};
}

NetworkInstance instance_from_json(const Json& doc) {
  if (!doc.is_object()) throw ParseError("", "expected top-level object");
  const std::string format = as_string(require(doc, "format", ""), "/format");
  if (format != kInstanceFormat) {
    throw ParseError("/format", "unsupported format '" + format + "', expected " + kInstanceFormat);
  }
  NetworkInstance inst;
  if (auto it = doc.find("meta"); it != doc.end()) {
    if (!it->is_object()) throw ParseError("/meta", "expected object");
    if (auto name = it->find("name"); name != it->end()) inst.name = as_string(*name, "/meta/name");
  }

  const Json& nodes = as_array(require(doc, "nodes", ""), "/nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = "/nodes/" + std::to_string(i);
    PoiNode n;
    n.id = as_int(require(nodes[i], "id", p), p + "/id");
    n.kind = kind_from_string(as_string(require(nodes[i], "kind", p), p + "/kind"), p + "/kind");
    n.x = number_or(nodes[i], "x", 0.0, p);
    n.y = number_or(nodes[i], "y", 0.0, p);
    inst.nodes.push_back(n);
  }
  inst.tau = matrix_from_json(require(doc, "tau", ""), "/tau");
  inst.energy = matrix_from_json(require(doc, "energy", ""), "/energy");

  const Json& chargers = as_array(require(doc, "chargers", ""), "/chargers");
  for (std::size_t i = 0; i < chargers.size(); ++i) {
    const std::string p = "/chargers/" + std::to_string(i);
    ChargerSpec c;
    c.node = as_int(require(chargers[i], "node", p), p + "/node");
    c.p_max = as_number(require(chargers[i], "p_max", p), p + "/p_max");
    c.p_min = number_or(chargers[i], "p_min", c.p_min, p);
    c.eta = as_number(require(chargers[i], "eta", p), p + "/eta");
    c.ports = as_int(require(chargers[i], "ports", p), p + "/ports");
    inst.chargers.push_back(c);
  }

  const Json& trucks = as_array(require(doc, "trucks", ""), "/trucks");
  for (std::size_t i = 0; i < trucks.size(); ++i) {
    const std::string p = "/trucks/" + std::to_string(i);
    const Json& t = trucks[i];
    TruckSpec spec;
    spec.id = as_int(require(t, "id", p), p + "/id");
    spec.start_node = as_int(require(t, "start_node", p), p + "/start_node");
    spec.battery_capacity = as_number(require(t, "battery_capacity", p), p + "/battery_capacity");
    spec.initial_battery = as_number(require(t, "initial_battery", p), p + "/initial_battery");
    spec.battery_floor = number_or(t, "battery_floor", 0.0, p);
    const Json& dl = as_array(require(t, "deliveries", p), p + "/deliveries");
    for (std::size_t k = 0; k < dl.size(); ++k) {
      spec.deliveries.push_back(as_int(dl[k], p + "/deliveries/" + std::to_string(k)));
    }
    if (auto it = t.find("mode"); it != t.end()) {
      spec.mode = mode_from_string(as_string(*it, p + "/mode"), p + "/mode");
    }
    inst.trucks.push_back(std::move(spec));
  }
  if (auto it = doc.find("config"); it != doc.end()) inst.config = config_from_json(*it);
  return inst;
}

std::string emit_canonical(const Json& doc) {
  std::string out;
  emit(doc, out, 0);
  out += "\n";
  return out;
}

}  // namespace etfrp
