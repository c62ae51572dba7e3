#include "magspec/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "magspec/models.hpp"

namespace magspec {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(Error::Kind::InvalidInput, "config key " + key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad(key, s, "expected a number");
  }
  if (used != s.size()) bad(key, s, "trailing characters");
  return v;
}

long to_int(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    bad(key, s, "expected an integer");
  }
  if (used != s.size()) bad(key, s, "trailing characters");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad(key, s, "expected true or false");
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(seps));
  for (auto& p : parts) boost::trim(p);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"model",
       {
           {"key", [](RunConfig& c, auto&, auto& v) { c.model = v; }},
           {"B", [](RunConfig& c, auto&, auto& v) { c.B_expr = v; }},
           {"V", [](RunConfig& c, auto&, auto& v) { c.V_expr = v; }},
           {"b0", [](RunConfig& c, auto& k, auto& v) { c.b0 = to_double(k, v); }},
           {"charts",
            [](RunConfig& c, auto& k, auto& v) {
              c.charts.clear();
              for (const auto& pair : split(v, ";")) {
                auto uv = split(pair, ":");
                if (uv.size() != 2) bad(k, v, "charts are u:v pairs separated by ';'");
                c.charts.emplace_back(to_double(k, uv[0]), to_double(k, uv[1]));
              }
            }},
           {"search_box",
            [](RunConfig& c, auto& k, auto& v) {
              auto b = parse_double_list(v);
              if (b.size() != 4) bad(k, v, "expected x0, x1, y0, y1");
              c.search_box = {b[0], b[1], b[2], b[3]};
            }},
           {"grid_n", [](RunConfig& c, auto& k, auto& v) { c.grid_n = static_cast<int>(to_int(k, v)); }},
           {"margin", [](RunConfig& c, auto& k, auto& v) { c.margin = to_double(k, v); }},
       }},
      {"sweep",
       {
           {"h", [](RunConfig& c, auto&, auto& v) { c.h = parse_double_list(v); }},
           {"routes", [](RunConfig& c, auto&, auto& v) { c.routes = parse_routes(v); }},
           {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
           {"threads", [](RunConfig& c, auto& k, auto& v) { c.threads = static_cast<int>(to_int(k, v)); }},
       }},
      {"numerics",
       {
           {"C", [](RunConfig& c, auto& k, auto& v) { c.C = to_double(k, v); }},
           {"Cprime", [](RunConfig& c, auto& k, auto& v) { c.Cprime = to_double(k, v); }},
           {"kappa", [](RunConfig& c, auto& k, auto& v) { c.kappa = to_double(k, v); }},
           {"tol", [](RunConfig& c, auto& k, auto& v) { c.tol = to_double(k, v); }},
           {"w_coeff", [](RunConfig& c, auto& k, auto& v) { c.w_coeff = to_double(k, v); }},
           {"direct_box", [](RunConfig& c, auto& k, auto& v) { c.direct_box = to_double(k, v); }},
           {"direct_points", [](RunConfig& c, auto&, auto& v) { c.direct_points = parse_double_list(v); }},
           {"direct_k", [](RunConfig& c, auto& k, auto& v) { c.direct_k = static_cast<int>(to_int(k, v)); }},
           {"eff_M", [](RunConfig& c, auto& k, auto& v) { c.eff_M = static_cast<int>(to_int(k, v)); }},
           {"eff_window", [](RunConfig& c, auto& k, auto& v) { c.eff_window = to_double(k, v); }},
           {"eff_box", [](RunConfig& c, auto& k, auto& v) { c.eff_box = to_double(k, v); }},
           {"mu1_N", [](RunConfig& c, auto& k, auto& v) { c.mu1_N = static_cast<int>(to_int(k, v)); }},
           {"with_mu1", [](RunConfig& c, auto& k, auto& v) { c.with_mu1 = to_bool(k, v); }},
           {"local_z", [](RunConfig& c, auto& k, auto& v) { c.local_z = to_bool(k, v); }},
           {"quad_N", [](RunConfig& c, auto& k, auto& v) { c.quad_N = static_cast<int>(to_int(k, v)); }},
           {"fit_levels", [](RunConfig& c, auto& k, auto& v) { c.fit_levels = static_cast<int>(to_int(k, v)); }},
           {"fit_order", [](RunConfig& c, auto& k, auto& v) { c.fit_order = static_cast<int>(to_int(k, v)); }},
           {"probes", [](RunConfig& c, auto& k, auto& v) { c.probes = to_bool(k, v); }},
           {"refinement", [](RunConfig& c, auto& k, auto& v) { c.refinement = to_bool(k, v); }},
       }},
      {"output",
       {
           {"dir", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
           {"prefix", [](RunConfig& c, auto&, auto& v) { c.prefix = v; }},
           {"csv", [](RunConfig& c, auto& k, auto& v) { c.csv = to_bool(k, v); }},
           {"json", [](RunConfig& c, auto& k, auto& v) { c.json = to_bool(k, v); }},
       }},
  };
  return table;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& t : split(text, ", ")) out.push_back(to_double("list", t));
  return out;
}

std::vector<Route> parse_routes(const std::string& text) {
  std::vector<Route> out;
  for (const auto& t : split(text, ", ")) {
    if (t == "direct")
      out.push_back(Route::Direct);
    else if (t == "effective")
      out.push_back(Route::Effective);
    else if (t == "quadratic")
      out.push_back(Route::Quadratic);
    else
      throw Error(Error::Kind::InvalidInput, "unknown route '" + t + "' (direct, effective, quadratic)");
  }
  if (out.empty()) throw Error(Error::Kind::InvalidInput, "empty route list");
  return out;
}

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Error::Kind::InvalidInput, std::string("config syntax: ") + e.what());
  }
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    auto sec = table.find(section);
    if (sec == table.end()) {
      if (body.empty()) throw Error(Error::Kind::InvalidInput, "config key outside a section: " + section);
      throw Error(Error::Kind::InvalidInput, "unknown config section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end())
        throw Error(Error::Kind::InvalidInput, "unknown config key '" + key + "' in [" + section + "]");
      it->second(cfg, section + "." + key, boost::trim_copy(node.data()));
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::InvalidInput, "cannot open config " + path);
  return parse_config(in);
}

void validate_config(const RunConfig& c, bool for_sweep) {
  auto fail = [](const std::string& m) { throw Error(Error::Kind::InvalidInput, "config: " + m); };
  if (c.h.empty()) fail("h list is empty");
  for (std::size_t i = 0; i < c.h.size(); ++i) {
    if (!(c.h[i] > 0)) fail("h values must be positive");
    if (i > 0 && !(c.h[i] < c.h[i - 1])) fail("h list must be strictly decreasing");
  }
  if (for_sweep && c.h.size() < 3) fail("a sweep needs at least three h values");
  if (!(c.kappa > 0 && c.kappa < 0.5)) fail("kappa must lie in (0, 1/2)");
  if (!(c.C > 0 && c.Cprime > c.C)) fail("need 0 < C < Cprime");
  if (c.threads < 1) fail("threads must be >= 1");
  if (c.eff_M < 16 || (c.eff_M & (c.eff_M - 1))) fail("eff_M must be a power of two >= 16");
  if (c.direct_points.empty()) fail("direct_points is empty");
  if (c.direct_k < 1) fail("direct_k must be >= 1");
  if (c.fit_levels < 1 || c.fit_order < -1) fail("fit_levels >= 1 and fit_order >= -1 required");
  if (c.grid_n < 5) fail("grid_n must be >= 5");
  for (const auto& [u, v] : c.charts)
    if (!(u > 0)) fail("chart coefficient u must be positive");
  if (c.routes.empty()) fail("no routes selected");
  if (c.model == "expr" && c.B_expr.empty()) fail("model.key = expr needs model.B");
  if (c.model != "expr" && !c.B_expr.empty()) fail("model.B is only used with key = expr");
}

FieldModel config_model(const RunConfig& cfg) {
  if (cfg.model == "expr") return expression_model(cfg.B_expr, cfg.V_expr, cfg.b0, 1.0, 0.0, cfg.search_box);
  return make_model(cfg.model);
}

std::vector<std::pair<double, double>> config_charts(const RunConfig& cfg, const FieldModel& m) {
  if (!cfg.charts.empty()) return cfg.charts;
  return {{m.u, m.v}};
}

}  // namespace magspec
