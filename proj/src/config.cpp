#include "mpabc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mpabc/errors.hpp"

extern char** environ;

namespace mpabc {

namespace {

constexpr const char* kPrefix = "MPABC_";

[[noreturn]] void bad(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

void allow_only(const Json& section, const std::string& where, std::initializer_list<const char*> keys) {
  if (!section.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : section.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
      bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

double number(const Json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

std::uint64_t count(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  bad(key, "expected a non-negative integer");
}

std::string text(const Json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

ParameterVector parameters(const Json& v, const std::string& key) {
  if (!v.is_object()) bad(key, "expected an object of name: value");
  ParameterVector out;
  for (const auto& [name, value] : v.items()) {
    try {
      out.set(name, number(value, key + "." + name));
    } catch (const ModelError& e) {
      bad(key + "." + name, e.what());
    }
  }
  return out;
}

Scheme scheme(const Json& v, const std::string& key) {
  try {
    return parse_scheme(text(v, key));
  } catch (const ConfigError& e) {
    bad(key, e.what());
  }
}

Json parameters_json(const ParameterVector& p) {
  Json out = Json::object();
  for (const auto& [name, value] : p) out[name] = value;
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

} // namespace

SimulationSetup RunConfig::setup() const {
  SimulationSetup s;
  s.model_id = model_id;
  s.fixed = fixed;
  s.grid = SimGrid::make(dt, t_end);
  s.scheme = scheme;
  s.burn_in = burn_in;
  s.summary = summary;
  return s;
}

SimulationSetup RunConfig::reference_setup() const {
  SimulationSetup s = setup();
  s.scheme = reference.scheme.value_or(scheme);
  s.grid = SimGrid::make(reference.dt.value_or(dt), reference.t_end.value_or(t_end));
  return s;
}

RunConfig parse_config(const Json& doc) {
  allow_only(doc, "", {"model", "scheme", "grid", "burn_in", "prior", "abc", "weight", "reference", "summaries", "seed",
                       "workers", "output_dir", "description"});
  RunConfig c;

  if (!doc.contains("model")) bad("model", "missing");
  const Json& model = doc["model"];
  allow_only(model, "model", {"id", "fixed"});
  c.model_id = text(model.value("id", Json()), "model.id");
  try {
    default_parameters(c.model_id);
  } catch (const ModelError& e) {
    bad("model.id", e.what());
  }
  if (model.contains("fixed")) c.fixed = parameters(model["fixed"], "model.fixed");

  if (doc.contains("scheme")) c.scheme = scheme(doc["scheme"], "scheme");

  if (!doc.contains("grid")) bad("grid", "missing");
  allow_only(doc["grid"], "grid", {"dt", "t_end"});
  c.dt = number(doc["grid"].value("dt", Json()), "grid.dt");
  c.t_end = number(doc["grid"].value("t_end", Json()), "grid.t_end");
  SimGrid::make(c.dt, c.t_end);
  if (doc.contains("burn_in")) {
    c.burn_in = number(doc["burn_in"], "burn_in");
    if (*c.burn_in < 0.0) bad("burn_in", "must be >= 0");
  }

  if (doc.contains("prior")) {
    if (!doc["prior"].is_object()) bad("prior", "expected an object of name: [lower, upper]");
    for (const auto& [name, box] : doc["prior"].items()) {
      if (!box.is_array() || box.size() != 2) bad("prior." + name, "expected [lower, upper]");
      c.prior.push_back({name, number(box[0], "prior." + name), number(box[1], "prior." + name)});
    }
  }

  if (doc.contains("abc")) {
    const Json& abc = doc["abc"];
    allow_only(abc, "abc", {"n_total", "percentile", "aggregator"});
    if (abc.contains("n_total")) c.n_total = count(abc["n_total"], "abc.n_total");
    if (abc.contains("percentile")) c.percentile = number(abc["percentile"], "abc.percentile");
    if (abc.contains("aggregator")) {
      try {
        c.aggregator = parse_aggregator(text(abc["aggregator"], "abc.aggregator"));
      } catch (const ConfigError& e) {
        bad("abc.aggregator", e.what());
      }
    }
  }
  if (c.n_total == 0) bad("abc.n_total", "must be at least 1");
  if (!(c.percentile > 0.0 && c.percentile <= 100.0)) bad("abc.percentile", "must lie in (0, 100]");

  if (doc.contains("weight")) {
    const Json& w = doc["weight"];
    allow_only(w, "weight", {"mode", "value", "pilot_l"});
    const std::string mode = text(w.value("mode", Json("zero")), "weight.mode");
    if (mode == "zero")
      c.weight_mode = WeightMode::zero;
    else if (mode == "fixed")
      c.weight_mode = WeightMode::fixed;
    else if (mode == "pilot")
      c.weight_mode = WeightMode::pilot;
    else
      bad("weight.mode", "expected zero, fixed or pilot");
    if (w.contains("value")) c.weight_value = number(w["value"], "weight.value");
    if (w.contains("pilot_l")) c.pilot_l = count(w["pilot_l"], "weight.pilot_l");
    if (c.weight_mode == WeightMode::fixed && !(c.weight_value >= 0.0 && std::isfinite(c.weight_value)))
      bad("weight.value", "must be finite and >= 0");
    if (c.pilot_l == 0) bad("weight.pilot_l", "must be at least 1");
  }

  if (doc.contains("reference")) {
    const Json& r = doc["reference"];
    allow_only(r, "reference",
               {"source", "m", "theta", "seed", "scheme", "dt", "t_end", "paths", "sample_rate", "rescale", "cut"});
    const std::string source = text(r.value("source", Json("simulate")), "reference.source");
    if (source == "simulate")
      c.reference.source = ReferenceConfig::Source::simulate;
    else if (source == "files")
      c.reference.source = ReferenceConfig::Source::files;
    else
      bad("reference.source", "expected simulate or files");
    if (r.contains("m")) c.reference.m = count(r["m"], "reference.m");
    if (r.contains("theta")) c.reference.theta = parameters(r["theta"], "reference.theta");
    if (r.contains("seed")) c.reference.seed = count(r["seed"], "reference.seed");
    if (r.contains("scheme")) c.reference.scheme = scheme(r["scheme"], "reference.scheme");
    if (r.contains("dt")) c.reference.dt = number(r["dt"], "reference.dt");
    if (r.contains("t_end")) c.reference.t_end = number(r["t_end"], "reference.t_end");
    if (r.contains("paths")) {
      if (!r["paths"].is_array()) bad("reference.paths", "expected a list of file names");
      for (const auto& p : r["paths"]) c.reference.paths.emplace_back(text(p, "reference.paths"));
    }
    if (r.contains("sample_rate")) c.reference.sample_rate = number(r["sample_rate"], "reference.sample_rate");
    if (r.contains("rescale")) {
      allow_only(r["rescale"], "reference.rescale", {"offset", "scale"});
      c.reference.rescale.offset = number(r["rescale"].value("offset", Json(0.0)), "reference.rescale.offset");
      c.reference.rescale.scale = number(r["rescale"].value("scale", Json(1.0)), "reference.rescale.scale");
    }
    if (r.contains("cut")) c.reference.cut = count(r["cut"], "reference.cut");
  }
  if (c.reference.source == ReferenceConfig::Source::simulate) {
    if (c.reference.m == 0) bad("reference.m", "must be at least 1");
    SimGrid::make(c.reference.dt.value_or(c.dt), c.reference.t_end.value_or(c.t_end));
  } else {
    if (c.reference.paths.empty()) bad("reference.paths", "required when source is files");
    for (const auto& path : c.reference.paths)
      if (!std::filesystem::is_regular_file(path)) bad("reference.paths", "no such file " + path.string());
    if (c.reference.cut == 0) bad("reference.cut", "must be at least 1");
    if (c.reference.sample_rate < 0.0) bad("reference.sample_rate", "must be > 0");
  }

  if (doc.contains("summaries")) {
    const Json& s = doc["summaries"];
    allow_only(s, "summaries", {"kde_points", "kde_cut", "taper", "span_per_time", "halfwidth"});
    if (s.contains("kde_points")) c.summary.kde.grid_points = static_cast<int>(count(s["kde_points"], "summaries.kde_points"));
    if (s.contains("kde_cut")) c.summary.kde.cut = number(s["kde_cut"], "summaries.kde_cut");
    if (s.contains("taper")) c.summary.spectrum.taper = number(s["taper"], "summaries.taper");
    if (s.contains("span_per_time")) c.summary.spectrum.span_per_time = number(s["span_per_time"], "summaries.span_per_time");
    if (s.contains("halfwidth"))
      c.summary.spectrum.halfwidth_override = static_cast<int>(count(s["halfwidth"], "summaries.halfwidth"));
    if (c.summary.kde.grid_points < 2) bad("summaries.kde_points", "must be at least 2");
    if (!(c.summary.spectrum.taper >= 0.0 && c.summary.spectrum.taper <= 1.0)) bad("summaries.taper", "must lie in [0, 1]");
  }

  if (doc.contains("seed")) c.seed = count(doc["seed"], "seed");
  if (doc.contains("workers")) {
    c.workers = static_cast<int>(count(doc["workers"], "workers"));
    if (c.workers < 1) bad("workers", "must be at least 1");
  }
  if (doc.contains("output_dir")) c.output_dir = text(doc["output_dir"], "output_dir");

  // Model-level validation: every name must belong to the model and the
  // prior midpoint must build a valid model.
  ParameterVector probe = c.fixed;
  for (const auto& b : c.prior) probe.set(b.name, 0.5 * (b.lower + b.upper));
  try {
    if (!c.prior.empty()) UniformPrior(c.prior);
    make_model(c.model_id, probe);
    make_model(c.model_id, c.fixed.merged(c.reference.theta));
  } catch (const ConfigError& e) {
    bad("prior", e.what());
  } catch (const ModelError& e) {
    bad("model", e.what());
  }
  return c;
}

Json to_json(const RunConfig& c) {
  Json doc;
  doc["model"] = {{"id", c.model_id}, {"fixed", parameters_json(c.fixed)}};
  doc["scheme"] = std::string(to_string(c.scheme));
  doc["grid"] = {{"dt", c.dt}, {"t_end", c.t_end}};
  if (c.burn_in) doc["burn_in"] = *c.burn_in;
  Json prior = Json::object();
  for (const auto& b : c.prior) prior[b.name] = Json::array({b.lower, b.upper});
  doc["prior"] = prior;
  doc["abc"] = {{"n_total", c.n_total}, {"percentile", c.percentile}, {"aggregator", std::string(to_string(c.aggregator))}};
  const char* mode = c.weight_mode == WeightMode::zero ? "zero" : c.weight_mode == WeightMode::fixed ? "fixed" : "pilot";
  doc["weight"] = {{"mode", mode}, {"value", c.weight_value}, {"pilot_l", c.pilot_l}};
  Json ref;
  ref["source"] = c.reference.source == ReferenceConfig::Source::simulate ? "simulate" : "files";
  ref["m"] = c.reference.m;
  ref["theta"] = parameters_json(c.reference.theta);
  if (c.reference.seed) ref["seed"] = *c.reference.seed;
  if (c.reference.scheme) ref["scheme"] = std::string(to_string(*c.reference.scheme));
  if (c.reference.dt) ref["dt"] = *c.reference.dt;
  if (c.reference.t_end) ref["t_end"] = *c.reference.t_end;
  if (!c.reference.paths.empty()) {
    ref["paths"] = Json::array();
    for (const auto& p : c.reference.paths) ref["paths"].push_back(p.string());
  }
  ref["sample_rate"] = c.reference.sample_rate;
  ref["rescale"] = {{"offset", c.reference.rescale.offset}, {"scale", c.reference.rescale.scale}};
  ref["cut"] = c.reference.cut;
  doc["reference"] = ref;
  Json summaries = {{"kde_points", c.summary.kde.grid_points},
                    {"kde_cut", c.summary.kde.cut},
                    {"taper", c.summary.spectrum.taper},
                    {"span_per_time", c.summary.spectrum.span_per_time}};
  if (c.summary.spectrum.halfwidth_override >= 0) summaries["halfwidth"] = c.summary.spectrum.halfwidth_override;
  doc["summaries"] = summaries;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  doc["output_dir"] = c.output_dir.string();
  return doc;
}

void apply_overrides(Json& doc, const std::map<std::string, std::string>& environment) {
  const std::string prefix = kPrefix;
  for (const auto& [name, raw] : environment) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::vector<std::string> path;
    std::string rest = name.substr(prefix.size());
    for (std::size_t pos; (pos = rest.find("__")) != std::string::npos; rest = rest.substr(pos + 2))
      path.push_back(rest.substr(0, pos));
    path.push_back(rest);

    Json* node = &doc;
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (!node->is_object()) *node = Json::object();
      // keep an existing key's spelling when it matches case-insensitively
      std::string key = lower(path[k]);
      for (const auto& [existing, unused] : node->items())
        if (lower(existing) == key) key = existing;
      node = &(*node)[key];
    }
    const Json parsed = Json::parse(raw, nullptr, false);
    *node = parsed.is_discarded() ? Json(raw) : parsed;
  }
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    const auto eq = entry.find('=');
    if (eq != std::string::npos && entry.rfind(kPrefix, 0) == 0) out[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& environment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json doc = Json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  if (doc.is_object() && doc.contains("config") && doc.contains("results")) doc = doc["config"];
  apply_overrides(doc, environment);
  return parse_config(doc);
}

} // namespace mpabc
