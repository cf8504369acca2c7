#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "branchexp/cli.hpp"
#include "branchexp/error.hpp"

namespace branchexp::cli {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// nlohmann does not keep source positions, so field diagnostics point at
// the first line that mentions the key.
int line_of_key(std::string_view text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  const std::size_t at = text.find(quoted);
  return at == std::string_view::npos ? 0 : line_of_offset(text, at);
}

class Reader {
 public:
  Reader(std::string_view text, std::vector<std::string>& problems)
      : text_(text), problems_(problems) {}

  [[noreturn]] void type_error(const std::string& path, const std::string& key,
                               const std::string& expected) const {
    throw ParseError("expected " + expected, line_of_key(text_, key), path);
  }

  const json* find(const json& obj, const std::string& key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number(const json& v, const std::string& path, const std::string& key) const {
    if (!v.is_number()) type_error(path, key, "a number");
    return v.get<double>();
  }

  std::int64_t integer(const json& v, const std::string& path, const std::string& key) const {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::nearbyint(x) == x && std::fabs(x) < 9e15) return static_cast<std::int64_t>(x);
    }
    type_error(path, key, "an integer");
  }

  std::uint64_t unsigned_integer(const json& v, const std::string& path,
                                 const std::string& key) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      problems_.push_back(path + " must be >= 0");
      return 0;
    }
    type_error(path, key, "a non-negative integer");
  }

  std::string string(const json& v, const std::string& path, const std::string& key) const {
    if (!v.is_string()) type_error(path, key, "a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::string& path, const std::string& key) const {
    if (!v.is_boolean()) type_error(path, key, "true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const json& v, const std::string& path, const std::string& key) const {
    if (!v.is_array()) type_error(path, key, "an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number(v[i], path + "[" + std::to_string(i) + "]", key));
    }
    return out;
  }

  const json& object(const json& v, const std::string& path, const std::string& key) const {
    if (!v.is_object()) type_error(path, key, "an object");
    return v;
  }

  void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                      const std::string& path) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const bool ok = std::any_of(known.begin(), known.end(),
                                  [&](const char* k) { return it.key() == k; });
      if (!ok) problems_.push_back("unknown field '" + (path.empty() ? "" : path + ".") + it.key() + "'");
    }
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    const json* v = find(obj, key);
    if (v == nullptr) {
      throw ParseError("missing required field", line_of_key(text_, path),
                       path.empty() ? key : path + "." + key);
    }
    return *v;
  }

  void problem(std::string p) const { problems_.push_back(std::move(p)); }

 private:
  std::string_view text_;
  std::vector<std::string>& problems_;
};

// Law objects: {"family": ..., "params": {...}}.

std::optional<LabelLaw> parse_label_law(const Reader& r, const json& v, const std::string& path) {
  r.object(v, path, "family");
  r.reject_unknown(v, {"family", "params"}, path);
  const std::string family = r.string(r.require(v, "family", path), path + ".family", "family");
  const json& p = r.object(r.require(v, "params", path), path + ".params", "params");
  const std::string pp = path + ".params";
  try {
    if (family == "Atomic") {
      r.reject_unknown(p, {"atoms", "probs"}, pp);
      return LabelLaw::atomic(r.numbers(r.require(p, "atoms", pp), pp + ".atoms", "atoms"),
                              r.numbers(r.require(p, "probs", pp), pp + ".probs", "probs"));
    }
    if (family == "LogNormal") {
      r.reject_unknown(p, {"location", "scale"}, pp);
      return LabelLaw::log_normal(
          r.number(r.require(p, "location", pp), pp + ".location", "location"),
          r.number(r.require(p, "scale", pp), pp + ".scale", "scale"));
    }
    if (family == "LogUniform") {
      r.reject_unknown(p, {"a", "b"}, pp);
      return LabelLaw::log_uniform(r.number(r.require(p, "a", pp), pp + ".a", "a"),
                                   r.number(r.require(p, "b", pp), pp + ".b", "b"));
    }
    if (family == "Deterministic") {
      r.reject_unknown(p, {"value"}, pp);
      return LabelLaw::deterministic(r.number(r.require(p, "value", pp), pp + ".value", "value"));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    for (const auto& msg : e.problems()) r.problem(path + ": " + msg);
    return std::nullopt;
  } catch (const Error& e) {
    r.problem(path + ": " + e.what());
    return std::nullopt;
  }
  r.problem(path + ": unknown label family '" + family +
            "' (expected Atomic, LogNormal, LogUniform or Deterministic)");
  return std::nullopt;
}

std::optional<PassageLaw> parse_passage_law(const Reader& r, const json& v, const std::string& path) {
  r.object(v, path, "family");
  r.reject_unknown(v, {"family", "params"}, path);
  const std::string family = r.string(r.require(v, "family", path), path + ".family", "family");
  const json& p = r.object(r.require(v, "params", path), path + ".params", "params");
  const std::string pp = path + ".params";
  auto num = [&](const char* k) { return r.number(r.require(p, k, pp), pp + "." + k, k); };
  PassageLaw law;
  if (family == "Normal") {
    r.reject_unknown(p, {"mean", "sd"}, pp);
    law = NormalPassage{num("mean"), num("sd")};
  } else if (family == "Atomic") {
    r.reject_unknown(p, {"values", "probs"}, pp);
    law = AtomicPassage{r.numbers(r.require(p, "values", pp), pp + ".values", "values"),
                        r.numbers(r.require(p, "probs", pp), pp + ".probs", "probs")};
  } else if (family == "Uniform") {
    r.reject_unknown(p, {"lower", "upper"}, pp);
    law = UniformPassage{num("lower"), num("upper")};
  } else if (family == "Constant") {
    r.reject_unknown(p, {"value"}, pp);
    law = ConstantPassage{num("value")};
  } else {
    r.problem(path + ": unknown passage family '" + family +
              "' (expected Normal, Atomic, Uniform or Constant)");
    return std::nullopt;
  }
  // Range checks happen in the label law the passage time maps to.
  try {
    (void)push_forward(law);
  } catch (const ValidationError& e) {
    for (const auto& msg : e.problems()) r.problem(path + ": " + msg);
    return std::nullopt;
  } catch (const Error& e) {
    r.problem(path + ": " + e.what());
    return std::nullopt;
  }
  return law;
}

// A single law object means i.i.d. entries; otherwise a d x d array of rows.
template <class Law, class ParseOne>
std::optional<std::vector<Law>> parse_matrix(const Reader& r, const json& v, int d,
                                             const std::string& key, ParseOne parse_one) {
  if (v.is_object()) {
    auto law = parse_one(r, v, key);
    if (!law || d < 1) return std::nullopt;
    return std::vector<Law>(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), *law);
  }
  if (!v.is_array()) r.type_error(key, key, "a law object or a d x d array of law objects");
  std::vector<std::size_t> widths;
  for (const auto& row : v) {
    if (!row.is_array()) r.type_error(key, key, "an array of rows");
    widths.push_back(row.size());
  }
  const auto du = static_cast<std::size_t>(std::max(d, 0));
  const bool square = v.size() == du && std::all_of(widths.begin(), widths.end(),
                                                    [&](std::size_t w) { return w == du; });
  if (!square) {
    std::string got = std::to_string(v.size()) + " rows of widths";
    for (std::size_t w : widths) got += " " + std::to_string(w);
    r.problem("matrix shape: expected " + std::to_string(d) + "x" + std::to_string(d) + " " + key +
              ", got " + got);
    return std::nullopt;
  }
  std::vector<Law> out;
  bool ok = true;
  for (std::size_t i = 0; i < du; ++i) {
    for (std::size_t j = 0; j < du; ++j) {
      auto law = parse_one(r, v[i][j], key + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      if (law) out.push_back(*law);
      else ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return out;
}

std::optional<Command> command_from(const std::string& s) {
  for (Command c : {Command::kAnalyze, Command::kSimulate, Command::kLdCheck, Command::kBrw,
                    Command::kFpp, Command::kVerify}) {
    if (s == command_name(c)) return c;
  }
  return std::nullopt;
}

std::optional<Estimator> estimator_from(const std::string& s) {
  for (Estimator e : {Estimator::kPlain, Estimator::kTilted, Estimator::kEnumerate}) {
    if (s == estimator_name(e)) return e;
  }
  return std::nullopt;
}

ordered label_law_json(const LabelLaw& law) {
  ordered out;
  out["family"] = family_name(law.family());
  ordered p;
  std::visit(
      [&](const auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, AtomicParams>) {
          p["atoms"] = params.atoms;
          p["probs"] = params.probs;
        } else if constexpr (std::is_same_v<T, LogNormalParams>) {
          p["location"] = params.location;
          p["scale"] = params.scale;
        } else if constexpr (std::is_same_v<T, LogUniformParams>) {
          p["a"] = params.log_lower;
          p["b"] = params.log_upper;
        } else {
          p["value"] = params.value;
        }
      },
      law.params());
  out["params"] = p;
  return out;
}

ordered passage_law_json(const PassageLaw& law) {
  ordered out, p;
  if (const auto* n = std::get_if<NormalPassage>(&law)) {
    out["family"] = "Normal";
    p["mean"] = n->mean;
    p["sd"] = n->sd;
  } else if (const auto* a = std::get_if<AtomicPassage>(&law)) {
    out["family"] = "Atomic";
    p["values"] = a->values;
    p["probs"] = a->probs;
  } else if (const auto* u = std::get_if<UniformPassage>(&law)) {
    out["family"] = "Uniform";
    p["lower"] = u->lower;
    p["upper"] = u->upper;
  } else {
    out["family"] = "Constant";
    p["value"] = std::get<ConstantPassage>(law).value;
  }
  out["params"] = p;
  return out;
}

template <class Law, class ToJson>
ordered matrix_json(const std::vector<Law>& laws, int d, ToJson to_json) {
  const bool iid = std::all_of(laws.begin(), laws.end(), [&](const Law& l) { return l == laws[0]; });
  if (iid) return to_json(laws[0]);
  ordered rows = ordered::array();
  for (int i = 0; i < d; ++i) {
    ordered row = ordered::array();
    for (int j = 0; j < d; ++j) row.push_back(to_json(laws[static_cast<std::size_t>(i * d + j)]));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

const char* command_name(Command c) noexcept {
  switch (c) {
    case Command::kAnalyze: return "analyze";
    case Command::kSimulate: return "simulate";
    case Command::kLdCheck: return "ld-check";
    case Command::kBrw: return "brw";
    case Command::kFpp: return "fpp";
    case Command::kVerify: return "verify";
  }
  return "?";
}

const char* estimator_name(Estimator e) noexcept {
  switch (e) {
    case Estimator::kPlain: return "plain";
    case Estimator::kTilted: return "tilted";
    case Estimator::kEnumerate: return "enumerate";
  }
  return "?";
}

bool is_stochastic(Command c) noexcept {
  return c == Command::kSimulate || c == Command::kLdCheck || c == Command::kBrw ||
         c == Command::kFpp;
}

SpectralOptions spectral_options(const Tolerances& t) {
  SpectralOptions o;
  o.perron_tol = t.perron;
  o.golden_tol = t.golden;
  return o;
}

ExponentOptions exponent_options(const Tolerances& t) {
  ExponentOptions o;
  o.critical_band = t.critical_band;
  o.cross_check_tol = t.cross_check;
  o.root_tol = t.root;
  o.speed_tol = t.speed;
  return o;
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    const std::size_t colon = what.find("syntax error");
    if (colon != std::string::npos) what = what.substr(colon);
    throw ParseError(what, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ParseError("top-level value must be a JSON object", 1);

  std::vector<std::string> problems;
  const Reader r(text, problems);
  r.reject_unknown(doc,
                   {"d", "laws", "passage_laws", "command", "t_grid", "reps", "depth_cap", "seed",
                    "tolerances", "output", "root_colour", "estimator", "ld", "brw", "workers"},
                   "");
  RunConfig c;

  const std::int64_t d = r.integer(r.require(doc, "d", ""), "d", "d");
  if (d < 2) r.problem("d must be >= 2");
  if (d > 64) r.problem("d must be <= 64");
  c.d = static_cast<int>(std::clamp<std::int64_t>(d, 0, 64));

  const std::string cmd = r.string(r.require(doc, "command", ""), "command", "command");
  if (auto parsed = command_from(cmd)) {
    c.command = *parsed;
  } else {
    r.problem("unknown command '" + cmd + "' (expected analyze, simulate, ld-check, brw, fpp or verify)");
  }

  const json* laws = r.find(doc, "laws");
  const json* passage = r.find(doc, "passage_laws");
  if (laws && passage) r.problem("give either laws or passage_laws, not both");
  if (c.command == Command::kFpp && !passage) r.problem("command fpp requires passage_laws");
  if (c.command != Command::kFpp && passage) r.problem("passage_laws is only used by command fpp");
  if (!laws && !passage) r.problem("laws required");
  if (d >= 2 && d <= 64) {
    if (laws) {
      if (auto v = parse_matrix<LabelLaw>(r, *laws, c.d, "laws", parse_label_law)) {
        c.model = ModelSpec(c.d, std::move(*v));
      }
    } else if (passage) {
      if (auto v = parse_matrix<PassageLaw>(r, *passage, c.d, "passage_laws", parse_passage_law)) {
        c.model = fpp_transform(c.d, *v);
        c.passage_laws = std::move(*v);
      }
    }
  }

  if (const json* v = r.find(doc, "t_grid")) c.t_grid = r.numbers(*v, "t_grid", "t_grid");
  for (std::size_t i = 1; i < c.t_grid.size(); ++i) {
    if (!(c.t_grid[i] > c.t_grid[i - 1])) {
      r.problem("t_grid must be strictly increasing (t_grid[" + std::to_string(i) + "])");
      break;
    }
  }
  for (double t : c.t_grid) {
    if (!std::isfinite(t)) r.problem("t_grid entries must be finite");
  }
  if ((c.command == Command::kSimulate || c.command == Command::kFpp) && c.t_grid.empty()) {
    r.problem("t_grid required for command " + cmd);
  }
  if (const json* v = r.find(doc, "reps")) {
    c.reps = r.unsigned_integer(*v, "reps", "reps");
    if (c.reps < 1) r.problem("reps must be >= 1");
  }
  if (const json* v = r.find(doc, "depth_cap")) {
    const std::int64_t cap = r.integer(*v, "depth_cap", "depth_cap");
    if (cap < 0 || cap > 100000) r.problem("depth_cap must be in [0, 100000]");
    c.depth_cap = static_cast<int>(std::clamp<std::int64_t>(cap, 0, 100000));
  }
  if (const json* v = r.find(doc, "seed")) c.seed = r.unsigned_integer(*v, "seed", "seed");
  if (is_stochastic(c.command) && !c.seed) r.problem("seed required for command " + cmd);

  if (const json* v = r.find(doc, "tolerances")) {
    const json& t = r.object(*v, "tolerances", "tolerances");
    r.reject_unknown(t, {"perron", "golden", "cross_check", "critical_band", "root", "speed"},
                     "tolerances");
    auto set = [&](const char* key, double& field) {
      if (const json* x = r.find(t, key)) {
        field = r.number(*x, std::string("tolerances.") + key, key);
        if (!(field > 0.0) || !std::isfinite(field)) {
          r.problem(std::string("tolerances.") + key + " must be a positive finite number");
        }
      }
    };
    set("perron", c.tolerances.perron);
    set("golden", c.tolerances.golden);
    set("cross_check", c.tolerances.cross_check);
    set("critical_band", c.tolerances.critical_band);
    set("root", c.tolerances.root);
    set("speed", c.tolerances.speed);
  }
  if (const json* v = r.find(doc, "output")) c.output_path = r.string(*v, "output", "output");
  if (const json* v = r.find(doc, "root_colour")) {
    const std::int64_t rc = r.integer(*v, "root_colour", "root_colour");
    if (rc < 1 || rc > d) r.problem("root_colour must be in 1..d");
    c.root_colour = static_cast<int>(std::clamp<std::int64_t>(rc, 1, 64));
  }
  if (const json* v = r.find(doc, "estimator")) {
    const std::string e = r.string(*v, "estimator", "estimator");
    if (auto parsed = estimator_from(e)) c.estimator = *parsed;
    else r.problem("unknown estimator '" + e + "' (expected plain, tilted or enumerate)");
  }
  if (const json* v = r.find(doc, "ld")) {
    const json& ld = r.object(*v, "ld", "ld");
    r.reject_unknown(ld, {"a_grid", "n", "tilt", "min_hits"}, "ld");
    if (const json* x = r.find(ld, "a_grid")) c.ld.a_grid = r.numbers(*x, "ld.a_grid", "a_grid");
    if (const json* x = r.find(ld, "n")) {
      const std::int64_t n = r.integer(*x, "ld.n", "n");
      if (n < 1 || n > 100000) r.problem("ld.n must be in [1, 100000]");
      c.ld.n = static_cast<int>(std::clamp<std::int64_t>(n, 1, 100000));
    }
    if (const json* x = r.find(ld, "tilt")) c.ld.tilt = r.boolean(*x, "ld.tilt", "tilt");
    if (const json* x = r.find(ld, "min_hits")) {
      c.ld.min_hits = r.unsigned_integer(*x, "ld.min_hits", "min_hits");
      if (c.ld.min_hits < 1) r.problem("ld.min_hits must be >= 1");
    }
  }
  if (c.command == Command::kLdCheck && c.ld.a_grid.empty()) r.problem("ld.a_grid required for command ld-check");
  if (const json* v = r.find(doc, "brw")) {
    const json& brw = r.object(*v, "brw", "brw");
    r.reject_unknown(brw, {"n_max"}, "brw");
    if (const json* x = r.find(brw, "n_max")) {
      const std::int64_t n = r.integer(*x, "brw.n_max", "n_max");
      if (n < 1 || n > 40) r.problem("brw.n_max must be in [1, 40]");
      c.brw.n_max = static_cast<int>(std::clamp<std::int64_t>(n, 1, 40));
    }
  }
  if (const json* v = r.find(doc, "workers")) {
    const std::int64_t w = r.integer(*v, "workers", "workers");
    if (w < 1 || w > 1024) r.problem("workers must be in [1, 1024]");
    c.workers = static_cast<int>(std::clamp<std::int64_t>(w, 1, 1024));
  }

  if (!problems.empty()) throw ValidationError(std::move(problems));
  return c;
}

std::string emit_config(const RunConfig& c) {
  ordered doc;
  doc["d"] = c.d;
  doc["command"] = command_name(c.command);
  if (c.passage_laws) {
    doc["passage_laws"] = matrix_json(*c.passage_laws, c.d, passage_law_json);
  } else if (c.model) {
    doc["laws"] = matrix_json(c.model->laws(), c.d, label_law_json);
  }
  doc["t_grid"] = c.t_grid;
  doc["reps"] = c.reps;
  doc["depth_cap"] = c.depth_cap;
  if (c.seed) doc["seed"] = *c.seed;
  doc["tolerances"] = ordered{{"perron", c.tolerances.perron},
                              {"golden", c.tolerances.golden},
                              {"cross_check", c.tolerances.cross_check},
                              {"critical_band", c.tolerances.critical_band},
                              {"root", c.tolerances.root},
                              {"speed", c.tolerances.speed}};
  doc["output"] = c.output_path;
  doc["root_colour"] = c.root_colour;
  doc["estimator"] = estimator_name(c.estimator);
  doc["ld"] = ordered{{"a_grid", c.ld.a_grid},
                      {"n", c.ld.n},
                      {"tilt", c.ld.tilt},
                      {"min_hits", c.ld.min_hits}};
  doc["brw"] = ordered{{"n_max", c.brw.n_max}};
  doc["workers"] = c.workers;
  return doc.dump(2) + "\n";
}

}  // namespace branchexp::cli
