#include "orbitlab/cli.hpp"

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "orbitlab/enumerate.hpp"

namespace orbitlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string s = "invalid configuration:";
        for (const auto& p : problems) s += "\n  " + p;
        return s;
      }()),
      problems_(std::move(problems)) {}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = settings.find(key);
  if (it == settings.end()) throw std::out_of_range("missing setting '" + key + "'");
  return it->second;
}

std::optional<std::string> RunConfig::find(const std::string& key) const {
  const auto it = settings.find(key);
  if (it == settings.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Schema

namespace {

enum class Kind { Int, Real, Radius, Bool, Text, Choice, InPath, OutPath };

struct Key {
  Kind kind;
  std::optional<std::string> fallback = std::nullopt;  // default value
  bool required = false;
  std::vector<std::string> choices = {};
};

using Schema = std::map<std::string, Key>;

std::string default_threads() { return std::to_string(std::max(1, omp_get_num_procs())); }

Schema common_keys() {
  return {
      {"threads", {Kind::Int, default_threads()}},
      {"seed", {Kind::Int, "1"}},
      {"precision", {Kind::Choice, "extended", false, {"double", "extended"}}},
      {"capacity", {Kind::Int, "100000000"}},
  };
}

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> all = [] {
    std::map<std::string, Schema> s;
    s["enumerate"] = {
        {"group", {Kind::Choice, std::nullopt, true, {"sl2z", "sl2zp", "slnz"}}},
        {"n", {Kind::Int, "2"}},
        {"p", {Kind::Int}},
        {"T-inf", {Kind::Radius, std::nullopt, true}},
        {"T-p", {Kind::Radius}},
        {"norm", {Kind::Choice, "frobenius", false, {"frobenius", "max"}}},
        {"window", {Kind::InPath}},
        {"out", {Kind::OutPath, "-"}},
    };
    s["volume"] = {
        {"case", {Kind::Choice, std::nullopt, true, {"stab2", "adjoint", "example31", "unipair", "padicball"}}},
        {"params", {Kind::Text}},
        {"ladder", {Kind::Text, "10,2,24"}},
        {"g", {Kind::Text}},
        {"g-inf", {Kind::Text}},
        {"g-p", {Kind::Text}},
        {"orientation", {Kind::Choice, "skew", false, {"skew", "translate"}}},
        {"modulus", {Kind::Int, "2"}},
        {"tolerance", {Kind::Real, "0.0001"}},
        {"out", {Kind::OutPath, "-"}},
        {"summary", {Kind::OutPath}},
    };
    s["orbit"] = {
        {"application", {Kind::Choice, "ledrappier", false, {"ledrappier", "window", "s-arithmetic", "wedge"}}},
        {"v", {Kind::Text, std::nullopt, true}},
        {"v_p", {Kind::Text}},
        {"p", {Kind::Int}},
        {"ladder", {Kind::Text, std::nullopt, true}},
        {"window", {Kind::InPath}},
        {"norm", {Kind::Choice, "frobenius", false, {"frobenius", "max"}}},
        {"n", {Kind::Int, "2"}},
        {"k", {Kind::Int, "1"}},
        {"compare_full_window", {Kind::Bool, "false"}},
        {"serial", {Kind::Bool, "false"}},
        {"cf_depth", {Kind::Int, "24"}},
        {"out_json", {Kind::OutPath}},
        {"out_csv", {Kind::OutPath, "-"}},
    };
    s["asymptotics"] = {
        {"input", {Kind::InPath, std::nullopt, true}},
        {"t_column", {Kind::Text, "t"}},
        {"column", {Kind::Text, "volume"}},
        {"p", {Kind::Int}},
        {"moduli", {Kind::Text, "1,2,3,4"}},
        {"tolerance", {Kind::Real, "0.01"}},
        {"min_samples", {Kind::Int, "8"}},
        {"out", {Kind::OutPath, "-"}},
    };
    s["report"] = {
        {"inputs", {Kind::Text, std::nullopt, true}},
        {"out", {Kind::OutPath, "-"}},
    };
    for (auto& [name, schema] : s)
      for (auto& [k, v] : common_keys()) schema.emplace(k, v);
    return s;
  }();
  return all;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, std::string_view seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string_view::npos) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<long long> to_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::optional<Real> to_real(const std::string& s) {
  try {
    std::size_t pos = 0;
    const Real v = std::stold(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

bool writable(const std::string& path) {
  if (path == "-") return true;
  const fs::path p(path);
  std::error_code ec;
  if (fs::is_directory(p, ec)) return false;
  if (fs::exists(p, ec)) return ::access(p.c_str(), W_OK) == 0;
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  return fs::is_directory(dir, ec) && ::access(dir.c_str(), W_OK) == 0;
}

std::optional<std::string> check_value(const std::string& key, const Key& spec, const std::string& value) {
  const auto bad = [&](const std::string& what) { return "key '" + key + "': " + what + ", got '" + value + "'"; };
  switch (spec.kind) {
    case Kind::Int:
      if (!to_int(value)) return bad("expected an integer");
      break;
    case Kind::Real:
      if (!to_real(value)) return bad("expected a number");
      break;
    case Kind::Radius:
      try {
        (void)Radius::parse(value);
      } catch (const std::exception&) {
        return bad("expected a radius such as 100, 5/2 or sqrt(2)");
      }
      break;
    case Kind::Bool:
      if (value != "true" && value != "false") return bad("expected true or false");
      break;
    case Kind::Choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string list;
        for (const auto& c : spec.choices) list += (list.empty() ? "" : "|") + c;
        return bad("expected one of " + list);
      }
      break;
    case Kind::InPath:
      if (!fs::is_regular_file(value)) return bad("input file does not exist");
      break;
    case Kind::OutPath:
      if (!writable(value)) return bad("output path is not writable");
      break;
    case Kind::Text:
      if (value.empty()) return bad("expected a value");
      break;
  }
  return std::nullopt;
}

const Key* lookup(const Schema& schema, const std::string& key) {
  if (const auto it = schema.find(key); it != schema.end()) return &it->second;
  static const Key test_key{Kind::Text};
  if (schema.count("ladder") && schema.count("v") && key.starts_with("test.") && key.size() > 5) return &test_key;
  return nullptr;
}

/// key = value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_file(const std::string& text,
                                                            std::vector<std::string>& problems) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      problems.push_back("config line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::span<const std::string> args, const std::optional<std::string>& file_text) {
  std::vector<std::string> problems;
  RunConfig config;
  if (args.empty()) throw ConfigError({"missing subcommand (enumerate, volume, orbit, asymptotics, report)"});
  config.subcommand = args[0];
  const auto sit = schemas().find(config.subcommand);
  if (sit == schemas().end()) throw ConfigError({"unknown subcommand '" + config.subcommand + "'"});
  const Schema& schema = sit->second;

  // Flags.
  std::vector<std::pair<std::string, std::string>> flags;
  std::optional<std::string> config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (!a.starts_with("--") || a.size() == 2) {
      problems.push_back("unexpected argument '" + a + "'");
      continue;
    }
    std::string key = a.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else if (i + 1 < args.size() && !args[i + 1].starts_with("--")) {
      value = args[++i];
    } else {
      value = "true";
    }
    if (key == "config") {
      config_path = value;
      continue;
    }
    flags.emplace_back(std::move(key), std::move(value));
  }

  // File.
  std::vector<std::pair<std::string, std::string>> from_file;
  std::optional<std::string> text = file_text;
  if (!text && config_path) {
    std::ifstream in(*config_path);
    if (!in) {
      problems.push_back("cannot read config file '" + *config_path + "'");
    } else {
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
  }
  if (text) from_file = parse_file(*text, problems);

  std::set<std::string> seen_flags;
  for (const auto& [k, v] : from_file) {
    if (config.settings.count(k)) problems.push_back("key '" + k + "' appears twice in the config file");
    config.settings[k] = v;
  }
  for (const auto& [k, v] : flags) {
    if (!seen_flags.insert(k).second) problems.push_back("flag --" + k + " given twice");
    const auto it = config.settings.find(k);
    if (it != config.settings.end() && it->second != v)
      config.warnings.push_back("--" + k + " overrides the config file value '" + it->second + "' with '" + v + "'");
    config.settings[k] = v;
  }
  if (const char* env = std::getenv("ORBITLAB_THREADS"); env && *env) {
    const auto it = config.settings.find("threads");
    if (it != config.settings.end() && it->second != env)
      config.warnings.push_back("ORBITLAB_THREADS overrides threads = " + it->second);
    config.settings["threads"] = env;
  }

  for (const auto& [k, v] : config.settings) {
    const Key* spec = lookup(schema, k);
    if (!spec) {
      problems.push_back("unknown key '" + k + "' for " + config.subcommand);
      continue;
    }
    if (auto p = check_value(k, *spec, v)) problems.push_back(*p);
  }
  for (const auto& [k, spec] : schema) {
    if (config.settings.count(k)) continue;
    if (spec.required)
      problems.push_back("missing required key '" + k + "'");
    else if (spec.fallback)
      config.settings[k] = *spec.fallback;
  }

  if (problems.empty()) {
    const long long threads = *to_int(config.get("threads"));
    const long long seed = *to_int(config.get("seed"));
    const long long capacity = *to_int(config.get("capacity"));
    if (threads < 1) problems.push_back("key 'threads': must be >= 1");
    if (seed < 0) problems.push_back("key 'seed': must be >= 0");
    if (capacity < 1) problems.push_back("key 'capacity': must be >= 1");
    config.threads = static_cast<int>(threads);
    config.seed = static_cast<std::uint64_t>(seed);
    config.capacity = static_cast<std::size_t>(capacity);
    config.precision = config.get("precision") == "double" ? RealPrecision::Double : RealPrecision::Extended;
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return config;
}

std::string echo_config(const RunConfig& config) {
  std::string s;
  for (const auto& [k, v] : config.settings) s += k + " = " + v + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Formatting

std::string format_real(Real x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12Lg", x);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string s;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n\"") != std::string::npos)
        throw std::invalid_argument("CSV cell needs quoting: " + cells[i]);
      s += (i ? "," : "") + cells[i];
    }
    s += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::invalid_argument("CSV row width differs from the header");
    line(row);
  }
  return s;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw std::invalid_argument("CSV row width differs from the header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::invalid_argument("CSV has no header");
  return t;
}

namespace {

/// Numbers go through the 12-digit rendering so that the JSON text does not
/// depend on bits below that precision.
json jreal(Real x) {
  if (!std::isfinite(x)) return format_real(x);
  return std::stod(format_real(x));
}

}  // namespace

std::string emit_report(const DistributionReport& report, ReportFormat format, const RunConfig* config) {
  if (format == ReportFormat::Csv) {
    Table t{{"T", "test_id", "count", "empirical", "predicted_ratio", "empirical_ratio", "error"}, {}};
    for (const auto& r : report.rows)
      t.rows.push_back({format_real(r.t), r.test_id, std::to_string(r.count), format_real(r.empirical),
                        format_real(r.predicted_ratio), format_real(r.empirical_ratio), format_real(r.ratio_error)});
    return to_csv(t);
  }

  json j;
  j["application"] = to_string(report.application);
  j["window_mass"] = report.window_mass.to_string();
  j["flags"] = report.flags;
  j["hypothesis"] = {{"ok", report.hypothesis.ok}, {"exact", report.hypothesis.exact}, {"note", report.hypothesis.note}};
  if (report.orientation) {
    const auto& o = *report.orientation;
    j["orientation"] = {{"winner", o.winner},
                        {"cv_inverse", jreal(o.cv_inverse)},
                        {"cv_direct", jreal(o.cv_direct)},
                        {"constant", jreal(o.constant)}};
  } else {
    j["orientation"] = nullptr;
  }
  j["rows"] = json::array();
  for (const auto& r : report.rows)
    j["rows"].push_back({{"T", jreal(r.t)},
                         {"test_id", r.test_id},
                         {"count", r.count},
                         {"normalizer", jreal(r.normalizer)},
                         {"empirical", jreal(r.empirical)},
                         {"predicted", jreal(r.predicted)},
                         {"predicted_ratio", jreal(r.predicted_ratio)},
                         {"empirical_ratio", jreal(r.empirical_ratio)},
                         {"error", jreal(r.ratio_error)},
                         {"fitted_constant", jreal(r.fitted_constant)}});
  j["levels"] = json::array();
  for (const auto& l : report.levels) {
    json e = {{"T", jreal(l.t)},
              {"normalizer", jreal(l.normalizer)},
              {"max_ratio_error", jreal(l.max_ratio_error)},
              {"constant_mean", jreal(l.constant_mean)},
              {"constant_cv", jreal(l.constant_cv)}};
    e["window_ratio"] = l.window_ratio ? jreal(*l.window_ratio) : json(nullptr);
    j["levels"].push_back(std::move(e));
  }
  j["slopes"] = json::array();
  for (const auto& s : report.slopes)
    j["slopes"].push_back(
        {{"test_id", s.test_id}, {"against", s.against}, {"slope", jreal(s.fit.slope)}, {"stderr", jreal(s.fit.stderr_)}});
  if (config) j["config"] = config->settings;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Test functions

namespace {

Real parse_angle(const std::string& s) {
  const auto at = s.find("pi");
  if (at == std::string::npos) return Surd::parse(s).to_real();
  std::string coef = s.substr(0, at), den = s.substr(at + 2);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  Real c = 1;
  if (coef == "-")
    c = -1;
  else if (!coef.empty())
    c = ExactScalar::parse(coef).to_real();
  if (!den.empty()) {
    if (den[0] != '/') throw std::invalid_argument("bad angle '" + s + "'");
    c /= ExactScalar::parse(den.substr(1)).to_real();
  }
  return c * std::numbers::pi_v<Real>;
}

long parse_long(const std::string& s, const char* what) {
  const auto v = to_int(s);
  if (!v) throw std::invalid_argument(std::string("expected an integer ") + what + ", got '" + s + "'");
  return static_cast<long>(*v);
}

RealAnnulusSector parse_sector(const std::vector<std::string>& t) {
  if (t.size() != 3 && t.size() != 5) throw std::invalid_argument("sector takes R1 R2 [THETA1 THETA2]");
  RealAnnulusSector s{Surd::parse(t[1]).to_real(), Surd::parse(t[2]).to_real()};
  if (t.size() == 5) {
    s.theta1 = parse_angle(t[3]);
    s.theta2 = parse_angle(t[4]);
  }
  return s;
}

PadicShellBox parse_shell(const std::vector<std::string>& t) {
  if (t.size() < 3) throw std::invalid_argument("shell takes P S [M all | M x:y ...]");
  const long p = parse_long(t[1], "prime");
  const int s = static_cast<int>(parse_long(t[2], "shell exponent"));
  if (t.size() == 3) return PadicShellBox::full(p, s);
  const int m = static_cast<int>(parse_long(t[3], "congruence exponent"));
  if (t.size() == 4 || (t.size() == 5 && t[4] == "all")) return PadicShellBox::full(p, s, m);
  PadicShellBox box{p, s, m, {}};
  for (std::size_t i = 4; i < t.size(); ++i) {
    const auto xy = split(t[i], ":");
    if (xy.size() != 2) throw std::invalid_argument("shell class must look like x:y, got '" + t[i] + "'");
    box.classes.push_back({parse_long(xy[0], "class entry"), parse_long(xy[1], "class entry")});
  }
  return box;
}

}  // namespace

TestFunction parse_test_function(const std::string& text) {
  const auto tokens = split(text, " \t");
  if (tokens.empty()) throw std::invalid_argument("empty test function");
  TestFunction f;
  const auto cross = std::find(tokens.begin(), tokens.end(), "x");
  if (cross != tokens.end()) {
    const std::vector<std::string> a(tokens.begin(), cross), b(cross + 1, tokens.end());
    if (a.empty() || b.empty() || a[0] != "sector" || b[0] != "shell")
      throw std::invalid_argument("product set must be 'sector ... x shell ...'");
    f = ProductSet{parse_sector(a), parse_shell(b)};
  } else if (tokens[0] == "sector") {
    f = parse_sector(tokens);
  } else if (tokens[0] == "shell") {
    f = parse_shell(tokens);
  } else if (tokens[0] == "wedge") {
    if (tokens.size() != 5) throw std::invalid_argument("wedge takes N K R1 R2");
    f = RealWedgeAnnulus{Surd::parse(tokens[3]).to_real(), Surd::parse(tokens[4]).to_real(),
                         static_cast<int>(parse_long(tokens[1], "dimension")),
                         static_cast<int>(parse_long(tokens[2], "degree"))};
  } else {
    throw std::invalid_argument("unknown test function '" + tokens[0] + "'");
  }
  validate(f);
  return f;
}

namespace {

std::vector<Radius> parse_radii(const std::string& text) {
  std::vector<Radius> out;
  for (const auto& s : split(text, ", \t")) out.push_back(Radius::parse(s));
  return out;
}

std::optional<long> opt_long(const RunConfig& c, const std::string& key) {
  if (const auto v = c.find(key)) return static_cast<long>(*to_int(*v));
  return std::nullopt;
}

NormKind norm_of(const RunConfig& c) { return parse_norm_kind(c.get("norm")); }

}  // namespace

ExperimentConfig experiment_from(const RunConfig& config) {
  std::vector<std::string> problems;
  ExperimentConfig e;
  const auto attempt = [&](const std::string& what, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& ex) {
      problems.push_back(what + ": " + ex.what());
    }
  };
  attempt("application", [&] { e.application = parse_application(config.get("application")); });
  attempt("v", [&] {
    for (const auto& s : split(config.get("v"), ", \t")) e.v.real.push_back(Surd::parse(s));
  });
  e.p = opt_long(config, "p");
  if (const auto vp = config.find("v_p")) {
    attempt("v_p", [&] {
      if (!e.p) throw std::invalid_argument("needs the prime p");
      e.v.p = e.p;
      for (const auto& s : split(*vp, ", \t")) e.v.padic.push_back(ExactScalar::parse(s));
    });
  }
  attempt("ladder", [&] { e.ladder = parse_radii(config.get("ladder")); });
  if (const auto w = config.find("window")) attempt("window", [&] { e.window = CongruenceWindow::load(*w); });
  e.norm = norm_of(config);
  e.n = static_cast<int>(*to_int(config.get("n")));
  e.k = static_cast<int>(*to_int(config.get("k")));
  e.seed = config.seed;
  e.capacity = config.capacity;
  e.cf_depth = static_cast<int>(*to_int(config.get("cf_depth")));
  e.compare_full_window = config.get("compare_full_window") == "true";
  e.use_serial_reference = config.get("serial") == "true";
  for (const auto& [k, v] : config.settings) {
    if (!k.starts_with("test.")) continue;
    attempt(k, [&] { e.tests.push_back({k.substr(5), parse_test_function(v)}); });
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return e;
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}
  void write(const std::string& text) {
    if (path_ == "-") {
      fallback_ << text;
      return;
    }
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path_ + "'");
    f << text;
    if (!f) throw std::runtime_error("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ostream& fallback_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string exact_sqrt_string(const ExactScalar& square) {
  if (const auto r = exact_sqrt(square)) return r->to_string();
  return "sqrt(" + square.to_string() + ")";
}

void cmd_enumerate(const RunConfig& c, std::ostream& out) {
  BallSpec spec;
  spec.n = static_cast<int>(*to_int(c.get("n")));
  spec.real_norm = norm_of(c);
  spec.t_inf = Radius::parse(c.get("T-inf"));
  spec.prime = opt_long(c, "p");
  spec.capacity = c.capacity;
  const std::string group = c.get("group");
  if (group == "sl2zp") spec.invert_prime = true;
  if (group != "slnz" && spec.n != 2) throw ConfigError({"group " + group + " needs n = 2"});
  if (const auto tp = c.find("T-p")) spec.t_p = Radius::parse(*tp);
  if (const auto w = c.find("window")) {
    spec.window = CongruenceWindow::load(*w);
    if (!spec.prime) spec.prime = spec.window->prime();
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({e.what()});
  }

  const std::size_t n = static_cast<std::size_t>(spec.n);
  Table t;
  t.header.push_back("level");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) t.header.push_back("m" + std::to_string(i + 1) + std::to_string(j + 1));
  t.header.push_back("norm_inf");
  t.header.push_back("norm_p");

  const auto add = [&](int level, std::span<const std::int64_t> m) {
    std::vector<std::string> row{std::to_string(level)};
    mpz_class sum = 0, mx = 0;
    for (auto x : m) {
      row.push_back(std::to_string(x));
      const mpz_class z(static_cast<long>(x));
      sum += z * z;
      if (abs(z) > mx) mx = abs(z);
    }
    const ExactScalar scale = spec.prime ? pow_p(*spec.prime, -level) : ExactScalar(1);
    if (spec.real_norm == NormKind::Frobenius)
      row.push_back(exact_sqrt_string(ExactScalar(sum) * scale * scale));
    else
      row.push_back((ExactScalar(mx) * scale).to_string());
    row.push_back(spec.invert_prime ? pow_p(*spec.prime, level).to_string() : "");
    t.rows.push_back(std::move(row));
  };

  if (group == "sl2z") {
    auto seq = enum_sl2z(spec);
    if (spec.window) seq = filter_window(seq, *spec.window);
    for (const auto& m : seq) add(0, m);
  } else if (group == "sl2zp") {
    auto seq = enum_sl2_zinvp(spec);
    if (spec.window) seq = filter_window(seq, *spec.window);
    for (const auto& e : seq) add(e.level, e.m);
  } else {
    auto seq = enum_slnz(spec);
    if (spec.window) seq = filter_window(seq, *spec.window);
    for (const auto& m : seq) add(0, m.data());
  }
  Output(c.get("out"), out).write(to_csv(t));
}

HDescriptor volume_subject(const RunConfig& c) {
  const std::string kind = c.get("case");
  const auto params = split(c.find("params").value_or(""), ", \t;");
  const auto need = [&](std::size_t k, const char* shape) {
    if (params.size() != k) throw ConfigError({"case " + kind + " takes params '" + shape + "'"});
  };
  HDescriptor h;
  if (kind == "stab2") {
    need(2, "v1,v2");
    h = StabSl2R{{Surd::parse(params[0]).to_real(), Surd::parse(params[1]).to_real()}};
  } else if (kind == "adjoint" || kind == "example31" || kind == "padicball") {
    need(1, "p");
    h = AdjointUnipotent{parse_long(params[0], "prime")};
  } else {
    need(5, "p,v1,v2,u1,u2");
    h = UnipotentPair{{Surd::parse(params[1]).to_real(), Surd::parse(params[2]).to_real()},
                      parse_long(params[0], "prime"),
                      {ExactScalar::parse(params[3]), ExactScalar::parse(params[4])}};
  }
  try {
    validate(h);
  } catch (const std::invalid_argument& e) {
    throw ConfigError({e.what()});
  }
  return h;
}

std::optional<PlacedMatrix> volume_translator(const RunConfig& c, const HDescriptor& h) {
  const std::size_t n = std::holds_alternative<AdjointUnipotent>(h) ? 3 : 2;
  std::optional<long> p;
  if (const auto* e = std::get_if<AdjointUnipotent>(&h)) p = e->p;
  if (const auto* u = std::get_if<UnipotentPair>(&h)) p = u->p;
  if (!c.has("g") && !c.has("g-inf") && !c.has("g-p")) return std::nullopt;
  if (c.has("g") && (c.has("g-inf") || c.has("g-p"))) throw ConfigError({"give either g or g-inf/g-p, not both"});
  if (c.has("g-p") && !p) throw ConfigError({"g-p needs a case with a finite place"});
  const auto ident = ExactMatrix::identity(n);
  const auto lit = [&](const std::string& key) { return c.has(key) ? parse_matrix_literal(c.get(key), n) : ident; };
  std::vector<PlacedMatrix::Component> parts;
  if (c.has("g")) {
    parts.push_back({Place::archimedean(), lit("g")});
    if (p) parts.push_back({Place::finite(*p), lit("g")});
  } else {
    parts.push_back({Place::archimedean(), lit("g-inf")});
    if (p) parts.push_back({Place::finite(*p), lit("g-p")});
  }
  return PlacedMatrix(std::move(parts));
}

Ladder parse_ladder(const std::string& text) {
  const auto parts = split(text, ", \t");
  if (parts.size() != 3) throw ConfigError({"ladder must be 't0,factor,steps'"});
  Ladder l{ExactScalar::parse(parts[0]), ExactScalar::parse(parts[1]), static_cast<int>(parse_long(parts[2], "steps"))};
  if (l.t0 <= ExactScalar(0) || l.factor <= ExactScalar(1) || l.steps < 1)
    throw ConfigError({"ladder needs t0 > 0, factor > 1, steps >= 1"});
  return l;
}

int cmd_volume(const RunConfig& c, std::ostream& out) {
  const HDescriptor h = volume_subject(c);
  const Ladder ladder = parse_ladder(c.get("ladder"));
  const auto orientation = c.get("orientation") == "skew" ? Orientation::SkewBall : Orientation::Translate;
  const long modulus = *to_int(c.get("modulus"));
  if (modulus < 1) throw ConfigError({"key 'modulus': must be >= 1"});
  Table t{{"t", "residue_class", "volume", "skew_volume", "ratio"}, {}};

  if (c.get("case") == "padicball") {
    // Rows are |g|_p <= p^j for j = 0 .. steps - 1.
    const long p = std::get<AdjointUnipotent>(h).p;
    std::optional<ExactScalar> prev;
    for (int j = 0; j < ladder.steps; ++j) {
      const ExactScalar v = padic_sl2_ball_volume(p, j);
      t.rows.push_back({pow_p(p, j).to_string(), std::to_string(j % modulus), v.to_string(), "",
                        prev ? (v / *prev).to_string() : ""});
      prev = v;
    }
    Output(c.get("out"), out).write(to_csv(t));
    return kOk;
  }

  const auto g = volume_translator(c, h);
  std::optional<long> p;
  if (const auto* e = std::get_if<AdjointUnipotent>(&h)) p = e->p;
  if (const auto* u = std::get_if<UnipotentPair>(&h)) p = u->p;
  for (const Radius& r : ladder.values()) {
    const VolumeValue plain = ball_volume(h, r);
    const VolumeValue skew = skew_ball_volume({h, g, r, orientation});
    std::string ratio;
    if (plain.exact && skew.exact && !plain.exact->mantissa().is_zero())
      ratio = (*skew.exact / *plain.exact).to_string();
    else if (plain.value > 0)
      ratio = format_real(skew.value / plain.value);
    const long cls = p ? ((r.floor_log(*p) % modulus) + modulus) % modulus : 0;
    t.rows.push_back({r.to_string(), std::to_string(cls), plain.to_string(), skew.to_string(), ratio});
  }
  Output(c.get("out"), out).write(to_csv(t));

  if (const auto path = c.find("summary")) {
    const Real tol = *to_real(c.get("tolerance"));
    const RatioLimit lim = skew_ball_ratio_limit(h, g, ladder, orientation, tol);
    json j;
    j["subject"] = describe(h);
    j["converged"] = lim.converged;
    j["modulus"] = lim.modulus;
    j["class_limits"] = json::array();
    for (const auto& x : lim.class_limits) j["class_limits"].push_back(x ? jreal(*x) : json(nullptr));
    j["closed_form"] = lim.closed_form ? jreal(*lim.closed_form) : json(nullptr);
    j["note"] = lim.note;
    Output(*path, out).write(j.dump(2) + "\n");
    if (!lim.converged) throw DivergenceError("ratio limit did not converge: " + lim.note);
  }
  return kOk;
}

int cmd_orbit(const RunConfig& c, std::ostream& out) {
  const ExperimentConfig e = experiment_from(c);
  DistributionReport report;
  try {
    report = run_experiment(e);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError({ex.what()});
  }
  if (const auto path = c.find("out_json")) Output(*path, out).write(emit_report(report, ReportFormat::Json, &c));
  if (const auto path = c.find("out_csv")) Output(*path, out).write(emit_report(report, ReportFormat::Csv));
  return kOk;
}

Real parse_volume_cell(const std::string& s) {
  if (const auto x = to_real(s)) return *x;
  return SqrtPower::parse(s).to_real();
}

int cmd_asymptotics(const RunConfig& c, std::ostream& out) {
  const Table t = parse_csv(read_file(c.get("input")));
  const auto column = [&](const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw ConfigError({"input has no column '" + name + "'"});
    return static_cast<std::size_t>(it - t.header.begin());
  };
  const std::size_t ti = column(c.get("t_column")), vi = column(c.get("column"));
  std::vector<std::pair<Real, Real>> samples;
  for (const auto& row : t.rows) {
    if (row[vi].empty()) continue;
    samples.emplace_back(Radius::parse(row[ti]).value(), parse_volume_cell(row[vi]));
  }
  FitOptions opt;
  opt.prime = opt_long(c, "p");
  opt.moduli.clear();
  for (const auto& s : split(c.get("moduli"), ", \t")) opt.moduli.push_back(static_cast<int>(parse_long(s, "modulus")));
  opt.tolerance = *to_real(c.get("tolerance"));
  opt.min_samples = static_cast<std::size_t>(*to_int(c.get("min_samples")));
  AsymptoticFit fit;
  try {
    fit = fit_asymptotics(samples, opt);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError({ex.what()});
  }

  json j;
  j["ok"] = fit.ok;
  j["modulus"] = fit.profile.modulus;
  j["note"] = fit.note;
  j["classes"] = json::array();
  for (std::size_t i = 0; i < fit.profile.classes.size(); ++i) {
    const auto& cl = fit.profile.classes[i];
    if (!cl) {
      j["classes"].push_back({{"class", i}, {"empty", true}});
      continue;
    }
    j["classes"].push_back({{"class", i},
                            {"empty", false},
                            {"c", jreal(cl->c)},
                            {"d", jreal(cl->d)},
                            {"e", cl->e},
                            {"residual", jreal(cl->residual)},
                            {"samples", cl->samples}});
  }
  j["candidates"] = json::array();
  for (const auto& [m, r] : fit.candidate_residuals) j["candidates"].push_back({{"modulus", m}, {"residual", jreal(r)}});
  Output(c.get("out"), out).write(j.dump(2) + "\n");
  if (!fit.ok) throw DivergenceError("no candidate modulus fits within tolerance: " + fit.note);
  return kOk;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  const auto inputs = split(c.get("inputs"), ",");
  std::vector<std::string> problems;
  for (const auto& in : inputs)
    if (!fs::is_regular_file(in)) problems.push_back("key 'inputs': input file does not exist, got '" + in + "'");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  Table merged;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Table t = parse_csv(read_file(inputs[i]));
    if (i == 0) {
      merged.header = {"source"};
      merged.header.insert(merged.header.end(), t.header.begin(), t.header.end());
    } else if (!std::equal(t.header.begin(), t.header.end(), merged.header.begin() + 1, merged.header.end())) {
      throw std::runtime_error("'" + inputs[i] + "' has a different header than '" + inputs[0] + "'");
    }
    const std::string source = fs::path(inputs[i]).filename().string();
    for (const auto& row : t.rows) {
      std::vector<std::string> r{source};
      r.insert(r.end(), row.begin(), row.end());
      merged.rows.push_back(std::move(r));
    }
  }
  Output(c.get("out"), out).write(to_csv(merged));
  return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = parse_config(args);
    for (const auto& w : config.warnings) err << "warning: " << w << "\n";
    omp_set_num_threads(config.threads);
    set_real_precision(config.precision);
    const std::string& cmd = config.subcommand;
    if (cmd == "enumerate") {
      cmd_enumerate(config, out);
      return kOk;
    }
    if (cmd == "volume") return cmd_volume(config, out);
    if (cmd == "orbit") return cmd_orbit(config, out);
    if (cmd == "asymptotics") return cmd_asymptotics(config, out);
    return cmd_report(config, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CapacityError& e) {
    err << "error: capacity exceeded: " << e.what() << "\n";
    return kCapacityError;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace orbitlab::cli
