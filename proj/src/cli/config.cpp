#include "ecgli/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ecgli/binary_io.hpp"

namespace ecgli::cli {

namespace {

using Overrides = std::vector<std::pair<std::string, double>>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

// Parsers throw TypeError with the expected type; the caller
// adds the key.
struct TypeError {
  std::string expected;
};

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw TypeError{"a number"};
  return v;
}

long long parse_integer(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw TypeError{"an integer"};
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_value(const std::string& s);

template <>
double parse_value<double>(const std::string& s) {
  return parse_double(s);
}
template <>
int parse_value<int>(const std::string& s) {
  const long long v = parse_integer(s);
  if (v < -2147483647LL || v > 2147483647LL) throw TypeError{"a 32-bit integer"};
  return static_cast<int>(v);
}
template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw TypeError{"an unsigned 64-bit integer"};
  return v;
}
template <>
bool parse_value<bool>(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw TypeError{"a boolean (true/false)"};
}
template <>
std::string parse_value<std::string>(const std::string& s) {
  return s;
}
template <>
std::vector<int> parse_value<std::vector<int>>(const std::string& s) {
  std::vector<int> out;
  try {
    for (const auto& x : split_list(s)) out.push_back(parse_value<int>(x));
  } catch (const TypeError&) {
    throw TypeError{"a comma-separated list of integers"};
  }
  return out;
}
template <>
Vec parse_value<Vec>(const std::string& s) {
  Vec out;
  try {
    for (const auto& x : split_list(s)) out.push_back(parse_double(x));
  } catch (const TypeError&) {
    throw TypeError{"a comma-separated list of numbers"};
  }
  return out;
}
template <>
Point3 parse_value<Point3>(const std::string& s) {
  Vec v;
  try {
    v = parse_value<Vec>(s);
  } catch (const TypeError&) {
  }
  if (v.size() != 3) throw TypeError{"three comma-separated numbers"};
  return {v[0], v[1], v[2]};
}
template <>
Overrides parse_value<Overrides>(const std::string& s) {
  Overrides out;
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw TypeError{"a list of name:value pairs"};
    try {
      out.emplace_back(trim(item.substr(0, colon)), parse_double(trim(item.substr(colon + 1))));
    } catch (const TypeError&) {
      throw TypeError{"a list of name:value pairs"};
    }
  }
  return out;
}
template <>
dataset::CaseKind parse_value<dataset::CaseKind>(const std::string& s) {
  try {
    return dataset::parse_case_kind(s);
  } catch (const InvalidArgument&) {
    throw TypeError{"one of stimulus-2d, stimulus-3d, ischemia-2d, ischemia-radius-2d"};
  }
}
template <>
inverse::Strategy parse_value<inverse::Strategy>(const std::string& s) {
  try {
    return inverse::parse_strategy(s);
  } catch (const InvalidArgument&) {
    throw TypeError{"screen or warmup"};
  }
}

std::string format_value(double v) { return fmt_double(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::string& v) { return v; }
std::string format_value(dataset::CaseKind v) { return dataset::to_string(v); }
std::string format_value(inverse::Strategy v) { return inverse::to_string(v); }
std::string format_value(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}
std::string format_value(const Vec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
  return s;
}
std::string format_value(const Point3& v) { return format_value(Vec(v.begin(), v.end())); }
std::string format_value(const Overrides& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i].first + ":" + fmt_double(v[i].second);
  return s;
}

std::string type_name(const double*) { return "number"; }
std::string type_name(const int*) { return "integer"; }
std::string type_name(const std::uint64_t*) { return "u64"; }
std::string type_name(const bool*) { return "bool"; }
std::string type_name(const std::string*) { return "string"; }
std::string type_name(const dataset::CaseKind*) { return "case kind"; }
std::string type_name(const inverse::Strategy*) { return "strategy"; }
std::string type_name(const std::vector<int>*) { return "integer list"; }
std::string type_name(const Point3*) { return "x,y,z"; }
std::string type_name(const Overrides*) { return "name:value list"; }

struct Field {
  std::string section;
  std::string key;
  std::string type;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;

  std::string name() const { return section + "." + key; }
};

template <typename T>
using Check = std::function<void(const T&)>;

template <typename T, typename Acc>
Field make_field(std::string section, std::string key, Acc acc, Check<T> check = {}) {
  Field f;
  f.section = std::move(section);
  f.key = std::move(key);
  f.type = type_name(static_cast<const T*>(nullptr));
  f.set = [acc, check](RunConfig& c, const std::string& text) {
    T v = parse_value<T>(text);
    if (check) check(v);
    acc(c) = std::move(v);
  };
  f.get = [acc](const RunConfig& c) { return format_value(static_cast<const T&>(acc(const_cast<RunConfig&>(c)))); };
  return f;
}

template <typename T>
Check<T> positive() {
  return [](const T& v) {
    if (!(v > T{})) throw InvalidArgument("must be > 0");
  };
}
template <typename T>
Check<T> non_negative() {
  return [](const T& v) {
    if (!(v >= T{})) throw InvalidArgument("must be >= 0");
  };
}
Check<std::vector<int>> positive_list() {
  return [](const std::vector<int>& v) {
    for (int x : v) {
      if (x < 1) throw InvalidArgument("entries must be >= 1");
    }
  };
}
Check<Vec> positive_numbers() {
  return [](const Vec& v) {
    for (double x : v) {
      if (!(x > 0.0)) throw InvalidArgument("entries must be > 0");
    }
  };
}

#define ACC(expr) [](RunConfig & c) -> auto& { return expr; }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(make_field<dataset::CaseKind>("case", "kind", ACC(c.hf.kind)));

    f.push_back(make_field<int>("grid", "nx", ACC(c.hf.nx), positive<int>()));
    f.push_back(make_field<int>("grid", "ny", ACC(c.hf.ny), positive<int>()));
    f.push_back(make_field<double>("grid", "lx", ACC(c.hf.lx), positive<double>()));
    f.push_back(make_field<double>("grid", "ly", ACC(c.hf.ly), positive<double>()));
    f.push_back(make_field<int>("grid", "ni", ACC(c.hf.ni), positive<int>()));
    f.push_back(make_field<int>("grid", "nj", ACC(c.hf.nj), positive<int>()));
    f.push_back(make_field<int>("grid", "nk", ACC(c.hf.nk), positive<int>()));
    f.push_back(make_field<double>("grid", "a1", ACC(c.hf.bounds.a1), positive<double>()));
    f.push_back(make_field<double>("grid", "a2", ACC(c.hf.bounds.a2), positive<double>()));
    f.push_back(make_field<double>("grid", "b1", ACC(c.hf.bounds.b1), positive<double>()));
    f.push_back(make_field<double>("grid", "b2", ACC(c.hf.bounds.b2), positive<double>()));
    f.push_back(make_field<double>("grid", "c1", ACC(c.hf.bounds.c1), positive<double>()));
    f.push_back(make_field<double>("grid", "c2", ACC(c.hf.bounds.c2), positive<double>()));
    f.push_back(make_field<double>("grid", "theta_min", ACC(c.hf.bounds.theta_min)));
    f.push_back(make_field<double>("grid", "theta_max", ACC(c.hf.bounds.theta_max)));
    f.push_back(make_field<double>("grid", "phi_min", ACC(c.hf.bounds.phi_min)));
    f.push_back(make_field<double>("grid", "phi_max", ACC(c.hf.bounds.phi_max)));
    f.push_back(make_field<bool>("grid", "z_from_phi", ACC(c.hf.bounds.z_from_phi)));

    f.push_back(make_field<double>("tissue", "sigma_il", ACC(c.hf.sigma_il), positive<double>()));
    f.push_back(make_field<double>("tissue", "sigma_it", ACC(c.hf.sigma_it), positive<double>()));
    f.push_back(make_field<double>("tissue", "sigma_el", ACC(c.hf.sigma_el), positive<double>()));
    f.push_back(make_field<double>("tissue", "sigma_et", ACC(c.hf.sigma_et), positive<double>()));
    f.push_back(make_field<double>("tissue", "conductivity_scale", ACC(c.hf.conductivity_scale), positive<double>()));
    f.push_back(make_field<double>("tissue", "chi", ACC(c.hf.membrane.chi), positive<double>()));
    f.push_back(make_field<double>("tissue", "cm", ACC(c.hf.membrane.cm), positive<double>()));
    f.push_back(make_field<bool>("tissue", "lumped_mass", ACC(c.hf.lumped_mass)));

    f.push_back(make_field<std::string>("ionic", "model", ACC(c.hf.ionic_model)));
    f.push_back(make_field<Overrides>("ionic", "overrides", ACC(c.hf.ionic_overrides)));

    f.push_back(make_field<double>("stimulus", "radius", ACC(c.hf.stim_radius), positive<double>()));
    f.push_back(make_field<double>("stimulus", "amplitude", ACC(c.hf.stim_amplitude)));
    f.push_back(make_field<double>("stimulus", "duration", ACC(c.hf.stim_duration), positive<double>()));
    f.push_back(make_field<double>("stimulus", "edge_width", ACC(c.hf.stim_edge), non_negative<double>()));
    f.push_back(make_field<Point3>("stimulus", "center", ACC(c.hf.stimulus_center)));

    f.push_back(make_field<double>("ischemia", "radius", ACC(c.hf.ischemia_radius), positive<double>()));
    f.push_back(make_field<double>("ischemia", "radius_min", ACC(c.hf.ischemia_radius_min), positive<double>()));
    f.push_back(make_field<double>("ischemia", "radius_max", ACC(c.hf.ischemia_radius_max), positive<double>()));
    f.push_back(make_field<double>("ischemia", "smoothing_width", ACC(c.hf.ischemia_smoothing), non_negative<double>()));
    f.push_back(make_field<Overrides>("ischemia", "overrides", ACC(c.hf.ischemia_overrides)));

    f.push_back(make_field<double>("simulation", "dt", ACC(c.hf.dt), positive<double>()));
    f.push_back(make_field<double>("simulation", "t_end", ACC(c.hf.t_end), positive<double>()));
    f.push_back(make_field<double>("simulation", "cg_tol", ACC(c.hf.cg_tol), positive<double>()));

    f.push_back(make_field<int>("leads", "count", ACC(c.hf.n_leads), non_negative<int>()));
    f.push_back(make_field<double>("leads", "height", ACC(c.hf.lead_height)));
    f.push_back(make_field<double>("leads", "y", ACC(c.hf.lead_y)));
    f.push_back(make_field<double>("leads", "sphere_radius", ACC(c.hf.lead_sphere_radius), positive<double>()));
    f.push_back(make_field<double>("leads", "sigma_b", ACC(c.hf.sigma_b), positive<double>()));

    f.push_back(make_field<std::uint64_t>("dataset", "n_train", ACC(c.sizes.n_train)));
    f.push_back(make_field<std::uint64_t>("dataset", "n_val", ACC(c.sizes.n_val)));
    f.push_back(make_field<std::uint64_t>("dataset", "n_test", ACC(c.sizes.n_test)));
    f.push_back(make_field<std::uint64_t>("dataset", "seed", ACC(c.dataset_seed)));
    f.push_back(make_field<int>("dataset", "n_t", ACC(c.hf.n_t), positive<int>()));

    f.push_back(make_field<int>("surrogate", "latent", ACC(c.surrogate.n_s), positive<int>()));
    f.push_back(make_field<std::vector<int>>("surrogate", "dyn_hidden", ACC(c.surrogate.dyn_hidden), positive_list()));
    f.push_back(make_field<std::vector<int>>("surrogate", "rec_hidden", ACC(c.surrogate.rec_hidden), positive_list()));
    f.push_back(make_field<double>("surrogate", "dt", ACC(c.surrogate.dt), non_negative<double>()));
    f.push_back(make_field<std::uint64_t>("surrogate", "seed", ACC(c.surrogate.seed)));

    auto adam_epochs = [](const std::string& t) {
      const auto v = parse_value<std::vector<int>>(t);
      for (int e : v) {
        if (e < 0) throw InvalidArgument("entries must be >= 0");
      }
      return v;
    };
    // Adam stages are stored as (epochs, lr) pairs but written as two lists.
    auto stage_field = [&](const std::string& section, auto stages_of, bool epochs) {
      Field fl;
      fl.section = section;
      fl.key = epochs ? "adam_epochs" : "adam_lr";
      fl.type = epochs ? "integer list" : "number list";
      fl.set = [=](RunConfig& c, const std::string& t) {
        auto& st = stages_of(c);
        if (epochs) {
          const auto v = adam_epochs(t);
          st.resize(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) st[i].epochs = v[i];
        } else {
          const auto v = parse_value<Vec>(t);
          positive_numbers()(v);
          st.resize(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) st[i].lr = v[i];
        }
      };
      fl.get = [=](const RunConfig& c) {
        const auto& st = stages_of(const_cast<RunConfig&>(c));
        if (epochs) {
          std::vector<int> v;
          for (const auto& s : st) v.push_back(s.epochs);
          return format_value(v);
        }
        Vec v;
        for (const auto& s : st) v.push_back(s.lr);
        return format_value(v);
      };
      return fl;
    };
    auto train_stages = [](RunConfig& c) -> std::vector<surrogate::AdamStage>& { return c.schedule.adam; };
    auto inv_stages = [](RunConfig& c) -> std::vector<surrogate::AdamStage>& { return c.inverse.inverse.adam; };
    f.push_back(stage_field("schedule", train_stages, true));
    f.push_back(stage_field("schedule", train_stages, false));
    f.push_back(make_field<int>("schedule", "lbfgs_epochs", ACC(c.schedule.lbfgs_epochs), non_negative<int>()));
    f.push_back(make_field<double>("schedule", "alpha", ACC(c.schedule.alpha), non_negative<double>()));
    f.push_back(make_field<double>("schedule", "omega", ACC(c.schedule.omega), non_negative<double>()));

    f.push_back(make_field<std::vector<int>>("inverse", "subdivisions", ACC(c.inverse.subdivisions), positive_list()));
    f.push_back(make_field<inverse::Strategy>("inverse", "strategy", ACC(c.inverse.strategy)));
    f.push_back(make_field<int>("inverse", "warmup_iterations", ACC(c.inverse.warmup_iterations), non_negative<int>()));
    f.push_back(make_field<double>("inverse", "warmup_lr", ACC(c.inverse.warmup_lr), positive<double>()));
    f.push_back(stage_field("inverse", inv_stages, true));
    f.push_back(stage_field("inverse", inv_stages, false));
    f.push_back(make_field<int>("inverse", "lbfgs_epochs", ACC(c.inverse.inverse.lbfgs_epochs), non_negative<int>()));
    f.push_back(make_field<std::vector<int>>("inverse", "radial_sweep", ACC(c.radial_sweep), positive_list()));
    f.push_back(make_field<std::vector<int>>("inverse", "angular_sweep", ACC(c.angular_sweep), positive_list()));
    return f;
  }();
  return fields;
}

#undef ACC

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : schema()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

std::vector<int> default_subdivisions(dataset::CaseKind kind) {
  switch (kind) {
    case dataset::CaseKind::Stimulus3d:
      return {4, 1, 4};
    case dataset::CaseKind::IschemiaRadius2d:
      return {8, 4, 2};
    default:
      return {8, 4};
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); };
  try {
    hf.validate();
  } catch (const InvalidArgument& e) {
    fail("config", e.what());
  }
  if (sizes.n_train < 2) fail("dataset.n_train", "needs at least 2 training samples");
  if (sizes.n_val < 1) fail("dataset.n_val", "needs at least 1 validation sample");
  if (inverse.subdivisions.size() != static_cast<std::size_t>(dataset::parameter_count(hf.kind))) {
    fail("inverse.subdivisions", "expected one count per parameter of " + dataset::to_string(hf.kind));
  }
  if (schedule.adam.empty() && schedule.lbfgs_epochs == 0) {
    // Allowed: an untrained model is still a valid (if useless) artifact.
  }
  if (surrogate.dt > 0.0 && std::abs(surrogate.dt * (hf.n_t - 1) - 1.0) > 1e-12) {
    fail("surrogate.dt", "must equal 1 / (dataset.n_t - 1) or be 0");
  }
  if (!radial_sweep.empty() && hf.kind != dataset::CaseKind::Stimulus3d) {
    fail("inverse.radial_sweep", "only meaningful for stimulus-3d");
  }
  try {
    ionic::make_model(hf.ionic_model);
  } catch (const InvalidArgument& e) {
    fail("ionic.model", e.what());
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  std::map<std::string, std::string> raw;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' outside a section");
    const Field* f = find_field(section, key);
    if (!f) throw ConfigError("unknown key '" + section + "." + key + "'");
    if (!seen.insert(f->name()).second) throw ConfigError("duplicate key '" + f->name() + "'");
    raw[f->name()] = value;
    try {
      f->set(cfg, value);
    } catch (const TypeError& e) {
      throw ConfigError(f->name() + ": expected " + e.expected + ", got '" + value + "'");
    } catch (const InvalidArgument& e) {
      throw ConfigError(f->name() + ": " + e.what() + ", got '" + value + "'");
    }
  }
  if (!seen.count("inverse.subdivisions")) cfg.inverse.subdivisions = default_subdivisions(cfg.hf.kind);
  for (const std::string sec : {"schedule", "inverse"}) {
    const auto e = raw.find(sec + ".adam_epochs"), l = raw.find(sec + ".adam_lr");
    if ((e == raw.end()) != (l == raw.end())) {
      throw ConfigError(sec + ".adam_epochs: must be given together with " + sec + ".adam_lr");
    }
    if (e != raw.end() && split_list(e->second).size() != split_list(l->second).size()) {
      throw ConfigError(sec + ".adam_lr: needs one learning rate per Adam stage");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& f : schema()) {
    if (f.section != section) {
      section = f.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  const auto h = io::fnv1a(std::as_bytes(std::span<const char>(text.data(), text.size())));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool configs_equal(const RunConfig& a, const RunConfig& b) { return serialize_config(a) == serialize_config(b); }

std::string describe_schema() {
  const RunConfig def;
  std::string out;
  for (const auto& f : schema()) out += f.name() + " (" + f.type + ") = " + f.get(def) + "\n";
  return out;
}

}  // namespace ecgli::cli
