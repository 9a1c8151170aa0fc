#include "bohm/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace bohm::app {

namespace {

constexpr std::string_view kBase = R"(
[physics]
mass = 1
omega_x = 1
omega_y = 1
alpha = 0.15
beta = 0.16
kappa = 1
hbar = 1

[solver]
dt_max = 0.01
dt_min = 1e-5
tol_step = 1e-8
norm_tolerance = 1e-3
leak_threshold = 1e-6
history_every = 1
trajectory_dt_snap = 0.01

[trajectories]
dt = 1e-5
out_every = 1000
adaptive = false

[chaos]
count = 60
epsilon = 1e-4
direction_deg = 45
keep_fraction = 0.8
bootstrap = 1000
)";

struct Preset {
  const char* name;
  const char* text;
};

constexpr Preset kPresets[] = {
    {"base", kBase.data()},
    {"fig1", R"(
preset = base
[physics]
kappa = 1
[solver]
t_end = 300
dt_snap = 100
)"},
    {"fig2", R"(
preset = base
[physics]
kappa = 0.1
[vortices]
region = -2, 3, -2, 3
t_begin = 2.6
t_end = 3.5
frame_interval = 0.01
)"},
    {"fig3", R"(
preset = base
[sweep]
kappa = 0, 1
[trajectories]
seeds = 1.4:0.5, 0.5:1.4, 0.6:-0.5, -0.5:0.6
t_end = 50
)"},
    {"fig4L", R"(
preset = base
[sweep]
kappa = 0, 0.05, 0.5, 1
hbar = 1
[chaos]
x_intervals = -1.5:-1.1, 1.1:1.5
y_intervals = -1.5:-1.1, 1.1:1.5
t_end = 50
)"},
    {"fig4R", R"(
preset = base
[sweep]
kappa = 1
hbar = 0.05, 0.5, 1
[chaos]
x_intervals = -0.5:-0.1, 0.1:0.5
y_intervals = -0.5:-0.1, 0.1:0.5
t_end = 50
[grid@hbar=0.05]
half_width = 3
)"},
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"preset"}},
      {"physics", {"mass", "omega_x", "omega_y", "kappa", "alpha", "beta", "hbar"}},
      {"grid", {"half_width", "n"}},
      {"solver",
       {"t_end", "dt_snap", "history_every", "dt_max", "dt_min", "tol_step", "norm_tolerance", "leak_threshold",
        "trajectory_dt_snap", "snapshots"}},
      {"trajectories", {"t_begin", "t_end", "dt", "out_every", "adaptive", "rtol", "atol", "threads", "seeds"}},
      {"vortices", {"region", "t_begin", "t_end", "frame_interval", "match_radius", "pair_radius"}},
      {"chaos",
       {"x_intervals", "y_intervals", "count", "epsilon", "direction_deg", "t_end", "fit_begin", "fit_end",
        "keep_fraction", "bootstrap", "bootstrap_seed", "dt", "out_every", "threads"}},
      {"sweep", {"kappa", "hbar"}},
      {"plot", {"kind", "inputs", "labels", "time"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back({});
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (!text.empty() && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v))
    throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

long long parse_integer(const std::string& text, const std::string& what) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(what + ": '" + text + "' is not an integer");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(what + ": '" + text + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item, what));
  return out;
}

// "a:b" pairs, comma separated.
std::vector<std::pair<double, double>> parse_pairs(const std::string& text, const std::string& what) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ConfigError(what + ": expected 'a:b', got '" + item + "'");
    out.emplace_back(parse_double(parts[0], what), parse_double(parts[1], what));
  }
  return out;
}

bool same_value(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

bool qualifier_matches(const std::string& q, double kappa, double hbar) {
  const auto eq = q.find('=');
  const std::string name = q.substr(0, eq);
  const double v = parse_double(q.substr(eq + 1), "qualifier " + q);
  if (name == "kappa") return !std::isnan(kappa) && same_value(v, kappa);
  return !std::isnan(hbar) && same_value(v, hbar);
}

std::pair<std::string, std::string> split_address(const std::string& address) {
  const auto dot = address.find('.');
  if (dot == std::string::npos) return {"", address};
  return {address.substr(0, dot), address.substr(dot + 1)};
}

void check_entry(const Config::Entry& e, const std::string& where) {
  const auto& keys = known_keys();
  const auto it = keys.find(e.section);
  if (it == keys.end()) throw ConfigError(where + ": unknown section [" + e.section + "]");
  if (!it->second.contains(e.key))
    throw ConfigError(where + ": unknown key '" + e.key + "' in section [" + e.section + "]");
  if (!e.qualifier.empty()) {
    const auto eq = e.qualifier.find('=');
    const std::string name = e.qualifier.substr(0, eq);
    if (eq == std::string::npos || (name != "kappa" && name != "hbar"))
      throw ConfigError(where + ": section qualifier must be kappa=<v> or hbar=<v>, got '" + e.qualifier + "'");
    parse_double(e.qualifier.substr(eq + 1), where + ": qualifier");
  }
}

class Reader {
 public:
  Reader(const Config& c, const SweepPoint& p) : c_(c), p_(p) {}

  std::optional<std::string> raw(const std::string& address) const { return c_.get(address, p_.kappa, p_.hbar); }
  double number(const std::string& address, double fallback) const {
    const auto v = raw(address);
    return v ? parse_double(*v, address) : fallback;
  }
  std::optional<double> optional_number(const std::string& address) const {
    const auto v = raw(address);
    if (!v) return std::nullopt;
    return parse_double(*v, address);
  }
  long long integer(const std::string& address, long long fallback) const {
    const auto v = raw(address);
    return v ? parse_integer(*v, address) : fallback;
  }
  bool flag(const std::string& address, bool fallback) const {
    const auto v = raw(address);
    return v ? parse_bool(*v, address) : fallback;
  }
  std::string text(const std::string& address, const std::string& fallback = {}) const {
    return raw(address).value_or(fallback);
  }

 private:
  const Config& c_;
  const SweepPoint& p_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::vector<Interval> intervals(const std::string& text, const std::string& what) {
  std::vector<Interval> out;
  for (const auto& [lo, hi] : parse_pairs(text, what)) {
    require(lo <= hi, what + ": interval bounds reversed");
    out.push_back({lo, hi});
  }
  return out;
}

}  // namespace

std::string format_value(double v) { return format_number(v); }

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  std::string section, qualifier;
  std::istringstream is{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number);
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": malformed section header");
      const std::string name = trim(body.substr(1, body.size() - 2));
      const auto at = name.find('@');
      section = trim(name.substr(0, at));
      qualifier = at == std::string::npos ? std::string() : trim(name.substr(at + 1));
      if (known_keys().find(section) == known_keys().end() || section.empty())
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    Entry e{section, qualifier, trim(body.substr(0, eq)), trim(body.substr(eq + 1))};
    if (e.key.empty()) throw ConfigError(where + ": empty key");
    check_entry(e, where);
    c.entries_.push_back(std::move(e));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path.string());
}

Config Config::preset(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return parse(p.text, "preset " + name);
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> Config::preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

void Config::set(const std::string& address, const std::string& value) {
  auto [section, key] = split_address(address);
  std::string qualifier;
  if (const auto at = section.find('@'); at != std::string::npos) {
    qualifier = section.substr(at + 1);
    section = section.substr(0, at);
  }
  Entry e{section, qualifier, key, trim(value)};
  check_entry(e, "setting " + address);
  entries_.push_back(std::move(e));
}

void Config::merge(const Config& over) {
  entries_.insert(entries_.end(), over.entries_.begin(), over.entries_.end());
}

Config Config::resolved(const std::optional<std::string>& cli_preset) const {
  Config out;
  std::vector<std::string> chain;
  std::function<void(const std::string&)> apply = [&](const std::string& name) {
    if (std::find(chain.begin(), chain.end(), name) != chain.end())
      throw ConfigError("preset cycle through '" + name + "'");
    chain.push_back(name);
    const Config p = preset(name);
    if (const auto parent = p.get("preset")) apply(*parent);
    for (const auto& e : p.entries_)
      if (!(e.section.empty() && e.key == "preset")) out.entries_.push_back(e);
  };
  const auto start = cli_preset ? cli_preset : get("preset");
  if (start) apply(*start);
  for (const auto& e : entries_)
    if (!(e.section.empty() && e.key == "preset")) out.entries_.push_back(e);
  if (start) out.entries_.insert(out.entries_.begin(), Entry{"", "", "preset", *start});
  return out;
}

std::optional<std::string> Config::get(const std::string& address, double kappa, double hbar) const {
  const auto [section, key] = split_address(address);
  std::optional<std::string> plain, qualified;
  for (const auto& e : entries_) {
    if (e.section != section || e.key != key) continue;
    if (e.qualifier.empty())
      plain = e.value;
    else if (qualifier_matches(e.qualifier, kappa, hbar))
      qualified = e.value;
  }
  return qualified ? qualified : plain;
}

std::string Config::dump() const {
  // Last value per address, sections in first-appearance order.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, std::string>>> body;
  for (const auto& e : entries_) {
    const std::pair<std::string, std::string> sec{e.section, e.qualifier};
    if (std::find(order.begin(), order.end(), sec) == order.end()) order.push_back(sec);
    auto& kv = body[sec];
    const auto it = std::find_if(kv.begin(), kv.end(), [&](const auto& p) { return p.first == e.key; });
    if (it == kv.end())
      kv.emplace_back(e.key, e.value);
    else
      it->second = e.value;
  }
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first.empty() && !b.first.empty();
  });
  std::ostringstream os;
  bool first = true;
  for (const auto& sec : order) {
    if (!sec.first.empty()) {
      if (!first) os << '\n';
      os << '[' << sec.first << (sec.second.empty() ? "" : "@" + sec.second) << "]\n";
    }
    for (const auto& [k, v] : body[sec]) os << k << " = " << v << '\n';
    first = false;
  }
  return os.str();
}

std::vector<SweepPoint> sweep_points(const Config& c) {
  auto values = [&](const std::string& sweep_key, const std::string& fallback_key, double fallback) {
    if (const auto v = c.get("sweep." + sweep_key)) {
      auto list = parse_list(*v, "sweep." + sweep_key);
      if (list.empty()) throw ConfigError("sweep." + sweep_key + " is empty");
      return list;
    }
    if (const auto v = c.get(fallback_key)) return std::vector<double>{parse_double(*v, fallback_key)};
    return std::vector<double>{fallback};
  };
  const auto kappas = values("kappa", "physics.kappa", 0.0);
  const auto hbars = values("hbar", "physics.hbar", 1.0);
  std::vector<SweepPoint> out;
  for (double k : kappas)
    for (double h : hbars) out.push_back({k, h, "kappa_" + format_value(k) + "_hbar_" + format_value(h)});
  return out;
}

RunConfig make_run_config(const Config& c, const SweepPoint& point) {
  const Reader r(c, point);
  RunConfig rc;
  rc.preset = r.text("preset");
  rc.point = point;

  auto& p = rc.params;
  p.mass = r.number("physics.mass", 1.0);
  p.omega_x = r.number("physics.omega_x", 1.0);
  p.omega_y = r.number("physics.omega_y", 1.0);
  p.alpha = r.number("physics.alpha", 0.0);
  p.beta = r.number("physics.beta", 0.0);
  p.kappa = point.kappa;
  p.hbar = point.hbar;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("physics: ") + e.what());
  }

  const auto half_width = r.optional_number("grid.half_width");
  const auto n = r.raw("grid.n");
  if (n) {
    rc.grid.half_width = half_width.value_or(default_grid(p.hbar).half_width);
    rc.grid.n = static_cast<int>(parse_integer(*n, "grid.n"));
  } else {
    rc.grid = half_width ? default_grid(p.hbar, *half_width) : default_grid(p.hbar);
  }
  try {
    rc.grid.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }

  auto& s = rc.solver;
  s.dt_max = r.number("solver.dt_max", s.dt_max);
  s.dt_min = r.number("solver.dt_min", s.dt_min);
  s.tol_step = r.number("solver.tol_step", s.tol_step);
  s.norm_tolerance = r.number("solver.norm_tolerance", s.norm_tolerance);
  s.leak_threshold = r.number("solver.leak_threshold", s.leak_threshold);
  require(s.dt_max > 0 && s.dt_min > 0 && s.dt_min <= s.dt_max, "solver: need 0 < dt_min <= dt_max");
  require(s.tol_step > 0 && s.norm_tolerance > 0 && s.leak_threshold > 0, "solver: tolerances must be positive");
  rc.t_end = r.number("solver.t_end", 0.0);
  rc.dt_snap = r.number("solver.dt_snap", 1.0);
  rc.history_every = r.number("solver.history_every", std::min(1.0, rc.dt_snap));
  rc.trajectory_dt_snap = r.number("solver.trajectory_dt_snap", 1e-2);
  rc.snapshots = r.text("solver.snapshots");
  require(rc.t_end >= 0, "solver.t_end must be non-negative");
  require(rc.dt_snap > 0 && rc.history_every > 0 && rc.trajectory_dt_snap > 0, "solver: snapshot spacings must be positive");
  const double ratio = rc.dt_snap / rc.history_every;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio) && ratio >= 1.0 - 1e-12,
          "solver.history_every must divide solver.dt_snap");

  auto& tj = rc.trajectories;
  tj.t_begin = r.number("trajectories.t_begin", 0.0);
  tj.t_end = r.number("trajectories.t_end", 10.0);
  auto& ti = tj.integrator;
  ti.dt = r.number("trajectories.dt", ti.dt);
  ti.out_every = static_cast<int>(r.integer("trajectories.out_every", ti.out_every));
  ti.adaptive = r.flag("trajectories.adaptive", false);
  ti.rtol = r.number("trajectories.rtol", ti.rtol);
  ti.atol = r.number("trajectories.atol", ti.atol);
  ti.threads = static_cast<int>(r.integer("trajectories.threads", 1));
  if (const auto seeds = r.raw("trajectories.seeds"))
    for (const auto& [x, y] : parse_pairs(*seeds, "trajectories.seeds")) tj.seeds.push_back({x, y});
  require(tj.t_begin >= 0 && tj.t_end >= tj.t_begin, "trajectories: need 0 <= t_begin <= t_end");
  try {
    ti.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("trajectories: ") + e.what());
  }

  auto& vj = rc.vortices;
  if (const auto region = r.raw("vortices.region")) {
    const auto v = parse_list(*region, "vortices.region");
    require(v.size() == 4, "vortices.region needs x_min, x_max, y_min, y_max");
    vj.region = {v[0], v[1], v[2], v[3]};
  }
  require(vj.region.x_min < vj.region.x_max && vj.region.y_min < vj.region.y_max, "vortices.region is empty");
  vj.t_begin = r.number("vortices.t_begin", 0.0);
  vj.t_end = r.number("vortices.t_end", vj.t_begin);
  vj.frame_interval = r.number("vortices.frame_interval", 1e-2);
  vj.match_radius = r.number("vortices.match_radius", 0.0);
  vj.pair_radius = r.number("vortices.pair_radius", 0.0);
  require(vj.t_begin >= 0 && vj.t_end >= vj.t_begin, "vortices: need 0 <= t_begin <= t_end");
  require(vj.frame_interval > 0 && vj.match_radius >= 0 && vj.pair_radius >= 0, "vortices: spacings must be positive");

  auto& cj = rc.chaos;
  const auto xi = r.raw("chaos.x_intervals");
  const auto yi = r.raw("chaos.y_intervals");
  if (xi) cj.region.x = intervals(*xi, "chaos.x_intervals");
  cj.region.y = yi ? intervals(*yi, "chaos.y_intervals") : cj.region.x;
  const long long count = r.integer("chaos.count", 60);
  require(count > 0, "chaos.count must be positive");
  cj.count = static_cast<std::size_t>(count);
  cj.epsilon = r.number("chaos.epsilon", 1e-4);
  cj.direction_deg = r.number("chaos.direction_deg", 45.0);
  cj.t_end = r.number("chaos.t_end", 50.0);
  cj.fit_begin = r.optional_number("chaos.fit_begin");
  cj.fit_end = r.optional_number("chaos.fit_end");
  cj.keep_fraction = r.number("chaos.keep_fraction", 0.8);
  cj.bootstrap = static_cast<int>(r.integer("chaos.bootstrap", 1000));
  cj.bootstrap_seed = static_cast<std::uint64_t>(r.integer("chaos.bootstrap_seed", 20240601));
  cj.integrator = ti;
  cj.integrator.dt = r.number("chaos.dt", ti.dt);
  cj.integrator.out_every = static_cast<int>(r.integer("chaos.out_every", ti.out_every));
  cj.integrator.threads = static_cast<int>(r.integer("chaos.threads", ti.threads));
  require(cj.epsilon > 0, "chaos.epsilon must be positive");
  require(cj.t_end > 0, "chaos.t_end must be positive");
  require(cj.keep_fraction >= 0 && cj.keep_fraction <= 1, "chaos.keep_fraction must lie in [0, 1]");
  require(cj.bootstrap == 0 || cj.bootstrap >= 10, "chaos.bootstrap must be 0 or at least 10");
  try {
    cj.integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("chaos: ") + e.what());
  }

  rc.plot_kind = r.text("plot.kind");
  if (const auto inputs = r.raw("plot.inputs")) rc.plot_inputs = split(*inputs, ',');
  if (const auto labels = r.raw("plot.labels")) rc.plot_labels = split(*labels, ',');
  rc.plot_time = r.number("plot.time", 0.0);
  return rc;
}

}  // namespace bohm::app
