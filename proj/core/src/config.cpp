#include "ccpop/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ccpop/errors.hpp"

namespace ccpop {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  auto is_space = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!s.empty() && is_space(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  return s.substr(i);
}

long to_long(const std::string& v, const std::string& where) {
  long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& v, const std::string& where) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(where + ": expected true/false, got '" + v + "'");
}

}  // namespace

IniFile parse_ini_text(const std::string& text, const std::string& path) {
  IniFile ini;
  ini.path = path;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    std::size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(where + ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      ini.sections[section];  // empty sections are legal
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty()) {
      throw ConfigError(where + ": key '" + key + "' outside any section");
    }
    if (!ini.sections[section].emplace(key, value).second) {
      throw ConfigError(where + ": duplicate key '" + key + "' in [" +
                        section + "]");
    }
  }
  return ini;
}

IniFile parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ini_text(buf.str(), path);
}

std::vector<int> parse_years(const std::string& text) {
  std::vector<int> years;
  if (text.find(':') != std::string::npos) {
    int parts[3] = {0, 0, 0};
    std::size_t field = 0, pos = 0;
    while (field < 3) {
      std::size_t next = text.find(':', pos);
      std::string piece = text.substr(
          pos, next == std::string::npos ? std::string::npos : next - pos);
      parts[field++] = static_cast<int>(to_long(trim(piece), "years"));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (field != 3) {
      throw ConfigError("years: expected start:end:step, got '" + text + "'");
    }
    const int start = parts[0], end = parts[1], step = parts[2];
    if (step <= 0 || end < start || (end - start) % step != 0) {
      throw ConfigError("years: bad range '" + text +
                        "' (need end >= start and step dividing the span)");
    }
    for (int y = start; y <= end; y += step) years.push_back(y);
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t next = text.find(',', pos);
      std::string piece = trim(text.substr(
          pos, next == std::string::npos ? std::string::npos : next - pos));
      if (piece.empty()) throw ConfigError("years: empty element in '" + text + "'");
      years.push_back(static_cast<int>(to_long(piece, "years")));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  }
  if (years.empty()) throw ConfigError("years: none given");
  if (!std::is_sorted(years.begin(), years.end()) ||
      std::adjacent_find(years.begin(), years.end()) != years.end()) {
    throw ConfigError("years: must be strictly ascending");
  }
  return years;
}

std::string RunConfig::resolve(const std::string& path) const {
  if (path.empty() || base_dir.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

InputPaths RunConfig::input_paths() const {
  InputPaths p;
  p.populations = resolve(populations);
  p.migrations = resolve(migrations);
  p.wpp_population = resolve(wpp_population);
  p.wpp_mortality = resolve(wpp_mortality);
  return p;
}

RunConfig config_from_ini(const IniFile& ini) {
  RunConfig cfg;
  cfg.base_dir = fs::path(ini.path).parent_path().string();

  const std::set<std::string> known_sections = {
      "grid", "data", "model", "sampler", "output", "validate"};
  for (const auto& [name, _] : ini.sections) {
    if (!known_sections.count(name)) {
      throw ConfigError(ini.path + ": unknown section [" + name + "]");
    }
  }

  auto section = [&](const std::string& name)
      -> const std::map<std::string, std::string>* {
    auto it = ini.sections.find(name);
    return it == ini.sections.end() ? nullptr : &it->second;
  };
  auto check_keys = [&](const std::string& name,
                        const std::set<std::string>& known,
                        const std::string& dynamic_prefix = "") {
    const auto* sec = section(name);
    if (!sec) return;
    for (const auto& [key, _] : *sec) {
      if (known.count(key)) continue;
      if (!dynamic_prefix.empty() && key.rfind(dynamic_prefix, 0) == 0) {
        continue;
      }
      throw ConfigError(ini.path + ": unknown key '" + key + "' in [" + name +
                        "]");
    }
  };
  auto get = [&](const std::string& sec_name, const std::string& key,
                 std::string* out) {
    const auto* sec = section(sec_name);
    if (!sec) return false;
    auto it = sec->find(key);
    if (it == sec->end()) return false;
    *out = it->second;
    return true;
  };
  auto where = [&](const std::string& sec_name, const std::string& key) {
    return ini.path + ": [" + sec_name + "] " + key;
  };

  check_keys("grid", {"age_start", "age_width", "n_age", "years", "grid_file"});
  check_keys("data",
             {"populations", "migrations", "wpp_population", "wpp_mortality",
              "sampling_fraction", "wpp_mortality_scale"},
             "sampling_fraction_");
  check_keys("model",
             {"soft_constraints", "soft_scale", "boundary_prior_sd",
              "bound_prior_sd", "band_lower", "band_upper",
              "migration_balance"});
  check_keys("sampler",
             {"chains", "warmup", "samples", "thin", "seed", "adapt_window"});
  check_keys("output", {"dir"});
  check_keys("validate", {"holdout", "holdout_year", "rhat_threshold"});

  std::string v;
  if (get("grid", "age_start", &v)) {
    cfg.age_start = static_cast<int>(to_long(v, where("grid", "age_start")));
  }
  if (get("grid", "age_width", &v)) {
    cfg.age_width = static_cast<int>(to_long(v, where("grid", "age_width")));
    if (cfg.age_width <= 0) {
      throw ConfigError(where("grid", "age_width") + ": must be positive");
    }
  }
  if (get("grid", "n_age", &v)) {
    long n = to_long(v, where("grid", "n_age"));
    if (n < 2) throw ConfigError(where("grid", "n_age") + ": need at least 2");
    cfg.n_age = static_cast<std::size_t>(n);
  }
  if (get("grid", "years", &v)) cfg.years = parse_years(v);
  if (get("grid", "grid_file", &v)) cfg.grid_file = v;

  if (get("data", "populations", &v)) cfg.populations = v;
  if (get("data", "migrations", &v)) cfg.migrations = v;
  if (get("data", "wpp_population", &v)) cfg.wpp_population = v;
  if (get("data", "wpp_mortality", &v)) cfg.wpp_mortality = v;
  if (get("data", "sampling_fraction", &v)) {
    cfg.ingest.sampling_fraction =
        to_double(v, where("data", "sampling_fraction"));
  }
  if (get("data", "wpp_mortality_scale", &v)) {
    if (v == "prob") {
      cfg.ingest.q_scale_prob = true;
    } else if (v != "logit") {
      throw ConfigError(where("data", "wpp_mortality_scale") +
                        ": expected 'logit' or 'prob', got '" + v + "'");
    }
  }
  if (const auto* data = section("data")) {
    const std::string prefix = "sampling_fraction_";
    for (const auto& [key, value] : *data) {
      if (key.rfind(prefix, 0) != 0) continue;
      int year = static_cast<int>(
          to_long(key.substr(prefix.size()), where("data", key)));
      cfg.ingest.sampling_fraction_by_year[year] =
          to_double(value, where("data", key));
    }
  }

  if (get("model", "soft_constraints", &v)) {
    cfg.posterior.soft_constraints =
        to_bool(v, where("model", "soft_constraints"));
  }
  if (get("model", "soft_scale", &v)) {
    cfg.posterior.soft_scale = to_double(v, where("model", "soft_scale"));
  }
  if (get("model", "boundary_prior_sd", &v)) {
    cfg.posterior.boundary_prior_sd =
        to_double(v, where("model", "boundary_prior_sd"));
  }
  if (get("model", "bound_prior_sd", &v)) {
    cfg.posterior.bound_prior_sd =
        to_double(v, where("model", "bound_prior_sd"));
  }
  if (get("model", "band_lower", &v)) {
    cfg.posterior.band_lower = to_double(v, where("model", "band_lower"));
  }
  if (get("model", "band_upper", &v)) {
    cfg.posterior.band_upper = to_double(v, where("model", "band_upper"));
  }
  if (get("model", "migration_balance", &v)) {
    cfg.posterior.migration_balance =
        to_double(v, where("model", "migration_balance"));
  }

  auto get_size = [&](const std::string& key, std::size_t* out) {
    std::string raw;
    if (!get("sampler", key, &raw)) return;
    long n = to_long(raw, where("sampler", key));
    if (n < 0) throw ConfigError(where("sampler", key) + ": must be >= 0");
    *out = static_cast<std::size_t>(n);
  };
  get_size("chains", &cfg.sampler.n_chains);
  get_size("warmup", &cfg.sampler.n_warmup);
  get_size("samples", &cfg.sampler.n_samples);
  get_size("thin", &cfg.sampler.thin);
  get_size("adapt_window", &cfg.sampler.adapt_window);
  if (get("sampler", "seed", &v)) {
    cfg.sampler.seed =
        static_cast<std::uint64_t>(to_long(v, where("sampler", "seed")));
  }
  if (cfg.sampler.n_chains == 0) {
    throw ConfigError(ini.path + ": [sampler] chains must be >= 1");
  }
  if (cfg.sampler.thin == 0) cfg.sampler.thin = 1;

  if (get("output", "dir", &v)) cfg.out_dir = v;

  if (get("validate", "holdout", &v)) cfg.holdout = v;
  if (get("validate", "holdout_year", &v)) {
    cfg.holdout_year =
        static_cast<int>(to_long(v, where("validate", "holdout_year")));
  }
  if (get("validate", "rhat_threshold", &v)) {
    cfg.rhat_threshold = to_double(v, where("validate", "rhat_threshold"));
  }

  if (cfg.years.empty()) {
    throw ConfigError(ini.path + ": [grid] years is required");
  }
  for (std::size_t i = 1; i < cfg.years.size(); ++i) {
    if (cfg.years[i] - cfg.years[i - 1] != cfg.age_width) {
      throw ConfigError(ini.path + ": year spacing must equal age_width");
    }
  }
  if (cfg.grid_file.empty()) {
    throw ConfigError(ini.path + ": [grid] grid_file is required");
  }
  // Like the inputs, the output directory follows the config file, so runs
  // behave the same from any working directory.
  cfg.out_dir = cfg.resolve(cfg.out_dir);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return config_from_ini(parse_ini(path));
}

}  // namespace ccpop
