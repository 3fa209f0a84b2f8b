#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccpop/ingest.hpp"
#include "ccpop/posterior.hpp"
#include "ccpop/sampler.hpp"

namespace ccpop {

/// Parsed INI-style file: section -> key -> value, plus line numbers for
/// error messages. Keys are unique within a section.
struct IniFile {
  std::string path;
  std::map<std::string, std::map<std::string, std::string>> sections;
};

IniFile parse_ini(const std::string& path);
IniFile parse_ini_text(const std::string& text, const std::string& path);

/// Full run configuration. Paths are resolved relative to the config file's
/// directory so runs work from any working directory.
struct RunConfig {
  int age_start = 15;
  int age_width = 5;
  std::size_t n_age = 7;
  std::vector<int> years;
  std::string grid_file;

  std::string populations;
  std::string migrations;  // optional
  std::string wpp_population;
  std::string wpp_mortality;
  IngestOptions ingest;

  PosteriorOptions posterior;
  SamplerConfig sampler;

  std::string out_dir = "out";

  std::string holdout;     // holdout census CSV, for validate
  int holdout_year = 0;    // 0 = last model year
  double rhat_threshold = 1.05;

  std::string base_dir;    // directory the config file lives in

  std::string resolve(const std::string& path) const;
  InputPaths input_paths() const;
};

/// Year list literal: either "start:end:step" (inclusive, step dividing the
/// span) or a comma-separated ascending list.
std::vector<int> parse_years(const std::string& text);

/// Loads and validates a run config; unknown sections or keys are errors.
RunConfig load_config(const std::string& path);
RunConfig config_from_ini(const IniFile& ini);

}  // namespace ccpop
