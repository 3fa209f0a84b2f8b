#include "outputs.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ccpop/draws_io.hpp"
#include "ccpop/errors.hpp"
#include "ccpop/math.hpp"

namespace ccpop::cli {

using nlohmann::json;

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open for hashing");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string bytes = buf.str();
  return fnv1a64(std::span<const char>(bytes.data(), bytes.size()));
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const Manifest& m, const std::string& path) {
  json j;
  j["command"] = m.command;
  j["config"] = m.config_path;
  j["config_hash"] = hex64(m.config_hash);
  json inputs = json::object();
  for (const auto& [file, hash] : m.input_hashes) inputs[file] = hex64(hash);
  j["input_hashes"] = inputs;
  j["seed"] = m.seed;
  j["sampler"] = {{"chains", m.chains},
                  {"warmup", m.warmup},
                  {"samples", m.samples},
                  {"thin", m.thin}};
  j["constraint_mode"] = m.constraint_mode;
  j["n_params"] = m.n_params;
  j["rhat_max"] = m.rhat_max;
  j["ess_min"] = m.ess_min;
  json rates = json::object();
  for (const auto& [block, rate] : m.accept_rates) rates[block] = rate;
  j["accept_rates"] = rates;
  j["outputs"] = m.outputs;

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

namespace {

void open_or_throw(std::ofstream& out, const std::string& path) {
  out.open(path);
  if (!out) throw Error("cannot write " + path);
}

void quantile_cols(std::ofstream& out, const SummaryRow& row) {
  out << g17(row.q5) << ',' << g17(row.median) << ',' << g17(row.q95);
}

}  // namespace

void write_fig_population(const std::string& path, const ModelGrid& grid,
                          const Summary& county,
                          const DerivedFamily& county_keys,
                          const Summary& district,
                          const DerivedFamily& district_keys) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "level,region,age_start,year,q5,median,q95\n";
  for (std::size_t i = 0; i < county.rows.size(); ++i) {
    const auto& k = county_keys.keys[i];
    out << "county," << grid.counties[k.county] << ','
        << grid.age_groups[k.age] << ',' << grid.time_points[k.time] << ',';
    quantile_cols(out, county.rows[i]);
    out << '\n';
  }
  for (std::size_t i = 0; i < district.rows.size(); ++i) {
    const auto& k = district_keys.keys[i];
    out << "district," << grid.districts[k.district] << ','
        << grid.age_groups[k.age] << ',' << grid.time_points[k.time] << ',';
    quantile_cols(out, district.rows[i]);
    out << '\n';
  }
}

void write_fig_cells(const std::string& path, const ModelGrid& grid,
                     const Summary& summary, const DerivedFamily& family) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "county,age_start,year,q5,median,q95\n";
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const auto& k = family.keys[i];
    out << grid.counties[k.county] << ',' << grid.age_groups[k.age] << ','
        << grid.time_points[k.time] << ',';
    quantile_cols(out, summary.rows[i]);
    out << '\n';
  }
}

void write_fig_psi(const std::string& path, const ModelGrid& grid,
                   const Summary& summary, const DerivedFamily& family) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "county,year,direction,q5,median,q95\n";
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const auto& k = family.keys[i];
    out << grid.counties[k.county] << ',' << grid.time_points[k.time] << ','
        << (k.direction == 0 ? "in" : "out") << ',';
    quantile_cols(out, summary.rows[i]);
    out << '\n';
  }
}

void write_fig_pi(const std::string& path, const ModelGrid& grid,
                  const Summary& summary, const DerivedFamily& family) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "county,age_start,direction,q5,median,q95\n";
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const auto& k = family.keys[i];
    out << grid.counties[k.county] << ',' << grid.age_groups[k.age] << ','
        << (k.direction == 0 ? "in" : "out") << ',';
    quantile_cols(out, summary.rows[i]);
    out << '\n';
  }
}

void write_basis_files(const MortalityBasis& basis, const ModelGrid& grid,
                       const std::string& components_path,
                       const std::string& coefficients_path) {
  std::ofstream comp;
  open_or_throw(comp, components_path);
  comp << "age_start,Y0,Y1,Y2\n";
  for (std::size_t a = 0; a < grid.n_age(); ++a) {
    comp << grid.age_groups[a] << ',' << g17(basis.mean_schedule[a]) << ','
         << g17(basis.pc1[a]) << ',' << g17(basis.pc2[a]) << '\n';
  }
  std::ofstream coef;
  open_or_throw(coef, coefficients_path);
  coef << "year,B1,B2\n";
  for (std::size_t t = 0; t < grid.n_time(); ++t) {
    coef << grid.time_points[t] << ',' << g17(basis.national_coeffs[t][0])
         << ',' << g17(basis.national_coeffs[t][1]) << '\n';
  }
}

void write_table1(const std::string& path,
                  const std::vector<ErrorRow>& interpolation,
                  const std::vector<ErrorRow>& bayes) {
  if (interpolation.size() != bayes.size()) {
    throw Error("table1: method row counts differ");
  }
  std::ofstream out;
  open_or_throw(out, path);
  out << "age,mean_interpolation,mean_bayes_ccp,median_interpolation,"
         "median_bayes_ccp,rmse_interpolation,rmse_bayes_ccp\n";
  for (std::size_t i = 0; i < bayes.size(); ++i) {
    if (interpolation[i].age_label != bayes[i].age_label) {
      throw Error("table1: method rows disagree on age labels");
    }
    out << bayes[i].age_label << ',' << g17(interpolation[i].mean) << ','
        << g17(bayes[i].mean) << ',' << g17(interpolation[i].median) << ','
        << g17(bayes[i].median) << ',' << g17(interpolation[i].rmse) << ','
        << g17(bayes[i].rmse) << '\n';
  }
}

void write_table2(const std::string& path,
                  const std::vector<CoverageRow>& rows) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "age,prop_in,prop_above,prop_below\n";
  for (const CoverageRow& r : rows) {
    out << r.age_label << ',' << g17(r.in) << ',' << g17(r.above) << ','
        << g17(r.below) << '\n';
  }
}

void write_pit(const std::string& path,
               const std::vector<std::pair<std::string, double>>& pit) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "group,pit\n";
  for (const auto& [group, value] : pit) {
    out << group << ',' << g17(value) << '\n';
  }
}

void write_accept_rates(const std::string& path, const PosteriorDraws& draws) {
  std::ofstream out;
  open_or_throw(out, path);
  out << "block,chain,accept_rate\n";
  for (std::size_t ch = 0; ch < draws.accept_rates.size(); ++ch) {
    for (std::size_t b = 0; b < draws.block_names.size(); ++b) {
      out << draws.block_names[b] << ',' << (ch + 1) << ','
          << g17(draws.accept_rates[ch][b]) << '\n';
    }
  }
}

}  // namespace ccpop::cli
