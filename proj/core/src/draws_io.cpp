#include "ccpop/draws_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "ccpop/csv.hpp"
#include "ccpop/errors.hpp"

namespace ccpop {

namespace fs = std::filesystem;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_draws(const PosteriorDraws& draws, const std::string& dir) {
  fs::create_directories(dir);
  for (std::size_t ch = 0; ch < draws.n_chains(); ++ch) {
    fs::path p = fs::path(dir) / ("chain_" + std::to_string(ch + 1) + ".csv");
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << "iteration,param,value\n";
    const Array2& m = draws.chains[ch];
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        out << (i + 1) << ',' << csv_field(draws.param_names[j]) << ','
            << g17(m(i, j))
            << '\n';
      }
    }
    if (!out) throw Error("write failed: " + p.string());
  }
}

PosteriorDraws read_draws(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw InputError(dir + ": not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("chain_", 0) == 0 && e.path().extension() == ".csv") {
      files.push_back(e.path());
    }
  }
  if (files.empty()) throw InputError(dir + ": no chain_*.csv files");
  // chain_10 must sort after chain_2, so order by the numeric suffix
  auto chain_no = [](const fs::path& p) {
    return std::stol(p.stem().string().substr(6));
  };
  std::sort(files.begin(), files.end(), [&](const auto& a, const auto& b) {
    return chain_no(a) < chain_no(b);
  });

  PosteriorDraws draws;
  std::map<std::string, std::size_t> param_pos;
  for (const fs::path& f : files) {
    CsvTable t = read_csv(f.string());
    std::size_t c_it = t.column("iteration");
    std::size_t c_param = t.column("param");
    std::size_t c_value = t.column("value");

    if (draws.param_names.empty()) {
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (csv_long(t, r, c_it) != 1) break;
        const std::string& name = t.rows[r][c_param];
        if (!param_pos.emplace(name, draws.param_names.size()).second) {
          throw InputError(f.string() + ": duplicate param '" + name +
                           "' in iteration 1");
        }
        draws.param_names.push_back(name);
      }
      if (draws.param_names.empty()) {
        throw InputError(f.string() + ": no iteration-1 rows");
      }
    }
    const std::size_t p = draws.param_names.size();
    if (t.rows.size() % p != 0) {
      throw InputError(f.string() + ": row count is not a multiple of " +
                       std::to_string(p) + " params");
    }
    const std::size_t n = t.rows.size() / p;
    Array2 m(n, p);
    std::vector<bool> seen(p, false);
    std::size_t filled = 0;
    long iter = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (filled == 0) {
        iter = csv_long(t, r, c_it);
        std::fill(seen.begin(), seen.end(), false);
      }
      if (csv_long(t, r, c_it) != iter) {
        throw InputError(f.string() + ":" + std::to_string(r + 2) +
                         ": incomplete iteration block");
      }
      auto it = param_pos.find(t.rows[r][c_param]);
      if (it == param_pos.end() || seen[it->second]) {
        throw InputError(f.string() + ":" + std::to_string(r + 2) +
                         ": unexpected param '" + t.rows[r][c_param] + "'");
      }
      seen[it->second] = true;
      m(r / p, it->second) = csv_double(t, r, c_value);
      if (++filled == p) filled = 0;
    }
    draws.chains.push_back(std::move(m));
  }
  return draws;
}

void write_summary(const Summary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "param,median,q2.5,q5,q95,q97.5,rhat,ess\n";
  for (const SummaryRow& r : summary.rows) {
    out << csv_field(r.name) << ',' << g17(r.median) << ',' << g17(r.q2_5) << ','
        << g17(r.q5) << ',' << g17(r.q95) << ',' << g17(r.q97_5) << ','
        << g17(r.rhat) << ',' << g17(r.ess) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace ccpop
