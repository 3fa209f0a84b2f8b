#pragma once

#include <string>
#include <vector>

#include "ccpop/sampler.hpp"

namespace ccpop {

/// Shortest round-trip decimal form of a double (printf %.17g).
std::string g17(double x);

/// CSV-escapes a field: quoted (with doubled quotes) when it contains a
/// comma, quote, or newline; returned verbatim otherwise.
std::string csv_field(const std::string& s);

/// Writes one CSV file per chain (chain_1.csv, ...) under `dir`, rows
/// `iteration,param,value` in draw-major order. Iterations are 1-based
/// indices of the stored (post-thinning) draws.
void write_draws(const PosteriorDraws& draws, const std::string& dir);

/// Reads chain_*.csv files back into draws. Parameter order is taken from
/// the first chain's first iteration; all chains must agree on it.
PosteriorDraws read_draws(const std::string& dir);

/// Writes `param,median,q2.5,q5,q95,q97.5,rhat,ess` rows.
void write_summary(const Summary& summary, const std::string& path);

}  // namespace ccpop
