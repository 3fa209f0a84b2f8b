#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ccpop/posterior.hpp"
#include "ccpop/tensor.hpp"

namespace ccpop {

struct SamplerConfig {
  std::size_t n_chains = 4;
  std::size_t n_warmup = 2000;
  std::size_t n_samples = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t adapt_window = 50;  // iterations per adaptation update
  std::size_t init_retries = 100;
};

using LogDensity = std::function<double(std::span<const double>)>;

/// Everything one chain needs. Built per chain so evaluators and hook
/// workspaces are never shared across threads.
struct ChainContext {
  LogDensity log_density;
  BlockPlan plan;
  std::function<std::vector<double>(std::mt19937_64&)> init;
};
using ChainFactory = std::function<ChainContext(std::size_t chain)>;

struct PosteriorDraws {
  std::vector<std::string> param_names;
  std::vector<Array2> chains;  // per chain: n_samples x n_params
  std::vector<std::string> block_names;
  std::vector<std::vector<double>> accept_rates;  // per chain, per block
  std::uint64_t seed = 0;

  std::size_t n_chains() const { return chains.size(); }
  std::size_t n_samples() const {
    return chains.empty() ? 0 : chains[0].rows();
  }
  std::size_t n_params() const {
    return chains.empty() ? 0 : chains[0].cols();
  }
};

/// Adaptive random-walk Metropolis-within-Gibbs. Block proposal scales are
/// tuned by diminishing adaptation during warmup only, so retained draws
/// come from a fixed transition kernel. Chains run in parallel and are
/// reproducible from (seed, chain index) alone.
PosteriorDraws run_chains(const SamplerConfig& config,
                          const ChainFactory& factory,
                          std::vector<std::string> param_names);

/// Split-R-hat (plain, non-rank-normalized): chains are halved, and the
/// usual between/within variance ratio is taken over the splits. Returns
/// NaN for degenerate (zero within-variance) input.
double rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size summed over chains, each via Geyer's initial
/// monotone positive sequence of autocovariance pairs.
double ess(const std::vector<std::vector<double>>& chains);

struct SummaryRow {
  std::string name;
  double median = 0.0, q2_5 = 0.0, q97_5 = 0.0, q5 = 0.0, q95 = 0.0;
  double rhat = 0.0, ess = 0.0;
};
struct Summary {
  std::vector<SummaryRow> rows;
};

/// Pooled-chain type-7 quantiles plus per-parameter diagnostics.
Summary summarize(const PosteriorDraws& draws);

/// Maps one packed draw to derived quantities (e.g. eta cells).
using DrawTransform =
    std::function<void(std::span<const double>, std::span<double>)>;

/// Summaries of derived quantities: the transform runs on every stored draw
/// and quantiles are taken of the transformed values.
Summary summarize_transformed(const PosteriorDraws& draws,
                              const std::vector<std::string>& names,
                              const DrawTransform& transform);

}  // namespace ccpop
