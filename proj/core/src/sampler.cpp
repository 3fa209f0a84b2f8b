#include "ccpop/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "ccpop/errors.hpp"
#include "ccpop/math.hpp"

namespace ccpop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ChainResult {
  Array2 draws;
  std::vector<double> accept_rates;
};

ChainResult run_one_chain(const SamplerConfig& config, std::size_t chain,
                          const ChainContext& ctx) {
  std::seed_seq seq{static_cast<std::uint64_t>(config.seed & 0xffffffffull),
                    static_cast<std::uint64_t>(config.seed >> 32),
                    static_cast<std::uint64_t>(chain)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> x;
  double lp = kNegInf;
  for (std::size_t attempt = 0; attempt < config.init_retries; ++attempt) {
    x = ctx.init(rng);
    lp = ctx.log_density(x);
    if (std::isfinite(lp)) break;
  }
  if (!std::isfinite(lp)) {
    throw Error("sampler: no finite starting point after " +
                std::to_string(config.init_retries) + " attempts (chain " +
                std::to_string(chain) + ")");
  }

  const std::size_t n_blocks = ctx.plan.blocks.size();
  std::vector<double> log_scale(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    log_scale[b] = std::log(ctx.plan.blocks[b].init_scale);
  }
  std::vector<std::size_t> window_accepts(n_blocks, 0);
  std::vector<std::size_t> post_accepts(n_blocks, 0);

  const std::size_t total_iters =
      config.n_warmup + config.n_samples * config.thin;
  Array2 draws(config.n_samples, x.size());
  std::vector<double> saved;
  std::size_t stored = 0;

  for (std::size_t iter = 0; iter < total_iters; ++iter) {
    bool warmup = iter < config.n_warmup;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const Block& blk = ctx.plan.blocks[b];
      double scale = std::exp(log_scale[b]);
      saved.resize(blk.indices.size());
      for (std::size_t i = 0; i < blk.indices.size(); ++i) {
        saved[i] = x[blk.indices[i]];
        x[blk.indices[i]] += scale * norm(rng);
      }
      double lpp = ctx.log_density(x);
      if (std::log(unif(rng)) < lpp - lp) {
        lp = lpp;
        ++window_accepts[b];
        if (!warmup) ++post_accepts[b];
      } else {
        for (std::size_t i = 0; i < blk.indices.size(); ++i) {
          x[blk.indices[i]] = saved[i];
        }
      }
    }
    if (!ctx.plan.hooks.empty()) {
      for (const auto& hook : ctx.plan.hooks) hook(x, rng);
      lp = ctx.log_density(x);
    }
    if (warmup && (iter + 1) % config.adapt_window == 0) {
      double w = static_cast<double>((iter + 1) / config.adapt_window);
      double step = std::min(1.0, 2.0 / std::sqrt(w));
      for (std::size_t b = 0; b < n_blocks; ++b) {
        double rate = static_cast<double>(window_accepts[b]) /
                      static_cast<double>(config.adapt_window);
        log_scale[b] += step * (rate - ctx.plan.blocks[b].target_accept);
        window_accepts[b] = 0;
      }
    }
    if (!warmup && (iter - config.n_warmup) % config.thin == 0 &&
        stored < config.n_samples) {
      for (std::size_t j = 0; j < x.size(); ++j) draws(stored, j) = x[j];
      ++stored;
    }
  }

  ChainResult result;
  result.draws = std::move(draws);
  double denom = static_cast<double>(config.n_samples * config.thin);
  result.accept_rates.resize(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    result.accept_rates[b] =
        static_cast<double>(post_accepts[b]) / std::max(denom, 1.0);
  }
  return result;
}

}  // namespace

PosteriorDraws run_chains(const SamplerConfig& config,
                          const ChainFactory& factory,
                          std::vector<std::string> param_names) {
  if (config.n_chains < 1) throw Error("sampler: need at least 1 chain");
  if (config.n_samples < 1) throw Error("sampler: need n_samples >= 1");
  if (config.thin < 1) throw Error("sampler: thin must be >= 1");

  std::vector<std::future<ChainResult>> futures;
  futures.reserve(config.n_chains);
  for (std::size_t chain = 0; chain < config.n_chains; ++chain) {
    futures.push_back(std::async(std::launch::async, [&config, chain,
                                                      &factory] {
      ChainContext ctx = factory(chain);
      return run_one_chain(config, chain, ctx);
    }));
  }

  PosteriorDraws out;
  out.param_names = std::move(param_names);
  out.seed = config.seed;
  for (auto& fut : futures) {
    ChainResult result = fut.get();
    out.chains.push_back(std::move(result.draws));
    out.accept_rates.push_back(std::move(result.accept_rates));
  }
  ChainContext ctx0 = factory(0);
  for (const auto& blk : ctx0.plan.blocks) out.block_names.push_back(blk.name);
  return out;
}

double rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw std::invalid_argument("rhat: need at least 2 chains");
  }
  std::size_t n_full = chains[0].size();
  for (const auto& ch : chains) n_full = std::min(n_full, ch.size());
  if (n_full < 4) throw std::invalid_argument("rhat: need >= 4 iterations");
  std::size_t half = n_full / 2;

  std::vector<double> means, vars;
  for (const auto& ch : chains) {
    for (int part = 0; part < 2; ++part) {
      std::span<const double> split(ch.data() + (part == 0 ? 0 : n_full - half),
                                    half);
      means.push_back(mean(split));
      vars.push_back(sample_variance(split));
    }
  }
  double w = mean(vars);
  if (!(w > 0.0) || !std::isfinite(w)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double b_over_n = sample_variance(means);
  double n = static_cast<double>(half);
  double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

namespace {

// Integrated autocorrelation time via Geyer's initial monotone sequence.
double chain_tau(const std::vector<double>& chain) {
  std::size_t n = chain.size();
  double m = mean(chain);
  double c0 = 0.0;
  for (double v : chain) c0 += (v - m) * (v - m);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  auto gamma = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) {
      s += (chain[i] - m) * (chain[i + k] - m);
    }
    return s / static_cast<double>(n);
  };

  // Lag cap keeps the cost near-linear; truncation only matters for chains
  // whose correlation time exceeds the cap, where ESS is tiny anyway.
  std::size_t max_lag = std::min(n - 1, static_cast<std::size_t>(2000));
  double sum_pairs = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 <= max_lag; k += 2) {
    double pair = gamma(k) + gamma(k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    sum_pairs += pair;
    prev_pair = pair;
  }
  double tau = 2.0 * sum_pairs / c0 - 1.0;
  return std::max(tau, 1.0 / static_cast<double>(n));
}

}  // namespace

double ess(const std::vector<std::vector<double>>& chains) {
  double total = 0.0;
  for (const auto& ch : chains) {
    if (ch.size() < 4) throw std::invalid_argument("ess: chain too short");
    double tau = chain_tau(ch);
    if (std::isnan(tau)) return std::numeric_limits<double>::quiet_NaN();
    total += static_cast<double>(ch.size()) / tau;
  }
  return total;
}

namespace {

Summary summarize_columns(const std::vector<const Array2*>& chains,
                          const std::vector<std::string>& names) {
  Summary summary;
  if (chains.empty() || chains[0]->rows() == 0) {
    throw std::invalid_argument("summarize: empty draws");
  }
  std::size_t n_chains = chains.size();
  std::size_t n_iter = chains[0]->rows();
  std::size_t n_params = chains[0]->cols();

  std::vector<double> pooled(n_chains * n_iter);
  std::vector<std::vector<double>> series(n_chains,
                                          std::vector<double>(n_iter));
  for (std::size_t j = 0; j < n_params; ++j) {
    for (std::size_t ch = 0; ch < n_chains; ++ch) {
      for (std::size_t i = 0; i < n_iter; ++i) {
        double v = (*chains[ch])(i, j);
        series[ch][i] = v;
        pooled[ch * n_iter + i] = v;
      }
    }
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    SummaryRow row;
    row.name = names[j];
    row.median = quantile_type7_sorted(sorted, 0.5);
    row.q2_5 = quantile_type7_sorted(sorted, 0.025);
    row.q97_5 = quantile_type7_sorted(sorted, 0.975);
    row.q5 = quantile_type7_sorted(sorted, 0.05);
    row.q95 = quantile_type7_sorted(sorted, 0.95);
    if (n_chains >= 2 && n_iter >= 4) {
      row.rhat = rhat(series);
      row.ess = ess(series);
    } else {
      row.rhat = std::numeric_limits<double>::quiet_NaN();
      row.ess = std::numeric_limits<double>::quiet_NaN();
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

}  // namespace

Summary summarize(const PosteriorDraws& draws) {
  std::vector<const Array2*> chains;
  for (const auto& ch : draws.chains) chains.push_back(&ch);
  return summarize_columns(chains, draws.param_names);
}

Summary summarize_transformed(const PosteriorDraws& draws,
                              const std::vector<std::string>& names,
                              const DrawTransform& transform) {
  if (draws.chains.empty()) {
    throw std::invalid_argument("summarize: empty draws");
  }
  std::size_t n_iter = draws.n_samples();
  std::size_t n_params = draws.n_params();
  std::size_t k = names.size();
  std::vector<Array2> transformed;
  std::vector<double> out_row(k);
  for (const auto& ch : draws.chains) {
    Array2 tf(n_iter, k);
    for (std::size_t i = 0; i < n_iter; ++i) {
      std::span<const double> row(ch.data().data() + i * n_params, n_params);
      transform(row, out_row);
      for (std::size_t j = 0; j < k; ++j) tf(i, j) = out_row[j];
    }
    transformed.push_back(std::move(tf));
  }
  std::vector<const Array2*> chains;
  for (const auto& ch : transformed) chains.push_back(&ch);
  return summarize_columns(chains, names);
}

}  // namespace ccpop
