#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ccpop/data.hpp"
#include "ccpop/grid.hpp"
#include "ccpop/mortality_basis.hpp"
#include "ccpop/process.hpp"

namespace ccpop {

/// Standard deviations with half-normal N+(0,1) priors.
struct VarianceParams {
  double sigma_alpha = 1.0;
  double sigma_delta = 1.0;
  double sigma_in = 1.0;
  double sigma_out = 1.0;
  double sigma_zeta = 1.0;
};

/// Latent log-scale bounds of the national constraint band, per (age, time).
struct ConstraintBounds {
  Array2 lambda;  // A x T
  Array2 omega;   // A x T
};

/// Every latent quantity of the model, in natural parameterization.
struct ParameterState {
  MortalityParams mort;
  MigrationParams mig;
  MultiplierParams mult;
  BoundaryPopulations boundary;
  VarianceParams variances;
  ConstraintBounds bounds;
};

/// Offsets into the packed parameter vector. Positive quantities are packed
/// as logs and raw shares as logits, so the packed space is unconstrained
/// except for uniform supports and bound truncations.
struct PackedLayout {
  std::size_t A = 0, T = 0, C = 0;
  std::size_t alpha = 0;     // C
  std::size_t delta = 0;     // T*C*2, index (t*C + c)*2 + k
  std::size_t lpsi_in = 0;   // T*C, log Psi^in
  std::size_t lpsi_out = 0;  // T*C
  std::size_t lpi_in = 0;    // A*C, logit Pi^in*
  std::size_t lpi_out = 0;   // A*C
  std::size_t zeta = 0;      // (A-1)*T*C, index (a*T + t)*C + c
  std::size_t leta_bnd = 0;  // C*(T + A - 1): per county, the a=0 row over
                             // all t then the t=0 column over a >= 1
  std::size_t lsigma = 0;    // 5: alpha, delta, in, out, zeta
  std::size_t lambda = 0;    // A*T, index a*T + t
  std::size_t omega = 0;     // A*T
  std::size_t total = 0;

  std::size_t alpha_at(std::size_t c) const { return alpha + c; }
  std::size_t delta_at(std::size_t t, std::size_t c, std::size_t k) const {
    return delta + (t * C + c) * 2 + k;
  }
  std::size_t lpsi_at(bool in, std::size_t t, std::size_t c) const {
    return (in ? lpsi_in : lpsi_out) + t * C + c;
  }
  std::size_t lpi_at(bool in, std::size_t a, std::size_t c) const {
    return (in ? lpi_in : lpi_out) + a * C + c;
  }
  std::size_t zeta_at(std::size_t a, std::size_t t, std::size_t c) const {
    return zeta + (a * T + t) * C + c;
  }
  /// Boundary slot for the a=0 row (slot t) or the t=0 column (slot T+a-1).
  std::size_t bnd_age0_at(std::size_t t, std::size_t c) const {
    return leta_bnd + c * (T + A - 1) + t;
  }
  std::size_t bnd_time0_at(std::size_t a, std::size_t c) const {
    return leta_bnd + c * (T + A - 1) + T + (a - 1);
  }
  std::size_t lambda_at(std::size_t a, std::size_t t) const {
    return lambda + a * T + t;
  }
  std::size_t omega_at(std::size_t a, std::size_t t) const {
    return omega + a * T + t;
  }
};

struct PosteriorOptions {
  bool soft_constraints = false;
  double soft_scale = 1e-3;          // logistic penalty scale, log units
  double boundary_prior_sd = 0.01;   // sd of log eta at boundary cells
  double bound_prior_sd = 0.1;       // sd of Lambda/Omega priors
  double band_lower = 0.9;           // Lambda prior mean = log(0.9 WPP)
  double band_upper = 1.1;           // Omega prior mean = log(1.1 WPP)
  double migration_balance = 0.1;    // |sum psi_in - sum psi_out| bound
};

/// Reusable per-thread buffers for packed-vector evaluation.
struct Workspace {
  ParameterState state;
  Array3 eta;             // A x T x C
  Array2 share_in;        // normalized Pi^in
  Array2 share_out;
  EpsilonTransform transform{2};
};

/// Metropolis block: a named set of packed-vector coordinates proposed
/// jointly with one adapted scale.
struct Block {
  std::string name;
  std::vector<std::size_t> indices;
  double init_scale = 0.1;
  double target_accept = 0.23;
};

/// Exact conditional update (Gibbs) applied between Metropolis sweeps; may
/// mutate any coordinates. The sampler re-evaluates the density afterwards.
using GibbsHook = std::function<void(std::span<double>, std::mt19937_64&)>;

struct BlockPlan {
  std::vector<Block> blocks;
  std::vector<GibbsHook> hooks;
};

/// The full Bayesian model: priors, both data models, and the national and
/// migration-balance constraints, evaluated over the packed vector.
/// Immutable after construction; packed-vector methods take a caller-owned
/// Workspace so distinct threads can evaluate concurrently.
class PosteriorModel {
 public:
  PosteriorModel(const ModelGrid& grid, ObservationSet obs,
                 NationalInputs national, MortalityBasis basis,
                 BoundaryProportions boundary_props,
                 std::vector<double> psi_upper, PosteriorOptions opt = {});

  const PackedLayout& layout() const { return layout_; }
  std::size_t n_params() const { return layout_.total; }
  std::vector<std::string> param_names() const;
  const PosteriorOptions& options() const { return opt_; }
  const MortalityBasis& basis() const { return basis_; }
  const std::vector<double>& psi_upper() const { return psi_upper_; }

  Workspace make_workspace() const;

  void pack(const ParameterState& state, std::span<double> x) const;
  void unpack_into(std::span<const double> x, ParameterState& state) const;
  ParameterState unpack(std::span<const double> x) const;

  /// Log densities of the packed vector (transform Jacobians included, so
  /// these are the sampler's target). -inf encodes out-of-support states.
  double log_prior(std::span<const double> x) const;
  double log_likelihood(std::span<const double> x, Workspace& ws) const;
  double constraint_log_density(std::span<const double> x,
                                Workspace& ws) const;
  double log_posterior(std::span<const double> x, Workspace& ws) const;

  /// State-based overloads (pack + evaluate), for tests and tools.
  double log_prior(const ParameterState& state) const;
  double log_likelihood(const ParameterState& state) const;
  double constraint_log_density(const ParameterState& state) const;
  double log_posterior(const ParameterState& state) const;

  /// eta implied by x, written into ws.eta; false if the state is invalid.
  bool compute_eta(std::span<const double> x, Workspace& ws) const;

  /// Metropolis blocks per the sampling plan; in hard-constraint mode the
  /// bound coordinates are instead updated by an exact-conditional hook.
  BlockPlan default_block_plan() const;

  /// A jittered central starting point guaranteed inside the support
  /// (bounds are placed around the implied national sums).
  std::vector<double> initial_point(std::mt19937_64& rng) const;

 private:
  struct PopObsPre {
    std::size_t age, time;
    bool county_level;
    std::size_t region;  // county or district index
    double log_count, var;
  };
  struct MigObsPre {
    std::size_t age, time;
    bool county_level;
    std::size_t region;
    bool in;
    double log_count, var;
  };

  double prior_impl(std::span<const double> x) const;
  double likelihood_impl(const ParameterState& state, const Array3& eta,
                         const Array2& share_in, const Array2& share_out) const;
  double constraint_impl(const ParameterState& state, const Array3& eta,
                         const Array2& share_in, const Array2& share_out) const;
  void bounds_gibbs(std::span<double> x, Workspace& ws,
                    std::mt19937_64& rng) const;
  struct PathMoveState {
    Array2 log_scale;  // one Robbins-Monro scale per (path, move shape)
    Array2 count;
  };
  void path_moves(std::span<double> x, Workspace& ws, PathMoveState& st,
                  std::mt19937_64& rng) const;

  PackedLayout layout_;
  PosteriorOptions opt_;
  std::size_t n_district_ = 0;
  std::vector<std::size_t> county_district_;
  std::vector<PopObsPre> pop_obs_;
  std::vector<MigObsPre> mig_obs_;
  NationalInputs national_;
  MortalityBasis basis_;
  std::vector<double> psi_upper_;      // y_c
  std::vector<double> log_psi_upper_;
  Array2 log_wpp_;                     // A x T
  Array2 lambda_mu_, omega_mu_;        // A x T prior means
  double lambda_lognorm_ = 0.0;        // log of the truncation constants
  double omega_lognorm_ = 0.0;
  Array2 bnd_mean_age0_;               // T x C prior means of log eta
  Array2 bnd_mean_time0_;              // A x C
  std::vector<int> ages_;              // grid labels, for naming
  std::vector<int> years_;
  std::vector<std::string> counties_;
};

}  // namespace ccpop
