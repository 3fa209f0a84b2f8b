#include "derived.hpp"

#include <algorithm>
#include <cmath>

#include "ccpop/errors.hpp"
#include "ccpop/process.hpp"

namespace ccpop::cli {

namespace {

std::string cell_name(const char* what, const ModelGrid& grid, std::size_t a,
                      std::size_t t, std::size_t c) {
  return std::string(what) + "[" + std::to_string(grid.age_groups[a]) + "," +
         std::to_string(grid.time_points[t]) + "," + grid.counties[c] + "]";
}

/// Shared workspace plus a guaranteed-valid eta recompute.
struct EtaEval {
  ModelPtr model;
  std::shared_ptr<Workspace> ws;

  explicit EtaEval(const ModelPtr& m)
      : model(m), ws(std::make_shared<Workspace>(m->make_workspace())) {}

  void operator()(std::span<const double> x) const {
    if (!model->compute_eta(x, *ws)) {
      throw Error("stored draw implies an invalid population state");
    }
  }
};

}  // namespace

DerivedFamily eta_family(const ModelPtr& model, const ModelGrid& grid) {
  DerivedFamily fam;
  const std::size_t A = grid.n_age(), T = grid.n_time(), C = grid.n_county();
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        fam.names.push_back(cell_name("eta", grid, a, t, c));
        fam.keys.push_back({static_cast<int>(a), static_cast<int>(t),
                            static_cast<int>(c), -1, -1});
      }
    }
  }
  EtaEval ev(model);
  fam.eval = [ev, A, T, C](std::span<const double> x, std::span<double> out) {
    ev(x);
    std::size_t j = 0;
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) out[j++] = ev.ws->eta(a, t, c);
      }
    }
  };
  return fam;
}

DerivedFamily eta_district_family(const ModelPtr& model,
                                  const ModelGrid& grid) {
  DerivedFamily fam;
  const std::size_t A = grid.n_age(), T = grid.n_time(), C = grid.n_county();
  const std::size_t D = grid.n_district();
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t d = 0; d < D; ++d) {
        fam.names.push_back("eta[" + std::to_string(grid.age_groups[a]) + "," +
                            std::to_string(grid.time_points[t]) + "," +
                            grid.districts[d] + "]");
        fam.keys.push_back({static_cast<int>(a), static_cast<int>(t), -1,
                            static_cast<int>(d), -1});
      }
    }
  }
  EtaEval ev(model);
  std::vector<std::size_t> cd = grid.county_district;
  fam.eval = [ev, A, T, C, D, cd](std::span<const double> x,
                                  std::span<double> out) {
    ev(x);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) {
          out[(a * T + t) * D + cd[c]] += ev.ws->eta(a, t, c);
        }
      }
    }
  };
  return fam;
}

DerivedFamily gamma_family(const ModelPtr& model, const ModelGrid& grid) {
  DerivedFamily fam;
  const std::size_t A = grid.n_age(), T = grid.n_time(), C = grid.n_county();
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        fam.names.push_back(cell_name("gamma", grid, a, t, c));
        fam.keys.push_back({static_cast<int>(a), static_cast<int>(t),
                            static_cast<int>(c), -1, -1});
      }
    }
  }
  auto ws = std::make_shared<Workspace>(model->make_workspace());
  fam.eval = [model, ws, A, T, C](std::span<const double> x,
                                  std::span<double> out) {
    model->unpack_into(x, ws->state);
    std::size_t j = 0;
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) {
          out[j++] = mortality_gamma(model->basis(), ws->state.mort, a, t, c);
        }
      }
    }
  };
  return fam;
}

DerivedFamily psi_family(const ModelPtr& model, const ModelGrid& grid) {
  DerivedFamily fam;
  const std::size_t T = grid.n_time(), C = grid.n_county();
  for (int dir = 0; dir < 2; ++dir) {
    const char* base = dir == 0 ? "psi_in[" : "psi_out[";
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        fam.names.push_back(base + std::to_string(grid.time_points[t]) + "," +
                            grid.counties[c] + "]");
        fam.keys.push_back({-1, static_cast<int>(t), static_cast<int>(c), -1,
                            dir});
      }
    }
  }
  auto ws = std::make_shared<Workspace>(model->make_workspace());
  fam.eval = [model, ws, T, C](std::span<const double> x,
                               std::span<double> out) {
    model->unpack_into(x, ws->state);
    std::size_t j = 0;
    for (int dir = 0; dir < 2; ++dir) {
      const Array2& total =
          dir == 0 ? ws->state.mig.total_in : ws->state.mig.total_out;
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) out[j++] = total(t, c);
      }
    }
  };
  return fam;
}

DerivedFamily pi_family(const ModelPtr& model, const ModelGrid& grid) {
  DerivedFamily fam;
  const std::size_t A = grid.n_age(), C = grid.n_county();
  for (int dir = 0; dir < 2; ++dir) {
    const char* base = dir == 0 ? "pi_in[" : "pi_out[";
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t c = 0; c < C; ++c) {
        fam.names.push_back(base + std::to_string(grid.age_groups[a]) + "," +
                            grid.counties[c] + "]");
        fam.keys.push_back({static_cast<int>(a), -1, static_cast<int>(c), -1,
                            dir});
      }
    }
  }
  auto ws = std::make_shared<Workspace>(model->make_workspace());
  fam.eval = [model, ws, A, C](std::span<const double> x,
                               std::span<double> out) {
    model->unpack_into(x, ws->state);
    ws->share_in = normalized_shares(ws->state.mig.share_in_raw);
    ws->share_out = normalized_shares(ws->state.mig.share_out_raw);
    std::size_t j = 0;
    for (int dir = 0; dir < 2; ++dir) {
      const Array2& share = dir == 0 ? ws->share_in : ws->share_out;
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t c = 0; c < C; ++c) out[j++] = share(a, c);
      }
    }
  };
  return fam;
}

DerivedFamily epsilon_family(const ModelPtr& model, const ModelGrid& grid) {
  DerivedFamily fam;
  const std::size_t A = grid.n_age(), T = grid.n_time(), C = grid.n_county();
  // eps slices feed transitions out of t, so only t < T-1 ever applies
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t + 1 < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        fam.names.push_back(cell_name("epsilon", grid, a, t, c));
        fam.keys.push_back({static_cast<int>(a), static_cast<int>(t),
                            static_cast<int>(c), -1, -1});
      }
    }
  }
  auto ws = std::make_shared<Workspace>(model->make_workspace());
  fam.eval = [model, ws, A, T, C](std::span<const double> x,
                                  std::span<double> out) {
    model->unpack_into(x, ws->state);
    std::vector<double> zeta(A - 1), log_eps(A);
    for (std::size_t t = 0; t + 1 < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t a = 0; a + 1 < A; ++a) {
          zeta[a] = ws->state.mult.zeta(a, t, c);
        }
        ws->transform.apply(zeta, log_eps);
        for (std::size_t a = 0; a < A; ++a) {
          out[(a * (T - 1) + t) * C + c] = std::exp(log_eps[a]);
        }
      }
    }
  };
  return fam;
}

Summary summarize_family(const PosteriorDraws& draws,
                         const DerivedFamily& family) {
  return summarize_transformed(draws, family.names, family.eval);
}

}  // namespace ccpop::cli
