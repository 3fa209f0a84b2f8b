#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ccpop/grid.hpp"
#include "ccpop/posterior.hpp"
#include "ccpop/sampler.hpp"

namespace ccpop::cli {

/// One family of derived posterior quantities (eta cells, gamma cells, ...):
/// display names, index keys for table writers, and the per-draw evaluator.
/// Families are summarized one at a time to bound memory.
struct DerivedFamily {
  struct Key {
    int age = -1;       // grid age index, -1 when not applicable
    int time = -1;
    int county = -1;
    int district = -1;
    int direction = -1;  // 0 = in, 1 = out
  };
  std::vector<std::string> names;
  std::vector<Key> keys;
  DrawTransform eval;
};

using ModelPtr = std::shared_ptr<const PosteriorModel>;

DerivedFamily eta_family(const ModelPtr& model, const ModelGrid& grid);
DerivedFamily eta_district_family(const ModelPtr& model, const ModelGrid& grid);
DerivedFamily gamma_family(const ModelPtr& model, const ModelGrid& grid);
DerivedFamily psi_family(const ModelPtr& model, const ModelGrid& grid);
DerivedFamily pi_family(const ModelPtr& model, const ModelGrid& grid);
DerivedFamily epsilon_family(const ModelPtr& model, const ModelGrid& grid);

Summary summarize_family(const PosteriorDraws& draws,
                         const DerivedFamily& family);

}  // namespace ccpop::cli
