#pragma once

#include <vector>

#include "tierfed/synth_data.hpp"

namespace tierfed {

enum class PopulationType { mixture, gaussian };

// A run trains on exactly one population family: mixture-classification
// (the partitioned two-or-more-distribution setup) or two-tier Gaussian
// mean estimation.
struct PopulationConfig {
  PopulationType type = PopulationType::mixture;
  MixtureSpec mixture;
  GaussianPopulationSpec gaussian;

  int num_clients() const {
    return type == PopulationType::mixture
               ? mixture.num_clients
               : gaussian.tier1_clients + gaussian.tier2_clients;
  }
  int num_distributions() const {
    return type == PopulationType::mixture ? mixture.num_distributions : 2;
  }
  std::vector<ClientDataset> generate() const {
    return type == PopulationType::mixture ? generate_mixture_population(mixture)
                                           : generate_gaussian_population(gaussian);
  }
  void validate() const {
    if (type == PopulationType::mixture)
      mixture.validate();
    else
      gaussian.validate();
  }
};

}  // namespace tierfed
