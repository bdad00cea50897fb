#pragma once

#include <vector>

#include "mgof/model.hpp"

namespace mgof {

/// Evidence behind a characteristic-rank estimate. The estimate is the
/// maximum Jacobian rank over the sampled points; disagreement between
/// samples is reported, not treated as an error.
struct RankEstimate {
  Index estimate = 0;
  std::vector<Index> per_sample_ranks;
  int num_samples = 0;
  double agreement_fraction = 0.0;  // share of samples at the estimate
  // Singular-value gap at the first sample attaining the estimate.
  double smallest_retained_sv = 0.0;
  double largest_discarded_sv = 0.0;
  bool warning = false;  // agreement_fraction < 1 for an analytic map
  std::string note;
};

inline constexpr int kDefaultRankSamples = 20;

RankEstimate estimate_char_rank(const ManifoldModel& model, int num_samples, RngSeed seed,
                                const RankPolicy& policy = {});

struct TensorIdentifiability {
  bool identifiable = false;
  Index r_hat = 0;
  Index formula_value = 0;  // r (n1 + n2 + n3 - 2)
  RankEstimate evidence;
};

/// Generic local identifiability of rank-r CP decompositions of
/// n1 x n2 x n3 tensors: identifiable iff the measured characteristic rank
/// attains r (n1 + n2 + n3 - 2).
TensorIdentifiability tensor_local_identifiability(Index n1, Index n2, Index n3, Index r,
                                                   int num_samples, RngSeed seed);

}  // namespace mgof
