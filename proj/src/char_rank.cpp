#include "mgof/char_rank.hpp"

#include <algorithm>

#include "mgof/lowrank.hpp"

namespace mgof {

RankEstimate estimate_char_rank(const ManifoldModel& model, int num_samples, RngSeed seed,
                                const RankPolicy& policy) {
  if (num_samples < 1) {
    throw Error(ErrorKind::kInvalidParameter, "estimate_char_rank: num_samples must be >= 1");
  }
  RankEstimate est;
  est.num_samples = num_samples;
  std::vector<Vector> spectra;
  spectra.reserve(static_cast<std::size_t>(num_samples));
  for (int s = 0; s < num_samples; ++s) {
    Vector sv;
    RealMatrix jac;
    try {
      Vector theta = model.sample_param(seed.split(static_cast<std::uint64_t>(s)));
      jac = model.jacobian(theta);
      sv = singular_values(jac);
    } catch (const Error& e) {
      throw Error(e.kind(), "sample " + std::to_string(s) + ": " + e.what());
    }
    est.per_sample_ranks.push_back(rank_from_singular_values(sv, jac.rows(), jac.cols(), policy));
    spectra.push_back(std::move(sv));
  }
  est.estimate = *std::max_element(est.per_sample_ranks.begin(), est.per_sample_ranks.end());
  const auto hits = std::count(est.per_sample_ranks.begin(), est.per_sample_ranks.end(), est.estimate);
  est.agreement_fraction = static_cast<double>(hits) / num_samples;

  auto first = std::find(est.per_sample_ranks.begin(), est.per_sample_ranks.end(), est.estimate);
  const Vector& sv = spectra[static_cast<std::size_t>(first - est.per_sample_ranks.begin())];
  est.smallest_retained_sv = est.estimate > 0 ? sv(est.estimate - 1) : 0.0;
  est.largest_discarded_sv = est.estimate < sv.size() ? sv(est.estimate) : 0.0;

  if (est.agreement_fraction < 1.0) {
    if (model.is_analytic()) {
      est.warning = true;
      est.note = "per-sample ranks disagree; for an analytic map this points at the rank tolerance";
    } else {
      est.note = "per-sample ranks disagree; map is not analytic, so rank genericity is not guaranteed";
    }
  }
  return est;
}

TensorIdentifiability tensor_local_identifiability(Index n1, Index n2, Index n3, Index r,
                                                   int num_samples, RngSeed seed) {
  if (r < 1) throw Error(ErrorKind::kInvalidParameter, "tensor rank must be >= 1");
  TensorCPModel model(n1, n2, n3, r);
  TensorIdentifiability out;
  out.evidence = estimate_char_rank(model, num_samples, seed);
  out.r_hat = out.evidence.estimate;
  out.formula_value = r * (n1 + n2 + n3 - 2);
  out.identifiable = out.r_hat == out.formula_value;
  return out;
}

}  // namespace mgof
