// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp::psmiles {

MaskedSequence apply_masking(std::span<const int> ids, const Vocabulary &vocab,
                             const MaskingPolicy &policy, Rng &rng) {
  if (!(policy.rate >= 0.0 && policy.rate <= 1.0))
    throw Error(Errc::kConfigError, "mask rate must lie in [0, 1]");
  if (policy.mask_fraction < 0.0 || policy.random_fraction < 0.0 ||
      policy.mask_fraction + policy.random_fraction > 1.0)
    throw Error(Errc::kConfigError, "mask branch fractions must be a sub-distribution");

  MaskedSequence out;
  out.input_ids.assign(ids.begin(), ids.end());
  const std::size_t n_regular = vocab.size() - Vocabulary::kReservedCount;

  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    const int id = ids[pos];
    if (id == Vocabulary::kPadId || id == Vocabulary::kClsId || id == Vocabulary::kSepId)
      continue;
    if (rng.uniform() >= policy.rate) continue;
    out.positions.push_back(pos);
    out.labels.push_back(id);
    const double u = rng.uniform();
    if (u < policy.mask_fraction) {
      out.input_ids[pos] = Vocabulary::kMaskId;
      out.branches.push_back(MaskBranch::kMask);
    } else if (u < policy.mask_fraction + policy.random_fraction) {
      out.input_ids[pos] =
          n_regular == 0 ? Vocabulary::kMaskId
                         : Vocabulary::kReservedCount + static_cast<int>(rng.index(n_regular));
      out.branches.push_back(MaskBranch::kRandom);
    } else {
      out.branches.push_back(MaskBranch::kKeep);
    }
  }
  return out;
}

MaskedSequence apply_masking(const TokenSequence &sequence, const Vocabulary &vocab,
                             const MaskingPolicy &policy, Rng &rng) {
  const auto ids = encode_ids(sequence, vocab);
  return apply_masking(ids, vocab, policy, rng);
}

}  // namespace mmp::psmiles
