#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/trees/model.hpp"

namespace sleid::trees {

struct VotingModel {
  std::vector<TreeEnsembleModel> members;
  std::vector<double> weights;  // sum to 1

  double predict_p1(std::span<const double> x) const;
  std::array<double, 2> predict_proba(std::span<const double> x) const;
  std::vector<double> predict_p1(const features::FeatureMatrix& x, int workers = 0) const;

  bool operator==(const VotingModel&) const = default;
};

// Equal weights. Errors: empty or members with differing schemas -> kSchemaError.
VotingModel make_voting(std::vector<TreeEnsembleModel> members);

// Weighted mean of member probability pairs (equal weights when empty).
std::array<double, 2> soft_vote(std::span<const std::array<double, 2>> member_probs,
                                std::span<const double> weights = {});

// Argmax with ties going to licit.
inline int vote_label(const std::array<double, 2>& p) { return p[1] > p[0] ? 1 : 0; }
inline int vote_label(double p1) { return vote_label(std::array<double, 2>{1.0 - p1, p1}); }

std::string serialize_voting(const VotingModel& model);
VotingModel deserialize_voting(std::string_view bytes);

inline constexpr std::string_view kEnsembleMagic{"SLENS\x01", 6};
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

}  // namespace sleid::trees
