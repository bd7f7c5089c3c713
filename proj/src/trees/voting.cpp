#include "sleid/trees/voting.hpp"

#include <cmath>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"

namespace sleid::trees {

namespace {

void write_member(ByteWriter& w, const TreeEnsembleModel& m) {
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u64(m.seed);
  w.u32(m.rf.n_estimators);
  w.u32(m.rf.max_depth);
  w.u32(m.rf.min_samples_split);
  w.f64(m.rf.class_weight);
  w.u32(m.rf.max_features);
  w.u32(m.gbdt.n_estimators);
  w.u32(m.gbdt.max_depth);
  w.f64(m.gbdt.learning_rate);
  w.f64(m.gbdt.l2);
  w.f64(m.gbdt.min_child_weight);
  w.f64(m.class_weights[0]);
  w.f64(m.class_weights[1]);
  w.u32(m.schema_version);
  w.u64(m.schema_digest);
  w.u32(m.n_features);
  w.f64(m.base_score);
  for (std::uint32_t j = 0; j < m.n_features; ++j) w.f64(j < m.importances.size() ? m.importances[j] : 0.0);
  w.u32(static_cast<std::uint32_t>(m.trees.size()));
  for (const auto& t : m.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.u32(n.left);
      w.u32(n.right);
      w.f64(n.value);
    }
  }
}

TreeEnsembleModel read_member(ByteReader& rd) {
  TreeEnsembleModel m;
  const auto kind = rd.u8();
  if (kind > 1) fail(ErrorCode::kFormatError, "unknown ensemble kind in SLENS");
  m.kind = static_cast<EnsembleKind>(kind);
  m.seed = rd.u64();
  m.rf.n_estimators = rd.u32();
  m.rf.max_depth = rd.u32();
  m.rf.min_samples_split = rd.u32();
  m.rf.class_weight = rd.f64();
  m.rf.max_features = rd.u32();
  m.gbdt.n_estimators = rd.u32();
  m.gbdt.max_depth = rd.u32();
  m.gbdt.learning_rate = rd.f64();
  m.gbdt.l2 = rd.f64();
  m.gbdt.min_child_weight = rd.f64();
  m.class_weights[0] = rd.f64();
  m.class_weights[1] = rd.f64();
  m.schema_version = rd.u32();
  m.schema_digest = rd.u64();
  m.n_features = rd.u32();
  m.base_score = rd.f64();
  if (static_cast<std::size_t>(m.n_features) * 8 > rd.remaining()) fail(ErrorCode::kFormatError, "SLENS container truncated");
  m.importances.resize(m.n_features);
  for (auto& v : m.importances) v = rd.f64();
  const std::uint32_t n_trees = rd.u32();
  if (n_trees > rd.remaining()) fail(ErrorCode::kFormatError, "SLENS container truncated");
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    const std::uint32_t count = rd.u32();
    if (count == 0 || static_cast<std::size_t>(count) * 28 > rd.remaining()) {
      fail(ErrorCode::kFormatError, "SLENS tree truncated");
    }
    t.nodes.resize(count);
    for (auto& n : t.nodes) {
      n.feature = rd.i32();
      n.threshold = rd.f64();
      n.left = rd.u32();
      n.right = rd.u32();
      n.value = rd.f64();
      if (n.feature >= 0 && (n.left >= count || n.right >= count ||
                             static_cast<std::uint32_t>(n.feature) >= m.n_features)) {
        fail(ErrorCode::kFormatError, "SLENS node references out of range");
      }
    }
  }
  return m;
}

}  // namespace

VotingModel make_voting(std::vector<TreeEnsembleModel> members) {
  if (members.empty()) fail(ErrorCode::kSchemaError, "a voting model needs members");
  for (const auto& m : members) {
    if (m.schema_digest != members[0].schema_digest || m.n_features != members[0].n_features) {
      fail(ErrorCode::kSchemaError, "voting members must share a schema");
    }
  }
  VotingModel v;
  v.weights.assign(members.size(), 1.0 / static_cast<double>(members.size()));
  v.members = std::move(members);
  return v;
}

std::array<double, 2> soft_vote(std::span<const std::array<double, 2>> member_probs,
                                std::span<const double> weights) {
  if (member_probs.empty()) fail(ErrorCode::kBadConfig, "soft vote needs at least one member");
  if (!weights.empty() && weights.size() != member_probs.size()) fail(ErrorCode::kBadConfig, "one weight per member");
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t i = 0; i < member_probs.size(); ++i) {
    const double w = weights.empty() ? 1.0 / static_cast<double>(member_probs.size()) : weights[i];
    out[0] += w * member_probs[i][0];
    out[1] += w * member_probs[i][1];
  }
  return out;
}

double VotingModel::predict_p1(std::span<const double> x) const {
  double p = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) p += weights[i] * members[i].predict_p1(x);
  return p;
}

std::array<double, 2> VotingModel::predict_proba(std::span<const double> x) const {
  const double p1 = predict_p1(x);
  return {1.0 - p1, p1};
}

std::vector<double> VotingModel::predict_p1(const features::FeatureMatrix& x, int workers) const {
  if (members.empty()) fail(ErrorCode::kSchemaError, "empty voting model");
  if (x.digest() != members[0].schema_digest) fail(ErrorCode::kSchemaError, "matrix schema differs from the model's");
  std::vector<double> out(x.n_rows());
  parallel_for(out.size(), workers, [&](std::size_t r) { out[r] = predict_p1(x.row(r)); });
  return out;
}

std::string serialize_voting(const VotingModel& model) {
  ByteWriter w;
  w.raw(kEnsembleMagic);
  w.u32(kEnsembleFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.members.size()));
  for (double v : model.weights) w.f64(v);
  for (const auto& m : model.members) write_member(w, m);
  return w.take();
}

VotingModel deserialize_voting(std::string_view bytes) {
  ByteReader rd(bytes);
  rd.expect_magic(kEnsembleMagic);
  if (rd.u32() != kEnsembleFormatVersion) fail(ErrorCode::kFormatError, "unsupported SLENS version");
  const std::uint32_t n = rd.u32();
  if (n == 0 || n > 64) fail(ErrorCode::kFormatError, "implausible SLENS member count");
  VotingModel v;
  v.weights.resize(n);
  for (auto& w : v.weights) w = rd.f64();
  for (std::uint32_t i = 0; i < n; ++i) v.members.push_back(read_member(rd));
  if (!rd.at_end()) fail(ErrorCode::kFormatError, "trailing bytes in SLENS container");
  return v;
}

}  // namespace sleid::trees
