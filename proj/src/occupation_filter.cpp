#include "isd/occupation_filter.hpp"

#include <cmath>
#include <ostream>

#include "isd/csv.hpp"
#include "isd/errors.hpp"

namespace isd {

Vec2 occupation_step(const Vec2& prev_joint, const Belief& prev_belief, double y,
                     const TransitionModel2& model, const ObservationModel& obs, State target,
                     std::size_t k) {
  const Matrix2 A = build_transition_matrix(model);
  const Vec2 x = prev_belief.pair();
  const LikelihoodDiag B = likelihood_diag(obs, y, k);
  const Vec2 pred = propagate(A, x);
  const double s = B.scaled[0] * pred[0] + B.scaled[1] * pred[1];
  if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateLikelihood(k);

  Vec2 carried = prev_joint;
  carried[slot(target)] += x[slot(target)];
  const Vec2 moved = propagate(A, carried);
  return {B.scaled[0] * moved[0] / s, B.scaled[1] * moved[1] / s};
}

OccupationFilter::OccupationFilter(const TransitionModel2& model, const ObservationModel& obs,
                                   const Belief& initial)
    : A_(build_transition_matrix(model)), obs_(&obs), belief_(initial.pair()) {}

void OccupationFilter::step(double y) {
  const std::size_t k = k_ + 1;
  const LikelihoodDiag B = likelihood_diag(*obs_, y, k);
  const Vec2 pred = propagate(A_, belief_);
  const Vec2 w{B.scaled[0] * pred[0], B.scaled[1] * pred[1]};
  const double s = w[0] + w[1];
  if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateLikelihood(k);

  for (std::size_t i = 0; i < 2; ++i) {
    Vec2 carried = joint_[i];
    carried[i] += belief_[i];
    const Vec2 moved = propagate(A_, carried);
    joint_[i] = {B.scaled[0] * moved[0] / s, B.scaled[1] * moved[1] / s};
  }
  belief_ = {w[0] / s, w[1] / s};
  log_normalizer_ = std::log(s) + B.log_offset;
  k_ = k;
}

void OccupationFilter::reset(const Belief& initial) {
  belief_ = initial.pair();
  joint_ = {};
  log_normalizer_ = 0.0;
  k_ = 0;
}

double OccupationFilter::occupation(State target) const noexcept {
  const Vec2& j = joint_[slot(target)];
  return j[0] + j[1];
}

OccupationEstimate OccupationFilter::estimate(State target) const {
  return {joint_[slot(target)], occupation(target), target, k_};
}

std::vector<OccupationEstimate> run_occupation(std::span<const double> observations,
                                               const TransitionModel2& model,
                                               const ObservationModel& obs, const Belief& initial,
                                               State target) {
  if (observations.empty()) throw InvalidArgument("run_occupation needs at least one observation");
  OccupationFilter filter(model, obs, initial);
  std::vector<OccupationEstimate> out;
  out.reserve(observations.size());
  for (double y : observations) {
    filter.step(y);
    out.push_back(filter.estimate(target));
  }
  return out;
}

OccupationOracle enumerate_occupation(std::span<const double> observations, const TransitionModel2& model,
                                      const ObservationModel& obs, const Belief& initial, State target,
                                      std::size_t cap) {
  const std::size_t n = observations.size();
  const std::uint64_t target_bit = slot(target);
  std::vector<double> lws;
  std::vector<std::uint64_t> masks;
  detail::for_each_path(observations, model, obs, initial, cap, [&](std::uint64_t mask, double lw) {
    lws.push_back(lw);
    masks.push_back(mask);
  });
  const double total = detail::log_sum_exp(lws);
  if (!std::isfinite(total)) throw DegenerateLikelihood(n);

  OccupationOracle out;
  for (std::size_t p = 0; p < lws.size(); ++p) {
    if (!std::isfinite(lws[p])) continue;
    const double w = std::exp(lws[p] - total);
    int count = 0;
    for (std::size_t l = 0; l < n; ++l) count += ((masks[p] >> l) & 1u) == target_bit;
    out.joint[(masks[p] >> n) & 1u] += w * count;
  }
  out.scalar = out.joint[0] + out.joint[1];
  return out;
}

std::vector<Vec2> enumerate_smoothed_marginals(std::span<const double> observations,
                                               const TransitionModel2& model, const ObservationModel& obs,
                                               const Belief& initial, std::size_t cap) {
  const std::size_t n = observations.size();
  std::vector<double> lws;
  std::vector<std::uint64_t> masks;
  detail::for_each_path(observations, model, obs, initial, cap, [&](std::uint64_t mask, double lw) {
    lws.push_back(lw);
    masks.push_back(mask);
  });
  const double total = detail::log_sum_exp(lws);
  if (!std::isfinite(total)) throw DegenerateLikelihood(n);

  std::vector<Vec2> marginals(n + 1, Vec2{});
  for (std::size_t p = 0; p < lws.size(); ++p) {
    if (!std::isfinite(lws[p])) continue;
    const double w = std::exp(lws[p] - total);
    for (std::size_t l = 0; l <= n; ++l) marginals[l][(masks[p] >> l) & 1u] += w;
  }
  return marginals;
}

std::vector<ErrorRateDiagnostic> stability_probe(std::span<const double> observations,
                                                 const TransitionModel2& model, const ObservationModel& obs,
                                                 const Belief& init_a, const Belief& init_b, State target,
                                                 ErrorNorm norm) {
  OccupationFilter fa(model, obs, init_a);
  OccupationFilter fb(model, obs, init_b);
  std::vector<ErrorRateDiagnostic> out;
  out.reserve(observations.size());
  for (double y : observations) {
    fa.step(y);
    fb.step(y);
    const Vec2& ja = fa.joint(target);
    const Vec2& jb = fb.joint(target);
    const double d0 = std::abs(ja[0] - jb[0]);
    const double d1 = std::abs(ja[1] - jb[1]);
    const double d = norm == ErrorNorm::max ? std::max(d0, d1) : d0 + d1;
    out.push_back({fa.k(), d / static_cast<double>(fa.k())});
  }
  return out;
}

void write_occupation_csv(std::ostream& out, std::span<const OccupationEstimate> target1,
                          std::span<const OccupationEstimate> target2) {
  if (target1.size() != target2.size()) throw InvalidArgument("occupation traces differ in length");
  csv::header(out, {"k", "occ_e1", "occ_e2", "joint1_e1", "joint1_e2", "joint2_e1", "joint2_e2"});
  for (std::size_t i = 0; i < target1.size(); ++i) {
    const auto& o1 = target1[i];
    const auto& o2 = target2[i];
    out << o1.k << ',' << csv::number(o1.scalar) << ',' << csv::number(o2.scalar) << ','
        << csv::number(o1.joint[0]) << ',' << csv::number(o1.joint[1]) << ',' << csv::number(o2.joint[0])
        << ',' << csv::number(o2.joint[1]) << '\n';
  }
}

void write_stability_csv(std::ostream& out, std::span<const ErrorRateDiagnostic> trace) {
  csv::header(out, {"k", "rate"});
  for (const auto& d : trace) out << d.k << ',' << csv::number(d.rate) << '\n';
}

}  // namespace isd
