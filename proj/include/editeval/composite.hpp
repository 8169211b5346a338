#pragma once

#include <array>
#include <cmath>
#include <optional>

#include <json.hpp>

#include "editeval/error.hpp"
#include "editeval/textmetrics.hpp"

namespace editeval {

// Mixing weights for the Edit/Faith composites. Each pair is proportional to
// the constituent metrics' correlation with the target rating and sums to 1.
struct CompositeWeights {
  double w_f = 0.48;   // difference FENSE
  double w_s = 0.52;   // difference SPIDEr
  double v_sp = 0.46;  // commonality SPICE (edit penalty term)
  double v_me = 0.54;  // commonality METEOR (edit penalty term)
  double u_sp = 0.48;  // commonality SPICE
  double u_rl = 0.52;  // commonality ROUGE-L
  double z_sp = 0.53;  // difference METEOR (faith penalty term)
  double z_me = 0.47;  // difference ROUGE-L (faith penalty term)
  double epsilon = 1e-6;
  double lambda_edit = 0.5;
  double lambda_faith = 0.5;

  // Throws Error(kInvalidWeights) when a pair does not sum to 1 within 1e-12
  // or epsilon/lambdas are not positive.
  void Validate() const;

  // Overrides any subset of the fields by name, then validates.
  static CompositeWeights FromJson(const nlohmann::ordered_json& j, const CompositeWeights& base);
  static CompositeWeights FromJson(const nlohmann::ordered_json& j);
  nlohmann::ordered_json ToJson() const;

  friend bool operator==(const CompositeWeights&, const CompositeWeights&) = default;
};

namespace detail {

template <typename Scalar>
void RequireFiniteNonNegative(std::initializer_list<Scalar> values) {
  for (Scalar v : values) {
    if (!std::isfinite(static_cast<double>(v)) || v < Scalar(0)) {
      throw Error(ErrorCode::kNonFiniteInput, "composite inputs must be finite and >= 0");
    }
  }
}

template <typename Scalar>
Scalar Sigmoid(Scalar t) {
  return Scalar(1) / (Scalar(1) + std::exp(-t));
}

template <typename Scalar>
Scalar EditArgument(Scalar d_fense, Scalar d_spider, Scalar c_spice, Scalar c_meteor,
                    const CompositeWeights& w) {
  Scalar penalty = Scalar(w.v_sp) * c_spice + Scalar(w.v_me) * c_meteor;
  return Scalar(w.w_f) * d_fense + Scalar(w.w_s) * d_spider +
         Scalar(w.epsilon) * std::exp(-Scalar(w.lambda_edit) * penalty);
}

template <typename Scalar>
Scalar FaithArgument(Scalar c_spice, Scalar c_rouge_l, Scalar d_meteor, Scalar d_rouge_l,
                     const CompositeWeights& w) {
  Scalar penalty = Scalar(w.z_sp) * d_meteor + Scalar(w.z_me) * d_rouge_l;
  return Scalar(w.u_sp) * c_spice + Scalar(w.u_rl) * c_rouge_l +
         Scalar(w.epsilon) * std::exp(-Scalar(w.lambda_faith) * penalty);
}

}  // namespace detail

// sigmoid(ln(w_f*D_fense + w_s*D_spider + eps*exp(-lambda*(v_sp*C_spice + v_me*C_meteor)))).
// Range (0, 1).
template <typename Scalar>
Scalar EditScore(Scalar d_fense, Scalar d_spider, Scalar c_spice, Scalar c_meteor,
                 const CompositeWeights& w = {}) {
  detail::RequireFiniteNonNegative<Scalar>({d_fense, d_spider, c_spice, c_meteor});
  return detail::Sigmoid(std::log(detail::EditArgument(d_fense, d_spider, c_spice, c_meteor, w)));
}

// -sigmoid(ln(u_sp*C_spice + u_rl*C_rougeL + eps*exp(-lambda*(z_sp*D_meteor + z_me*D_rougeL)))).
// Range (-1, 0); flip_sign returns the magnitude instead.
template <typename Scalar>
Scalar FaithScore(Scalar c_spice, Scalar c_rouge_l, Scalar d_meteor, Scalar d_rouge_l,
                  const CompositeWeights& w = {}, bool flip_sign = false) {
  detail::RequireFiniteNonNegative<Scalar>({c_spice, c_rouge_l, d_meteor, d_rouge_l});
  Scalar s = detail::Sigmoid(
      std::log(detail::FaithArgument(c_spice, c_rouge_l, d_meteor, d_rouge_l, w)));
  return flip_sign ? s : -s;
}

// Partial derivatives of EditScore in argument order. Uses
// d/dx sigmoid(ln x) = 1 / (1 + x)^2.
template <typename Scalar>
std::array<Scalar, 4> EditScoreGradient(Scalar d_fense, Scalar d_spider, Scalar c_spice,
                                        Scalar c_meteor, const CompositeWeights& w = {}) {
  detail::RequireFiniteNonNegative<Scalar>({d_fense, d_spider, c_spice, c_meteor});
  Scalar x = detail::EditArgument(d_fense, d_spider, c_spice, c_meteor, w);
  Scalar outer = Scalar(1) / ((Scalar(1) + x) * (Scalar(1) + x));
  Scalar tail = Scalar(w.epsilon) *
                std::exp(-Scalar(w.lambda_edit) * (Scalar(w.v_sp) * c_spice + Scalar(w.v_me) * c_meteor));
  return {outer * Scalar(w.w_f), outer * Scalar(w.w_s),
          -outer * tail * Scalar(w.lambda_edit) * Scalar(w.v_sp),
          -outer * tail * Scalar(w.lambda_edit) * Scalar(w.v_me)};
}

// Partial derivatives of FaithScore (unflipped) in argument order.
template <typename Scalar>
std::array<Scalar, 4> FaithScoreGradient(Scalar c_spice, Scalar c_rouge_l, Scalar d_meteor,
                                         Scalar d_rouge_l, const CompositeWeights& w = {}) {
  detail::RequireFiniteNonNegative<Scalar>({c_spice, c_rouge_l, d_meteor, d_rouge_l});
  Scalar x = detail::FaithArgument(c_spice, c_rouge_l, d_meteor, d_rouge_l, w);
  Scalar outer = -Scalar(1) / ((Scalar(1) + x) * (Scalar(1) + x));
  Scalar tail = Scalar(w.epsilon) *
                std::exp(-Scalar(w.lambda_faith) * (Scalar(w.z_sp) * d_meteor + Scalar(w.z_me) * d_rouge_l));
  return {outer * Scalar(w.u_sp), outer * Scalar(w.u_rl),
          -outer * tail * Scalar(w.lambda_faith) * Scalar(w.z_sp),
          -outer * tail * Scalar(w.lambda_faith) * Scalar(w.z_me)};
}

struct CaptionAccuracy {
  MetricVector difference;
  MetricVector commonality;
};

// Either score is absent when one of its inputs is (typically SPICE or FENSE
// from an unavailable external scorer). Absent values are never zero-filled.
struct CompositeScores {
  std::optional<double> edit_score;
  std::optional<double> faith_score;
};

CompositeScores ComputeComposite(const CaptionAccuracy& accuracy, const CompositeWeights& w = {},
                                 bool flip_faith_sign = false);

}  // namespace editeval
