#include "editeval/composite.hpp"

#include <cmath>
#include <string>

namespace editeval {
namespace {

struct Field {
  const char* name;
  double CompositeWeights::*member;
};

constexpr Field kFields[] = {
    {"w_f", &CompositeWeights::w_f},
    {"w_s", &CompositeWeights::w_s},
    {"v_sp", &CompositeWeights::v_sp},
    {"v_me", &CompositeWeights::v_me},
    {"u_sp", &CompositeWeights::u_sp},
    {"u_rl", &CompositeWeights::u_rl},
    {"z_sp", &CompositeWeights::z_sp},
    {"z_me", &CompositeWeights::z_me},
    {"epsilon", &CompositeWeights::epsilon},
    {"lambda_edit", &CompositeWeights::lambda_edit},
    {"lambda_faith", &CompositeWeights::lambda_faith},
};

void CheckPair(double a, double b, const char* name) {
  if (!(std::abs(a + b - 1.0) <= 1e-12)) {
    throw Error(ErrorCode::kInvalidWeights, std::string(name) + " weights must sum to 1");
  }
}

}  // namespace

void CompositeWeights::Validate() const {
  CheckPair(w_f, w_s, "w_f + w_s");
  CheckPair(v_sp, v_me, "v_sp + v_me");
  CheckPair(u_sp, u_rl, "u_sp + u_rl");
  CheckPair(z_sp, z_me, "z_sp + z_me");
  if (!(epsilon > 0)) throw Error(ErrorCode::kInvalidWeights, "epsilon must be > 0");
  if (!(lambda_edit > 0) || !(lambda_faith > 0)) {
    throw Error(ErrorCode::kInvalidWeights, "lambdas must be > 0");
  }
}

CompositeWeights CompositeWeights::FromJson(const nlohmann::ordered_json& j,
                                            const CompositeWeights& base) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidWeights, "weights must be a JSON object");
  CompositeWeights w = base;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& f : kFields) {
      if (key == f.name) {
        if (!value.is_number()) throw Error(ErrorCode::kInvalidWeights, key + " must be a number");
        w.*f.member = value.get<double>();
        known = true;
      }
    }
    if (!known) throw Error(ErrorCode::kInvalidWeights, "unknown weight '" + key + "'");
  }
  w.Validate();
  return w;
}

nlohmann::ordered_json CompositeWeights::ToJson() const {
  nlohmann::ordered_json j;
  for (const auto& f : kFields) j[f.name] = this->*f.member;
  return j;
}

CompositeScores ComputeComposite(const CaptionAccuracy& a, const CompositeWeights& w,
                                 bool flip_faith_sign) {
  CompositeScores out;
  const auto& d = a.difference;
  const auto& c = a.commonality;
  if (d.fense && d.spider && c.spice) {
    out.edit_score = EditScore<double>(*d.fense, *d.spider, *c.spice, c.meteor, w);
  }
  if (c.spice) {
    out.faith_score = FaithScore<double>(*c.spice, c.rouge_l, d.meteor, d.rouge_l, w, flip_faith_sign);
  }
  return out;
}

CompositeWeights CompositeWeights::FromJson(const nlohmann::ordered_json& j) {
  return FromJson(j, CompositeWeights{});
}

}  // namespace editeval
