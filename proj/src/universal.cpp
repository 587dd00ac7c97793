#include "validus/universal.hpp"

namespace validus {

LambdaUndefined::LambdaUndefined(ClassificationReport r)
    : std::runtime_error("lambda undefined: " +
                         (r.notes.empty() ? to_string(r.verdict) : r.notes)),
      report(std::move(r)) {}

std::shared_ptr<const LambdaTable> universal_lambda(const ValidityProperty& val,
                                                    const SystemParams& sys,
                                                    const ValueSpace& space,
                                                    uint64_t budget) {
  if (!sys.supermajority()) throw LambdaUndefined(classify(val, sys, space, budget));
  auto res = compute_lambda(val, sys, space, budget);
  if (!res.table) throw LambdaUndefined(classify(val, sys, space, budget));
  return std::make_shared<const LambdaTable>(std::move(*res.table));
}

UniversalAuto::UniversalAuto(Value proposal, VectorBackend backend,
                             std::shared_ptr<const LambdaTable> lambda)
    : proposal_(proposal), core_(make_vector_core(backend)), lambda_(std::move(lambda)) {
  if (!lambda_) throw std::invalid_argument("universal automaton needs a lambda table");
}

void UniversalAuto::on_start(Context& ctx) { core_->start(ctx, proposal_); }

void UniversalAuto::on_message(Context& ctx, const Envelope& env) {
  auto vec = core_->on_message(ctx, env);
  if (!vec || decided_) return;
  decided_ = true;
  for (const auto& pp : *vec) ctx.probe("uvec", pp.process, pp.value);
  InputConfiguration c{*vec};
  ctx.decide({Decision::single, lambda_->lookup(c), {}});
}

void UniversalAuto::on_timer(Context& ctx, int64_t tag) { core_->on_timer(ctx, tag); }

}  // namespace validus
