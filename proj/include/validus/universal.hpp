#pragma once

// Consensus for any non-trivial solvable validity property: run vector
// consensus over the proposals, then decide lambda(vector), where lambda maps
// every size-(n-t) configuration to a value admissible in every similar
// configuration. Vector Validity makes the decided vector similar to the real
// input configuration, so the decided value is admissible there too.
//
// The lambda table is computed once per scenario and shared by all processes;
// construction refuses properties whose lambda does not exist (or systems
// with n <= 3t) before any run starts. Proposals must come from the
// property's input space: the table has no rows for foreign values.

#include "validus/validity.hpp"
#include "validus/vector_consensus.hpp"

namespace validus {

struct LambdaUndefined : std::runtime_error {
  ClassificationReport report;
  explicit LambdaUndefined(ClassificationReport r);
};

// Shared lambda table for the property, or LambdaUndefined carrying the full
// classification (counterexample included) when the property fails C_S or the
// system lacks a supermajority.
std::shared_ptr<const LambdaTable> universal_lambda(const ValidityProperty& val,
                                                    const SystemParams& sys,
                                                    const ValueSpace& space,
                                                    uint64_t budget = kDefaultBudget);

class UniversalAuto : public Automaton {
 public:
  UniversalAuto(Value proposal, VectorBackend backend,
                std::shared_ptr<const LambdaTable> lambda);

  void on_start(Context& ctx) override;
  void on_message(Context& ctx, const Envelope& env) override;
  void on_timer(Context& ctx, int64_t tag) override;

 private:
  Value proposal_;
  std::unique_ptr<VectorCore> core_;
  std::shared_ptr<const LambdaTable> lambda_;
  bool decided_ = false;
};

}  // namespace validus
