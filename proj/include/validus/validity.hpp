#pragma once

// Input configurations, similarity/compatibility relations, validity
// properties, the lambda selector, and the trivial/solvable classification.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "validus/common.hpp"

namespace validus {

// Index into ValueSpace::inputs (for proposals) or ValueSpace::outputs (for
// decisions). Builtin properties other than constant/table require the two
// listings to be identical so the index is shared.
using Value = int32_t;

struct SystemParams {
  int32_t n = 0;  // process count, processes are P_1..P_n
  int32_t t = 0;  // fault bound

  bool supermajority() const { return n > 3 * t; }
  void validate() const;
};

struct ValueSpace {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  bool io_identical() const { return inputs == outputs; }
  int32_t input_index(const std::string& s) const;   // -1 if absent
  int32_t output_index(const std::string& s) const;  // -1 if absent
  void validate() const;
};

struct ProcessProposal {
  Proc process = 0;
  Value value = 0;

  friend bool operator==(const ProcessProposal& a, const ProcessProposal& b) {
    return a.process == b.process && a.value == b.value;
  }
};

// An assignment of proposals to a set of distinct processes, kept sorted by
// process index. Valid sizes are n-t .. n.
struct InputConfiguration {
  std::vector<ProcessProposal> pairs;

  size_t size() const { return pairs.size(); }
  bool has(Proc p) const;
  // Value for process p; requires has(p).
  Value value_of(Proc p) const;
  bool unanimous(Value* out = nullptr) const;
  void validate(const SystemParams& sys, const ValueSpace& space) const;
  std::string display(const ValueSpace& space) const;  // "P1:0;P2:1"
  std::vector<std::pair<Proc, Value>> key() const;

  friend bool operator==(const InputConfiguration& a, const InputConfiguration& b) {
    return a.pairs == b.pairs;
  }
};

// True iff the two configurations share at least one process and agree on the
// proposal of every shared process. Symmetric and reflexive.
bool similar(const InputConfiguration& a, const InputConfiguration& b);

// True iff the configurations share at most t processes and each has a
// process the other lacks. Symmetric and irreflexive.
bool compatible(const InputConfiguration& a, const InputConfiguration& b, int32_t t);

// Number of configurations with sizes in [size_lo, size_hi]:
// sum over x of C(n,x) * |V_I|^x, saturating at UINT64_MAX.
uint64_t count_configs(int32_t n, size_t num_values, int32_t size_lo, int32_t size_hi);

// Canonical order: size ascending, then process subset lexicographic (as a
// sorted index sequence), then value tuple lexicographic. Throws
// BudgetExceeded if the closed-form count exceeds the budget.
std::vector<InputConfiguration> enumerate_configs(const SystemParams& sys,
                                                  const ValueSpace& space,
                                                  int32_t size_lo, int32_t size_hi,
                                                  uint64_t budget);

// Visitor variant; stops early if fn returns false.
void for_each_config(const SystemParams& sys, const ValueSpace& space,
                     int32_t size_lo, int32_t size_hi, uint64_t budget,
                     const std::function<bool(const InputConfiguration&)>& fn);

// All c' in I with similar(c, c'), in canonical order. Always contains c.
std::vector<InputConfiguration> sim_set(const InputConfiguration& c,
                                        const SystemParams& sys,
                                        const ValueSpace& space,
                                        uint64_t budget);

void for_each_similar(const InputConfiguration& c, const SystemParams& sys,
                      const ValueSpace& space, uint64_t budget,
                      const std::function<bool(const InputConfiguration&)>& fn);

enum class PropertyKind { strong, weak, correct_proposal, constant, interval, table };

std::string to_string(PropertyKind k);

struct TableMissingEntry : std::runtime_error {
  explicit TableMissingEntry(const std::string& cfg)
      : std::runtime_error("validity table has no entry for configuration " + cfg) {}
};

struct ValidityProperty {
  PropertyKind kind = PropertyKind::strong;
  Value constant_value = 0;              // constant
  Value lo = 0, hi = 0;                  // interval clamp, in output order
  std::map<std::vector<std::pair<Proc, Value>>, std::set<Value>> table;

  static ValidityProperty strong();
  static ValidityProperty weak();
  static ValidityProperty correct_proposal();
  static ValidityProperty constant(Value v);
  static ValidityProperty interval(Value lo, Value hi);
  static ValidityProperty from_table(
      std::map<std::vector<std::pair<Proc, Value>>, std::set<Value>> entries);

  // Builtins other than constant/table require identical input/output
  // listings; table entries must cover every enumerable configuration with a
  // nonempty admissible set. Throws on violation.
  void validate(const SystemParams& sys, const ValueSpace& space, uint64_t budget) const;

  std::string display(const ValueSpace& space) const;
};

// True iff v is admissible for c under the property.
bool admissible(const ValidityProperty& val, const InputConfiguration& c, Value v,
                const SystemParams& sys, const ValueSpace& space);

// Least output value admissible in every enumerable configuration, or nullopt.
// This is also the finite always-admissible decision procedure.
std::optional<Value> check_trivial(const ValidityProperty& val, const SystemParams& sys,
                                   const ValueSpace& space, uint64_t budget);

struct LambdaTable {
  // Entries in canonical order over all size-(n-t) configurations.
  std::vector<std::pair<InputConfiguration, Value>> entries;
  std::map<std::vector<std::pair<Proc, Value>>, Value> index;

  Value lookup(const InputConfiguration& c) const;  // throws if absent
  void add(const InputConfiguration& c, Value v);
};

struct ComputeLambdaResult {
  std::optional<LambdaTable> table;
  std::optional<InputConfiguration> counterexample;  // first config with empty intersection
};

// For every c of size n-t, intersect val(c') over all c' similar to c. If all
// intersections are nonempty, returns the table picking the least element
// (the tie-break hook below); otherwise returns the first failing c.
// `parallel` selects the OpenMP kernel; both paths yield identical results.
ComputeLambdaResult compute_lambda(const ValidityProperty& val, const SystemParams& sys,
                                   const ValueSpace& space, uint64_t budget,
                                   bool parallel = true);

// Tie-break hook: picks the table value among a nonempty admissible
// intersection, least-in-canonical-order by default. Kept as a single
// function so an alternative policy has exactly one place to plug in;
// any replacement must stay deterministic and identical across processes.
Value lambda_tie_break(const std::vector<Value>& intersection);

enum class ClassVerdict { solvable_trivial, solvable_universal, unsolvable };

std::string to_string(ClassVerdict v);

struct ClassificationReport {
  std::optional<Value> trivial_witness;
  bool cs_holds = false;
  std::optional<InputConfiguration> cs_counterexample;
  std::optional<LambdaTable> lambda;
  ClassVerdict verdict = ClassVerdict::unsolvable;
  std::string notes;
};

ClassificationReport classify(const ValidityProperty& val, const SystemParams& sys,
                              const ValueSpace& space, uint64_t budget,
                              bool parallel = true);

constexpr uint64_t kDefaultBudget = 1'000'000;

}  // namespace validus
