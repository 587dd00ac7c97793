#include "validus/validity.hpp"

#include <algorithm>
#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace validus {

void SystemParams::validate() const {
  if (!(0 < t && t < n)) {
    throw std::invalid_argument("system params require 0 < t < n, got n=" +
                                std::to_string(n) + " t=" + std::to_string(t));
  }
}

int32_t ValueSpace::input_index(const std::string& s) const {
  for (size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i] == s) return static_cast<int32_t>(i);
  return -1;
}

int32_t ValueSpace::output_index(const std::string& s) const {
  for (size_t i = 0; i < outputs.size(); ++i)
    if (outputs[i] == s) return static_cast<int32_t>(i);
  return -1;
}

void ValueSpace::validate() const {
  if (inputs.empty() || outputs.empty())
    throw std::invalid_argument("value space listings must be nonempty");
  auto distinct = [](const std::vector<std::string>& v) {
    auto s = v;
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
  };
  if (!distinct(inputs) || !distinct(outputs))
    throw std::invalid_argument("value space listings must be distinct");
}

bool InputConfiguration::has(Proc p) const {
  for (const auto& pp : pairs)
    if (pp.process == p) return true;
  return false;
}

Value InputConfiguration::value_of(Proc p) const {
  for (const auto& pp : pairs)
    if (pp.process == p) return pp.value;
  throw std::out_of_range("configuration has no process " + std::to_string(p));
}

bool InputConfiguration::unanimous(Value* out) const {
  if (pairs.empty()) return false;
  Value v = pairs.front().value;
  for (const auto& pp : pairs)
    if (pp.value != v) return false;
  if (out) *out = v;
  return true;
}

void InputConfiguration::validate(const SystemParams& sys, const ValueSpace& space) const {
  auto sz = static_cast<int32_t>(pairs.size());
  if (sz < sys.n - sys.t || sz > sys.n)
    throw std::invalid_argument("configuration size " + std::to_string(sz) +
                                " outside [n-t, n]");
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& pp = pairs[i];
    if (pp.process < 1 || pp.process > sys.n)
      throw std::invalid_argument("process index out of range");
    if (i > 0 && pairs[i - 1].process >= pp.process)
      throw std::invalid_argument("configuration processes must be strictly increasing");
    if (pp.value < 0 || pp.value >= static_cast<Value>(space.inputs.size()))
      throw std::invalid_argument("proposal value out of range");
  }
}

std::string InputConfiguration::display(const ValueSpace& space) const {
  std::string s;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (i) s += ';';
    s += 'P';
    s += std::to_string(pairs[i].process);
    s += ':';
    s += space.inputs[static_cast<size_t>(pairs[i].value)];
  }
  return s;
}

std::vector<std::pair<Proc, Value>> InputConfiguration::key() const {
  std::vector<std::pair<Proc, Value>> k;
  k.reserve(pairs.size());
  for (const auto& pp : pairs) k.emplace_back(pp.process, pp.value);
  return k;
}

bool similar(const InputConfiguration& a, const InputConfiguration& b) {
  // Both pair lists are sorted by process, so a merge walk suffices.
  size_t i = 0, j = 0;
  bool shared = false;
  while (i < a.pairs.size() && j < b.pairs.size()) {
    if (a.pairs[i].process < b.pairs[j].process) {
      ++i;
    } else if (a.pairs[i].process > b.pairs[j].process) {
      ++j;
    } else {
      if (a.pairs[i].value != b.pairs[j].value) return false;
      shared = true;
      ++i;
      ++j;
    }
  }
  return shared;
}

bool compatible(const InputConfiguration& a, const InputConfiguration& b, int32_t t) {
  size_t i = 0, j = 0;
  int32_t shared = 0;
  bool a_only = false, b_only = false;
  while (i < a.pairs.size() && j < b.pairs.size()) {
    if (a.pairs[i].process < b.pairs[j].process) {
      a_only = true;
      ++i;
    } else if (a.pairs[i].process > b.pairs[j].process) {
      b_only = true;
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  if (i < a.pairs.size()) a_only = true;
  if (j < b.pairs.size()) b_only = true;
  return shared <= t && a_only && b_only;
}

uint64_t count_configs(int32_t n, size_t num_values, int32_t size_lo, int32_t size_hi) {
  constexpr uint64_t kMax = UINT64_MAX;
  unsigned __int128 total = 0;
  for (int32_t x = size_lo; x <= size_hi; ++x) {
    // C(n, x)
    unsigned __int128 binom = 1;
    for (int32_t k = 1; k <= x; ++k) binom = binom * static_cast<uint64_t>(n - k + 1) / static_cast<uint64_t>(k);
    unsigned __int128 pow = 1;
    for (int32_t k = 0; k < x; ++k) {
      pow *= num_values;
      if (pow > kMax) return kMax;
    }
    total += binom * pow;
    if (total > kMax) return kMax;
  }
  return static_cast<uint64_t>(total);
}

namespace {

// Enumerates size-k subsets of {1..n} in lexicographic order of the sorted
// index sequence, invoking fn with each; fn returning false stops.
bool for_each_subset(int32_t n, int32_t k, std::vector<Proc>& subset,
                     const std::function<bool(const std::vector<Proc>&)>& fn) {
  subset.resize(static_cast<size_t>(k));
  for (int32_t i = 0; i < k; ++i) subset[static_cast<size_t>(i)] = i + 1;
  for (;;) {
    if (!fn(subset)) return false;
    // advance: find rightmost index that can grow
    int32_t i = k - 1;
    while (i >= 0 && subset[static_cast<size_t>(i)] == n - (k - 1 - i)) --i;
    if (i < 0) return true;
    ++subset[static_cast<size_t>(i)];
    for (int32_t j = i + 1; j < k; ++j)
      subset[static_cast<size_t>(j)] = subset[static_cast<size_t>(j - 1)] + 1;
  }
}

// Odometer over value tuples for the given positions, lexicographic with the
// leftmost position most significant.
bool for_each_tuple(size_t len, Value num_values,
                    const std::function<bool(const std::vector<Value>&)>& fn) {
  std::vector<Value> tuple(len, 0);
  for (;;) {
    if (!fn(tuple)) return false;
    size_t i = len;
    while (i > 0 && tuple[i - 1] == num_values - 1) tuple[--i] = 0;
    if (i == 0) return true;
    ++tuple[i - 1];
  }
}

}  // namespace

void for_each_config(const SystemParams& sys, const ValueSpace& space,
                     int32_t size_lo, int32_t size_hi, uint64_t budget,
                     const std::function<bool(const InputConfiguration&)>& fn) {
  sys.validate();
  space.validate();
  if (size_lo < sys.n - sys.t || size_hi > sys.n || size_lo > size_hi)
    throw std::invalid_argument("size range must lie within [n-t, n]");
  uint64_t need = count_configs(sys.n, space.inputs.size(), size_lo, size_hi);
  if (need > budget) throw BudgetExceeded(need, budget);

  auto num_values = static_cast<Value>(space.inputs.size());
  InputConfiguration c;
  std::vector<Proc> subset;
  for (int32_t sz = size_lo; sz <= size_hi; ++sz) {
    bool keep = for_each_subset(sys.n, sz, subset, [&](const std::vector<Proc>& procs) {
      return for_each_tuple(procs.size(), num_values, [&](const std::vector<Value>& vals) {
        c.pairs.resize(procs.size());
        for (size_t i = 0; i < procs.size(); ++i) c.pairs[i] = {procs[i], vals[i]};
        return fn(c);
      });
    });
    if (!keep) return;
  }
}

std::vector<InputConfiguration> enumerate_configs(const SystemParams& sys,
                                                  const ValueSpace& space,
                                                  int32_t size_lo, int32_t size_hi,
                                                  uint64_t budget) {
  std::vector<InputConfiguration> out;
  for_each_config(sys, space, size_lo, size_hi, budget, [&](const InputConfiguration& c) {
    out.push_back(c);
    return true;
  });
  return out;
}

void for_each_similar(const InputConfiguration& c, const SystemParams& sys,
                      const ValueSpace& space, uint64_t budget,
                      const std::function<bool(const InputConfiguration&)>& fn) {
  // Walks candidate process subsets directly instead of filtering the whole
  // space: within a subset that intersects pi(c), shared positions are forced
  // to c's values and only the remaining positions are free, which preserves
  // the canonical (value-tuple lexicographic) order of the survivors.
  sys.validate();
  space.validate();
  auto num_values = static_cast<Value>(space.inputs.size());

  // Budget precheck: count emitted configurations in closed form.
  unsigned __int128 need = 0;
  {
    std::vector<Proc> subset;
    for (int32_t sz = sys.n - sys.t; sz <= sys.n; ++sz) {
      for_each_subset(sys.n, sz, subset, [&](const std::vector<Proc>& procs) {
        size_t overlap = 0;
        for (Proc p : procs)
          if (c.has(p)) ++overlap;
        if (overlap > 0) {
          unsigned __int128 pow = 1;
          for (size_t k = overlap; k < procs.size(); ++k) pow *= static_cast<uint64_t>(num_values);
          need += pow;
        }
        return need <= budget;
      });
      if (need > budget) throw BudgetExceeded(UINT64_MAX, budget);
    }
  }
  if (need > budget) throw BudgetExceeded(static_cast<uint64_t>(need), budget);

  InputConfiguration cand;
  std::vector<Proc> subset;
  std::vector<size_t> free_pos;
  for (int32_t sz = sys.n - sys.t; sz <= sys.n; ++sz) {
    bool keep = for_each_subset(sys.n, sz, subset, [&](const std::vector<Proc>& procs) {
      cand.pairs.resize(procs.size());
      free_pos.clear();
      bool shared = false;
      for (size_t i = 0; i < procs.size(); ++i) {
        cand.pairs[i].process = procs[i];
        if (c.has(procs[i])) {
          cand.pairs[i].value = c.value_of(procs[i]);
          shared = true;
        } else {
          free_pos.push_back(i);
        }
      }
      if (!shared) return true;
      return for_each_tuple(free_pos.size(), num_values, [&](const std::vector<Value>& vals) {
        for (size_t i = 0; i < free_pos.size(); ++i) cand.pairs[free_pos[i]].value = vals[i];
        return fn(cand);
      });
    });
    if (!keep) return;
  }
}

std::vector<InputConfiguration> sim_set(const InputConfiguration& c,
                                        const SystemParams& sys,
                                        const ValueSpace& space,
                                        uint64_t budget) {
  std::vector<InputConfiguration> out;
  for_each_similar(c, sys, space, budget, [&](const InputConfiguration& s) {
    out.push_back(s);
    return true;
  });
  return out;
}

std::string to_string(PropertyKind k) {
  switch (k) {
    case PropertyKind::strong: return "strong";
    case PropertyKind::weak: return "weak";
    case PropertyKind::correct_proposal: return "correct_proposal";
    case PropertyKind::constant: return "constant";
    case PropertyKind::interval: return "interval";
    case PropertyKind::table: return "table";
  }
  return "?";
}

ValidityProperty ValidityProperty::strong() { return {PropertyKind::strong, 0, 0, 0, {}}; }
ValidityProperty ValidityProperty::weak() { return {PropertyKind::weak, 0, 0, 0, {}}; }
ValidityProperty ValidityProperty::correct_proposal() {
  return {PropertyKind::correct_proposal, 0, 0, 0, {}};
}
ValidityProperty ValidityProperty::constant(Value v) {
  return {PropertyKind::constant, v, 0, 0, {}};
}
ValidityProperty ValidityProperty::interval(Value lo, Value hi) {
  return {PropertyKind::interval, 0, lo, hi, {}};
}
ValidityProperty ValidityProperty::from_table(
    std::map<std::vector<std::pair<Proc, Value>>, std::set<Value>> entries) {
  ValidityProperty p;
  p.kind = PropertyKind::table;
  p.table = std::move(entries);
  return p;
}

void ValidityProperty::validate(const SystemParams& sys, const ValueSpace& space,
                                uint64_t budget) const {
  sys.validate();
  space.validate();
  switch (kind) {
    case PropertyKind::strong:
    case PropertyKind::weak:
    case PropertyKind::correct_proposal:
      if (!space.io_identical())
        throw std::invalid_argument(to_string(kind) +
                                    " requires identical input/output listings");
      return;
    case PropertyKind::constant:
      if (constant_value < 0 || constant_value >= static_cast<Value>(space.outputs.size()))
        throw std::invalid_argument("constant value outside output space");
      return;
    case PropertyKind::interval:
      if (!space.io_identical())
        throw std::invalid_argument("interval requires identical input/output listings");
      if (lo > hi || lo < 0 || hi >= static_cast<Value>(space.outputs.size()))
        throw std::invalid_argument("interval bounds invalid");
      return;
    case PropertyKind::table: {
      for_each_config(sys, space, sys.n - sys.t, sys.n, budget,
                      [&](const InputConfiguration& c) {
                        auto it = table.find(c.key());
                        if (it == table.end()) throw TableMissingEntry(c.display(space));
                        if (it->second.empty())
                          throw std::invalid_argument("table admissible set empty for " +
                                                      c.display(space));
                        for (Value v : it->second)
                          if (v < 0 || v >= static_cast<Value>(space.outputs.size()))
                            throw std::invalid_argument("table value outside output space");
                        return true;
                      });
      return;
    }
  }
}

std::string ValidityProperty::display(const ValueSpace& space) const {
  switch (kind) {
    case PropertyKind::constant:
      return "constant:" + space.outputs[static_cast<size_t>(constant_value)];
    case PropertyKind::interval:
      return "interval:" + space.outputs[static_cast<size_t>(lo)] + ":" +
             space.outputs[static_cast<size_t>(hi)];
    default:
      return to_string(kind);
  }
}

bool admissible(const ValidityProperty& val, const InputConfiguration& c, Value v,
                const SystemParams& sys, const ValueSpace& space) {
  if (v < 0 || v >= static_cast<Value>(space.outputs.size()))
    throw std::invalid_argument("admissible: value outside output space");
  switch (val.kind) {
    case PropertyKind::strong: {
      Value u;
      if (c.unanimous(&u)) return v == u;
      return true;
    }
    case PropertyKind::weak: {
      Value u;
      if (static_cast<int32_t>(c.size()) == sys.n && c.unanimous(&u)) return v == u;
      return true;
    }
    case PropertyKind::correct_proposal: {
      for (const auto& pp : c.pairs)
        if (pp.value == v) return true;
      return false;
    }
    case PropertyKind::constant:
      return v == val.constant_value;
    case PropertyKind::interval: {
      auto clamp = [&](Value x) { return std::min(std::max(x, val.lo), val.hi); };
      Value mn = clamp(c.pairs.front().value), mx = mn;
      for (const auto& pp : c.pairs) {
        mn = std::min(mn, clamp(pp.value));
        mx = std::max(mx, clamp(pp.value));
      }
      return mn <= v && v <= mx;
    }
    case PropertyKind::table: {
      auto it = val.table.find(c.key());
      if (it == val.table.end()) throw TableMissingEntry(c.display(space));
      return it->second.count(v) > 0;
    }
  }
  return false;
}

std::optional<Value> check_trivial(const ValidityProperty& val, const SystemParams& sys,
                                   const ValueSpace& space, uint64_t budget) {
  auto num_out = static_cast<Value>(space.outputs.size());
  std::vector<bool> alive(static_cast<size_t>(num_out), true);
  Value alive_count = num_out;
  for_each_config(sys, space, sys.n - sys.t, sys.n, budget,
                  [&](const InputConfiguration& c) {
                    for (Value v = 0; v < num_out; ++v) {
                      if (alive[static_cast<size_t>(v)] && !admissible(val, c, v, sys, space)) {
                        alive[static_cast<size_t>(v)] = false;
                        --alive_count;
                      }
                    }
                    return alive_count > 0;
                  });
  for (Value v = 0; v < num_out; ++v)
    if (alive[static_cast<size_t>(v)]) return v;
  return std::nullopt;
}

Value LambdaTable::lookup(const InputConfiguration& c) const {
  auto it = index.find(c.key());
  if (it == index.end())
    throw std::out_of_range("lambda table has no entry for the given configuration");
  return it->second;
}

void LambdaTable::add(const InputConfiguration& c, Value v) {
  entries.emplace_back(c, v);
  index.emplace(c.key(), v);
}

Value lambda_tie_break(const std::vector<Value>& intersection) {
  return *std::min_element(intersection.begin(), intersection.end());
}

namespace {

// Intersection of admissible sets over sim(c); empty result means the
// similarity condition fails at c.
std::vector<Value> common_admissible(const ValidityProperty& val, const InputConfiguration& c,
                                     const SystemParams& sys, const ValueSpace& space,
                                     uint64_t budget) {
  auto num_out = static_cast<Value>(space.outputs.size());
  std::vector<bool> alive(static_cast<size_t>(num_out), true);
  Value alive_count = num_out;
  for_each_similar(c, sys, space, budget, [&](const InputConfiguration& s) {
    for (Value v = 0; v < num_out; ++v) {
      if (alive[static_cast<size_t>(v)] && !admissible(val, s, v, sys, space)) {
        alive[static_cast<size_t>(v)] = false;
        --alive_count;
      }
    }
    return alive_count > 0;
  });
  std::vector<Value> out;
  for (Value v = 0; v < num_out; ++v)
    if (alive[static_cast<size_t>(v)]) out.push_back(v);
  return out;
}

}  // namespace

ComputeLambdaResult compute_lambda(const ValidityProperty& val, const SystemParams& sys,
                                   const ValueSpace& space, uint64_t budget,
                                   bool parallel) {
  auto base = enumerate_configs(sys, space, sys.n - sys.t, sys.n - sys.t, budget);
  std::vector<Value> chosen(base.size(), -1);

  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (size_t i = 0; i < base.size(); ++i) {
      auto common = common_admissible(val, base[i], sys, space, budget);
      chosen[i] = common.empty() ? -1 : lambda_tie_break(common);
    }
  } else {
    for (size_t i = 0; i < base.size(); ++i) {
      auto common = common_admissible(val, base[i], sys, space, budget);
      chosen[i] = common.empty() ? -1 : lambda_tie_break(common);
    }
  }

  ComputeLambdaResult result;
  for (size_t i = 0; i < base.size(); ++i) {
    if (chosen[i] < 0) {
      result.counterexample = base[i];
      return result;
    }
  }
  LambdaTable table;
  for (size_t i = 0; i < base.size(); ++i) table.add(base[i], chosen[i]);
  result.table = std::move(table);
  return result;
}

std::string to_string(ClassVerdict v) {
  switch (v) {
    case ClassVerdict::solvable_trivial: return "solvable_trivial";
    case ClassVerdict::solvable_universal: return "solvable_universal";
    case ClassVerdict::unsolvable: return "unsolvable";
  }
  return "?";
}

ClassificationReport classify(const ValidityProperty& val, const SystemParams& sys,
                              const ValueSpace& space, uint64_t budget, bool parallel) {
  val.validate(sys, space, budget);
  ClassificationReport rep;
  rep.trivial_witness = check_trivial(val, sys, space, budget);
  if (rep.trivial_witness) {
    rep.verdict = ClassVerdict::solvable_trivial;
    rep.cs_holds = true;  // a constant selector is admissible everywhere
    rep.notes = "trivial: witness value admissible in every configuration";
    return rep;
  }
  if (!sys.supermajority()) {
    rep.verdict = ClassVerdict::unsolvable;
    rep.notes = "n <= 3t and no always-admissible value exists";
    return rep;
  }
  auto lam = compute_lambda(val, sys, space, budget, parallel);
  if (lam.table) {
    rep.verdict = ClassVerdict::solvable_universal;
    rep.cs_holds = true;
    rep.lambda = std::move(lam.table);
    int64_t half_t = (sys.t + 1) / 2;
    rep.notes = "non-trivial and solvable: any solution sends at least ceil(t/2)^2 = " +
                std::to_string(half_t * half_t) + " messages after stabilization";
  } else {
    rep.verdict = ClassVerdict::unsolvable;
    rep.cs_holds = false;
    rep.cs_counterexample = std::move(lam.counterexample);
    rep.notes = "similarity condition fails: some configuration has no common admissible value";
  }
  return rep;
}

}  // namespace validus
