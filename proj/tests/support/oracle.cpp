#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {
namespace {

void subsets_rec(int n, int k, int start, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  if ((int)cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (int p = start; p <= n; ++p) {
    cur.push_back(p);
    subsets_rec(n, k, p + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  subsets_rec(n, k, 1, cur, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::map<int, int> as_map(const Config& c) {
  std::map<int, int> m;
  for (auto& [p, v] : c) m[p] = v;
  return m;
}

}  // namespace

std::vector<Config> all_configs(int n, int num_values, int size_lo, int size_hi) {
  std::vector<Config> out;
  for (int k = size_lo; k <= size_hi; ++k) {
    for (const auto& procs : subsets(n, k)) {
      long long total = 1;
      for (int i = 0; i < k; ++i) total *= num_values;
      for (long long code = 0; code < total; ++code) {
        Config c;
        long long rest = code;
        long long place = total;
        for (int i = 0; i < k; ++i) {
          place /= num_values;
          c.emplace_back(procs[i], (int)(rest / place));
          rest %= place;
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

bool sim(const Config& a, const Config& b) {
  auto ma = as_map(a), mb = as_map(b);
  bool any = false;
  for (auto& [p, v] : ma) {
    auto it = mb.find(p);
    if (it == mb.end()) continue;
    any = true;
    if (it->second != v) return false;
  }
  return any;
}

bool admits(const Property& p, const Config& c, int v, int n, int num_values) {
  (void)num_values;
  switch (p.kind) {
    case Property::kStrong: {
      auto m = as_map(c);
      int first = m.begin()->second;
      for (auto& [q, w] : m)
        if (w != first) return true;  // not unanimous: anything goes
      return v == first;
    }
    case Property::kWeak: {
      if ((int)c.size() != n) return true;
      int first = c.front().second;
      for (auto& [q, w] : c)
        if (w != first) return true;
      return v == first;
    }
    case Property::kCorrectProposal: {
      for (auto& [q, w] : c)
        if (w == v) return true;
      return false;
    }
    case Property::kConstant:
      return v == p.constant;
    case Property::kInterval: {
      int mn = p.hi, mx = p.lo;
      for (auto& [q, w] : c) {
        int cl = std::min(std::max(w, p.lo), p.hi);
        mn = std::min(mn, cl);
        mx = std::max(mx, cl);
      }
      return mn <= v && v <= mx;
    }
    case Property::kTable: {
      auto it = p.table.find(c);
      if (it == p.table.end()) throw std::runtime_error("table miss");
      return it->second.count(v) > 0;
    }
  }
  return false;
}

std::vector<Config> sim_of(const Config& a, int n, int num_values, int size_lo, int size_hi) {
  std::vector<Config> out;
  for (auto& b : all_configs(n, num_values, size_lo, size_hi))
    if (sim(a, b)) out.push_back(b);
  return out;
}

std::optional<int> trivial_value(const Property& p, int n, int t, int num_values) {
  auto everything = all_configs(n, num_values, n - t, n);
  for (int v = 0; v < num_values; ++v) {
    bool ok = true;
    for (auto& c : everything)
      if (!admits(p, c, v, n, num_values)) {
        ok = false;
        break;
      }
    if (ok) return v;
  }
  return std::nullopt;
}

Classification classify(const Property& p, int n, int t, int num_values) {
  Classification r;
  if (auto w = trivial_value(p, n, t, num_values)) {
    r.verdict = "solvable_trivial";
    r.witness = *w;
    return r;
  }
  if (n <= 3 * t) {
    r.verdict = "unsolvable";
    return r;
  }
  for (auto& base : all_configs(n, num_values, n - t, n - t)) {
    std::set<int> inter;
    for (int v = 0; v < num_values; ++v) inter.insert(v);
    for (auto& c : sim_of(base, n, num_values, n - t, n)) {
      std::set<int> keep;
      for (int v : inter)
        if (admits(p, c, v, n, num_values)) keep.insert(v);
      inter = std::move(keep);
      if (inter.empty()) break;
    }
    if (inter.empty()) {
      r.verdict = "unsolvable";
      r.counterexample = base;
      r.lambda.clear();
      return r;
    }
    r.lambda[base] = *inter.begin();
  }
  r.verdict = "solvable_universal";
  return r;
}

}  // namespace oracle
