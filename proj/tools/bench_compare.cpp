// Parity-and-timing benchmark for the two data-parallel kernels: the lambda
// table builder and the scenario sweep driver. Runs each kernel through its
// serial reference and its OpenMP path, requires identical outputs, and
// reports wall times. Exit 1 on any divergence.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "validus/harness.hpp"

using namespace validus;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool same_rows(const std::vector<BenchRow>& a, const std::vector<BenchRow>& b) {
  return metrics_csv(a) == metrics_csv(b);
}

}  // namespace

int main(int argc, char** argv) {
  bool full = argc > 1 && std::string(argv[1]) == "--full";
  int failures = 0;

  {
    SystemParams sys{full ? 10 : 7, full ? 3 : 2};
    ValueSpace space{{"0", "1"}, {"0", "1"}};
    auto val = ValidityProperty::correct_proposal();
    uint64_t budget = 200'000'000;

    auto t0 = Clock::now();
    auto serial = compute_lambda(val, sys, space, budget, false);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = compute_lambda(val, sys, space, budget, true);
    double tp = seconds_since(t0);

    bool same = serial.table.has_value() == parallel.table.has_value() &&
                (!serial.table || serial.table->entries == parallel.table->entries);
    if (!same) failures++;
    std::cout << "lambda(n=" << sys.n << ",t=" << sys.t << "): serial " << ts
              << "s, parallel " << tp << "s, speedup " << ts / tp << "x, outputs "
              << (same ? "identical" : "DIVERGED") << "\n";
  }

  {
    std::vector<Scenario> sweep = bench_scenarios("auth", full ? std::vector<int32_t>{4, 8, 16, 32}
                                                               : std::vector<int32_t>{4, 8, 16},
                                                  1);
    for (uint64_t seed = 0; seed < (full ? 40u : 10u); ++seed) {
      Scenario sc;
      sc.n = 4;
      sc.t = 1;
      sc.seed = seed;
      sc.proposals = {0, 1, 1, 0};
      sc.protocol = "universal+auth";
      sc.property = ValidityProperty::correct_proposal();
      sc.adversary = "silent";
      sc.schedule = "random";
      sc.gst = 5;
      sc.max_ticks = 10'000;
      sweep.push_back(std::move(sc));
    }

    auto t0 = Clock::now();
    auto serial = run_sweep(sweep, false);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = run_sweep(sweep, true);
    double tp = seconds_since(t0);

    bool same = same_rows(serial, parallel);
    if (!same) failures++;
    std::cout << "sweep(" << sweep.size() << " scenarios): serial " << ts << "s, parallel "
              << tp << "s, speedup " << ts / tp << "x, outputs "
              << (same ? "identical" : "DIVERGED") << "\n";
    for (const BenchRow& r : serial)
      if (!r.all_pass) {
        failures++;
        std::cout << "verdict failure at n=" << r.n << " seed=" << r.seed << "\n";
      }
  }

  std::cout << (failures ? "bench_compare: FAIL\n" : "bench_compare: all outputs identical\n");
  return failures ? 1 : 0;
}
