// Timing comparison of the serial reference paths against the OpenMP
// kernels: batch power flow, batch sensitivities, and the per-prosumer
// x-update fan-out of one coordination iteration.

#include <chrono>
#include <cstdio>

#include "flexprice/coordinator.hpp"
#include "flexprice/scenario.hpp"
#include "flexprice/sim.hpp"

using namespace flexprice;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_of(const std::function<void()>& fn, int repeats) {
  const auto start = Clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  return std::chrono::duration<double>(Clock::now() - start).count() / repeats;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main() {
  sim::Scenario sc = sim::parse_scenario(sim::replica_scenario_json(true), "");
  sim::MaterializedScenario mat = sim::materialize(sc);
  sim::PlanningSetup setup = sim::day_ahead_setup(sc, exec::Mode::Parallel);
  const int k = sc.timeline.horizon();
  const int n = static_cast<int>(setup.problems.size());

  std::printf("horizon %d steps, %d prosumers, %d threads\n", k, n, exec::max_threads());

  std::vector<Eigen::VectorXd> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = setup.baselines[i].demand.x;
  grid::OperatingPoint op =
      grid::injections_from_demands(sc.network, setup.placement, xs, k, setup.slack_plan);

  {
    grid::PowerFlowOptions pf;
    pf.mode = exec::Mode::Serial;
    double s = seconds_of([&] { grid::solve_power_flow(sc.network, op, pf); }, 5);
    pf.mode = exec::Mode::Parallel;
    double p = seconds_of([&] { grid::solve_power_flow(sc.network, op, pf); }, 5);
    report("batch power flow", s, p);
  }
  {
    grid::PowerFlowOptions pf;
    pf.mode = exec::Mode::Serial;
    double s = seconds_of([&] { grid::compute_sensitivities(sc.network, op, pf); }, 5);
    pf.mode = exec::Mode::Parallel;
    double p = seconds_of([&] { grid::compute_sensitivities(sc.network, op, pf); }, 5);
    report("batch sensitivities", s, p);
  }
  {
    coord::AdmmState st = coord::init_state(setup.lin, xs, 1.0);
    st.k = 1;
    std::vector<prosumer::PriceSignal> sigs(n);
    for (int i = 0; i < n; ++i) sigs[i] = coord::extract_price_signal(st, setup.tariff, i);
    auto fan_out = [&](exec::Mode mode) {
      std::vector<prosumer::XUpdateResult> res(n);
      exec::parallel_for(mode, n, [&](int i) { res[i] = prosumer::x_update(setup.problems[i], sigs[i]); });
    };
    double s = seconds_of([&] { fan_out(exec::Mode::Serial); }, 3);
    double p = seconds_of([&] { fan_out(exec::Mode::Parallel); }, 3);
    report("x-update fan-out", s, p);
  }
  {
    // one full coordination iteration set, serial vs parallel
    auto one = [&](exec::Mode mode) {
      coord::AdmmConfig cfg = sc.admm;
      cfg.max_iter = 3;
      cfg.mode = mode;
      cfg.relinearize = false;
      coord::run_coordination(setup.problems, setup.tariff, setup.lin, cfg, {}, nullptr, nullptr,
                              &setup.baselines);
    };
    double s = seconds_of([&] { one(exec::Mode::Serial); }, 1);
    double p = seconds_of([&] { one(exec::Mode::Parallel); }, 1);
    report("3 admm iterations", s, p);
  }
  return 0;
}
