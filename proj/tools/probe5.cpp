// Scratch probe: default (delayed-sensor) loop across k_FF, both modes.
#include <cstdio>
#include <cstring>
#include "cwbc/sim.hpp"
using namespace cwbc;

int main(int argc, char** argv) {
  Scenario base = default_scenario();
  if (argc > 1 && std::strcmp(argv[1], "eq13") == 0)
    base.mode = FeedbackMode::kWithInertial;
  std::printf("mode=%s\n",
              base.mode == FeedbackMode::kForceOnly ? "eq14" : "eq13");
  double base_effort = 0;
  for (double k : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) {
    Scenario s = base;
    s.gains.k_FF = k;
    SimLog log = run_tolerant(s);
    const auto& su = log.summary;
    if (k == 0) base_effort = su.cumulative_effort;
    double max_inc = 0.0;
    for (size_t i = 1; i < log.rows.size(); ++i)
      max_inc = std::max(max_inc, log.rows[i].energy.total - log.rows[i-1].energy.total);
    double peak_fox = 0.0;
    for (const auto& r : log.rows) peak_fox = std::max(peak_fox, r.f_ox.norm());
    std::printf("kff=%.1f%s effort=%9.3f ratio=%.3f peak|fox|=%9.3f eeSS=%.2e comSS=%.2e "
                "osc=%d(T=%.3f,A=%.2f) viol=%ld maxInc=%.2e Eend/E0=%.1e\n",
                k, su.diverged ? " DIV" : "", su.cumulative_effort,
                su.cumulative_effort / base_effort, peak_fox, su.ee_error_ss,
                su.com_error_ss, su.oscillation.oscillating ? 1 : 0,
                su.oscillation.dominant_period, su.oscillation.amplitude,
                su.monitor.violations, max_inc, su.final_energy / su.initial_energy);
  }
  return 0;
}
