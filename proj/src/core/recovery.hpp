#pragma once

#include <optional>
#include <vector>

#include "linear_model.hpp"
#include "state_evolution.hpp"

namespace sparselab {

enum class Algorithm { IST, AMP, OAMP };

// Where OAMP obtains the tau_t used to build the divergence-free denoiser.
enum class TauSource { SE, GFA, Empirical };

// Per-iteration statistics of one finite-N run, logged before each update
// (index 0 is the initial guess, so T updates give T+1 records).
struct TrajectoryRecord {
  Algorithm algorithm = Algorithm::IST;
  std::vector<double> mse;            // ||x0 - x^(t)||^2 / N
  std::vector<double> overlap;        // x^(t).x0 / N
  std::vector<double> second_moment;  // ||x^(t)||^2 / N
  std::vector<double> onsager;        // AMP only: <eta'> used at each update
  std::vector<double> tau2_emp;       // ||z^(t)||^2 / M per iteration
  std::vector<Vector> iterates;       // x^(0..T)
  std::vector<Denoiser> schedule;     // resolved eta_t actually applied
};

TrajectoryRecord run_ist(const ProblemInstance& inst,
                         const std::vector<Denoiser>& schedule, int T);

TrajectoryRecord run_amp(const ProblemInstance& inst,
                         const std::vector<Denoiser>& schedule, int T);

struct OampOptions {
  TauSource tau_source = TauSource::SE;
  std::vector<double> tau2;  // per-iteration tau_t^2, required unless Empirical
  DfScale scale = DfScale::Unit;
};

// OAMP restricted to W = A^T: the IST map with a divergence-free denoiser
// rebuilt each iteration at that iteration's tau_t.
TrajectoryRecord run_oamp(const ProblemInstance& inst, const Prior& prior,
                          const DenoiserFactory& base_factory,
                          const OampOptions& opts, int T);

// Recomputes the error-recursion variables h^(t) = (I - A^T A) q^(t) + A^T w
// and q^(t+1) = eta_t(x0 + h^(t)) - x0 from their definitions; returns
// per-component squared norms (h_norm2, q_norm2) for t = 0..T.
std::vector<std::pair<double, double>> error_recursion_view(
    const ProblemInstance& inst, const TrajectoryRecord& traj);

}  // namespace sparselab
