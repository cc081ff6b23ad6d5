#pragma once

// Exact energies of L-periodic one-dimensional profiles.
//
// A profile is the union of [b_{2j}, b_{2j+1}) modulo L.  The energy density
// decomposes over boundary points: writing g- = s - s^-, g+ = s^+ - s for the
// gaps around a boundary point s, the per-point contribution regroups into
//
//   r(s) = -1 + 2 Phi(g-) + 2 Phi(g+) - 2 Phi(g- + g+)
//          - sum over farther opposite-phase intervals of their interaction
//            with (s^-, s) resp. (s, s^+),
//
// which cancels the divergent 2 Phi(0) moment analytically (no catastrophic
// cancellation at small tau).  Interactions with all periodic images beyond
// the explicit window are summed in closed form as certified power sums, so
// the reported tail bound is the actual truncation error, not an estimate.
// The total satisfies  sum_s r(s) = L * energy density  exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stripes/analytic.hpp"
#include "stripes/kernel.hpp"

namespace stripes {

struct PeriodicProfile {
    double period = 1.0;             // L
    std::vector<double> boundaries;  // strictly increasing, even count, in [0, L)

    double density() const;   // occupied fraction, in (0,1)
    double min_gap() const;   // smallest spacing, including the wrap gap
    void validate() const;    // throws std::invalid_argument on violation
    PeriodicProfile normalized() const;  // translated so boundaries[0] == 0
    bool occupied(double x) const;       // membership of x mod L
    double measure_in(double lo, double hi) const;  // |E cap [lo,hi)|, hi-lo <= L
};

PeriodicProfile stripe_profile(double h, double alpha);  // L = 2h, one stripe

struct EnergyBreakdown {
    double total_density = 0.0;
    std::vector<double> per_boundary_r;
    int image_cutoff = 0;     // explicit periodic images before the closed tail
    double tail_bound = 0.0;  // certified truncation error of the total
};

EnergyBreakdown profile_energy(const KernelParams& kp,
                               const PeriodicProfile& profile,
                               double tol = 1e-10);

double r_tau_at(const KernelParams& kp, const PeriodicProfile& profile,
                int boundary_index, double tol = 1e-10);

// Rescales occupied intervals about their centers so the density becomes
// alpha exactly; gaps shrink proportionally if intervals would collide.
PeriodicProfile project_density(const PeriodicProfile& profile, double alpha);

struct SearchOptions {
    double tol = 1e-10;          // stop when a full sweep gains less than this
    int max_iterations = 4000;   // sweep cap
    double initial_step = 0.0;   // 0: auto (half the minimal spacing)
    double merge_gap = 1e-9;     // relative gap below which boundaries annihilate
};

struct SearchResult {
    PeriodicProfile profile;
    double energy = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Volume-preserving coordinate descent: each accepted move shifts one
// boundary and compensates on another so the density is conserved exactly.
SearchResult constrained_local_search(const KernelParams& kp,
                                      const PeriodicProfile& init,
                                      const SearchOptions& opts = {});

// Exhaustive minimization over boundary placements on a uniform grid;
// translation fixed by pinning the first boundary at 0.  m_pairs <= 3.
SearchResult brute_force_min(const KernelParams& kp, int m_pairs, double alpha,
                             double L, int grid_n);

struct RpProbeReport {
    int samples = 0;
    int violations = 0;         // profiles beating Lambda(tau, alpha) - tol
    double min_margin = 0.0;    // min over samples of density - Lambda
    double empirical_c0 = 0.0;  // -min over windows of sum_I r - |I| Lambda(a(I))
    double lambda = 0.0;
    std::vector<std::string> falsifications;  // offending profiles, serialized
};

RpProbeReport rp_probe(const KernelParams& kp, int n_samples, int m_max,
                       double alpha, double L, std::uint64_t seed,
                       double tol = 1e-6);

// Deterministic per-sample generator so results do not depend on scheduling.
PeriodicProfile random_profile(double alpha, double L, int m_max,
                               std::uint64_t seed, std::uint64_t index);

// max over cyclic relabelings and translations of the boundary distance;
// the comparison metric for "same configuration".
double profile_distance(const PeriodicProfile& a, const PeriodicProfile& b);

std::string profile_to_json(const PeriodicProfile& profile,
                            const KernelParams& kp);
std::pair<PeriodicProfile, KernelParams> profile_from_json(const std::string&);

}  // namespace stripes
