#pragma once

// Discrete periodic-grid realization of the d-dimensional functional.
//
// The kernel is discretized by the midpoint rule per cell offset and summed
// over ALL periodic images in closed form: per-axis folding reduces the
// image lattice to certified 1D power sums, so the cell weight table W, the
// boundary moment M and the one-sided reduced kernel KF carry certified
// truncation bounds instead of a hard cutoff radius.  The slicing
// decomposition (r, v, w terms) is evaluated with the same tables, which
// makes energy == decomposition an exact identity for d = 2 and keeps the
// d = 3 slack nonnegative up to table tails.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stripes/kernel.hpp"

namespace stripes {

struct GridSet {
    int d = 2;
    int n = 0;          // cells per side
    double L = 1.0;     // box size
    std::vector<std::uint8_t> occ;  // n^d cells, row-major, periodic

    double delta() const { return L / n; }
    std::size_t size() const { return occ.size(); }
    double alpha() const;
    int occupied_count() const;

    // row-major index; coordinates are taken modulo n
    std::size_t index(std::array<int, 3> c) const;
    void validate() const;
};

GridSet make_stripes(int d, int n, double alpha, int period_cells,
                     int direction);
GridSet make_checkerboard(int d, int n, int cell);
GridSet make_disc(int n, double alpha);  // d = 2
GridSet make_random(int d, int n, double alpha, std::uint64_t seed);

struct GridEnergy {
    double value = 0.0;
    double per1 = 0.0;
    std::array<double, 3> per_i{};  // anisotropic perimeter per direction
    double repulsion = 0.0;         // kernel-weighted overlap term
    double tail_bound = 0.0;        // certified table truncation
};

struct DecompositionReport {
    std::array<double, 3> r_total{}, v_total{}, w_total{};
    double rhs_total = 0.0;
    double energy = 0.0;
    double slack = 0.0;  // energy - rhs_total; >= -tails, == 0 for stripes
};

struct StripeDistance {
    int direction = 0;
    double eta = 0.0;
    double value = 0.0;  // normalized L1 distance in [0, 1]
};

struct RegionParams {
    int l_cells = 8;      // cube side in cells
    double eta = 0.0;     // minimal stripe spacing, length units
    double delta = 0.1;   // closeness threshold
    double rho = 0.0;     // enlargement radius of the high-distance set
    double enlarge_mixed = 1.0;  // enlargement of the two-direction set
};

struct RegionLabels {
    int n = 0, d = 2;
    std::vector<std::int8_t> label;  // -1: mixed, 0: far-from-stripes, i>0: A_i
    std::vector<std::string> ambiguities;
    std::array<int, 5> counts{};  // [mixed, none, A_1, A_2, A_3]
};

class GridEvaluator {
  public:
    GridEvaluator(const KernelParams& kp, int d, int n, double L);

    const KernelParams& params() const { return kp_; }
    int n() const { return n_; }
    double L() const { return L_; }
    double delta() const { return delta_; }
    double moment() const { return M_; }
    double w_total() const { return Wtot_; }
    const std::vector<double>& weights() const { return W_; }
    double weight_at(std::array<int, 3> off) const;
    double kf(int j) const { return KF_[j]; }  // j in [1, n]
    double table_tail() const { return table_tail_; }

    GridEnergy energy(const GridSet& g) const;
    DecompositionReport decomposition(const GridSet& g) const;

    // per-direction localized energy on the cube of side l_cells whose low
    // corner is at `corner`; fills d values (mean over all corners of the
    // total reproduces the decomposition right-hand side exactly)
    std::vector<double> f_bar_local(const GridSet& g,
                                    std::array<int, 3> corner,
                                    int l_cells) const;

    // cached per-face r and v values and per-cell w values for f_bar scans
    struct DecompositionDetail {
        // face (x, x + e_i) keyed by the cell x; non-boundary faces hold 0
        std::vector<std::vector<double>> r_face, v_face;  // [dir][cell]
        std::vector<std::vector<double>> w_cell;          // [dir][cell]
        DecompositionReport report;
    };
    DecompositionDetail decomposition_detail(const GridSet& g) const;

  private:
    KernelParams kp_;
    int d_, n_;
    double L_, delta_;
    std::vector<double> W_;   // folded kernel mass per offset cell, W_[0] = 0
    std::vector<double> KF_;  // one-sided folded reduced kernel, index 1..n
    double M_ = 0.0;          // lattice moment  sum_nu |nu_i| K(nu dlt) dlt^{d+1}
    double Wtot_ = 0.0;
    double table_tail_ = 0.0;
};

// localized energy from a precomputed decomposition (cheap per window)
std::vector<double> f_bar_from_detail(
    const GridEvaluator::DecompositionDetail& det, const GridSet& g,
    std::array<int, 3> corner, int l_cells);

// L1 distance of the window to the nearest admissible stripe set in the given
// direction: columns averaged over the perpendicular coordinates, then a
// run-length-constrained DP (interior runs >= eta, edge runs exempt).
StripeDistance stripe_distance(const GridSet& g, std::array<int, 3> corner,
                               std::array<int, 3> extent, int direction,
                               double eta);
// min over directions on the full box
StripeDistance stripe_distance_min(const GridSet& g, double eta);

RegionLabels classify_regions(const GridSet& g, const RegionParams& rp);

struct LipschitzReport {
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
    int pairs = 0;
};

LipschitzReport lipschitz_probe(const GridSet& g, int l_cells, double eta,
                                int n_pairs, std::uint64_t seed);

struct AnnealSchedule {
    long long moves = 2'000'000;
    double t_start = 0.25;
    double t_end = 0.01;
    double hold_fraction = 0.3;   // fraction of moves held at t_start
    double p_boundary = 0.8;      // boundary-adjacent swap share
    int chains = 1;               // independent chains; best final energy wins
    long long trace_every = 20'000;
    long long check_every = 10'000;  // incremental-vs-full audit interval
    double eta_trace = 0.0;          // eta for traced stripe distances
};

struct AnnealTraceRow {
    long long move;
    double energy;
    double d_eta;
    double temperature;
};

struct AnnealResult {
    GridSet grid;                // best final configuration
    double energy = 0.0;
    int winning_chain = 0;
    double max_incremental_error = 0.0;  // worst audit discrepancy
    std::vector<AnnealTraceRow> trace;   // winning chain
};

AnnealResult anneal(const GridEvaluator& ev, double alpha,
                    const AnnealSchedule& schedule, std::uint64_t seed);

// stripe period of the dominant direction, in cells (2 * n / boundary count
// of the thresholded column profile); 0 if no boundaries
double estimate_period_cells(const GridSet& g, int direction);

// serialization: portable binary (magic "SGRD") and a JSON debug form
std::vector<std::uint8_t> grid_to_binary(const GridSet& g,
                                         const KernelParams& kp);
std::pair<GridSet, KernelParams> grid_from_binary(
    const std::vector<std::uint8_t>& data);
std::string grid_to_json(const GridSet& g, const KernelParams& kp);
std::pair<GridSet, KernelParams> grid_from_json(const std::string& text);

}  // namespace stripes
