#pragma once

#include "obsflow/numgrid.hpp"

#include <optional>

namespace obsflow {

// Translations live on the integer lattice {k*h} of cell offsets. The
// overlap function is reported on a doubled grid whose corner coordinate at
// index k is (k-n)h, covering every possible offset of the original window.

// ---------------------------------------------------------------------------
// Overlap function
// ---------------------------------------------------------------------------

/// h_A(w) = |A ∪ (w+A0)| = |A| + |A0| - |A ∩ (w+A0)| at every grid-aligned
/// translation, via FFT cross-correlation rounded to exact pixel counts.
/// Output lives on the doubled grid; real values stored in the real part.
GridFunction overlap_function(const IndicatorSet& a, const IndicatorSet& a0);

/// Exact overlap pixel count |A ∩ (w+A0)| for one translation, by direct
/// counting over the pixels of A0. Independent of the FFT path.
std::int64_t overlap_count_direct(const IndicatorSet& a, const IndicatorSet& a0,
                                  std::span<const int> cell_offset);

/// Doubled-grid index <-> cell-offset translation vector.
std::vector<int> translation_from_doubled_index(const UniformGrid& grid, std::int64_t flat);
std::int64_t doubled_index_from_translation(const UniformGrid& grid, std::span<const int> offset);

// ---------------------------------------------------------------------------
// Translation search (the two-branch dichotomy)
// ---------------------------------------------------------------------------

enum class GrowthBranch { ABranch, BBranch, Both };

struct TranslationSearchResult {
    std::vector<int> w_cells;       // translation in cell offsets
    std::vector<double> w;          // the same in coordinates (offset * h)
    GrowthBranch branch = GrowthBranch::ABranch;
    double epsilon = 0.0;
    double measure_a_before = 0.0, measure_a_after = 0.0;
    double measure_b_before = 0.0, measure_b_after = 0.0;
    bool found_by_level_shell = false;  // lemma plan vs exhaustive fallback
};

/// Find a grid-aligned w with |A ∪ (w+A0)| <= |A|+eps, |B ∪ (w+B0)| <= |B|+eps
/// and at least one strict growth. Search follows the level-shell plan
/// (minimal-norm crossing of h_A past |A|+eps, then the two-case split on
/// h_B with a shrink along the digital ray), falling back to an exhaustive
/// scan so grid feasibility is decided exactly. Returns nullopt when no
/// feasible w exists at this resolution; that is a property of the grid,
/// never silently relaxed.
std::optional<TranslationSearchResult> find_translation(const IndicatorSet& a,
                                                        const IndicatorSet& a0,
                                                        const IndicatorSet& b,
                                                        const IndicatorSet& b0, double eps);

// ---------------------------------------------------------------------------
// Bounded inductive construction
// ---------------------------------------------------------------------------

struct ConstructionStep {
    std::vector<int> w_cells;
    GrowthBranch branch = GrowthBranch::ABranch;
    double epsilon = 0.0;
    double measure_e = 0.0;
    double measure_omega = 0.0;
    // support-transport checks when a probe function is supplied: absolute
    // mass leaks of f_j outside w_j+E_0 (and of the flowed probe outside
    // w_j+Omega_0), plus their deviation from the j = 0 baseline
    double e_leak = 0.0;
    double omega_leak = 0.0;
    double e_transport_delta = 0.0;
    double omega_transport_delta = 0.0;
};

struct ConstructionTrace {
    std::vector<IndicatorSet> sets_e;      // E_0..E_J
    std::vector<IndicatorSet> sets_omega;  // Omega_0..Omega_J
    std::vector<ConstructionStep> steps;
    int budget_exponent = 0;  // N
    bool truncated = false;   // a step found no feasible translation
    double e_leak_baseline = 0.0;      // mass of f0 outside E_0
    double omega_leak_baseline = 0.0;  // mass of S_t f0 outside Omega_0
};

/// Grow E_j = E_{j-1} ∪ (w_j + E_0), Omega_j likewise, with budgets
/// eps_j = 2^{-(j+N)}. When f0 is supplied (with flow parameters lambda, t),
/// the twisted-translated probes f_j are built and the translated-support
/// mass leaks are compared against the baseline leaks of f_0.
ConstructionTrace iterate_construction(const IndicatorSet& e0, const IndicatorSet& omega0,
                                       int budget_exponent, int steps,
                                       const GridFunction* f0 = nullptr, double lambda = 1.0,
                                       double t = 1.0);

}  // namespace obsflow
