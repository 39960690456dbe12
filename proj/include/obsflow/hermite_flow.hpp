#pragma once

#include "obsflow/frft.hpp"
#include "obsflow/hermite.hpp"
#include "obsflow/observability.hpp"
#include "obsflow/propagator.hpp"

namespace obsflow {

// ---------------------------------------------------------------------------
// The flow e^{it H(lambda)}, H(lambda) = -Laplacian + lambda^2 |x|^2
// ---------------------------------------------------------------------------

/// Spectral route: coefficient at nu gains e^{i t (2|nu|+d) |lambda|}.
/// Exact unitary map on coefficients, defined for every t.
HermiteExpansion propagate_hermite_spectral(const HermiteExpansion& c,
                                            const PropagatorParams& p);

/// Same flow on the grid through the expansion at scale lambda.
GridFunction propagate_hermite_spectral_grid(const GridFunction& u0, const PropagatorParams& p,
                                             int cutoff);

/// Fractional-Fourier route: u(x,t) = e^{itd|lambda|} F_{-2|lambda|t}[f_lambda](sqrt|lambda| x)
/// with f_lambda = u0(./sqrt|lambda|). The dilations are exact metadata
/// changes of the grid (the sample array carries over verbatim), so the two
/// routes stay independent computations of the same function.
GridFunction propagate_hermite_frft(const GridFunction& u0, const PropagatorParams& p,
                                    int cutoff);

// ---------------------------------------------------------------------------
// Two-point observability experiment (masked flow on R^d)
// ---------------------------------------------------------------------------

struct HermiteObservabilityReport {
    ObservabilityReport base;
    // set measures after the sqrt(|lambda|) rescaling used by the reduction
    // to the fractional Fourier transform
    double scaled_measure_a = 0.0;
    double scaled_measure_b = 0.0;
    double frft_order = 0.0;  // -2 |lambda| t
};

/// sigma of f -> 1_B U_t (1_A f) with U_t the spectral flow truncated at
/// `cutoff`; adjoint is 1_A U_{-t} 1_B. Ratios use the unmasked flow.
HermiteObservabilityReport hermite_observability_experiment(
    const std::vector<GridFunction>& samples, const PropagatorParams& p,
    const IndicatorSet& set_a, const IndicatorSet& set_b, int cutoff);

}  // namespace obsflow
