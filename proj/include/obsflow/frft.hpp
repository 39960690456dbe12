#pragma once

#include "obsflow/hermite.hpp"
#include "obsflow/numgrid.hpp"
#include "obsflow/propagator.hpp"

namespace obsflow {

// ---------------------------------------------------------------------------
// Order classification
// ---------------------------------------------------------------------------

enum class OrderClass { Generic, EvenPiMultiple, OddPiMultiple };

struct FrftOrder {
    double alpha = 0.0;
    OrderClass classification = OrderClass::Generic;
};

FrftOrder classify_order(double alpha);

/// Chirp prefactor data for a generic order: |c_alpha| = |sin a|^{-1/2} per
/// axis and the unimodular chirp gamma_a(x) = exp(-i pi |x|^2 cot a).
struct ChirpFactors {
    cplx c_alpha;       // per-axis constant
    double cot_alpha;
    double sin_alpha;
};

ChirpFactors chirp_factors(double alpha);

// ---------------------------------------------------------------------------
// Spectral route (authoritative)
// ---------------------------------------------------------------------------

/// Phase e^{-i k alpha} on the degree-k coefficients. Requires the unit-scale
/// basis (lambda = 1); rescale through the substitution trick first otherwise.
HermiteExpansion frft_spectral(const HermiteExpansion& c, double alpha);

/// Spectral route lifted to the grid: analyze -> phase -> synthesize.
/// Orders in pi Z take the exact special cases (identity / parity).
GridFunction frft_grid(const GridFunction& f, double alpha, int cutoff);

/// Exact parity f(-x) by index reversal (cell-centered grids reflect onto
/// themselves).
GridFunction grid_parity(const GridFunction& f);

// ---------------------------------------------------------------------------
// Chirp route + calibration
// ---------------------------------------------------------------------------

/// Convention reconciliation between the chirp-FFT form and the spectral
/// form: a coordinate dilation `scale` and one global phase per sign class
/// of sin(alpha), measured against the spectral route on the probe basis.
struct ChirpCalibration {
    double scale = 1.0;        // sigma: dilation conjugating the 2pi-convention transform
    cplx phase_pos{1.0, 0.0};  // residual global phase, sin(alpha) > 0
    cplx phase_neg{1.0, 0.0};  // residual global phase, sin(alpha) < 0
    double max_residual = 0.0; // worst probe rel-L2 residual after correction
    std::vector<double> probe_residuals;
};

/// Runs the probe-based calibration (deterministic). Throws if the residual
/// after correction exceeds 1e-4, which would mean a convention bug.
ChirpCalibration calibrate_conventions();

/// Cached calibration shared by frft_chirp.
const ChirpCalibration& chirp_calibration();

/// Chirp-multiply, scaled discrete Fourier transform at xi/sin(alpha),
/// chirp-multiply, prefactor — with the calibration dilation and phase
/// applied. Direct O(n^2) per axis. Generic orders only.
GridFunction frft_chirp(const GridFunction& f, double alpha);
GridFunction frft_chirp(const GridFunction& f, double alpha, const ChirpCalibration& cal);

// ---------------------------------------------------------------------------
// Certified pair-restriction constant
// ---------------------------------------------------------------------------

/// Certificate for the masked transform g -> 1_{A_beta} F_{beta-alpha}[1_{A_alpha} g]:
/// top singular value, the certified constant 2((1-sigma)^{-1}+1)^2, and the
/// norm identities of the underlying proof chain checked two ways.
struct FrftCertificate {
    double sigma = 0.0;
    double certified_constant = 0.0;
    double delta = 0.0;
    double measure_a = 0.0;
    double measure_b = 0.0;
    // |phi| = |F_alpha f| identity and the complement-norm identity,
    // evaluated on a Gaussian probe
    double norm_identity_rel = 0.0;
    double chain_direct = 0.0;
    double chain_rescaled = 0.0;
    double chain_rel_diff = 0.0;
};

FrftCertificate frft_nazarov_certificate(const IndicatorSet& set_alpha,
                                         const IndicatorSet& set_beta, double alpha,
                                         double beta, int cutoff);

}  // namespace obsflow
