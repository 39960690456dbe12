#pragma once

#include <cmath>
#include <stdexcept>

namespace obsflow {

/// Tolerance for classifying a phase against multiples of pi. Below
/// double-precision phase noise at the grid scales used here.
inline constexpr double kResonanceTol = 1e-9;

double dist_to_pi_multiples(double x);

/// Flow parameters (lambda, t, d) with validity classification against the
/// pi Z resonances. Flags are computed on demand, never stored.
struct PropagatorParams {
    double lambda = 1.0;
    double t = 1.0;
    int d = 1;

    PropagatorParams(double lambda_, double t_, int d_) : lambda(lambda_), t(t_), d(d_) {
        if (lambda == 0.0) throw std::invalid_argument("PropagatorParams: lambda must be nonzero");
        if (!(t > 0.0)) throw std::invalid_argument("PropagatorParams: t must be positive");
        if (d < 1) throw std::invalid_argument("PropagatorParams: dimension must be >= 1");
    }

    /// 2|lambda| t not within tolerance of pi Z (Hermite flow hypothesis).
    bool hermite_valid() const;
    /// |lambda| t not within tolerance of pi Z (twisted kernel exists).
    bool special_valid() const;
};

}  // namespace obsflow
