#pragma once

#include "obsflow/numgrid.hpp"
#include "obsflow/propagator.hpp"

namespace obsflow {

// The twisted algebra works on C^d realized as a 2d-dimensional real grid.
// All phase factors, kernels and translations are evaluated on the cell
// CORNER lattice -L + j*h, which is closed under differences; this makes the
// commutation/intertwining/adjoint identities exact in pixel arithmetic.
// (Cell centers are not difference-closed: sums and differences of
// half-integer lattice points land between cells.)

/// Kernel value of the twisted Schrödinger flow at a point z in R^{2d}:
///   (4 pi)^{-d} i^{-d} (lambda/sin(lambda tau))^d exp(i lambda |z|^2 cot(lambda tau)/4).
/// The i^{-d} phase on top of the positive normalization is forced by the
/// group law (kernel at -tau must be the adjoint of the kernel at tau).
/// tau may be any real with lambda*tau not in pi Z.
cplx twisted_kernel_value(double lambda, double tau, int d, double norm_sq_z);

/// Constant modulus of the kernel: (4 pi)^{-d} |lambda/sin(lambda tau)|^d.
double twisted_kernel_modulus(double lambda, double tau, int d);

/// The kernel sampled on a 2d-dimensional grid (at corner points).
struct TwistedKernel {
    double lambda = 1.0;
    double t = 1.0;
    int d = 1;
    double normalization = 0.0;  // |c_d| = (4 pi)^{-d}
    GridFunction values;
};

TwistedKernel schrodinger_kernel(const PropagatorParams& p, const UniformGrid& grid);

/// lambda-twisted convolution of two sampled functions by direct double sum,
/// zero-padded outside the window. Inputs must be localized: the support
/// guard requires all but 1e-8 of the L2 mass inside the inner 3/4 window.
GridFunction twisted_convolve(const GridFunction& g, const GridFunction& h, double lambda);

/// lambda-twisted translation by a grid-aligned vector w (integer multiple
/// of the spacing per axis): unimodular phase times an exact cell shift.
GridFunction twisted_translate(const GridFunction& g, std::span<const double> w, double lambda);

/// Snap a vector to the translation lattice (integer multiples of spacing).
std::vector<double> snap_to_lattice(const UniformGrid& grid, std::span<const double> w);

/// The flow S_t applied by streaming the closed-form kernel over the input
/// support (the bounded-kernel form of the twisted convolution). `tau` is
/// signed; the inverse flow is the same routine at -tau.
GridFunction propagate_special_hermite(const GridFunction& u0, const PropagatorParams& p);
GridFunction propagate_special_hermite_signed(const GridFunction& u0, double lambda, double tau,
                                              int d);

/// L2 mass fraction of f outside the centered box of the given half extent.
double mass_fraction_outside(const GridFunction& f, double box_half_extent);

}  // namespace obsflow
