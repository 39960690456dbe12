#pragma once

#include "obsflow/hermite.hpp"
#include "obsflow/numgrid.hpp"

#include <string>

namespace obsflow {

// CSV formats (documented in the README):
//   GridFunction:     "# gridfunction dim=<m> half_extent=<L> points_per_axis=<n>"
//                     header  i0,...,i{m-1},re,im   one row per cell, row-major
//   IndicatorSet:     "# indicatorset ..."  header  i0,...,i{m-1},mask   mask 0/1
//   HermiteExpansion: "# hermiteexpansion dim=<d> lambda=<l> cutoff=<K>"
//                     header  nu0,...,nu{d-1},re,im   graded-lex order

void write_grid_function(const std::string& path, const GridFunction& f);
GridFunction read_grid_function(const std::string& path);

void write_indicator_set(const std::string& path, const IndicatorSet& s);
IndicatorSet read_indicator_set(const std::string& path);

void write_hermite_expansion(const std::string& path, const HermiteExpansion& c);
HermiteExpansion read_hermite_expansion(const std::string& path);

std::string format_double(double v);  // shortest round-trip (%.17g)

}  // namespace obsflow
