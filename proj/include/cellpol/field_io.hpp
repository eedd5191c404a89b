#pragma once

#include <string>

#include "cellpol/bulk.hpp"
#include "cellpol/surface_field.hpp"

namespace cellpol {

// PSF1: "PSF1", u32 L, nlat, nlon, nlat*nlon f64 values (latitude-major),
// (L+1)^2 f64 coefficients.  All little-endian.
void write_psf1(const std::string& path, const SurfaceField& f);
// Rejects bad magic, truncated or oversized files, grids that do not match
// the header, and files whose values are not the synthesis of their
// coefficients.  The grid is rebuilt from the header.
SurfaceField read_psf1(const std::string& path);

// PBF1: "PBF1", u32 L, nlat, nlon, nr, then (L+1)^2 radial profiles of nr f64.
void write_pbf1(const std::string& path, const BulkField& w);
BulkField read_pbf1(const std::string& path);

}  // namespace cellpol
