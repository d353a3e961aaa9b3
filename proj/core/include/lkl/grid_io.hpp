#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "lkl/grid.hpp"
#include "lkl/sde.hpp"

namespace lkl {

// On-disk layouts. Both are stable; see docs/file_formats.md.
//
// Density CSV                      Density binary (little-endian)
//   # lkl grid density v1            char[8]  "LKLGRD01"
//   dimension,<d>                    u32      d
//   axis,<lo>,<hi>,<cells>  (x d)    d x { f64 lo, f64 hi, u64 cells }
//   time,<t>                         f64      t
//   values,<count>                   u64      count
//   <value>                 (x count, row-major, last axis fastest)
//                                    count x f64
//
// Ensemble CSV                     Ensemble binary (little-endian)
//   # lkl particle ensemble v1       char[8]  "LKLPRT01"
//   dimension,<d>                    u32      d
//   time,<t>                         f64      t
//   seed,<seed>                      u64      seed
//   stream_base,<b>                  u64      stream_base
//   step,<s>                         u64      step
//   positions,<N>                    u64      N
//   <x_0>[,<x_1>...]        (x N)    N x d x f64
//
// Reals in CSV are written with 17 significant digits, so a CSV round trip
// is exact.

void write_density_csv(std::ostream& os, const GridDensity& q);
void write_density_binary(std::ostream& os, const GridDensity& q);
GridDensity read_density_csv(std::istream& is);
GridDensity read_density_binary(std::istream& is);

void write_ensemble_csv(std::ostream& os, const ParticleEnsemble& e);
void write_ensemble_binary(std::ostream& os, const ParticleEnsemble& e);
ParticleEnsemble read_ensemble_csv(std::istream& is);
ParticleEnsemble read_ensemble_binary(std::istream& is);

// Writes through a temporary file in the same directory, then renames it
// over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer,
                       bool binary = false);

}  // namespace lkl
