#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bifluid/grid.hpp"
#include "bifluid/picard.hpp"
#include "bifluid/spectra.hpp"

// CSV and JSON persistence. All floating-point CSV output uses 17
// significant digits so that re-reading reproduces the exact double.

namespace bifluid::io {

std::string format_double(double v);

// node index, coordinates, then one column per field
void write_fields_csv(const std::filesystem::path& path, const Grid& grid,
                      const std::vector<std::pair<std::string, const ScalarField*>>& cols);
void write_state_csv(const std::filesystem::path& path, const ScalarField& r,
                     const ScalarField& q, const VectorField& v);

struct LoadedState {
    ScalarField r, q;
    VectorField v;
};
LoadedState read_state_csv(const std::filesystem::path& path, GridPtr g);

void write_series_csv(const std::filesystem::path& path,
                      const std::vector<picard::SeriesRow>& rows);
void write_trace_csv(const std::filesystem::path& path,
                     const picard::IterationTrace& trace);
void write_resolvent_csv(const std::filesystem::path& path,
                         const std::vector<spectra::ResolventSample>& samples);
void write_spectrum_csv(const std::filesystem::path& path,
                        const std::vector<std::complex<double>>& eigenvalues);

void save_checkpoint(const std::filesystem::path& path, const picard::Checkpoint& cp);
picard::Checkpoint load_checkpoint(const std::filesystem::path& path, GridPtr g);

} // namespace bifluid::io
