#pragma once

// Snapshot archives.
//
//   <name>.json          header: format, system tag, parameter names, dt, t0,
//                        provenance, endianness, and one entry per mu with its
//                        shape [N_t, N_u] and payload file names
//   <name>.<i>.u.f64     raw little-endian f64, row-major N_t x N_u
//   <name>.<i>.udot.f64  same layout, optional
//
// Loading validates the header against the payloads and fills in
// backward-difference derivatives when an entry has none.

#include <filesystem>

#include "thermorom/systems.hpp"

namespace thermorom {

/// `header` is the .json path; payloads are written next to it.
void save_snapshots(const std::filesystem::path& header, const TrajectoryDataset& data);
TrajectoryDataset load_snapshots(const std::filesystem::path& header);

/// One row per snapshot: trajectory, mu..., t, u_0..u_{N_u-1}.
void export_csv(const std::filesystem::path& path, const TrajectoryDataset& data);

}  // namespace thermorom
