#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "metaworld/evolution.hpp"
#include "metaworld/wavefunction.hpp"
#include "metaworld/worlds.hpp"

namespace metaworld::io {

// Binary snapshot container, little-endian:
//
//   magic    8 bytes  "MWSNAP01"
//   kind     u32      0 = wavefunction, 1 = world ensemble
//   dims     u32
//   per dim  u64 n, f64 lo, f64 hi
//   kind 0:  u32 components, f64 time_tag,
//            payload components x cells x (f64 re, f64 im), row-major per component
//   kind 1:  u64 count, f64 time, f64 birth_time, u64 seed,
//            u64 ids[count], u8 alive[count], f64 positions[count*dims],
//            f64 unwrapped[count*dims]
//
// Ensembles carry the grid they were sampled on so readers can bin them.

void write_wavefunction(const std::filesystem::path& path, const Wavefunction& psi);
Wavefunction read_wavefunction(const std::filesystem::path& path);

void write_ensemble(const std::filesystem::path& path, const WorldEnsemble& ensemble,
                    const Grid& grid);
WorldEnsemble read_ensemble(const std::filesystem::path& path, Grid* grid = nullptr);

/// Shortest round-trip decimal representation.
std::string format_number(double value);

/// q_1..q_D, re_0, im_0[, re_1, im_1] per cell.
void write_wavefunction_csv(const std::filesystem::path& path, const Wavefunction& psi);
/// time,norm,edge_mass,continuity_summary
void write_evolution_log_csv(const std::filesystem::path& path, const EvolutionLog& log);
struct TrajectoryCsvOptions {
  std::size_t max_worlds = 0;   // 0 writes every world; otherwise the first max_worlds
  std::size_t time_stride = 1;  // every n-th recorded time (the last is always written)
  bool unwrapped = false;
};
/// world_id,t,q_1..q_D,alive, one row per world per written time.
void write_trajectories_csv(const std::filesystem::path& path, const TrajectoryRecord& record,
                            const WorldEnsemble& ensemble, const TrajectoryCsvOptions& options = {});
/// x_1..x_A,density
void write_field_csv(const std::filesystem::path& path, const RealField& field,
                     const std::string& value_name);

/// Minimal CSV reader: header names and numeric rows. Throws on malformed input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace metaworld::io
