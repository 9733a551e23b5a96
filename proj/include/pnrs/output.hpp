#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnrs/waves.hpp"

namespace pnrs {

// Shortest round-trippable decimal form; identical inputs give identical
// bytes, which is what makes the CSV determinism contract checkable.
std::string csv_num(double v);

void ensure_dir(const std::string& path);
void write_text(const std::string& path, const std::string& content);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Binary field snapshot: magic "PNRS", u32 version, u32 mode tag, u32 rank,
// rank u32 extents, then doubles little-endian in row-major order. A JSON
// sidecar at path + ".json" carries the grid metadata.
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotData {
  std::uint32_t version = kSnapshotVersion;
  std::uint32_t mode = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

void write_snapshot(const std::string& path, const Trajectory& traj);
SnapshotData read_snapshot(const std::string& path);

struct RunManifest {
  std::string experiment;
  std::uint64_t config_hash = 0;
  std::string version = "pnrs 1.0.0";
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::string> notes;

  void write(const std::string& path) const;
};

}  // namespace pnrs
