#include "pnrs/output.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace pnrs {

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + path + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string body;
  for (size_t i = 0; i < header.size(); ++i) body += (i ? "," : "") + header[i];
  body += "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) body += ",";
      body += csv_num(row[i]);
    }
    body += "\n";
  }
  write_text(path, body);
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_f64(std::string& s, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int k = 0; k < 8; ++k) s.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(const std::string& s, size_t& off) {
  if (off + 4 > s.size()) throw std::runtime_error("snapshot truncated");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + k])) << (8 * k);
  off += 4;
  return v;
}

double get_f64(const std::string& s, size_t& off) {
  if (off + 8 > s.size()) throw std::runtime_error("snapshot truncated");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[off + k])) << (8 * k);
  off += 8;
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_snapshot(const std::string& path, const Trajectory& traj) {
  const GridSpec& g = traj.grid;
  std::string s = "PNRS";
  put_u32(s, kSnapshotVersion);
  put_u32(s, static_cast<std::uint32_t>(g.mode));
  put_u32(s, 3);
  put_u32(s, static_cast<std::uint32_t>(traj.slices.size()));
  put_u32(s, static_cast<std::uint32_t>(g.n_r));
  put_u32(s, static_cast<std::uint32_t>(g.n_theta));
  for (const auto& slice : traj.slices)
    for (int i = 0; i < g.n_r; ++i)
      for (int j = 0; j < g.n_theta; ++j) put_f64(s, slice(i, j));
  write_text(path, s);

  nlohmann::json meta;
  meta["n_r"] = g.n_r;
  meta["n_theta"] = g.n_theta;
  meta["r_lo"] = g.r_lo;
  meta["r_hi"] = g.r_hi;
  meta["t_min"] = g.t_min;
  meta["t_max"] = g.t_max;
  meta["cfl"] = g.cfl;
  meta["dt"] = traj.dt;
  meta["times"] = traj.times;
  meta["blew_up"] = traj.blew_up;
  meta["layout"] = "slices x n_r x n_theta, row-major, f64 little-endian";
  write_text(path + ".json", meta.dump(2) + "\n");
}

SnapshotData read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path + "'");
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (s.size() < 4 || s.compare(0, 4, "PNRS") != 0)
    throw std::runtime_error("bad snapshot magic in '" + path + "'");
  size_t off = 4;
  SnapshotData d;
  d.version = get_u32(s, off);
  d.mode = get_u32(s, off);
  const std::uint32_t rank = get_u32(s, off);
  std::uint64_t count = 1;
  for (std::uint32_t k = 0; k < rank; ++k) {
    d.dims.push_back(get_u32(s, off));
    count *= d.dims.back();
  }
  d.data.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) d.data.push_back(get_f64(s, off));
  return d;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["experiment"] = experiment;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  j["config_hash"] = hex;
  j["version"] = version;
  j["wall_seconds"] = wall_seconds;
  j["seed"] = seed;
  j["files"] = files;
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& [id, pass] : checks) cj.push_back({{"id", id}, {"pass", pass}});
  j["checks"] = cj;
  j["notes"] = notes;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace pnrs
