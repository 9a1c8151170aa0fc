#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bohm/tdse.hpp"

namespace bohm::app {

/// File system or file format failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input file does not have the layout the requested operation expects.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Binary snapshot container, little-endian throughout:
///   "BOHMSNAP" | u32 version | u32 0x01020304 | u32 n | u32 0
///   | f64 half_width, mass, omega_x, omega_y, kappa, alpha, beta, hbar, dt_snap
///   | u64 count
///   | count x (f64 t | n*n x (f64 re, f64 im), row-major)
inline constexpr std::uint32_t kSnapshotFormatVersion = 1;

class SnapshotWriter {
 public:
  SnapshotWriter(const std::filesystem::path& path, const GridSpec& grid, const PhysParams& params, double dt_snap,
                 std::uint64_t count);
  void append(const WaveField& field);
  /// Throws IoError when fewer records than announced were written.
  void close();
  std::uint64_t written() const { return written_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  GridSpec grid_;
  std::uint64_t count_;
  std::uint64_t written_ = 0;
  std::vector<char> buffer_;
};

void write_snapshots(const std::filesystem::path& path, const SnapshotSeries& series);
/// Reads the whole file; the solver settings and history are not part of it.
SnapshotSeries read_snapshots(const std::filesystem::path& path);

/// Ordered key=value text file.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string find(const std::string& key) const;
  std::string text() const;
  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// `t,norm,energy`
void write_history_csv(std::ostream& os, const std::vector<NormSample>& history);

/// Rows of a CSV file with the expected header; throws SchemaError otherwise.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, std::string_view header);

}  // namespace bohm::app
