#include "bohm/app/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <memory>
#include <sstream>

#include "bohm/trajectories.hpp"

namespace bohm::app {

namespace {

constexpr char kMagic[8] = {'B', 'O', 'H', 'M', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kEndianMarker = 0x01020304;
constexpr std::size_t kHeaderSize = 8 + 4 * 4 + 9 * 8 + 8;

template <class T>
void put(std::vector<char>& buf, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xffu));
}

template <class T>
T take(const char*& p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  p += sizeof(T);
  return std::bit_cast<T>(u);
}

std::vector<char> header(const GridSpec& g, const PhysParams& p, double dt_snap, std::uint64_t count) {
  std::vector<char> buf(kMagic, kMagic + 8);
  put(buf, kSnapshotFormatVersion);
  put(buf, kEndianMarker);
  put(buf, static_cast<std::uint32_t>(g.n));
  put(buf, std::uint32_t{0});
  for (double v : {g.half_width, p.mass, p.omega_x, p.omega_y, p.kappa, p.alpha, p.beta, p.hbar, dt_snap}) put(buf, v);
  put(buf, count);
  return buf;
}

struct DigestDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 unavailable");
  }
  void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_.get(), data, size); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(digits[md[i] >> 4]);
      out.push_back(digits[md[i] & 15]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx_;
};

}  // namespace

SnapshotWriter::SnapshotWriter(const std::filesystem::path& path, const GridSpec& grid, const PhysParams& params,
                               double dt_snap, std::uint64_t count)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), grid_(grid), count_(count) {
  if (!out_) throw IoError("cannot write " + path.string());
  const auto h = header(grid, params, dt_snap, count);
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
}

void SnapshotWriter::append(const WaveField& field) {
  if (!(field.grid == grid_)) throw std::invalid_argument("snapshot writer: grid mismatch");
  if (written_ == count_) throw std::logic_error("snapshot writer: more records than announced");
  buffer_.clear();
  buffer_.reserve(8 + 16 * field.values.size());
  put(buffer_, field.t);
  for (const Complex& v : field.values) {
    put(buffer_, v.real());
    put(buffer_, v.imag());
  }
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw IoError("write failed: " + path_.string());
  ++written_;
}

void SnapshotWriter::close() {
  out_.close();
  if (!out_) throw IoError("write failed: " + path_.string());
  if (written_ != count_)
    throw IoError(path_.string() + ": " + std::to_string(written_) + " of " + std::to_string(count_) +
                  " snapshots written");
}

void write_snapshots(const std::filesystem::path& path, const SnapshotSeries& series) {
  SnapshotWriter w(path, series.grid, series.params, series.dt_snap, series.snapshots.size());
  for (const auto& f : series.snapshots) w.append(f);
  w.close();
}

SnapshotSeries read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<char> head(kHeaderSize);
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  if (in.gcount() != static_cast<std::streamsize>(head.size()) || std::memcmp(head.data(), kMagic, 8) != 0)
    throw SchemaError(path.string() + " is not a snapshot file");
  const char* p = head.data() + 8;
  const auto version = take<std::uint32_t>(p);
  const auto marker = take<std::uint32_t>(p);
  if (marker != kEndianMarker) throw SchemaError(path.string() + ": bad endianness marker");
  if (version != kSnapshotFormatVersion)
    throw SchemaError(path.string() + ": unsupported format version " + std::to_string(version));
  SnapshotSeries s;
  s.grid.n = static_cast<int>(take<std::uint32_t>(p));
  take<std::uint32_t>(p);
  s.grid.half_width = take<double>(p);
  s.params.mass = take<double>(p);
  s.params.omega_x = take<double>(p);
  s.params.omega_y = take<double>(p);
  s.params.kappa = take<double>(p);
  s.params.alpha = take<double>(p);
  s.params.beta = take<double>(p);
  s.params.hbar = take<double>(p);
  s.dt_snap = take<double>(p);
  const auto count = take<std::uint64_t>(p);
  try {
    s.grid.validate();
    s.params.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  const std::size_t cells = static_cast<std::size_t>(s.grid.n) * s.grid.n;
  const std::uintmax_t expected = kHeaderSize + count * (8 + 16 * cells);
  if (std::filesystem::file_size(path) != expected)
    throw SchemaError(path.string() + ": size does not match " + std::to_string(count) + " snapshots");
  std::vector<char> rec(8 + 16 * cells);
  for (std::uint64_t k = 0; k < count; ++k) {
    in.read(rec.data(), static_cast<std::streamsize>(rec.size()));
    if (!in) throw IoError("read failed: " + path.string());
    const char* q = rec.data();
    WaveField f;
    f.grid = s.grid;
    f.params = s.params;
    f.t = take<double>(q);
    f.values.resize(cells);
    for (auto& v : f.values) {
      const double re = take<double>(q);
      v = Complex(re, take<double>(q));
    }
    s.snapshots.push_back(std::move(f));
  }
  return s;
}

void Manifest::add(const std::string& key, const std::string& value) {
  if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
    throw std::invalid_argument("manifest entries must be single-line key=value");
  entries_.emplace_back(key, value);
}

void Manifest::add(const std::string& key, double value) { add(key, format_number(value)); }

std::string Manifest::find(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->first == key) return it->second;
  return {};
}

std::string Manifest::text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void Manifest::write(const std::filesystem::path& path) const { write_text(path, text()); }

Manifest Manifest::read(const std::filesystem::path& path) {
  Manifest m;
  std::istringstream is(read_text(path));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SchemaError(path.string() + ": malformed manifest line '" + line + "'");
    m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_history_csv(std::ostream& os, const std::vector<NormSample>& history) {
  os << "t,norm,energy\n";
  for (const auto& h : history)
    os << format_number(h.t) << ',' << format_number(h.norm) << ',' << format_number(h.energy) << '\n';
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, std::string_view header) {
  std::istringstream is(read_text(path));
  std::string line;
  if (!std::getline(is, line) || line != header)
    throw SchemaError(path.string() + ": expected CSV header '" + std::string(header) + "'");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (row.size() != columns) throw SchemaError(path.string() + ": malformed row '" + line + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bohm::app
