#include "nlh/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iterator>

namespace nlh {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'N', 'L', 'H', 'C', 'K', 'P', 'T', '\0'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_doubles(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    buf_.append(s);
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::string path) : buf_(buf), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> get_doubles() {
    const auto n = get<std::uint64_t>();
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw CheckpointError(fmt::format("{}: truncated checkpoint", path_));
  }
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

void put_state(Writer& w, const PopulationState& s) {
  w.put<std::int64_t>(s.time_index);
  w.put_doubles(s.u_plus);
  w.put_doubles(s.u_minus);
}

PopulationState get_state(Reader& r) {
  PopulationState s;
  s.time_index = r.get<std::int64_t>();
  s.u_plus = r.get_doubles();
  s.u_minus = r.get_doubles();
  return s;
}

}  // namespace

std::string checkpoint_path(const std::string& dir, std::int64_t step) {
  return (std::filesystem::path(dir) / fmt::format("ckpt-{}", step)).string();
}

std::string write_checkpoint(const std::string& dir, const Checkpoint& c) {
  Writer w;
  w.bytes().append(kMagic.data(), kMagic.size());
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(c.config_hash);
  put_state(w, c.state);

  w.put<std::uint64_t>(c.series.samples.size());
  for (const auto& s : c.series.samples) {
    w.put<std::int64_t>(s.t);
    w.put<double>(s.e);
  }
  w.put<std::uint8_t>(c.series.t0 ? 1 : 0);
  w.put<std::int64_t>(c.series.t0.value_or(0));

  w.put<std::uint64_t>(c.snapshots.size());
  for (const auto& snap : c.snapshots) {
    w.put<double>(snap.t);
    put_state(w, snap.state);
  }

  w.put<std::uint8_t>(c.health.first_negative_step ? 1 : 0);
  w.put<std::int64_t>(c.health.first_negative_step.value_or(0));
  w.put<double>(c.health.min_density);
  w.put<double>(c.initial_mass);
  w.put_string(c.rng_state);
  w.put<std::uint64_t>(fnv1a(w.bytes()));

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CheckpointError(fmt::format("{}: cannot create directory: {}", dir, ec.message()));

  const std::string path = checkpoint_path(dir, c.state.time_index);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(fmt::format("{}: cannot open for writing", tmp));
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    out.flush();
    if (!out) throw CheckpointError(fmt::format("{}: write failed", tmp));
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw CheckpointError(fmt::format("{}: rename failed: {}", path, ec.message()));
  }
  return path;
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(fmt::format("{}: cannot open checkpoint", path));
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kMagic.size() + sizeof(std::uint64_t) ||
      std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0)
    throw CheckpointError(fmt::format("{}: not a checkpoint file", path));
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(stored), sizeof(stored));
  if (stored != fnv1a(buf.substr(0, buf.size() - sizeof(stored))))
    throw CheckpointError(fmt::format("{}: checksum mismatch", path));

  Reader r(buf, path);
  r.get<std::array<char, 8>>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError(fmt::format("{}: unsupported checkpoint version {}", path, version));

  Checkpoint c;
  c.config_hash = r.get_string();
  c.state = get_state(r);
  const auto samples = r.get<std::uint64_t>();
  c.series.samples.reserve(samples);
  for (std::uint64_t i = 0; i < samples; ++i) {
    ErrorSample s;
    s.t = r.get<std::int64_t>();
    s.e = r.get<double>();
    c.series.samples.push_back(s);
  }
  const bool has_t0 = r.get<std::uint8_t>() != 0;
  const auto t0 = r.get<std::int64_t>();
  if (has_t0) c.series.t0 = t0;

  const auto snaps = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < snaps; ++i) {
    Snapshot s;
    s.t = r.get<double>();
    s.state = get_state(r);
    c.snapshots.push_back(std::move(s));
  }
  const bool has_neg = r.get<std::uint8_t>() != 0;
  const auto neg = r.get<std::int64_t>();
  if (has_neg) c.health.first_negative_step = neg;
  c.health.min_density = r.get<double>();
  c.initial_mass = r.get<double>();
  c.rng_state = r.get_string();
  if (r.pos() != buf.size() - sizeof(stored))
    throw CheckpointError(fmt::format("{}: unexpected trailing bytes", path));
  return c;
}

}  // namespace nlh
