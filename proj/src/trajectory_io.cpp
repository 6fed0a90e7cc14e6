#include "ergo/trajectory_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ergo {

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError("trajectory file truncated");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  os.write("ERGT", 4);
  put_le<std::uint16_t>(os, kTrajectoryFormatVersion);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(traj.dim));
  put_le<double>(os, traj.sample_spacing());
  put_le<std::uint64_t>(os, traj.size());
  put_le<std::uint64_t>(os, traj.seed);
  put_le<std::uint64_t>(os, traj.stream);
  for (double v : traj.states) put_le<double>(os, v);
  if (!os) throw Error("failed writing trajectory");
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_trajectory(os, traj);
}

Trajectory read_trajectory(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "ERGT", 4) != 0) {
    throw FormatError("not an ERGT trajectory file");
  }
  const auto version = get_le<std::uint16_t>(is);
  if (version != kTrajectoryFormatVersion) {
    throw FormatError("unsupported ERGT version " + std::to_string(version));
  }
  Trajectory tr;
  tr.dim = get_le<std::uint16_t>(is);
  if (tr.dim < 1 || tr.dim > kMaxDim) throw FormatError("ERGT dimension out of range");
  tr.dt = get_le<double>(is);
  const auto count = get_le<std::uint64_t>(is);
  tr.seed = get_le<std::uint64_t>(is);
  tr.stream = get_le<std::uint64_t>(is);
  tr.record_stride = 1;
  tr.states.resize(count * static_cast<std::uint64_t>(tr.dim));
  for (auto& v : tr.states) v = get_le<double>(is);
  tr.steps_completed = count > 0 ? count - 1 : 0;
  return tr;
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_trajectory(is);
}

}  // namespace ergo
