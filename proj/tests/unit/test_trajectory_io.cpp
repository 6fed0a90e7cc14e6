#include "ergo/trajectory_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

using namespace ergo;

namespace {

Trajectory sample() {
  SimConfig c;
  c.dt = 1e-3;
  c.steps = 100;
  c.record_stride = 5;
  c.x0 = make_vec({1, 2, 3});
  c.seed = 0xDEADBEEFCAFEULL;
  return simulate_path(build_heisenberg(DriftSpec::ou(1.0)), c, 12);
}

template <class T>
T read_le(const std::string& s, std::size_t off) {
  T v;
  std::memcpy(&v, s.data() + off, sizeof(T));
  return v;
}

}  // namespace

TEST(Ergt, HeaderLayout) {
  const auto tr = sample();
  std::ostringstream os;
  write_trajectory(os, tr);
  const std::string s = os.str();
  ASSERT_EQ(s.size(), 4 + 2 + 2 + 8 + 8 + 8 + 8 + tr.states.size() * 8);
  EXPECT_EQ(s.substr(0, 4), "ERGT");
  EXPECT_EQ(read_le<std::uint16_t>(s, 4), kTrajectoryFormatVersion);
  EXPECT_EQ(read_le<std::uint16_t>(s, 6), 3);
  EXPECT_DOUBLE_EQ(read_le<double>(s, 8), 5e-3);
  EXPECT_EQ(read_le<std::uint64_t>(s, 16), tr.size());
  EXPECT_EQ(read_le<std::uint64_t>(s, 24), 0xDEADBEEFCAFEULL);
  EXPECT_EQ(read_le<std::uint64_t>(s, 32), 12u);
  EXPECT_EQ(read_le<double>(s, 40), 1.0);
  EXPECT_EQ(read_le<double>(s, 48), 2.0);
}

TEST(Ergt, RoundTripStream) {
  const auto tr = sample();
  std::stringstream ss;
  write_trajectory(ss, tr);
  const auto back = read_trajectory(ss);
  EXPECT_EQ(back.states, tr.states);
  EXPECT_EQ(back.dim, 3);
  EXPECT_EQ(back.record_stride, 1u);
  EXPECT_DOUBLE_EQ(back.dt, tr.sample_spacing());
  EXPECT_EQ(back.seed, tr.seed);
  EXPECT_EQ(back.stream, tr.stream);
}

TEST(Ergt, RoundTripFile) {
  const auto tr = sample();
  const auto path = (std::filesystem::temp_directory_path() / "ergo_test_roundtrip.ergt").string();
  write_trajectory(path, tr);
  EXPECT_EQ(read_trajectory(path).states, tr.states);
  std::filesystem::remove(path);
}

TEST(Ergt, BadMagic) {
  std::istringstream is(std::string("ERGX") + std::string(60, '\0'));
  EXPECT_THROW(read_trajectory(is), FormatError);
}

TEST(Ergt, Truncated) {
  const auto tr = sample();
  std::ostringstream os;
  write_trajectory(os, tr);
  std::string s = os.str();
  s.resize(s.size() - 3);
  std::istringstream is(s);
  EXPECT_THROW(read_trajectory(is), FormatError);
}

TEST(Ergt, MissingFile) { EXPECT_THROW(read_trajectory("/nonexistent/dir/x.ergt"), Error); }
