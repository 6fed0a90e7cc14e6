#pragma once

#include "ergo/sde.hpp"

#include <iosfwd>
#include <string>

namespace ergo {

/// Binary trajectory file, all little-endian:
///   "ERGT" | version u16 | N u16 | dt f64 | count u64 | seed u64 | stream u64 | count*N f64
/// `dt` is the time between recorded states (integration step times record stride).
inline constexpr std::uint16_t kTrajectoryFormatVersion = 1;

void write_trajectory(std::ostream& os, const Trajectory& traj);
void write_trajectory(const std::string& path, const Trajectory& traj);

/// The returned trajectory has record_stride = 1 and dt = stored spacing.
Trajectory read_trajectory(std::istream& is);
Trajectory read_trajectory(const std::string& path);

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergo
