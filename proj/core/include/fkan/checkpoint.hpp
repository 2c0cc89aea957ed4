#pragma once

// Text checkpoint:
//
//   fkan-checkpoint 1
//   <name> <rows> <cols> <v0> <v1> ...
//   ...
//
// one line per parameter in network order, values printed with 17
// significant digits so that a save/load round trip is exact.

#include "fkan/parameters.hpp"

#include <filesystem>
#include <iosfwd>

namespace fkan::nn {

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into `target` by name; shapes must match.
void restore(ParameterSet& target, const ParameterSet& source);

} // namespace fkan::nn
