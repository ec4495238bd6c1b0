// Copyright 2026 The gneva Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef GNEVA_TOOLS_COMMANDS_HPP_
#define GNEVA_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>

#include "gneva/dataio.hpp"
#include "gneva/model_io.hpp"

namespace gneva::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUsage = 64;

// Parses argv, runs one subcommand and maps failures onto exit codes.
int run_command(int argc, const char* const* argv, std::ostream& out,
                std::ostream& err);

// Writes x,y,log_density (world frame) for every cell of the candidate grid
// around `world`. Densities are the predictive mixture weighted by the
// z-proxy output.
void emit_density_grid(const SpatialBundle& spatial, const Scenario& world,
                       double spacing, double margin,
                       const std::filesystem::path& out_path);

}  // namespace gneva::cli

#endif  // GNEVA_TOOLS_COMMANDS_HPP_
