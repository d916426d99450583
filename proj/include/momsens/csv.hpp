// CSV output shared by the command-line tool.
//
// Numbers are written with 17 significant digits so every double round-trips;
// undefined values are written as NA. Each file starts with '#' comment lines
// describing the run.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momsens/global_sens.hpp"
#include "momsens/local_sens.hpp"
#include "momsens/moments.hpp"
#include "momsens/ode.hpp"

namespace momsens::csv {

std::string number(double v);

/// FNV-1a 64-bit hash as 16 hex digits.
std::string fnv1a64(std::string_view data);

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(std::ostream& out, const Metadata& meta);

/// t, then one column per output.
void write_moments(std::ostream& out, const Trajectory& traj, const std::vector<MomentOutput>& outputs);

/// Oracle moments followed by diff_<output> = oracle - closure columns.
void write_oracle(std::ostream& out, const Trajectory& oracle, const Trajectory& closure,
                  const std::vector<MomentOutput>& outputs);

/// t, output, perturbed, value; "nominal" rows first, then one block per parameter.
void write_sweep(std::ostream& out, const SweepResult& sweep, const std::vector<MomentOutput>& outputs,
                 const std::vector<std::string>& parameters);

/// t, output, param, S_raw, S_normalized
void write_local(std::ostream& out, const LocalSensitivityReport& report);

/// t, output, param, S_first, S_total, estimator, n, seed
void write_sobol(std::ostream& out, const SobolReport& report);

}  // namespace momsens::csv
