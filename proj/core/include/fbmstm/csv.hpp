#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "fbmstm/fbm.hpp"
#include "fbmstm/lab.hpp"
#include "fbmstm/stm.hpp"

namespace fbmstm {

// Shortest representation carrying 17 significant digits; locale independent.
std::string format_g17(double v);

// All writers emit a header row, LF line endings, UTF-8.

// step,t,value (one row per increment)
void write_increments_csv(std::ostream& os, const IncrementBlock& block);

// step,t,value (one row per grid point, length n_steps + 1)
void write_path_csv(std::ostream& os, const FbmGrid& grid, std::span<const double> path);

// step,t,sign,log_abs,value_or_inf
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

// step,t,log_mean_square,log_std_error,diverged_fraction
void write_series_csv(std::ostream& os, const MeanSquareSeries& series);

}  // namespace fbmstm
