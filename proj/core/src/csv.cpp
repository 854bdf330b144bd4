#include "fbmstm/csv.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fbmstm {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_increments_csv(std::ostream& os, const IncrementBlock& block) {
  os << "step,t,value\n";
  for (std::size_t n = 0; n < block.values.size(); ++n)
    os << n << ',' << format_g17(block.grid.time_at(static_cast<std::int64_t>(n))) << ','
       << format_g17(block.values[n]) << '\n';
}

void write_path_csv(std::ostream& os, const FbmGrid& grid, std::span<const double> path) {
  if (std::ssize(path) != grid.n_steps + 1)
    throw std::invalid_argument("write_path_csv: path length must be n_steps + 1");
  os << "step,t,value\n";
  for (std::size_t n = 0; n < path.size(); ++n)
    os << n << ',' << format_g17(grid.time_at(static_cast<std::int64_t>(n))) << ','
       << format_g17(path[n]) << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "step,t,sign,log_abs,value_or_inf\n";
  for (std::size_t n = 0; n < trajectory.states.size(); ++n) {
    const LogSignedState& s = trajectory.states[n];
    os << n << ',' << format_g17(trajectory.scheme.dt * static_cast<double>(n)) << ','
       << s.sign << ',' << format_g17(s.log_abs) << ',' << format_g17(s.value()) << '\n';
  }
}

void write_series_csv(std::ostream& os, const MeanSquareSeries& series) {
  os << "step,t,log_mean_square,log_std_error,diverged_fraction\n";
  for (std::size_t r = 0; r < series.steps.size(); ++r)
    os << series.steps[r] << ','
       << format_g17(series.dt * static_cast<double>(series.steps[r])) << ','
       << format_g17(series.log_mean_square[r]) << ','
       << format_g17(series.log_std_error[r]) << ','
       << format_g17(series.diverged_fraction[r]) << '\n';
}

}  // namespace fbmstm
