#pragma once

// CSV serialization. All floating-point values are written with 17
// significant digits so files round-trip bit-exactly through strtod.
//
// File schemas:
//   states:        t,x_1,...,x_n
//   midpoint ports: t_mid,u_1,...,u_m,y_1,...,y_p
//   power balance: t_mid,lhs,dissipation,supply,residual
//   convergence:   dt,rel_error,eoc   (eoc empty in the first row)

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phdg/experiments.hpp"
#include "phdg/system.hpp"

namespace phdg {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("malformed CSV number: '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_states_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  out << "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << format_g17(traj.grid.points[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << format_g17(traj.states[k][i]);
    out << "\n";
  }
}

inline void write_ports_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  const Eigen::Index m = traj.inputs_mid.empty() ? 0 : traj.inputs_mid.front().size();
  const Eigen::Index p = traj.outputs_mid.empty() ? 0 : traj.outputs_mid.front().size();
  out << "t_mid";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
  for (Eigen::Index i = 1; i <= p; ++i) out << ",y_" << i;
  out << "\n";
  for (std::size_t k = 0; k < traj.inputs_mid.size(); ++k) {
    out << format_g17(traj.grid.midpoint(k));
    for (Eigen::Index i = 0; i < m; ++i) out << "," << format_g17(traj.inputs_mid[k][i]);
    for (Eigen::Index i = 0; i < p; ++i) out << "," << format_g17(traj.outputs_mid[k][i]);
    out << "\n";
  }
}

/// Reads a trajectory back from its two CSV files.
inline Trajectory read_trajectory_csv(const std::filesystem::path& states_path,
                                      const std::filesystem::path& ports_path) {
  std::ifstream states_in(states_path);
  if (!states_in) throw std::runtime_error("cannot open: " + states_path.string());
  std::string line;
  if (!std::getline(states_in, line)) throw std::runtime_error("empty states CSV");
  const auto state_header = detail::split_csv_line(line);
  if (state_header.empty() || state_header.front() != "t") {
    throw std::runtime_error("states CSV: unexpected header");
  }
  const std::size_t n = state_header.size() - 1;

  Trajectory traj;
  while (std::getline(states_in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != n + 1) throw std::runtime_error("states CSV: ragged row");
    traj.grid.points.push_back(detail::parse_double(fields[0]));
    Vector x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = detail::parse_double(fields[i + 1]);
    traj.states.push_back(std::move(x));
  }
  traj.grid.validate();

  std::ifstream ports_in(ports_path);
  if (!ports_in) throw std::runtime_error("cannot open: " + ports_path.string());
  if (!std::getline(ports_in, line)) throw std::runtime_error("empty ports CSV");
  const auto port_header = detail::split_csv_line(line);
  if (port_header.empty() || port_header.front() != "t_mid") {
    throw std::runtime_error("ports CSV: unexpected header");
  }
  std::size_t m = 0, p = 0;
  for (std::size_t i = 1; i < port_header.size(); ++i) {
    if (port_header[i].rfind("u_", 0) == 0) ++m;
    else if (port_header[i].rfind("y_", 0) == 0) ++p;
    else throw std::runtime_error("ports CSV: unexpected column '" + port_header[i] + "'");
  }
  while (std::getline(ports_in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 1 + m + p) throw std::runtime_error("ports CSV: ragged row");
    Vector u(static_cast<Eigen::Index>(m)), y(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < m; ++i) u[static_cast<Eigen::Index>(i)] = detail::parse_double(fields[1 + i]);
    for (std::size_t i = 0; i < p; ++i) y[static_cast<Eigen::Index>(i)] = detail::parse_double(fields[1 + m + i]);
    traj.inputs_mid.push_back(std::move(u));
    traj.outputs_mid.push_back(std::move(y));
  }
  if (traj.inputs_mid.size() + 1 != traj.states.size()) {
    throw std::runtime_error("ports CSV: row count does not match states CSV");
  }
  return traj;
}

inline void write_power_balance_csv(const std::filesystem::path& path, const PowerBalanceReport& rep) {
  auto out = detail::open_out(path);
  out << "t_mid,lhs,dissipation,supply,residual\n";
  for (const auto& row : rep.rows) {
    out << format_g17(row.t_mid) << "," << format_g17(row.lhs) << "," << format_g17(row.dissipation)
        << "," << format_g17(row.supply) << "," << format_g17(row.residual) << "\n";
  }
}

inline std::vector<PowerBalanceRow> read_power_balance_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t_mid,lhs,dissipation,supply,residual") {
    throw std::runtime_error("power balance CSV: unexpected header");
  }
  std::vector<PowerBalanceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5) throw std::runtime_error("power balance CSV: ragged row");
    rows.push_back({detail::parse_double(fields[0]), detail::parse_double(fields[1]),
                    detail::parse_double(fields[2]), detail::parse_double(fields[3]),
                    detail::parse_double(fields[4])});
  }
  return rows;
}

inline void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table) {
  auto out = detail::open_out(path);
  out << "dt,rel_error,eoc\n";
  for (const auto& row : table.rows) {
    out << format_g17(row.dt) << "," << format_g17(row.rel_error) << ","
        << (row.eoc ? format_g17(*row.eoc) : "") << "\n";
  }
}

}  // namespace phdg
