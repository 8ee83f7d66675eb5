#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "phdg/experiments.hpp"
#include "phdg/io.hpp"
#include "phdg/models.hpp"

using namespace phdg;
using Catch::Matchers::WithinAbs;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("eoc matches the log2 ratio definition", "[experiments]") {
  CHECK_THAT(compute_eoc(0.1, 4e-2, 0.05, 1e-2), WithinAbs(2.0, 1e-12));
  CHECK_THAT(compute_eoc(0.1, 8e-3, 0.05, 1e-3), WithinAbs(3.0, 1e-12));
  // Non-halving ratios use the general log-ratio form.
  CHECK_THAT(compute_eoc(0.1, 1e-2, 0.01, 1e-4), WithinAbs(2.0, 1e-12));
}

TEST_CASE("power balance contrast between dgp and implicit midpoint", "[experiments]") {
  const ModelSpec model = make_synthetic_nonlinear_ph();
  const auto reports =
      run_power_balance(model, {Scheme::dgp, Scheme::implicit_midpoint}, 1e-3, 1.0);
  const PowerBalanceReport& dgp = reports.at(Scheme::dgp);
  const PowerBalanceReport& mid = reports.at(Scheme::implicit_midpoint);
  REQUIRE(dgp.complete);
  REQUIRE(mid.complete);
  REQUIRE(dgp.rows.size() == 1000);
  CHECK(dgp.max_abs_residual <= 1e-10);
  CHECK(mid.max_abs_residual >= 1e-8);  // non-quadratic H keeps the midpoint rule inexact
  CHECK(mid.max_abs_residual >= 1e3 * dgp.max_abs_residual);
  REQUIRE(dgp.declared_bound.has_value());
  CHECK(dgp.max_abs_residual <= *dgp.declared_bound);
  CHECK_FALSE(mid.declared_bound.has_value());
}

TEST_CASE("classical scheme balance report reduces to energy drift", "[experiments]") {
  const ModelSpec model = make_pendulum();
  const auto reports = run_power_balance(model, {Scheme::classical_dg}, 1e-2, 1.0);
  const PowerBalanceReport& rep = reports.at(Scheme::classical_dg);
  REQUIRE(rep.complete);
  for (const auto& row : rep.rows) {
    CHECK(row.dissipation == 0.0);
    CHECK(row.supply == 0.0);
  }
  CHECK(rep.max_abs_residual <= 1e-11);  // conservation divided by dt
}

TEST_CASE("quadratic Hamiltonian keeps the midpoint rule balance at solver level", "[experiments]") {
  const ModelSpec model = make_advection_diffusion_fd(8, 1.0, 0.05);
  const auto reports = run_power_balance(model, {Scheme::implicit_midpoint}, 1e-2, 0.5);
  CHECK(reports.at(Scheme::implicit_midpoint).max_abs_residual <= 1e-9);
}

TEST_CASE("configuration errors", "[experiments]") {
  const ModelSpec model = make_synthetic_nonlinear_ph();
  SchemeConfig ref;
  ref.scheme = Scheme::radau5;
  SECTION("dt must divide t_end") {
    CHECK_THROWS_AS(run_power_balance(model, {Scheme::dgp}, 0.3, 1.0), std::invalid_argument);
  }
  SECTION("reference step must be at least four times finer") {
    CHECK_THROWS_AS(run_convergence(model, {Scheme::dgp}, {0.02}, ref, 0.01, 0.2),
                    std::invalid_argument);
  }
  SECTION("reference step must divide every dt") {
    CHECK_THROWS_AS(run_convergence(model, {Scheme::dgp}, {0.02}, ref, 0.003, 0.12),
                    std::invalid_argument);
  }
  SECTION("empty dt list") {
    CHECK_THROWS_AS(run_convergence(model, {Scheme::dgp}, {}, ref, 0.001, 0.2),
                    std::invalid_argument);
  }
}

TEST_CASE("restriction to the same grid reproduces the snapshots exactly", "[experiments]") {
  const ModelSpec model = make_synthetic_nonlinear_ph();
  SchemeConfig cfg;
  cfg.scheme = Scheme::dgp;
  const IntegrationResult res = integrate(model.system, cfg, make_uniform_grid(0.2, 0.02),
                                          model.default_input, model.x0);
  REQUIRE(res.success);
  const auto restricted = restrict_to_grid(res.trajectory, res.trajectory.grid);
  CHECK(snapshot_relative_error(res.trajectory.states, restricted) == 0.0);
}

TEST_CASE("convergence study shows second order for both schemes", "[experiments]") {
  const ModelSpec model = make_synthetic_nonlinear_ph();
  SchemeConfig ref;
  ref.scheme = Scheme::radau5;
  const std::vector<double> dt_list{0.05, 0.025, 0.0125};
  const auto tables = run_convergence(model, {Scheme::dgp, Scheme::implicit_midpoint}, dt_list, ref,
                                      0.0125 / 8.0, 0.5);
  for (const auto& [scheme, table] : tables) {
    INFO(to_string(scheme));
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].dt == 0.05);
    CHECK_FALSE(table.rows[0].eoc.has_value());
    for (std::size_t k = 1; k < table.rows.size(); ++k) {
      CHECK(table.rows[k].dt < table.rows[k - 1].dt);
      REQUIRE(table.rows[k].eoc.has_value());
      CHECK(*table.rows[k].eoc >= 1.7);
      CHECK(*table.rows[k].eoc <= 2.3);
    }
  }
  for (std::size_t k = 0; k < dt_list.size(); ++k) {
    const double ratio = tables.at(Scheme::dgp).rows[k].rel_error /
                         tables.at(Scheme::implicit_midpoint).rows[k].rel_error;
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
  }
}

TEST_CASE("power balance recomputation from CSV files is exact", "[experiments][io]") {
  const ModelSpec model = make_synthetic_nonlinear_ph();
  SchemeConfig cfg;
  cfg.scheme = Scheme::dgp;
  const IntegrationResult res = integrate(model.system, cfg, make_uniform_grid(0.2, 0.01),
                                          model.default_input, model.x0);
  REQUIRE(res.success);
  const PowerBalanceReport direct = compute_power_balance(model.system, Scheme::dgp, res.trajectory);

  const auto dir = std::filesystem::temp_directory_path() / "phdg_test_exp";
  std::filesystem::create_directories(dir);
  write_states_csv(dir / "states.csv", res.trajectory);
  write_ports_csv(dir / "ports.csv", res.trajectory);
  const Trajectory back = read_trajectory_csv(dir / "states.csv", dir / "ports.csv");
  const PowerBalanceReport recomputed = compute_power_balance(model.system, Scheme::dgp, back);

  REQUIRE(recomputed.rows.size() == direct.rows.size());
  for (std::size_t k = 0; k < direct.rows.size(); ++k) {
    CHECK(recomputed.rows[k].t_mid == direct.rows[k].t_mid);
    CHECK(recomputed.rows[k].lhs == direct.rows[k].lhs);
    CHECK(recomputed.rows[k].dissipation == direct.rows[k].dissipation);
    CHECK(recomputed.rows[k].supply == direct.rows[k].supply);
    CHECK(recomputed.rows[k].residual == direct.rows[k].residual);
  }

  // The residual CSV itself round-trips bit-exactly as well.
  write_power_balance_csv(dir / "pb.csv", direct);
  const auto rows = read_power_balance_csv(dir / "pb.csv");
  REQUIRE(rows.size() == direct.rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].residual == direct.rows[k].residual);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("repeated runs write identical CSV bytes", "[experiments][io]") {
  const ModelSpec model = make_synthetic_nonlinear_ph();
  const auto dir = std::filesystem::temp_directory_path() / "phdg_test_det";
  std::filesystem::create_directories(dir);
  for (int run = 0; run < 2; ++run) {
    SchemeConfig cfg;
    cfg.scheme = Scheme::dgp;
    const IntegrationResult res = integrate(model.system, cfg, make_uniform_grid(0.2, 0.02),
                                            model.default_input, model.x0);
    REQUIRE(res.success);
    write_states_csv(dir / ("states_" + std::to_string(run) + ".csv"), res.trajectory);
  }
  CHECK(slurp(dir / "states_0.csv") == slurp(dir / "states_1.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("convergence CSV leaves the first EOC cell empty", "[experiments][io]") {
  ConvergenceTable table;
  table.scheme = Scheme::dgp;
  table.rows.push_back({0.1, 4e-2, std::nullopt});
  table.rows.push_back({0.05, 1e-2, 2.0});
  const auto dir = std::filesystem::temp_directory_path() / "phdg_test_conv_csv";
  std::filesystem::create_directories(dir);
  write_convergence_csv(dir / "c.csv", table);
  std::ifstream in(dir / "c.csv");
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "dt,rel_error,eoc");
  CHECK(row1 == "0.10000000000000001,0.040000000000000001,");
  CHECK(row2 == "0.050000000000000003,0.01,2");
  std::filesystem::remove_all(dir);
}
