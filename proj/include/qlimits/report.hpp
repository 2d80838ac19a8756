#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qlimits/experiments.hpp"
#include "qlimits/fluid.hpp"
#include "qlimits/gaussian.hpp"
#include "qlimits/simulator.hpp"

namespace qlimits {

// Shortest decimal representation that round-trips the exact double
// (std::to_chars); locale-independent, so identical reports give identical
// bytes.
std::string format_double(double v);

// CSV serializations.  All of them are deterministic functions of their
// inputs: fixed headers, '\n' line endings, format_double for reals.
std::string lln_summary_csv(const LlnReport& report);
std::string lln_raw_csv(const LlnReport& report);
std::string clt_summary_csv(const CltReport& report);
std::string clt_raw_csv(const CltReport& report);
std::string trace_csv(const SimTrace& trace);
std::string fluid_csv(const FluidSolution& sol);
// One row per (replication, grid time): rep, t, S, Y, Z, X.
std::string limit_samples_csv(const std::vector<LimitSample>& samples);
// First column t, then one column per grid time.
std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<double>& times);

void write_file(const std::string& path, const std::string& bytes);

// "dir/name.csv" -> "dir/name_raw.csv" (suffix appended when there is no
// extension): where the raw samples land next to a summary.
std::string raw_sibling_path(const std::string& summary_path);

// Write summary CSV at `path` and the raw samples alongside.
void emit_lln_report(const LlnReport& report, const std::string& path);
void emit_clt_report(const CltReport& report, const std::string& path);

} // namespace qlimits
