#pragma once

#include <string>

namespace reaccel {

// Exit codes shared by all subcommands:
//   0 ok, 2 input error, 3 infeasible (or failed cross-check), 4 digest
//   mismatch, 5 internal error.
enum ExitCode { kOk = 0, kInput = 2, kInfeasible = 3, kMismatch = 4, kInternal = 5 };

struct SolveOptions {
    std::string out_dir = "run";
    int steps = 20;
    int pwl_breakpoints = 6;
    bool per_step_dg = false;
    double gap = 1e-6;
    double time_limit = 0.0;
    long node_limit = 200000;
    int workers = 1;
    bool dump_program = false;
    bool quiet = false;
};

struct CheckOptions {
    std::string out_dir;          // defaults to the plan's directory
    double max_voltage_dev = 0.05;
    double max_timing_dev = 0.10;
    double sim_dt = 1e-3;
    bool quiet = false;
};

int cmd_validate(const std::string& case_path, bool quiet = false);
int cmd_solve(const std::string& case_path, const SolveOptions& opts);
int cmd_check(const std::string& case_path, const std::string& plan_path,
              const CheckOptions& opts);
int cmd_report(const std::string& run_dir, bool quiet = false);

}  // namespace reaccel
