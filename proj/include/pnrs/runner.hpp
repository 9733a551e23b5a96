#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pnrs/config.hpp"

namespace pnrs {

// Deterministic parallel map: worker w owns the indices congruent to w modulo
// the degree, and reductions happen afterwards in index order, so the thread
// count never changes an output byte.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// --threads beats PNRS_THREADS beats hardware_concurrency.
int effective_threads(const RunConfig& cfg);

// `out` key if present, else out/<experiment>; PNRS_OUT_ROOT prefixes
// relative directories.
std::string resolve_out_dir(const RunConfig& cfg);

std::vector<std::string> command_list();
bool known_command(const std::string& name);

// Runs one experiment end to end: compute, write artifacts and the manifest,
// print one PASS/FAIL line per declared check. Returns 0 when every check
// passes, 1 otherwise (failing ids also go to stderr). Schema problems throw
// ConfigError before anything is written.
int run_command(const std::string& name, const RunConfig& cfg);

}  // namespace pnrs
