/* ------------------------------------------------------------------------- *
 * crawl - dynamic inchworm crawling simulation and optimization toolkit
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you may
 * not use this file except in compliance with the License. You may obtain a
 * copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * ------------------------------------------------------------------------- */
#pragma once

#include <string>

#include "crawl/io.hpp"

namespace crawl::cli {

// Exit codes: 0 success, 1 usage or config error, 3 abnormal simulation
// termination (files are still written). Errors go to stderr as one-line
// JSON objects so scripts can parse them.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTermination = 3;

// Run one command against a loaded config, writing CSV artifacts into
// out_dir (created if missing). Commands: simulate, sweep, robustness,
// optimize, control, phase.
int run_command(const std::string& command, const ExperimentConfig& cfg,
                const std::string& out_dir);

// Full argv front end (config loading, flag handling, reproduce/validate
// dispatch); what main() calls.
int main_entry(int argc, char** argv);

}  // namespace crawl::cli
