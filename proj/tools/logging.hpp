// Copyright 2026 The wbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef WBC_TOOLS_LOGGING_HPP_
#define WBC_TOOLS_LOGGING_HPP_

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace wbc::tools {

// Logs go to stderr. WBC_LOG_LEVEL is one of error, warn, info, debug;
// the default is warn.
inline void InitLogging(const char* name) {
  auto logger = spdlog::stderr_color_mt(name);
  logger->set_pattern("%n: %^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("WBC_LOG_LEVEL")) {
    const std::string v(env);
    if (v == "error") {
      level = spdlog::level::err;
    } else if (v == "warn") {
      level = spdlog::level::warn;
    } else if (v == "info") {
      level = spdlog::level::info;
    } else if (v == "debug") {
      level = spdlog::level::debug;
    } else {
      spdlog::warn("ignoring WBC_LOG_LEVEL='{}' (expected error, warn, info or debug)", v);
    }
  }
  spdlog::set_level(level);
}

}  // namespace wbc::tools

#endif  // WBC_TOOLS_LOGGING_HPP_
