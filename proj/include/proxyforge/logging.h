/* Copyright 2026 The ProxyForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROXYFORGE_LOGGING_H_
#define PROXYFORGE_LOGGING_H_

#include <spdlog/spdlog.h>

namespace proxyforge {

// Reads PROXYFORGE_LOG (error|info|debug) and configures the default
// stderr logger. Unset or unknown values fall back to info.
void InitLoggingFromEnv();

}  // namespace proxyforge

#endif  // PROXYFORGE_LOGGING_H_
