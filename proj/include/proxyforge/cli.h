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

#ifndef PROXYFORGE_CLI_H_
#define PROXYFORGE_CLI_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace proxyforge {

// Entry point of the proxyforge tool. Returns the process exit code: 0 on
// success, 2 for usage errors, ErrorCode values otherwise. Failures print a
// single "error code=<name> exit=<n> message=<text>" line to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace proxyforge

#endif  // PROXYFORGE_CLI_H_
