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

#ifndef PROXYFORGE_ERROR_H_
#define PROXYFORGE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace proxyforge {

// Error categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorCode {
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kValidation = 5,
  kEmptyData = 6,
  kInvalidArgument = 7,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code,
                    const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace proxyforge

#endif  // PROXYFORGE_ERROR_H_
