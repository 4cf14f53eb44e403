/*
 * Copyright 2026 The semcf Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SEMCF_ERROR_H_
#define SEMCF_ERROR_H_

#include <stdexcept>
#include <string>

namespace semcf {

// Error categories. The numeric values are the ones surfaced through the C
// API and used as CLI exit codes.
enum class ErrorCode {
  kInternal = 1,
  kInvalidArgument = 2,
  kData = 3,
  kSearchFailed = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void ThrowInvalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, message);
}

[[noreturn]] inline void ThrowData(const std::string& message) {
  throw Error(ErrorCode::kData, message);
}

}  // namespace semcf

#endif  // SEMCF_ERROR_H_
