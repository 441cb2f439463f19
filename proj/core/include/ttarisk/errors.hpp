// Copyright 2026 The ttarisk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ttarisk {

// Base of every library error. `kind()` is the stable class name the CLI
// prints so scripted callers can match on it.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TTARISK_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

TTARISK_DEFINE_ERROR(DomainError);
TTARISK_DEFINE_ERROR(ConfigError);
TTARISK_DEFINE_ERROR(ParseError);
TTARISK_DEFINE_ERROR(OverlapError);
TTARISK_DEFINE_ERROR(UnboundedSupportError);
TTARISK_DEFINE_ERROR(EmptyHistogramError);
TTARISK_DEFINE_ERROR(MappingError);
TTARISK_DEFINE_ERROR(InfeasibleFlowError);
TTARISK_DEFINE_ERROR(NoExitError);
TTARISK_DEFINE_ERROR(InfiniteExitTimeError);
TTARISK_DEFINE_ERROR(NonAbsorptionError);
TTARISK_DEFINE_ERROR(EmptyTraceError);

#undef TTARISK_DEFINE_ERROR

}  // namespace ttarisk
