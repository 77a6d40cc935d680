/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlpa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define MLPA_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                                \
      public:                                                                  \
        using Error::Error;                                                    \
    }

MLPA_DEFINE_ERROR(WidthError);
MLPA_DEFINE_ERROR(IndexError);
MLPA_DEFINE_ERROR(RoundError);
MLPA_DEFINE_ERROR(ModelError);
MLPA_DEFINE_ERROR(MaskError);
MLPA_DEFINE_ERROR(BudgetError);
MLPA_DEFINE_ERROR(DataError);
MLPA_DEFINE_ERROR(DegenerateModelError);
MLPA_DEFINE_ERROR(SupportError);
MLPA_DEFINE_ERROR(ShapeError);
MLPA_DEFINE_ERROR(FormatError);
MLPA_DEFINE_ERROR(IoError);
MLPA_DEFINE_ERROR(ConfigError);
MLPA_DEFINE_ERROR(SelfTestError);

#undef MLPA_DEFINE_ERROR

/// Parse failure carrying the 1-based line and column (or CSV row) where it
/// was detected.
class ParseError : public Error {
  public:
    ParseError(const std::string &what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace mlpa
