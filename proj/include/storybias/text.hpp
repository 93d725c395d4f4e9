// Copyright 2026 The storybias Authors
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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

// Unicode helpers shared by every stage. All strings are UTF-8.
namespace storybias::text {

bool is_valid_utf8(std::string_view s);

// Throws ValidationError on invalid UTF-8.
bool is_nfc(std::string_view s);
std::string to_nfc(std::string_view s);

// Full Unicode case folding, result re-normalized to NFC.
std::string casefold(std::string_view s);

// Number of code points. Invalid UTF-8 is counted byte-wise.
std::size_t codepoint_length(std::string_view s);

// Longest prefix holding at most `n` code points.
std::string_view codepoint_prefix(std::string_view s, std::size_t n);

std::string trim(std::string_view s);

// NFC, case fold, strip leading/trailing punctuation and symbols, collapse
// internal whitespace runs to a single space. Returns nullopt when nothing is
// left. The result is a fixed point: normalize_term(*r) == r. Folding is
// language-independent; `language` is accepted so callers keep one signature
// if a locale-specific rule (Turkish dotless i) is ever needed.
std::optional<std::string> normalize_term(std::string_view raw,
                                          std::string_view language = {});

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace storybias::text
