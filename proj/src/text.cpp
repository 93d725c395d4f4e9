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

#include "storybias/text.hpp"

#include <openssl/evp.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <array>
#include <cstdint>

#include "storybias/error.hpp"

namespace storybias::text {
namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || norm == nullptr) {
    throw Error(std::string("ICU NFC normalizer unavailable: ") +
                u_errorName(status));
  }
  return *norm;
}

icu::UnicodeString from_utf8(std::string_view s) {
  if (!is_valid_utf8(s)) throw ValidationError("invalid UTF-8 input");
  return icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool is_strippable(UChar32 c) {
  return u_ispunct(c) || u_hasBinaryProperty(c, UCHAR_WHITE_SPACE) ||
         u_charType(c) == U_MATH_SYMBOL || u_charType(c) == U_OTHER_SYMBOL ||
         u_charType(c) == U_CURRENCY_SYMBOL ||
         u_charType(c) == U_MODIFIER_SYMBOL || u_charType(c) == U_CONTROL_CHAR;
}

std::optional<std::string> normalize_once(std::string_view raw) {
  icu::UnicodeString u = from_utf8(raw);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString n = nfc_instance().normalize(u, status);
  if (U_FAILURE(status)) throw ValidationError("NFC normalization failed");

  // Collapse whitespace, then strip punctuation at both ends.
  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < n.length();) {
    UChar32 c = n.char32At(i);
    i += U16_LENGTH(c);
    if (u_hasBinaryProperty(c, UCHAR_WHITE_SPACE)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) collapsed.append(static_cast<UChar>(0x20));
    pending_space = false;
    collapsed.append(c);
  }
  int32_t begin = 0;
  int32_t end = collapsed.length();
  while (begin < end) {
    UChar32 c = collapsed.char32At(begin);
    if (!is_strippable(c)) break;
    begin += U16_LENGTH(c);
  }
  while (end > begin) {
    UChar32 c = collapsed.char32At(end - 1);
    if (!is_strippable(c)) break;
    end -= U16_LENGTH(c);
  }
  if (begin >= end) return std::nullopt;
  return to_utf8(collapsed.tempSubStringBetween(begin, end));
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    if (c < 0) return false;
  }
  return true;
}

bool is_nfc(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  UErrorCode status = U_ZERO_ERROR;
  bool ok = nfc_instance().isNormalized(u, status);
  if (U_FAILURE(status)) throw ValidationError("NFC check failed");
  return ok;
}

std::string to_nfc(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString n = nfc_instance().normalize(u, status);
  if (U_FAILURE(status)) throw ValidationError("NFC normalization failed");
  return to_utf8(n);
}

std::string casefold(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString n = nfc_instance().normalize(u, status);
  if (U_FAILURE(status)) throw ValidationError("NFC normalization failed");
  return to_utf8(n);
}

std::size_t codepoint_length(std::string_view s) {
  std::size_t count = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::string_view codepoint_prefix(std::string_view s, std::size_t n) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto c = static_cast<unsigned char>(s[i]);
    if ((c & 0xC0) != 0x80) {
      if (seen == n) return s.substr(0, i);
      ++seen;
    }
  }
  return s;
}

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::optional<std::string> normalize_term(std::string_view raw,
                                          std::string_view /*language*/) {
  auto current = normalize_once(raw);
  // Folding can expose new characters to the stripping pass (and vice versa);
  // iterate to the fixed point. Two passes settle every input seen so far.
  for (int pass = 0; pass < 4 && current; ++pass) {
    auto next = normalize_once(*current);
    if (next == current) return current;
    current = std::move(next);
  }
  return current;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &digest_len,
                 EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0F]);
  }
  return out;
}

}  // namespace storybias::text
