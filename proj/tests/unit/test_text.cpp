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

#include <doctest.h>

#include "storybias/text.hpp"

using namespace storybias::text;

TEST_CASE("utf8 validity") {
  CHECK(is_valid_utf8("plain"));
  CHECK(is_valid_utf8("caf\xc3\xa9"));
  CHECK_FALSE(is_valid_utf8("\xc3"));
  CHECK_FALSE(is_valid_utf8("\xff\xfe"));
}

TEST_CASE("nfc composition") {
  const std::string decomposed = "e\xcc\x81";  // e + combining acute
  CHECK_FALSE(is_nfc(decomposed));
  CHECK(to_nfc(decomposed) == "\xc3\xa9");
  CHECK(is_nfc(to_nfc(decomposed)));
}

TEST_CASE("case folding") {
  CHECK(casefold("BRAVE") == "brave");
  CHECK(casefold("Stra\xc3\x9f" "e") == "strasse");
  CHECK(casefold("\xd0\xa1\xd0\x9c\xd0\x95\xd0\x9b\xd0\xab\xd0\x99") ==
        "\xd1\x81\xd0\xbc\xd0\xb5\xd0\xbb\xd1\x8b\xd0\xb9");  // СМЕЛЫЙ -> смелый
}

TEST_CASE("code point helpers") {
  CHECK(codepoint_length("h\xc3\xa9llo") == 5);
  CHECK(codepoint_prefix("h\xc3\xa9llo", 2) == "h\xc3\xa9");
  CHECK(codepoint_prefix("ab", 10) == "ab");
  CHECK(trim("  x y \n") == "x y");
}

TEST_CASE("term normalization") {
  CHECK(normalize_term("  Brave! ") == "brave");
  CHECK(normalize_term("\"Kind-hearted\"") == "kind-hearted");
  CHECK(normalize_term("very   BRAVE") == "very brave");
  CHECK_FALSE(normalize_term("?!").has_value());
  CHECK_FALSE(normalize_term("   ").has_value());
  for (const char* raw : {"  Brave! ", "\xe5\x8b\x87\xe6\x95\xa2\xe3\x80\x82", "\xc2\xbfValiente?"}) {
    auto once = normalize_term(raw);
    REQUIRE(once.has_value());
    CHECK(normalize_term(*once) == once);
  }
  CHECK(normalize_term("\xc2\xbfValiente?") == "valiente");
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
