#ifndef CASEFOLD_UNICODE_H_
#define CASEFOLD_UNICODE_H_

#include <string>
#include <string_view>
#include <vector>

namespace casefold::unicode {

// Decodes UTF-8 into Unicode scalar values. Invalid sequences throw a
// DataError("InvalidUtf8").
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
std::string encode(char32_t c);

// Per-code-point simple case mappings. They never change the number of code
// points, so lowercased text stays aligned with its source.
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);
bool is_upper(char32_t c);
bool is_space(char32_t c);

std::string to_lower(std::string_view utf8);
std::u32string to_lower(std::u32string_view text);

}  // namespace casefold::unicode

#endif  // CASEFOLD_UNICODE_H_
