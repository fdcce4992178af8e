#pragma once

// Shared tokenizer. The vectorizer, the n-gram language model and the
// leakage filter all consume this exact token stream.

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include "textforge/errors.hpp"

namespace textforge {

using TokenStream = std::vector<std::string>;

namespace detail {

inline bool is_separator(UChar32 c) {
    if (u_isUWhiteSpace(c)) return true;
    const auto type = u_charType(c);
    return type == U_CONTROL_CHAR || type == U_FORMAT_CHAR;
}

inline bool is_punctuation(UChar32 c) {
    switch (u_charType(c)) {
        case U_DASH_PUNCTUATION:
        case U_START_PUNCTUATION:
        case U_END_PUNCTUATION:
        case U_CONNECTOR_PUNCTUATION:
        case U_OTHER_PUNCTUATION:
        case U_INITIAL_PUNCTUATION:
        case U_FINAL_PUNCTUATION:
        case U_MATH_SYMBOL:
        case U_CURRENCY_SYMBOL:
        case U_MODIFIER_SYMBOL:
        case U_OTHER_SYMBOL:
            return true;
        default:
            return false;
    }
}

// Apostrophes and hyphens stay inside a word when flanked by word characters.
inline bool is_word_joiner(UChar32 c) {
    return c == U'\'' || c == 0x2019 || c == U'-' || c == 0x2010 || c == 0x2011;
}

inline void append_utf8(std::string& out, const std::u32string& cps, std::size_t begin,
                        std::size_t end) {
    icu::UnicodeString u;
    for (std::size_t i = begin; i < end; ++i) u.append(static_cast<UChar32>(cps[i]));
    u.toUTF8String(out);
}

inline bool keeps_whole(std::string_view chunk) {
    return chunk.starts_with("http") || chunk.starts_with("www.") || chunk.starts_with("@");
}

inline void split_chunk(const std::u32string& chunk, TokenStream& out) {
    std::string whole;
    append_utf8(whole, chunk, 0, chunk.size());
    if (keeps_whole(whole)) {
        out.push_back(std::move(whole));
        return;
    }
    const auto is_word = [&](std::size_t i) { return !is_punctuation(chunk[i]); };
    std::size_t word_begin = 0;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        const UChar32 c = chunk[i];
        if (!is_punctuation(c)) continue;
        if (is_word_joiner(c) && i > 0 && i + 1 < chunk.size() && is_word(i - 1) && is_word(i + 1))
            continue;
        if (word_begin < i) {
            out.emplace_back();
            append_utf8(out.back(), chunk, word_begin, i);
        }
        out.emplace_back();
        append_utf8(out.back(), chunk, i, i + 1);
        word_begin = i + 1;
    }
    if (word_begin < chunk.size()) {
        out.emplace_back();
        append_utf8(out.back(), chunk, word_begin, chunk.size());
    }
}

inline const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFC normalizer unavailable");
    return *n;
}

}  // namespace detail

/// Lowercased, NFC-normalized tokens. Whitespace separates chunks;
/// punctuation and symbols become single-character tokens unless they are an
/// apostrophe or hyphen inside a word. Chunks starting with "http", "www."
/// or "@" are kept whole.
inline TokenStream tokenize(std::string_view text) {
    const auto& norm = detail::nfc();
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    u = norm.normalize(u, status);
    u.toLower(icu::Locale::getRoot());
    u = norm.normalize(u, status);
    if (U_FAILURE(status)) throw Error("ICU normalization failed");

    TokenStream tokens;
    std::u32string chunk;
    for (int32_t i = 0; i < u.length();) {
        const UChar32 c = u.char32At(i);
        i += U16_LENGTH(c);
        if (detail::is_separator(c)) {
            if (!chunk.empty()) detail::split_chunk(chunk, tokens);
            chunk.clear();
        } else {
            chunk.push_back(static_cast<char32_t>(c));
        }
    }
    if (!chunk.empty()) detail::split_chunk(chunk, tokens);
    return tokens;
}

inline std::string join_tokens(const TokenStream& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

}  // namespace textforge
