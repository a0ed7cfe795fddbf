//! Rule-based tweet tokenizer.
//!
//! The rules, in match priority at each position within a whitespace chunk:
//!
//! 1. `http://` or `https://` starts a URL token running to the chunk end.
//! 2. `@` followed by a word character starts a mention token.
//! 3. `#` followed by a word character starts a hashtag token.
//! 4. An emoji code point is one token on its own; an immediately following
//!    U+FE0F variation selector is folded into it.
//! 5. A word character (alphanumeric, `_` or `'`) starts a word token.
//! 6. Anything else starts a punctuation run, ending before whitespace or
//!    the start of any token above.
//!
//! Everything is lowercased. The behaviour is pinned by a committed golden
//! file over a fixed corpus of strings.

/// Word characters: what mentions, hashtags and words are made of.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Emoji code points, by block. Deliberately per-code-point: ZWJ sequences
/// and skin-tone modifiers come out as separate tokens.
pub fn is_emoji_char(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF // pictographs, emoticons, transport, supplemental
        | 0x2600..=0x27BF // misc symbols and dingbats (hearts live here too)
        | 0x2B00..=0x2BFF // stars and arrows
    )
}

const VARIATION_SELECTOR: char = '\u{FE0F}';

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.to_lowercase().chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if starts_url(&chars[i..]) {
                tokens.push(chars[i..].iter().collect());
                break;
            } else if (c == '@' || c == '#') && i + 1 < chars.len() && is_word_char(chars[i + 1]) {
                let mut j = i + 1;
                while j < chars.len() && is_word_char(chars[j]) {
                    j += 1;
                }
                tokens.push(chars[i..j].iter().collect());
                i = j;
            } else if is_emoji_char(c) {
                let mut j = i + 1;
                if j < chars.len() && chars[j] == VARIATION_SELECTOR {
                    j += 1;
                }
                tokens.push(chars[i..j].iter().collect());
                i = j;
            } else if is_word_char(c) {
                let mut j = i + 1;
                while j < chars.len() && is_word_char(chars[j]) {
                    j += 1;
                }
                tokens.push(chars[i..j].iter().collect());
                i = j;
            } else {
                let mut j = i + 1;
                while j < chars.len() && is_punct_continuation(&chars, j) {
                    j += 1;
                }
                tokens.push(chars[i..j].iter().collect());
                i = j;
            }
        }
    }
    tokens
}

fn starts_url(chars: &[char]) -> bool {
    let prefix: String = chars.iter().take(8).collect();
    prefix.starts_with("http://") || prefix.starts_with("https://")
}

fn is_punct_continuation(chars: &[char], j: usize) -> bool {
    let c = chars[j];
    if is_word_char(c) || is_emoji_char(c) {
        return false;
    }
    // An @ or # that would start a mention/hashtag ends the run.
    if (c == '@' || c == '#') && j + 1 < chars.len() && is_word_char(chars[j + 1]) {
        return false;
    }
    true
}
