//! Label normalization and tolerant substring search.

/// Lowercases, trims and collapses internal whitespace runs to one space.
pub fn normalize(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Finds the first occurrence of `needle` in `haystack`, ignoring case and
/// treating any whitespace run in the needle as matching any non-empty
/// whitespace run in the haystack. Returns the byte range of the match.
pub fn find_loose(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    find_loose_from(haystack, needle, 0)
}

/// As [`find_loose`], but only considers matches starting at or after byte
/// offset `from`.
pub fn find_loose_from(haystack: &str, needle: &str, from: usize) -> Option<(usize, usize)> {
    let needle: Vec<&str> = needle.split_whitespace().collect();
    if needle.is_empty() {
        return None;
    }
    haystack
        .char_indices()
        .filter(|&(i, _)| i >= from)
        .find_map(|(start, _)| match_at(&haystack[start..], &needle).map(|len| (start, start + len)))
}

fn match_at(rest: &str, words: &[&str]) -> Option<usize> {
    let mut consumed = 0;
    for (k, word) in words.iter().enumerate() {
        if k > 0 {
            let ws: usize = rest[consumed..].chars().take_while(|c| c.is_whitespace()).map(char::len_utf8).sum();
            if ws == 0 {
                return None;
            }
            consumed += ws;
        }
        let mut hay = rest[consumed..].chars();
        for wc in word.chars() {
            let hc = hay.next()?;
            if !hc.to_lowercase().eq(wc.to_lowercase()) {
                return None;
            }
            consumed += hc.len_utf8();
        }
    }
    Some(consumed)
}

/// Converts a byte offset into a character index.
pub fn char_index(s: &str, byte_offset: usize) -> usize {
    s[..byte_offset].chars().count()
}

/// Converts a character index into a byte offset, if it is in range.
pub fn byte_offset(s: &str, char_index: usize) -> Option<usize> {
    if char_index == s.chars().count() {
        return Some(s.len());
    }
    s.char_indices().nth(char_index).map(|(b, _)| b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_and_lowercases() {
        assert_eq!(normalize("  Fulminant\tType 1\n Diabetes "), "fulminant type 1 diabetes");
        assert_eq!(normalize("   "), "");
    }

    #[test]
    fn loose_find_spans_line_breaks() {
        let text = "cause upper respiratory\n   tract irritation";
        let (s, e) = find_loose(text, "respiratory tract").unwrap();
        assert_eq!(&text[s..e], "respiratory\n   tract");
        assert!(find_loose(text, "respiratorytract").is_none());
    }

    #[test]
    fn loose_find_ignores_case_and_handles_multibyte() {
        let text = "destruction of the pancreatic β cells";
        let (s, e) = find_loose(text, "Pancreatic Β Cells").unwrap();
        assert_eq!(&text[s..e], "pancreatic β cells");
        assert_eq!(char_index(text, s), 19);
        assert_eq!(byte_offset(text, 19), Some(s));
    }

    #[test]
    fn find_from_skips_earlier_matches() {
        let text = "cow and cow";
        assert_eq!(find_loose_from(text, "cow", 1), Some((8, 11)));
    }
}
