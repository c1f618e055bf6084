//! Prefixed code symbols (`@25 $814 &778`) and raw-token escaping.

use std::borrow::Cow;

use thiserror::Error;

use crate::pq::CodeTuple;

/// Prefix of the symbol for subspace `i`.
pub const PREFIXES: [char; 8] = ['@', '$', '&', '#', '%', '=', '+', '~'];
pub const MAX_SUBSPACES: usize = PREFIXES.len();
pub const ESCAPE: char = '\\';

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SymbolError {
    #[error("token {position}: expected {expected} symbols, found {found}")]
    WrongArity {
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error("token {position}: expected prefix {expected:?}, found {found:?}")]
    WrongPrefixOrder {
        position: usize,
        expected: char,
        found: String,
    },
    #[error("token {position}: index {index} out of range for subspace {subspace} ({k} centroids)")]
    OutOfRangeIndex {
        position: usize,
        subspace: usize,
        index: u64,
        k: usize,
    },
    #[error("token {position}: {found:?} has no decimal payload")]
    NonNumericPayload { position: usize, found: String },
}

/// Symbol strings for a tuple: `prefixes[i]` followed by the decimal index.
pub fn format_symbols(t: &CodeTuple, prefixes: &[char]) -> Vec<String> {
    assert!(prefixes.len() >= t.len(), "one prefix per subspace required");
    t.indices()
        .iter()
        .zip(prefixes)
        .map(|(j, p)| format!("{p}{j}"))
        .collect()
}

/// Splits a token into (prefix char, payload) when it starts with one of
/// the reserved prefixes.
fn split_prefix(tok: &str) -> Option<(char, &str)> {
    let c = tok.chars().next()?;
    PREFIXES.contains(&c).then(|| (c, &tok[c.len_utf8()..]))
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// True for tokens of the form `<prefix><digits>`, with any reserved prefix.
pub fn is_symbol(tok: &str) -> bool {
    split_prefix(tok).is_some_and(|(_, rest)| is_digits(rest))
}

/// Prefix and numeric payload of a symbol token. Payloads too large for u64
/// saturate, which is always out of range.
pub fn symbol_parts(tok: &str) -> Option<(char, u64)> {
    let (p, rest) = split_prefix(tok)?;
    if !is_digits(rest) {
        return None;
    }
    Some((p, rest.parse().unwrap_or(u64::MAX)))
}

/// Prefixes a raw token with a backslash when it could be mistaken for a
/// symbol or already starts with a backslash.
pub fn escape(tok: &str) -> Cow<'_, str> {
    if is_symbol(tok) || tok.starts_with(ESCAPE) {
        Cow::Owned(format!("{ESCAPE}{tok}"))
    } else {
        Cow::Borrowed(tok)
    }
}

/// Removes one leading backslash, if any.
pub fn unescape(tok: &str) -> &str {
    tok.strip_prefix(ESCAPE).unwrap_or(tok)
}

/// Parses exactly `ks.len()` symbols in prefix order.
pub fn parse_symbols(tokens: &[&str], prefixes: &[char], ks: &[usize]) -> Result<CodeTuple, SymbolError> {
    let m = ks.len();
    if tokens.len() != m {
        return Err(SymbolError::WrongArity {
            position: tokens.len().min(m),
            expected: m,
            found: tokens.len(),
        });
    }
    let mut out = Vec::with_capacity(m);
    for (i, tok) in tokens.iter().enumerate() {
        let (p, rest) = match tok.chars().next() {
            Some(c) => (c, &tok[c.len_utf8()..]),
            None => {
                return Err(SymbolError::NonNumericPayload {
                    position: i,
                    found: (*tok).to_owned(),
                })
            }
        };
        if p != prefixes[i] {
            return Err(SymbolError::WrongPrefixOrder {
                position: i,
                expected: prefixes[i],
                found: (*tok).to_owned(),
            });
        }
        if !is_digits(rest) {
            return Err(SymbolError::NonNumericPayload {
                position: i,
                found: (*tok).to_owned(),
            });
        }
        let index: u64 = rest.parse().unwrap_or(u64::MAX);
        if index >= ks[i] as u64 {
            return Err(SymbolError::OutOfRangeIndex {
                position: i,
                subspace: i,
                index,
                k: ks[i],
            });
        }
        out.push(index as u32);
    }
    Ok(CodeTuple(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn format_running_example() {
        assert_eq!(
            format_symbols(&CodeTuple(vec![25, 814, 778]), &PREFIXES),
            vec!["@25", "$814", "&778"]
        );
        assert_eq!(format_symbols(&CodeTuple(vec![7]), &PREFIXES), vec!["@7"]);
        assert_eq!(format_symbols(&CodeTuple(vec![0, 10]), &PREFIXES), vec!["@0", "$10"]);
    }

    #[test]
    fn parse_running_example() {
        let ks = [1000, 1000, 1000];
        assert_eq!(
            parse_symbols(&["@25", "$814", "&778"], &PREFIXES, &ks),
            Ok(CodeTuple(vec![25, 814, 778]))
        );
        assert!(matches!(
            parse_symbols(&["$814", "@25", "&778"], &PREFIXES, &ks),
            Err(SymbolError::WrongPrefixOrder { position: 0, expected: '@', .. })
        ));
        assert!(matches!(
            parse_symbols(&["@25", "$814"], &PREFIXES, &ks),
            Err(SymbolError::WrongArity { expected: 3, found: 2, .. })
        ));
        assert!(matches!(
            parse_symbols(&["@25", "$814", "&1000"], &PREFIXES, &ks),
            Err(SymbolError::OutOfRangeIndex { position: 2, index: 1000, k: 1000, .. })
        ));
        assert!(matches!(
            parse_symbols(&["@25", "$x1", "&1"], &PREFIXES, &ks),
            Err(SymbolError::NonNumericPayload { position: 1, .. })
        ));
        assert!(matches!(
            parse_symbols(&["@99999999999999999999999", "$1", "&1"], &PREFIXES, &ks),
            Err(SymbolError::OutOfRangeIndex { index: u64::MAX, .. })
        ));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("@12"), "\\@12");
        assert_eq!(escape("~0"), "\\~0");
        assert_eq!(escape("\\x"), "\\\\x");
        assert_eq!(escape("@abc"), "@abc");
        assert_eq!(escape("@"), "@");
        assert_eq!(escape("火车"), "火车");
        assert!(!is_symbol(&escape("#5")));
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(idx in proptest::collection::vec(0u32..5000, 1..=8)) {
            let t = CodeTuple(idx);
            let ks = vec![5000; t.len()];
            let syms = format_symbols(&t, &PREFIXES);
            let refs: Vec<&str> = syms.iter().map(String::as_str).collect();
            prop_assert_eq!(parse_symbols(&refs, &PREFIXES, &ks), Ok(t));
        }

        #[test]
        fn escape_is_involutive(tok in "[@$&#%=+~\\\\a-z0-9]{1,6}") {
            let e = escape(&tok);
            prop_assert_eq!(unescape(&e), tok.as_str());
            prop_assert!(!is_symbol(&e));
        }
    }
}
