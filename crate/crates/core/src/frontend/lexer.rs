// SPDX-License-Identifier: Apache-2.0

use super::{FrontendError, SourceLoc};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(u64),
    /// Punctuation and operators, longest match first.
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

const SYMBOLS: &[&str] = &[
    "..", "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ":",
    ",", ".", "=", "@", "+", "-", "*", "/", "%", "&", "|", "^", "<", ">", "~", "!", "?",
];

pub(crate) fn lex(src: &str, file: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1u32, 1u32);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
            col += (i - start) as u32;
            let v = crate::expr::parse_number(&text).ok_or_else(|| FrontendError::Syntax {
                loc: SourceLoc::new(file, tl, tc),
                message: format!("invalid number `{text}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len() as u32;
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    column: tc,
                });
            }
            None => {
                return Err(FrontendError::Syntax {
                    loc: SourceLoc::new(file, tl, tc),
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_lines_and_columns() {
        let toks = lex("a = 1;\n  // note\n  for i in 0..2", "f.mh").unwrap();
        let pos: Vec<(u32, u32)> = toks.iter().map(|t| (t.line, t.column)).collect();
        assert_eq!(
            pos,
            vec![(1, 1), (1, 3), (1, 5), (1, 6), (3, 3), (3, 7), (3, 9), (3, 12), (3, 13), (3, 15), (3, 16)]
        );
        assert_eq!(toks[8].tok, Tok::Sym(".."));
    }

    #[test]
    fn rejects_stray_characters() {
        let err = lex("a = #;", "x.mh").unwrap_err();
        assert_eq!(err.loc().column, 5);
    }
}
