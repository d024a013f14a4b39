use crate::error::FormulaError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Number(f64),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Colon,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Byte offset into the full input.
    pub pos: usize,
}

/// Tokenize one formula fragment. `base` is the fragment's offset in the
/// original input, so reported positions refer to the whole string.
pub fn lex(src: &str, base: usize) -> Result<Vec<Token>, FormulaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap();
        let pos = base + i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        match c {
            '(' => {
                out.push(Token { tok: Tok::LParen, pos });
                i += 1;
            }
            ')' => {
                out.push(Token { tok: Tok::RParen, pos });
                i += 1;
            }
            ',' => {
                out.push(Token { tok: Tok::Comma, pos });
                i += 1;
            }
            ':' => {
                out.push(Token { tok: Tok::Colon, pos });
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    let Some(ch) = src[j..].chars().next() else {
                        return Err(FormulaError::Syntax { pos, message: "unterminated string".into() });
                    };
                    j += ch.len_utf8();
                    if ch == '"' {
                        if src[j..].starts_with('"') {
                            s.push('"');
                            j += 1;
                        } else {
                            break;
                        }
                    } else {
                        s.push(ch);
                    }
                }
                out.push(Token { tok: Tok::Str(s), pos });
                i = j;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                // a trailing letter means this is not a number (e.g. `1A` is invalid)
                if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                    return Err(FormulaError::Syntax {
                        pos: base + i,
                        message: "unexpected character after number".into(),
                    });
                }
                let text = &src[start..i];
                let n: f64 =
                    text.parse().map_err(|_| FormulaError::Syntax { pos, message: format!("bad number {text:?}") })?;
                out.push(Token { tok: Tok::Number(n), pos });
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'.' | b'$')) {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(src[start..i].to_string()), pos });
            }
            _ => {
                let two = src.get(i..i + 2).unwrap_or("");
                let op: &'static str = match two {
                    "<>" => "<>",
                    "<=" => "<=",
                    ">=" => ">=",
                    _ => match c {
                        '+' => "+",
                        '-' => "-",
                        '*' => "*",
                        '/' => "/",
                        '^' => "^",
                        '&' => "&",
                        '=' => "=",
                        '<' => "<",
                        '>' => ">",
                        '%' => "%",
                        _ => return Err(FormulaError::Syntax { pos, message: format!("unexpected character {c:?}") }),
                    },
                };
                out.push(Token { tok: Tok::Op(op), pos });
                i += op.len();
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos: base + src.len() });
    Ok(out)
}

/// Split input into top-level formula fragments on `|` or `;` outside string
/// literals and parentheses. Returns `(offset, fragment)` pairs.
pub fn split_fragments(src: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth: i32 = 0;
    let mut in_str = false;
    let mut start = 0;
    for (i, c) in src.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => depth += 1,
            ')' if !in_str => depth -= 1,
            '|' | ';' if !in_str && depth <= 0 => {
                out.push((start, &src[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &src[start..]));
    out
}

/// Number of lexical tokens in a formula, or `None` if it does not lex.
pub fn token_count(src: &str) -> Option<usize> {
    let mut n = 0;
    for (off, frag) in split_fragments(src) {
        n += lex(frag, off).ok()?.len() - 1;
    }
    Some(n)
}
