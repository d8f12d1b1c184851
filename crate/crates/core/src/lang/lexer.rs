//! Tokeniser shared by the model, composition and property grammars.

use std::fmt;

use super::ParseError;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Num(f64),
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Prime,
    DotDot,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Bang,
    Arrow,
    LeftArrow,
    Plus,
    Minus,
    Star,
    Slash,
    Question,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Num(x) => return write!(f, "`{x}`"),
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Prime => "'",
            Tok::DotDot => "..",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Bang => "!",
            Tok::Arrow => "->",
            Tok::LeftArrow => "<-",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Question => "?",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Byte offset one past the token, used to detect adjacency (`|[`, `]|`, `||`).
    pub end: usize,
    pub start: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            let c = chars[i].1;
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }};
    }

    let offset = |k: usize| -> usize { chars.get(k).map(|&(b, _)| b).unwrap_or(src.len()) };

    while i < chars.len() {
        let c = chars[i].1;
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1).map(|p| p.1) == Some('/') {
            while i < chars.len() && chars[i].1 != '\n' {
                bump!();
            }
            continue;
        }
        let pos = Pos { line, col };
        let start = offset(i);
        let next = chars.get(i + 1).map(|p| p.1);

        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                s.push(chars[i].1);
                bump!();
            }
            out.push(Token { tok: Tok::Ident(s), pos, start, end: offset(i) });
            continue;
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                s.push(chars[i].1);
                bump!();
            }
            // `0..1` is a range, not a decimal
            let is_frac = i + 1 < chars.len()
                && chars[i].1 == '.'
                && chars[i + 1].1.is_ascii_digit();
            let mut is_float = false;
            if is_frac {
                is_float = true;
                s.push('.');
                bump!();
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    s.push(chars[i].1);
                    bump!();
                }
            }
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let sign = chars.get(i + 1).map(|p| p.1);
                let digit_at = if matches!(sign, Some('+') | Some('-')) { i + 2 } else { i + 1 };
                if chars.get(digit_at).is_some_and(|p| p.1.is_ascii_digit()) {
                    is_float = true;
                    while i < digit_at {
                        s.push(chars[i].1);
                        bump!();
                    }
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        s.push(chars[i].1);
                        bump!();
                    }
                }
            }
            let tok = if is_float {
                Tok::Num(s.parse().map_err(|_| ParseError::at(pos, format!("bad number `{s}`")))?)
            } else {
                Tok::Int(s.parse().map_err(|_| ParseError::at(pos, format!("integer `{s}` out of range")))?)
            };
            out.push(Token { tok, pos, start, end: offset(i) });
            continue;
        } else {
            let (tok, width) = match (c, next) {
                ('.', Some('.')) => (Tok::DotDot, 2),
                ('!', Some('=')) => (Tok::Ne, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('<', Some('-')) => (Tok::LeftArrow, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('←', _) => (Tok::LeftArrow, 1),
                ('→', _) => (Tok::Arrow, 1),
                ('≤', _) => (Tok::Le, 1),
                ('≥', _) => (Tok::Ge, 1),
                ('∧', _) => (Tok::Amp, 1),
                ('∨', _) => (Tok::Pipe, 1),
                ('¬', _) => (Tok::Bang, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (';', _) => (Tok::Semi, 1),
                (':', _) => (Tok::Colon, 1),
                (',', _) => (Tok::Comma, 1),
                ('\'', _) => (Tok::Prime, 1),
                ('=', _) => (Tok::Eq, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Pipe, 1),
                ('!', _) => (Tok::Bang, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                ('?', _) => (Tok::Question, 1),
                _ => return Err(ParseError::at(pos, format!("unexpected character `{c}`"))),
            };
            for _ in 0..width {
                bump!();
            }
            tok
        };
        out.push(Token { tok, pos, start, end: offset(i) });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col }, start: src.len(), end: src.len() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ranges_are_not_decimals() {
        assert_eq!(
            toks("[0..2]"),
            vec![Tok::LBracket, Tok::Int(0), Tok::DotDot, Tok::Int(2), Tok::RBracket, Tok::Eof]
        );
        assert_eq!(toks("2.5"), vec![Tok::Num(2.5), Tok::Eof]);
        assert_eq!(toks("1e-3"), vec![Tok::Num(1e-3), Tok::Eof]);
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// header\n  R1' <- x").unwrap();
        assert_eq!(t[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(t[1].tok, Tok::Prime);
        assert_eq!(t[2].tok, Tok::LeftArrow);
    }

    #[test]
    fn unicode_operators() {
        assert_eq!(toks("a ← b ∧ c ≤ 3"), toks("a <- b & c <= 3"));
    }

    #[test]
    fn stray_character_is_located() {
        let err = tokenize("x\n  #").unwrap_err();
        assert_eq!(err.pos, Some(Pos { line: 2, col: 3 }));
    }
}
