//! Shared lexer for the constraint grammar and the migration DSL.

use crate::error::ConstraintError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Str,
    Int,
    Float,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Dot,
    Comma,
    Colon,
    Assign, // :=
    Arrow,  // =>
    Plus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is_kw(&self, kw: &str) -> bool {
        self.kind == TokKind::Ident && self.text == kw
    }
}

pub struct Lexer;

impl Lexer {
    /// Tokenizes a whole document. `//` starts a line comment.
    pub fn tokenize(input: &str) -> Result<Vec<Token>, ConstraintError> {
        let mut toks = Vec::new();
        let chars: Vec<char> = input.chars().collect();
        let mut i = 0;
        let mut line: u32 = 1;
        let mut col: u32 = 1;

        let err = |line: u32, col: u32, msg: String| ConstraintError::Parse { line, col, msg };

        while i < chars.len() {
            let c = chars[i];
            let (tl, tc) = (line, col);
            let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            };

            if c.is_whitespace() {
                advance(&mut i, &mut line, &mut col);
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                while i < chars.len() && chars[i] != '\n' {
                    advance(&mut i, &mut line, &mut col);
                }
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    advance(&mut i, &mut line, &mut col);
                }
                toks.push(Token {
                    kind: TokKind::Ident,
                    text: chars[start..i].iter().collect(),
                    line: tl,
                    col: tc,
                });
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col);
                }
                let mut kind = TokKind::Int;
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    kind = TokKind::Float;
                    advance(&mut i, &mut line, &mut col); // '.'
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        advance(&mut i, &mut line, &mut col);
                    }
                }
                toks.push(Token {
                    kind,
                    text: chars[start..i].iter().collect(),
                    line: tl,
                    col: tc,
                });
                continue;
            }
            if c == '"' {
                advance(&mut i, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(err(tl, tc, "unterminated string".into()));
                    }
                    match chars[i] {
                        '"' => {
                            advance(&mut i, &mut line, &mut col);
                            break;
                        }
                        '\\' => {
                            advance(&mut i, &mut line, &mut col);
                            let esc = *chars
                                .get(i)
                                .ok_or_else(|| err(tl, tc, "unterminated escape".into()))?;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                '\\' => '\\',
                                '"' => '"',
                                other => {
                                    return Err(err(
                                        line,
                                        col,
                                        format!("unknown escape `\\{other}`"),
                                    ))
                                }
                            });
                            advance(&mut i, &mut line, &mut col);
                        }
                        ch => {
                            s.push(ch);
                            advance(&mut i, &mut line, &mut col);
                        }
                    }
                }
                toks.push(Token { kind: TokKind::Str, text: s, line: tl, col: tc });
                continue;
            }

            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (kind, len) = match two.as_str() {
                ":=" => (TokKind::Assign, 2),
                "=>" => (TokKind::Arrow, 2),
                "!=" => (TokKind::Ne, 2),
                "<=" => (TokKind::Le, 2),
                ">=" => (TokKind::Ge, 2),
                _ => match c {
                    '(' => (TokKind::LParen, 1),
                    ')' => (TokKind::RParen, 1),
                    '{' => (TokKind::LBrace, 1),
                    '}' => (TokKind::RBrace, 1),
                    '.' => (TokKind::Dot, 1),
                    ',' => (TokKind::Comma, 1),
                    ':' => (TokKind::Colon, 1),
                    '+' => (TokKind::Plus, 1),
                    '=' => (TokKind::Eq, 1),
                    '<' => (TokKind::Lt, 1),
                    '>' => (TokKind::Gt, 1),
                    other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
                },
            };
            let text: String = chars[i..i + len].iter().collect();
            for _ in 0..len {
                advance(&mut i, &mut line, &mut col);
            }
            toks.push(Token { kind, text, line: tl, col: tc });
        }
        toks.push(Token { kind: TokKind::Eof, text: String::new(), line, col });
        Ok(toks)
    }
}
