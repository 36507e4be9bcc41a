use std::fmt;

use super::FrontendError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Lower-case identifier: variables, functions, methods, laws.
    Ident(String),
    /// Upper-case identifier: types, constructors, classes.
    ConId(String),
    Data,
    Class,
    Instance,
    Where,
    Law,
    Eq,
    Bar,
    DColon,
    Arrow,
    FatArrow,
    Equiv,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Underscore,
    Op(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::ConId(s) => write!(f, "constructor `{s}`"),
            Tok::Data => f.write_str("`data`"),
            Tok::Class => f.write_str("`class`"),
            Tok::Instance => f.write_str("`instance`"),
            Tok::Where => f.write_str("`where`"),
            Tok::Law => f.write_str("`law`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::DColon => f.write_str("`::`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::FatArrow => f.write_str("`=>`"),
            Tok::Equiv => f.write_str("`===`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Underscore => f.write_str("`_`"),
            Tok::Op(s) => write!(f, "operator `{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OP_CHARS: &str = "+*<>=|:-";

pub fn lex(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // line comment
        if c == '-' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) != Some(&'>') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '{' && chars.get(i + 1) == Some(&'-') {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(FrontendError::Lex {
                            line: sl,
                            col: sc,
                            message: "unterminated block comment".into(),
                        })
                    }
                    Some('-') if chars.get(i + 1) == Some(&'}') => {
                        i += 2;
                        col += 2;
                        break;
                    }
                    Some('\n') => {
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(_) => {
                        i += 1;
                        col += 1;
                    }
                }
            }
            continue;
        }
        let start_col = col;
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col: start_col });
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = match word.as_str() {
                "_" => Tok::Underscore,
                "data" => Tok::Data,
                "class" => Tok::Class,
                "instance" => Tok::Instance,
                "where" => Tok::Where,
                "law" => Tok::Law,
                _ if c.is_uppercase() => Tok::ConId(word),
                _ if c == '_' => {
                    return Err(FrontendError::Lex {
                        line,
                        col,
                        message: format!("identifiers may not start with `_`: `{word}`"),
                    })
                }
                _ => Tok::Ident(word),
            };
            push(&mut out, tok);
            col += j - i;
            i = j;
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = simple {
            push(&mut out, tok);
            i += 1;
            col += 1;
            continue;
        }
        if OP_CHARS.contains(c) {
            let mut j = i;
            while j < chars.len() && OP_CHARS.contains(chars[j]) {
                j += 1;
            }
            let op: String = chars[i..j].iter().collect();
            let tok = match op.as_str() {
                "=" => Tok::Eq,
                "|" => Tok::Bar,
                "::" => Tok::DColon,
                "->" => Tok::Arrow,
                "=>" => Tok::FatArrow,
                "===" => Tok::Equiv,
                "+" | "*" | "++" | "<>" => Tok::Op(op),
                _ => {
                    return Err(FrontendError::Lex {
                        line,
                        col,
                        message: format!("unknown operator `{op}`"),
                    })
                }
            };
            push(&mut out, tok);
            col += j - i;
            i = j;
            continue;
        }
        return Err(FrontendError::Lex {
            line,
            col,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
