use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, serde::Serialize)]
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
    Number(f64),
    /// `|0>` or `|1>`
    Ket(u8),
    /// `M{i,j,...}`
    Meas(Vec<usize>),
    Backslash,
    Dot,
    Bang,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    Semi,
    Colon,
    Let,
    In,
    If,
    Then,
    Else,
    Gate,
    Sqrt,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Ket(b) => format!("`|{b}>`"),
            Tok::Meas(_) => "measurement constant".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::Backslash => "\\",
            Tok::Dot => ".",
            Tok::Bang => "!",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Star => "*",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Slash => "/",
            Tok::Eq => "=",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Let => "let",
            Tok::In => "in",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::Gate => "gate",
            Tok::Sqrt => "sqrt",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let single = match c {
            '\\' | 'λ' => Some(Tok::Backslash),
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => Some(Tok::Dot),
            '!' => Some(Tok::Bang),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '*' | '⊗' => Some(Tok::Star),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '/' => Some(Tok::Slash),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            bump!();
            continue;
        }
        if c == '|' {
            let s: String = chars[i..(i + 3).min(chars.len())].iter().collect();
            let bit = match s.as_str() {
                "|0>" => 0,
                "|1>" => 1,
                _ => return Err(LexError { pos, message: "expected `|0>` or `|1>`".into() }),
            };
            for _ in 0..3 {
                bump!();
            }
            out.push((Tok::Ket(bit), pos));
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                bump!();
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                bump!();
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    bump!();
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<f64>()
                .map_err(|_| LexError { pos, message: format!("malformed number `{text}`") })?;
            out.push((Tok::Number(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            if word == "M" && chars.get(i) == Some(&'{') {
                bump!();
                let mut indices = Vec::new();
                let mut digits = String::new();
                loop {
                    let Some(&d) = chars.get(i) else {
                        return Err(LexError { pos, message: "unterminated `M{`".into() });
                    };
                    bump!();
                    match d {
                        '0'..='9' => digits.push(d),
                        ',' | '}' => {
                            let n: usize = digits.parse().map_err(|_| LexError {
                                pos,
                                message: "measurement indices must be positive integers".into(),
                            })?;
                            indices.push(n);
                            digits.clear();
                            if d == '}' {
                                break;
                            }
                        }
                        ' ' => {}
                        _ => {
                            return Err(LexError { pos, message: format!("unexpected `{d}` in measurement set") })
                        }
                    }
                }
                out.push((Tok::Meas(indices), pos));
                continue;
            }
            let tok = match word.as_str() {
                "let" => Tok::Let,
                "in" => Tok::In,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                "gate" => Tok::Gate,
                "sqrt" => Tok::Sqrt,
                _ => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        return Err(LexError { pos, message: format!("unexpected character `{c}`") });
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn lexes_core_tokens() {
        assert_eq!(
            toks(r"\!x. M{1, 2} !|0> * y' # comment"),
            vec![
                Tok::Backslash,
                Tok::Bang,
                Tok::Ident("x".into()),
                Tok::Dot,
                Tok::Meas(vec![1, 2]),
                Tok::Bang,
                Tok::Ket(0),
                Tok::Star,
                Tok::Ident("y'".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("(0.6, -1e-3)")[1], Tok::Number(0.6));
        assert_eq!(toks("(0.6, -1e-3)")[4], Tok::Number(1e-3));
        assert_eq!(toks("M x")[0], Tok::Ident("M".into()));
    }

    #[test]
    fn positions_and_errors() {
        let t = lex("x\n  y").unwrap();
        assert_eq!(t[1].1, Pos { line: 2, col: 3 });
        assert!(lex("|2>").is_err());
        assert!(lex("M{1,a}").is_err());
        assert!(lex("M{}").is_err());
        assert!(lex("$").is_err());
    }
}
