use super::ast::Span;
use super::error::DslError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Numeric literal, kept as written.
    Number(String),
    Str(String),
    Colon,
    Comma,
    Eq,
    Arrow,
    Semi,
    Bar2,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Bar2 => "`||`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, out: &mut String, f: impl Fn(char) -> bool) {
        while let Some(c) = self.peek().filter(|&c| f(c)) {
            out.push(c);
            self.bump();
        }
    }
}

fn syntax(span: Span, message: impl Into<String>) -> DslError {
    DslError::Syntax { span, message: message.into() }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let mut cur = Cursor { chars: src.chars().peekable(), line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let span = Span::new(cur.line, cur.col);
        let single = |t: Tok| Token { tok: t, span };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                cur.bump();
            }
            '#' => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            ':' | ',' | '=' | ';' | '(' | ')' | '[' | ']' => {
                cur.bump();
                out.push(single(match c {
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    '=' => Tok::Eq,
                    ';' => Tok::Semi,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBrack,
                    _ => Tok::RBrack,
                }));
            }
            '|' => {
                cur.bump();
                if cur.bump() != Some('|') {
                    return Err(syntax(span, "expected `||`"));
                }
                out.push(single(Tok::Bar2));
            }
            '-' | '+' | '.' | '0'..='9' => {
                let mut text = String::new();
                if c == '-' || c == '+' {
                    text.push(c);
                    cur.bump();
                    if c == '-' && cur.peek() == Some('>') {
                        cur.bump();
                        out.push(single(Tok::Arrow));
                        continue;
                    }
                }
                cur.take_while(&mut text, |c| c.is_ascii_digit() || c == '.');
                if matches!(cur.peek(), Some('e' | 'E')) {
                    text.push(cur.bump().unwrap_or('e'));
                    if let Some(s @ ('+' | '-')) = cur.peek() {
                        text.push(s);
                        cur.bump();
                    }
                    cur.take_while(&mut text, |c| c.is_ascii_digit());
                }
                if text.parse::<f64>().is_err() {
                    return Err(syntax(span, format!("malformed number `{text}`")));
                }
                out.push(single(Tok::Number(text)));
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => return Err(syntax(span, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(syntax(span, "invalid escape in string")),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                out.push(single(Tok::Str(s)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                cur.take_while(&mut s, |c| c.is_ascii_alphanumeric() || c == '_');
                out.push(single(Tok::Ident(s)));
            }
            other => return Err(syntax(span, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(cur.line, cur.col) });
    Ok(out)
}
