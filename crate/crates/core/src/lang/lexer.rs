use super::{LangError, LangErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Lowercase-initial identifier or quoted atom.
    Name(String, bool),
    Var(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Bar,
    Slash,
    Neck,
    Arrow,
    Not,
    Eq,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Name(n, _) => format!("name `{n}`"),
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Str(_) => "string".to_string(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Arrow => "`~>`".into(),
            Tok::Not => "`\\+`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, LangError> {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let (line, column) = (lx.line, lx.column);
        let tok = lx.next_tok()?;
        let done = tok == Tok::Eof;
        out.push(Spanned { tok, line, column });
        if done {
            return Ok(out);
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, msg: impl Into<String>) -> LangError {
        LangError::new(LangErrorKind::Syntax(msg.into()), line, column)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_tok(&mut self) -> Result<Tok, LangError> {
        let (line, column) = (self.line, self.column);
        let Some(c) = self.peek() else {
            return Ok(Tok::Eof);
        };
        let single = |lx: &mut Lexer, t: Tok| {
            lx.bump();
            Ok(t)
        };
        match c {
            '(' => single(self, Tok::LParen),
            ')' => single(self, Tok::RParen),
            '[' => single(self, Tok::LBracket),
            ']' => single(self, Tok::RBracket),
            '{' => single(self, Tok::LBrace),
            '}' => single(self, Tok::RBrace),
            ',' => single(self, Tok::Comma),
            '.' => single(self, Tok::Dot),
            '|' => single(self, Tok::Bar),
            '/' => single(self, Tok::Slash),
            '=' => single(self, Tok::Eq),
            ':' if self.peek_at(1) == Some('-') => {
                self.bump();
                self.bump();
                Ok(Tok::Neck)
            }
            '~' if self.peek_at(1) == Some('>') => {
                self.bump();
                self.bump();
                Ok(Tok::Arrow)
            }
            '\\' if self.peek_at(1) == Some('+') => {
                self.bump();
                self.bump();
                Ok(Tok::Not)
            }
            '"' => {
                self.bump();
                Ok(Tok::Str(self.quoted('"', line, column)?))
            }
            '\'' => {
                self.bump();
                Ok(Tok::Name(self.quoted('\'', line, column)?, true))
            }
            '-' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => {
                self.bump();
                self.integer(true, line, column)
            }
            d if d.is_ascii_digit() => self.integer(false, line, column),
            a if a.is_ascii_lowercase() => Ok(Tok::Name(self.ident(), false)),
            v if v.is_ascii_uppercase() || v == '_' => Ok(Tok::Var(self.ident())),
            other => Err(self.error(line, column, format!("unexpected character `{other}`"))),
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn integer(&mut self, negative: bool, line: usize, column: usize) -> Result<Tok, LangError> {
        let mut s = String::from(if negative { "-" } else { "" });
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self
            .peek()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        {
            return Err(self.error(line, column, "malformed number"));
        }
        s.parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| self.error(line, column, format!("integer `{s}` out of range")))
    }

    fn quoted(&mut self, quote: char, line: usize, column: usize) -> Result<String, LangError> {
        let mut s = String::new();
        loop {
            let (el, ec) = (self.line, self.column);
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated quoted text")),
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('\\') => s.push('\\'),
                    Some(c) if c == quote => s.push(c),
                    Some(c) => {
                        return Err(self.error(el, ec, format!("unknown escape `\\{c}`")));
                    }
                    None => return Err(self.error(line, column, "unterminated quoted text")),
                },
                Some(c) => s.push(c),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn punctuation_and_operators() {
        assert_eq!(
            toks("f(X) { \\+ p } ~> g :- h = -5. % comment"),
            vec![
                Tok::Name("f".into(), false),
                Tok::LParen,
                Tok::Var("X".into()),
                Tok::RParen,
                Tok::LBrace,
                Tok::Not,
                Tok::Name("p".into(), false),
                Tok::RBrace,
                Tok::Arrow,
                Tok::Name("g".into(), false),
                Tok::Neck,
                Tok::Name("h".into(), false),
                Tok::Eq,
                Tok::Int(-5),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            toks(r#""a\"b\\c\nd\te""#),
            vec![Tok::Str("a\"b\\c\nd\te".into()), Tok::Eof]
        );
        let err = tokenize(r#""bad \q""#).unwrap_err();
        assert_eq!((err.line, err.column), (1, 6));
    }

    #[test]
    fn positions_track_lines() {
        let t = tokenize("a\n  b").unwrap();
        assert_eq!((t[1].line, t[1].column), (2, 3));
    }
}
