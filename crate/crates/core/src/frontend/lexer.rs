//! Tokens and s-expressions of the SMT-LIB concrete syntax.

use std::fmt;

use super::FrontendError;

/// A region of the input. Lines and columns are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

impl SourceSpan {
    /// Smallest span covering both.
    pub fn to(self, end: SourceSpan) -> SourceSpan {
        SourceSpan { len: (end.offset + end.len).saturating_sub(self.offset).max(1), ..self }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomKind {
    Symbol,
    Keyword,
    Numeral,
    Decimal,
    Str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom { kind: AtomKind, text: String, span: SourceSpan },
    List { items: Vec<Sexp>, span: SourceSpan },
}

impl Sexp {
    pub fn span(&self) -> SourceSpan {
        match self {
            Sexp::Atom { span, .. } | Sexp::List { span, .. } => *span,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Sexp::Atom { kind: AtomKind::Symbol, text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom { kind: AtomKind::Str, text, .. } => {
                write!(f, "\"{}\"", text.replace('"', "\"\""))
            }
            Sexp::Atom { text, .. } => f.write_str(text),
            Sexp::List { items, .. } => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> SourceSpan {
        SourceSpan { offset: self.pos, line: self.line, column: self.column, len: 1 }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
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
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// Reads every top-level s-expression of `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, FrontendError> {
    let mut cur = Cursor { src, pos: 0, line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        cur.skip_trivia();
        if cur.peek().is_none() {
            return Ok(out);
        }
        out.push(read_one(&mut cur)?);
    }
}

fn read_one(cur: &mut Cursor<'_>) -> Result<Sexp, FrontendError> {
    cur.skip_trivia();
    let start = cur.here();
    let Some(c) = cur.peek() else {
        return Err(FrontendError::parse(start, "unexpected end of input", &["(", "atom"]));
    };
    match c {
        '(' => {
            cur.bump();
            let mut items = Vec::new();
            loop {
                cur.skip_trivia();
                match cur.peek() {
                    None => {
                        return Err(FrontendError::parse(start, "unclosed parenthesis", &[")"]));
                    }
                    Some(')') => {
                        let end = cur.here();
                        cur.bump();
                        return Ok(Sexp::List { items, span: start.to(end) });
                    }
                    Some(_) => items.push(read_one(cur)?),
                }
            }
        }
        ')' => Err(FrontendError::parse(start, "unexpected ')'", &["(", "atom"])),
        '"' => {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None => return Err(FrontendError::parse(start, "unterminated string literal", &["\""])),
                    Some('"') => {
                        if cur.peek() == Some('"') {
                            cur.bump();
                            text.push('"');
                        } else {
                            break;
                        }
                    }
                    Some(c) => text.push(c),
                }
            }
            Ok(Sexp::Atom { kind: AtomKind::Str, text, span: start.to(span_before(cur)) })
        }
        '|' => {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None => return Err(FrontendError::parse(start, "unterminated quoted symbol", &["|"])),
                    Some('|') => break,
                    Some(c) => text.push(c),
                }
            }
            Ok(Sexp::Atom { kind: AtomKind::Symbol, text, span: start.to(span_before(cur)) })
        }
        ':' => {
            cur.bump();
            let text = take_while(cur, is_symbol_char);
            Ok(Sexp::Atom { kind: AtomKind::Keyword, text: format!(":{text}"), span: start.to(span_before(cur)) })
        }
        c if c.is_ascii_digit() => {
            let mut text = take_while(cur, |c| c.is_ascii_digit());
            let mut kind = AtomKind::Numeral;
            if cur.peek() == Some('.') {
                cur.bump();
                let frac = take_while(cur, |c| c.is_ascii_digit());
                if frac.is_empty() {
                    return Err(FrontendError::parse(cur.here(), "malformed decimal", &["digit"]));
                }
                text = format!("{text}.{frac}");
                kind = AtomKind::Decimal;
            }
            if cur.peek().is_some_and(is_symbol_char) {
                return Err(FrontendError::parse(cur.here(), "malformed number", &["whitespace", ")"]));
            }
            if kind == AtomKind::Numeral && text.len() > 1 && text.starts_with('0') {
                return Err(FrontendError::parse(start, "numeral with leading zero", &["numeral"]));
            }
            Ok(Sexp::Atom { kind, text, span: start.to(span_before(cur)) })
        }
        c if is_symbol_char(c) => {
            let text = take_while(cur, is_symbol_char);
            Ok(Sexp::Atom { kind: AtomKind::Symbol, text, span: start.to(span_before(cur)) })
        }
        other => Err(FrontendError::parse(start, format!("unexpected character '{other}'"), &["(", "atom"])),
    }
}

fn span_before(cur: &Cursor<'_>) -> SourceSpan {
    SourceSpan { offset: cur.pos.saturating_sub(1), line: cur.line, column: cur.column, len: 1 }
}

fn take_while(cur: &mut Cursor<'_>, f: impl Fn(char) -> bool) -> String {
    let start = cur.pos;
    while cur.peek().is_some_and(&f) {
        cur.bump();
    }
    cur.src[start..cur.pos].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_atoms() {
        let s = read_all("(assert (= t1 (Node t2 5.0 t3))) ; trailing\n(check-sat)").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].to_string(), "(assert (= t1 (Node t2 5.0 t3)))");
        assert_eq!(s[1].span().line, 2);
    }

    #[test]
    fn unclosed_list_points_at_open_paren() {
        let e = read_all("\n  (assert (= a b)").unwrap_err();
        let span = e.span().unwrap();
        assert_eq!((span.line, span.column), (2, 3));
    }

    #[test]
    fn string_escapes() {
        let s = read_all("\"a\"\"b\"").unwrap();
        match &s[0] {
            Sexp::Atom { kind: AtomKind::Str, text, .. } => assert_eq!(text, "a\"b"),
            _ => panic!(),
        }
    }

    #[test]
    fn span_length_covers_atom() {
        let s = read_all("  hello").unwrap();
        assert_eq!(s[0].span().len, 5);
        assert_eq!(s[0].span().column, 3);
    }
}
