//! Row predicates of the form `col op literal [and col op literal ...]`.
//!
//! Operators: `==`, `!=`, `<`, `<=`, `>`, `>=`, `in (lit, lit, ...)`.
//! Literals are quoted strings (`'x'` or `"x"`) or bare numbers. Column names
//! are bare words or backtick-quoted (`` `KD (nM)` ``). When both the cell and
//! the literal parse as numbers the comparison is numeric, otherwise it is a
//! string comparison.

use std::cmp::Ordering;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("bad filter: {0}")]
    Syntax(String),
    #[error("bad filter: unknown column {0:?}")]
    UnknownColumn(String),
}

impl FilterError {
    /// The offending column, when the problem is a column reference.
    pub fn column(&self) -> Option<&str> {
        match self {
            FilterError::UnknownColumn(c) => Some(c),
            FilterError::Syntax(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

#[derive(Clone, Debug, PartialEq)]
struct Clause {
    column: String,
    index: usize,
    op: Op,
    literals: Vec<String>,
}

/// A compiled filter bound to a column layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    clauses: Vec<Clause>,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Column(String),
    Op(Op),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>, FilterError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |m: String| FilterError::Syntax(m);
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '\'' | '"' | '`' => {
                let end = chars[i + 1..]
                    .iter()
                    .position(|&d| d == c)
                    .ok_or_else(|| syntax(format!("unterminated {c} at offset {i}")))?;
                let text: String = chars[i + 1..i + 1 + end].iter().collect();
                out.push(if c == '`' { Token::Column(text) } else { Token::Quoted(text) });
                i += end + 2;
            }
            '=' | '!' | '<' | '>' => {
                let next = chars.get(i + 1).copied();
                let (op, len) = match (c, next) {
                    ('=', Some('=')) => (Op::Eq, 2),
                    ('!', Some('=')) => (Op::Ne, 2),
                    ('<', Some('=')) => (Op::Le, 2),
                    ('>', Some('=')) => (Op::Ge, 2),
                    ('<', _) => (Op::Lt, 1),
                    ('>', _) => (Op::Gt, 1),
                    _ => return Err(syntax(format!("unexpected {c:?} at offset {i}"))),
                };
                out.push(Token::Op(op));
                i += len;
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()',\"`=!<>".contains(chars[i]) {
                    i += 1;
                }
                out.push(Token::Word(chars[start..i].iter().collect()));
            }
        }
    }
    Ok(out)
}

impl Filter {
    /// Parses `expr` and resolves its columns against `columns`. An empty
    /// expression matches every row.
    pub fn compile(expr: &str, columns: &[String]) -> Result<Self, FilterError> {
        let tokens = tokenize(expr)?;
        let mut clauses = Vec::new();
        let mut it = tokens.into_iter().peekable();
        let syntax = |m: &str| FilterError::Syntax(m.to_string());
        while it.peek().is_some() {
            if !clauses.is_empty() {
                match it.next() {
                    Some(Token::Word(w)) if w.eq_ignore_ascii_case("and") => {}
                    _ => return Err(syntax("clauses must be joined with `and`")),
                }
            }
            let column = match it.next() {
                Some(Token::Word(w) | Token::Column(w)) => w,
                _ => return Err(syntax("expected a column name")),
            };
            let op = match it.next() {
                Some(Token::Op(op)) => op,
                Some(Token::Word(w)) if w == "in" => Op::In,
                _ => return Err(syntax(&format!("expected an operator after {column}"))),
            };
            let literals = if op == Op::In {
                if it.next() != Some(Token::LParen) {
                    return Err(syntax("expected `(` after in"));
                }
                let mut lits = Vec::new();
                loop {
                    match it.next() {
                        Some(Token::Quoted(s) | Token::Word(s)) => lits.push(s),
                        Some(Token::RParen) if lits.is_empty() => break,
                        _ => return Err(syntax("expected a literal in the in-list")),
                    }
                    match it.next() {
                        Some(Token::Comma) => continue,
                        Some(Token::RParen) => break,
                        _ => return Err(syntax("expected `,` or `)` in the in-list")),
                    }
                }
                lits
            } else {
                match it.next() {
                    Some(Token::Quoted(s)) => vec![s],
                    Some(Token::Word(s)) if s.parse::<f64>().is_ok() => vec![s],
                    Some(Token::Word(s)) => return Err(syntax(&format!("bare literal {s:?}; quote strings"))),
                    _ => return Err(syntax(&format!("expected a literal after {column}"))),
                }
            };
            let index = columns
                .iter()
                .position(|c| *c == column)
                .ok_or_else(|| FilterError::UnknownColumn(column.clone()))?;
            clauses.push(Clause { column, index, op, literals });
        }
        Ok(Self { clauses })
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.clauses.iter().map(|c| c.column.as_str())
    }

    pub fn matches(&self, row: &[String]) -> bool {
        self.clauses.iter().all(|c| {
            let cell = row.get(c.index).map(String::as_str).unwrap_or("");
            match c.op {
                Op::In => c.literals.iter().any(|l| compare(cell, l) == Ordering::Equal),
                op => {
                    let ord = compare(cell, &c.literals[0]);
                    match op {
                        Op::Eq => ord == Ordering::Equal,
                        Op::Ne => ord != Ordering::Equal,
                        Op::Lt => ord == Ordering::Less,
                        Op::Le => ord != Ordering::Greater,
                        Op::Gt => ord == Ordering::Greater,
                        Op::Ge => ord != Ordering::Less,
                        Op::In => unreachable!(),
                    }
                }
            }
        })
    }
}

fn compare(cell: &str, literal: &str) -> Ordering {
    match (cell.trim().parse::<f64>(), literal.trim().parse::<f64>()) {
        (Ok(a), Ok(b)) => a.total_cmp(&b),
        _ => cell.cmp(literal),
    }
}
