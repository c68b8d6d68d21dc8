//! Textual notation for process trees and directly-follows edge lists.
//!
//! ```text
//! tree  := label | 'tau' | op '(' tree (',' tree)* ')'
//! op    := '->' | 'X' | '+' | '*'          (also '→' '×' '∧' '↺')
//! label := '\'' ( [^'\\] | '\\' any )* '\''
//! ```
//!
//! `τ` is accepted for `tau`. Whitespace outside quotes is ignored. The
//! printer emits the ASCII tokens with `", "` between children.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{normalize_label, Activity, Dfg, ModelError, Operator, ProcessTree};

/// Nesting limit; deeper input is rejected rather than risking the stack.
pub const MAX_NESTING: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {reason}")]
    Syntax { position: usize, reason: String },
    #[error("arity error at byte {position}: {operator} node needs at least {required} children, found {found}")]
    Arity {
        position: usize,
        operator: Operator,
        required: usize,
        found: usize,
    },
}

impl ParseError {
    fn syntax(position: usize, reason: impl Into<String>) -> Self {
        ParseError::Syntax {
            position,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Op(Operator),
    Tau,
    Open,
    Close,
    Comma,
    Label(String),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and the byte offset where it starts.
    fn next(&mut self) -> Result<(Token, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.rest().chars().next() else {
            return Ok((Token::End, start));
        };
        let simple = match c {
            '(' => Some(Token::Open),
            ')' => Some(Token::Close),
            ',' => Some(Token::Comma),
            '+' | '∧' => Some(Token::Op(Operator::Parallel)),
            '*' | '↺' => Some(Token::Op(Operator::Loop)),
            '×' => Some(Token::Op(Operator::Xor)),
            '→' => Some(Token::Op(Operator::Sequence)),
            'τ' => Some(Token::Tau),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += c.len_utf8();
            return Ok((tok, start));
        }
        if self.rest().starts_with("->") {
            self.pos += 2;
            return Ok((Token::Op(Operator::Sequence), start));
        }
        if c == '\'' {
            return self.quoted().map(|s| (Token::Label(s), start));
        }
        if c.is_alphanumeric() || c == '_' {
            let word_len = self
                .rest()
                .find(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
                .unwrap_or(self.rest().len());
            let word = &self.rest()[..word_len];
            let tok = match word {
                "X" => Token::Op(Operator::Xor),
                "tau" => Token::Tau,
                _ => {
                    return Err(ParseError::syntax(
                        start,
                        format!("unknown token `{word}` (activity labels must be quoted)"),
                    ))
                }
            };
            self.pos += word_len;
            return Ok((tok, start));
        }
        Err(ParseError::syntax(start, format!("unexpected character `{c}`")))
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        let (text, consumed) =
            read_quoted(self.rest()).ok_or_else(|| ParseError::syntax(start, "unterminated quoted label"))?;
        self.pos += consumed;
        Ok(text)
    }
}

/// Reads a single-quoted label at the start of `s`, returning the unescaped
/// text and the number of bytes consumed including both quotes.
fn read_quoted(s: &str) -> Option<(String, usize)> {
    let mut chars = s.char_indices();
    let (_, first) = chars.next()?;
    debug_assert_eq!(first, '\'');
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '\'' => return Some((out, i + 1)),
            '\\' => match chars.clone().next() {
                Some((_, esc @ ('\'' | '\\'))) => {
                    out.push(esc);
                    chars.next();
                }
                _ => out.push('\\'),
            },
            other => out.push(other),
        }
    }
    None
}

fn label_activity(raw: &str, position: usize) -> Result<Activity, ParseError> {
    normalize_label(raw).map_err(|e| match e {
        ModelError::EmptyLabel => ParseError::syntax(position, "empty activity label"),
        other => ParseError::syntax(position, other.to_string()),
    })
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Token, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&(Token, usize), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().expect("peeked token"))
    }

    fn bump(&mut self) -> Result<(Token, usize), ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn tree(&mut self, depth: usize) -> Result<ProcessTree, ParseError> {
        let (tok, pos) = self.bump()?;
        if depth > MAX_NESTING {
            return Err(ParseError::syntax(pos, "nesting too deep"));
        }
        match tok {
            Token::Label(raw) => Ok(ProcessTree::Leaf(label_activity(&raw, pos)?)),
            Token::Tau => Ok(ProcessTree::Silent),
            Token::Op(op) => {
                match self.bump()? {
                    (Token::Open, _) => {}
                    (_, p) => return Err(ParseError::syntax(p, "expected `(` after operator")),
                }
                let mut children = Vec::new();
                if !matches!(self.peek()?.0, Token::Close) {
                    loop {
                        children.push(self.tree(depth + 1)?);
                        match self.bump()? {
                            (Token::Comma, _) => continue,
                            (Token::Close, _) => break,
                            (Token::End, p) => return Err(ParseError::syntax(p, "unbalanced parentheses")),
                            (_, p) => return Err(ParseError::syntax(p, "expected `,` or `)`")),
                        }
                    }
                } else {
                    self.bump()?;
                }
                if children.len() < op.min_arity() {
                    return Err(ParseError::Arity {
                        position: pos,
                        operator: op,
                        required: op.min_arity(),
                        found: children.len(),
                    });
                }
                Ok(ProcessTree::Node(op, children))
            }
            Token::End => Err(ParseError::syntax(pos, "unexpected end of input")),
            Token::Open | Token::Close | Token::Comma => {
                Err(ParseError::syntax(pos, "expected a label, `tau` or an operator"))
            }
        }
    }
}

/// Parses the tree notation. The whole input must be a single tree.
pub fn parse_tree(text: &str) -> Result<ProcessTree, ParseError> {
    let mut parser = Parser {
        lexer: Lexer::new(text),
        peeked: None,
    };
    let tree = parser.tree(0)?;
    match parser.bump()? {
        (Token::End, _) => Ok(tree),
        (_, p) => Err(ParseError::syntax(p, "trailing input after tree")),
    }
}

fn push_quoted(out: &mut String, label: &str) {
    out.push('\'');
    for c in label.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
}

/// Canonical printer, e.g. `->('a', X('b', tau))`.
pub fn render_tree(tree: &ProcessTree) -> String {
    let mut out = String::new();
    render_into(tree, &mut out);
    out
}

fn render_into(tree: &ProcessTree, out: &mut String) {
    match tree {
        ProcessTree::Leaf(a) => push_quoted(out, a.as_str()),
        ProcessTree::Silent => out.push_str("tau"),
        ProcessTree::Node(op, children) => {
            out.push_str(op.token());
            out.push('(');
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(c, out);
            }
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeParseMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based line number.
    pub line: usize,
    pub content: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeParse {
    pub edges: BTreeSet<(Activity, Activity)>,
    pub skipped: Vec<SkippedLine>,
}

/// Parses one `'a' -> 'b'` pair per line. Blank lines are ignored. Labels
/// may also be bare (`a -> b`) as long as they contain no arrow.
pub fn parse_dfg_edges(text: &str, mode: EdgeParseMode) -> Result<EdgeParse, ParseError> {
    let mut out = EdgeParse::default();
    let mut offset = 0;
    for (idx, line) in text.split('\n').enumerate() {
        let line_start = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match parse_edge_line(line) {
            Ok(edge) => {
                out.edges.insert(edge);
            }
            Err((col, reason)) => match mode {
                EdgeParseMode::Strict => {
                    return Err(ParseError::syntax(
                        line_start + col,
                        format!("line {}: {reason}", idx + 1),
                    ))
                }
                EdgeParseMode::Lenient => out.skipped.push(SkippedLine {
                    line: idx + 1,
                    content: trimmed.to_string(),
                    reason,
                }),
            },
        }
    }
    Ok(out)
}

const ARROWS: [&str; 2] = ["->", "→"];

fn find_arrow(s: &str) -> Option<(usize, usize)> {
    ARROWS.iter().filter_map(|a| s.find(a).map(|i| (i, a.len()))).min()
}

fn parse_edge_line(line: &str) -> Result<(Activity, Activity), (usize, String)> {
    let mut pos = line.len() - line.trim_start().len();
    let from = edge_label(line, &mut pos, true)?;
    pos += line[pos..].len() - line[pos..].trim_start().len();
    let rest = &line[pos..];
    let arrow = ARROWS
        .iter()
        .find(|a| rest.starts_with(**a))
        .ok_or_else(|| (pos, "expected `->`".to_string()))?;
    pos += arrow.len();
    pos += line[pos..].len() - line[pos..].trim_start().len();
    let to = edge_label(line, &mut pos, false)?;
    if !line[pos..].trim().is_empty() {
        return Err((pos, "trailing text after edge".to_string()));
    }
    Ok((from, to))
}

fn edge_label(line: &str, pos: &mut usize, before_arrow: bool) -> Result<Activity, (usize, String)> {
    let start = *pos;
    let rest = &line[start..];
    let raw = if rest.starts_with('\'') {
        let (text, consumed) = read_quoted(rest).ok_or_else(|| (start, "unterminated quoted label".to_string()))?;
        *pos += consumed;
        text
    } else {
        let end = if before_arrow {
            find_arrow(rest)
                .map(|(i, _)| i)
                .ok_or_else(|| (start, "expected `->`".to_string()))?
        } else {
            if find_arrow(rest).is_some() {
                return Err((start, "more than one arrow on the line".to_string()));
            }
            rest.len()
        };
        *pos += end;
        rest[..end].to_string()
    };
    normalize_label(&raw).map_err(|_| (start, "empty activity label".to_string()))
}

/// One `'a' -> 'b'` line per edge, in sorted order.
pub fn render_dfg_edges(dfg: &Dfg) -> String {
    render_edge_lines(dfg.edges().iter())
}

pub fn render_edge_lines<'a, I>(edges: I) -> String
where
    I: IntoIterator<Item = &'a (Activity, Activity)>,
{
    let mut out = String::new();
    for (i, (x, y)) in edges.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        push_quoted(&mut out, x.as_str());
        out.push_str(" -> ");
        push_quoted(&mut out, y.as_str());
    }
    out
}

/// `[a, b, c]` rendering used for traces in prompts.
pub fn render_trace(trace: &[Activity]) -> String {
    let mut out = String::from("[");
    for (i, a) in trace.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{a}");
    }
    out.push(']');
    out
}
