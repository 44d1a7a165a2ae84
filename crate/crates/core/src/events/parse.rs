//! Recursive-descent parser for the query language:
//!
//! ```text
//! query  := "P(" events ("|" events)? ")"
//! events := event ("," event)*
//! event  := VAR ("[" VAR "=" VAL ("," VAR "=" VAL)* "]")? "=" VAL
//! ```
//!
//! Whitespace is insignificant. Error columns are 1-based character offsets.

use super::{is_value_char, CfConjunction, CfEvent, CfVariable, Intervention, Query, Value};
use crate::error::{Error, Result};
use crate::graph::Variable;

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { chars: src.chars().collect(), pos: 0, _src: src }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::QuerySyntax { column: self.pos + 1, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => self.error(format!("expected `{c}`, found `{x}`")),
            None => self.error(format!("expected `{c}`, found end of input")),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn var(&mut self) -> Result<Variable> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == '_' => self.pos += 1,
            Some(c) => return self.error(format!("expected a variable name, found `{c}`")),
            None => return self.error("expected a variable name, found end of input"),
        }
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
            self.pos += 1;
        }
        Variable::new(self.chars[start..self.pos].iter().collect::<String>())
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| is_value_char(*c)) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.chars.get(self.pos) {
                Some(c) => self.error(format!("expected a value, found `{c}`")),
                None => self.error("expected a value, found end of input"),
            };
        }
        Ok(Value(self.chars[start..self.pos].iter().collect()))
    }

    fn event(&mut self) -> Result<CfEvent> {
        let base = self.var()?;
        let mut subscript = Intervention::new();
        if self.eat('[') {
            loop {
                let col = self.pos;
                let k = self.var()?;
                self.expect('=')?;
                let v = self.value()?;
                if subscript.insert(k.clone(), v).is_some() {
                    self.pos = col;
                    self.skip_ws();
                    return self.error(format!("variable `{k}` assigned twice in one subscript"));
                }
                if !self.eat(',') {
                    break;
                }
            }
            self.expect(']')?;
        }
        self.expect('=')?;
        let value = self.value()?;
        Ok(CfEvent::new(CfVariable::new(base, subscript), value))
    }

    fn events(&mut self) -> Result<CfConjunction> {
        let mut out = vec![self.event()?];
        while self.eat(',') {
            out.push(self.event()?);
        }
        Ok(CfConjunction::new(out))
    }

    fn end(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.error(format!("unexpected `{c}` after end of query")),
        }
    }
}

pub fn parse_query(text: &str) -> Result<Query> {
    let mut p = Parser::new(text);
    p.expect('P')?;
    p.expect('(')?;
    let gamma = p.events()?;
    let delta = if p.eat('|') { p.events()? } else { CfConjunction::empty() };
    p.expect(')')?;
    p.end()?;
    Ok(Query::new(gamma, delta))
}

/// Parses a bare event list such as `Y[X=x0]=y0, X=x1`.
pub fn parse_conjunction(text: &str) -> Result<CfConjunction> {
    let mut p = Parser::new(text);
    let c = p.events()?;
    p.end()?;
    Ok(c)
}
