//! Text formats for queries, databases and complexes.
//!
//! All three are line based, UTF-8, with `#` comments and blank lines ignored.
//!
//! Query file:
//!
//! ```text
//! SIGNATURE E/2 R/1      # optional, declares symbols no atom mentions
//! FREE x y
//! CQ
//! E(x, z) E(z, y)
//! VARS w                 # optional, isolated quantified variables
//! CQ
//! R(x)
//! ```
//!
//! Database file: facts `R(a, b)` (several per line allowed), an optional
//! `DOMAIN a b c` line for isolated constants and an optional `SIGNATURE`.
//!
//! Complex file: `GROUND 1 2 3 4` followed by one `FACET ...` line per facet.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::simplicial::Complex;
use crate::structure::{Signature, Structure, Symbol, Ucq};

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Character cursor over one line; columns are 1-based character positions.
struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        let text = match text.find('#') {
            Some(i) => &text[..i],
            None => text,
        };
        Cursor {
            chars: text.char_indices().collect(),
            pos: 0,
            line,
            text,
        }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn err(&self, message: impl Into<String>) -> Error {
        perr(self.line, self.column(), message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    /// Skips whitespace and commas between items.
    fn skip_sep(&mut self) {
        while self.pos < self.chars.len()
            && (self.chars[self.pos].1.is_whitespace() || self.chars[self.pos].1 == ',')
        {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn word(&mut self, first: fn(char) -> bool, rest: fn(char) -> bool, what: &str) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if first(c) => self.pos += 1,
            Some(c) => return Err(self.err(format!("expected {what}, found `{c}`"))),
            None => return Err(self.err(format!("expected {what}, found end of line"))),
        }
        while matches!(self.peek(), Some(c) if rest(c)) {
            self.pos += 1;
        }
        let a = self.chars[start].0;
        let b = self.chars.get(self.pos).map(|c| c.0).unwrap_or(self.text.len());
        Ok(self.text[a..b].to_string())
    }

    fn ident(&mut self) -> Result<String> {
        self.word(
            |c| c.is_ascii_alphabetic() || c == '_',
            |c| c.is_ascii_alphanumeric() || c == '_',
            "an identifier",
        )
    }

    fn ground_elem(&mut self) -> Result<String> {
        self.word(
            |c| c.is_ascii_alphanumeric() || c == '_',
            |c| c.is_ascii_alphanumeric() || c == '_',
            "a ground element",
        )
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `{ch}`, found `{c}`"))),
            None => Err(self.err(format!("expected `{ch}`, found end of line"))),
        }
    }

    /// `R(a, b, ...)`, returning the symbol, its column and the arguments.
    fn atom(&mut self) -> Result<(String, usize, Vec<String>)> {
        self.skip_ws();
        let col = self.column();
        let name = self.ident()?;
        self.expect('(')?;
        let mut args = Vec::new();
        loop {
            args.push(self.ident()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => return Err(self.err(format!("expected `,` or `)`, found `{c}`"))),
                None => return Err(self.err("unterminated atom")),
            }
        }
        Ok((name, col, args))
    }

    fn atoms(&mut self) -> Result<Vec<(String, usize, Vec<String>)>> {
        let mut out = Vec::new();
        loop {
            self.skip_sep();
            if self.at_end() {
                return Ok(out);
            }
            out.push(self.atom()?);
        }
    }

    /// Keyword at the start of the line, if it is one of `words`.
    fn keyword(&mut self, words: &[&'static str]) -> Option<&'static str> {
        self.skip_ws();
        let save = self.pos;
        let Ok(w) = self.ident() else {
            self.pos = save;
            return None;
        };
        // a keyword must not be the head of an atom
        let mut probe = self.pos;
        while probe < self.chars.len() && self.chars[probe].1.is_whitespace() {
            probe += 1;
        }
        if self.chars.get(probe).map(|c| c.1) == Some('(') {
            self.pos = save;
            return None;
        }
        match words.iter().find(|k| **k == w) {
            Some(k) => Some(k),
            None => {
                self.pos = save;
                None
            }
        }
    }

    fn idents(&mut self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        loop {
            self.skip_sep();
            if self.at_end() {
                return Ok(out);
            }
            out.push(self.ident()?);
        }
    }

    fn signature_entries(&mut self) -> Result<Vec<(Symbol, usize)>> {
        let mut out = Vec::new();
        loop {
            self.skip_sep();
            if self.at_end() {
                return Ok(out);
            }
            let col = self.column();
            let name = self.ident()?;
            self.expect('/')?;
            self.skip_ws();
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
            let arity: usize = digits
                .parse()
                .map_err(|_| perr(self.line, start + 1, "expected an arity"))?;
            if arity == 0 {
                return Err(perr(self.line, start + 1, "arity must be at least 1"));
            }
            out.push((Symbol::new(name, arity), col));
        }
    }
}

/// Collects symbol arities, reporting the first inconsistency with its position.
#[derive(Default)]
struct SymbolTable {
    symbols: Vec<Symbol>,
}

impl SymbolTable {
    fn note(&mut self, name: &str, arity: usize, line: usize, col: usize) -> Result<()> {
        match self.symbols.iter().find(|s| s.name == name) {
            Some(s) if s.arity != arity => Err(perr(
                line,
                col,
                format!("`{name}` used with arity {arity}, earlier with {}", s.arity),
            )),
            Some(_) => Ok(()),
            None => {
                self.symbols.push(Symbol::new(name, arity));
                Ok(())
            }
        }
    }

    fn signature(self) -> Result<Signature> {
        Signature::new(self.symbols)
    }
}

struct Block {
    vars: Vec<String>,
    atoms: Vec<(String, Vec<String>)>,
}

pub fn parse_query(text: &str) -> Result<Ucq> {
    let mut free: Option<Vec<String>> = None;
    let mut table = SymbolTable::default();
    let mut blocks: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut cur = Cursor::new(raw, line);
        if cur.at_end() {
            continue;
        }
        let col = cur.column();
        match cur.keyword(&["SIGNATURE", "FREE", "CQ", "VARS"]) {
            Some("SIGNATURE") => {
                for (s, c) in cur.signature_entries()? {
                    table.note(&s.name, s.arity, line, c)?;
                }
            }
            Some("FREE") => {
                if free.is_some() {
                    return Err(perr(line, col, "second FREE line"));
                }
                if !blocks.is_empty() {
                    return Err(perr(line, col, "FREE must precede the first CQ"));
                }
                let vars = cur.idents()?;
                let set: BTreeSet<&String> = vars.iter().collect();
                if set.len() != vars.len() {
                    return Err(perr(line, col, "repeated free variable"));
                }
                free = Some(vars);
            }
            Some("CQ") => {
                if free.is_none() {
                    return Err(perr(line, col, "CQ before the FREE line"));
                }
                if !cur.at_end() {
                    return Err(cur.err("unexpected text after CQ"));
                }
                blocks.push(Block {
                    vars: Vec::new(),
                    atoms: Vec::new(),
                });
            }
            Some("VARS") => {
                let Some(b) = blocks.last_mut() else {
                    return Err(perr(line, col, "VARS outside a CQ block"));
                };
                b.vars.extend(cur.idents()?);
            }
            _ => {
                let Some(b) = blocks.last_mut() else {
                    return Err(perr(line, col, "atom outside a CQ block"));
                };
                for (name, c, args) in cur.atoms()? {
                    table.note(&name, args.len(), line, c)?;
                    b.atoms.push((name, args));
                }
            }
        }
    }
    let free = free.ok_or_else(|| perr(1, 1, "missing FREE line"))?;
    if blocks.is_empty() {
        return Err(perr(text.lines().count().max(1), 1, "no CQ block"));
    }
    let sig = table.signature()?;
    let mut disjuncts = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut s = Structure::new(sig.clone());
        for f in &free {
            s.add_element(f);
        }
        for v in &b.vars {
            s.add_element(v);
        }
        for (name, args) in &b.atoms {
            s.insert_fact(name, args)?;
        }
        disjuncts.push(s);
    }
    Ucq::aligned(disjuncts, free)
}

pub fn parse_database(text: &str) -> Result<Structure> {
    let mut table = SymbolTable::default();
    let mut domain: Vec<String> = Vec::new();
    let mut facts: Vec<(String, Vec<String>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut cur = Cursor::new(raw, line);
        if cur.at_end() {
            continue;
        }
        match cur.keyword(&["SIGNATURE", "DOMAIN"]) {
            Some("SIGNATURE") => {
                for (s, c) in cur.signature_entries()? {
                    table.note(&s.name, s.arity, line, c)?;
                }
            }
            Some("DOMAIN") => domain.extend(cur.idents()?),
            _ => {
                for (name, c, args) in cur.atoms()? {
                    table.note(&name, args.len(), line, c)?;
                    facts.push((name, args));
                }
            }
        }
    }
    let mut s = Structure::new(table.signature()?);
    for d in &domain {
        s.add_element(d);
    }
    for (name, args) in &facts {
        for a in args {
            s.add_element(a);
        }
        s.insert_fact(name, args)?;
    }
    Ok(s)
}

pub fn parse_complex(text: &str) -> Result<Complex> {
    Ok(parse_complex_with_warnings(text)?.0)
}

/// Also returns the facets dropped during normalization.
pub fn parse_complex_with_warnings(text: &str) -> Result<(Complex, Vec<String>)> {
    let mut ground: Option<(Vec<String>, usize)> = None;
    let mut facets: Vec<Vec<String>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut cur = Cursor::new(raw, line);
        if cur.at_end() {
            continue;
        }
        let col = cur.column();
        let elems = |cur: &mut Cursor| -> Result<Vec<String>> {
            let mut out = Vec::new();
            loop {
                cur.skip_sep();
                if cur.at_end() {
                    return Ok(out);
                }
                out.push(cur.ground_elem()?);
            }
        };
        match cur.keyword(&["GROUND", "FACET"]) {
            Some("GROUND") => {
                if ground.is_some() {
                    return Err(perr(line, col, "second GROUND line"));
                }
                ground = Some((elems(&mut cur)?, line));
            }
            Some("FACET") => {
                if ground.is_none() {
                    return Err(perr(line, col, "FACET before GROUND"));
                }
                facets.push(elems(&mut cur)?);
            }
            _ => return Err(perr(line, col, "expected GROUND or FACET")),
        }
    }
    let (ground, line) = ground.ok_or_else(|| perr(1, 1, "missing GROUND line"))?;
    Complex::normalized(&ground, &facets).map_err(|e| match e {
        Error::InvalidComplex(m) => perr(line, 1, m),
        other => other,
    })
}

/// Symbols with no tuple anywhere get declared on a SIGNATURE line.
fn signature_line(sig: &Signature, used: &BTreeSet<usize>) -> Option<String> {
    let unused: Vec<String> = sig
        .symbols()
        .iter()
        .enumerate()
        .filter(|(i, _)| !used.contains(i))
        .map(|(_, s)| format!("{}/{}", s.name, s.arity))
        .collect();
    (!unused.is_empty()).then(|| format!("SIGNATURE {}\n", unused.join(" ")))
}

fn atom_text(s: &Structure, r: usize, t: &[crate::Elem]) -> String {
    let args: Vec<&str> = t.iter().map(|&e| s.name(e)).collect();
    format!("{}({})", s.signature().symbols()[r].name, args.join(", "))
}

pub fn write_query(psi: &Ucq) -> String {
    let mut out = String::new();
    let used: BTreeSet<usize> = psi
        .disjuncts()
        .iter()
        .flat_map(|d| d.tuples().map(|(r, _)| r).collect::<Vec<_>>())
        .collect();
    if let Some(l) = signature_line(psi.signature(), &used) {
        out.push_str(&l);
    }
    out.push_str("FREE");
    for f in psi.free() {
        out.push(' ');
        out.push_str(f);
    }
    out.push('\n');
    for d in psi.disjuncts() {
        out.push_str("CQ\n");
        let free: BTreeSet<&str> = psi.free().iter().map(String::as_str).collect();
        let isolated: Vec<&str> = d
            .isolated_elements()
            .into_iter()
            .map(|e| d.name(e))
            .filter(|n| !free.contains(n))
            .collect();
        if !isolated.is_empty() {
            let _ = writeln!(out, "VARS {}", isolated.join(" "));
        }
        for (r, t) in d.tuples() {
            let _ = writeln!(out, "{}", atom_text(d, r, t));
        }
    }
    out
}

pub fn write_database(d: &Structure) -> String {
    let mut out = String::new();
    let used: BTreeSet<usize> = d.tuples().map(|(r, _)| r).collect();
    if let Some(l) = signature_line(d.signature(), &used) {
        out.push_str(&l);
    }
    if d.universe_size() > 0 {
        let _ = writeln!(out, "DOMAIN {}", d.names().join(" "));
    }
    for (r, t) in d.tuples() {
        let _ = writeln!(out, "{}", atom_text(d, r, t));
    }
    out
}

pub fn write_complex(c: &Complex) -> String {
    let mut out = format!("GROUND {}\n", c.ground().join(" "));
    for i in 0..c.facets().len() {
        let _ = writeln!(out, "FACET {}", c.facet_names(i).join(" "));
    }
    out
}
