//! Parsing and printing for the s-expression surface syntax.
//!
//! Three file kinds share one lexer: `.spf` formulas, `.sps` structures,
//! `.spd` description-logic sentences (the `.spd` reader lives in
//! [`crate::dl`]). Comments run from `;` to end of line. The printers are
//! canonical: core connectives only, single spaces, no re-sugaring, so
//! printed output is a golden-file contract (see `docs/grammar.md`).

use std::collections::BTreeMap;
use std::fmt;

use crate::semantics::{Extension, StandpointStructure};
use crate::syntax::{Comparator, Formula, Signature, StandpointExpr, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

#[derive(Debug, Clone)]
pub struct ParseError {
    pub span: Option<Span>,
    pub msg: String,
}

impl ParseError {
    pub(crate) fn at(span: Span, msg: impl Into<String>) -> Self {
        ParseError {
            span: Some(span),
            msg: msg.into(),
        }
    }

    pub(crate) fn nowhere(msg: impl Into<String>) -> Self {
        ParseError {
            span: None,
            msg: msg.into(),
        }
    }

    /// Multi-line rendering with a caret line pointing into `src`.
    pub fn render(&self, src: &str) -> String {
        let Some(span) = self.span else {
            return format!("parse error: {}", self.msg);
        };
        let start = span.start.min(src.len());
        let line_start = src[..start].rfind('\n').map(|i| i + 1).unwrap_or(0);
        let line_end = src[start..]
            .find('\n')
            .map(|i| start + i)
            .unwrap_or(src.len());
        let line_no = src[..start].matches('\n').count() + 1;
        let col = start - line_start;
        let width = (span.end.min(line_end).max(start + 1)) - start;
        let mut out = format!("parse error at line {line_no}: {}\n", self.msg);
        out.push_str(&src[line_start..line_end]);
        out.push('\n');
        out.push_str(&" ".repeat(col));
        out.push_str(&"^".repeat(width.max(1)));
        out
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "parse error at {}..{}: {}", s.start, s.end, self.msg),
            None => write!(f, "parse error: {}", self.msg),
        }
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------
// lexer + generic s-expressions

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Span),
    List(Vec<Sexp>, Span),
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, s) => *s,
        }
    }

    pub(crate) fn as_atom(&self) -> Option<(&str, Span)> {
        match self {
            Sexp::Atom(a, s) => Some((a.as_str(), *s)),
            Sexp::List(..) => None,
        }
    }

    pub(crate) fn expect_atom(&self, what: &str) -> Result<(&str, Span), ParseError> {
        self.as_atom()
            .ok_or_else(|| ParseError::at(self.span(), format!("expected {what}, found a list")))
    }

    pub(crate) fn expect_list(&self, what: &str) -> Result<(&[Sexp], Span), ParseError> {
        match self {
            Sexp::List(items, s) => Ok((items, *s)),
            Sexp::Atom(a, s) => Err(ParseError::at(
                *s,
                format!("expected {what}, found atom {a}"),
            )),
        }
    }
}

fn is_atom_char(c: char) -> bool {
    !c.is_whitespace() && c != '(' && c != ')' && c != ';'
}

/// Reads all top-level s-expressions in `src`.
pub fn read_sexps(src: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut top: Vec<Sexp> = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            ';' => {
                for (_, c2) in chars.by_ref() {
                    if c2 == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            '(' => stack.push((Vec::new(), i)),
            ')' => {
                let (items, start) = stack.pop().ok_or_else(|| {
                    ParseError::at(Span::new(i, i + 1), "unmatched closing parenthesis")
                })?;
                let list = Sexp::List(items, Span::new(start, i + 1));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let start = i;
                let mut end = i + c.len_utf8();
                while let Some(&(j, c2)) = chars.peek() {
                    if is_atom_char(c2) {
                        end = j + c2.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let atom = Sexp::Atom(src[start..end].to_string(), Span::new(start, end));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(ParseError::at(
            Span::new(*start, *start + 1),
            "unclosed parenthesis",
        ));
    }
    Ok(top)
}

// ---------------------------------------------------------------------
// token classification

pub(crate) fn is_pred_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_uppercase() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_lower_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_const_token(s: &str) -> bool {
    s.strip_prefix('#').is_some_and(is_lower_name)
}

// ---------------------------------------------------------------------
// formula parsing

struct SigBuilder {
    sig: Signature,
    declared: BTreeMap<String, u8>,
}

impl SigBuilder {
    fn new() -> Self {
        SigBuilder {
            sig: Signature::new(BTreeMap::new(), Default::default(), Default::default())
                .expect("empty signature"),
            declared: BTreeMap::new(),
        }
    }

    fn record_pred(&mut self, name: &str, arity: u8, span: Span) -> Result<(), ParseError> {
        if let Some(prev) = self.sig.arity(name) {
            if prev != arity {
                return Err(ParseError::at(
                    span,
                    format!("arity conflict: predicate {name} used with arity {prev} and arity {arity}"),
                ));
            }
        } else {
            self.sig.add_pred(name, arity);
        }
        Ok(())
    }
}

/// Parses one formula, preceded by optional `(declare ...)` headers, and
/// returns it with the inferred signature.
pub fn parse_formula(src: &str) -> Result<(Formula, Signature), ParseError> {
    let forms = read_sexps(src)?;
    let mut b = SigBuilder::new();
    let mut formula = None;
    for form in &forms {
        if is_declare(form) {
            parse_declare(form, &mut b)?;
        } else if formula.is_none() {
            formula = Some(parse_formula_sexp(form, &mut b)?);
        } else {
            return Err(ParseError::at(
                form.span(),
                "more than one formula in input",
            ));
        }
    }
    let formula = formula.ok_or_else(|| ParseError::nowhere("no formula in input"))?;
    Ok((formula, b.sig))
}

fn is_declare(form: &Sexp) -> bool {
    matches!(form, Sexp::List(items, _)
        if items.first().and_then(|h| h.as_atom()).is_some_and(|(a, _)| a == "declare"))
}

// (declare (pred P 2) (const #a) (standpoint s))
fn parse_declare(form: &Sexp, b: &mut SigBuilder) -> Result<(), ParseError> {
    let (items, _) = form.expect_list("declare form")?;
    for entry in &items[1..] {
        let (fields, span) = entry.expect_list("declare entry")?;
        let (kind, _) = fields
            .first()
            .ok_or_else(|| ParseError::at(span, "empty declare entry"))?
            .expect_atom("declare kind")?;
        match kind {
            "pred" => {
                if fields.len() != 3 {
                    return Err(ParseError::at(span, "expected (pred Name arity)"));
                }
                let (name, nspan) = fields[1].expect_atom("predicate name")?;
                if !is_pred_name(name) {
                    return Err(ParseError::at(nspan, format!("invalid predicate name {name}")));
                }
                let (ar, aspan) = fields[2].expect_atom("arity")?;
                let arity: u8 = ar
                    .parse()
                    .map_err(|_| ParseError::at(aspan, format!("invalid arity {ar}")))?;
                if arity > 2 {
                    return Err(ParseError::at(aspan, format!("arity {arity} > 2")));
                }
                b.record_pred(name, arity, nspan)?;
                b.declared.insert(name.to_string(), arity);
            }
            "const" => {
                if fields.len() != 2 {
                    return Err(ParseError::at(span, "expected (const #name)"));
                }
                let (c, cspan) = fields[1].expect_atom("constant")?;
                if !is_const_token(c) {
                    return Err(ParseError::at(cspan, format!("invalid constant {c}")));
                }
                let f = Formula::Eq(Term::cst(&c[1..]), Term::cst(&c[1..]));
                b.sig.extend_from(&f).ok();
            }
            "standpoint" => {
                if fields.len() != 2 {
                    return Err(ParseError::at(span, "expected (standpoint s)"));
                }
                let (s, sspan) = fields[1].expect_atom("standpoint")?;
                if s != "*" && !is_lower_name(s) {
                    return Err(ParseError::at(sspan, format!("invalid standpoint {s}")));
                }
                let f = Formula::dia(StandpointExpr::sym(s), Formula::top());
                b.sig.extend_from(&f).ok();
            }
            other => {
                return Err(ParseError::at(
                    span,
                    format!("unknown declare kind {other}"),
                ))
            }
        }
    }
    Ok(())
}

fn parse_term(sexp: &Sexp) -> Result<Term, ParseError> {
    let (a, span) = sexp.expect_atom("term")?;
    if let Some(name) = a.strip_prefix('#') {
        if !is_lower_name(name) {
            return Err(ParseError::at(span, format!("invalid constant #{name}")));
        }
        Ok(Term::cst(name))
    } else if is_lower_name(a) {
        Ok(Term::Var(a.to_string()))
    } else {
        Err(ParseError::at(span, format!("invalid term {a}")))
    }
}

fn record_term(t: &Term, b: &mut SigBuilder) {
    if let Term::Const(c) = t {
        let f = Formula::Eq(Term::cst(c.clone()), Term::cst(c.clone()));
        b.sig.extend_from(&f).ok();
    }
}

fn parse_standpoint_expr(sexp: &Sexp, b: &mut SigBuilder) -> Result<StandpointExpr, ParseError> {
    match sexp {
        Sexp::Atom(a, span) => {
            if a == "*" || is_lower_name(a) {
                let e = StandpointExpr::sym(a.clone());
                let f = Formula::dia(e.clone(), Formula::top());
                b.sig.extend_from(&f).ok();
                Ok(e)
            } else {
                Err(ParseError::at(*span, format!("invalid standpoint symbol {a}")))
            }
        }
        Sexp::List(items, span) => {
            if items.len() != 3 {
                return Err(ParseError::at(
                    *span,
                    "standpoint expression takes two operands",
                ));
            }
            let (head, hspan) = items[0].expect_atom("standpoint operator")?;
            let a = parse_standpoint_expr(&items[1], b)?;
            let c = parse_standpoint_expr(&items[2], b)?;
            match head {
                "union" => Ok(StandpointExpr::Union(Box::new(a), Box::new(c))),
                "inter" => Ok(StandpointExpr::Inter(Box::new(a), Box::new(c))),
                "diff" => Ok(StandpointExpr::Diff(Box::new(a), Box::new(c))),
                other => Err(ParseError::at(
                    hspan,
                    format!("unknown standpoint operator {other}"),
                )),
            }
        }
    }
}

fn parse_counting_head(head: &str) -> Option<(Comparator, &str)> {
    let rest = head.strip_prefix("exists")?;
    if let Some(n) = rest.strip_prefix("<=") {
        Some((Comparator::Leq, n))
    } else if let Some(n) = rest.strip_prefix(">=") {
        Some((Comparator::Geq, n))
    } else {
        rest.strip_prefix('=').map(|n| (Comparator::Eq, n))
    }
}

fn parse_formula_sexp(sexp: &Sexp, b: &mut SigBuilder) -> Result<Formula, ParseError> {
    let (items, span) = sexp.expect_list("formula")?;
    let head_sexp = items
        .first()
        .ok_or_else(|| ParseError::at(span, "empty form"))?;
    let (head, hspan) = head_sexp.expect_atom("formula head")?;

    let arg_count = |n: usize, what: &str| -> Result<(), ParseError> {
        if items.len() != n + 1 {
            Err(ParseError::at(
                span,
                format!("{what} takes {n} argument{}", if n == 1 { "" } else { "s" }),
            ))
        } else {
            Ok(())
        }
    };

    match head {
        "not" => {
            arg_count(1, "not")?;
            Ok(Formula::not(parse_formula_sexp(&items[1], b)?))
        }
        "and" | "or" | "implies" | "iff" => {
            arg_count(2, head)?;
            let f = parse_formula_sexp(&items[1], b)?;
            let g = parse_formula_sexp(&items[2], b)?;
            Ok(match head {
                "and" => Formula::and(f, g),
                "or" => Formula::or(f, g),
                "implies" => Formula::implies(f, g),
                _ => Formula::iff(f, g),
            })
        }
        "forall" => {
            arg_count(2, "forall")?;
            let (v, vspan) = items[1].expect_atom("variable")?;
            if !is_lower_name(v) {
                return Err(ParseError::at(vspan, format!("invalid variable {v}")));
            }
            Ok(Formula::forall(v, parse_formula_sexp(&items[2], b)?))
        }
        "dia" | "box" => {
            arg_count(2, head)?;
            let e = parse_standpoint_expr(&items[1], b)?;
            let f = parse_formula_sexp(&items[2], b)?;
            Ok(if head == "dia" {
                Formula::dia(e, f)
            } else {
                Formula::box_(e, f)
            })
        }
        "=" => {
            arg_count(2, "=")?;
            let s = parse_term(&items[1])?;
            let t = parse_term(&items[2])?;
            record_term(&s, b);
            record_term(&t, b);
            Ok(Formula::Eq(s, t))
        }
        _ if parse_counting_head(head).is_some() => {
            let (cmp, digits) = parse_counting_head(head).unwrap();
            let n: u32 = digits
                .parse()
                .map_err(|_| ParseError::at(hspan, format!("invalid count in {head}")))?;
            arg_count(2, "counting quantifier")?;
            let (v, vspan) = items[1].expect_atom("variable")?;
            if !is_lower_name(v) {
                return Err(ParseError::at(vspan, format!("invalid variable {v}")));
            }
            Ok(Formula::count(cmp, n, v, parse_formula_sexp(&items[2], b)?))
        }
        _ if is_pred_name(head) => {
            if items.len() > 3 {
                return Err(ParseError::at(span, "atoms take at most two terms"));
            }
            let mut terms = Vec::new();
            for item in &items[1..] {
                let t = parse_term(item)?;
                record_term(&t, b);
                terms.push(t);
            }
            b.record_pred(head, terms.len() as u8, hspan)?;
            Ok(Formula::Atom(head.to_string(), terms))
        }
        other => Err(ParseError::at(hspan, format!("unknown form {other}"))),
    }
}

// ---------------------------------------------------------------------
// printing

pub fn print_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        Term::Const(c) => format!("#{c}"),
    }
}

pub fn print_standpoint_expr(e: &StandpointExpr) -> String {
    match e {
        StandpointExpr::Symbol(s) => s.clone(),
        StandpointExpr::Union(a, b) => format!(
            "(union {} {})",
            print_standpoint_expr(a),
            print_standpoint_expr(b)
        ),
        StandpointExpr::Inter(a, b) => format!(
            "(inter {} {})",
            print_standpoint_expr(a),
            print_standpoint_expr(b)
        ),
        StandpointExpr::Diff(a, b) => format!(
            "(diff {} {})",
            print_standpoint_expr(a),
            print_standpoint_expr(b)
        ),
    }
}

/// Canonical core-form printer; inverse of [`parse_formula`].
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom(p, terms) => {
            out.push('(');
            out.push_str(p);
            for t in terms {
                out.push(' ');
                out.push_str(&print_term(t));
            }
            out.push(')');
        }
        Formula::Eq(s, t) => {
            out.push_str("(= ");
            out.push_str(&print_term(s));
            out.push(' ');
            out.push_str(&print_term(t));
            out.push(')');
        }
        Formula::Not(a) => {
            out.push_str("(not ");
            write_formula(a, out);
            out.push(')');
        }
        Formula::And(a, b) => {
            out.push_str("(and ");
            write_formula(a, out);
            out.push(' ');
            write_formula(b, out);
            out.push(')');
        }
        Formula::CountExists(cmp, n, v, body) => {
            let op = match cmp {
                Comparator::Leq => "<=",
                Comparator::Eq => "=",
                Comparator::Geq => ">=",
            };
            out.push_str(&format!("(exists{op}{n} {v} "));
            write_formula(body, out);
            out.push(')');
        }
        Formula::Dia(e, body) => {
            out.push_str("(dia ");
            out.push_str(&print_standpoint_expr(e));
            out.push(' ');
            write_formula(body, out);
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------
// structure parsing

/// Parses a `.sps` standpoint structure. A plain first-order interpretation
/// is the one-world special case.
pub fn parse_structure(src: &str) -> Result<StandpointStructure, ParseError> {
    let forms = read_sexps(src)?;
    let [form] = forms.as_slice() else {
        return Err(ParseError::nowhere("expected exactly one (structure ...) form"));
    };
    let (items, span) = form.expect_list("structure")?;
    let (head, hspan) = items
        .first()
        .ok_or_else(|| ParseError::at(span, "empty form"))?
        .expect_atom("structure head")?;
    if head != "structure" {
        return Err(ParseError::at(hspan, format!("expected structure, found {head}")));
    }

    let mut domain: Vec<String> = Vec::new();
    let mut worlds: Vec<String> = Vec::new();
    let mut sigma: BTreeMap<String, std::collections::BTreeSet<usize>> = BTreeMap::new();
    let mut consts: BTreeMap<String, usize> = BTreeMap::new();
    let mut gamma: Vec<BTreeMap<String, Extension>> = Vec::new();
    let mut world_blocks: Vec<(usize, &[Sexp], Span)> = Vec::new();
    let mut arities: BTreeMap<String, (u8, Span)> = BTreeMap::new();

    // first pass: domain and worlds, so later blocks can resolve names
    for item in &items[1..] {
        let (fields, fspan) = item.expect_list("structure section")?;
        let (kind, _) = fields
            .first()
            .ok_or_else(|| ParseError::at(fspan, "empty section"))?
            .expect_atom("section head")?;
        match kind {
            "domain" | "worlds" => {
                let out = if kind == "domain" { &mut domain } else { &mut worlds };
                if !out.is_empty() {
                    return Err(ParseError::at(fspan, format!("duplicate {kind} section")));
                }
                for name in &fields[1..] {
                    let (n, nspan) = name.expect_atom("name")?;
                    if !is_lower_name(n) {
                        return Err(ParseError::at(nspan, format!("invalid name {n}")));
                    }
                    if out.contains(&n.to_string()) {
                        return Err(ParseError::at(nspan, format!("duplicate name {n}")));
                    }
                    out.push(n.to_string());
                }
            }
            _ => {}
        }
    }
    if domain.is_empty() {
        return Err(ParseError::at(span, "empty or missing domain"));
    }
    if worlds.is_empty() {
        return Err(ParseError::at(span, "empty or missing worlds"));
    }
    gamma.resize_with(worlds.len(), BTreeMap::new);

    let elem_index = |name: &str, nspan: Span| -> Result<usize, ParseError> {
        domain
            .iter()
            .position(|d| d == name)
            .ok_or_else(|| ParseError::at(nspan, format!("unknown element {name}")))
    };
    let world_index = |name: &str, nspan: Span| -> Result<usize, ParseError> {
        worlds
            .iter()
            .position(|w| w == name)
            .ok_or_else(|| ParseError::at(nspan, format!("unknown world {name}")))
    };

    for item in &items[1..] {
        let (fields, fspan) = item.expect_list("structure section")?;
        let (kind, kspan) = fields[0].expect_atom("section head")?;
        match kind {
            "domain" | "worlds" => {}
            "sigma" => {
                for entry in &fields[1..] {
                    let (parts, espan) = entry.expect_list("sigma entry")?;
                    let (sym, sspan) = parts
                        .first()
                        .ok_or_else(|| ParseError::at(espan, "empty sigma entry"))?
                        .expect_atom("standpoint symbol")?;
                    if sym != "*" && !is_lower_name(sym) {
                        return Err(ParseError::at(sspan, format!("invalid standpoint {sym}")));
                    }
                    let mut set = std::collections::BTreeSet::new();
                    for w in &parts[1..] {
                        let (wn, wspan) = w.expect_atom("world")?;
                        set.insert(world_index(wn, wspan)?);
                    }
                    if sym == "*" {
                        if set.len() != worlds.len() {
                            return Err(ParseError::at(
                                espan,
                                "sigma for * must list every world",
                            ));
                        }
                    } else if sigma.insert(sym.to_string(), set).is_some() {
                        return Err(ParseError::at(espan, format!("duplicate sigma entry {sym}")));
                    }
                }
            }
            "const" => {
                for entry in &fields[1..] {
                    let (parts, espan) = entry.expect_list("const entry")?;
                    if parts.len() != 2 {
                        return Err(ParseError::at(espan, "expected (#name element)"));
                    }
                    let (c, cspan) = parts[0].expect_atom("constant")?;
                    let name = c.strip_prefix('#').filter(|n| is_lower_name(n)).ok_or_else(
                        || ParseError::at(cspan, format!("invalid constant {c}")),
                    )?;
                    let (el, elspan) = parts[1].expect_atom("element")?;
                    let idx = elem_index(el, elspan)?;
                    if let Some(prev) = consts.insert(name.to_string(), idx) {
                        if prev != idx {
                            return Err(ParseError::at(
                                espan,
                                format!("non-rigid constant #{name}"),
                            ));
                        }
                    }
                }
            }
            "world" => {
                if fields.len() < 2 {
                    return Err(ParseError::at(fspan, "world block needs a world name"));
                }
                let (wn, wspan) = fields[1].expect_atom("world name")?;
                let wi = world_index(wn, wspan)?;
                if world_blocks.iter().any(|(i, _, _)| *i == wi) {
                    return Err(ParseError::at(wspan, format!("duplicate world block {wn}")));
                }
                world_blocks.push((wi, &fields[2..], fspan));
            }
            other => return Err(ParseError::at(kspan, format!("unknown section {other}"))),
        }
    }

    for (wi, entries, _) in world_blocks {
        for entry in entries {
            let (parts, espan) = entry.expect_list("extension entry")?;
            let (p, pspan) = parts
                .first()
                .ok_or_else(|| ParseError::at(espan, "empty extension entry"))?
                .expect_atom("predicate")?;
            if !is_pred_name(p) {
                return Err(ParseError::at(pspan, format!("invalid predicate {p}")));
            }
            let arity = (parts.len() - 1) as u8;
            if arity > 2 {
                return Err(ParseError::at(espan, "atoms take at most two elements"));
            }
            match arities.get(p) {
                Some((prev, _)) if *prev != arity => {
                    return Err(ParseError::at(
                        pspan,
                        format!(
                            "arity conflict: predicate {p} used with arity {prev} and arity {arity}"
                        ),
                    ))
                }
                None => {
                    arities.insert(p.to_string(), (arity, pspan));
                }
                _ => {}
            }
            let mut idxs = Vec::new();
            for part in &parts[1..] {
                let (el, elspan) = part.expect_atom("element")?;
                idxs.push(elem_index(el, elspan)?);
            }
            let ext = gamma[wi].entry(p.to_string()).or_insert_with(|| match arity {
                0 => Extension::Nullary(false),
                1 => Extension::Unary(Default::default()),
                _ => Extension::Binary(Default::default()),
            });
            match (ext, idxs.as_slice()) {
                (Extension::Nullary(b), []) => *b = true,
                (Extension::Unary(s), [a]) => {
                    s.insert(*a);
                }
                (Extension::Binary(s), [a, b]) => {
                    s.insert((*a, *b));
                }
                _ => unreachable!("arity checked above"),
            }
        }
    }

    Ok(StandpointStructure {
        domain,
        worlds,
        sigma,
        consts,
        gamma,
    })
}

/// Canonical `.sps` printer; inverse of [`parse_structure`] up to section
/// ordering, which is fixed here.
pub fn print_structure(m: &StandpointStructure) -> String {
    let mut out = String::from("(structure\n  (domain");
    for d in &m.domain {
        out.push(' ');
        out.push_str(d);
    }
    out.push_str(")\n  (worlds");
    for w in &m.worlds {
        out.push(' ');
        out.push_str(w);
    }
    out.push_str(")");
    if !m.sigma.is_empty() {
        out.push_str("\n  (sigma");
        for (s, set) in &m.sigma {
            out.push_str(&format!(" ({s}"));
            for wi in set {
                out.push(' ');
                out.push_str(&m.worlds[*wi]);
            }
            out.push(')');
        }
        out.push(')');
    }
    if !m.consts.is_empty() {
        out.push_str("\n  (const");
        for (c, el) in &m.consts {
            out.push_str(&format!(" (#{c} {})", m.domain[*el]));
        }
        out.push(')');
    }
    for (wi, w) in m.worlds.iter().enumerate() {
        out.push_str(&format!("\n  (world {w}"));
        for (p, ext) in &m.gamma[wi] {
            match ext {
                Extension::Nullary(true) => out.push_str(&format!(" ({p})")),
                Extension::Nullary(false) => {}
                Extension::Unary(s) => {
                    for el in s {
                        out.push_str(&format!(" ({p} {})", m.domain[*el]));
                    }
                }
                Extension::Binary(s) => {
                    for (a, b) in s {
                        out.push_str(&format!(" ({p} {} {})", m.domain[*a], m.domain[*b]));
                    }
                }
            }
        }
        out.push(')');
    }
    out.push(')');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_core_and_sugar() {
        let (f, sig) = parse_formula("(and (P x) (not (P x)))").unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::atom1("P", Term::var("x")),
                Formula::not(Formula::atom1("P", Term::var("x")))
            )
        );
        assert_eq!(sig.arity("P"), Some(1));

        let (f, _) = parse_formula("(forall x (P x))").unwrap();
        assert_eq!(print_formula(&f), "(exists=0 x (not (P x)))");

        let (f, _) = parse_formula("(box * (exists>=1 x (Good x)))").unwrap();
        assert_eq!(
            print_formula(&f),
            "(not (dia * (not (exists>=1 x (Good x)))))"
        );
    }

    #[test]
    fn counting_heads() {
        for (src, cmp) in [
            ("(exists<=2 x (P x))", Comparator::Leq),
            ("(exists=2 x (P x))", Comparator::Eq),
            ("(exists>=2 x (P x))", Comparator::Geq),
        ] {
            let (f, _) = parse_formula(src).unwrap();
            match f {
                Formula::CountExists(c, 2, v, _) => {
                    assert_eq!(c, cmp);
                    assert_eq!(v, "x");
                }
                other => panic!("unexpected {other:?}"),
            }
            assert_eq!(print_formula(&parse_formula(src).unwrap().0), src);
        }
    }

    #[test]
    fn constants_and_equality() {
        let (f, sig) = parse_formula("(= #a x)").unwrap();
        assert_eq!(f, Formula::Eq(Term::cst("a"), Term::var("x")));
        assert!(sig.consts().contains("a"));
        assert_eq!(print_formula(&f), "(= #a x)");
    }

    #[test]
    fn standpoint_expressions() {
        let (f, sig) = parse_formula("(dia (union s (diff t *)) (N))").unwrap();
        assert_eq!(
            print_formula(&f),
            "(dia (union s (diff t *)) (N))"
        );
        assert!(sig.standpoints().contains("s"));
        assert!(sig.standpoints().contains("t"));
        assert!(sig.standpoints().contains("*"));
        assert_eq!(sig.arity("N"), Some(0));
    }

    #[test]
    fn arity_conflict_has_span() {
        let src = "(and (P x) (exists>=1 y (P x y)))";
        let err = parse_formula(src).unwrap_err();
        assert!(err.msg.contains("arity conflict"));
        let span = err.span.unwrap();
        assert_eq!(&src[span.start..span.end], "P");
        assert!(err.render(src).contains('^'));
    }

    #[test]
    fn comments_and_declares() {
        let src = "; corpus entry 3\n(declare (pred Q 1) (standpoint s))\n(exists>=1 x (Q x)) ; trailing";
        let (f, sig) = parse_formula(src).unwrap();
        assert_eq!(f, Formula::exists("x", Formula::atom1("Q", Term::var("x"))));
        assert!(sig.standpoints().contains("s"));
    }

    #[test]
    fn declared_arity_conflicts_with_use() {
        let err = parse_formula("(declare (pred P 2)) (P x)").unwrap_err();
        assert!(err.msg.contains("arity conflict"));
    }

    #[test]
    fn rejects_unknown_forms() {
        assert!(parse_formula("(xor (P x) (P x))").unwrap_err().msg.contains("unknown form"));
        assert!(parse_formula("(P x y z)").is_err());
        assert!(parse_formula("((P x))").is_err());
    }

    #[test]
    fn structure_round_trip() {
        let src = "(structure\n  (domain d0 d1)\n  (worlds p0 p1)\n  (sigma (s p0))\n  (const (#a d0))\n  (world p0 (P d0) (R d0 d1))\n  (world p1 (N)))";
        let m = parse_structure(src).unwrap();
        assert_eq!(m.domain, vec!["d0", "d1"]);
        assert_eq!(m.worlds, vec!["p0", "p1"]);
        assert_eq!(m.sigma["s"], std::collections::BTreeSet::from([0]));
        assert_eq!(m.consts["a"], 0);
        let printed = print_structure(&m);
        let reparsed = parse_structure(&printed).unwrap();
        assert_eq!(m, reparsed);
    }

    #[test]
    fn structure_errors() {
        let e = parse_structure("(structure (domain d0) (worlds p0) (world p0 (P d9)))")
            .unwrap_err();
        assert!(e.msg.contains("unknown element"));
        let e = parse_structure(
            "(structure (domain d0 d1) (worlds p0) (const (#a d0) (#a d1)) (world p0))",
        )
        .unwrap_err();
        assert!(e.msg.contains("non-rigid constant"));
        let e = parse_structure("(structure (domain d0) (worlds p0 p1) (sigma (* p0)) (world p0))")
            .unwrap_err();
        assert!(e.msg.contains("every world"));
        let e = parse_structure(
            "(structure (domain d0) (worlds p0) (world p0 (P d0) (P d0 d0)))",
        )
        .unwrap_err();
        assert!(e.msg.contains("arity conflict"));
    }
}
