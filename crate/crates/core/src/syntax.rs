//! Core formula syntax: terms, standpoint expressions, formulas, signatures.
//!
//! The core connectives are exactly atom, equality, negation, conjunction,
//! counting quantification, and the diamond modality. Disjunction,
//! implication, bi-implication, universal quantification, and box are sugar:
//! the constructors below elaborate them into core trees, and the printer
//! never re-sugars. Structural equality on `Formula` is the derived `Eq`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn cst(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparator {
    /// at most n
    Leq,
    /// exactly n
    Eq,
    /// at least n
    Geq,
}

impl Comparator {
    pub fn holds(self, count: usize, n: u32) -> bool {
        match self {
            Comparator::Leq => count <= n as usize,
            Comparator::Eq => count == n as usize,
            Comparator::Geq => count >= n as usize,
        }
    }
}

/// Standpoint expression. `Symbol("*")` is the distinguished full standpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StandpointExpr {
    Symbol(String),
    Union(Box<StandpointExpr>, Box<StandpointExpr>),
    Inter(Box<StandpointExpr>, Box<StandpointExpr>),
    Diff(Box<StandpointExpr>, Box<StandpointExpr>),
}

impl StandpointExpr {
    pub fn star() -> Self {
        StandpointExpr::Symbol("*".into())
    }

    pub fn sym(name: impl Into<String>) -> Self {
        StandpointExpr::Symbol(name.into())
    }

    pub fn is_star(&self) -> bool {
        matches!(self, StandpointExpr::Symbol(s) if s == "*")
    }

    /// All symbols occurring in the expression, `*` included.
    pub fn symbols(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            StandpointExpr::Symbol(s) => {
                out.insert(s.as_str());
            }
            StandpointExpr::Union(a, b)
            | StandpointExpr::Inter(a, b)
            | StandpointExpr::Diff(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    /// Distinct subexpressions, this expression included.
    pub fn subexprs(&self) -> Vec<&StandpointExpr> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.walk(&mut seen, &mut out);
        out
    }

    fn walk<'a>(&'a self, seen: &mut HashSet<&'a StandpointExpr>, out: &mut Vec<&'a StandpointExpr>) {
        if let StandpointExpr::Union(a, b)
        | StandpointExpr::Inter(a, b)
        | StandpointExpr::Diff(a, b) = self
        {
            a.walk(seen, out);
            b.walk(seen, out);
        }
        if seen.insert(self) {
            out.push(self);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// Counting quantifier: there exist (cmp n) elements for the variable
    /// satisfying the body. Rebinding a variable already in scope is legal;
    /// the inner binder shadows.
    CountExists(Comparator, u32, String, Box<Formula>),
    Dia(StandpointExpr, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: impl Into<String>, terms: Vec<Term>) -> Self {
        Formula::Atom(pred.into(), terms)
    }

    pub fn atom0(pred: impl Into<String>) -> Self {
        Formula::Atom(pred.into(), vec![])
    }

    pub fn atom1(pred: impl Into<String>, t: Term) -> Self {
        Formula::Atom(pred.into(), vec![t])
    }

    pub fn atom2(pred: impl Into<String>, s: Term, t: Term) -> Self {
        Formula::Atom(pred.into(), vec![s, t])
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn count(cmp: Comparator, n: u32, var: impl Into<String>, body: Formula) -> Self {
        Formula::CountExists(cmp, n, var.into(), Box::new(body))
    }

    pub fn dia(e: StandpointExpr, f: Formula) -> Self {
        Formula::Dia(e, Box::new(f))
    }

    // -- sugar ----------------------------------------------------------

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    /// forall v. f  :=  exists=0 v. not f
    pub fn forall(var: impl Into<String>, f: Formula) -> Self {
        Formula::count(Comparator::Eq, 0, var, Formula::not(f))
    }

    pub fn exists(var: impl Into<String>, f: Formula) -> Self {
        Formula::count(Comparator::Geq, 1, var, f)
    }

    /// box_e f  :=  not dia_e not f
    pub fn box_(e: StandpointExpr, f: Formula) -> Self {
        Formula::not(Formula::dia(e, Formula::not(f)))
    }

    /// The constant-true proposition. The core grammar has no boolean
    /// constants, so this is the fixed encoding `exists>=0 x (= x x)`.
    pub fn top() -> Self {
        Formula::count(
            Comparator::Geq,
            0,
            "x",
            Formula::Eq(Term::var("x"), Term::var("x")),
        )
    }

    pub fn bot() -> Self {
        Formula::not(Formula::top())
    }

    /// Left-associated conjunction; the empty conjunction is `top()`.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::top(),
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Left-associated disjunction; the empty disjunction is `bot()`.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::bot(),
            Some(first) => it.fold(first, Formula::or),
        }
    }
}

/// Distinct subformulas in leftmost-innermost order (post-order, first
/// occurrence kept), the formula itself last. `|Sub(f)|` is the length.
pub fn subformulas(f: &Formula) -> Vec<&Formula> {
    let mut seen: HashSet<&Formula> = HashSet::new();
    let mut out = Vec::new();
    fn walk<'a>(f: &'a Formula, seen: &mut HashSet<&'a Formula>, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::Atom(..) | Formula::Eq(..) => {}
            Formula::Not(a) | Formula::CountExists(_, _, _, a) | Formula::Dia(_, a) => {
                walk(a, seen, out)
            }
            Formula::And(a, b) => {
                walk(a, seen, out);
                walk(b, seen, out);
            }
        }
        if seen.insert(f) {
            out.push(f);
        }
    }
    walk(f, &mut seen, &mut out);
    out
}

pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut out);
    out
}

fn collect_free(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Atom(_, terms) => {
            for t in terms {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            }
        }
        Formula::Eq(s, t) => {
            for t in [s, t] {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            }
        }
        Formula::Not(a) | Formula::Dia(_, a) => collect_free(a, out),
        Formula::And(a, b) => {
            collect_free(a, out);
            collect_free(b, out);
        }
        Formula::CountExists(_, _, v, body) => {
            let mut inner = BTreeSet::new();
            collect_free(body, &mut inner);
            inner.remove(v);
            out.extend(inner);
        }
    }
}

/// Which sublanguages the formula falls into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentReport {
    /// only variables x and y, all atoms of arity <= 2
    pub is_c2: bool,
    /// every diamond body has at most one free variable
    pub is_monodic: bool,
    /// every standpoint expression is exactly the full standpoint `*`
    pub is_s5: bool,
    /// no nullary atoms
    pub nullary_free: bool,
    /// no constant terms
    pub constant_free: bool,
    /// conjunction of the five flags above
    pub is_frugal: bool,
    /// number of distinct subformulas
    pub size: usize,
    /// subformula count plus distinct standpoint subexpressions
    pub size_with_standpoint_exprs: usize,
}

pub fn fragment_report(f: &Formula) -> FragmentReport {
    let subs = subformulas(f);
    let mut is_c2 = true;
    let mut is_monodic = true;
    let mut is_s5 = true;
    let mut nullary_free = true;
    let mut constant_free = true;
    let mut expr_subs: HashSet<&StandpointExpr> = HashSet::new();
    for sub in &subs {
        match sub {
            Formula::Atom(_, terms) => {
                if terms.len() > 2 {
                    is_c2 = false;
                }
                if terms.is_empty() {
                    nullary_free = false;
                }
                for t in terms {
                    check_term(t, &mut is_c2, &mut constant_free);
                }
            }
            Formula::Eq(s, t) => {
                check_term(s, &mut is_c2, &mut constant_free);
                check_term(t, &mut is_c2, &mut constant_free);
            }
            Formula::CountExists(_, _, v, _) => {
                if v != "x" && v != "y" {
                    is_c2 = false;
                }
            }
            Formula::Dia(e, body) => {
                if !e.is_star() {
                    is_s5 = false;
                }
                if free_vars(body).len() > 1 {
                    is_monodic = false;
                }
                expr_subs.extend(e.subexprs());
            }
            _ => {}
        }
    }
    let is_frugal = is_c2 && is_monodic && is_s5 && nullary_free && constant_free;
    FragmentReport {
        is_c2,
        is_monodic,
        is_s5,
        nullary_free,
        constant_free,
        is_frugal,
        size: subs.len(),
        size_with_standpoint_exprs: subs.len() + expr_subs.len(),
    }
}

fn check_term(t: &Term, is_c2: &mut bool, constant_free: &mut bool) {
    match t {
        Term::Var(v) => {
            if v != "x" && v != "y" {
                *is_c2 = false;
            }
        }
        Term::Const(_) => *constant_free = false,
    }
}

/// The diamond subformulas of a sentence, in leftmost-innermost order, and
/// the subset whose body has exactly one free variable.
#[derive(Debug, Clone)]
pub struct DiaSets<'a> {
    pub dia: Vec<&'a Formula>,
    pub free_dia: Vec<&'a Formula>,
}

pub fn dia_sets(f: &Formula) -> Result<DiaSets<'_>> {
    let fv = free_vars(f);
    if !fv.is_empty() {
        return Err(Error::FreeVariables(
            fv.into_iter().collect::<Vec<_>>().join(", "),
        ));
    }
    let dia: Vec<&Formula> = subformulas(f)
        .into_iter()
        .filter(|s| matches!(s, Formula::Dia(..)))
        .collect();
    let free_dia = dia
        .iter()
        .copied()
        .filter(|d| match d {
            Formula::Dia(_, body) => free_vars(body).len() == 1,
            _ => unreachable!(),
        })
        .collect();
    Ok(DiaSets { dia, free_dia })
}

/// Eliminates double negations and applies the two counting-quantifier
/// negation dualities `not exists=0 <-> exists>=1`. Used to compare
/// machine-built translations against hand-transcribed shapes; the
/// translation pipeline itself never simplifies.
pub fn simplify_negations(f: &Formula) -> Formula {
    let g = match f {
        Formula::Atom(..) | Formula::Eq(..) => f.clone(),
        Formula::Not(a) => Formula::not(simplify_negations(a)),
        Formula::And(a, b) => Formula::and(simplify_negations(a), simplify_negations(b)),
        Formula::CountExists(c, n, v, b) => Formula::count(*c, *n, v.clone(), simplify_negations(b)),
        Formula::Dia(e, b) => Formula::dia(e.clone(), simplify_negations(b)),
    };
    let mut g = g;
    loop {
        match g {
            Formula::Not(inner) => match *inner {
                Formula::Not(a) => g = *a,
                Formula::CountExists(Comparator::Eq, 0, v, b) => {
                    g = Formula::CountExists(Comparator::Geq, 1, v, b);
                    break;
                }
                Formula::CountExists(Comparator::Geq, 1, v, b) => {
                    g = Formula::CountExists(Comparator::Eq, 0, v, b);
                    break;
                }
                other => {
                    g = Formula::not(other);
                    break;
                }
            },
            other => {
                g = other;
                break;
            }
        }
    }
    g
}

/// Predicate/constant/standpoint vocabulary. Invariant: the three name sets
/// are pairwise disjoint, arities are at most 2, and `*` is a standpoint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    preds: BTreeMap<String, u8>,
    consts: BTreeSet<String>,
    standpoints: BTreeSet<String>,
}

impl Signature {
    pub fn new(
        preds: BTreeMap<String, u8>,
        consts: BTreeSet<String>,
        mut standpoints: BTreeSet<String>,
    ) -> Result<Self> {
        standpoints.insert("*".into());
        for (p, a) in &preds {
            if *a > 2 {
                return Err(Error::Invalid(format!("predicate {p} has arity {a} > 2")));
            }
            if consts.contains(p) || standpoints.contains(p) {
                return Err(Error::SignatureOverlap(p.clone()));
            }
        }
        for c in &consts {
            if standpoints.contains(c) {
                return Err(Error::SignatureOverlap(c.clone()));
            }
        }
        Ok(Signature {
            preds,
            consts,
            standpoints,
        })
    }

    /// Smallest signature over which `f` is well-formed.
    pub fn infer(f: &Formula) -> Result<Self> {
        let mut sig = Signature::default();
        sig.standpoints.insert("*".into());
        sig.extend_from(f)?;
        Ok(sig)
    }

    /// Adds everything occurring in `f`; errors on arity conflicts.
    pub fn extend_from(&mut self, f: &Formula) -> Result<()> {
        match f {
            Formula::Atom(p, terms) => {
                let arity = terms.len() as u8;
                if arity > 2 {
                    return Err(Error::Invalid(format!(
                        "predicate {p} used with arity {arity} > 2"
                    )));
                }
                match self.preds.get(p) {
                    Some(prev) if *prev != arity => {
                        return Err(Error::ArityConflict {
                            pred: p.clone(),
                            prev: *prev,
                            new: arity,
                        })
                    }
                    None => {
                        self.preds.insert(p.clone(), arity);
                    }
                    _ => {}
                }
                for t in terms {
                    if let Term::Const(c) = t {
                        self.consts.insert(c.clone());
                    }
                }
                Ok(())
            }
            Formula::Eq(s, t) => {
                for t in [s, t] {
                    if let Term::Const(c) = t {
                        self.consts.insert(c.clone());
                    }
                }
                Ok(())
            }
            Formula::Not(a) | Formula::CountExists(_, _, _, a) => self.extend_from(a),
            Formula::And(a, b) => {
                self.extend_from(a)?;
                self.extend_from(b)
            }
            Formula::Dia(e, a) => {
                for s in e.symbols() {
                    self.standpoints.insert(s.to_string());
                }
                self.extend_from(a)
            }
        }
    }

    pub fn preds(&self) -> &BTreeMap<String, u8> {
        &self.preds
    }

    pub fn consts(&self) -> &BTreeSet<String> {
        &self.consts
    }

    /// Standpoint symbols, `*` included.
    pub fn standpoints(&self) -> &BTreeSet<String> {
        &self.standpoints
    }

    pub fn arity(&self, pred: &str) -> Option<u8> {
        self.preds.get(pred).copied()
    }

    pub fn preds_of_arity(&self, arity: u8) -> Vec<&str> {
        self.preds
            .iter()
            .filter(|(_, a)| **a == arity)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.preds.contains_key(name)
            || self.consts.contains(name)
            || self.standpoints.contains(name)
    }

    pub fn add_pred(&mut self, name: impl Into<String>, arity: u8) {
        self.preds.insert(name.into(), arity);
    }

    /// `base` if unused, otherwise `base_1`, `base_2`, ... Registers the
    /// winner with the given arity.
    pub fn fresh_pred(&mut self, base: &str, arity: u8) -> String {
        let mut name = base.to_string();
        let mut k = 0u32;
        while self.contains_name(&name) {
            k += 1;
            name = format!("{base}_{k}");
        }
        self.preds.insert(name.clone(), arity);
        name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &str) -> Formula {
        Formula::atom1("P", Term::var(v))
    }

    #[test]
    fn subformula_count_dedups_structurally() {
        // and(P(x), not(P(x))) has 3 distinct subformulas
        let f = Formula::and(p("x"), Formula::not(p("x")));
        let subs = subformulas(&f);
        assert_eq!(subs.len(), 3);
        assert_eq!(subs[0], &p("x"));
        assert_eq!(subs[1], &Formula::not(p("x")));
        assert_eq!(subs[2], &f);
        assert_eq!(fragment_report(&f).size, 3);
    }

    #[test]
    fn shadowing_respected_by_free_vars() {
        // exists>=1 x (P(x) and exists=0 x (Q(x,y))) frees only y
        let inner = Formula::count(
            Comparator::Eq,
            0,
            "x",
            Formula::atom2("Q", Term::var("x"), Term::var("y")),
        );
        let f = Formula::count(Comparator::Geq, 1, "x", Formula::and(p("x"), inner));
        assert_eq!(
            free_vars(&f),
            BTreeSet::from(["y".to_string()])
        );
    }

    #[test]
    fn sugar_elaborates_to_core() {
        let f = Formula::forall("x", p("x"));
        assert_eq!(
            f,
            Formula::count(Comparator::Eq, 0, "x", Formula::not(p("x")))
        );
        let b = Formula::box_(StandpointExpr::star(), p("x"));
        assert_eq!(
            b,
            Formula::not(Formula::dia(StandpointExpr::star(), Formula::not(p("x"))))
        );
    }

    #[test]
    fn report_flags() {
        let s5 = Formula::dia(StandpointExpr::star(), Formula::exists("x", p("x")));
        let r = fragment_report(&s5);
        assert!(r.is_c2 && r.is_monodic && r.is_s5 && r.nullary_free && r.constant_free);
        assert!(r.is_frugal);

        let named = Formula::dia(StandpointExpr::sym("s"), Formula::exists("x", p("x")));
        let r = fragment_report(&named);
        assert!(!r.is_s5 && !r.is_frugal);
        assert!(r.is_c2);

        let with_const = Formula::exists("x", Formula::atom2("R", Term::var("x"), Term::cst("a")));
        let r = fragment_report(&with_const);
        assert!(!r.constant_free && !r.is_frugal);

        let nullary = Formula::and(Formula::atom0("N"), Formula::exists("x", p("x")));
        assert!(!fragment_report(&nullary).nullary_free);

        let three_var = Formula::exists("z", Formula::atom1("P", Term::var("z")));
        assert!(!fragment_report(&three_var).is_c2);
    }

    #[test]
    fn monodic_flag_counts_free_vars_of_dia_bodies() {
        let bad = Formula::forall(
            "x",
            Formula::forall(
                "y",
                Formula::dia(
                    StandpointExpr::star(),
                    Formula::atom2("R", Term::var("x"), Term::var("y")),
                ),
            ),
        );
        assert!(!fragment_report(&bad).is_monodic);
        let ok = Formula::forall(
            "x",
            Formula::dia(StandpointExpr::star(), p("x")),
        );
        assert!(fragment_report(&ok).is_monodic);
    }

    #[test]
    fn dia_sets_requires_sentence_and_orders_leftmost_innermost() {
        assert!(dia_sets(&Formula::dia(StandpointExpr::star(), p("x"))).is_err());

        // box_*(P) = not dia_*(not P) nested before a sentential diamond
        let d1 = Formula::dia(StandpointExpr::star(), Formula::not(p("x")));
        let first = Formula::exists("x", Formula::not(d1.clone()));
        let d2 = Formula::dia(StandpointExpr::star(), Formula::exists("y", p("y")));
        let f = Formula::and(first, d2.clone());
        let ds = dia_sets(&f).unwrap();
        assert_eq!(ds.dia, vec![&d1, &d2]);
        assert_eq!(ds.free_dia, vec![&d1]);
    }

    #[test]
    fn size_with_standpoint_exprs_counts_expr_tree() {
        let e = StandpointExpr::Union(
            Box::new(StandpointExpr::sym("s")),
            Box::new(StandpointExpr::star()),
        );
        let f = Formula::dia(e, Formula::exists("x", p("x")));
        let r = fragment_report(&f);
        // subformulas: P(x), exists, dia = 3; exprs: s, *, union = 3
        assert_eq!(r.size, 3);
        assert_eq!(r.size_with_standpoint_exprs, 6);
    }

    #[test]
    fn fresh_pred_bumps_on_collision() {
        let f = Formula::and(Formula::atom1("E_1", Term::var("x")), p("x"));
        let f = Formula::exists("x", f);
        let mut sig = Signature::infer(&f).unwrap();
        assert_eq!(sig.fresh_pred("E_1", 1), "E_1_1");
        assert_eq!(sig.fresh_pred("E_2", 1), "E_2");
    }

    #[test]
    fn arity_conflict_detected() {
        let f = Formula::and(p("x"), Formula::atom2("P", Term::var("x"), Term::var("y")));
        let f = Formula::exists("x", Formula::exists("y", f));
        assert!(matches!(
            Signature::infer(&f),
            Err(Error::ArityConflict { .. })
        ));
    }

    #[test]
    fn simplify_negation_dualities() {
        let f = Formula::not(Formula::not(p("x")));
        assert_eq!(simplify_negations(&f), p("x"));
        let f = Formula::not(Formula::count(Comparator::Eq, 0, "x", p("x")));
        assert_eq!(
            simplify_negations(&f),
            Formula::count(Comparator::Geq, 1, "x", p("x"))
        );
        let f = Formula::not(Formula::count(Comparator::Geq, 1, "x", p("x")));
        assert_eq!(
            simplify_negations(&f),
            Formula::count(Comparator::Eq, 0, "x", p("x"))
        );
        // forall x (phi -> psi) normalizes to exists=0 x (phi and not psi)
        let f = Formula::forall("x", Formula::implies(p("x"), Formula::atom1("Q", Term::var("x"))));
        assert_eq!(
            simplify_negations(&f),
            Formula::count(
                Comparator::Eq,
                0,
                "x",
                Formula::and(p("x"), Formula::not(Formula::atom1("Q", Term::var("x"))))
            )
        );
        // no rewrite for exists<=0 or exists=1 under negation
        let f = Formula::not(Formula::count(Comparator::Leq, 0, "x", p("x")));
        assert_eq!(simplify_negations(&f), f);
    }
}
