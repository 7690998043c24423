//! The three equisatisfiable normalizations that make a sentence frugal:
//! collapsing standpoint expressions into S5, eliminating nullary
//! predicates, eliminating constants. Each stage preserves two-variable
//! form and monodicity; the pipeline output is frugal. Each stage also
//! has a model mapping (`map_model_*`) carrying a witness of the input
//! sentence to a witness of the output sentence.

use std::collections::BTreeMap;

use crate::semantics::{Extension, StandpointStructure};
use crate::syntax::{
    fragment_report, Comparator, Formula, Signature, StandpointExpr, Term,
};
use crate::{Error, Result};

/// Names introduced by the normalizations, for reversibility and reporting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenameLedger {
    /// standpoint symbol ↦ fresh nullary predicate
    pub standpoint_nullary: BTreeMap<String, String>,
    /// nullary predicate ↦ fresh unary predicate
    pub nullary_unary: BTreeMap<String, String>,
    /// constant ↦ fresh unary predicate
    pub constant_unary: BTreeMap<String, String>,
}

impl RenameLedger {
    pub fn is_empty(&self) -> bool {
        self.standpoint_nullary.is_empty()
            && self.nullary_unary.is_empty()
            && self.constant_unary.is_empty()
    }

    pub fn merge(&mut self, other: RenameLedger) {
        self.standpoint_nullary.extend(other.standpoint_nullary);
        self.nullary_unary.extend(other.nullary_unary);
        self.constant_unary.extend(other.constant_unary);
    }

    /// Plain-text rendering written as the `.ledger` sidecar file.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (s, p) in &self.standpoint_nullary {
            out.push_str(&format!("standpoint {s} -> {p}\n"));
        }
        for (n, p) in &self.nullary_unary {
            out.push_str(&format!("nullary {n} -> {p}\n"));
        }
        for (c, p) in &self.constant_unary {
            out.push_str(&format!("constant {c} -> {p}\n"));
        }
        out
    }
}

fn and_unless_true(guard: Formula, body: Formula) -> Formula {
    if guard == Formula::top() {
        body
    } else {
        Formula::and(guard, body)
    }
}

fn trans_e(e: &StandpointExpr, names: &BTreeMap<String, String>) -> Formula {
    match e {
        StandpointExpr::Symbol(s) if s == "*" => Formula::top(),
        StandpointExpr::Symbol(s) => Formula::atom0(names[s].clone()),
        StandpointExpr::Union(a, b) => {
            Formula::or(trans_e(a, names), trans_e(b, names))
        }
        StandpointExpr::Inter(a, b) => {
            let (fa, fb) = (trans_e(a, names), trans_e(b, names));
            if fb == Formula::top() {
                fa
            } else {
                and_unless_true(fa, fb)
            }
        }
        StandpointExpr::Diff(a, b) => {
            and_unless_true(trans_e(a, names), Formula::not(trans_e(b, names)))
        }
    }
}

/// Collapses every modality to `*`, guarding each diamond body with a
/// propositional rendering of its standpoint expression (one fresh nullary
/// predicate per standpoint symbol).
pub fn to_s5(f: &Formula) -> Result<(Formula, RenameLedger)> {
    let mut sig = Signature::infer(f)?;
    let mut names = BTreeMap::new();
    for s in sig.standpoints().clone() {
        if s == "*" {
            continue;
        }
        names.insert(s.clone(), sig.fresh_pred(&format!("_S_{s}"), 0));
    }

    fn rec(f: &Formula, names: &BTreeMap<String, String>) -> Formula {
        match f {
            Formula::Atom(..) | Formula::Eq(..) => f.clone(),
            Formula::Not(a) => Formula::not(rec(a, names)),
            Formula::And(a, b) => Formula::and(rec(a, names), rec(b, names)),
            Formula::CountExists(cmp, n, v, body) => {
                Formula::count(*cmp, *n, v.clone(), rec(body, names))
            }
            Formula::Dia(e, body) => Formula::dia(
                StandpointExpr::star(),
                and_unless_true(trans_e(e, names), rec(body, names)),
            ),
        }
    }

    let out = rec(f, &names);
    Ok((
        out,
        RenameLedger {
            standpoint_nullary: names,
            ..Default::default()
        },
    ))
}

/// Replaces every nullary atom N by ∀x.P_N(x) for a fresh unary P_N.
pub fn remove_nullary(f: &Formula) -> Result<(Formula, RenameLedger)> {
    let mut sig = Signature::infer(f)?;
    let mut names = BTreeMap::new();
    for (p, &arity) in sig.preds().clone().iter() {
        if arity == 0 {
            names.insert(p.clone(), sig.fresh_pred(&format!("_N_{p}"), 1));
        }
    }

    fn rec(f: &Formula, names: &BTreeMap<String, String>) -> Formula {
        match f {
            Formula::Atom(p, terms) if terms.is_empty() && names.contains_key(p) => {
                Formula::forall("x", Formula::atom1(names[p].clone(), Term::var("x")))
            }
            Formula::Atom(..) | Formula::Eq(..) => f.clone(),
            Formula::Not(a) => Formula::not(rec(a, names)),
            Formula::And(a, b) => Formula::and(rec(a, names), rec(b, names)),
            Formula::CountExists(cmp, n, v, body) => {
                Formula::count(*cmp, *n, v.clone(), rec(body, names))
            }
            Formula::Dia(e, body) => Formula::dia(e.clone(), rec(body, names)),
        }
    }

    let out = rec(f, &names);
    Ok((
        out,
        RenameLedger {
            nullary_unary: names,
            ..Default::default()
        },
    ))
}

fn other_var(v: &str) -> &'static str {
    if v == "x" {
        "y"
    } else {
        "x"
    }
}

fn singleton_pred(name: &str, var: &str) -> Formula {
    Formula::atom1(name, Term::var(var))
}

/// Replaces constant-bearing atoms by existentials over fresh singleton
/// predicates, and conjoins the sentence pinning each predicate to exactly
/// one element, rigidly.
pub fn remove_constants(f: &Formula) -> Result<(Formula, RenameLedger)> {
    let report = fragment_report(f);
    if !report.is_c2 {
        return Err(Error::NotTwoVariable(
            "constant removal rewrites atoms over the variables x and y only".into(),
        ));
    }
    let mut sig = Signature::infer(f)?;
    if sig.consts().is_empty() {
        return Ok((f.clone(), RenameLedger::default()));
    }
    let mut names = BTreeMap::new();
    for c in sig.consts().clone() {
        names.insert(c.clone(), sig.fresh_pred(&format!("_A_{c}"), 1));
    }

    fn rewrite_atom(p: &str, terms: &[Term], names: &BTreeMap<String, String>) -> Formula {
        match terms {
            [Term::Const(a)] => Formula::exists(
                "x",
                Formula::and(
                    singleton_pred(&names[a], "x"),
                    Formula::atom1(p, Term::var("x")),
                ),
            ),
            [Term::Const(a), Term::Var(v)] => {
                let w = other_var(v);
                Formula::exists(
                    w,
                    Formula::and(
                        singleton_pred(&names[a], w),
                        Formula::atom2(p, Term::var(w), Term::var(v.clone())),
                    ),
                )
            }
            [Term::Var(v), Term::Const(a)] => {
                let w = other_var(v);
                Formula::exists(
                    w,
                    Formula::and(
                        singleton_pred(&names[a], w),
                        Formula::atom2(p, Term::var(v.clone()), Term::var(w)),
                    ),
                )
            }
            [Term::Const(a), Term::Const(b)] => Formula::exists(
                "x",
                Formula::exists(
                    "y",
                    Formula::and(
                        Formula::and(singleton_pred(&names[a], "x"), singleton_pred(&names[b], "y")),
                        Formula::atom2(p, Term::var("x"), Term::var("y")),
                    ),
                ),
            ),
            _ => Formula::atom(p, terms.to_vec()),
        }
    }

    fn rec(f: &Formula, names: &BTreeMap<String, String>) -> Formula {
        match f {
            Formula::Atom(p, terms) => rewrite_atom(p, terms, names),
            Formula::Eq(Term::Var(v), Term::Const(a))
            | Formula::Eq(Term::Const(a), Term::Var(v)) => singleton_pred(&names[a], v),
            Formula::Eq(Term::Const(a), Term::Const(b)) => Formula::exists(
                "x",
                Formula::and(singleton_pred(&names[a], "x"), singleton_pred(&names[b], "x")),
            ),
            Formula::Eq(..) => f.clone(),
            Formula::Not(a) => Formula::not(rec(a, names)),
            Formula::And(a, b) => Formula::and(rec(a, names), rec(b, names)),
            Formula::CountExists(cmp, n, v, body) => {
                Formula::count(*cmp, *n, v.clone(), rec(body, names))
            }
            Formula::Dia(e, body) => Formula::dia(e.clone(), rec(body, names)),
        }
    }

    // one element carries P_a, and the same element does so in every world
    let consts_axiom = Formula::and_all(names.values().map(|p| {
        Formula::and(
            Formula::count(Comparator::Eq, 1, "x", singleton_pred(p, "x")),
            Formula::count(
                Comparator::Eq,
                1,
                "x",
                Formula::box_(StandpointExpr::star(), singleton_pred(p, "x")),
            ),
        )
    }));
    let body = rec(f, &names);
    Ok((
        Formula::and(consts_axiom, body),
        RenameLedger {
            constant_unary: names,
            ..Default::default()
        },
    ))
}

/// Carries a model across [`to_s5`]: the standpoint map empties out and
/// each introduced nullary becomes true exactly at the worlds its
/// standpoint symbol used to denote.
pub fn map_model_to_s5(m: &StandpointStructure, ledger: &RenameLedger) -> StandpointStructure {
    let mut out = m.clone();
    for (s, n) in &ledger.standpoint_nullary {
        let worlds = m.sigma_set(&StandpointExpr::sym(s.clone()));
        for (w, g) in out.gamma.iter_mut().enumerate() {
            g.insert(n.clone(), Extension::Nullary(worlds.contains(&w)));
        }
    }
    out.sigma.clear();
    out
}

/// Carries a model across [`remove_nullary`]: each replaced nullary
/// becomes a unary predicate holding of everything or nothing, per world.
pub fn map_model_remove_nullary(
    m: &StandpointStructure,
    ledger: &RenameLedger,
) -> StandpointStructure {
    let mut out = m.clone();
    let everything: std::collections::BTreeSet<usize> = (0..m.domain.len()).collect();
    for (n, p) in &ledger.nullary_unary {
        for g in &mut out.gamma {
            let holds = matches!(g.get(n), Some(Extension::Nullary(true)));
            g.insert(
                p.clone(),
                Extension::Unary(if holds { everything.clone() } else { Default::default() }),
            );
            g.remove(n);
        }
    }
    out
}

/// Carries a model across [`remove_constants`]: each singleton predicate
/// holds rigidly of the element its constant denotes, and the constant
/// map empties out.
pub fn map_model_remove_constants(
    m: &StandpointStructure,
    ledger: &RenameLedger,
) -> Result<StandpointStructure> {
    let mut out = m.clone();
    for (c, p) in &ledger.constant_unary {
        let elem = *m
            .consts
            .get(c)
            .ok_or_else(|| Error::UnknownConstant(c.clone()))?;
        for g in &mut out.gamma {
            g.insert(p.clone(), Extension::Unary([elem].into()));
        }
    }
    out.consts.clear();
    Ok(out)
}

/// Carries a model across the whole [`frugalize`] pipeline, given its
/// merged ledger. The stages commute with the merged maps because each
/// stage reads only the names the previous stages have already placed.
pub fn map_model_frugalize(
    m: &StandpointStructure,
    ledger: &RenameLedger,
) -> Result<StandpointStructure> {
    let s5 = map_model_to_s5(m, ledger);
    let nf = map_model_remove_nullary(&s5, ledger);
    map_model_remove_constants(&nf, ledger)
}

/// S5 → nullary-free → constant-free; the output is frugal.
pub fn frugalize(f: &Formula) -> Result<(Formula, RenameLedger)> {
    let report = fragment_report(f);
    if !report.is_c2 {
        return Err(Error::NotTwoVariable("frugalization expects a C2 input".into()));
    }
    if !report.is_monodic {
        return Err(Error::Invalid(
            "frugalization expects a monodic input".into(),
        ));
    }
    let (s5, mut ledger) = to_s5(f)?;
    let (nf, l2) = remove_nullary(&s5)?;
    let (cf, l3) = remove_constants(&nf)?;
    ledger.merge(l2);
    ledger.merge(l3);
    Ok((cf, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, print_formula};
    use crate::syntax::subformulas;

    fn parsed(src: &str) -> Formula {
        parse_formula(src).unwrap().0
    }

    #[test]
    fn s5_translates_set_expressions() {
        let f = parsed("(dia (union s1 s2) (P x))");
        let (out, ledger) = to_s5(&f).unwrap();
        assert_eq!(
            print_formula(&out),
            "(dia * (and (not (and (not (_S_s1)) (not (_S_s2)))) (P x)))"
        );
        assert_eq!(ledger.standpoint_nullary["s1"], "_S_s1");
        assert!(fragment_report(&out).is_s5);
        assert!(fragment_report(&out).is_monodic);
    }

    #[test]
    fn s5_star_guard_vanishes() {
        let f = parsed("(dia * (P x))");
        let (out, ledger) = to_s5(&f).unwrap();
        assert_eq!(out, f);
        assert!(ledger.is_empty());
    }

    #[test]
    fn s5_difference_keeps_the_contradictory_guard() {
        let f = parsed("(dia (diff s s) (P x))");
        let (out, _) = to_s5(&f).unwrap();
        assert_eq!(
            print_formula(&out),
            "(dia * (and (and (_S_s) (not (_S_s))) (P x)))"
        );
    }

    #[test]
    fn nullary_removal() {
        let f = parsed("(N)");
        let (out, ledger) = remove_nullary(&f).unwrap();
        assert_eq!(print_formula(&out), "(exists=0 x (not (_N_N x)))");
        assert_eq!(ledger.nullary_unary["N"], "_N_N");

        let g = parsed("(P x)");
        let (same, l) = remove_nullary(&g).unwrap();
        assert_eq!(same, g);
        assert!(l.is_empty());

        let h = parsed("(dia * (and (N) (P y)))");
        let (out, _) = remove_nullary(&h).unwrap();
        assert!(fragment_report(&out).is_monodic);
        assert!(fragment_report(&out).nullary_free);
    }

    #[test]
    fn constant_removal_rows() {
        let (out, ledger) = remove_constants(&parsed("(P #a)")).unwrap();
        let Formula::And(_, body) = &out else { panic!() };
        assert_eq!(
            print_formula(body),
            "(exists>=1 x (and (_A_a x) (P x)))"
        );
        assert_eq!(ledger.constant_unary["a"], "_A_a");

        let (out, _) = remove_constants(&parsed("(= #a #b)")).unwrap();
        let Formula::And(axiom, body) = &out else { panic!() };
        assert_eq!(
            print_formula(body),
            "(exists>=1 x (and (_A_a x) (_A_b x)))"
        );
        // rigid singleton axiom for each constant, a before b
        assert_eq!(
            print_formula(axiom),
            "(and (and (exists=1 x (_A_a x)) (exists=1 x (not (dia * (not (_A_a x)))))) \
             (and (exists=1 x (_A_b x)) (exists=1 x (not (dia * (not (_A_b x)))))))"
        );

        let (out, _) = remove_constants(&parsed("(forall x (R #a x))")).unwrap();
        let Formula::And(_, body) = &out else { panic!() };
        assert_eq!(
            print_formula(body),
            "(exists=0 x (not (exists>=1 y (and (_A_a y) (R y x)))))"
        );

        let (out, _) = remove_constants(&parsed("(forall y (R y #a))")).unwrap();
        let Formula::And(_, body) = &out else { panic!() };
        assert_eq!(
            print_formula(body),
            "(exists=0 y (not (exists>=1 x (and (_A_a x) (R y x)))))"
        );

        let (out, _) = remove_constants(&parsed("(R #a #b)")).unwrap();
        let Formula::And(_, body) = &out else { panic!() };
        assert_eq!(
            print_formula(body),
            "(exists>=1 x (exists>=1 y (and (and (_A_a x) (_A_b y)) (R x y))))"
        );

        let (out, _) = remove_constants(&parsed("(forall x (= x #a))")).unwrap();
        let Formula::And(_, body) = &out else { panic!() };
        assert_eq!(print_formula(body), "(exists=0 x (not (_A_a x)))");
    }

    #[test]
    fn constant_free_input_is_untouched() {
        let f = parsed("(forall x (P x))");
        let (out, ledger) = remove_constants(&f).unwrap();
        assert_eq!(out, f);
        assert!(ledger.is_empty());
    }

    #[test]
    fn constant_removal_requires_two_variable_form() {
        let f = parsed("(exists>=1 z (and (P z) (Q #a)))");
        assert!(matches!(
            remove_constants(&f),
            Err(Error::NotTwoVariable(_))
        ));
    }

    #[test]
    fn frugalize_pipeline() {
        let f = parsed("(dia s (P #a))");
        let (out, ledger) = frugalize(&f).unwrap();
        let report = fragment_report(&out);
        assert!(report.is_frugal, "{}", print_formula(&out));
        assert_eq!(ledger.standpoint_nullary["s"], "_S_s");
        assert_eq!(ledger.nullary_unary["_S_s"], "_N__S_s");
        assert_eq!(ledger.constant_unary["a"], "_A_a");

        let frugal = parsed("(dia * (exists>=1 x (P x)))");
        let (same, l) = frugalize(&frugal).unwrap();
        assert_eq!(same, frugal);
        assert!(l.is_empty());
    }

    #[test]
    fn model_mapping_follows_each_stage() {
        use crate::parse::parse_structure;
        use crate::semantics::models;

        // two worlds disagreeing on a nullary, one per standpoint
        let f = parsed("(and (dia s1 (N)) (dia s2 (not (N))))");
        let m = parse_structure(
            "(structure (domain d0) (worlds w0 w1) (sigma (s1 w0) (s2 w1)) (world w0 (N)))",
        )
        .unwrap();
        assert!(models(&m, &f).unwrap());

        let (s5, l1) = to_s5(&f).unwrap();
        let m1 = map_model_to_s5(&m, &l1);
        assert!(m1.sigma.is_empty());
        assert!(models(&m1, &s5).unwrap());

        let (nf, l2) = remove_nullary(&s5).unwrap();
        let m2 = map_model_remove_nullary(&m1, &l2);
        assert!(m2.gamma.iter().all(|g| !g.contains_key("N")));
        assert!(models(&m2, &nf).unwrap());
    }

    #[test]
    fn model_mapping_follows_the_whole_pipeline() {
        use crate::parse::parse_structure;
        use crate::semantics::models;

        let f = parsed("(dia s (P #a))");
        let m = parse_structure(
            "(structure (domain e0) (worlds w0 w1) (sigma (s w1)) (const (#a e0)) \
             (world w1 (P e0)))",
        )
        .unwrap();
        assert!(models(&m, &f).unwrap());

        let (g, ledger) = frugalize(&f).unwrap();
        let mm = map_model_frugalize(&m, &ledger).unwrap();
        assert!(mm.consts.is_empty() && mm.sigma.is_empty());
        assert!(models(&mm, &g).unwrap());
    }

    #[test]
    fn constant_mapping_requires_the_constant() {
        let m = crate::parse::parse_structure(
            "(structure (domain e0) (worlds w0) (world w0 (P e0)))",
        )
        .unwrap();
        let ledger = RenameLedger {
            constant_unary: [("a".to_string(), "_A_a".to_string())].into(),
            ..Default::default()
        };
        assert!(matches!(
            map_model_remove_constants(&m, &ledger),
            Err(Error::UnknownConstant(_))
        ));
    }

    #[test]
    fn frugalize_rejects_non_monodic_input() {
        let f = parsed("(forall x (exists>=1 y (dia * (R x y))))");
        assert!(frugalize(&f).is_err());
    }

    #[test]
    fn size_bound_on_tight_cases() {
        for src in ["(P #a)", "(= #a #b)", "(dia s (P #a))"] {
            let f = parsed(src);
            let (out, _) = frugalize(&f).unwrap();
            let sig = Signature::infer(&f).unwrap();
            let named = sig.standpoints().iter().filter(|s| *s != "*").count();
            let bound = 6 * subformulas(&f).len() + 6 * (sig.consts().len() + named);
            assert!(
                subformulas(&out).len() <= bound,
                "{src}: {} > {bound}",
                subformulas(&out).len()
            );
        }
        // the unary-constant case is tight up to one node
        let f = parsed("(P #a)");
        let (out, _) = frugalize(&f).unwrap();
        assert_eq!(subformulas(&out).len(), 11);
        let g = parsed("(= #a #b)");
        let (out, _) = frugalize(&g).unwrap();
        assert_eq!(subformulas(&out).len(), 18);
    }
}
