//! Curated tiling systems packaged as runnable cases with expected-outcome
//! annotations.
//!
//! Each case names a tiling system, compiles it to the bounded-grid TBox
//! gadget, translates that to the two-variable standpoint fragment, and asks
//! the bounded model search for a witness at the case's stated bounds.
//! Bounded search cannot decide these instances in general, so outcomes are
//! recorded as evidence at the stated bounds and never as a verdict on the
//! unbounded problem: a witness is sat evidence at its size, exhaustion is
//! unsat evidence within the bounds, and a case tagged `unknown` reports "no
//! witness within bounds" with no judgement either way.
//!
//! Case files are plain s-expressions (see `cases/*.spc`):
//!
//! ```text
//! (case lonely-tile
//!   (tiles 1)
//!   (horizontal (1 1))
//!   (vertical (1 1))
//!   (init 1)
//!   (expected unknown)
//!   (bounds 2 1))
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::dl::{
    dl_to_fosl, gen_exp_tiling_tbox, ConceptExpr, DlSentence, RoleExpr, TilingSystem,
};
use crate::error::{Error, Result};
use crate::parse::{read_sexps, ParseError, Sexp, Span};
use crate::semantics::{bounded_sat, SatOptions, StandpointStructure};

/// What the curator expects the bounded search to produce at the case's
/// bounds. `Unknown` makes no claim, so such cases carry no pass or fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    SatEvidence,
    UnsatEvidence,
    Unknown,
}

impl Expectation {
    pub fn token(self) -> &'static str {
        match self {
            Expectation::SatEvidence => "sat-evidence",
            Expectation::UnsatEvidence => "unsat-evidence",
            Expectation::Unknown => "unknown",
        }
    }

    fn from_token(tok: &str, sp: Span) -> std::result::Result<Self, ParseError> {
        match tok {
            "sat-evidence" => Ok(Expectation::SatEvidence),
            "unsat-evidence" => Ok(Expectation::UnsatEvidence),
            "unknown" => Ok(Expectation::Unknown),
            other => Err(ParseError::at(
                sp,
                format!("expected one of sat-evidence, unsat-evidence, unknown; found {other}"),
            )),
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionCase {
    pub name: String,
    pub tiling: TilingSystem,
    pub expected: Expectation,
    /// (max_domain, max_worlds) handed to the bounded search
    pub bounds: (usize, usize),
}

/// Outcome of running one case. `confirmed` is `None` exactly for cases
/// tagged `unknown`: their annotation makes no claim to check.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: String,
    pub expected: Expectation,
    pub witness: Option<StandpointStructure>,
    pub confirmed: Option<bool>,
    /// one-line summary in bounded-evidence language
    pub note: String,
}

/// Runs one case end to end: generate the TBox, check its shape, translate,
/// search. A blown search budget becomes the `budget exceeded` error so
/// callers can tell "closed the bounds without a witness" apart from "gave
/// up part way".
pub fn run_case(c: &ReductionCase) -> Result<CaseReport> {
    run_case_with_budget(c, SatOptions::default().budget)
}

pub fn run_case_with_budget(c: &ReductionCase, budget: u64) -> Result<CaseReport> {
    c.tiling.validate()?;
    let (tbox, _sig) = gen_exp_tiling_tbox(&c.tiling)?;
    check_alco_shape(&tbox)?;
    let f = dl_to_fosl(&tbox)?;
    let opts = SatOptions {
        max_domain: c.bounds.0,
        max_worlds: c.bounds.1,
        budget,
        rigid_preds: BTreeSet::new(),
    };
    let witness = match bounded_sat(&f, &opts) {
        Ok(w) => w,
        Err(Error::SearchSpaceTooLarge(b)) => {
            return Err(Error::BudgetExceeded(format!(
                "case {}: search budget of {b} spent before the bounds were closed",
                c.name
            )))
        }
        Err(e) => return Err(e),
    };
    let (confirmed, note) = judge(c, &witness);
    Ok(CaseReport {
        name: c.name.clone(),
        expected: c.expected,
        witness,
        confirmed,
        note,
    })
}

fn judge(c: &ReductionCase, witness: &Option<StandpointStructure>) -> (Option<bool>, String) {
    let (d, w) = c.bounds;
    let dims = |m: &StandpointStructure| (m.domain.len(), m.worlds.len());
    match (witness, c.expected) {
        (Some(m), Expectation::SatEvidence) => {
            let (md, mw) = dims(m);
            (
                Some(true),
                format!(
                    "sat evidence confirmed: witness with {md} elements and {mw} worlds \
                     within bounds ({d}, {w})"
                ),
            )
        }
        (None, Expectation::SatEvidence) => (
            Some(false),
            format!("expected sat evidence, but no witness within bounds ({d}, {w})"),
        ),
        (Some(m), Expectation::UnsatEvidence) => {
            let (md, mw) = dims(m);
            (
                Some(false),
                format!("expected unsat evidence, but found a witness with {md} elements and {mw} worlds"),
            )
        }
        (None, Expectation::UnsatEvidence) => (
            Some(true),
            format!("unsat evidence confirmed: search closed bounds ({d}, {w}) without a witness"),
        ),
        (Some(m), Expectation::Unknown) => {
            let (md, mw) = dims(m);
            (
                None,
                format!("witness with {md} elements and {mw} worlds within bounds ({d}, {w})"),
            )
        }
        (None, Expectation::Unknown) => (None, format!("no witness within bounds ({d}, {w})")),
    }
}

/// Enforces the restricted shape the tiling gadget promises: every role a
/// bare name (no inverses, no boolean role operators), `o` as the only
/// nominal, no Self, no chain axioms, and counting at most in the
/// functionality pattern over a role name and Top.
pub fn check_alco_shape(s: &DlSentence) -> Result<()> {
    match s {
        DlSentence::Gci(c, d) => {
            alco_concept(c)?;
            alco_concept(d)
        }
        DlSentence::Ria(..) => Err(Error::Invalid(
            "chain axiom outside the restricted tiling fragment".into(),
        )),
        DlSentence::Not(a) => check_alco_shape(a),
        DlSentence::And(a, b) | DlSentence::Or(a, b) => {
            check_alco_shape(a)?;
            check_alco_shape(b)
        }
        DlSentence::Dia(_, a) | DlSentence::Box(_, a) => check_alco_shape(a),
    }
}

fn alco_role(r: &RoleExpr) -> Result<()> {
    match r {
        RoleExpr::Name(_) => Ok(()),
        other => Err(Error::Invalid(format!(
            "role {} is not a plain name",
            crate::dl::print_role(other)
        ))),
    }
}

fn alco_concept(c: &ConceptExpr) -> Result<()> {
    match c {
        ConceptExpr::Atomic(_) | ConceptExpr::Top | ConceptExpr::Bot => Ok(()),
        ConceptExpr::Nominal(o) if o == "o" => Ok(()),
        ConceptExpr::Nominal(o) => Err(Error::Invalid(format!("nominal {o} is not the origin"))),
        ConceptExpr::Not(a) => alco_concept(a),
        ConceptExpr::And(a, b) | ConceptExpr::Or(a, b) => {
            alco_concept(a)?;
            alco_concept(b)
        }
        ConceptExpr::Exists(r, a) | ConceptExpr::Forall(r, a) => {
            alco_role(r)?;
            alco_concept(a)
        }
        ConceptExpr::AtLeast(2, r, a) if **a == ConceptExpr::Top => alco_role(r),
        ConceptExpr::AtMost(1, r, a) if **a == ConceptExpr::Top => alco_role(r),
        ConceptExpr::AtLeast(..) | ConceptExpr::AtMost(..) => Err(Error::Invalid(
            "counting beyond the functionality pattern".into(),
        )),
        ConceptExpr::HasSelf(_) => Err(Error::Invalid(
            "Self outside the restricted tiling fragment".into(),
        )),
        ConceptExpr::Dia(_, a) | ConceptExpr::Box(_, a) => alco_concept(a),
    }
}

// ---------------------------------------------------------------------
// case files

fn is_case_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase())
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
}

/// Parses every `(case ...)` form in `src`.
pub fn parse_cases(src: &str) -> std::result::Result<Vec<ReductionCase>, ParseError> {
    let tops = read_sexps(src)?;
    if tops.is_empty() {
        return Err(ParseError::nowhere("no case forms"));
    }
    tops.iter().map(parse_case_form).collect()
}

fn parse_tile(e: &Sexp) -> std::result::Result<usize, ParseError> {
    let (a, sp) = e.expect_atom("a tile index")?;
    a.parse()
        .map_err(|_| ParseError::at(sp, format!("expected a tile index, found {a}")))
}

fn parse_pairs(items: &[Sexp]) -> std::result::Result<BTreeSet<(usize, usize)>, ParseError> {
    items
        .iter()
        .map(|it| {
            let (xs, sp) = it.expect_list("a tile pair")?;
            if xs.len() != 2 {
                return Err(ParseError::at(sp, "a tile pair needs exactly two entries"));
            }
            Ok((parse_tile(&xs[0])?, parse_tile(&xs[1])?))
        })
        .collect()
}

fn set_once<T>(
    slot: &mut Option<T>,
    v: T,
    what: &str,
    sp: Span,
) -> std::result::Result<(), ParseError> {
    if slot.is_some() {
        return Err(ParseError::at(sp, format!("duplicate {what} section")));
    }
    *slot = Some(v);
    Ok(())
}

fn parse_case_form(e: &Sexp) -> std::result::Result<ReductionCase, ParseError> {
    let (items, span) = e.expect_list("a (case ...) form")?;
    if items.first().and_then(|h| h.as_atom()).map(|(a, _)| a) != Some("case") {
        return Err(ParseError::at(span, "expected (case name ...)"));
    }
    let name_item = items
        .get(1)
        .ok_or_else(|| ParseError::at(span, "case needs a name"))?;
    let (name, nsp) = name_item.expect_atom("a case name")?;
    if !is_case_name(name) {
        return Err(ParseError::at(
            nsp,
            format!("bad case name {name}: want lowercase letters, digits, - or _"),
        ));
    }
    let mut tiles = None;
    let mut h = None;
    let mut v = None;
    let mut init: Option<Vec<usize>> = None;
    let mut expected = None;
    let mut bounds = None;
    for sec in &items[2..] {
        let (xs, ssp) = sec.expect_list("a case section")?;
        let head = xs
            .first()
            .ok_or_else(|| ParseError::at(ssp, "empty case section"))?;
        let (key, ksp) = head.expect_atom("a section keyword")?;
        let arity = |n: usize| -> std::result::Result<(), ParseError> {
            if xs.len() != n + 1 {
                return Err(ParseError::at(ssp, format!("{key} takes {n} entries")));
            }
            Ok(())
        };
        match key {
            "tiles" => {
                arity(1)?;
                set_once(&mut tiles, parse_tile(&xs[1])?, key, ssp)?;
            }
            "horizontal" => set_once(&mut h, parse_pairs(&xs[1..])?, key, ssp)?,
            "vertical" => set_once(&mut v, parse_pairs(&xs[1..])?, key, ssp)?,
            "init" => {
                if xs.len() < 2 {
                    return Err(ParseError::at(ssp, "init needs at least one tile"));
                }
                let row = xs[1..]
                    .iter()
                    .map(parse_tile)
                    .collect::<std::result::Result<Vec<usize>, ParseError>>()?;
                set_once(&mut init, row, key, ssp)?;
            }
            "expected" => {
                arity(1)?;
                let (tok, tsp) = xs[1].expect_atom("an expectation")?;
                set_once(&mut expected, Expectation::from_token(tok, tsp)?, key, ssp)?;
            }
            "bounds" => {
                arity(2)?;
                let b = (parse_tile(&xs[1])?, parse_tile(&xs[2])?);
                if !(1..=8).contains(&b.0) || !(1..=8).contains(&b.1) {
                    return Err(ParseError::at(
                        ssp,
                        "bounds must be between 1 and 8 for the packed search",
                    ));
                }
                set_once(&mut bounds, b, key, ssp)?;
            }
            other => {
                return Err(ParseError::at(ksp, format!("unknown case section {other}")))
            }
        }
    }
    let missing = |what: &str| ParseError::at(span, format!("case {name} is missing {what}"));
    let tiling = TilingSystem {
        k: tiles.ok_or_else(|| missing("(tiles k)"))?,
        h: h.ok_or_else(|| missing("(horizontal ...)"))?,
        v: v.ok_or_else(|| missing("(vertical ...)"))?,
        init: init.ok_or_else(|| missing("(init ...)"))?,
    };
    tiling
        .validate()
        .map_err(|e| ParseError::at(span, e.to_string()))?;
    Ok(ReductionCase {
        name: name.to_string(),
        tiling,
        expected: expected.ok_or_else(|| missing("(expected ...)"))?,
        bounds: bounds.ok_or_else(|| missing("(bounds d w)"))?,
    })
}

pub fn print_case(c: &ReductionCase) -> String {
    let pairs = |set: &BTreeSet<(usize, usize)>| {
        set.iter()
            .map(|(a, b)| format!(" ({a} {b})"))
            .collect::<String>()
    };
    let init = c
        .tiling
        .init
        .iter()
        .map(|t| format!(" {t}"))
        .collect::<String>();
    format!(
        "(case {}\n  (tiles {})\n  (horizontal{})\n  (vertical{})\n  (init{})\n  \
         (expected {})\n  (bounds {} {}))\n",
        c.name,
        c.tiling.k,
        pairs(&c.tiling.h),
        pairs(&c.tiling.v),
        init,
        c.expected.token(),
        c.bounds.0,
        c.bounds.1,
    )
}

/// The curated systems shipped with the crate, sorted by name.
pub fn builtin_cases() -> Vec<ReductionCase> {
    let mut out = Vec::new();
    for src in [
        include_str!("../cases/incompatible-pair.spc"),
        include_str!("../cases/lonely-tile.spc"),
        include_str!("../cases/missing-horizontal.spc"),
    ] {
        out.extend(parse_cases(src).expect("builtin case files parse"));
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::{parse_dl, print_dl};
    use crate::parse::parse_structure;
    use rand::Rng;

    #[test]
    fn builtin_cases_parse_and_round_trip() {
        let cases = builtin_cases();
        let names: Vec<&str> = cases.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["incompatible-pair", "lonely-tile", "missing-horizontal"]);
        for c in &cases {
            c.tiling.validate().unwrap();
            let reparsed = parse_cases(&print_case(c)).unwrap();
            assert_eq!(reparsed, vec![c.clone()]);
        }
    }

    fn parse_err(src: &str) -> String {
        parse_cases(src).unwrap_err().to_string()
    }

    #[test]
    fn malformed_cases_are_rejected() {
        let ok = "(case ok (tiles 1) (horizontal (1 1)) (vertical (1 1)) (init 1) \
                  (expected unknown) (bounds 2 1))";
        assert_eq!(parse_cases(ok).unwrap().len(), 1);
        assert!(parse_err("").contains("no case forms"));
        assert!(parse_err("(kase x)").contains("expected (case"));
        assert!(parse_err(&ok.replace("case ok", "case Bad")).contains("bad case name"));
        assert!(parse_err(&ok.replace("(tiles 1)", "(tiles 0)")).contains("tile count"));
        assert!(parse_err(&ok.replace("(init 1)", "(init 2)")).contains("out of range"));
        assert!(parse_err(&ok.replace("(bounds 2 1)", "(bounds 0 1)")).contains("bounds"));
        assert!(parse_err(&ok.replace("(bounds 2 1)", "(bounds 9 1)")).contains("bounds"));
        assert!(parse_err(&ok.replace("unknown", "maybe")).contains("expected one of"));
        assert!(parse_err(&ok.replace("(tiles 1)", "(tiles 1) (tiles 1)")).contains("duplicate"));
        assert!(parse_err(&ok.replace(" (init 1)", "")).contains("missing (init"));
        assert!(parse_err(&ok.replace("(tiles 1)", "(frobnicate 3) (tiles 1)"))
            .contains("unknown case section"));
    }

    #[test]
    fn generated_tboxes_stay_in_the_restricted_fragment() {
        let mut systems: Vec<TilingSystem> = builtin_cases().into_iter().map(|c| c.tiling).collect();
        let mut rng = crate::corpus::corpus_rng(0x7111);
        for _ in 0..4 {
            let k = rng.gen_range(1..=3);
            let mut pairs = |density: f64| {
                let mut out = BTreeSet::new();
                for a in 1..=k {
                    for b in 1..=k {
                        if rng.gen_bool(density) {
                            out.insert((a, b));
                        }
                    }
                }
                out
            };
            let h = pairs(0.6);
            let v = pairs(0.6);
            let init = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=k)).collect();
            systems.push(TilingSystem { k, h, v, init });
        }
        for sys in &systems {
            let (tbox, sig) = gen_exp_tiling_tbox(sys).unwrap();
            check_alco_shape(&tbox).unwrap();
            let printed = print_dl(&tbox, &sig);
            let (s2, sig2) = parse_dl(&printed).unwrap();
            assert_eq!(s2, tbox);
            assert_eq!(sig2, sig);
        }
        // the checker is not vacuous
        let bad = DlSentence::gci(
            ConceptExpr::exists(RoleExpr::inverse("R"), ConceptExpr::Top),
            ConceptExpr::Top,
        );
        assert!(check_alco_shape(&bad).is_err());
        let bad_nominal = DlSentence::gci(ConceptExpr::nominal("p"), ConceptExpr::Top);
        assert!(check_alco_shape(&bad_nominal).is_err());
        let bad_count = DlSentence::gci(
            ConceptExpr::at_least(3, RoleExpr::name("R"), ConceptExpr::Top),
            ConceptExpr::Top,
        );
        assert!(check_alco_shape(&bad_count).is_err());
    }

    fn tiny(
        name: &str,
        k: usize,
        h: &[(usize, usize)],
        v: &[(usize, usize)],
        init: &[usize],
        expected: Expectation,
        bounds: (usize, usize),
    ) -> ReductionCase {
        ReductionCase {
            name: name.to_string(),
            tiling: TilingSystem {
                k,
                h: h.iter().copied().collect(),
                v: v.iter().copied().collect(),
                init: init.to_vec(),
            },
            expected,
            bounds,
        }
    }

    #[test]
    fn unsat_evidence_is_confirmed_by_exhaustion() {
        let c = tiny(
            "pair",
            2,
            &[(1, 1), (2, 2)],
            &[(1, 1), (1, 2), (2, 1), (2, 2)],
            &[1, 2],
            Expectation::UnsatEvidence,
            (1, 1),
        );
        let r = run_case(&c).unwrap();
        assert_eq!(r.confirmed, Some(true));
        assert!(r.witness.is_none());
        assert!(r.note.contains("unsat evidence confirmed"));
        let again = run_case(&c).unwrap();
        assert_eq!(r.note, again.note);
    }

    #[test]
    fn unknown_cases_report_without_verdict() {
        let c = tiny(
            "solo",
            1,
            &[(1, 1)],
            &[(1, 1)],
            &[1],
            Expectation::Unknown,
            (1, 1),
        );
        let r = run_case(&c).unwrap();
        assert_eq!(r.confirmed, None);
        assert_eq!(r.note, "no witness within bounds (1, 1)");
    }

    #[test]
    fn blown_budget_is_an_error() {
        let c = tiny(
            "pair",
            2,
            &[(1, 1), (2, 2)],
            &[(1, 1), (1, 2), (2, 1), (2, 2)],
            &[1, 2],
            Expectation::UnsatEvidence,
            (2, 2),
        );
        match run_case_with_budget(&c, 50) {
            Err(Error::BudgetExceeded(msg)) => assert!(msg.contains("case pair")),
            other => panic!("wanted a blown budget, got {other:?}"),
        }
    }

    #[test]
    fn judging_covers_every_row() {
        let m = parse_structure("(structure (domain e0) (worlds p0))").unwrap();
        let case_with = |e| tiny("t", 1, &[(1, 1)], &[(1, 1)], &[1], e, (2, 1));
        let rows: [(Expectation, bool, Option<bool>, &str); 6] = [
            (Expectation::SatEvidence, true, Some(true), "sat evidence confirmed"),
            (Expectation::SatEvidence, false, Some(false), "expected sat evidence"),
            (Expectation::UnsatEvidence, true, Some(false), "expected unsat evidence"),
            (Expectation::UnsatEvidence, false, Some(true), "unsat evidence confirmed"),
            (Expectation::Unknown, true, None, "witness with 1 elements"),
            (Expectation::Unknown, false, None, "no witness within bounds"),
        ];
        for (expected, with_witness, confirmed, needle) in rows {
            let w = with_witness.then(|| m.clone());
            let (got, note) = judge(&case_with(expected), &w);
            assert_eq!(got, confirmed, "{expected} with witness={with_witness}");
            assert!(note.contains(needle), "{note}");
        }
    }
}
