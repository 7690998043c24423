//! Fixed sentence corpora, exhaustive structure enumeration, and seeded
//! random generators shared by the verification suites and benches.
//!
//! Everything here is deterministic: hand-written entries are literal
//! source strings, random entries come from a ChaCha stream with a fixed
//! seed, and enumeration walks structures in odometer order.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dl::{parse_dl, ConceptExpr, DlSentence, DlSignature, RoleExpr};
use crate::parse::parse_formula;
use crate::semantics::{Extension, StandpointStructure};
use crate::syntax::{
    fragment_report, free_vars, subformulas, Comparator, Formula, StandpointExpr, Term,
};

/// All suite randomness flows through one stream type so seeds reproduce.
pub fn corpus_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------
// formula corpus

/// Hand-written sentences; names are stable suite-case identifiers.
const HAND_SENTENCES: &[(&str, &str)] = &[
    ("every-p-is-q", "(forall x (implies (P x) (Q x)))"),
    ("some-p", "(exists>=1 x (P x))"),
    ("possibly-some-p", "(dia s1 (exists>=1 x (P x)))"),
    ("sometime-no-p", "(dia * (exists=0 x (P x)))"),
    (
        "standpoint-chain",
        "(box s1 (forall x (implies (P x) (dia (union s1 s2) (Q x)))))",
    ),
    ("exactly-two-successors", "(forall x (exists=2 y (R x y)))"),
    (
        "counting-clash",
        "(and (exists>=2 x (P x)) (exists<=1 x (P x)))",
    ),
    ("constant-is-p", "(P #a)"),
    ("constant-equality", "(= #a #b)"),
    ("two-constants-differ", "(not (= #a #b))"),
    ("rainy-dispute", "(and (dia s1 (N)) (dia s2 (not (N))))"),
    ("singleton-domain", "(forall x (forall y (= x y)))"),
    ("modal-clash", "(and (box * (P #a)) (dia s1 (not (P #a))))"),
    (
        "union-witness",
        "(dia (union s1 s2) (exists>=1 x (and (P x) (Q x))))",
    ),
    (
        "inter-empty",
        "(and (box (inter s1 s2) (exists=0 x (P x))) (dia s1 (exists>=1 x (P x))))",
    ),
    (
        "diff-witness",
        "(and (dia (diff s1 s2) (exists>=1 x (P x))) (box s2 (exists=0 x (P x))))",
    ),
    (
        "iff-unique-successor",
        "(forall x (iff (P x) (exists=1 y (R x y))))",
    ),
    (
        "variable-reuse",
        "(forall x (exists>=1 y (and (R x y) (exists>=1 x (and (R y x) (P x))))))",
    ),
    (
        "triggered-by",
        "(forall x (implies (exists>=1 y (R y x)) (dia s1 (Q x))))",
    ),
    (
        "nested-dia",
        "(dia s1 (and (exists>=1 x (P x)) (dia s2 (exists=0 x (P x)))))",
    ),
    ("box-in-box", "(box s1 (box s2 (forall x (P x))))"),
];

/// Number of seeded random sentences appended to the hand-written ones.
const RANDOM_SENTENCES: usize = 32;
const SENTENCE_SEED: u64 = 0x5eed_f05e;

/// The shared closed-sentence corpus: hand-written entries followed by
/// seeded random ones (`rand-00` ...). Every entry is a closed monodic
/// two-variable counting sentence with at most 12 distinct subformulas.
pub fn fosl_corpus() -> Vec<(String, Formula)> {
    let mut out = Vec::new();
    for (name, src) in HAND_SENTENCES {
        let (f, _) = parse_formula(src)
            .unwrap_or_else(|e| panic!("corpus entry {name}: {}", e.render(src)));
        out.push((name.to_string(), f));
    }
    let mut rng = corpus_rng(SENTENCE_SEED);
    for i in 0..RANDOM_SENTENCES {
        out.push((format!("rand-{i:02}"), random_sentence(&mut rng)));
    }
    for (name, f) in &out {
        let r = fragment_report(f);
        assert!(
            r.is_c2 && r.is_monodic && free_vars(f).is_empty() && subformulas(f).len() <= 12,
            "corpus entry {name} breaks the corpus contract"
        );
    }
    out
}

/// One closed monodic C2 sentence with at most 12 distinct subformulas.
/// Construction keeps the fragment constraints by tracking the bound
/// variables in scope; the size bound is enforced by regeneration.
pub fn random_sentence(rng: &mut ChaCha8Rng) -> Formula {
    for _ in 0..200 {
        let f = gen_formula(rng, 3, &[]);
        if subformulas(&f).len() <= 12 {
            let r = fragment_report(&f);
            debug_assert!(r.is_c2 && r.is_monodic && free_vars(&f).is_empty());
            return f;
        }
    }
    // unreachable in practice: depth 3 rarely exceeds the bound
    Formula::exists("x", Formula::atom1("P", Term::var("x")))
}

fn gen_term(rng: &mut ChaCha8Rng, ctx: &[String]) -> Term {
    if !ctx.is_empty() && rng.gen_bool(0.8) {
        Term::var(ctx[rng.gen_range(0..ctx.len())].clone())
    } else {
        Term::cst("a")
    }
}

fn gen_leaf(rng: &mut ChaCha8Rng, ctx: &[String]) -> Formula {
    match rng.gen_range(0..5) {
        0 => Formula::atom1("P", gen_term(rng, ctx)),
        1 => Formula::atom1("Q", gen_term(rng, ctx)),
        2 => Formula::atom2("R", gen_term(rng, ctx), gen_term(rng, ctx)),
        3 => Formula::atom0("N"),
        _ => Formula::Eq(gen_term(rng, ctx), gen_term(rng, ctx)),
    }
}

fn gen_standpoint(rng: &mut ChaCha8Rng) -> StandpointExpr {
    let s1 = StandpointExpr::sym("s1");
    let s2 = StandpointExpr::sym("s2");
    match rng.gen_range(0..6) {
        0 => StandpointExpr::star(),
        1 => s1,
        2 => s2,
        3 => StandpointExpr::Union(Box::new(s1), Box::new(s2)),
        4 => StandpointExpr::Inter(Box::new(s1), Box::new(s2)),
        _ => StandpointExpr::Diff(Box::new(s1), Box::new(s2)),
    }
}

fn gen_formula(rng: &mut ChaCha8Rng, depth: u32, ctx: &[String]) -> Formula {
    if depth == 0 {
        return gen_leaf(rng, ctx);
    }
    match rng.gen_range(0..10) {
        0 | 1 => gen_leaf(rng, ctx),
        2 | 3 | 4 => {
            // counting quantifier; the bound variable may shadow
            let v = match ctx {
                [] => "x".to_string(),
                [only] => {
                    if rng.gen_bool(0.8) {
                        if only == "x" { "y".to_string() } else { "x".to_string() }
                    } else {
                        only.clone()
                    }
                }
                _ => {
                    if rng.gen_bool(0.5) { "x".to_string() } else { "y".to_string() }
                }
            };
            let cmp = match rng.gen_range(0..3) {
                0 => Comparator::Leq,
                1 => Comparator::Eq,
                _ => Comparator::Geq,
            };
            let n = rng.gen_range(0..=2);
            let mut inner: Vec<String> = ctx.to_vec();
            if !inner.contains(&v) {
                inner.push(v.clone());
            }
            Formula::count(cmp, n, v, gen_formula(rng, depth - 1, &inner))
        }
        5 | 6 | 7 => {
            let a = gen_formula(rng, depth - 1, ctx);
            if rng.gen_bool(0.3) {
                return Formula::not(a);
            }
            let b = gen_formula(rng, depth - 1, ctx);
            match rng.gen_range(0..3) {
                0 => Formula::and(a, b),
                1 => Formula::or(a, b),
                _ => Formula::implies(a, b),
            }
        }
        _ => {
            // modal operator: keep at most one free variable underneath
            let keep: &[String] = if ctx.is_empty() || rng.gen_bool(0.3) {
                &[]
            } else {
                std::slice::from_ref(&ctx[rng.gen_range(0..ctx.len())])
            };
            let e = gen_standpoint(rng);
            let body = gen_formula(rng, depth - 1, keep);
            if rng.gen_bool(0.5) {
                Formula::dia(e, body)
            } else {
                Formula::box_(e, body)
            }
        }
    }
}

// ---------------------------------------------------------------------
// description-logic corpus

/// Plain-mode entries: GCIs, counting, nominals, inverse and boolean
/// roles, modal sentences and concepts, sentence-level negation.
const DL_PLAIN: &[(&str, &str)] = &[
    ("gci-simple", "(gci A B)"),
    ("gci-chain", "(and (gci A B) (gci B C))"),
    ("gci-unsat", "(and (gci top A) (gci top (not A)))"),
    ("exists-succ", "(gci A (exists R B))"),
    ("forall-protect", "(gci top (forall R A))"),
    ("atleast-two", "(gci A (atleast 2 R top))"),
    ("atmost-one", "(gci top (atmost 1 R top))"),
    (
        "counting-unsat",
        "(and (gci top (atleast 2 R top)) (gci top (atmost 1 R top)))",
    ),
    ("nominal-spy", "(gci top (exists R (nominal #o)))"),
    ("nominal-is-a", "(gci (nominal #o) A)"),
    ("inverse-link", "(gci A (forall (inv R) B))"),
    ("self-loop", "(gci A (self R))"),
    ("role-meet", "(gci A (exists (rand R (inv S)) B))"),
    ("role-complement", "(gci A (forall (rnot R) B))"),
    ("dia-gci", "(dia s1 (gci A B))"),
    ("box-gci", "(box s1 (gci A (exists R B)))"),
    (
        "mixed-modal",
        "(and (box * (gci A B)) (dia s2 (gci B bot)))",
    ),
    ("negated-gci", "(not (gci A B))"),
    ("or-gci", "(or (gci A B) (gci A C))"),
    ("concept-dia", "(gci A (dia s1 B))"),
    ("concept-box", "(gci A (box (union s1 s2) B))"),
    (
        "deep-nest",
        "(gci (and A (exists R (or B (not C)))) (atmost 2 (inv R) (and B C)))",
    ),
];

/// Chain-mode entries exercising role inclusion axioms.
const DL_CHAIN: &[(&str, &str)] = &[
    (
        "hierarchy",
        "(mode sroiqb-s)\n(declare (nonsimple-role T))\n\
         (and (ria (S) T) (gci A (forall T B)))",
    ),
    (
        "transitive",
        "(mode sroiqb-s)\n(declare (nonsimple-role T))\n\
         (and (ria (T T) T) (gci A (forall T B)))",
    ),
    (
        "negated-hierarchy",
        "(mode sroiqb-s)\n(declare (nonsimple-role T))\n(not (ria (S) T))",
    ),
    (
        "negated-transitive",
        "(mode sroiqb-s)\n(declare (nonsimple-role T))\n(not (ria (T T) T))",
    ),
    (
        "dia-ria",
        "(mode sroiqb-s)\n(declare (nonsimple-role T))\n\
         (and (dia s1 (ria (T T) T)) (gci A (exists T B)))",
    ),
    (
        "role-union",
        "(mode sroiqb-s)\n(gci A (exists (ror S1 S2) B))",
    ),
    (
        "tail-chain",
        "(mode sroiqb-s)\n(declare (nonsimple-role S) (nonsimple-role T))\n\
         (prec S T)\n(and (ria (S T) T) (gci A (exists T B)))",
    ),
    (
        "head-chain",
        "(mode sroiqb-s)\n(declare (nonsimple-role S) (nonsimple-role T))\n\
         (prec S T)\n(and (ria (T S) T) (gci A (exists S B)))",
    ),
    (
        "layered-hierarchy",
        "(mode sroiqb-s)\n(declare (nonsimple-role T) (nonsimple-role U))\n\
         (and (and (ria (S) T) (ria (T) U)) (gci A (forall U B)))",
    ),
    (
        "box-ria-mix",
        "(mode sroiqb-s)\n(declare (nonsimple-role T))\n\
         (box * (and (ria (T T) T) (gci A (forall T A))))",
    ),
];

/// The description-logic corpus; names are stable suite-case identifiers.
pub fn dl_corpus() -> Vec<(String, DlSentence, DlSignature)> {
    let mut out = Vec::new();
    for (name, src) in DL_PLAIN.iter().chain(DL_CHAIN) {
        let (s, sig) = parse_dl(src)
            .unwrap_or_else(|e| panic!("dl corpus entry {name}: {}", e.render(src)));
        out.push((name.to_string(), s, sig));
    }
    out
}

// ---------------------------------------------------------------------
// structure enumeration

/// Vocabulary for structure enumeration and sampling. Predicates named in
/// `rigid` (which must appear in an arity list) get one extension shared
/// by every world; the rest vary per world.
#[derive(Debug, Clone, Default)]
pub struct EnumSpec {
    pub nullary: Vec<String>,
    pub unary: Vec<String>,
    pub binary: Vec<String>,
    pub consts: Vec<String>,
    pub standpoints: Vec<String>,
    pub rigid: Vec<String>,
}

impl EnumSpec {
    fn preds(&self) -> impl Iterator<Item = (&str, u8)> {
        let n = self.nullary.iter().map(|p| (p.as_str(), 0u8));
        let u = self.unary.iter().map(|p| (p.as_str(), 1u8));
        let b = self.binary.iter().map(|p| (p.as_str(), 2u8));
        n.chain(u).chain(b)
    }

    fn is_rigid(&self, pred: &str) -> bool {
        self.rigid.iter().any(|r| r == pred)
    }
}

enum Slot {
    Rigid(String, u8),
    World(String, u8, usize),
    Const(String),
    Standpoint(String),
}

impl Slot {
    fn radix(&self, d: usize, w: usize) -> u64 {
        match self {
            Slot::Rigid(_, ar) | Slot::World(_, ar, _) => ext_radix(*ar, d),
            Slot::Const(_) => d as u64,
            Slot::Standpoint(_) => 1u64 << w,
        }
    }
}

fn ext_radix(arity: u8, d: usize) -> u64 {
    let bits = match arity {
        0 => 1,
        1 => d,
        _ => d * d,
    };
    assert!(bits < 63, "extension space too large to index");
    1u64 << bits
}

fn decode_ext(arity: u8, d: usize, code: u64) -> Extension {
    match arity {
        0 => Extension::Nullary(code != 0),
        1 => Extension::Unary((0..d).filter(|i| code >> i & 1 == 1).collect()),
        _ => Extension::Binary(
            (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .filter(|(i, j)| code >> (i * d + j) & 1 == 1)
                .collect(),
        ),
    }
}

fn slots(spec: &EnumSpec, w: usize) -> Vec<Slot> {
    let mut out = Vec::new();
    for (p, ar) in spec.preds() {
        if spec.is_rigid(p) {
            out.push(Slot::Rigid(p.to_string(), ar));
        } else {
            for wi in 0..w {
                out.push(Slot::World(p.to_string(), ar, wi));
            }
        }
    }
    for c in &spec.consts {
        out.push(Slot::Const(c.clone()));
    }
    for s in &spec.standpoints {
        out.push(Slot::Standpoint(s.clone()));
    }
    for r in &spec.rigid {
        assert!(
            spec.preds().any(|(p, _)| p == r),
            "rigid predicate {r} missing from the arity lists"
        );
    }
    out
}

fn blank_structure(spec: &EnumSpec, d: usize, w: usize) -> StandpointStructure {
    let mut m = StandpointStructure {
        domain: (0..d).map(|i| format!("e{i}")).collect(),
        worlds: (0..w).map(|i| format!("p{i}")).collect(),
        sigma: spec
            .standpoints
            .iter()
            .map(|s| (s.clone(), BTreeSet::new()))
            .collect(),
        consts: spec.consts.iter().map(|c| (c.clone(), 0)).collect(),
        gamma: vec![Default::default(); w],
    };
    for (p, ar) in spec.preds() {
        for g in &mut m.gamma {
            g.insert(p.to_string(), decode_ext(ar, d, 0));
        }
    }
    m
}

fn apply_slot(m: &mut StandpointStructure, slot: &Slot, d: usize, value: u64) {
    match slot {
        Slot::Rigid(p, ar) => {
            let e = decode_ext(*ar, d, value);
            for g in &mut m.gamma {
                g.insert(p.clone(), e.clone());
            }
        }
        Slot::World(p, ar, wi) => {
            m.gamma[*wi].insert(p.clone(), decode_ext(*ar, d, value));
        }
        Slot::Const(c) => {
            m.consts.insert(c.clone(), value as usize);
        }
        Slot::Standpoint(s) => {
            m.sigma.insert(
                s.clone(),
                (0..m.worlds.len()).filter(|i| value >> i & 1 == 1).collect(),
            );
        }
    }
}

/// Number of structures [`for_each_structure`] visits.
pub fn structure_count(spec: &EnumSpec, d: usize, w: usize) -> u128 {
    slots(spec, w)
        .iter()
        .map(|s| s.radix(d, w) as u128)
        .try_fold(1u128, u128::checked_mul)
        .expect("structure space exceeds u128")
}

/// Visits every structure over the vocabulary with domain `e0..` (size
/// `d`) and worlds `p0..` (count `w`), in odometer order. The visitor
/// returns `false` to stop early; the return value is `false` iff it did.
pub fn for_each_structure(
    spec: &EnumSpec,
    d: usize,
    w: usize,
    visit: &mut dyn FnMut(&StandpointStructure) -> bool,
) -> bool {
    let slots = slots(spec, w);
    let radices: Vec<u64> = slots.iter().map(|s| s.radix(d, w)).collect();
    let mut counters = vec![0u64; slots.len()];
    let mut m = blank_structure(spec, d, w);
    loop {
        if !visit(&m) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == counters.len() {
                return true;
            }
            counters[i] += 1;
            if counters[i] < radices[i] {
                apply_slot(&mut m, &slots[i], d, counters[i]);
                break;
            }
            counters[i] = 0;
            apply_slot(&mut m, &slots[i], d, 0);
            i += 1;
        }
    }
}

/// The `index`-th structure in [`for_each_structure`] order. Random access
/// lets callers split an enumeration into independent chunks.
pub fn structure_at(spec: &EnumSpec, d: usize, w: usize, index: u128) -> StandpointStructure {
    let slots = slots(spec, w);
    let mut m = blank_structure(spec, d, w);
    let mut rest = index;
    for slot in &slots {
        let r = slot.radix(d, w) as u128;
        apply_slot(&mut m, slot, d, (rest % r) as u64);
        rest /= r;
    }
    assert_eq!(rest, 0, "structure index out of range");
    m
}

/// One uniformly random structure over the vocabulary (each extension
/// bit, constant value, and standpoint membership drawn independently).
pub fn random_structure(
    rng: &mut ChaCha8Rng,
    spec: &EnumSpec,
    d: usize,
    w: usize,
) -> StandpointStructure {
    let mut m = blank_structure(spec, d, w);
    for (p, ar) in spec.preds() {
        if spec.is_rigid(p) {
            let e = random_ext(rng, ar, d);
            for g in &mut m.gamma {
                g.insert(p.to_string(), e.clone());
            }
        } else {
            for g in &mut m.gamma {
                g.insert(p.to_string(), random_ext(rng, ar, d));
            }
        }
    }
    for c in &spec.consts {
        m.consts.insert(c.clone(), rng.gen_range(0..d));
    }
    for s in &spec.standpoints {
        m.sigma
            .insert(s.clone(), (0..w).filter(|_| rng.gen_bool(0.5)).collect());
    }
    m
}

fn random_ext(rng: &mut ChaCha8Rng, arity: u8, d: usize) -> Extension {
    match arity {
        0 => Extension::Nullary(rng.gen_bool(0.5)),
        1 => Extension::Unary((0..d).filter(|_| rng.gen_bool(0.5)).collect()),
        _ => Extension::Binary(
            (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .filter(|_| rng.gen_bool(0.5))
                .collect(),
        ),
    }
}

// ---------------------------------------------------------------------
// probe formulas for the closure invariance suite

/// Formulas over exactly one unary predicate `P`, one binary `R`, and one
/// rigid unary `E`, with free variables among x,y and modalities on `*`
/// only. Used to probe world-compensated evaluation over permutational
/// closures, so every entry stays within that restricted shape.
pub fn closure_probe_formulas() -> Vec<Formula> {
    const SRC: &[&str] = &[
        "(P x)",
        "(E x)",
        "(R x y)",
        "(= x y)",
        "(dia * (P x))",
        "(box * (implies (E x) (P x)))",
        "(exists>=2 y (R x y))",
        "(dia * (exists>=1 y (and (R x y) (E y))))",
        "(exists=1 y (and (R x y) (dia * (P y))))",
        "(box * (exists>=1 y (R y x)))",
        "(and (P x) (dia * (not (P x))))",
        "(exists<=1 y (R y y))",
        "(forall y (implies (R x y) (dia * (E y))))",
        "(dia * (box * (P x)))",
        "(exists>=1 x (and (E x) (dia * (P x))))",
    ];
    SRC.iter()
        .map(|src| {
            parse_formula(src)
                .unwrap_or_else(|e| panic!("probe formula: {}", e.render(src)))
                .0
        })
        .collect()
}

// ---------------------------------------------------------------------
// random concepts for the translation-agreement suite

/// One random concept of the given depth over atomic concepts A, B, roles
/// R, S, constant o, and standpoint s1. Covers every concept constructor
/// and role shape.
pub fn random_concept(rng: &mut ChaCha8Rng, depth: u32) -> ConceptExpr {
    if depth == 0 {
        return match rng.gen_range(0..5) {
            0 => ConceptExpr::atom("A"),
            1 => ConceptExpr::atom("B"),
            2 => ConceptExpr::nominal("o"),
            3 => ConceptExpr::Top,
            _ => ConceptExpr::Bot,
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_concept(rng, depth - 1);
    match rng.gen_range(0..11) {
        0 => random_concept(rng, 0),
        1 => ConceptExpr::not(sub(rng)),
        2 => {
            let a = sub(rng);
            let b = sub(rng);
            ConceptExpr::and(a, b)
        }
        3 => {
            let a = sub(rng);
            let b = sub(rng);
            ConceptExpr::or(a, b)
        }
        4 => ConceptExpr::exists(random_role(rng), sub(rng)),
        5 => ConceptExpr::forall(random_role(rng), sub(rng)),
        6 => ConceptExpr::at_least(rng.gen_range(0..=2), random_role(rng), sub(rng)),
        7 => ConceptExpr::at_most(rng.gen_range(0..=2), random_role(rng), sub(rng)),
        8 => ConceptExpr::HasSelf(random_role(rng)),
        9 => ConceptExpr::dia(random_modality(rng), sub(rng)),
        _ => ConceptExpr::boxed(random_modality(rng), sub(rng)),
    }
}

fn random_modality(rng: &mut ChaCha8Rng) -> StandpointExpr {
    if rng.gen_bool(0.5) {
        StandpointExpr::star()
    } else {
        StandpointExpr::sym("s1")
    }
}

fn random_role(rng: &mut ChaCha8Rng) -> RoleExpr {
    match rng.gen_range(0..5) {
        0 => RoleExpr::name("R"),
        1 => RoleExpr::name("S"),
        2 => RoleExpr::inverse("R"),
        3 => RoleExpr::RNot(Box::new(RoleExpr::name("S"))),
        _ => {
            if rng.gen_bool(0.5) {
                RoleExpr::RAnd(
                    Box::new(RoleExpr::name("R")),
                    Box::new(RoleExpr::inverse("S")),
                )
            } else {
                RoleExpr::ROr(Box::new(RoleExpr::name("R")), Box::new(RoleExpr::name("S")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::models;
    use crate::syntax::Signature;

    #[test]
    fn corpus_meets_the_stated_contract() {
        let corpus = fosl_corpus();
        assert!(corpus.len() >= 50, "need at least 50 sentences");
        let names: BTreeSet<&str> = corpus.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names.len(), corpus.len(), "duplicate corpus names");
        let with_modality = corpus
            .iter()
            .filter(|(_, f)| subformulas(f).iter().any(|g| matches!(g, Formula::Dia(..))))
            .count();
        assert!(with_modality >= 15, "corpus too modal-poor: {with_modality}");
    }

    #[test]
    fn corpus_is_reproducible() {
        let a = fosl_corpus();
        let b = fosl_corpus();
        assert_eq!(a, b);
    }

    #[test]
    fn dl_corpus_parses_and_covers_both_modes() {
        let corpus = dl_corpus();
        assert!(corpus.len() >= 30);
        let chains = corpus
            .iter()
            .filter(|(_, _, sig)| !sig.nonsimple_roles.is_empty())
            .count();
        assert!(chains >= 8, "need chain-mode coverage, got {chains}");
    }

    #[test]
    fn enumeration_count_matches_visits() {
        let spec = EnumSpec {
            unary: vec!["P".to_string(), "E".to_string()],
            binary: vec!["R".to_string()],
            rigid: vec!["E".to_string()],
            ..Default::default()
        };
        // rigid E: 2^2; P per world: 2^2 each; R per world: 2^4 each
        assert_eq!(structure_count(&spec, 2, 2), 4 * 16 * 256);
        let mut seen = std::collections::HashSet::new();
        let done = for_each_structure(&spec, 2, 2, &mut |m| {
            assert!(crate::semantics::is_rigid(m, "E"));
            seen.insert(format!("{m:?}"));
            true
        });
        assert!(done);
        assert_eq!(seen.len() as u128, structure_count(&spec, 2, 2));
    }

    #[test]
    fn enumeration_covers_consts_and_standpoints() {
        let spec = EnumSpec {
            nullary: vec!["N".to_string()],
            consts: vec!["a".to_string()],
            standpoints: vec!["s1".to_string()],
            ..Default::default()
        };
        // N per world: 2 each; a: 3; s1: 2^2
        assert_eq!(structure_count(&spec, 3, 2), 2 * 2 * 3 * 4);
        let mut n = 0u32;
        for_each_structure(&spec, 3, 2, &mut |_| {
            n += 1;
            true
        });
        assert_eq!(n as u128, structure_count(&spec, 3, 2));
    }

    #[test]
    fn random_access_matches_enumeration_order() {
        let spec = EnumSpec {
            unary: vec!["P".to_string(), "E".to_string()],
            binary: vec!["R".to_string()],
            rigid: vec!["E".to_string()],
            consts: vec!["a".to_string()],
            standpoints: vec!["s1".to_string()],
            ..Default::default()
        };
        let mut index = 0u128;
        for_each_structure(&spec, 2, 2, &mut |m| {
            assert_eq!(*m, structure_at(&spec, 2, 2, index), "index {index}");
            index += 1;
            index < 600
        });
    }

    #[test]
    fn enumeration_stops_early_when_asked() {
        let spec = EnumSpec {
            unary: vec!["P".to_string()],
            ..Default::default()
        };
        let mut n = 0u32;
        let done = for_each_structure(&spec, 2, 1, &mut |_| {
            n += 1;
            n < 3
        });
        assert!(!done);
        assert_eq!(n, 3);
    }

    #[test]
    fn enumeration_finds_a_model_for_a_satisfiable_sentence() {
        // satisfiable but needs two worlds with different P-extensions
        let (f, _) =
            parse_formula("(and (dia s1 (exists>=1 x (P x))) (dia s2 (exists=0 x (P x))))")
                .unwrap();
        let spec = EnumSpec {
            unary: vec!["P".to_string()],
            standpoints: vec!["s1".to_string(), "s2".to_string()],
            ..Default::default()
        };
        let mut found = false;
        for_each_structure(&spec, 1, 2, &mut |m| {
            if models(m, &f).unwrap() {
                found = true;
            }
            !found
        });
        assert!(found);
    }

    #[test]
    fn probe_formulas_fit_the_probe_signature() {
        let probes = closure_probe_formulas();
        assert!(probes.len() >= 12);
        for f in &probes {
            let sig = Signature::infer(f).unwrap();
            for (p, ar) in sig.preds() {
                match p.as_str() {
                    "P" | "E" => assert_eq!(*ar, 1),
                    "R" => assert_eq!(*ar, 2),
                    other => panic!("unexpected predicate {other}"),
                }
            }
            assert!(sig.consts().is_empty());
            assert!(
                sig.standpoints().iter().all(|s| s == "*"),
                "probes use * only"
            );
            assert!(free_vars(f).iter().all(|v| v == "x" || v == "y"));
            let r = fragment_report(f);
            assert!(r.is_c2 && r.is_monodic);
        }
    }

    #[test]
    fn random_structures_and_concepts_are_reproducible() {
        let spec = EnumSpec {
            unary: vec!["A".to_string(), "B".to_string()],
            binary: vec!["R".to_string(), "S".to_string()],
            consts: vec!["o".to_string()],
            standpoints: vec!["s1".to_string()],
            ..Default::default()
        };
        let mut r1 = corpus_rng(7);
        let mut r2 = corpus_rng(7);
        for _ in 0..5 {
            assert_eq!(
                random_structure(&mut r1, &spec, 3, 2),
                random_structure(&mut r2, &spec, 3, 2)
            );
            assert_eq!(random_concept(&mut r1, 3), random_concept(&mut r2, 3));
        }
    }
}
