//! Standpoint removal: translates a frugal sentence into an equisatisfiable
//! plain two-variable sentence. Three conjuncts: the stack axioms force
//! models to be layer-chains, the rigidity axiom pins the E-predicates
//! across layers, and the structural translation relativizes quantifiers to
//! the current layer and diamonds to the current E-type.

use std::collections::BTreeSet;

use crate::syntax::{
    dia_sets, fragment_report, free_vars, Comparator, Formula, Signature, Term,
};
use crate::{Error, Result};

/// Sizing and naming decisions shared by the three translation parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalParams {
    /// Number of free-variable diamonds, and of E-predicates.
    pub ell: usize,
    /// Layer-index bit count; the translated structure has 2^m layers.
    pub m: u32,
    /// Each free-variable diamond paired with its E-predicate, in
    /// leftmost-innermost order.
    pub free_dia_index: Vec<(Formula, String)>,
    pub level_preds: Vec<String>,
    pub chain_pred: String,
}

impl RemovalParams {
    /// Params with the conventional names and no diamonds; used when reading
    /// layer structure off an interpretation rather than off a sentence.
    pub fn conventional(m: u32) -> Self {
        RemovalParams {
            ell: 0,
            m,
            free_dia_index: Vec::new(),
            level_preds: (0..m).map(|j| format!("L_{j}")).collect(),
            chain_pred: "F".to_string(),
        }
    }
}

/// ℓ = number of free-variable diamonds, m = ⌈|Dia| + log₂|Dia|⌉ (0 when
/// there are no diamonds), plus fresh predicate names.
pub fn compute_params(f: &Formula) -> Result<RemovalParams> {
    let report = fragment_report(f);
    if !report.is_frugal {
        return Err(Error::NotFrugal(
            "input must be an S5, nullary-free, constant-free monodic C2 sentence".into(),
        ));
    }
    let fv = free_vars(f);
    if !fv.is_empty() {
        return Err(Error::NotFrugal(format!(
            "input has free variables: {}",
            fv.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let ds = dia_sets(f)?;
    let d = ds.dia.len();
    let m = if d == 0 {
        0
    } else {
        (d + d.next_power_of_two().trailing_zeros() as usize) as u32
    };
    if d > 0 {
        // capacity the padding argument needs: 2^m layers fit every witness set
        debug_assert!(1u128 << m >= (d as u128) << d);
    }
    let mut sig = Signature::infer(f)?;
    let free_dia_index = ds
        .free_dia
        .iter()
        .enumerate()
        .map(|(i, fd)| ((*fd).clone(), sig.fresh_pred(&format!("E_{}", i + 1), 1)))
        .collect();
    let level_preds = (0..m).map(|j| sig.fresh_pred(&format!("L_{j}"), 1)).collect();
    let chain_pred = sig.fresh_pred("F", 2);
    Ok(RemovalParams {
        ell: ds.free_dia.len(),
        m,
        free_dia_index,
        level_preds,
        chain_pred,
    })
}

fn vx() -> Term {
    Term::var("x")
}

fn vy() -> Term {
    Term::var("y")
}

/// ⋀_j L_j(x) ↔ L_j(y): "same layer".
fn same_layer(params: &RemovalParams) -> Formula {
    Formula::and_all(params.level_preds.iter().map(|l| {
        Formula::iff(Formula::atom1(l, vx()), Formula::atom1(l, vy()))
    }))
}

/// ⋀_i E_i(x) ↔ E_i(y): "same E-type".
fn same_e_type(params: &RemovalParams) -> Formula {
    Formula::and_all(params.free_dia_index.iter().map(|(_, e)| {
        Formula::iff(Formula::atom1(e, vx()), Formula::atom1(e, vy()))
    }))
}

/// The stack axioms: every element sits on a full chain of 2^m layers whose
/// L-bits count up along F, and binary predicates stay within one layer.
pub fn build_stack_formula(params: &RemovalParams, binary_preds: &BTreeSet<String>) -> Formula {
    let m = params.m as usize;
    let ls = &params.level_preds;
    let f = &params.chain_pred;
    let fxy = Formula::atom2(f, vx(), vy());
    let fyx = Formula::atom2(f, vy(), vx());
    let some_bit_clear =
        Formula::or_all(ls.iter().map(|l| Formula::not(Formula::atom1(l, vx()))));
    let all_bits_set = Formula::and_all(ls.iter().map(|l| Formula::atom1(l, vx())));
    let some_bit_set = Formula::or_all(ls.iter().map(|l| Formula::atom1(l, vx())));
    let all_bits_clear =
        Formula::and_all(ls.iter().map(|l| Formula::not(Formula::atom1(l, vx()))));

    let exactly_one = |g: Formula| Formula::count(Comparator::Eq, 1, "y", g);
    let none = |g: Formula| Formula::count(Comparator::Eq, 0, "y", g);

    let f2 = Formula::forall("x", Formula::implies(all_bits_set.clone(), none(fxy.clone())));
    let f4 = Formula::forall(
        "x",
        Formula::implies(all_bits_clear.clone(), none(fyx.clone())),
    );
    if m == 0 {
        // a single layer: F relates nothing, and that is all there is to say
        return Formula::and(f2, f4);
    }
    let f1 = Formula::forall(
        "x",
        Formula::implies(some_bit_clear, exactly_one(fxy.clone())),
    );
    let f3 = Formula::forall("x", Formula::implies(some_bit_set, exactly_one(fyx)));
    // bit j flips along F exactly when some lower bit is clear
    let f5 = Formula::forall(
        "x",
        Formula::forall(
            "y",
            Formula::implies(
                fxy,
                Formula::and_all((0..m).map(|j| {
                    Formula::iff(
                        Formula::iff(
                            Formula::atom1(&ls[j], vx()),
                            Formula::atom1(&ls[j], vy()),
                        ),
                        Formula::or_all(
                            (0..j).map(|j2| Formula::not(Formula::atom1(&ls[j2], vx()))),
                        ),
                    )
                })),
            ),
        ),
    );
    let mut parts = vec![f1, f2, f3, f4, f5];
    for p in binary_preds {
        parts.push(Formula::forall(
            "x",
            Formula::forall(
                "y",
                Formula::implies(
                    Formula::atom2(p, vx(), vy()),
                    Formula::and_all((0..m).map(|j| {
                        Formula::iff(
                            Formula::atom1(&ls[j], vx()),
                            Formula::atom1(&ls[j], vy()),
                        )
                    })),
                ),
            ),
        ));
    }
    Formula::and_all(parts)
}

/// ∀x∀y. F(x,y) → ⋀_i E_i(x) ↔ E_i(y): E-membership is constant along
/// chains, which is rigidity of the E-predicates in the structure reading.
pub fn build_rigidity_formula(params: &RemovalParams) -> Formula {
    Formula::forall(
        "x",
        Formula::forall(
            "y",
            Formula::implies(
                Formula::atom2(&params.chain_pred, vx(), vy()),
                same_e_type(params),
            ),
        ),
    )
}

/// Total x/y exchange, in terms and binders alike. Meaning-preserving on
/// closed formulas.
fn swap_xy(f: &Formula) -> Formula {
    let st = |t: &Term| match t {
        Term::Var(v) if v == "x" => Term::var("y"),
        Term::Var(v) if v == "y" => Term::var("x"),
        other => other.clone(),
    };
    let sv = |v: &str| match v {
        "x" => "y".to_string(),
        "y" => "x".to_string(),
        other => other.to_string(),
    };
    match f {
        Formula::Atom(p, ts) => Formula::Atom(p.clone(), ts.iter().map(st).collect()),
        Formula::Eq(s, t) => Formula::Eq(st(s), st(t)),
        Formula::Not(a) => Formula::not(swap_xy(a)),
        Formula::And(a, b) => Formula::and(swap_xy(a), swap_xy(b)),
        Formula::CountExists(c, n, v, b) => Formula::count(*c, *n, sv(v), swap_xy(b)),
        Formula::Dia(e, b) => Formula::dia(e.clone(), swap_xy(b)),
    }
}

/// `stale` is the variable whose binding still points at the layer left
/// behind by the innermost enclosing diamond jump; the layer guard of a
/// quantifier reads the other variable, so a quantifier is sound exactly
/// when it binds the stale variable (or none is stale). A quantifier that
/// instead rebinds the anchored variable is necessarily closed (the stale
/// variable cannot occur free under a monodic diamond), so it swaps the
/// two variable roles and binds the stale one.
fn tr(f: &Formula, params: &RemovalParams, stale: Option<&str>) -> Formula {
    match f {
        Formula::Atom(..) | Formula::Eq(..) => f.clone(),
        Formula::Not(a) => Formula::not(tr(a, params, stale)),
        Formula::And(a, b) => Formula::and(tr(a, params, stale), tr(b, params, stale)),
        Formula::CountExists(cmp, n, v, body) => match stale {
            Some(s) if s != v => Formula::count(
                *cmp,
                *n,
                s,
                Formula::and(same_layer(params), tr(&swap_xy(body), params, None)),
            ),
            _ => Formula::count(
                *cmp,
                *n,
                v.clone(),
                Formula::and(same_layer(params), tr(body, params, None)),
            ),
        },
        Formula::Dia(_, body) => {
            let fv = free_vars(body);
            let (znf, zmf) = if fv.contains("x") { ("y", "x") } else { ("x", "y") };
            Formula::forall(
                znf,
                Formula::implies(
                    Formula::Eq(vx(), vy()),
                    Formula::exists(
                        zmf,
                        Formula::and(same_e_type(params), tr(body, params, Some(znf))),
                    ),
                ),
            )
        }
    }
}

/// ∀x∀y.(x ≐ y → tr(f)): quantifiers relativized to the current layer,
/// diamonds to the current E-type. The inner x ≐ y guard of the diamond
/// clause is kept verbatim even though the top level repeats it.
pub fn translate_tr(f: &Formula, params: &RemovalParams) -> Formula {
    Formula::forall(
        "x",
        Formula::forall(
            "y",
            Formula::implies(Formula::Eq(vx(), vy()), tr(f, params, None)),
        ),
    )
}

/// The full removal: stack ∧ rigidity ∧ translation, over shared fresh
/// names. The output is a plain two-variable sentence.
pub fn remove_standpoints(f: &Formula) -> Result<Formula> {
    let params = compute_params(f)?;
    let sig = Signature::infer(f)?;
    let binary: BTreeSet<String> =
        sig.preds_of_arity(2).into_iter().map(String::from).collect();
    Ok(Formula::and(
        Formula::and(
            build_stack_formula(&params, &binary),
            build_rigidity_formula(&params),
        ),
        translate_tr(f, &params),
    ))
}
