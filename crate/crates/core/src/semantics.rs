//! Executable semantics and model constructions.
//!
//! Everything downstream is property-tested against this module, so the
//! evaluators here favour obviousness over speed. The bounded search is the
//! lone exception: it carries a packed bitmask representation and a
//! three-valued pruning evaluator, and its witnesses are cross-checked by
//! the plain evaluator in the test suites (two independent routes).

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::syntax::{
    dia_sets, free_vars, subformulas, Formula, Signature, StandpointExpr, Term,
};
use crate::{Error, Result};

/// One predicate's extension at one world. Missing entries read as empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extension {
    Nullary(bool),
    Unary(BTreeSet<usize>),
    Binary(BTreeSet<(usize, usize)>),
}

impl Extension {
    pub fn arity(&self) -> u8 {
        match self {
            Extension::Nullary(_) => 0,
            Extension::Unary(_) => 1,
            Extension::Binary(_) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Extension::Nullary(b) => !b,
            Extension::Unary(s) => s.is_empty(),
            Extension::Binary(s) => s.is_empty(),
        }
    }
}

/// Finite standpoint structure: domain, precisifications, standpoint map,
/// per-world extensions, and world-independent constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandpointStructure {
    pub domain: Vec<String>,
    pub worlds: Vec<String>,
    /// Named standpoints only; `*` always denotes all worlds.
    pub sigma: BTreeMap<String, BTreeSet<usize>>,
    pub consts: BTreeMap<String, usize>,
    pub gamma: Vec<BTreeMap<String, Extension>>,
}

/// Plain first-order interpretation: the one-world special case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FOInterpretation {
    pub domain: Vec<String>,
    pub consts: BTreeMap<String, usize>,
    pub ext: BTreeMap<String, Extension>,
}

/// Variable assignment over element names.
pub type Assignment = BTreeMap<String, String>;

impl StandpointStructure {
    pub fn world_index(&self, world: &str) -> Result<usize> {
        self.worlds
            .iter()
            .position(|w| w == world)
            .ok_or_else(|| Error::UnknownWorld(world.to_string()))
    }

    pub fn elem_index(&self, elem: &str) -> Result<usize> {
        self.domain
            .iter()
            .position(|d| d == elem)
            .ok_or_else(|| Error::Invalid(format!("unknown element {elem}")))
    }

    /// Worlds denoted by a standpoint expression; unmapped symbols denote
    /// the empty set, `*` denotes all worlds.
    pub fn sigma_set(&self, e: &StandpointExpr) -> BTreeSet<usize> {
        match e {
            StandpointExpr::Symbol(s) if s == "*" => (0..self.worlds.len()).collect(),
            StandpointExpr::Symbol(s) => self.sigma.get(s).cloned().unwrap_or_default(),
            StandpointExpr::Union(a, b) => {
                &self.sigma_set(a) | &self.sigma_set(b)
            }
            StandpointExpr::Inter(a, b) => {
                &self.sigma_set(a) & &self.sigma_set(b)
            }
            StandpointExpr::Diff(a, b) => {
                &self.sigma_set(a) - &self.sigma_set(b)
            }
        }
    }

    /// Projects one world out as a plain interpretation.
    pub fn world_interpretation(&self, w: usize) -> FOInterpretation {
        FOInterpretation {
            domain: self.domain.clone(),
            consts: self.consts.clone(),
            ext: self.gamma[w].clone(),
        }
    }

    /// Wraps a plain interpretation as a one-world structure.
    pub fn from_fo(i: &FOInterpretation, world: &str) -> StandpointStructure {
        StandpointStructure {
            domain: i.domain.clone(),
            worlds: vec![world.to_string()],
            sigma: BTreeMap::new(),
            consts: i.consts.clone(),
            gamma: vec![i.ext.clone()],
        }
    }
}

// ---------------------------------------------------------------------
// evaluation

fn resolve(m: &StandpointStructure, v: &BTreeMap<String, usize>, t: &Term) -> Result<usize> {
    match t {
        Term::Var(x) => v
            .get(x)
            .copied()
            .ok_or_else(|| Error::UnassignedVariable(x.clone())),
        Term::Const(c) => m
            .consts
            .get(c)
            .copied()
            .ok_or_else(|| Error::UnknownConstant(c.clone())),
    }
}

fn holds_atom(ext: Option<&Extension>, args: &[usize]) -> bool {
    match (ext, args) {
        (Some(Extension::Nullary(b)), []) => *b,
        (Some(Extension::Unary(s)), [a]) => s.contains(a),
        (Some(Extension::Binary(s)), [a, b]) => s.contains(&(*a, *b)),
        _ => false,
    }
}

/// Satisfaction at a world under an index assignment.
pub fn eval_at(
    m: &StandpointStructure,
    w: usize,
    v: &BTreeMap<String, usize>,
    f: &Formula,
) -> Result<bool> {
    match f {
        Formula::Atom(p, terms) => {
            let args = terms
                .iter()
                .map(|t| resolve(m, v, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(holds_atom(m.gamma[w].get(p), &args))
        }
        Formula::Eq(s, t) => Ok(resolve(m, v, s)? == resolve(m, v, t)?),
        Formula::Not(a) => Ok(!eval_at(m, w, v, a)?),
        Formula::And(a, b) => Ok(eval_at(m, w, v, a)? && eval_at(m, w, v, b)?),
        Formula::CountExists(cmp, n, x, body) => {
            let mut inner = v.clone();
            let mut count = 0usize;
            for d in 0..m.domain.len() {
                inner.insert(x.clone(), d);
                if eval_at(m, w, &inner, body)? {
                    count += 1;
                }
            }
            Ok(cmp.holds(count, *n))
        }
        Formula::Dia(e, body) => {
            for w2 in m.sigma_set(e) {
                if eval_at(m, w2, v, body)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Satisfaction at a named world under a name assignment.
pub fn eval(m: &StandpointStructure, world: &str, v: &Assignment, f: &Formula) -> Result<bool> {
    let w = m.world_index(world)?;
    let mut idx = BTreeMap::new();
    for (var, el) in v {
        idx.insert(var.clone(), m.elem_index(el)?);
    }
    eval_at(m, w, &idx, f)
}

/// Global satisfaction: true at every world under every assignment of the
/// free variables.
pub fn models(m: &StandpointStructure, f: &Formula) -> Result<bool> {
    let vars: Vec<String> = free_vars(f).into_iter().collect();
    let d = m.domain.len();
    for w in 0..m.worlds.len() {
        let mut tuple = vec![0usize; vars.len()];
        loop {
            let v: BTreeMap<String, usize> =
                vars.iter().cloned().zip(tuple.iter().copied()).collect();
            if !eval_at(m, w, &v, f)? {
                return Ok(false);
            }
            let mut i = tuple.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                tuple[i] += 1;
                if tuple[i] < d {
                    break;
                }
                tuple[i] = 0;
            }
            if tuple.iter().all(|&t| t == 0) {
                break;
            }
        }
        if vars.is_empty() {
            continue;
        }
    }
    Ok(true)
}

pub(crate) fn contains_dia(f: &Formula) -> bool {
    subformulas(f)
        .iter()
        .any(|g| matches!(g, Formula::Dia(..)))
}

fn resolve_fo(i: &FOInterpretation, v: &BTreeMap<String, usize>, t: &Term) -> Result<usize> {
    match t {
        Term::Var(x) => v
            .get(x)
            .copied()
            .ok_or_else(|| Error::UnassignedVariable(x.clone())),
        Term::Const(c) => i
            .consts
            .get(c)
            .copied()
            .ok_or_else(|| Error::UnknownConstant(c.clone())),
    }
}

fn eval_fo_at(i: &FOInterpretation, v: &BTreeMap<String, usize>, f: &Formula) -> Result<bool> {
    match f {
        Formula::Atom(p, terms) => {
            let args = terms
                .iter()
                .map(|t| resolve_fo(i, v, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(holds_atom(i.ext.get(p), &args))
        }
        Formula::Eq(s, t) => Ok(resolve_fo(i, v, s)? == resolve_fo(i, v, t)?),
        Formula::Not(a) => Ok(!eval_fo_at(i, v, a)?),
        Formula::And(a, b) => Ok(eval_fo_at(i, v, a)? && eval_fo_at(i, v, b)?),
        Formula::CountExists(cmp, n, x, body) => {
            let mut inner = v.clone();
            let mut count = 0usize;
            for d in 0..i.domain.len() {
                inner.insert(x.clone(), d);
                if eval_fo_at(i, &inner, body)? {
                    count += 1;
                }
            }
            Ok(cmp.holds(count, *n))
        }
        Formula::Dia(..) => Err(Error::ModalInPlainFormula),
    }
}

/// Plain first-order evaluation; rejects modal operators.
pub fn eval_fo(i: &FOInterpretation, v: &BTreeMap<String, usize>, f: &Formula) -> Result<bool> {
    if contains_dia(f) {
        return Err(Error::ModalInPlainFormula);
    }
    eval_fo_at(i, v, f)
}

/// Universal-closure satisfaction over a plain interpretation.
pub fn models_fo(i: &FOInterpretation, f: &Formula) -> Result<bool> {
    if contains_dia(f) {
        return Err(Error::ModalInPlainFormula);
    }
    let m = StandpointStructure::from_fo(i, "w0");
    models(&m, f)
}

/// True iff `pred` has the same extension at every world (absent = empty).
pub fn is_rigid(m: &StandpointStructure, pred: &str) -> bool {
    let empty_like = |e: Option<&Extension>| e.map(|x| x.is_empty()).unwrap_or(true);
    let first = m.gamma[0].get(pred);
    m.gamma.iter().all(|g| match (g.get(pred), first) {
        (a, b) if a == b => true,
        (a, b) => empty_like(a) && empty_like(b),
    })
}

// ---------------------------------------------------------------------
// E-type permutations and the permutational closure

/// Domain permutation preserving membership in every designated E-predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ETypePermutation {
    map: Vec<usize>,
}

impl ETypePermutation {
    pub fn new(map: Vec<usize>, m: &StandpointStructure, e_preds: &[String]) -> Result<Self> {
        let d = m.domain.len();
        let mut seen = vec![false; d];
        if map.len() != d {
            return Err(Error::Invalid("permutation length mismatch".into()));
        }
        for &img in &map {
            if img >= d || seen[img] {
                return Err(Error::Invalid("not a bijection".into()));
            }
            seen[img] = true;
        }
        for e in e_preds {
            let ext = m.gamma[0].get(e.as_str());
            for (src, &img) in map.iter().enumerate() {
                if holds_atom(ext, &[src]) != holds_atom(ext, &[img]) {
                    return Err(Error::Invalid(format!(
                        "permutation does not preserve {e}"
                    )));
                }
            }
        }
        Ok(ETypePermutation { map })
    }

    pub fn apply(&self, elem: usize) -> usize {
        self.map[elem]
    }

    pub fn inverse(&self) -> ETypePermutation {
        let mut inv = vec![0; self.map.len()];
        for (src, &img) in self.map.iter().enumerate() {
            inv[img] = src;
        }
        ETypePermutation { map: inv }
    }

    pub fn compose_after(&self, other: &ETypePermutation) -> ETypePermutation {
        // (self ∘ other)(x) = self(other(x))
        ETypePermutation {
            map: other.map.iter().map(|&x| self.map[x]).collect(),
        }
    }
}

fn e_type_mask(m: &StandpointStructure, e_preds: &[String], elem: usize) -> u64 {
    let mut mask = 0u64;
    for (i, e) in e_preds.iter().enumerate() {
        if holds_atom(m.gamma[0].get(e.as_str()), &[elem]) {
            mask |= 1 << i;
        }
    }
    mask
}

/// All domain permutations preserving every E-predicate: the product of the
/// symmetric groups on the E-type classes. Identity comes first.
pub fn e_type_permutations(
    m: &StandpointStructure,
    e_preds: &[String],
) -> Result<Vec<ETypePermutation>> {
    for e in e_preds {
        if !is_rigid(m, e) {
            return Err(Error::NonRigidEPredicate(e.clone()));
        }
    }
    let d = m.domain.len();
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for elem in 0..d {
        groups
            .entry(e_type_mask(m, e_preds, elem))
            .or_default()
            .push(elem);
    }
    let group_list: Vec<&Vec<usize>> = groups.values().collect();
    let per_group: Vec<Vec<Vec<usize>>> = group_list
        .iter()
        .map(|g| g.iter().copied().permutations(g.len()).collect())
        .collect();
    let mut out = Vec::new();
    for combo in per_group.into_iter().multi_cartesian_product() {
        let mut map = vec![0usize; d];
        for (group, perm) in group_list.iter().zip(combo.iter()) {
            for (src, img) in group.iter().zip(perm.iter()) {
                map[*src] = *img;
            }
        }
        out.push(ETypePermutation::new(map, m, e_preds)?);
    }
    Ok(out)
}

/// Multiplies the precisifications by every E-type-preserving permutation;
/// world (π, f) carries the f-image of π's extensions.
pub fn permutational_closure(
    m: &StandpointStructure,
    e_preds: &[String],
) -> Result<StandpointStructure> {
    if m.domain.len() > 5 {
        return Err(Error::ClosureTooLarge(format!(
            "domain of size {} exceeds the factorial guard of 5",
            m.domain.len()
        )));
    }
    if !m.consts.is_empty() {
        return Err(Error::Invalid(
            "permutational closure is defined for constant-free structures".into(),
        ));
    }
    let perms = e_type_permutations(m, e_preds)?;
    let total = m.worlds.len() * perms.len();
    if total > 10_000 {
        return Err(Error::ClosureTooLarge(format!(
            "{total} worlds exceed the guard of 10000"
        )));
    }
    let mut worlds = Vec::with_capacity(total);
    let mut gamma = Vec::with_capacity(total);
    for (wi, wname) in m.worlds.iter().enumerate() {
        for (k, f) in perms.iter().enumerate() {
            worlds.push(format!("{wname}_f{k}"));
            let mut ext = BTreeMap::new();
            for (p, e) in &m.gamma[wi] {
                let pushed = match e {
                    Extension::Nullary(b) => Extension::Nullary(*b),
                    Extension::Unary(s) => {
                        Extension::Unary(s.iter().map(|&x| f.apply(x)).collect())
                    }
                    Extension::Binary(s) => Extension::Binary(
                        s.iter().map(|&(a, b)| (f.apply(a), f.apply(b))).collect(),
                    ),
                };
                if !pushed.is_empty() {
                    ext.insert(p.clone(), pushed);
                }
            }
            gamma.push(ext);
        }
    }
    let np = perms.len();
    let sigma = m
        .sigma
        .iter()
        .map(|(s, set)| {
            let expanded = set
                .iter()
                .flat_map(|&wi| (0..np).map(move |k| wi * np + k))
                .collect();
            (s.clone(), expanded)
        })
        .collect();
    Ok(StandpointStructure {
        domain: m.domain.clone(),
        worlds,
        sigma,
        consts: BTreeMap::new(),
        gamma,
    })
}

// ---------------------------------------------------------------------
// stacked interpretations and extraction

fn level_pred(j: usize) -> String {
    format!("L_{j}")
}

/// Encodes all 2^m precisifications of `m` in one plain interpretation:
/// element (δ,i) sits on layer i, L-bits spell i, F chains the layers.
pub fn stacked_interpretation(m: &StandpointStructure) -> Result<FOInterpretation> {
    let p = m.worlds.len();
    if !p.is_power_of_two() {
        return Err(Error::WorldCountNotPowerOfTwo(p));
    }
    let levels = p.trailing_zeros() as usize;
    if !m.consts.is_empty() {
        return Err(Error::Invalid(
            "stacking is defined for constant-free structures".into(),
        ));
    }
    let mut preds: BTreeMap<&str, u8> = BTreeMap::new();
    for g in &m.gamma {
        for (name, e) in g {
            if e.arity() == 0 {
                return Err(Error::Invalid(format!(
                    "stacking is defined for nullary-free structures, found {name}"
                )));
            }
            if let Some(prev) = preds.insert(name, e.arity()) {
                if prev != e.arity() {
                    return Err(Error::ArityConflict {
                        pred: name.clone(),
                        prev,
                        new: e.arity(),
                    });
                }
            }
        }
    }
    let reserved: Vec<String> = (0..levels).map(level_pred).chain(["F".to_string()]).collect();
    for r in &reserved {
        if preds.contains_key(r.as_str()) {
            return Err(Error::Invalid(format!(
                "predicate name {r} is reserved by the stacking encoding"
            )));
        }
    }

    let mut domain = Vec::with_capacity(m.domain.len() * p);
    for e in &m.domain {
        for i in 0..p {
            domain.push(format!("{e}_{i}"));
        }
    }
    let at = |e: usize, i: usize| e * p + i;

    let mut ext: BTreeMap<String, Extension> = BTreeMap::new();
    for j in 0..levels {
        let s: BTreeSet<usize> = (0..m.domain.len())
            .flat_map(|e| (0..p).filter(move |i| i >> j & 1 == 1).map(move |i| at(e, i)))
            .collect();
        ext.insert(level_pred(j), Extension::Unary(s));
    }
    if p > 1 {
        let f: BTreeSet<(usize, usize)> = (0..m.domain.len())
            .flat_map(|e| (0..p - 1).map(move |i| (at(e, i), at(e, i + 1))))
            .collect();
        ext.insert("F".to_string(), Extension::Binary(f));
    }
    for (name, arity) in preds {
        match arity {
            1 => {
                let mut s = BTreeSet::new();
                for (i, g) in m.gamma.iter().enumerate() {
                    if let Some(Extension::Unary(orig)) = g.get(name) {
                        s.extend(orig.iter().map(|&e| at(e, i)));
                    }
                }
                if !s.is_empty() {
                    ext.insert(name.to_string(), Extension::Unary(s));
                }
            }
            _ => {
                let mut s = BTreeSet::new();
                for (i, g) in m.gamma.iter().enumerate() {
                    if let Some(Extension::Binary(orig)) = g.get(name) {
                        s.extend(orig.iter().map(|&(a, b)| (at(a, i), at(b, i))));
                    }
                }
                if !s.is_empty() {
                    ext.insert(name.to_string(), Extension::Binary(s));
                }
            }
        }
    }
    Ok(FOInterpretation {
        domain,
        consts: BTreeMap::new(),
        ext,
    })
}

/// Inverts [`stacked_interpretation`]: reads the layer structure off a model
/// of the stack axioms and verifies the reconstruction is isomorphic before
/// returning it.
pub fn extract_structure(i: &FOInterpretation, m_levels: u32) -> Result<StandpointStructure> {
    if !i.consts.is_empty() {
        return Err(Error::Invalid(
            "extraction is defined for constant-free interpretations".into(),
        ));
    }
    let p = 1usize << m_levels;
    let binary: BTreeSet<String> = i
        .ext
        .iter()
        .filter(|(name, e)| e.arity() == 2 && name.as_str() != "F")
        .map(|(name, _)| name.clone())
        .collect();
    let params = crate::removal::RemovalParams::conventional(m_levels);
    let stack = crate::removal::build_stack_formula(&params, &binary);
    if !models_fo(i, &stack)? {
        return Err(Error::NotAStackModel("stack axioms do not hold".into()));
    }

    let n = i.domain.len();
    let level = |e: usize| -> usize {
        (0..m_levels as usize)
            .filter(|&j| holds_atom(i.ext.get(&level_pred(j)), &[e]))
            .map(|j| 1 << j)
            .sum()
    };
    let f_edges: Vec<(usize, usize)> = match i.ext.get("F") {
        Some(Extension::Binary(s)) => s.iter().copied().collect(),
        Some(_) => return Err(Error::NotAStackModel("F is not binary".into())),
        None => Vec::new(),
    };

    // union-find over F to get the layer chains
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for &(a, b) in &f_edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in 0..n {
        let r = find(&mut parent, e);
        comps.entry(r).or_default().push(e);
    }
    // order components by smallest member; each must be a complete chain
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for members in comps.values() {
        if members.len() != p {
            return Err(Error::NotAStackModel(format!(
                "component of size {} instead of {p}",
                members.len()
            )));
        }
        let mut chain = vec![usize::MAX; p];
        for &e in members {
            let l = level(e);
            if chain[l] != usize::MAX {
                return Err(Error::NotAStackModel("duplicate level in component".into()));
            }
            chain[l] = e;
        }
        chains.push(chain);
    }
    chains.sort_by_key(|c| c[0]);
    let expected: BTreeSet<(usize, usize)> = chains
        .iter()
        .flat_map(|c| c.windows(2).map(|w| (w[0], w[1])))
        .collect();
    if expected != f_edges.iter().copied().collect() {
        return Err(Error::NotAStackModel("F is not the union of the chains".into()));
    }

    let elem_of: BTreeMap<usize, (usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(c, chain)| chain.iter().enumerate().map(move |(l, &e)| (e, (c, l))))
        .collect();
    let domain: Vec<String> = chains.iter().map(|c| i.domain[c[0]].clone()).collect();
    let worlds: Vec<String> = (0..p).map(|k| format!("w{k}")).collect();
    let mut gamma: Vec<BTreeMap<String, Extension>> = vec![BTreeMap::new(); p];
    for (name, e) in &i.ext {
        if name == "F" || (0..m_levels as usize).any(|j| level_pred(j) == *name) {
            continue;
        }
        match e {
            Extension::Nullary(_) => {
                return Err(Error::NotAStackModel(format!("nullary predicate {name}")))
            }
            Extension::Unary(s) => {
                for &x in s {
                    let (c, l) = elem_of[&x];
                    match gamma[l]
                        .entry(name.clone())
                        .or_insert_with(|| Extension::Unary(BTreeSet::new()))
                    {
                        Extension::Unary(set) => set.insert(c),
                        _ => unreachable!(),
                    };
                }
            }
            Extension::Binary(s) => {
                for &(a, b) in s {
                    let (ca, la) = elem_of[&a];
                    let (cb, lb) = elem_of[&b];
                    if la != lb {
                        return Err(Error::NotAStackModel(format!(
                            "{name} relates elements on different layers"
                        )));
                    }
                    match gamma[la]
                        .entry(name.clone())
                        .or_insert_with(|| Extension::Binary(BTreeSet::new()))
                    {
                        Extension::Binary(set) => set.insert((ca, cb)),
                        _ => unreachable!(),
                    };
                }
            }
        }
    }

    let out = StandpointStructure {
        domain,
        worlds,
        sigma: BTreeMap::new(),
        consts: BTreeMap::new(),
        gamma,
    };

    // isomorphism check: restacking must reproduce i up to the element
    // bijection (chain c, layer l) ↦ chains[c][l]
    let restacked = stacked_interpretation(&out)?;
    let back = |idx: usize| {
        let (c, l) = (idx / p, idx % p);
        chains[c][l]
    };
    let keys: BTreeSet<&String> = restacked.ext.keys().chain(i.ext.keys()).collect();
    for name in keys {
        let image = match restacked.ext.get(name) {
            None => None,
            Some(Extension::Unary(s)) => {
                Some(Extension::Unary(s.iter().map(|&x| back(x)).collect()))
            }
            Some(Extension::Binary(s)) => Some(Extension::Binary(
                s.iter().map(|&(a, b)| (back(a), back(b))).collect(),
            )),
            Some(Extension::Nullary(b)) => Some(Extension::Nullary(*b)),
        };
        let orig = i.ext.get(name);
        let same = match (&image, orig) {
            (None, None) => true,
            (Some(a), None) => a.is_empty(),
            (None, Some(b)) => b.is_empty(),
            (Some(a), Some(b)) => a == b,
        };
        if !same {
            return Err(Error::NotAStackModel(format!(
                "restacking disagrees on {name}"
            )));
        }
    }
    Ok(out)
}

/// Pads to `n` precisifications with duplicates of the first world.
pub fn pad_precisifications(m: &StandpointStructure, n: usize) -> StandpointStructure {
    let mut out = m.clone();
    let base = m.worlds[0].clone();
    let mut k = 0usize;
    while out.worlds.len() < n {
        k += 1;
        let name = format!("{base}_c{k}");
        if out.worlds.contains(&name) {
            continue;
        }
        let idx = out.worlds.len();
        out.worlds.push(name);
        out.gamma.push(m.gamma[0].clone());
        for set in out.sigma.values_mut() {
            if set.contains(&0) {
                set.insert(idx);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// witness selection (the "at most exponentially many precisifications" step)

/// Shrinks a model of `f` to the witness worlds the closure argument needs:
/// one per satisfied sentential diamond and one per (realized E-type,
/// E-predicate) pair. E-predicates are installed from the diamond member
/// sets before selection. The permutational closure of the result is
/// verified to model `f` again.
pub fn witness_selection(mp: &StandpointStructure, f: &Formula) -> Result<StandpointStructure> {
    let params = crate::removal::compute_params(f)?;
    if !models(mp, f)? {
        return Err(Error::InputNotAModel);
    }
    let ds = dia_sets(f)?;
    let mut m = mp.clone();

    // enrich with the diamond member sets; membership is world-independent
    let e_names: Vec<String> = params
        .free_dia_index
        .iter()
        .map(|(_, name)| name.clone())
        .collect();
    for (fd, name) in &params.free_dia_index {
        let var = free_vars(fd)
            .into_iter()
            .next()
            .ok_or_else(|| Error::InternalCheck("free diamond without free variable".into()))?;
        let mut members = BTreeSet::new();
        for d in 0..m.domain.len() {
            let v = BTreeMap::from([(var.clone(), d)]);
            if eval_at(&m, 0, &v, fd)? {
                members.insert(d);
            }
        }
        for g in &mut m.gamma {
            if members.is_empty() {
                g.remove(name);
            } else {
                g.insert(name.clone(), Extension::Unary(members.clone()));
            }
        }
    }

    let least_world = |cands: &BTreeSet<usize>| -> Option<usize> {
        cands.iter().copied().min_by_key(|&w| m.worlds[w].clone())
    };

    let mut selected: BTreeSet<usize> = BTreeSet::new();
    // sentential diamonds: one witness world each, when satisfied
    for d in &ds.dia {
        let Formula::Dia(_, body) = d else { unreachable!() };
        if !free_vars(body).is_empty() {
            continue;
        }
        let mut cands = BTreeSet::new();
        for w in 0..m.worlds.len() {
            if eval_at(&m, w, &BTreeMap::new(), body)? {
                cands.insert(w);
            }
        }
        if let Some(w) = least_world(&cands) {
            selected.insert(w);
        }
    }
    // per realized E-type and member predicate: a world witnessing the body
    // for the least element of that type
    let mut types: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for el in 0..m.domain.len() {
        types
            .entry(e_type_mask(&m, &e_names, el))
            .or_default()
            .push(el);
    }
    for (mask, members) in &types {
        let delta = members
            .iter()
            .copied()
            .min_by_key(|&el| m.domain[el].clone())
            .expect("nonempty type class");
        for (idx, (fd, _)) in params.free_dia_index.iter().enumerate() {
            if mask >> idx & 1 == 0 {
                continue;
            }
            let Formula::Dia(_, body) = fd else { unreachable!() };
            let var = free_vars(body).into_iter().next().expect("monodic body");
            let mut cands = BTreeSet::new();
            for w in 0..m.worlds.len() {
                let v = BTreeMap::from([(var.clone(), delta)]);
                if eval_at(&m, w, &v, body)? {
                    cands.insert(w);
                }
            }
            let w = least_world(&cands).ok_or_else(|| {
                Error::InternalCheck("diamond member without witness world".into())
            })?;
            selected.insert(w);
        }
    }
    if selected.is_empty() {
        let all: BTreeSet<usize> = (0..m.worlds.len()).collect();
        selected.insert(least_world(&all).expect("nonempty worlds"));
    }

    let keep: Vec<usize> = selected.into_iter().collect();
    let reindex: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let result = StandpointStructure {
        domain: m.domain.clone(),
        worlds: keep.iter().map(|&w| m.worlds[w].clone()).collect(),
        sigma: m
            .sigma
            .iter()
            .map(|(s, set)| {
                (
                    s.clone(),
                    set.iter().filter_map(|w| reindex.get(w).copied()).collect(),
                )
            })
            .collect(),
        consts: m.consts.clone(),
        gamma: keep.iter().map(|&w| m.gamma[w].clone()).collect(),
    };

    let closure = permutational_closure(&result, &e_names)?;
    if !models(&closure, f)? {
        return Err(Error::InternalCheck(
            "closure of the selected worlds does not model the sentence".into(),
        ));
    }
    Ok(result)
}

// ---------------------------------------------------------------------
// bounded satisfiability search

/// Bounds and budget for the exhaustive model search.
#[derive(Debug, Clone)]
pub struct SatOptions {
    pub max_domain: usize,
    pub max_worlds: usize,
    /// Counts three-valued evaluation calls; crossing it without a verdict
    /// raises "search space too large".
    pub budget: u64,
    /// Predicates forced to the same extension at every world.
    pub rigid_preds: BTreeSet<String>,
}

impl Default for SatOptions {
    fn default() -> Self {
        SatOptions {
            max_domain: 3,
            max_worlds: 3,
            budget: 100_000_000,
            rigid_preds: BTreeSet::new(),
        }
    }
}

#[derive(Clone, Copy)]
struct PredInfo {
    arity: u8,
    rigid: bool,
}

struct Search<'f> {
    d: usize,
    w: usize,
    preds: Vec<(String, PredInfo)>,
    pred_ids: BTreeMap<&'f str, usize>,
    consts: BTreeMap<&'f str, usize>,
    named: Vec<&'f str>,
    sigma_masks: Vec<u64>,
    /// per pred*world: (known bits, true bits) over tuple indices
    state: Vec<(u64, u64)>,
    vars: Vec<(&'f str, usize)>,
    budget_left: u64,
    budget: u64,
}

impl<'f> Search<'f> {
    fn cell(&self, pred: usize, world: usize) -> usize {
        let world = if self.preds[pred].1.rigid { 0 } else { world };
        pred * self.w + world
    }

    fn tuple_index(&self, args: &[usize]) -> usize {
        match args {
            [] => 0,
            [a] => *a,
            [a, b] => a * self.d + b,
            _ => unreachable!("arity checked at parse time"),
        }
    }

    fn sigma_mask(&self, e: &StandpointExpr) -> u64 {
        match e {
            StandpointExpr::Symbol(s) if s == "*" => (1u64 << self.w) - 1,
            StandpointExpr::Symbol(s) => {
                let i = self.named.iter().position(|n| *n == s.as_str());
                i.map(|i| self.sigma_masks[i]).unwrap_or(0)
            }
            StandpointExpr::Union(a, b) => self.sigma_mask(a) | self.sigma_mask(b),
            StandpointExpr::Inter(a, b) => self.sigma_mask(a) & self.sigma_mask(b),
            StandpointExpr::Diff(a, b) => self.sigma_mask(a) & !self.sigma_mask(b),
        }
    }

    fn term(&self, t: &'f Term) -> usize {
        match t {
            Term::Var(x) => {
                self.vars
                    .iter()
                    .rev()
                    .find(|(v, _)| *v == x.as_str())
                    .expect("sentence leaves no variable unbound")
                    .1
            }
            Term::Const(c) => self.consts[c.as_str()],
        }
    }

    /// Three-valued evaluation under the partial extension assignment:
    /// -1 definitely false, 0 unknown, 1 definitely true.
    fn eval3(&mut self, f: &'f Formula, world: usize) -> i8 {
        match f {
            Formula::Atom(p, terms) => {
                let pid = self.pred_ids[p.as_str()];
                let args: Vec<usize> = terms.iter().map(|t| self.term(t)).collect();
                let bit = 1u64 << self.tuple_index(&args);
                let (known, truth) = self.state[self.cell(pid, world)];
                if known & bit == 0 {
                    0
                } else if truth & bit != 0 {
                    1
                } else {
                    -1
                }
            }
            Formula::Eq(s, t) => {
                if self.term(s) == self.term(t) {
                    1
                } else {
                    -1
                }
            }
            Formula::Not(a) => -self.eval3(a, world),
            Formula::And(a, b) => {
                let va = self.eval3(a, world);
                if va == -1 {
                    return -1;
                }
                va.min(self.eval3(b, world))
            }
            Formula::CountExists(cmp, n, x, body) => {
                let mut definite = 0usize;
                let mut unknown = 0usize;
                for el in 0..self.d {
                    self.vars.push((x.as_str(), el));
                    match self.eval3(body, world) {
                        1 => definite += 1,
                        0 => unknown += 1,
                        _ => {}
                    }
                    self.vars.pop();
                }
                let lo = definite;
                let hi = definite + unknown;
                use crate::syntax::Comparator::*;
                match cmp {
                    Leq => {
                        if lo > *n as usize {
                            -1
                        } else if hi <= *n as usize {
                            1
                        } else {
                            0
                        }
                    }
                    Geq => {
                        if lo >= *n as usize {
                            1
                        } else if hi < *n as usize {
                            -1
                        } else {
                            0
                        }
                    }
                    Eq => {
                        if lo > *n as usize || hi < *n as usize {
                            -1
                        } else if lo == hi {
                            1
                        } else {
                            0
                        }
                    }
                }
            }
            Formula::Dia(e, body) => {
                let mask = self.sigma_mask(e);
                let mut any_unknown = false;
                for w2 in 0..self.w {
                    if mask >> w2 & 1 == 0 {
                        continue;
                    }
                    match self.eval3(body, w2) {
                        1 => return 1,
                        0 => any_unknown = true,
                        _ => {}
                    }
                }
                if any_unknown {
                    0
                } else {
                    -1
                }
            }
        }
    }

    /// Global three-valued check: conjunction over all worlds.
    fn check(&mut self, f: &'f Formula) -> Result<i8> {
        if self.budget_left == 0 {
            return Err(Error::SearchSpaceTooLarge(self.budget));
        }
        self.budget_left -= 1;
        let mut out = 1i8;
        for w in 0..self.w {
            match self.eval3(f, w) {
                -1 => return Ok(-1),
                v => out = out.min(v),
            }
        }
        Ok(out)
    }

    fn dfs(&mut self, slots: &[(usize, usize, usize)], i: usize, f: &'f Formula) -> Result<bool> {
        match self.check(f)? {
            1 => return Ok(true),
            -1 => return Ok(false),
            _ => {}
        }
        if i == slots.len() {
            return Ok(false);
        }
        let (pred, world, tuple) = slots[i];
        let cell = self.cell(pred, world);
        let bit = 1u64 << tuple;
        for value in [false, true] {
            self.state[cell].0 |= bit;
            if value {
                self.state[cell].1 |= bit;
            } else {
                self.state[cell].1 &= !bit;
            }
            if self.dfs(slots, i + 1, f)? {
                return Ok(true);
            }
        }
        self.state[cell].0 &= !bit;
        self.state[cell].1 &= !bit;
        Ok(false)
    }
}

/// Tuple indices for `pred` whose largest element is exactly `k`, in
/// lexicographic order.
fn tuples_with_max(arity: u8, d: usize, k: usize) -> Vec<usize> {
    match arity {
        0 => {
            if k == 0 {
                vec![0]
            } else {
                vec![]
            }
        }
        1 => vec![k],
        _ => {
            let mut out = Vec::new();
            for a in 0..k {
                out.push(a * d + k);
            }
            for b in 0..=k {
                out.push(k * d + b);
            }
            out
        }
    }
}

fn odometer_next(tuple: &mut [usize], base: usize) -> bool {
    let mut i = tuple.len();
    while i > 0 {
        i -= 1;
        tuple[i] += 1;
        if tuple[i] < base {
            return true;
        }
        tuple[i] = 0;
    }
    false
}

/// Exhaustive bounded model search in a fixed canonical order: domain sizes
/// ascending, then world counts, constant maps, standpoint assignments, and
/// finally extensions (searched element-major, false before true, pruned by
/// the three-valued evaluator). The first model in this order is returned,
/// so results are reproducible golden values.
pub fn bounded_sat(f: &Formula, opts: &SatOptions) -> Result<Option<StandpointStructure>> {
    let fv = free_vars(f);
    if !fv.is_empty() {
        return Err(Error::FreeVariables(fv.into_iter().join(", ")));
    }
    if opts.max_domain == 0 || opts.max_worlds == 0 {
        return Err(Error::Invalid("bounds must be at least 1".into()));
    }
    if opts.max_domain > 8 {
        return Err(Error::Invalid(
            "the packed search supports domains up to 8".into(),
        ));
    }
    if opts.max_worlds > 8 {
        return Err(Error::Invalid(
            "the packed search supports up to 8 worlds".into(),
        ));
    }
    let sig = Signature::infer(f)?;
    let preds: Vec<(String, PredInfo)> = sig
        .preds()
        .iter()
        .map(|(name, &arity)| {
            let rigid = opts.rigid_preds.contains(name);
            (name.clone(), PredInfo { arity, rigid })
        })
        .collect();
    let const_names: Vec<&str> = sig.consts().iter().map(|s| s.as_str()).collect();
    let named: Vec<&str> = sig
        .standpoints()
        .iter()
        .filter(|s| s.as_str() != "*")
        .map(|s| s.as_str())
        .collect();

    let mut budget_left = opts.budget;
    for d in 1..=opts.max_domain {
        for w in 1..=opts.max_worlds {
            let mut const_tuple = vec![0usize; const_names.len()];
            loop {
                let mut sigma_tuple = vec![0usize; named.len()];
                loop {
                    let mut search = Search {
                        d,
                        w,
                        preds: preds.clone(),
                        pred_ids: preds
                            .iter()
                            .enumerate()
                            .map(|(i, (n, _))| (n.as_str(), i))
                            .collect(),
                        consts: const_names
                            .iter()
                            .zip(const_tuple.iter())
                            .map(|(n, &v)| (*n, v))
                            .collect(),
                        named: named.clone(),
                        sigma_masks: sigma_tuple.iter().map(|&m| m as u64).collect(),
                        state: vec![(0, 0); preds.len() * w],
                        vars: Vec::new(),
                        budget_left,
                        budget: opts.budget,
                    };
                    let mut slots = Vec::new();
                    for k in 0..d {
                        for world in 0..w {
                            for (pid, (_, info)) in preds.iter().enumerate() {
                                if info.rigid && world > 0 {
                                    continue;
                                }
                                for t in tuples_with_max(info.arity, d, k) {
                                    slots.push((pid, world, t));
                                }
                            }
                        }
                    }
                    let found = search.dfs(&slots, 0, f);
                    budget_left = search.budget_left;
                    if found? {
                        return Ok(Some(build_witness(&search)));
                    }
                    if !odometer_next(&mut sigma_tuple, 1 << w) {
                        break;
                    }
                }
                if !odometer_next(&mut const_tuple, d) {
                    break;
                }
            }
        }
    }
    Ok(None)
}

fn build_witness(s: &Search<'_>) -> StandpointStructure {
    let domain: Vec<String> = (0..s.d).map(|i| format!("d{i}")).collect();
    let worlds: Vec<String> = (0..s.w).map(|i| format!("p{i}")).collect();
    let mut gamma: Vec<BTreeMap<String, Extension>> = vec![BTreeMap::new(); s.w];
    for (pid, (name, info)) in s.preds.iter().enumerate() {
        for world in 0..s.w {
            let (_, truth) = s.state[s.cell(pid, world)];
            let ext = match info.arity {
                0 => Extension::Nullary(truth & 1 != 0),
                1 => Extension::Unary((0..s.d).filter(|&e| truth >> e & 1 != 0).collect()),
                _ => Extension::Binary(
                    (0..s.d)
                        .flat_map(|a| (0..s.d).map(move |b| (a, b)))
                        .filter(|&(a, b)| truth >> (a * s.d + b) & 1 != 0)
                        .collect(),
                ),
            };
            if !ext.is_empty() {
                gamma[world].insert(name.clone(), ext);
            }
        }
    }
    let sigma = s
        .named
        .iter()
        .zip(s.sigma_masks.iter())
        .map(|(name, &mask)| {
            (
                name.to_string(),
                (0..s.w).filter(|&w| mask >> w & 1 != 0).collect(),
            )
        })
        .collect();
    StandpointStructure {
        domain,
        worlds,
        sigma,
        consts: s
            .consts
            .iter()
            .map(|(name, &v)| (name.to_string(), v))
            .collect(),
        gamma,
    }
}

/// Bounded search over plain interpretations; rejects modal formulas.
pub fn bounded_sat_fo(f: &Formula, opts: &SatOptions) -> Result<Option<FOInterpretation>> {
    if contains_dia(f) {
        return Err(Error::ModalInPlainFormula);
    }
    let one_world = SatOptions {
        max_worlds: 1,
        ..opts.clone()
    };
    Ok(bounded_sat(f, &one_world)?.map(|m| m.world_interpretation(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_structure};
    use crate::syntax::Comparator;

    fn small() -> StandpointStructure {
        parse_structure(
            "(structure (domain d0 d1) (worlds p0 p1) (sigma (s p1))
              (world p0 (P d0))
              (world p1 (P d0) (P d1) (Q d0)))",
        )
        .unwrap()
    }

    fn assign(pairs: &[(&str, &str)]) -> Assignment {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn eval_atoms_and_counting() {
        let m = small();
        let (p, _) = parse_formula("(P x)").unwrap();
        assert!(eval(&m, "p0", &assign(&[("x", "d0")]), &p).unwrap());
        assert!(!eval(&m, "p0", &assign(&[("x", "d1")]), &p).unwrap());
        let (one, _) = parse_formula("(exists=1 x (P x))").unwrap();
        assert!(eval(&m, "p0", &assign(&[]), &one).unwrap());
        assert!(!eval(&m, "p1", &assign(&[]), &one).unwrap(), "extension of size 2");
    }

    #[test]
    fn diamond_jumps_worlds() {
        let m = small();
        let (f, _) = parse_formula("(dia s (Q x))").unwrap();
        assert!(eval(&m, "p0", &assign(&[("x", "d0")]), &f).unwrap());
        let (g, _) = parse_formula("(dia (diff * s) (Q x))").unwrap();
        assert!(!eval(&m, "p0", &assign(&[("x", "d0")]), &g).unwrap());
        let (h, _) = parse_formula("(dia t (Q x))").unwrap();
        assert!(!eval(&m, "p0", &assign(&[("x", "d0")]), &h).unwrap(), "unmapped symbol is empty");
    }

    #[test]
    fn eval_error_cases() {
        let m = small();
        let (p, _) = parse_formula("(P x)").unwrap();
        assert!(matches!(
            eval(&m, "p0", &assign(&[]), &p),
            Err(Error::UnassignedVariable(_))
        ));
        assert!(matches!(
            eval(&m, "p9", &assign(&[("x", "d0")]), &p),
            Err(Error::UnknownWorld(_))
        ));
        let (c, _) = parse_formula("(= #a x)").unwrap();
        assert!(matches!(
            eval(&m, "p0", &assign(&[("x", "d0")]), &c),
            Err(Error::UnknownConstant(_))
        ));
    }

    #[test]
    fn fo_evaluation() {
        let i = FOInterpretation {
            domain: vec!["d0".into()],
            consts: BTreeMap::new(),
            ext: BTreeMap::new(),
        };
        let (f, _) = parse_formula("(exists>=1 x (P x))").unwrap();
        assert!(!models_fo(&i, &f).unwrap());
        let (eq, _) = parse_formula("(= x y)").unwrap();
        let v = BTreeMap::from([("x".to_string(), 0), ("y".to_string(), 0)]);
        assert!(eval_fo(&i, &v, &eq).unwrap());
        let (d, _) = parse_formula("(dia * (P x))").unwrap();
        assert!(matches!(eval_fo(&i, &v, &d), Err(Error::ModalInPlainFormula)));
    }

    #[test]
    fn rigidity() {
        let m = small();
        assert!(!is_rigid(&m, "P"));
        assert!(!is_rigid(&m, "Q"));
        assert!(is_rigid(&m, "Absent"));
        let r = parse_structure(
            "(structure (domain d0) (worlds p0 p1) (world p0 (P d0)) (world p1 (P d0)))",
        )
        .unwrap();
        assert!(is_rigid(&r, "P"));
    }

    #[test]
    fn permutation_group_sizes() {
        let m = parse_structure(
            "(structure (domain a b c) (worlds p0) (world p0 (E a) (E b)))",
        )
        .unwrap();
        let e = vec!["E".to_string()];
        assert_eq!(e_type_permutations(&m, &e).unwrap().len(), 2);
        assert_eq!(e_type_permutations(&m, &[]).unwrap().len(), 6);
        let distinct = parse_structure(
            "(structure (domain a b) (worlds p0) (world p0 (E a)))",
        )
        .unwrap();
        assert_eq!(e_type_permutations(&distinct, &e).unwrap().len(), 1);
        let id = &e_type_permutations(&m, &e).unwrap()[0];
        assert_eq!((0..3).map(|x| id.apply(x)).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn non_rigid_e_pred_rejected() {
        let m = small();
        let err = e_type_permutations(&m, &["P".to_string()]).unwrap_err();
        assert!(matches!(err, Error::NonRigidEPredicate(_)));
    }

    #[test]
    fn closure_size_and_identity() {
        let m = parse_structure(
            "(structure (domain a b c) (worlds p0 p1) (sigma (s p0))
              (world p0 (E a) (E b) (R a b))
              (world p1 (E a) (E b)))",
        )
        .unwrap();
        let c = permutational_closure(&m, &["E".to_string()]).unwrap();
        assert_eq!(c.worlds.len(), 4);
        assert_eq!(c.worlds[0], "p0_f0");
        // identity world keeps the original extensions
        assert_eq!(c.gamma[0], m.gamma[0]);
        // swapped world moves R along the permutation a↔b
        assert_eq!(
            c.gamma[1].get("R"),
            Some(&Extension::Binary(BTreeSet::from([(1, 0)])))
        );
        assert_eq!(c.sigma["s"], BTreeSet::from([0, 1]));

        let single = parse_structure(
            "(structure (domain a b) (worlds p0) (world p0 (E a)))",
        )
        .unwrap();
        let cs = permutational_closure(&single, &["E".to_string()]).unwrap();
        assert_eq!(cs.worlds.len(), 1);
        assert_eq!(cs.gamma, single.gamma);
    }

    #[test]
    fn closure_guards() {
        let mut m = small();
        m.domain = (0..6).map(|i| format!("e{i}")).collect();
        assert!(matches!(
            permutational_closure(&m, &[]),
            Err(Error::ClosureTooLarge(_))
        ));
        let five = parse_structure(
            "(structure (domain a b c d e) (worlds p0 p1) (world p0) (world p1))",
        )
        .unwrap();
        // 2 * 5! = 240 worlds is within the guard
        assert_eq!(permutational_closure(&five, &[]).unwrap().worlds.len(), 240);
    }

    #[test]
    fn stacking_shape() {
        let m = parse_structure(
            "(structure (domain a b) (worlds p0 p1) (world p0 (P a)) (world p1 (P a) (P b) (R a b)))",
        )
        .unwrap();
        let i = stacked_interpretation(&m).unwrap();
        assert_eq!(i.domain, vec!["a_0", "a_1", "b_0", "b_1"]);
        assert_eq!(
            i.ext.get("F"),
            Some(&Extension::Binary(BTreeSet::from([(0, 1), (2, 3)])))
        );
        // layer 1 carries world p1's extensions
        assert_eq!(
            i.ext.get("P"),
            Some(&Extension::Unary(BTreeSet::from([0, 1, 3])))
        );
        assert_eq!(
            i.ext.get("R"),
            Some(&Extension::Binary(BTreeSet::from([(1, 3)])))
        );
        assert_eq!(
            i.ext.get("L_0"),
            Some(&Extension::Unary(BTreeSet::from([1, 3])))
        );
    }

    #[test]
    fn stacking_levels_are_binary_counters() {
        let m = parse_structure(
            "(structure (domain a) (worlds p0 p1 p2 p3) (world p0) (world p1) (world p2) (world p3))",
        )
        .unwrap();
        let i = stacked_interpretation(&m).unwrap();
        // element (a,3) lies in both level predicates
        let l0 = i.ext.get("L_0").unwrap();
        let l1 = i.ext.get("L_1").unwrap();
        assert!(holds_atom(Some(l0), &[3]) && holds_atom(Some(l1), &[3]));
        assert!(!holds_atom(Some(l0), &[2]) && holds_atom(Some(l1), &[2]));
    }

    #[test]
    fn stacking_rejects_bad_world_counts() {
        let m = parse_structure(
            "(structure (domain a) (worlds p0 p1 p2) (world p0) (world p1) (world p2))",
        )
        .unwrap();
        assert!(matches!(
            stacked_interpretation(&m),
            Err(Error::WorldCountNotPowerOfTwo(3))
        ));
    }

    #[test]
    fn extraction_round_trip() {
        let m = parse_structure(
            "(structure (domain a b) (worlds p0 p1) (world p0 (P a)) (world p1 (P a) (P b) (R a b)))",
        )
        .unwrap();
        let i = stacked_interpretation(&m).unwrap();
        let back = extract_structure(&i, 1).unwrap();
        assert_eq!(back.domain, vec!["a_0", "b_0"]);
        assert_eq!(back.worlds, vec!["w0", "w1"]);
        assert_eq!(back.gamma, m.gamma);
    }

    #[test]
    fn extraction_single_layer() {
        let i = FOInterpretation {
            domain: vec!["a".into(), "b".into()],
            consts: BTreeMap::new(),
            ext: BTreeMap::from([("P".to_string(), Extension::Unary(BTreeSet::from([0])))]),
        };
        let m = extract_structure(&i, 0).unwrap();
        assert_eq!(m.worlds.len(), 1);
        assert_eq!(m.domain, i.domain);
        assert_eq!(m.gamma[0], i.ext);
    }

    #[test]
    fn extraction_rejects_broken_chain() {
        let m = parse_structure(
            "(structure (domain a b) (worlds p0 p1) (world p0) (world p1))",
        )
        .unwrap();
        let mut i = stacked_interpretation(&m).unwrap();
        // cut one F-edge: F1 (everything below the top level has a successor) fails
        i.ext.insert(
            "F".to_string(),
            Extension::Binary(BTreeSet::from([(0, 1)])),
        );
        assert!(matches!(
            extract_structure(&i, 1),
            Err(Error::NotAStackModel(_))
        ));
    }

    #[test]
    fn padding() {
        let m = small();
        assert_eq!(pad_precisifications(&m, 2), m);
        let p = pad_precisifications(&m, 4);
        assert_eq!(p.worlds, vec!["p0", "p1", "p0_c1", "p0_c2"]);
        assert_eq!(p.gamma[2], m.gamma[0]);
        assert_eq!(p.gamma[3], m.gamma[0]);
        // p0 is not in sigma(s), so the copies are not either
        assert_eq!(p.sigma["s"], BTreeSet::from([1]));
        let (f, _) = parse_formula("(dia s (Q x))").unwrap();
        for w in &p.worlds {
            assert!(eval(&p, w, &assign(&[("x", "d0")]), &f).unwrap());
        }
    }

    #[test]
    fn witness_selection_without_diamonds() {
        let m = parse_structure(
            "(structure (domain d0) (worlds p0 p1) (world p0 (P d0)) (world p1 (P d0)))",
        )
        .unwrap();
        let (f, _) = parse_formula("(exists>=1 x (P x))").unwrap();
        let w = witness_selection(&m, &f).unwrap();
        assert_eq!(w.worlds, vec!["p0"]);
    }

    #[test]
    fn witness_selection_rejects_non_models() {
        let m = small();
        let (f, _) = parse_formula("(exists=0 x (P x))").unwrap();
        assert!(matches!(
            witness_selection(&m, &f),
            Err(Error::InputNotAModel)
        ));
    }

    #[test]
    fn bounded_sat_smallest_witnesses() {
        let (f, _) = parse_formula("(dia * (exists>=1 x (P x)))").unwrap();
        let m = bounded_sat(&f, &SatOptions::default()).unwrap().unwrap();
        assert_eq!(m.domain.len(), 1);
        assert_eq!(m.worlds.len(), 1);
        assert_eq!(
            m.gamma[0].get("P"),
            Some(&Extension::Unary(BTreeSet::from([0])))
        );
        assert!(models(&m, &f).unwrap());
    }

    #[test]
    fn bounded_sat_counting_forces_two_elements() {
        let (f, _) = parse_formula("(exists=2 x (P x))").unwrap();
        let narrow = SatOptions {
            max_domain: 1,
            ..SatOptions::default()
        };
        assert!(bounded_sat(&f, &narrow).unwrap().is_none());
        let m = bounded_sat(&f, &SatOptions::default()).unwrap().unwrap();
        assert_eq!(m.domain.len(), 2);
        assert!(models(&m, &f).unwrap());
    }

    #[test]
    fn bounded_sat_exhausts_unsat() {
        let (f, _) = parse_formula(
            "(and (box * (forall x (P x))) (dia * (exists>=1 x (not (P x)))))",
        )
        .unwrap();
        assert!(bounded_sat(&f, &SatOptions::default()).unwrap().is_none());
    }

    #[test]
    fn bounded_sat_is_deterministic() {
        let (f, _) = parse_formula("(and (dia s (N)) (dia (diff * s) (not (N))))").unwrap();
        let a = bounded_sat(&f, &SatOptions::default()).unwrap().unwrap();
        let b = bounded_sat(&f, &SatOptions::default()).unwrap().unwrap();
        assert_eq!(a, b);
        assert!(models(&a, &f).unwrap());
    }

    #[test]
    fn bounded_sat_budget() {
        let (f, _) = parse_formula(
            "(and (box * (forall x (P x))) (dia * (exists>=1 x (not (P x)))))",
        )
        .unwrap();
        let tiny = SatOptions {
            budget: 5,
            ..SatOptions::default()
        };
        assert!(matches!(
            bounded_sat(&f, &tiny),
            Err(Error::SearchSpaceTooLarge(5))
        ));
    }

    #[test]
    fn bounded_sat_requires_sentences() {
        let (f, _) = parse_formula("(P x)").unwrap();
        assert!(matches!(
            bounded_sat(&f, &SatOptions::default()),
            Err(Error::FreeVariables(_))
        ));
    }

    #[test]
    fn bounded_sat_fo_examples() {
        let (f, _) = parse_formula("(exists>=1 x (P x))").unwrap();
        let i = bounded_sat_fo(&f, &SatOptions::default()).unwrap().unwrap();
        assert_eq!(i.domain.len(), 1);
        let (g, _) = parse_formula("(and (forall x (P x)) (exists>=1 x (not (P x))))").unwrap();
        assert!(bounded_sat_fo(&g, &SatOptions::default()).unwrap().is_none());
        let (d, _) = parse_formula("(dia * (P x))").unwrap();
        assert!(matches!(
            bounded_sat_fo(&Formula::exists("x", d), &SatOptions::default()),
            Err(Error::ModalInPlainFormula)
        ));
    }

    #[test]
    fn rigid_preds_are_shared_across_worlds() {
        // rigid P: Dia(P) at one world forces P everywhere
        let (f, _) = parse_formula(
            "(and (dia * (exists>=1 x (E x x))) (dia * (exists=0 x (E x x))))",
        )
        .unwrap();
        let rigid = SatOptions {
            rigid_preds: BTreeSet::from(["E".to_string()]),
            ..SatOptions::default()
        };
        assert!(bounded_sat(&f, &rigid).unwrap().is_none());
        assert!(bounded_sat(&f, &SatOptions::default()).unwrap().is_some());
    }

    #[test]
    fn counting_comparators() {
        assert!(Comparator::Leq.holds(1, 2));
        assert!(!Comparator::Geq.holds(1, 2));
        assert!(Comparator::Eq.holds(2, 2));
    }
}
