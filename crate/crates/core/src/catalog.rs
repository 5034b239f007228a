//! Built-in principles, their infinite witness models presented by
//! evaluators, and largeness checks.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partial::{find_embedding, induced_substructure, is_embedding, PartialStructure, PointSource};
use crate::syntax::{parse_principle, BasicSentence, Language};
use crate::util::tuples;

/// The reserved point standing for ∞ in models over ℕ ∪ {∞}.
pub const INFINITY: u64 = u64::MAX;

pub type FunEval = Arc<dyn Fn(&[u64]) -> u64 + Send + Sync>;
pub type RelEval = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Evaluator {
    Fun(FunEval),
    Rel(RelEval),
}

type Candidates = Arc<dyn Fn(usize) -> Vec<Vec<u64>> + Send + Sync>;
type Normalizer = Arc<dyn Fn(&[u64], usize) -> Option<(usize, Vec<u64>)> + Send + Sync>;

/// An infinite structure given by total evaluators, together with its
/// designated large finite slices.
#[derive(Clone)]
pub struct ComputableModel {
    pub name: String,
    language: Language,
    evaluators: Vec<Evaluator>,
    candidates: Candidates,
    normalize: Normalizer,
    g: fn(usize) -> usize,
    special: Vec<u64>,
}

impl fmt::Debug for ComputableModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComputableModel").field("name", &self.name).finish_non_exhaustive()
    }
}

impl ComputableModel {
    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn fun(&self, sym: usize, args: &[u64]) -> u64 {
        match &self.evaluators[sym] {
            Evaluator::Fun(f) => f(args),
            Evaluator::Rel(_) => panic!("symbol {sym} is a relation"),
        }
    }

    pub fn rel(&self, sym: usize, args: &[u64]) -> bool {
        match &self.evaluators[sym] {
            Evaluator::Rel(r) => r(args),
            Evaluator::Fun(_) => panic!("symbol {sym} is a function"),
        }
    }

    /// The claimed overflow bound g(n).
    pub fn g(&self, n: usize) -> usize {
        (self.g)(n)
    }

    /// Reserved points outside ℕ (like ∞).
    pub fn special_points(&self) -> &[u64] {
        &self.special
    }

    /// The designated large slice on n points.
    pub fn canonical_slice(&self, n: usize) -> Vec<u64> {
        (self.candidates)(n).swap_remove(0)
    }

    /// All designated large slices on n points (the canonical one first).
    pub fn large_slices(&self, n: usize) -> Vec<Vec<u64>> {
        (self.candidates)(n)
    }

    /// Maps a finite point set into one of the large slices by an embedding of
    /// the induced substructures. The model's own hint is tried first and
    /// verified; if it fails, a complete embedding search is run against each
    /// slice. Returns the slice and the images (in the order of `points`).
    pub fn embed_into_large(&self, points: &[u64]) -> Result<Option<(Vec<u64>, Vec<u64>)>> {
        let n = points.len();
        let slices = self.large_slices(n);
        let src = induced_substructure(self, points)?;
        if let Some((k, images)) = (self.normalize)(points, n) {
            if let Some(slice) = slices.get(k) {
                let tgt = induced_substructure(self, slice)?;
                let pos: std::collections::HashMap<u64, u32> =
                    slice.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
                let map: Option<Vec<u32>> = images.iter().map(|x| pos.get(x).copied()).collect();
                if let Some(map) = map {
                    if is_embedding(&src, &tgt, &map) {
                        return Ok(Some((slice.clone(), images)));
                    }
                }
            }
        }
        for slice in slices {
            let tgt = induced_substructure(self, &slice)?;
            if let Some(map) = find_embedding(&src, &tgt)? {
                let images = map.iter().map(|&i| slice[i as usize]).collect();
                return Ok(Some((slice, images)));
            }
        }
        Ok(None)
    }
}

impl PointSource for ComputableModel {
    fn language(&self) -> &Language {
        &self.language
    }

    fn contains_point(&self, _p: u64) -> bool {
        true
    }

    fn fun_at(&self, sym: usize, args: &[u64]) -> Option<u64> {
        Some(self.fun(sym, args))
    }

    fn rel_at(&self, sym: usize, args: &[u64]) -> Option<bool> {
        Some(self.rel(sym, args))
    }
}

/// Function values on tuples from `b0` that land outside `b0`.
pub fn overflow_set(model: &ComputableModel, b0: &[u64]) -> BTreeSet<u64> {
    let inside: HashSet<u64> = b0.iter().copied().collect();
    let mut out = BTreeSet::new();
    if b0.is_empty() {
        return out;
    }
    for (s, sym) in model.language.symbols.iter().enumerate() {
        if !sym.is_function() {
            continue;
        }
        for idx in tuples(b0.len() as u32, sym.arity) {
            let args: Vec<u64> = idx.iter().map(|&i| b0[i as usize]).collect();
            let v = model.fun(s, &args);
            if !inside.contains(&v) {
                out.insert(v);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct LargenessReport {
    pub n: usize,
    pub overflow: Vec<u64>,
    pub g: usize,
    pub samples: usize,
}

/// Checks that the canonical slice on n points overflows by at most g(n)
/// points and, for n ≤ `sample_up_to`, that random induced substructures on n
/// points embed into a large slice.
pub fn check_largeness(model: &ComputableModel, n: usize, samples: usize, seed: u64) -> Result<LargenessReport> {
    if n == 0 {
        return Err(Error::Contract("largeness needs n ≥ 1".into()));
    }
    let slice = model.canonical_slice(n);
    let v: Vec<u64> = overflow_set(model, &slice).into_iter().collect();
    let g = model.g(n);
    if v.len() > g {
        return Err(Error::Hypothesis(format!(
            "largeness violated at n={n}: |V|={} > g(n)={g}",
            v.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    for _ in 0..samples {
        let mut pool: Vec<u64> = (0..(3 * n as u64 + 2)).collect();
        pool.shuffle(&mut rng);
        let mut pts: Vec<u64> = pool.into_iter().take(n).collect();
        for &sp in model.special_points() {
            if rng.gen_bool(0.5) {
                pts[rng.gen_range(0..n)] = sp;
            }
        }
        pts.sort_unstable();
        pts.dedup();
        if model.embed_into_large(&pts)?.is_none() {
            return Err(Error::Hypothesis(format!(
                "largeness violated at n={n}: sample {pts:?} embeds into no large slice"
            )));
        }
    }
    Ok(LargenessReport { n, overflow: v, g, samples })
}

/// The recorded weak/strong classification of a principle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub weak: Option<bool>,
    pub strong: Option<bool>,
    pub valid_in_finite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Exact,
    GreaterThan,
}

/// A recorded determinacy formula; `eval` returns `None` where it makes no claim.
#[derive(Debug, Clone, Copy)]
pub struct DeterminacyClaim {
    pub kind: BoundKind,
    pub formula: &'static str,
    pub eval: fn(u64) -> Option<u64>,
}

#[derive(Debug, Clone)]
pub struct PrincipleEntry {
    pub name: &'static str,
    pub sentence: BasicSentence,
    pub model: Option<Arc<ComputableModel>>,
    pub classification: Classification,
    pub determinacy: Option<DeterminacyClaim>,
    pub notes: &'static str,
}

const PHP: &str = "principle PHP {
  language { f/1 fun, c/0 fun }
  exists x y u . (f(x)=u & f(y)=u & x!=y) | (f(x)=u & c()=u)
}";

const OPHP: &str = "principle OPHP {
  language { f/1 fun, g/1 fun, c/0 fun }
  exists x u v w . (c()=u & g(u)=v & v!=u) | (f(x)=u & c()=u) | (f(x)=u & g(u)=v & v!=x) | (c()=u & u!=x & g(x)=v & f(v)=w & w!=x)
}";

const LPHP: &str = "principle LPHP {
  language { f/1 fun, g/1 fun, c/0 fun }
  exists x u v . (c()=u & g(u)=v & v!=u) | (f(x)=u & c()=u) | (f(x)=u & g(u)=v & v!=x)
}";

const WPHP: &str = "principle WPHP {
  language { f/2 fun }
  exists x y x' y' z . (f(x,y)=z & f(x',y')=z & x!=x') | (f(x,y)=z & f(x',y')=z & y!=y')
}";

const WPHP2: &str = "principle WPHP' {
  language { f/1 fun, g/1 fun }
  exists x y u . (f(x)=u & f(y)=u & x!=y) | (g(x)=u & g(y)=u & x!=y) | (f(x)=u & g(y)=u)
}";

const RPHP: &str = "principle rPHP {
  language { g/2 fun, f0/1 fun, f1/1 fun }
  exists x y u v . (g(x,y)=u & f0(u)=v & v!=x) | (g(x,y)=u & f1(u)=v & v!=y)
}";

const PAR: &str = "principle PAR {
  language { f/1 fun }
  exists x u v . (f(x)=u & f(u)=v & x!=v) | f(x)=x
}";

const HOP: &str = "principle HOP {
  language { f/1 fun, prec/2 rel }
  exists x y z u . prec(x,x) | (prec(x,y) & prec(y,z) & !prec(x,z)) | (f(x)=u & !prec(u,x))
}";

const IND: &str = "principle IND {
  language { P/1 rel, s/1 fun, prec/2 rel, min/0 fun, max/0 fun }
  exists x y z u v . prec(x,x)
    | (prec(x,y) & prec(y,z) & !prec(x,z))
    | (!prec(x,y) & !prec(y,x) & x!=y)
    | (min()=u & prec(x,u))
    | (max()=u & prec(u,x))
    | (prec(x,y) & s(x)=u & prec(y,u))
    | (max()=u & u!=x & s(x)=v & !prec(x,v))
    | (min()=u & !P(u))
    | (max()=u & P(u))
    | (P(x) & s(x)=u & !P(u))
}";

// Boolean algebra equations: commutativity, associativity and absorption for
// join and meet, one distributive law, and the two complement laws.
const HAP: &str = "principle HAP {
  language { join/2 fun, meet/2 fun, compl/1 fun, f/1 fun, zero/0 fun, one/0 fun }
  exists x y z u v w t s .
      (join(x,y)=u & join(y,x)=v & u!=v)
    | (meet(x,y)=u & meet(y,x)=v & u!=v)
    | (join(y,z)=u & join(x,u)=v & join(x,y)=w & join(w,z)=t & v!=t)
    | (meet(y,z)=u & meet(x,u)=v & meet(x,y)=w & meet(w,z)=t & v!=t)
    | (meet(x,y)=u & join(x,u)=v & v!=x)
    | (join(x,y)=u & meet(x,u)=v & v!=x)
    | (join(y,z)=u & meet(x,u)=v & meet(x,y)=w & meet(x,z)=t & join(w,t)=s & v!=s)
    | (compl(x)=u & join(x,u)=v & one()=w & v!=w)
    | (compl(x)=u & meet(x,u)=v & zero()=w & v!=w)
    | (zero()=u & f(u)=v & v!=u)
    | (f(x)=u & meet(u,x)=v & v!=u)
    | (f(x)=x & zero()=u & x!=u)
}";

const HDP: &str = "principle HDP {
  language { prec/2 rel, b/2 fun, zero/0 fun, one/0 fun }
  exists x y z u v . prec(x,x)
    | (prec(x,y) & prec(y,z) & !prec(x,z))
    | (prec(x,y) & b(x,y)=u & !prec(u,y))
    | (prec(x,y) & b(x,y)=u & !prec(x,u))
    | (zero()=u & one()=v & !prec(u,v))
}";

const ITER: &str = "principle ITER {
  language { f/1 fun, builtin <, builtin 0 }
  exists y u w . (0=u & f(u)=u) | (f(y)=u & u<y) | (f(y)=u & y<u & f(u)=w & u=w)
}";

fn sorted_rank(points: &[u64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| points[i]);
    let mut out = vec![0u64; points.len()];
    for (rank, i) in order.into_iter().enumerate() {
        out[i] = rank as u64;
    }
    out
}

fn range(n: usize) -> Vec<u64> {
    (0..n as u64).collect()
}

fn linear_model(name: &str, language: Language, evaluators: Vec<Evaluator>) -> ComputableModel {
    ComputableModel {
        name: name.into(),
        language,
        evaluators,
        candidates: Arc::new(|n| vec![range(n)]),
        normalize: Arc::new(|pts, _| Some((0, sorted_rank(pts)))),
        g: |_| 1,
        special: vec![],
    }
}

fn fun(f: impl Fn(&[u64]) -> u64 + Send + Sync + 'static) -> Evaluator {
    Evaluator::Fun(Arc::new(f))
}

fn rel(r: impl Fn(&[u64]) -> bool + Send + Sync + 'static) -> Evaluator {
    Evaluator::Rel(Arc::new(r))
}

fn successor_model(lang: &Language) -> ComputableModel {
    linear_model(
        "successor",
        lang.clone(),
        vec![fun(|a| a[0].saturating_add(1)), fun(|_| 0)],
    )
}

fn successor_predecessor_model(lang: &Language) -> ComputableModel {
    linear_model(
        "successor-predecessor",
        lang.clone(),
        vec![fun(|a| a[0].saturating_add(1)), fun(|a| a[0].saturating_sub(1)), fun(|_| 0)],
    )
}

fn involution_model(lang: &Language) -> ComputableModel {
    ComputableModel {
        name: "involution".into(),
        language: lang.clone(),
        evaluators: vec![fun(|a| a[0] ^ 1)],
        candidates: Arc::new(|n| vec![range(n)]),
        normalize: Arc::new(|pts, _| {
            // whole pairs first, then the points whose partner is missing
            let set: HashSet<u64> = pts.iter().copied().collect();
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_by_key(|&i| (!set.contains(&(pts[i] ^ 1)), pts[i]));
            let mut out = vec![0u64; pts.len()];
            for (rank, i) in order.into_iter().enumerate() {
                out[i] = rank as u64;
            }
            Some((0, out))
        }),
        g: |_| 1,
        special: vec![],
    }
}

fn inverse_order_model(lang: &Language) -> ComputableModel {
    linear_model(
        "inverse-order",
        lang.clone(),
        vec![fun(|a| a[0].saturating_add(1)), rel(|a| a[1] < a[0])],
    )
}

fn induction_model(lang: &Language) -> ComputableModel {
    let succ = |x: u64| if x == INFINITY { INFINITY } else { x + 1 };
    ComputableModel {
        name: "naturals-with-infinity".into(),
        language: lang.clone(),
        evaluators: vec![
            rel(|a| a[0] != INFINITY),
            fun(move |a| succ(a[0])),
            rel(|a| a[0] < a[1]),
            fun(|_| 0),
            fun(|_| INFINITY),
        ],
        candidates: Arc::new(|n| {
            let mut with_inf = range(n.saturating_sub(1));
            with_inf.push(INFINITY);
            vec![range(n), with_inf]
        }),
        normalize: Arc::new(|pts, _| {
            if pts.contains(&INFINITY) {
                let finite: Vec<u64> = pts.iter().copied().filter(|&p| p != INFINITY).collect();
                let ranks = sorted_rank(&finite);
                let mut it = ranks.into_iter();
                Some((1, pts.iter().map(|&p| if p == INFINITY { INFINITY } else { it.next().unwrap() }).collect()))
            } else {
                Some((0, sorted_rank(pts)))
            }
        }),
        g: |_| 2,
        special: vec![INFINITY],
    }
}

fn log2_floor(n: u64) -> u64 {
    63 - n.max(1).leading_zeros() as u64
}

fn build() -> Vec<PrincipleEntry> {
    let p = |src: &str| parse_principle(src).expect("catalog principle parses");
    let php = p(PHP);
    let ophp = p(OPHP);
    let lphp = p(LPHP);
    let par = p(PAR);
    let hop = p(HOP);
    let ind = p(IND);
    let strong1 = || Classification { weak: Some(false), strong: Some(true), valid_in_finite: true };
    vec![
        PrincipleEntry {
            name: "PHP",
            model: Some(Arc::new(successor_model(&php.language))),
            sentence: php,
            classification: strong1(),
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "n+1", eval: |n| Some(n + 1) }),
            notes: "(n+1 to n) pigeonhole principle; the constant is written c() in basic form",
        },
        PrincipleEntry {
            name: "OPHP",
            model: Some(Arc::new(successor_predecessor_model(&ophp.language))),
            sentence: ophp,
            classification: strong1(),
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "2n+1", eval: |n| Some(2 * n + 1) }),
            notes: "onto pigeonhole principle; model adds the predecessor with g(0)=0",
        },
        PrincipleEntry {
            name: "LPHP",
            model: Some(Arc::new(successor_predecessor_model(&lphp.language))),
            sentence: lphp,
            classification: strong1(),
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "2n+1", eval: |n| Some(2 * n + 1) }),
            notes: "left pigeonhole principle",
        },
        PrincipleEntry {
            name: "WPHP",
            sentence: p(WPHP),
            model: None,
            classification: Classification { weak: Some(true), strong: Some(false), valid_in_finite: true },
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "n+1", eval: |n| Some(n + 1) }),
            notes: "n^2 to n weak pigeonhole principle",
        },
        PrincipleEntry {
            name: "WPHP'",
            sentence: p(WPHP2),
            model: None,
            classification: Classification { weak: Some(false), strong: Some(false), valid_in_finite: true },
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "n+1", eval: |n| Some(n + 1) }),
            notes: "2n to n weak pigeonhole principle",
        },
        PrincipleEntry {
            name: "rPHP",
            sentence: p(RPHP),
            model: None,
            classification: Classification { weak: Some(false), strong: Some(false), valid_in_finite: true },
            determinacy: None,
            notes: "n to n^2 retraction pigeonhole principle; fails on [1]",
        },
        PrincipleEntry {
            name: "PAR",
            model: Some(Arc::new(involution_model(&par.language))),
            sentence: par,
            classification: Classification { weak: Some(false), strong: Some(true), valid_in_finite: false },
            determinacy: Some(DeterminacyClaim {
                kind: BoundKind::Exact,
                formula: "n for odd n (recorded as 0 for even n, which is not a determinacy value: PAR fails on even [n])",
                eval: |n| (n % 2 == 1).then_some(n),
            }),
            notes: "parity principle; valid on odd universes only",
        },
        PrincipleEntry {
            name: "HOP",
            model: Some(Arc::new(inverse_order_model(&hop.language))),
            sentence: hop,
            classification: strong1(),
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "n^2+n", eval: |n| Some(n * n + n) }),
            notes: "Herbrandized ordering principle; the constants 0,1 listed with its language are unused and omitted",
        },
        PrincipleEntry {
            name: "IND",
            model: Some(Arc::new(induction_model(&ind.language))),
            sentence: ind,
            classification: Classification { weak: Some(false), strong: Some(true), valid_in_finite: true },
            determinacy: Some(DeterminacyClaim {
                kind: BoundKind::Exact,
                formula: "n^2+2n+2 for n>1",
                eval: |n| (n > 1).then_some(n * n + 2 * n + 2),
            }),
            notes: "induction principle; its model is N with a top point, 2-large",
        },
        PrincipleEntry {
            name: "HAP",
            sentence: p(HAP),
            model: None,
            classification: Classification { weak: Some(false), strong: Some(false), valid_in_finite: false },
            determinacy: Some(DeterminacyClaim {
                kind: BoundKind::GreaterThan,
                formula: "s_L(n) - log2(n) for n a power of 2",
                eval: |n| n.is_power_of_two().then(|| 2 * n * n + 2 * n + 2 - log2_floor(n)),
            }),
            notes: "Herbrandized atomicity principle; a finite Boolean algebra with f constantly 0 falsifies it",
        },
        PrincipleEntry {
            name: "HDP",
            sentence: p(HDP),
            model: None,
            classification: Classification { weak: Some(false), strong: Some(false), valid_in_finite: true },
            determinacy: Some(DeterminacyClaim {
                kind: BoundKind::GreaterThan,
                formula: "2n^2-2n for n>1",
                eval: |n| (n > 1).then(|| 2 * n * n - 2 * n),
            }),
            notes: "Herbrandized discreteness principle",
        },
        PrincipleEntry {
            name: "ITER",
            sentence: p(ITER),
            model: None,
            classification: Classification { weak: Some(false), strong: None, valid_in_finite: true },
            determinacy: Some(DeterminacyClaim { kind: BoundKind::Exact, formula: "n", eval: |n| Some(n) }),
            notes: "iteration principle with builtin order and numeral 0",
        },
    ]
}

fn catalog() -> &'static [PrincipleEntry] {
    static CATALOG: OnceLock<Vec<PrincipleEntry>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

pub fn names() -> Vec<&'static str> {
    catalog().iter().map(|e| e.name).collect()
}

pub fn entries() -> &'static [PrincipleEntry] {
    catalog()
}

/// Looks up a principle by name.
pub fn builtin(name: &str) -> Result<PrincipleEntry> {
    catalog()
        .iter()
        .find(|e| e.name == name)
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("principle `{name}`")))
}

/// DSL text followed by the recorded claims, as comment lines.
pub fn show(entry: &PrincipleEntry) -> String {
    let c = &entry.classification;
    let flag = |b: Option<bool>| match b {
        Some(true) => "yes",
        Some(false) => "no",
        None => "not recorded",
    };
    let mut out = entry.sentence.render();
    out.push_str(&format!("# {}\n", entry.notes));
    out.push_str(&format!(
        "# weak: {}; strong: {}; valid in the finite: {}\n",
        flag(c.weak),
        flag(c.strong),
        if c.valid_in_finite { "yes" } else { "no" },
    ));
    if let Some(d) = &entry.determinacy {
        let rel = match d.kind {
            BoundKind::Exact => "=",
            BoundKind::GreaterThan => ">",
        };
        out.push_str(&format!("# determinacy: d(n) {rel} {}\n", d.formula));
    }
    match &entry.model {
        Some(m) => out.push_str(&format!("# model: {} (overflow bound g = {})\n", m.name, m.g(1))),
        None => out.push_str("# model: none registered\n"),
    }
    out
}

/// A uniformly random total structure on [n].
pub fn random_total(lang: &Language, n: u32, rng: &mut impl Rng) -> Result<PartialStructure> {
    let mut a = PartialStructure::undefined(lang, n)?;
    for s in 0..lang.len() {
        let limit = if lang.symbol(s).is_function() { n } else { 2 };
        for i in 0..a.cell_count(s) {
            a.set_idx(s, i, Some(rng.gen_range(0..limit)))?;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial::{verifies, PointSource};

    #[test]
    fn catalog_loads_with_unique_names() {
        let names = names();
        let set: HashSet<_> = names.iter().collect();
        assert_eq!(set.len(), names.len());
        assert_eq!(names.len(), 12);
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn php_shape() {
        let e = builtin("PHP").unwrap();
        assert_eq!(e.sentence.language.len(), 2);
        assert_eq!(e.sentence.matrix.len(), 2);
    }

    #[test]
    fn hop_shape() {
        let e = builtin("HOP").unwrap();
        let names: Vec<_> = e.sentence.language.symbols.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, vec!["f", "prec"]);
        assert_eq!(e.sentence.matrix.len(), 3);
    }

    #[test]
    fn iter_has_builtins() {
        let e = builtin("ITER").unwrap();
        assert!(e.sentence.language.has_less() && e.sentence.language.has_numerals());
    }

    #[test]
    fn successor_slice_induced() {
        let m = builtin("PHP").unwrap().model.unwrap();
        let a = induced_substructure(m.as_ref(), &[0, 1, 2]).unwrap();
        assert_eq!(a.get(0, &[0]), Some(1));
        assert_eq!(a.get(0, &[1]), Some(2));
        assert_eq!(a.get(0, &[2]), None);
    }

    #[test]
    fn overflow_examples() {
        let m = builtin("PHP").unwrap().model.unwrap();
        assert_eq!(overflow_set(&m, &[0, 1, 2]), BTreeSet::from([3]));
        assert!(overflow_set(&m, &[]).is_empty());
        let h = builtin("HOP").unwrap().model.unwrap();
        assert_eq!(overflow_set(&h, &range(7)), BTreeSet::from([7]));
    }

    #[test]
    fn overflow_is_exact_and_minimal() {
        for name in ["PHP", "OPHP", "PAR", "HOP", "IND"] {
            let m = builtin(name).unwrap().model.unwrap();
            let lang = m.language().clone();
            for n in 1..10u64 {
                let b0 = m.canonical_slice(n as usize);
                // independent oracle: all values of unary and nullary symbols
                let mut values = BTreeSet::new();
                for (s, sym) in lang.symbols.iter().enumerate() {
                    match (sym.is_function(), sym.arity) {
                        (true, 0) => {
                            values.insert(m.fun(s, &[]));
                        }
                        (true, 1) => values.extend(b0.iter().map(|&a| m.fun(s, &[a]))),
                        (true, _) => unreachable!(),
                        _ => {}
                    }
                }
                let expected: BTreeSet<u64> = values.iter().copied().filter(|v| !b0.contains(v)).collect();
                let v = overflow_set(&m, &b0);
                assert_eq!(v, expected, "{name} n={n}");
                // every point of V is a value, so no proper subset covers the overflow
                assert!(v.iter().all(|x| values.contains(x)));
            }
        }
    }

    #[test]
    fn slices_do_not_verify() {
        for e in entries() {
            let Some(m) = &e.model else { continue };
            for n in 1..=8 {
                for slice in m.large_slices(n) {
                    let a = induced_substructure(m.as_ref(), &slice).unwrap();
                    assert!(!verifies(&a, &e.sentence), "{} n={n}", e.name);
                }
            }
        }
    }

    #[test]
    fn largeness_small() {
        for e in entries() {
            let Some(m) = &e.model else { continue };
            for n in 1..=8 {
                let r = check_largeness(m, n, 20, 7).unwrap();
                assert!(r.overflow.len() <= m.g(n));
            }
        }
        let ind = builtin("IND").unwrap().model.unwrap();
        assert!(check_largeness(&ind, 10, 10, 1).unwrap().overflow.len() <= 2);
        assert!(ind.contains_point(INFINITY));
    }

    #[test]
    fn show_mentions_claims() {
        let text = show(&builtin("WPHP").unwrap());
        assert!(text.contains("weak: yes") && text.contains("d(n) = n+1"));
    }
}
