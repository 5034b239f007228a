//! Quantifier-free interpretations between principles and the many-one
//! reductions they induce: apply I to a source structure, transport
//! falsification, and pull target witnesses back to source witnesses.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog;
use crate::error::{Error, Result};
use crate::partial::{eval_basic, find_witness, find_witness_in, witness_value, PartialStructure, TruthValue, Witness};
use crate::syntax::{parse_formula, parse_term, BasicSentence, Formula, Language, SymbolKind, Term};
use crate::util::tuples;

/// δ_S for one target symbol S. For a function symbol the last parameter is
/// the value variable and `herbrand` lists terms one of which always satisfies δ_S.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub symbol: usize,
    pub params: Vec<String>,
    pub formula: Formula,
    pub herbrand: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub name: String,
    pub source: BasicSentence,
    pub target: BasicSentence,
    /// Indexed by target symbol.
    pub defs: Vec<Definition>,
}

// ---------------------------------------------------------------------------
// Evaluation against a cell reader

/// Why evaluation stopped early.
#[derive(Debug)]
pub(crate) enum Stop {
    /// A cell the reader could not supply.
    Missing(usize, Vec<u32>),
    Fail(Error),
}

type Reader<'a> = dyn FnMut(usize, &[u32]) -> Option<u32> + 'a;

fn lookup(env: &[(String, u32)], v: &str) -> std::result::Result<u32, Stop> {
    env.iter()
        .rev()
        .find(|(name, _)| name == v)
        .map(|(_, x)| *x)
        .ok_or_else(|| Stop::Fail(Error::UnknownVariable(v.to_string())))
}

pub(crate) fn eval_term(t: &Term, n: u32, env: &[(String, u32)], read: &mut Reader) -> std::result::Result<u32, Stop> {
    match t {
        Term::Var(v) => lookup(env, v),
        Term::Param(p) => Ok(*p),
        Term::Num(k) if *k < n as u64 => Ok(*k as u32),
        Term::Num(k) => Err(Stop::Fail(Error::OutOfRange(format!("numeral {k} on [{n}]")))),
        Term::App(s, args) => {
            let vals = args.iter().map(|a| eval_term(a, n, env, read)).collect::<std::result::Result<Vec<_>, _>>()?;
            read(*s, &vals).ok_or(Stop::Missing(*s, vals))
        }
    }
}

pub(crate) fn eval_formula(f: &Formula, n: u32, env: &[(String, u32)], read: &mut Reader) -> std::result::Result<bool, Stop> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Eq(a, b) => eval_term(a, n, env, read)? == eval_term(b, n, env, read)?,
        Formula::Less(a, b) => eval_term(a, n, env, read)? < eval_term(b, n, env, read)?,
        Formula::Rel(s, args) => {
            let vals = args.iter().map(|a| eval_term(a, n, env, read)).collect::<std::result::Result<Vec<_>, _>>()?;
            read(*s, &vals).ok_or(Stop::Missing(*s, vals))? == 1
        }
        Formula::Not(g) => !eval_formula(g, n, env, read)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval_formula(g, n, env, read)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval_formula(g, n, env, read)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Forall(..) | Formula::Exists(..) => {
            return Err(Stop::Fail(Error::Contract("definitions must be quantifier free".into())))
        }
    })
}

/// Number of symbol applications in a term.
fn term_apps(t: &Term) -> usize {
    match t {
        Term::App(_, args) => 1 + args.iter().map(term_apps).sum::<usize>(),
        _ => 0,
    }
}

/// Number of cell reads an evaluation of f can make.
pub(crate) fn formula_apps(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False => 0,
        Formula::Eq(a, b) | Formula::Less(a, b) => term_apps(a) + term_apps(b),
        Formula::Rel(_, args) => 1 + args.iter().map(term_apps).sum::<usize>(),
        Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => formula_apps(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().map(formula_apps).sum(),
    }
}

impl Definition {
    fn env(&self, args: &[u32], value: Option<u32>) -> Vec<(String, u32)> {
        self.params.iter().cloned().zip(args.iter().copied().chain(value)).collect()
    }

    /// Whether δ_S(args, value) holds; `value` only for function symbols.
    pub(crate) fn holds(&self, n: u32, args: &[u32], value: Option<u32>, read: &mut Reader) -> std::result::Result<bool, Stop> {
        eval_formula(&self.formula, n, &self.env(args, value), read)
    }

    pub(crate) fn herbrand_value(&self, i: usize, n: u32, args: &[u32], read: &mut Reader) -> std::result::Result<u32, Stop> {
        eval_term(&self.herbrand[i], n, &self.env(args, None), read)
    }

    /// Upper bound on the cell reads made by testing the Herbrand terms in
    /// turn, or by evaluating δ_S once for a relation.
    pub fn read_bound(&self, kind: SymbolKind) -> usize {
        match kind {
            SymbolKind::Relation => formula_apps(&self.formula),
            SymbolKind::Function => self.herbrand.iter().map(|t| term_apps(t) + formula_apps(&self.formula)).sum(),
        }
    }

    /// The value S takes at `args` by the Herbrand route: the first term
    /// satisfying δ_S, or `None` if no term does.
    pub(crate) fn herbrand_pick(&self, n: u32, args: &[u32], read: &mut Reader) -> std::result::Result<Option<u32>, Stop> {
        for i in 0..self.herbrand.len() {
            let y = self.herbrand_value(i, n, args, read)?;
            if self.holds(n, args, Some(y), read)? {
                return Ok(Some(y));
            }
        }
        Ok(None)
    }
}

fn total_reader(b: &PartialStructure) -> impl FnMut(usize, &[u32]) -> Option<u32> + '_ {
    move |s, args| b.get(s, args)
}

fn unstop(s: Stop) -> Error {
    match s {
        Stop::Missing(sym, args) => Error::Contract(format!("cell {sym}{args:?} is undefined")),
        Stop::Fail(e) => e,
    }
}

// ---------------------------------------------------------------------------
// Construction and the DSL

impl Interpretation {
    pub fn source_language(&self) -> &Language {
        &self.source.language
    }

    pub fn target_language(&self) -> &Language {
        &self.target.language
    }

    /// Each target symbol read through itself; source and target coincide.
    pub fn identity(phi: &BasicSentence) -> Interpretation {
        let lang = &phi.language;
        let defs = lang
            .symbols
            .iter()
            .enumerate()
            .map(|(sym, s)| {
                let xs: Vec<String> = (0..s.arity).map(|i| format!("x{i}")).collect();
                let app = Term::App(sym, xs.iter().cloned().map(Term::Var).collect());
                match s.kind {
                    SymbolKind::Relation => {
                        let args = xs.iter().cloned().map(Term::Var).collect();
                        Definition { symbol: sym, params: xs, formula: Formula::Rel(sym, args), herbrand: Vec::new() }
                    }
                    SymbolKind::Function => {
                        let mut params = xs;
                        params.push("y".into());
                        let formula = Formula::Eq(Term::Var("y".into()), app.clone());
                        Definition { symbol: sym, params, formula, herbrand: vec![app] }
                    }
                }
            })
            .collect();
        Interpretation { name: format!("{}->{}", phi.name, phi.name), source: phi.clone(), target: phi.clone(), defs }
    }

    /// Parses the interpretation DSL:
    ///
    /// ```text
    /// interpretation IND->PHP {
    ///   source IND
    ///   target PHP
    ///   c(y) := y = min()
    ///   f(x, y) := (P(x) & y = s(x)) | (!P(x) & y = x)
    ///   herbrand c: min()
    ///   herbrand f: s(x); x
    /// }
    /// ```
    ///
    /// Source and target name catalog principles. Definitions are over the
    /// source language; a function's last parameter is its value.
    pub fn parse(text: &str) -> Result<Interpretation> {
        let bad = |line: usize, msg: String| Error::Syntax { line: line + 1, col: 1, msg };
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let Some(&(first, head)) = lines.first() else { return Err(bad(0, "empty interpretation".into())) };
        let name = head
            .strip_prefix("interpretation")
            .and_then(|r| r.trim().strip_suffix('{'))
            .map(|r| r.trim().to_string())
            .filter(|r| !r.is_empty())
            .ok_or_else(|| bad(first, "expected `interpretation NAME {`".into()))?;
        if lines.last().map(|l| l.1) != Some("}") || lines.len() < 2 {
            return Err(bad(lines.last().map_or(0, |l| l.0), "expected closing `}`".into()));
        }
        let body = &lines[1..lines.len() - 1];
        let principle = |key: &str| -> Result<BasicSentence> {
            let (i, l) = body
                .iter()
                .find(|(_, l)| l.split_whitespace().next() == Some(key))
                .ok_or_else(|| bad(first, format!("missing `{key}` line")))?;
            let pname = l[key.len()..].trim();
            catalog::builtin(pname).map(|e| e.sentence).map_err(|_| bad(*i, format!("unknown principle `{pname}`")))
        };
        let source = principle("source")?;
        let target = principle("target")?;
        let (sl, tl) = (&source.language, &target.language);
        let mut defs: Vec<Option<Definition>> = vec![None; tl.len()];
        let mut herbrand: Vec<(usize, usize, &str)> = Vec::new();
        for &(i, l) in body {
            let word = l.split_whitespace().next().unwrap_or("");
            if word == "source" || word == "target" {
                continue;
            }
            if let Some(rest) = l.strip_prefix("herbrand ") {
                let (sym, terms) = rest.split_once(':').ok_or_else(|| bad(i, "expected `herbrand S: t; ...`".into()))?;
                let sym = tl.index_of(sym.trim()).ok_or_else(|| bad(i, format!("unknown target symbol `{}`", sym.trim())))?;
                herbrand.push((i, sym, terms));
                continue;
            }
            let (lhs, rhs) = l.split_once(":=").ok_or_else(|| bad(i, format!("cannot read `{l}`")))?;
            let lhs = lhs.trim();
            let open = lhs.find('(').ok_or_else(|| bad(i, "expected `S(params) := formula`".into()))?;
            let sname = lhs[..open].trim();
            let sym = tl.index_of(sname).ok_or_else(|| bad(i, format!("unknown target symbol `{sname}`")))?;
            let inner = lhs[open + 1..].strip_suffix(')').ok_or_else(|| bad(i, "unclosed parameter list".into()))?;
            let params: Vec<String> =
                inner.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
            let s = tl.symbol(sym);
            let want = s.arity + usize::from(s.is_function());
            if params.len() != want {
                return Err(bad(i, format!("`{sname}` needs {want} parameter(s), got {}", params.len())));
            }
            if params.iter().collect::<BTreeSet<_>>().len() != params.len() {
                return Err(bad(i, format!("repeated parameter in `{lhs}`")));
            }
            let formula = parse_formula(sl, rhs, &params)?;
            if !formula.is_quantifier_free() {
                return Err(bad(i, format!("definition of `{sname}` is not quantifier free")));
            }
            if defs[sym].is_some() {
                return Err(Error::Duplicate(sname.to_string()));
            }
            defs[sym] = Some(Definition { symbol: sym, params, formula, herbrand: Vec::new() });
        }
        for (i, sym, terms) in herbrand {
            let def = defs[sym].as_mut().ok_or_else(|| bad(i, "herbrand list before its definition".into()))?;
            let xs = &def.params[..tl.symbol(sym).arity];
            for t in terms.split(';') {
                def.herbrand.push(parse_term(sl, t.trim(), xs)?);
            }
        }
        let defs = defs
            .into_iter()
            .enumerate()
            .map(|(sym, d)| {
                let d = d.ok_or_else(|| bad(first, format!("no definition for `{}`", tl.symbol(sym).name)))?;
                if tl.symbol(sym).is_function() && d.herbrand.is_empty() {
                    return Err(bad(first, format!("function `{}` needs a herbrand list", tl.symbol(sym).name)));
                }
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Interpretation { name, source, target, defs })
    }

    pub fn render(&self) -> String {
        let (sl, tl) = (self.source_language(), self.target_language());
        let mut out = format!("interpretation {} {{\n  source {}\n  target {}\n", self.name, self.source.name, self.target.name);
        for d in &self.defs {
            let _ = writeln!(out, "  {}({}) := {}", tl.symbol(d.symbol).name, d.params.join(", "), d.formula.render(sl));
        }
        for d in self.defs.iter().filter(|d| !d.herbrand.is_empty()) {
            let terms: Vec<String> = d.herbrand.iter().map(|t| t.render(sl)).collect();
            let _ = writeln!(out, "  herbrand {}: {}", tl.symbol(d.symbol).name, terms.join("; "));
        }
        out.push_str("}\n");
        out
    }
}

const HAP_HDP: &str = "interpretation HAP->HDP {
  source HAP
  target HDP
  # proper subset in the sense of the algebra
  prec(x0, x1) := meet(x0, x1) = x0 & x0 != x1
  b(x0, x1, y) := (y = join(x0, f(meet(x1, compl(x0)))) & (meet(x0, x1) = x0 & x0 != x1)) | (y = zero() & !(meet(x0, x1) = x0 & x0 != x1))
  zero(y) := y = zero()
  one(y) := y = one()
  herbrand b: join(x0, f(meet(x1, compl(x0)))); zero()
  herbrand zero: zero()
  herbrand one: one()
}";

// `x in [0,1]` is written out as x = zero() | x = one() | (prec(zero(), x) & prec(x, one())).
const HDP_HOP: &str = "interpretation HDP->HOP {
  source HDP
  target HOP
  f(x, y) := ((x = zero() | x = one() | (prec(zero(), x) & prec(x, one()))) & y = b(zero(), x)) | (!(x = zero() | x = one() | (prec(zero(), x) & prec(x, one()))) & y = one())
  prec(x0, x1) := ((x0 = zero() | x0 = one() | (prec(zero(), x0) & prec(x0, one()))) & (x1 = zero() | x1 = one() | (prec(zero(), x1) & prec(x1, one()))) & prec(x0, x1)) | (!(x1 = zero() | x1 = one() | (prec(zero(), x1) & prec(x1, one()))) & (x0 = zero() | x0 = one() | (prec(zero(), x0) & prec(x0, one()))))
  herbrand f: b(zero(), x); one()
}";

const IND_HOP: &str = "interpretation IND->HOP {
  source IND
  target HOP
  f(x, y) := y = s(x)
  prec(x0, x1) := (P(x0) & P(x1) & prec(x1, x0)) | (!P(x1) & P(x0))
  herbrand f: s(x)
}";

const IND_PHP: &str = "interpretation IND->PHP {
  source IND
  target PHP
  f(x, y) := (P(x) & y = s(x)) | (!P(x) & y = x)
  c(y) := y = min()
  herbrand f: s(x); x
  herbrand c: min()
}";

pub fn builtin_names() -> Vec<&'static str> {
    vec!["HAP->HDP", "HDP->HOP", "IND->HOP", "IND->PHP"]
}

pub fn builtin_interpretation(name: &str) -> Result<Interpretation> {
    let text = match name {
        "HAP->HDP" => HAP_HDP,
        "HDP->HOP" => HDP_HOP,
        "IND->HOP" => IND_HOP,
        "IND->PHP" => IND_PHP,
        other => return Err(Error::NotFound(format!("interpretation `{other}`"))),
    };
    Interpretation::parse(text)
}

// ---------------------------------------------------------------------------
// Validity

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// Every source structure on [n], enumerated lazily: only cells a check
    /// reads are branched on.
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub interpretation: String,
    pub n: u32,
    pub mode: CheckMode,
    /// Leaves of the lazy enumeration, or sampled (structure, tuple) checks.
    pub cases: u64,
    pub violations: Vec<String>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The local condition at one tuple: a relation definition evaluates; a
/// function definition holds for exactly one value, reached by a Herbrand term.
fn local_check(i: &Interpretation, n: u32, sym: usize, args: &[u32], read: &mut Reader) -> std::result::Result<Option<String>, Stop> {
    let d = &i.defs[sym];
    let tl = i.target_language();
    if !tl.symbol(sym).is_function() {
        d.holds(n, args, None, read)?;
        return Ok(None);
    }
    let mut values = Vec::new();
    for y in 0..n {
        if d.holds(n, args, Some(y), read)? {
            values.push(y);
        }
    }
    let name = &tl.symbol(sym).name;
    if values.len() != 1 {
        return Ok(Some(format!("δ_{name}{args:?} holds for values {values:?}")));
    }
    if d.herbrand_pick(n, args, read)?.is_none() {
        return Ok(Some(format!("no herbrand term for δ_{name} at {args:?}")));
    }
    Ok(None)
}

fn cell_range(lang: &Language, sym: usize, n: u32) -> u32 {
    if lang.symbol(sym).is_function() {
        n
    } else {
        2
    }
}

/// Depth-first over partial source structures, branching on each cell the
/// check asks for. Returns the number of leaves.
fn lazy_check(i: &Interpretation, n: u32, sym: usize, args: &[u32], violations: &mut Vec<String>) -> Result<u64> {
    let sl = i.source_language();
    let mut stack = vec![PartialStructure::undefined(sl, n)?];
    let mut leaves = 0;
    while let Some(b) = stack.pop() {
        let r = local_check(i, n, sym, args, &mut total_reader(&b));
        match r {
            Ok(v) => {
                leaves += 1;
                if let Some(msg) = v {
                    if violations.len() < 20 {
                        violations.push(format!("{msg} (partial source structure {})", b.to_json()));
                    }
                }
            }
            Err(Stop::Missing(s, cell)) => {
                for v in 0..cell_range(sl, s, n) {
                    let mut next = b.clone();
                    next.set(s, &cell, Some(v))?;
                    stack.push(next);
                }
            }
            Err(Stop::Fail(e)) => return Err(e),
        }
    }
    Ok(leaves)
}

/// Functionality and Herbrand coverage of every function definition.
pub fn check_validity(i: &Interpretation, n: u32, mode: CheckMode) -> Result<ValidityReport> {
    if n == 0 {
        return Err(Error::Contract("n must be at least 1".into()));
    }
    let tl = i.target_language();
    let mut violations = Vec::new();
    let mut cases = 0;
    match mode {
        CheckMode::Exhaustive => {
            for (sym, s) in tl.symbols.iter().enumerate() {
                for args in tuples(n, s.arity) {
                    cases += lazy_check(i, n, sym, &args, &mut violations)?;
                }
            }
        }
        CheckMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let b = catalog::random_total(i.source_language(), n, &mut rng)?;
                for (sym, s) in tl.symbols.iter().enumerate() {
                    for args in tuples(n, s.arity) {
                        cases += 1;
                        if let Some(msg) = local_check(i, n, sym, &args, &mut total_reader(&b)).map_err(unstop)? {
                            violations.push(format!("{msg} (source structure {})", b.to_json()));
                        }
                    }
                }
            }
        }
    }
    Ok(ValidityReport { interpretation: i.name.clone(), n, mode, cases, violations })
}

// ---------------------------------------------------------------------------
// Applying and pulling back

fn check_source(i: &Interpretation, b: &PartialStructure) -> Result<()> {
    if !b.language().same_symbols(i.source_language()) {
        return Err(Error::LanguageMismatch(format!("structure is not over the source language of {}", i.name)));
    }
    if !b.is_total() {
        return Err(Error::Contract("source structure must be total".into()));
    }
    Ok(())
}

/// I(B): same universe, each target symbol interpreted by what δ_S defines in B.
pub fn apply_interpretation(i: &Interpretation, b: &PartialStructure) -> Result<PartialStructure> {
    check_source(i, b)?;
    let n = b.n();
    let tl = i.target_language();
    let mut out = PartialStructure::undefined(tl, n)?;
    let mut read = total_reader(b);
    for (sym, s) in tl.symbols.iter().enumerate() {
        let d = &i.defs[sym];
        for args in tuples(n, s.arity) {
            let v = if s.is_function() {
                let mut values = Vec::new();
                for y in 0..n {
                    if d.holds(n, &args, Some(y), &mut read).map_err(unstop)? {
                        values.push(y);
                    }
                }
                match values[..] {
                    [y] => y,
                    _ => {
                        return Err(Error::Contract(format!(
                            "δ_{} is not functional at {args:?}: values {values:?}",
                            s.name
                        )))
                    }
                }
            } else {
                u32::from(d.holds(n, &args, None, &mut read).map_err(unstop)?)
            };
            out.set(sym, &args, Some(v))?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub source_value: TruthValue,
    pub target_value: TruthValue,
    /// B falsifies the source principle.
    pub source_falsified: bool,
    pub target_falsified: bool,
    /// False exactly when B falsifies the source but I(B) does not falsify the target.
    pub holds: bool,
}

/// Evaluates the source principle on B and the target principle on I(B).
pub fn falsification_transport(i: &Interpretation, b: &PartialStructure) -> Result<TransportReport> {
    let ib = apply_interpretation(i, b)?;
    let source_value = eval_basic(b, &i.source);
    let target_value = eval_basic(&ib, &i.target);
    let source_falsified = source_value == TruthValue::False;
    let target_falsified = target_value == TruthValue::False;
    Ok(TransportReport { source_value, target_value, source_falsified, target_falsified, holds: !source_falsified || target_falsified })
}

/// Where a pulled-back witness was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PullbackStage {
    /// The supplied tuple itself.
    Given,
    /// Tuples over the closure of the witness elements under source terms.
    Closure { depth: usize },
    FullSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pullback {
    pub disjunct: usize,
    pub tuple: Vec<u32>,
    pub stage: PullbackStage,
}

impl Pullback {
    pub fn witness(&self) -> Witness {
        Witness { disjunct: self.disjunct, tuple: self.tuple.clone() }
    }
}

/// Closure of `seed` under the source functions, `depth` rounds.
pub fn term_closure(b: &PartialStructure, seed: &[u32], depth: usize) -> Vec<u32> {
    let lang = b.language();
    let mut set: BTreeSet<u32> = seed.iter().copied().collect();
    for _ in 0..depth {
        let cur: Vec<u32> = set.iter().copied().collect();
        for (sym, s) in lang.symbols.iter().enumerate() {
            if !s.is_function() {
                continue;
            }
            for idx in tuples(cur.len() as u32, s.arity) {
                let args: Vec<u32> = idx.iter().map(|&k| cur[k as usize]).collect();
                if let Some(v) = b.get(sym, &args) {
                    set.insert(v);
                }
            }
        }
    }
    set.into_iter().collect()
}

/// From a witness for the target on I(B) to one for the source on B.
pub fn pullback_solution(i: &Interpretation, b: &PartialStructure, w: &Witness) -> Result<Pullback> {
    let ib = apply_interpretation(i, b)?;
    if w.tuple.len() != i.target.num_vars() || witness_value(&ib, &i.target, w) != TruthValue::True {
        return Err(Error::Contract(format!("supplied witness does not verify {} on I(B)", i.target.name)));
    }
    let found = |w: Witness, stage| Pullback { disjunct: w.disjunct, tuple: w.tuple, stage };
    if w.tuple.len() == i.source.num_vars() {
        let order = std::iter::once(w.disjunct).chain((0..i.source.matrix.len()).filter(|&d| d != w.disjunct));
        for d in order.filter(|&d| d < i.source.matrix.len()) {
            let cand = Witness { disjunct: d, tuple: w.tuple.clone() };
            if witness_value(b, &i.source, &cand) == TruthValue::True {
                return Ok(found(cand, PullbackStage::Given));
            }
        }
    }
    for depth in 0..=2 {
        let domain = term_closure(b, &w.tuple, depth);
        if let Some(v) = find_witness_in(b, &i.source, &domain) {
            return Ok(found(v, PullbackStage::Closure { depth }));
        }
    }
    find_witness(b, &i.source)
        .map(|v| found(v, PullbackStage::FullSearch))
        .ok_or_else(|| Error::NotFound(format!("no {} witness on the source structure; search exhausted", i.source.name)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial::verifies;
    use rand::Rng;

    fn all() -> Vec<Interpretation> {
        builtin_names().into_iter().map(|n| builtin_interpretation(n).unwrap()).collect()
    }

    #[test]
    fn builtins_load_and_round_trip() {
        for i in all() {
            assert_eq!(Interpretation::parse(&i.render()).unwrap(), i, "{}", i.name);
        }
        assert!(builtin_interpretation("PHP->PHP").is_err());
    }

    #[test]
    fn hap_to_hdp_definitions() {
        let i = builtin_interpretation("HAP->HDP").unwrap();
        let sl = i.source_language();
        let (meet, x0, x1) = (sl.index_of("meet").unwrap(), Term::Var("x0".into()), Term::Var("x1".into()));
        let want = Formula::And(vec![
            Formula::Eq(Term::App(meet, vec![x0.clone(), x1.clone()]), x0.clone()),
            Formula::not(Formula::Eq(x0, x1)),
        ]);
        assert_eq!(i.defs[i.target_language().index_of("prec").unwrap()].formula, want);
        let i = builtin_interpretation("IND->HOP").unwrap();
        let s = i.source_language().index_of("s").unwrap();
        let f = &i.defs[i.target_language().index_of("f").unwrap()];
        assert_eq!(f.formula, Formula::Eq(Term::Var("y".into()), Term::App(s, vec![Term::Var("x".into())])));
    }

    #[test]
    fn builtins_are_valid_at_three() {
        for i in all() {
            let r = check_validity(&i, 3, CheckMode::Exhaustive).unwrap();
            assert!(r.is_valid(), "{}: {:?}", i.name, r.violations);
            assert!(r.cases > 0);
            let r = check_validity(&i, 5, CheckMode::Sampled { samples: 20, seed: 1 }).unwrap();
            assert!(r.is_valid(), "{}: {:?}", i.name, r.violations);
        }
    }

    #[test]
    fn broken_definitions_are_caught() {
        let text = IND_PHP.replace("(!P(x) & y = x)", "(!P(x) & y != x)");
        let i = Interpretation::parse(&text).unwrap();
        let r = check_validity(&i, 2, CheckMode::Exhaustive).unwrap();
        assert!(!r.is_valid());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = loop {
            let b = catalog::random_total(i.source_language(), 3, &mut rng).unwrap();
            if (0..3).any(|x| b.rel(0, &[x]) == Some(false)) {
                break b;
            }
        };
        assert!(matches!(apply_interpretation(&i, &b), Err(Error::Contract(_))));
        let missing = IND_PHP.replace("  herbrand c: min()\n", "");
        assert!(Interpretation::parse(&missing).is_err());
        assert!(Interpretation::parse(&IND_PHP.replace("y = min()", "exists z . y = z")).is_err());
    }

    #[test]
    fn identity_passes_witnesses_through() {
        let phi = catalog::builtin("PHP").unwrap().sentence;
        let i = Interpretation::identity(&phi);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let b = catalog::random_total(&phi.language, 4, &mut rng).unwrap();
            assert_eq!(apply_interpretation(&i, &b).unwrap(), b);
            let w = find_witness(&b, &phi).unwrap();
            let p = pullback_solution(&i, &b, &w).unwrap();
            assert_eq!((p.witness(), p.stage), (w, PullbackStage::Given));
        }
    }

    fn ind_structure(rng: &mut ChaCha8Rng, n: u32) -> PartialStructure {
        let i = builtin_interpretation("IND->PHP").unwrap();
        catalog::random_total(i.source_language(), n, rng).unwrap()
    }

    #[test]
    fn ind_php_constant_is_min() {
        let i = builtin_interpretation("IND->PHP").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (min, c) = (i.source_language().index_of("min").unwrap(), i.target_language().index_of("c").unwrap());
        for _ in 0..10 {
            let b = ind_structure(&mut rng, 5);
            let ib = apply_interpretation(&i, &b).unwrap();
            assert_eq!(ib.get(c, &[]), b.get(min, &[]));
            let w = find_witness(&ib, &i.target).unwrap();
            let p = pullback_solution(&i, &b, &w).unwrap();
            assert_eq!(witness_value(&b, &i.source, &p.witness()), TruthValue::True);
        }
    }

    /// A six-point structure: 0 ≺ 2 ≺ 3 ≺ 1 as a chain, 4 and 5 off the interval.
    fn hdp_fragment() -> (Interpretation, PartialStructure) {
        let i = builtin_interpretation("HDP->HOP").unwrap();
        let sl = i.source_language().clone();
        let [prec, b, zero, one] = ["prec", "b", "zero", "one"].map(|s| sl.index_of(s).unwrap());
        let mut s = PartialStructure::undefined(&sl, 6).unwrap();
        let rank = [0, 3, 1, 2, 4, 5];
        for x in 0..6u32 {
            for y in 0..6u32 {
                let chain = x < 4 && y < 4 && rank[x as usize] < rank[y as usize];
                s.set(prec, &[x, y], Some(u32::from(chain))).unwrap();
                s.set(b, &[x, y], Some((x + y) % 6)).unwrap();
            }
        }
        s.set(zero, &[], Some(0)).unwrap();
        s.set(one, &[], Some(1)).unwrap();
        (i, s)
    }

    #[test]
    fn hdp_hop_outside_points_are_incomparable() {
        let (i, b) = hdp_fragment();
        let ib = apply_interpretation(&i, &b).unwrap();
        let prec = i.target_language().index_of("prec").unwrap();
        for (x, y) in [(4, 5), (5, 4), (4, 4), (5, 5)] {
            assert_eq!(ib.rel(prec, &[x, y]), Some(false));
        }
        // Inside points sit below outside ones.
        assert_eq!(ib.rel(prec, &[2, 4]), Some(true));
        let w = find_witness(&ib, &i.target).unwrap();
        let p = pullback_solution(&i, &b, &w).unwrap();
        assert!(verifies(&b, &i.source));
        assert_eq!(witness_value(&b, &i.source, &p.witness()), TruthValue::True);
    }

    #[test]
    fn bad_witnesses_are_rejected() {
        let (i, b) = hdp_fragment();
        let ib = apply_interpretation(&i, &b).unwrap();
        let bad = (0..i.target.matrix.len())
            .flat_map(|d| tuples(6, i.target.num_vars()).map(move |t| Witness { disjunct: d, tuple: t }))
            .find(|w| witness_value(&ib, &i.target, w) == TruthValue::False)
            .unwrap();
        assert!(matches!(pullback_solution(&i, &b, &bad), Err(Error::Contract(_))));
    }

    #[test]
    fn end_to_end_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in all() {
            for _ in 0..25 {
                let n = rng.gen_range(2..=6);
                let b = catalog::random_total(i.source_language(), n, &mut rng).unwrap();
                let ib = apply_interpretation(&i, &b).unwrap();
                let w = find_witness(&ib, &i.target).expect("target principles are valid in the finite");
                let p = pullback_solution(&i, &b, &w).unwrap();
                assert_eq!(witness_value(&b, &i.source, &p.witness()), TruthValue::True, "{}", i.name);
                assert!(falsification_transport(&i, &b).unwrap().holds);
            }
        }
    }

    #[test]
    fn hap_pullback_fails_on_trivial_algebras() {
        // In the two-element Boolean algebra with f = 0 every HAP disjunct
        // fails, so there is no source witness to pull back to.
        let i = builtin_interpretation("HAP->HDP").unwrap();
        let sl = i.source_language().clone();
        let [join, meet, compl, f, zero, one] = ["join", "meet", "compl", "f", "zero", "one"].map(|s| sl.index_of(s).unwrap());
        let mut b = PartialStructure::undefined(&sl, 2).unwrap();
        for x in 0..2u32 {
            for y in 0..2u32 {
                b.set(join, &[x, y], Some(x | y)).unwrap();
                b.set(meet, &[x, y], Some(x & y)).unwrap();
            }
            b.set(compl, &[x], Some(1 - x)).unwrap();
            b.set(f, &[x], Some(0)).unwrap();
        }
        b.set(zero, &[], Some(0)).unwrap();
        b.set(one, &[], Some(1)).unwrap();
        let t = falsification_transport(&i, &b).unwrap();
        assert!(t.source_falsified && !t.target_falsified && !t.holds);
        let ib = apply_interpretation(&i, &b).unwrap();
        let w = find_witness(&ib, &i.target).unwrap();
        assert!(matches!(pullback_solution(&i, &b, &w), Err(Error::NotFound(_))));
    }
}
