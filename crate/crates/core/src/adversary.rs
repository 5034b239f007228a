//! An oracle server that answers adaptive queries while keeping the coded
//! structure non-verifying and embeddable into a model of the negation.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{builtin, entries, BoundKind, ComputableModel};
use crate::density::{complete_trees_small, core_extend, extend_define, DensityContext, TraceStep};
use crate::determinacy::{determinacy, SearchOptions};
use crate::dtrees::{build_c, TreeFamily};
use crate::encoding::{partial_of_oracle, value_bits, PartialOracle, RelevantKey};
use crate::error::{Error, Result};
use crate::partial::{find_lax_witness, literal_value, verifies, PartialStructure, TruthValue};
use crate::syntax::{BasicSentence, Literal, SymbolKind};
use crate::util::tuples;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolverClaim {
    pub disjunct: usize,
    pub tuple: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Refutation {
    /// Index, within the claimed disjunct, of a literal evaluating to 0.
    pub literal: usize,
    pub cells_defined: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Core,
    SmallM,
}

#[derive(Debug, Clone, Serialize)]
pub struct Receipt {
    pub branch: Branch,
    pub added: usize,
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone)]
pub struct Registered {
    pub family: TreeFamily,
    pub phi_t: BasicSentence,
    pub b0: usize,
    pub receipt: Receipt,
}

#[derive(Debug, Clone)]
pub struct Session {
    ctx: DensityContext,
    p: PartialOracle,
    budget: usize,
    answered: usize,
    families: Vec<Registered>,
}

impl Session {
    /// Default budget ⌊n/r_L⌋ − 1 answered point queries.
    pub fn new(phi: &BasicSentence, model: &ComputableModel, n: u32, budget: Option<usize>) -> Result<Self> {
        let r = phi.language.r_l();
        if (n as usize) < r {
            return Err(Error::Hypothesis(format!("n = {n} < r_L = {r}")));
        }
        let ctx = DensityContext::new(phi, model, n)?;
        let budget = budget.unwrap_or((n as usize / r).saturating_sub(1));
        Ok(Session { p: PartialOracle::empty(&phi.language, n), ctx, budget, answered: 0, families: Vec::new() })
    }

    /// A session for a catalog principle with its registered model.
    pub fn for_principle(name: &str, n: u32, budget: Option<usize>) -> Result<Self> {
        let e = builtin(name)?;
        let model = e.model.as_ref().ok_or_else(|| Error::NotFound(format!("no model registered for {name}")))?;
        Self::new(&e.sentence, model, n, budget)
    }

    pub fn phi(&self) -> &BasicSentence {
        &self.ctx.phi
    }

    pub fn n(&self) -> u32 {
        self.ctx.n
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn answered(&self) -> usize {
        self.answered
    }

    pub fn oracle(&self) -> &PartialOracle {
        &self.p
    }

    pub fn context(&self) -> &DensityContext {
        &self.ctx
    }

    pub fn families(&self) -> &[Registered] {
        &self.families
    }

    /// The answer to `key`. Irrelevant keys get 0 for free, and repeated
    /// questions get the same bit for free.
    pub fn answer_query(&mut self, key: &RelevantKey) -> Result<bool> {
        if !key.is_relevant(&self.ctx.phi.language, self.ctx.n) {
            return Ok(false);
        }
        if let Some(b) = self.p.get(key) {
            return Ok(b);
        }
        if self.answered >= self.budget {
            return Err(Error::Budget(self.budget));
        }
        self.p = extend_define(&mut self.ctx, &self.p, key.sym(), key.args())?;
        self.answered += 1;
        Ok(self.p.get(key).expect("cell was just defined"))
    }

    /// Forces C(F, m, p) to verify φ̃ from now on. Takes the core extension
    /// when s_L̃(m) ≥ 2·b0·d̃(m) and the small-m completion otherwise.
    pub fn register_tree_family(&mut self, family: TreeFamily, phi_t: &BasicSentence, b0: usize, d_t: u64) -> Result<Receipt> {
        let before = self.p.size();
        let s_t = phi_t.language.s_l(family.m as u64) as u128;
        let receipt = if d_t > 0 && s_t >= 2 * b0 as u128 * d_t as u128 {
            let out = core_extend(&mut self.ctx, &self.p, &family, b0, phi_t, d_t)?;
            self.p = out.q;
            Receipt { branch: Branch::Core, added: self.p.size() - before, iterations: out.iterations, trace: out.trace }
        } else {
            self.p = complete_trees_small(&mut self.ctx, &self.p, &family, b0)?;
            Receipt { branch: Branch::SmallM, added: self.p.size() - before, iterations: 0, trace: Vec::new() }
        };
        if !verifies(&build_c(&family, &self.p)?, phi_t) {
            return Err(Error::Internal("registered family does not verify its principle".into()));
        }
        self.families.push(Registered { family, phi_t: phi_t.clone(), b0, receipt: receipt.clone() });
        Ok(receipt)
    }

    /// Defines every cell the claimed disjunct reads on the claimed tuple and
    /// reports a literal that is false there.
    pub fn refute_claim(&mut self, claim: &SolverClaim) -> Result<Refutation> {
        let phi = self.ctx.phi.clone();
        let lits = phi
            .matrix
            .get(claim.disjunct)
            .ok_or_else(|| Error::Contract(format!("no disjunct {}", claim.disjunct)))?;
        if claim.tuple.len() != phi.num_vars() || claim.tuple.iter().any(|&a| a >= self.ctx.n) {
            return Err(Error::Contract(format!("claim tuple {:?} is not in [{}]^{}", claim.tuple, self.ctx.n, phi.num_vars())));
        }
        let slack = lits.len();
        if self.ctx.n as usize <= (self.p.size() + slack) * self.ctx.r_l() {
            return Err(Error::Hypothesis(format!(
                "n = {} is not > (‖p‖ + |J|)·r_L = {}",
                self.ctx.n,
                (self.p.size() + slack) * self.ctx.r_l()
            )));
        }
        let before = self.p.size();
        for lit in lits {
            if let Literal::Rel { sym, args, .. } | Literal::Fun { sym, args, .. } = lit {
                let at: Vec<u32> = args.iter().map(|&v| claim.tuple[v]).collect();
                self.p = extend_define(&mut self.ctx, &self.p, *sym, &at)?;
            }
        }
        let b = partial_of_oracle(&self.p);
        let literal = lits
            .iter()
            .position(|l| literal_value(&b, l, &claim.tuple) == TruthValue::False)
            .ok_or_else(|| Error::Internal("claimed disjunct holds in a structure embedding into the model".into()))?;
        Ok(Refutation { literal, cells_defined: self.p.size() - before })
    }

    /// The session invariants: B(p) embeds (checked two ways), does not
    /// verify φ, and every registered family still verifies its principle.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.ctx.embeds(&self.p) || !self.ctx.fragment_embeds(&self.p)? {
            return Err(Error::Internal("B(p) does not embed into the model".into()));
        }
        if verifies(&partial_of_oracle(&self.p), &self.ctx.phi) {
            return Err(Error::Internal("B(p) verifies the principle".into()));
        }
        for r in &self.families {
            if !verifies(&build_c(&r.family, &self.p)?, &r.phi_t) {
                return Err(Error::Internal("a registered family lost its witness".into()));
            }
        }
        let cost: usize = self.families.iter().map(|r| r.receipt.added).sum();
        if self.p.size() > self.answered + cost + self.ctx.phi.matrix.iter().map(Vec::len).max().unwrap_or(0) {
            return Err(Error::Internal("oracle grew beyond the answered queries and family costs".into()));
        }
        Ok(())
    }
}

/// d̃(m) from the catalog's exact closed form, else by search (tiny m only).
pub fn default_determinacy(phi_t: &BasicSentence, m: u32) -> Result<u64> {
    let claim = entries().iter().find(|e| e.name == phi_t.name && e.sentence == *phi_t).and_then(|e| e.determinacy.as_ref());
    if let Some(c) = claim.filter(|c| c.kind == BoundKind::Exact) {
        if let Some(d) = (c.eval)(m as u64) {
            return Ok(d);
        }
    }
    determinacy(phi_t, m, SearchOptions::default())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Query(RelevantKey),
    Claim(SolverClaim),
}

/// A query-bounded solver: it sees the previous answer and moves.
pub trait Solver {
    fn next(&mut self, last: Option<bool>) -> Move;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    /// Reads whole cells in canonical order.
    Greedy,
    /// Reads whole cells chosen at random.
    Random,
    /// Reads one bit of random cells and guesses the rest.
    BitProbe,
}

/// The bundled solvers: read up to `max_cells` cells, then claim a tuple on
/// which no literal is known to fail.
pub struct FixtureSolver {
    phi: BasicSentence,
    n: u32,
    keys: Vec<RelevantKey>,
    pos: usize,
    knowledge: PartialStructure,
}

impl FixtureSolver {
    pub fn new(kind: FixtureKind, phi: &BasicSentence, n: u32, max_cells: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lang = &phi.language;
        let all: Vec<(usize, Vec<u32>)> =
            (0..lang.len()).flat_map(|s| tuples(n, lang.symbol(s).arity).map(move |t| (s, t))).collect();
        let cells: Vec<(usize, Vec<u32>)> = match kind {
            FixtureKind::Greedy => all.into_iter().take(max_cells).collect(),
            FixtureKind::Random | FixtureKind::BitProbe => {
                let mut picked = BTreeSet::new();
                while picked.len() < max_cells.min(all.len()) {
                    picked.insert(rng.gen_range(0..all.len()));
                }
                let mut order: Vec<usize> = picked.into_iter().collect();
                for i in (1..order.len()).rev() {
                    order.swap(i, rng.gen_range(0..=i));
                }
                order.into_iter().map(|i| all[i].clone()).collect()
            }
        };
        let mut keys = Vec::new();
        for (sym, args) in cells {
            match lang.symbol(sym).kind {
                SymbolKind::Relation => keys.push(RelevantKey::Rel { sym, args }),
                SymbolKind::Function => {
                    let bits = if kind == FixtureKind::BitProbe { 1 } else { value_bits(n) };
                    keys.extend((0..bits).map(|bit| RelevantKey::FunBit { sym, args: args.clone(), bit }));
                }
            }
        }
        Ok(FixtureSolver { phi: phi.clone(), n, keys, pos: 0, knowledge: PartialStructure::undefined(lang, n)? })
    }

    fn learn(&mut self, key: &RelevantKey, bit: bool) {
        let idx = self.knowledge.index(key.args());
        let old = self.knowledge.get_idx(key.sym(), idx).unwrap_or(0) as u64;
        let v = match key {
            RelevantKey::Rel { .. } => bit as u64,
            RelevantKey::FunBit { bit: i, .. } => (old | (bit as u64) << i).min(self.n as u64 - 1),
        };
        self.knowledge.set_unchecked(key.sym(), idx, Some(v as u32));
    }
}

impl Solver for FixtureSolver {
    fn next(&mut self, last: Option<bool>) -> Move {
        if let (Some(b), Some(k)) = (last, self.pos.checked_sub(1).and_then(|i| self.keys.get(i)).cloned()) {
            self.learn(&k, b);
        }
        if let Some(k) = self.keys.get(self.pos) {
            self.pos += 1;
            return Move::Query(k.clone());
        }
        let w = find_lax_witness(&self.knowledge, &self.phi);
        Move::Claim(match w {
            Some(w) => SolverClaim { disjunct: w.disjunct, tuple: w.tuple },
            None => SolverClaim { disjunct: 0, tuple: vec![0; self.phi.num_vars()] },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum PlayOutcome {
    Refuted { claim: SolverClaim, literal: usize, queries: usize },
    Budget { queries: usize },
}

/// Runs a solver against the session until it claims or runs out of budget.
pub fn play(session: &mut Session, solver: &mut dyn Solver) -> Result<PlayOutcome> {
    let mut last = None;
    let mut queries = 0;
    loop {
        match solver.next(last) {
            Move::Query(k) => match session.answer_query(&k) {
                Ok(b) => {
                    queries += 1;
                    last = Some(b);
                }
                Err(Error::Budget(_)) => return Ok(PlayOutcome::Budget { queries }),
                Err(e) => return Err(e),
            },
            Move::Claim(claim) => {
                let r = session.refute_claim(&claim)?;
                return Ok(PlayOutcome::Refuted { claim, literal: r.literal, queries });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeEnd {
    Refuted,
    Budget,
    Closed,
}

/// The line protocol: `Q <key>` is answered by `A <bit>` (or `BUDGET`, which
/// ends the session); `CLAIM i a0 a1 ...` by `REFUTED j`. Bad lines get
/// `ERROR <message>`; `#` lines are ignored.
pub fn serve(session: &mut Session, input: impl BufRead, mut out: impl Write) -> Result<ServeEnd> {
    let io = |e: std::io::Error| Error::Protocol(e.to_string());
    for line in input.lines() {
        let line = line.map_err(io)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match head {
            "Q" => match RelevantKey::parse(&session.ctx.phi.language, rest) {
                Ok(k) => match session.answer_query(&k) {
                    Ok(b) => writeln!(out, "A {}", b as u8).map_err(io)?,
                    Err(Error::Budget(_)) => {
                        writeln!(out, "BUDGET").map_err(io)?;
                        return Ok(ServeEnd::Budget);
                    }
                    Err(e) => return Err(e),
                },
                Err(e) => writeln!(out, "ERROR {e}").map_err(io)?,
            },
            "CLAIM" => {
                let nums: std::result::Result<Vec<u32>, _> = rest.split_whitespace().map(str::parse).collect();
                match nums {
                    Ok(nums) if !nums.is_empty() => {
                        let claim = SolverClaim { disjunct: nums[0] as usize, tuple: nums[1..].to_vec() };
                        match session.refute_claim(&claim) {
                            Ok(r) => {
                                writeln!(out, "REFUTED {}", r.literal).map_err(io)?;
                                return Ok(ServeEnd::Refuted);
                            }
                            Err(e @ Error::Contract(_)) => writeln!(out, "ERROR {e}").map_err(io)?,
                            Err(e) => return Err(e),
                        }
                    }
                    _ => writeln!(out, "ERROR malformed claim").map_err(io)?,
                }
            }
            _ => writeln!(out, "ERROR unknown command `{head}`").map_err(io)?,
        }
        out.flush().map_err(io)?;
    }
    Ok(ServeEnd::Closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;

    fn f_bit(a: u32, bit: u32) -> RelevantKey {
        RelevantKey::FunBit { sym: 0, args: vec![a], bit }
    }

    #[test]
    fn sessions() {
        assert_eq!(Session::for_principle("PHP", 64, None).unwrap().budget(), 31);
        assert!(matches!(Session::for_principle("PHP", 1, None), Err(Error::Hypothesis(_))));
        assert!(Session::for_principle("HOP", 256, None).is_ok());
        assert!(matches!(Session::for_principle("WPHP", 8, None), Err(Error::NotFound(_))));
    }

    #[test]
    fn consistent_answers() {
        let mut s = Session::for_principle("PHP", 64, None).unwrap();
        let a = s.answer_query(&f_bit(0, 0)).unwrap();
        assert_eq!(s.answer_query(&f_bit(0, 0)).unwrap(), a);
        for bit in 0..6 {
            s.answer_query(&f_bit(0, bit)).unwrap();
        }
        assert_eq!(s.answered(), 1);
        assert!(!s.answer_query(&f_bit(99, 0)).unwrap());
        assert!(!s.answer_query(&f_bit(0, 6)).unwrap());
        assert_eq!(s.answered(), 1);
        s.check_invariants().unwrap();
    }

    #[test]
    fn budget_stops_collisions() {
        let mut s = Session::for_principle("PHP", 64, None).unwrap();
        let mut result = Ok(false);
        for a in 0..33 {
            result = s.answer_query(&f_bit(a, 0));
            if result.is_err() {
                break;
            }
        }
        assert_eq!(result, Err(Error::Budget(31)));
        assert_eq!(s.answered(), 31);
        s.check_invariants().unwrap();
    }

    #[test]
    fn refutations() {
        let mut s = Session::for_principle("PHP", 64, None).unwrap();
        for a in 0..2 {
            for bit in 0..6 {
                s.answer_query(&f_bit(a, bit)).unwrap();
            }
        }
        let u = s.oracle().value(0, &[0]).unwrap();
        let r = s.refute_claim(&SolverClaim { disjunct: 0, tuple: vec![0, 1, u] }).unwrap();
        assert_eq!(r.literal, 1);
        assert!(s.refute_claim(&SolverClaim { disjunct: 0, tuple: vec![0, 64, 0] }).is_err());
        assert!(s.refute_claim(&SolverClaim { disjunct: 5, tuple: vec![0, 1, 0] }).is_err());
        s.check_invariants().unwrap();
    }

    #[test]
    fn fixtures_are_refuted() {
        let phi = builtin("PHP").unwrap().sentence;
        for kind in [FixtureKind::Greedy, FixtureKind::Random, FixtureKind::BitProbe] {
            for seed in 0..20 {
                let mut s = Session::for_principle("PHP", 64, Some(20)).unwrap();
                let mut solver = FixtureSolver::new(kind, &phi, 64, 20, seed).unwrap();
                let out = play(&mut s, &mut solver).unwrap();
                assert!(matches!(out, PlayOutcome::Refuted { .. }), "{kind:?} {out:?}");
                s.check_invariants().unwrap();
            }
        }
    }

    #[test]
    fn family_registration() {
        let wphp = builtin("WPHP").unwrap().sentence;
        let mut s = Session::for_principle("HOP", 256, None).unwrap();
        let lang = s.phi().language.clone();
        let fam = TreeFamily::random(&wphp.language, 16, 4, &lang, 256, 7).unwrap();
        let r = s.register_tree_family(fam, &wphp, 4, default_determinacy(&wphp, 16).unwrap()).unwrap();
        assert_eq!(r.branch, Branch::Core);
        let small = TreeFamily::random(&wphp.language, 2, 4, &lang, 256, 8).unwrap();
        let r = s.register_tree_family(small, &wphp, 4, default_determinacy(&wphp, 2).unwrap()).unwrap();
        assert_eq!(r.branch, Branch::SmallM);
        let hop = s.phi().clone();
        let mut solver = FixtureSolver::new(FixtureKind::Random, &hop, 256, 20, 1).unwrap();
        assert!(matches!(play(&mut s, &mut solver).unwrap(), PlayOutcome::Refuted { .. }));
        s.check_invariants().unwrap();

        let mut tiny = Session::for_principle("HOP", 16, None).unwrap();
        let fam = TreeFamily::random(&wphp.language, 2, 4, &lang, 16, 1).unwrap();
        assert!(matches!(tiny.register_tree_family(fam, &wphp, 4, 3), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn protocol() {
        let mut s = Session::for_principle("PHP", 64, Some(2)).unwrap();
        let script = "# probe\nQ f(0)#0\nQ f(0)#0\nQ bogus\nQ f(1)#0\nQ f(2)#0\n";
        let mut out = Vec::new();
        assert_eq!(serve(&mut s, script.as_bytes(), &mut out).unwrap(), ServeEnd::Budget);
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], lines[1]);
        assert!(lines[2].starts_with("ERROR") && lines[4] == "BUDGET");

        let mut s = Session::for_principle("PHP", 64, None).unwrap();
        let mut out = Vec::new();
        let end = serve(&mut s, "CLAIM 0 0 1\nCLAIM 1 3 0 0\n".as_bytes(), &mut out).unwrap();
        assert_eq!(end, ServeEnd::Refuted);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("ERROR") && text.lines().nth(1).unwrap().starts_with("REFUTED"));
    }
}
