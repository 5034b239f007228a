//! Decision trees over oracles, answer sequences, and the structures C(F, m, p).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::encoding::{relevant_elements, value_bits, FullOracle, PartialOracle, RelevantKey};
use crate::error::{Error, Result};
use crate::partial::PartialStructure;
use crate::reduce::{Interpretation, Stop};
use crate::syntax::{Language, SymbolKind};
use crate::util::tuples;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    Query(RelevantKey),
    Output(u64),
}

/// A tree given by its node function: the label reached from `input` after
/// the answers `z`. Implementations must be pure.
pub trait DecisionTree: Send + Sync {
    fn arity(&self) -> usize;
    /// Declared height bound.
    fn height(&self) -> usize;
    fn node(&self, input: &[u32], z: &[bool]) -> Label;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Blocked,
    Running,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSeq {
    pub bits: Vec<bool>,
    /// The key asked before each bit; when blocked, the last entry is the
    /// unanswered query.
    pub queries: Vec<RelevantKey>,
    pub status: Status,
}

/// Where answers come from during a run.
pub trait Answers {
    fn language(&self) -> &Language;
    fn n(&self) -> u32;
    /// `None` for a relevant key the source cannot answer.
    fn answer(&self, key: &RelevantKey) -> Option<bool>;
}

impl Answers for FullOracle {
    fn language(&self) -> &Language {
        FullOracle::language(self)
    }
    fn n(&self) -> u32 {
        FullOracle::n(self)
    }
    fn answer(&self, key: &RelevantKey) -> Option<bool> {
        Some(self.contains(key))
    }
}

impl Answers for PartialOracle {
    fn language(&self) -> &Language {
        PartialOracle::language(self)
    }
    fn n(&self) -> u32 {
        PartialOracle::n(self)
    }
    fn answer(&self, key: &RelevantKey) -> Option<bool> {
        if !key.is_relevant(PartialOracle::language(self), PartialOracle::n(self)) {
            return Some(false);
        }
        self.get(key)
    }
}

/// The maximal answer sequence of `t` on `input`, with its output if complete.
pub fn run<A: Answers + ?Sized>(t: &dyn DecisionTree, input: &[u32], src: &A) -> Result<(AnswerSeq, Option<u64>)> {
    if input.len() != t.arity() {
        return Err(Error::ArityMismatch { symbol: "tree".into(), expected: t.arity(), got: input.len() });
    }
    let mut seq = AnswerSeq { bits: Vec::new(), queries: Vec::new(), status: Status::Running };
    loop {
        match t.node(input, &seq.bits) {
            Label::Output(v) => {
                for b in [false, true] {
                    seq.bits.push(b);
                    let after = t.node(input, &seq.bits);
                    seq.bits.pop();
                    if after != Label::Output(v) {
                        return Err(Error::MalformedTree(format!("output {v} changes after answers {:?}", seq.bits)));
                    }
                }
                seq.status = Status::Complete;
                return Ok((seq, Some(v)));
            }
            Label::Query(k) => {
                if seq.bits.len() >= t.height() {
                    return Err(Error::MalformedTree(format!("query beyond declared height {}", t.height())));
                }
                let bit = src.answer(&k);
                seq.queries.push(k);
                match bit {
                    Some(b) => seq.bits.push(b),
                    None => {
                        seq.status = Status::Blocked;
                        return Ok((seq, None));
                    }
                }
            }
        }
    }
}

pub fn run_full(t: &dyn DecisionTree, input: &[u32], alpha: &FullOracle) -> Result<(AnswerSeq, u64)> {
    let (seq, out) = run(t, input, alpha)?;
    Ok((seq, out.expect("full oracles never block")))
}

pub fn run_partial(t: &dyn DecisionTree, input: &[u32], p: &PartialOracle) -> Result<(AnswerSeq, Option<u64>)> {
    run(t, input, p)
}

/// Asks questions on behalf of a [`ProgramTree`] body, replaying known answers.
pub struct Prober<'a> {
    answers: &'a [bool],
    pos: usize,
    pending: Option<RelevantKey>,
}

impl Prober<'_> {
    /// The answer to `key`, or `None` when the body must stop and wait.
    pub fn ask(&mut self, key: RelevantKey) -> Option<bool> {
        if let Some(&b) = self.answers.get(self.pos) {
            self.pos += 1;
            Some(b)
        } else {
            self.pending = Some(key);
            None
        }
    }

    /// Reads the decoded value of a source cell bit by bit.
    pub fn value(&mut self, lang: &Language, n: u32, sym: usize, args: &[u32]) -> Option<u64> {
        match lang.symbol(sym).kind {
            SymbolKind::Relation => self.ask(RelevantKey::Rel { sym, args: args.to_vec() }).map(u64::from),
            SymbolKind::Function => {
                let mut raw = 0u64;
                for bit in 0..value_bits(n) {
                    if self.ask(RelevantKey::FunBit { sym, args: args.to_vec(), bit })? {
                        raw |= 1 << bit;
                    }
                }
                Some(raw.min(n as u64 - 1))
            }
        }
    }
}

type Body = dyn Fn(&[u32], &mut Prober) -> Option<u64> + Send + Sync;

/// A tree written as straight-line code that asks questions through a [`Prober`].
#[derive(Clone)]
pub struct ProgramTree {
    arity: usize,
    height: usize,
    body: Arc<Body>,
}

impl ProgramTree {
    pub fn new(arity: usize, height: usize, body: impl Fn(&[u32], &mut Prober) -> Option<u64> + Send + Sync + 'static) -> Self {
        ProgramTree { arity, height, body: Arc::new(body) }
    }
}

impl fmt::Debug for ProgramTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProgramTree(arity {}, height {})", self.arity, self.height)
    }
}

impl DecisionTree for ProgramTree {
    fn arity(&self) -> usize {
        self.arity
    }
    fn height(&self) -> usize {
        self.height
    }
    fn node(&self, input: &[u32], z: &[bool]) -> Label {
        let mut p = Prober { answers: z, pos: 0, pending: None };
        match (self.body)(input, &mut p) {
            Some(v) => Label::Output(v),
            None => Label::Query(p.pending.expect("body stopped without a pending query")),
        }
    }
}

/// Outputs the value of source symbol `sym` at the input tuple.
pub fn bit_probe_tree(lang: &Language, n: u32, sym: usize) -> ProgramTree {
    let s = lang.symbol(sym);
    let height = if s.is_function() { value_bits(n) as usize } else { 1 };
    let lang = lang.clone();
    ProgramTree::new(s.arity, height, move |input, p| p.value(&lang, n, sym, input))
}

pub fn constant_tree(arity: usize, value: u64) -> ProgramTree {
    ProgramTree::new(arity, 0, move |_, _| Some(value))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Query(RelevantKey, Box<Node>, Box<Node>),
    Out(u64),
}

impl Node {
    pub fn height(&self) -> usize {
        match self {
            Node::Out(_) => 0,
            Node::Query(_, a, b) => 1 + a.height().max(b.height()),
        }
    }

    pub fn render(&self, lang: &Language) -> String {
        match self {
            Node::Out(v) => format!("(out {v})"),
            Node::Query(k, a, b) => format!("(query {} {} {})", k.render(lang), a.render(lang), b.render(lang)),
        }
    }

    pub fn parse(lang: &Language, text: &str) -> Result<Node> {
        let toks = sexp_tokens(text);
        let mut pos = 0;
        let node = parse_node(lang, &toks, &mut pos)?;
        if pos != toks.len() {
            return Err(sexp_error("trailing input"));
        }
        Ok(node)
    }
}

fn sexp_tokens(text: &str) -> Vec<String> {
    text.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(str::to_string).collect()
}

fn sexp_error(msg: &str) -> Error {
    Error::Syntax { line: 1, col: 1, msg: format!("tree: {msg}") }
}

/// Reads `(query KEY A B)` or `(out N)`. Keys contain parentheses, so the key
/// token is reassembled up to its closing parenthesis.
fn parse_node(lang: &Language, toks: &[String], pos: &mut usize) -> Result<Node> {
    let next = |pos: &mut usize| -> Result<String> {
        let t = toks.get(*pos).cloned().ok_or_else(|| sexp_error("unexpected end"))?;
        *pos += 1;
        Ok(t)
    };
    if next(pos)? != "(" {
        return Err(sexp_error("expected `(`"));
    }
    let node = match next(pos)?.as_str() {
        "out" => Node::Out(next(pos)?.parse().map_err(|_| sexp_error("bad output"))?),
        "query" => {
            let mut key = next(pos)?;
            loop {
                let t = next(pos)?;
                key.push_str(&t);
                if t == ")" {
                    break;
                }
            }
            if toks.get(*pos).is_some_and(|t| t.starts_with('#')) {
                key.push_str(&next(pos)?);
            }
            let k = RelevantKey::parse(lang, &key)?;
            let zero = parse_node(lang, toks, pos)?;
            let one = parse_node(lang, toks, pos)?;
            Node::Query(k, Box::new(zero), Box::new(one))
        }
        other => return Err(sexp_error(&format!("unknown head `{other}`"))),
    };
    if next(pos)? != ")" {
        return Err(sexp_error("expected `)`"));
    }
    Ok(node)
}

/// An explicit tree per input tuple; inputs without a row output 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTree {
    pub arity: usize,
    pub rows: BTreeMap<Vec<u32>, Node>,
}

impl TableTree {
    pub fn uniform(arity: usize, n: u32, node: Node) -> Self {
        TableTree { arity, rows: tuples(n, arity).map(|t| (t, node.clone())).collect() }
    }
}

impl DecisionTree for TableTree {
    fn arity(&self) -> usize {
        self.arity
    }
    fn height(&self) -> usize {
        self.rows.values().map(Node::height).max().unwrap_or(0)
    }
    fn node(&self, input: &[u32], z: &[bool]) -> Label {
        let mut cur = match self.rows.get(input) {
            Some(n) => n,
            None => return Label::Output(0),
        };
        for &b in z {
            match cur {
                Node::Out(_) => break,
                Node::Query(_, zero, one) => cur = if b { one } else { zero },
            }
        }
        match cur {
            Node::Out(v) => Label::Output(*v),
            Node::Query(k, _, _) => Label::Query(k.clone()),
        }
    }
}

/// A pseudo-random tree: each node's label is a hash of (seed, input, path).
/// Once a prefix outputs, every extension reports the same output.
#[derive(Debug, Clone)]
pub struct RandomTree {
    arity: usize,
    height: usize,
    seed: u64,
    keys: Arc<Vec<RelevantKey>>,
    out_range: u64,
    stop_percent: u64,
}

impl RandomTree {
    /// Queries are drawn from the relevant keys of (lang, n); outputs from
    /// [0, out_range). Each internal node stops early with `stop_percent` chance.
    pub fn new(lang: &Language, n: u32, arity: usize, height: usize, out_range: u64, stop_percent: u64, seed: u64) -> Self {
        RandomTree { arity, height, seed, keys: Arc::new(relevant_elements(lang, n)), out_range: out_range.max(1), stop_percent }
    }

    fn mix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^ (x >> 31)
    }
}

impl DecisionTree for RandomTree {
    fn arity(&self) -> usize {
        self.arity
    }
    fn height(&self) -> usize {
        self.height
    }
    fn node(&self, input: &[u32], z: &[bool]) -> Label {
        let mut h = Self::mix(self.seed);
        for &a in input {
            h = Self::mix(h ^ a as u64);
        }
        for d in 0..=z.len() {
            let stop = d == self.height || self.keys.is_empty() || Self::mix(h ^ 0x5a5a) % 100 < self.stop_percent;
            if stop {
                return Label::Output(Self::mix(h ^ 0xa5a5) % self.out_range);
            }
            if d == z.len() {
                return Label::Query(self.keys[(Self::mix(h ^ 0x3c3c) % self.keys.len() as u64) as usize].clone());
            }
            h = Self::mix(h ^ (2 + z[d] as u64));
        }
        unreachable!("loop returns at d == z.len()")
    }
}

/// One tree per symbol of the target language, all on inputs from [m].
#[derive(Clone)]
pub struct TreeFamily {
    pub target: Language,
    pub m: u32,
    pub b0: usize,
    pub trees: Vec<Arc<dyn DecisionTree>>,
}

impl fmt::Debug for TreeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeFamily(m {}, b0 {}, {} trees)", self.m, self.b0, self.trees.len())
    }
}

impl TreeFamily {
    pub fn new(target: &Language, m: u32, b0: usize, trees: Vec<Arc<dyn DecisionTree>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Contract("m must be at least 1".into()));
        }
        if trees.len() != target.len() {
            return Err(Error::Contract(format!("{} trees for {} symbols", trees.len(), target.len())));
        }
        for (s, t) in target.symbols.iter().zip(&trees) {
            if t.arity() != s.arity {
                return Err(Error::ArityMismatch { symbol: s.name.clone(), expected: s.arity, got: t.arity() });
            }
            if t.height() > b0 {
                return Err(Error::MalformedTree(format!("tree for `{}` has height {} > {b0}", s.name, t.height())));
            }
        }
        Ok(TreeFamily { target: target.clone(), m, b0, trees })
    }

    /// Random trees of height b0 querying the source coding (lang, n); every
    /// path asks exactly b0 questions.
    pub fn random(target: &Language, m: u32, b0: usize, source: &Language, n: u32, seed: u64) -> Result<Self> {
        let trees = target
            .symbols
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let range = if s.is_function() { m as u64 } else { 2 };
                Arc::new(RandomTree::new(source, n, s.arity, b0, range, 0, seed.wrapping_mul(31).wrapping_add(i as u64)))
                    as Arc<dyn DecisionTree>
            })
            .collect();
        Self::new(target, m, b0, trees)
    }

    /// Bit-probe trees reading the coded structure itself (L̃ = L, m = n).
    pub fn bit_probe(lang: &Language, n: u32) -> Result<Self> {
        let trees = (0..lang.len()).map(|s| Arc::new(bit_probe_tree(lang, n, s)) as Arc<dyn DecisionTree>).collect();
        Self::new(lang, n, value_bits(n) as usize, trees)
    }

    /// All (symbol, tuple) pairs of the target on [m].
    pub fn pairs(&self) -> Vec<(usize, Vec<u32>)> {
        let mut out = Vec::new();
        for (s, sym) in self.target.symbols.iter().enumerate() {
            out.extend(tuples(self.m, sym.arity).map(|t| (s, t)));
        }
        out
    }

    /// Clamps a tree output to a value of the target symbol.
    pub fn clamp(&self, sym: usize, out: u64) -> u32 {
        match self.target.symbol(sym).kind {
            SymbolKind::Function => out.min(self.m as u64 - 1) as u32,
            SymbolKind::Relation => out.min(1) as u32,
        }
    }
}

/// C(F, m, p): a cell is defined iff its maximal answer sequence is complete.
pub fn build_c<A: Answers + ?Sized>(f: &TreeFamily, src: &A) -> Result<PartialStructure> {
    let mut c = PartialStructure::undefined(&f.target, f.m)?;
    for (s, args) in f.pairs() {
        let (_, out) = run(f.trees[s].as_ref(), &args, src)?;
        if let Some(v) = out {
            c.set(s, &args, Some(f.clamp(s, v)))?;
        }
    }
    Ok(c)
}

/// Trees computing I(B) from the binary code of B on [n]: a relation tree
/// evaluates δ_S, a function tree tries the Herbrand terms in turn and outputs
/// the first value satisfying δ_S (0 if none does). Cells are read whole, each
/// at most once per run.
pub fn trees_from_interpretation(i: &Interpretation, n: u32) -> Result<TreeFamily> {
    if n == 0 {
        return Err(Error::Contract("n must be at least 1".into()));
    }
    let source = i.source_language().clone();
    let per_cell = value_bits(n).max(1) as usize;
    let mut trees: Vec<Arc<dyn DecisionTree>> = Vec::new();
    let mut b0 = 0;
    for (sym, s) in i.target_language().symbols.iter().enumerate() {
        let def = i.defs[sym].clone();
        let height = def.read_bound(s.kind) * per_cell;
        b0 = b0.max(height);
        let lang = source.clone();
        let is_fun = s.is_function();
        trees.push(Arc::new(ProgramTree::new(s.arity, height, move |input, prober| {
            let mut cache: BTreeMap<(usize, Vec<u32>), u32> = BTreeMap::new();
            let mut read = |sym: usize, args: &[u32]| -> Option<u32> {
                if let Some(&v) = cache.get(&(sym, args.to_vec())) {
                    return Some(v);
                }
                let v = prober.value(&lang, n, sym, args)? as u32;
                cache.insert((sym, args.to_vec()), v);
                Some(v)
            };
            let out = if is_fun {
                def.herbrand_pick(n, input, &mut read).map(|y| y.unwrap_or(0) as u64)
            } else {
                def.holds(n, input, None, &mut read).map(u64::from)
            };
            match out {
                Ok(v) => Some(v),
                // The prober is waiting for an answer.
                Err(Stop::Missing(..)) => None,
                // Definitions are checked at parse time; a failure here is a
                // numeral outside [n], which reads as value 0.
                Err(Stop::Fail(_)) => Some(0),
            }
        })));
    }
    TreeFamily::new(i.target_language(), n, b0, trees)
}
