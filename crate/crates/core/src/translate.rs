//! Propositional translations of basic sentences: the unary and binary
//! translations on [n], constant elimination, substitution, metrics and
//! DIMACS export of the negation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::{key_id, unary_key_id, value_bits, RelevantKey, UnaryKey};
use crate::error::{Error, Result};
use crate::syntax::{BasicSentence, Language, Literal, SymbolKind};
use crate::util::tuples;

/// A propositional variable: an element of the unary or of the binary code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "coding", content = "key", rename_all = "lowercase")]
pub enum VarKey {
    Unary(UnaryKey),
    Relevant(RelevantKey),
}

impl VarKey {
    /// `u:f(0)=1` or `b:f(0)#1`.
    pub fn render(&self, lang: &Language) -> String {
        match self {
            VarKey::Unary(k) => format!("u:{}", k.render(lang)),
            VarKey::Relevant(k) => format!("b:{}", k.render(lang)),
        }
    }

    pub fn parse(lang: &Language, text: &str) -> Result<Self> {
        if let Some(rest) = text.strip_prefix("u:") {
            Ok(VarKey::Unary(UnaryKey::parse(lang, rest)?))
        } else if let Some(rest) = text.strip_prefix("b:") {
            Ok(VarKey::Relevant(RelevantKey::parse(lang, rest)?))
        } else {
            Err(Error::Syntax { line: 1, col: 1, msg: format!("variable `{text}` lacks a u: or b: prefix") })
        }
    }

    pub fn coding(&self) -> Coding {
        match self {
            VarKey::Unary(_) => Coding::Unary,
            VarKey::Relevant(_) => Coding::Binary,
        }
    }

    /// Canonical 1-based id within its coding on [n].
    pub fn id(&self, lang: &Language, n: u32) -> Option<u64> {
        match self {
            VarKey::Unary(k) => unary_key_id(lang, n, k),
            VarKey::Relevant(k) => key_id(lang, n, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    Unary,
    Binary,
}

impl Coding {
    /// Number of variables of this coding on [n].
    pub fn size(self, lang: &Language, n: u32) -> u64 {
        lang.symbols
            .iter()
            .map(|s| {
                let per = match (self, s.kind) {
                    (_, SymbolKind::Relation) => 1,
                    (Coding::Unary, SymbolKind::Function) => n as u64,
                    (Coding::Binary, SymbolKind::Function) => value_bits(n) as u64,
                };
                (n as u64).pow(s.arity as u32) * per
            })
            .sum()
    }
}

/// A formula in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropFormula {
    Const(bool),
    Var(VarKey),
    NegVar(VarKey),
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub depth: usize,
    pub size: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Gate {
    And,
    Or,
}

impl PropFormula {
    pub fn is_literal(&self) -> bool {
        matches!(self, PropFormula::Var(_) | PropFormula::NegVar(_))
    }

    /// The dual: swap ∧/∨, 0/1 and X/¬X.
    pub fn negate(&self) -> PropFormula {
        match self {
            PropFormula::Const(b) => PropFormula::Const(!b),
            PropFormula::Var(k) => PropFormula::NegVar(k.clone()),
            PropFormula::NegVar(k) => PropFormula::Var(k.clone()),
            PropFormula::And(c) => PropFormula::Or(c.iter().map(PropFormula::negate).collect()),
            PropFormula::Or(c) => PropFormula::And(c.iter().map(PropFormula::negate).collect()),
        }
    }

    pub fn eval(&self, assign: &impl Fn(&VarKey) -> bool) -> bool {
        match self {
            PropFormula::Const(b) => *b,
            PropFormula::Var(k) => assign(k),
            PropFormula::NegVar(k) => !assign(k),
            PropFormula::And(c) => c.iter().all(|f| f.eval(assign)),
            PropFormula::Or(c) => c.iter().any(|f| f.eval(assign)),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarKey> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarKey>) {
        match self {
            PropFormula::Const(_) => {}
            PropFormula::Var(k) | PropFormula::NegVar(k) => {
                if !out.contains(k) {
                    out.insert(k.clone());
                }
            }
            PropFormula::And(c) | PropFormula::Or(c) => c.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    /// Node count of the tree as built.
    pub fn size(&self) -> usize {
        match self {
            PropFormula::And(c) | PropFormula::Or(c) => 1 + c.iter().map(PropFormula::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Alternation depth: literals and constants have depth 0, and a gate
    /// directly below a gate of the same kind adds no layer.
    pub fn depth(&self) -> usize {
        self.depth_under(None)
    }

    fn depth_under(&self, parent: Option<Gate>) -> usize {
        let (gate, children) = match self {
            PropFormula::And(c) => (Gate::And, c),
            PropFormula::Or(c) => (Gate::Or, c),
            _ => return 0,
        };
        let inner = children.iter().map(|f| f.depth_under(Some(gate))).max().unwrap_or(0);
        if parent == Some(gate) {
            inner
        } else {
            inner + 1
        }
    }

    /// `(and ..)`, `(or ..)`, `1`, `0`, a variable or `~` and a variable.
    pub fn render(&self, lang: &Language) -> String {
        let mut out = String::new();
        self.render_into(lang, &mut out);
        out
    }

    fn render_into(&self, lang: &Language, out: &mut String) {
        match self {
            PropFormula::Const(b) => out.push(if *b { '1' } else { '0' }),
            PropFormula::Var(k) => out.push_str(&k.render(lang)),
            PropFormula::NegVar(k) => {
                out.push('~');
                out.push_str(&k.render(lang));
            }
            PropFormula::And(c) | PropFormula::Or(c) => {
                out.push_str(if matches!(self, PropFormula::And(_)) { "(and" } else { "(or" });
                for f in c {
                    out.push(' ');
                    f.render_into(lang, out);
                }
                out.push(')');
            }
        }
    }

    pub fn parse(lang: &Language, text: &str) -> Result<PropFormula> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let f = parse_tokens(lang, &tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(syntax("trailing input after formula"));
        }
        Ok(f)
    }
}

fn syntax(msg: &str) -> Error {
    Error::Syntax { line: 1, col: 1, msg: msg.to_string() }
}

#[derive(Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                out.push(Token::Open)
            }
            ')' => {
                chars.next();
                out.push(Token::Close)
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                // Atoms may contain balanced parentheses: `b:f(0,1)#2`.
                let mut atom = String::new();
                let mut depth = 0usize;
                while let Some(&c) = chars.peek() {
                    if (c.is_whitespace() && depth == 0) || (c == ')' && depth == 0) {
                        break;
                    }
                    match c {
                        '(' => depth += 1,
                        ')' => depth -= 1,
                        _ => {}
                    }
                    atom.push(c);
                    chars.next();
                }
                out.push(Token::Atom(atom));
            }
        }
    }
    out
}

fn parse_tokens(lang: &Language, tokens: &[Token], pos: &mut usize) -> Result<PropFormula> {
    let tok = tokens.get(*pos).ok_or_else(|| syntax("unexpected end of formula"))?;
    *pos += 1;
    match tok {
        Token::Close => Err(syntax("unexpected `)`")),
        Token::Atom(a) => match a.as_str() {
            "1" => Ok(PropFormula::Const(true)),
            "0" => Ok(PropFormula::Const(false)),
            _ => match a.strip_prefix('~') {
                Some(rest) => Ok(PropFormula::NegVar(VarKey::parse(lang, rest)?)),
                None => Ok(PropFormula::Var(VarKey::parse(lang, a)?)),
            },
        },
        Token::Open => {
            let gate = match tokens.get(*pos) {
                Some(Token::Atom(g)) if g == "and" || g == "or" => g.clone(),
                _ => return Err(syntax("expected `and` or `or` after `(`")),
            };
            *pos += 1;
            let mut children = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(Token::Close) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => children.push(parse_tokens(lang, tokens, pos)?),
                    None => return Err(syntax("unclosed `(`")),
                }
            }
            Ok(if gate == "and" { PropFormula::And(children) } else { PropFormula::Or(children) })
        }
    }
}

pub fn metrics(f: &PropFormula) -> Metrics {
    Metrics { depth: f.depth(), size: f.size() }
}

// ---------------------------------------------------------------------------
// Translations

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Contract("translations need n >= 1".into()));
    }
    Ok(())
}

fn iff_const(key: VarKey, b: bool) -> PropFormula {
    PropFormula::And(vec![
        PropFormula::Or(vec![PropFormula::NegVar(key.clone()), PropFormula::Const(b)]),
        PropFormula::Or(vec![PropFormula::Var(key), PropFormula::Const(!b)]),
    ])
}

/// The graph of f at ū in B(L, n, α): the bits of ū's cell spell v, or
/// v = n-1 and the raw pattern exceeds n-1.
fn binary_graph(sym: usize, args: &[u32], v: u32, n: u32) -> PropFormula {
    let len = value_bits(n);
    let key = |i: u32| VarKey::Relevant(RelevantKey::FunBit { sym, args: args.to_vec(), bit: i });
    let bit = |x: u32, i: u32| (x >> i) & 1 == 1;
    let exact = PropFormula::And(vec![
        PropFormula::Const(v < n),
        PropFormula::And((0..len).map(|i| iff_const(key(i), bit(v, i))).collect()),
    ]);
    let top = n - 1;
    let clamp = PropFormula::And(vec![
        PropFormula::Const(v == top),
        PropFormula::Or(
            (0..len)
                .map(|i| {
                    PropFormula::And(vec![
                        PropFormula::Var(key(i)),
                        PropFormula::Const(!bit(top, i)),
                        PropFormula::And(
                            (0..len)
                                .map(|j| PropFormula::Or(vec![PropFormula::Const(i >= j), iff_const(key(j), bit(top, j))]))
                                .collect(),
                        ),
                    ])
                })
                .collect(),
        ),
    ]);
    PropFormula::Or(vec![exact, clamp])
}

fn literal_formula(lit: &Literal, tuple: &[u32], n: u32, coding: Coding) -> PropFormula {
    let at = |vs: &[usize]| vs.iter().map(|&v| tuple[v]).collect::<Vec<u32>>();
    match lit {
        Literal::Rel { sym, args, positive } => {
            let args = at(args);
            let key = match coding {
                Coding::Unary => VarKey::Unary(UnaryKey::Rel { sym: *sym, args }),
                Coding::Binary => VarKey::Relevant(RelevantKey::Rel { sym: *sym, args }),
            };
            if *positive {
                PropFormula::Var(key)
            } else {
                PropFormula::NegVar(key)
            }
        }
        Literal::Fun { sym, args, value } => match coding {
            Coding::Unary => {
                PropFormula::Var(VarKey::Unary(UnaryKey::FunGraph { sym: *sym, args: at(args), value: tuple[*value] }))
            }
            Coding::Binary => binary_graph(*sym, &at(args), tuple[*value], n),
        },
        Literal::Eq { left, right, positive } => PropFormula::Const((tuple[*left] == tuple[*right]) == *positive),
        Literal::Less { left, right } => PropFormula::Const(tuple[*left] < tuple[*right]),
        Literal::Numeral { value, var } => PropFormula::Const(*value == tuple[*var] as u64),
    }
}

/// The matrix of φ at one witness tuple.
fn tuple_formula(phi: &BasicSentence, tuple: &[u32], n: u32, coding: Coding) -> PropFormula {
    PropFormula::Or(
        phi.matrix
            .iter()
            .map(|d| PropFormula::And(d.iter().map(|l| literal_formula(l, tuple, n, coding)).collect()))
            .collect(),
    )
}

/// ∃ȳ over [n] expanded into a disjunction over witness tuples.
pub fn consequent(phi: &BasicSentence, n: u32, coding: Coding) -> Result<PropFormula> {
    check_n(n)?;
    Ok(PropFormula::Or(tuples(n, phi.num_vars()).map(|t| tuple_formula(phi, &t, n, coding)).collect()))
}

/// "A(L, n, α) is defined": every function cell has exactly one value.
pub fn defined_formula(lang: &Language, n: u32) -> Result<PropFormula> {
    check_n(n)?;
    let mut parts = Vec::new();
    for (sym, s) in lang.symbols.iter().enumerate() {
        if s.kind != SymbolKind::Function {
            continue;
        }
        let graph = |args: &[u32], value: u32| VarKey::Unary(UnaryKey::FunGraph { sym, args: args.to_vec(), value });
        let mut total = Vec::new();
        let mut single = Vec::new();
        for args in tuples(n, s.arity) {
            total.push(PropFormula::Or((0..n).map(|v| PropFormula::Var(graph(&args, v))).collect()));
            for v in 0..n {
                for w in 0..n {
                    single.push(PropFormula::Or(vec![
                        PropFormula::Const(v == w),
                        PropFormula::NegVar(graph(&args, v)),
                        PropFormula::NegVar(graph(&args, w)),
                    ]));
                }
            }
        }
        parts.push(PropFormula::And(vec![PropFormula::And(total), PropFormula::And(single)]));
    }
    Ok(PropFormula::And(parts))
}

/// ⟨A(L,n,α) is defined → ∃ȳ A(L,n,α) ⊨ φ(ȳ)⟩, the implication written as ¬D ∨ C.
pub fn unary_translation(phi: &BasicSentence, n: u32) -> Result<PropFormula> {
    Ok(PropFormula::Or(vec![defined_formula(&phi.language, n)?.negate(), consequent(phi, n, Coding::Unary)?]))
}

/// ⟨∃ȳ B(L,n,α) ⊨ φ(ȳ)⟩.
pub fn binary_translation(phi: &BasicSentence, n: u32) -> Result<PropFormula> {
    consequent(phi, n, Coding::Binary)
}

pub fn translation(phi: &BasicSentence, n: u32, coding: Coding) -> Result<PropFormula> {
    match coding {
        Coding::Unary => unary_translation(phi, n),
        Coding::Binary => binary_translation(phi, n),
    }
}

/// Metrics of a translation without holding the whole tree in memory. Agrees
/// with `metrics(&translation(..))`.
pub fn translation_metrics(phi: &BasicSentence, n: u32, coding: Coding) -> Result<Metrics> {
    check_n(n)?;
    // Consequent: an Or over per-tuple Or nodes, which merge into it.
    let (mut size, mut inner) = (1usize, 0usize);
    for t in tuples(n, phi.num_vars()) {
        let f = tuple_formula(phi, &t, n, coding);
        size += f.size();
        inner = inner.max(f.depth_under(Some(Gate::Or)));
    }
    let cons = Metrics { depth: inner + 1, size };
    if coding == Coding::Binary {
        return Ok(cons);
    }
    let neg = defined_formula(&phi.language, n)?.negate();
    Ok(Metrics {
        depth: 1 + neg.depth_under(Some(Gate::Or)).max(inner),
        size: 1 + neg.size() + cons.size,
    })
}

// ---------------------------------------------------------------------------
// Rewriting

/// Removes constants by 0∨F→F, 1∧F→F, 0∧F→0, 1∨F→1 and flattens directly
/// nested gates of the same kind. Empty gates become constants and single
/// children replace their gate. The result is either a constant or constant-free.
pub fn simplify_constants(f: &PropFormula) -> PropFormula {
    let (is_and, children) = match f {
        PropFormula::And(c) => (true, c),
        PropFormula::Or(c) => (false, c),
        other => return other.clone(),
    };
    // For ∧ the absorbing constant is 0, for ∨ it is 1.
    let absorbing = !is_and;
    let mut out = Vec::with_capacity(children.len());
    for c in children {
        match simplify_constants(c) {
            PropFormula::Const(b) if b == absorbing => return PropFormula::Const(absorbing),
            PropFormula::Const(_) => {}
            PropFormula::And(g) if is_and => out.extend(g),
            PropFormula::Or(g) if !is_and => out.extend(g),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => PropFormula::Const(is_and),
        1 => out.pop().expect("one child"),
        _ if is_and => PropFormula::And(out),
        _ => PropFormula::Or(out),
    }
}

/// Simultaneous replacement of variables; negated occurrences receive the dual.
pub fn substitute(f: &PropFormula, sigma: &BTreeMap<VarKey, PropFormula>) -> PropFormula {
    match f {
        PropFormula::Const(_) => f.clone(),
        PropFormula::Var(k) => sigma.get(k).cloned().unwrap_or_else(|| f.clone()),
        PropFormula::NegVar(k) => sigma.get(k).map_or_else(|| f.clone(), PropFormula::negate),
        PropFormula::And(c) => PropFormula::And(c.iter().map(|g| substitute(g, sigma)).collect()),
        PropFormula::Or(c) => PropFormula::Or(c.iter().map(|g| substitute(g, sigma)).collect()),
    }
}

/// Top-level disjuncts, looking through nested disjunctions.
type Term = BTreeMap<VarKey, bool>;

fn dnf_terms(f: &PropFormula, max_terms: usize) -> Result<Vec<Term>> {
    Ok(match f {
        PropFormula::Const(true) => vec![Term::new()],
        PropFormula::Const(false) => Vec::new(),
        PropFormula::Var(k) => vec![Term::from([(k.clone(), true)])],
        PropFormula::NegVar(k) => vec![Term::from([(k.clone(), false)])],
        PropFormula::Or(c) => {
            let mut out = Vec::new();
            for g in c {
                out.extend(dnf_terms(g, max_terms)?);
                if out.len() > max_terms {
                    return Err(Error::Budget(max_terms));
                }
            }
            out
        }
        PropFormula::And(c) => {
            let mut acc = vec![Term::new()];
            for g in c {
                let right = dnf_terms(g, max_terms)?;
                let mut next = Vec::new();
                for a in &acc {
                    'term: for b in &right {
                        let mut t = a.clone();
                        for (k, &v) in b {
                            if *t.entry(k.clone()).or_insert(v) != v {
                                continue 'term;
                            }
                        }
                        next.push(t);
                        if next.len() > max_terms {
                            return Err(Error::Budget(max_terms));
                        }
                    }
                }
                acc = next;
            }
            acc
        }
    })
}

/// An equivalent disjunction of conjunctions of literals, by distribution.
/// Contradictory terms are dropped and duplicates merged; fails with
/// `Budget` once more than `max_terms` terms would be needed.
pub fn to_dnf(f: &PropFormula, max_terms: usize) -> Result<PropFormula> {
    let mut terms = dnf_terms(&simplify_constants(f), max_terms)?;
    terms.sort();
    terms.dedup();
    if terms.iter().any(BTreeMap::is_empty) {
        return Ok(PropFormula::Const(true));
    }
    let lit = |(k, v): (VarKey, bool)| if v { PropFormula::Var(k) } else { PropFormula::NegVar(k) };
    let conj: Vec<PropFormula> = terms
        .into_iter()
        .map(|t| {
            let mut l: Vec<PropFormula> = t.into_iter().map(lit).collect();
            if l.len() == 1 { l.pop().unwrap() } else { PropFormula::And(l) }
        })
        .collect();
    Ok(match conj.len() {
        0 => PropFormula::Const(false),
        1 => conj.into_iter().next().unwrap(),
        _ => PropFormula::Or(conj),
    })
}

pub fn disjuncts(f: &PropFormula) -> Vec<&PropFormula> {
    match f {
        PropFormula::Or(c) => c.iter().flat_map(disjuncts).collect(),
        other => vec![other],
    }
}

// ---------------------------------------------------------------------------
// Exhaustive evaluation, 64 assignments per pass

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(bool),
    Var(usize, bool),
    And(usize),
    Or(usize),
}

/// A formula flattened to postfix over indexed variables.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    vars: Vec<VarKey>,
    ops: Vec<Op>,
}

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Assignment words for block `block` of all 2^v assignments: assignment
/// number `block·64 + lane` sets variable i to its bit i.
fn lane_words(v: usize, block: u64) -> Vec<u64> {
    (0..v).map(|i| if i < 6 { LANE_PATTERNS[i] } else if (block >> (i - 6)) & 1 == 1 { !0 } else { 0 }).collect()
}

fn lane_mask(v: usize) -> u64 {
    if v >= 6 {
        !0
    } else {
        (1u64 << (1u32 << v)) - 1
    }
}

impl CompiledFormula {
    pub fn new(f: &PropFormula) -> Self {
        let vars: Vec<VarKey> = f.vars().into_iter().collect();
        let index: BTreeMap<&VarKey, usize> = vars.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut ops = Vec::new();
        fn walk(f: &PropFormula, index: &BTreeMap<&VarKey, usize>, ops: &mut Vec<Op>) {
            match f {
                PropFormula::Const(b) => ops.push(Op::Const(*b)),
                PropFormula::Var(k) => ops.push(Op::Var(index[k], true)),
                PropFormula::NegVar(k) => ops.push(Op::Var(index[k], false)),
                PropFormula::And(c) | PropFormula::Or(c) => {
                    c.iter().for_each(|g| walk(g, index, ops));
                    ops.push(if matches!(f, PropFormula::And(_)) { Op::And(c.len()) } else { Op::Or(c.len()) });
                }
            }
        }
        walk(f, &index, &mut ops);
        CompiledFormula { vars, ops }
    }

    pub fn vars(&self) -> &[VarKey] {
        &self.vars
    }

    /// Evaluates 64 assignments at once, one per bit lane.
    pub fn eval_lanes(&self, words: &[u64]) -> u64 {
        let mut stack: Vec<u64> = Vec::with_capacity(64);
        for op in &self.ops {
            match *op {
                Op::Const(b) => stack.push(if b { !0 } else { 0 }),
                Op::Var(i, pos) => stack.push(if pos { words[i] } else { !words[i] }),
                Op::And(k) => {
                    let at = stack.len() - k;
                    let v = stack.drain(at..).fold(!0, |a, b| a & b);
                    stack.push(v);
                }
                Op::Or(k) => {
                    let at = stack.len() - k;
                    let v = stack.drain(at..).fold(0, |a, b| a | b);
                    stack.push(v);
                }
            }
        }
        stack.pop().expect("nonempty formula")
    }

    fn check_width(&self, max_vars: usize) -> Result<()> {
        if self.vars.len() > max_vars {
            return Err(Error::Contract(format!(
                "{} variables exceed the exhaustive limit of {max_vars}",
                self.vars.len()
            )));
        }
        Ok(())
    }

    /// First assignment (in counting order) with the given truth value.
    pub fn find_assignment(&self, value: bool, max_vars: usize) -> Result<Option<BTreeMap<VarKey, bool>>> {
        self.check_width(max_vars)?;
        let v = self.vars.len();
        let blocks = 1u64 << v.saturating_sub(6);
        for block in 0..blocks {
            let r = self.eval_lanes(&lane_words(v, block));
            let hits = (if value { r } else { !r }) & lane_mask(v);
            if hits != 0 {
                let a = block * 64 + hits.trailing_zeros() as u64;
                return Ok(Some(self.vars.iter().enumerate().map(|(i, k)| (k.clone(), (a >> i) & 1 == 1)).collect()));
            }
        }
        Ok(None)
    }

    pub fn count_models(&self, max_vars: usize) -> Result<u64> {
        self.check_width(max_vars)?;
        let v = self.vars.len();
        let blocks = 1u64 << v.saturating_sub(6);
        Ok((0..blocks).map(|b| (self.eval_lanes(&lane_words(v, b)) & lane_mask(v)).count_ones() as u64).sum())
    }
}

/// Default ceiling for exhaustive checks.
pub const EXHAUSTIVE_VARS: usize = 26;

/// Whether every assignment satisfies f, by exhaustive search.
pub fn is_tautology(f: &PropFormula, max_vars: usize) -> Result<bool> {
    Ok(CompiledFormula::new(f).find_assignment(false, max_vars)?.is_none())
}

/// Whether two formulas agree on all assignments to the union of their variables.
pub fn equivalent(f: &PropFormula, g: &PropFormula, max_vars: usize) -> Result<bool> {
    let both = PropFormula::Or(vec![
        PropFormula::And(vec![f.clone(), g.clone()]),
        PropFormula::And(vec![f.negate(), g.negate()]),
    ]);
    is_tautology(&both, max_vars)
}

// ---------------------------------------------------------------------------
// CNF

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CnfMode {
    /// Clause per disjunct of a DNF; no auxiliaries.
    Direct,
    Tseitin,
}

impl FromStr for CnfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(CnfMode::Direct),
            "tseitin" => Ok(CnfMode::Tseitin),
            other => Err(Error::Contract(format!("unknown CNF mode `{other}`"))),
        }
    }
}

/// A clause set over DIMACS variables 1..=num_vars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u64,
    pub clauses: Vec<Vec<i64>>,
    pub comments: Vec<String>,
}

impl Cnf {
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "c {c}");
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for cl in &self.clauses {
            for l in cl {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn parse_dimacs(text: &str) -> Result<Cnf> {
        let bad = |msg: &str| Error::Syntax { line: 0, col: 0, msg: msg.to_string() };
        let mut header = None;
        let mut comments = Vec::new();
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(c) = line.strip_prefix('c') {
                comments.push(c.trim_start().to_string());
                continue;
            }
            if let Some(p) = line.strip_prefix("p cnf") {
                let nums: Vec<u64> = p.split_whitespace().map(|x| x.parse().map_err(|_| bad("bad header"))).collect::<Result<_>>()?;
                if nums.len() != 2 {
                    return Err(bad("bad header"));
                }
                header = Some((nums[0], nums[1]));
                continue;
            }
            for tok in line.split_whitespace() {
                let l: i64 = tok.parse().map_err(|_| bad("bad literal"))?;
                if l == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(l);
                }
            }
        }
        let (num_vars, count) = header.ok_or_else(|| bad("missing header"))?;
        if !current.is_empty() || clauses.len() as u64 != count {
            return Err(bad("clause count does not match header"));
        }
        if clauses.iter().flatten().any(|l| l.unsigned_abs() > num_vars) {
            return Err(bad("literal exceeds variable count"));
        }
        Ok(Cnf { num_vars, clauses, comments })
    }

    /// A satisfying assignment over all `num_vars` variables, by exhaustive search.
    pub fn brute_force(&self, max_vars: usize) -> Result<Option<Vec<bool>>> {
        let v = self.num_vars as usize;
        if v > max_vars {
            return Err(Error::Contract(format!("{v} variables exceed the exhaustive limit of {max_vars}")));
        }
        for block in 0..1u64 << v.saturating_sub(6) {
            let words = lane_words(v, block);
            let mut sat = lane_mask(v);
            for cl in &self.clauses {
                let c = cl.iter().fold(0u64, |acc, &l| {
                    let w = words[l.unsigned_abs() as usize - 1];
                    acc | if l > 0 { w } else { !w }
                });
                sat &= c;
                if sat == 0 {
                    break;
                }
            }
            if sat != 0 {
                let a = block * 64 + sat.trailing_zeros() as u64;
                return Ok(Some((0..v).map(|i| (a >> i) & 1 == 1).collect()));
            }
        }
        Ok(None)
    }
}

/// DIMACS of ¬F. Variables are numbered by the canonical key bijection of
/// F's coding on [n]; Tseitin auxiliaries come after all coding variables.
pub fn export_cnf(f: &PropFormula, lang: &Language, n: u32, mode: CnfMode) -> Result<Cnf> {
    let vars = f.vars();
    let codings: BTreeSet<String> = vars.iter().map(|k| format!("{:?}", k.coding())).collect();
    if codings.len() > 1 {
        return Err(Error::Contract("formula mixes unary and binary variables".into()));
    }
    let coding = vars.iter().next().map_or(Coding::Binary, VarKey::coding);
    let base = coding.size(lang, n);
    let mut ids = BTreeMap::new();
    for k in &vars {
        let id = k.id(lang, n).ok_or_else(|| Error::OutOfRange(format!("{} on [{n}]", k.render(lang))))?;
        ids.insert(k.clone(), id as i64);
    }
    let lit = |g: &PropFormula| match g {
        PropFormula::Var(k) => Some(ids[k]),
        PropFormula::NegVar(k) => Some(-ids[k]),
        _ => None,
    };
    let mut comments = vec![
        "refutation convention: these clauses encode the negation of the formula,".to_string(),
        "so the formula is valid iff the clause set is unsatisfiable".to_string(),
        format!("coding {:?} on [{n}]: variables 1..{base} follow the canonical key order", coding).to_lowercase(),
    ];
    let s = simplify_constants(f);
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut num_vars = base;
    match (&s, mode) {
        // ¬1 is the empty clause, ¬0 the empty clause set.
        (PropFormula::Const(true), _) => clauses.push(Vec::new()),
        (PropFormula::Const(false), _) => {}
        (_, CnfMode::Direct) => {
            for d in disjuncts(&s) {
                let conj: Vec<&PropFormula> = match d {
                    PropFormula::And(c) => c.iter().collect(),
                    other => vec![other],
                };
                let clause = conj
                    .iter()
                    .map(|g| lit(g).map(|l| -l))
                    .collect::<Option<Vec<i64>>>()
                    .ok_or_else(|| Error::Contract("direct export needs a disjunction of conjunctions of literals".into()))?;
                clauses.push(clause);
            }
        }
        (_, CnfMode::Tseitin) => {
            let g = s.negate();
            let root = tseitin(&g, &ids, &mut num_vars, &mut clauses);
            clauses.push(vec![root]);
            comments.push(format!("tseitin auxiliaries {}..{num_vars}", base + 1));
        }
    }
    for k in &vars {
        comments.push(format!("v {} {}", ids[k], k.render(lang)));
    }
    Ok(Cnf { num_vars, clauses, comments })
}

/// Literal standing for g, with defining clauses for each gate.
fn tseitin(g: &PropFormula, ids: &BTreeMap<VarKey, i64>, next: &mut u64, clauses: &mut Vec<Vec<i64>>) -> i64 {
    match g {
        PropFormula::Var(k) => ids[k],
        PropFormula::NegVar(k) => -ids[k],
        PropFormula::Const(_) => unreachable!("constants are simplified away"),
        PropFormula::And(c) | PropFormula::Or(c) => {
            let kids: Vec<i64> = c.iter().map(|h| tseitin(h, ids, next, clauses)).collect();
            *next += 1;
            let a = *next as i64;
            if matches!(g, PropFormula::And(_)) {
                kids.iter().for_each(|&k| clauses.push(vec![-a, k]));
                clauses.push(std::iter::once(a).chain(kids.iter().map(|k| -k)).collect());
            } else {
                clauses.push(std::iter::once(-a).chain(kids.iter().copied()).collect());
                kids.iter().for_each(|&k| clauses.push(vec![a, -k]));
            }
            a
        }
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "depth {} size {}", self.depth, self.size)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::catalog;
    use crate::encoding::{decode_binary, decode_unary, encode_unary, relevant_elements, unary_elements, FullOracle};
    use crate::partial::verifies;
    use crate::syntax::parse_principle;

    fn sentence(name: &str) -> BasicSentence {
        catalog::builtin(name).unwrap().sentence
    }

    fn rel(sym: usize, args: Vec<u32>) -> VarKey {
        VarKey::Relevant(RelevantKey::Rel { sym, args })
    }

    fn binary_assignment(alpha: &FullOracle) -> impl Fn(&VarKey) -> bool + '_ {
        move |k| matches!(k, VarKey::Relevant(r) if alpha.contains(r))
    }

    #[test]
    fn literal_and_conjunction_metrics() {
        let x = PropFormula::Var(rel(0, vec![0]));
        assert_eq!(metrics(&x), Metrics { depth: 0, size: 1 });
        let c = PropFormula::And((0..4).map(|i| PropFormula::Var(rel(0, vec![i]))).collect());
        assert_eq!(metrics(&c), Metrics { depth: 1, size: 5 });
        // Same-kind nesting merges; alternation does not.
        let nested = PropFormula::And(vec![c.clone(), x.clone()]);
        assert_eq!(nested.depth(), 1);
        assert_eq!(PropFormula::Or(vec![c, x]).depth(), 2);
    }

    #[test]
    fn wphp_variable_sets() {
        let phi = sentence("WPHP");
        let u = unary_translation(&phi, 2).unwrap().vars();
        assert_eq!(u.len(), 8);
        assert!(u.iter().all(|k| matches!(k, VarKey::Unary(UnaryKey::FunGraph { .. }))));
        let b = binary_translation(&phi, 2).unwrap().vars();
        assert_eq!(b.len(), 4 * value_bits(2) as usize);
        assert!(b.iter().all(|k| matches!(k, VarKey::Relevant(RelevantKey::FunBit { .. }))));
    }

    #[test]
    fn trivial_sentence_is_constant_one() {
        let phi = parse_principle("principle T { language { } exists x . (x=x) }").unwrap();
        for n in 1..4 {
            assert_eq!(simplify_constants(&unary_translation(&phi, n).unwrap()), PropFormula::Const(true));
            assert_eq!(simplify_constants(&binary_translation(&phi, n).unwrap()), PropFormula::Const(true));
        }
        assert!(unary_translation(&phi, 0).is_err());
    }

    #[test]
    fn relation_only_languages_share_variables() {
        let phi = parse_principle("principle R { language { R/2 rel } exists x y . (R(x,y) & !R(y,x)) }").unwrap();
        let strip = |s: BTreeSet<VarKey>| -> BTreeSet<(usize, Vec<u32>)> {
            s.into_iter()
                .map(|k| match k {
                    VarKey::Unary(UnaryKey::Rel { sym, args }) | VarKey::Relevant(RelevantKey::Rel { sym, args }) => {
                        (sym, args)
                    }
                    other => panic!("unexpected {other:?}"),
                })
                .collect()
        };
        assert_eq!(strip(unary_translation(&phi, 3).unwrap().vars()), strip(binary_translation(&phi, 3).unwrap().vars()));
    }

    /// The binary translation holds under α exactly when the decoded structure satisfies φ.
    fn check_agreement(name: &str, n: u32) {
        let phi = sentence(name);
        let f = binary_translation(&phi, n).unwrap();
        let keys = relevant_elements(&phi.language, n);
        assert!(keys.len() <= 16, "{name} has {} keys", keys.len());
        for mask in 0u64..1 << keys.len() {
            let members = keys.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, k)| k.clone());
            let alpha = FullOracle::new(&phi.language, n, members).unwrap();
            let want = verifies(&decode_binary(&alpha), &phi);
            assert_eq!(f.eval(&binary_assignment(&alpha)), want, "{name} n={n} mask={mask:b}");
        }
    }

    #[test]
    fn binary_agreement_small() {
        for name in ["PHP", "WPHP", "PAR"] {
            check_agreement(name, 2);
        }
        check_agreement("PHP", 3);
    }

    #[test]
    fn unary_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["PHP", "WPHP", "HOP"] {
            let phi = sentence(name);
            let lang = &phi.language;
            let cons = consequent(&phi, 3, Coding::Unary).unwrap();
            let defined = defined_formula(lang, 3).unwrap();
            for _ in 0..40 {
                let a = catalog::random_total(lang, 3, &mut rng).unwrap();
                let code = encode_unary(&a).unwrap();
                let assign = |k: &VarKey| matches!(k, VarKey::Unary(u) if code.contains(u));
                assert!(defined.eval(&assign));
                assert_eq!(cons.eval(&assign), verifies(&a, &phi));
            }
            let all = unary_elements(lang, 3);
            for _ in 0..40 {
                let code: BTreeSet<UnaryKey> = all.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
                let assign = |k: &VarKey| matches!(k, VarKey::Unary(u) if code.contains(u));
                assert_eq!(defined.eval(&assign), decode_unary(lang, 3, &code).is_ok());
            }
        }
    }

    #[test]
    fn wphp_census() {
        let phi = sentence("WPHP");
        let s = simplify_constants(&unary_translation(&phi, 2).unwrap());
        let p = |i: u32, j: u32| UnaryKey::FunGraph { sym: 0, args: vec![i / 2, i % 2], value: j };
        let (mut empty_rows, mut two_values, mut collisions) = (0, 0, 0);
        let mut distinct = BTreeSet::new();
        for d in disjuncts(&s) {
            let lits: Vec<(bool, &UnaryKey)> = match d {
                PropFormula::And(c) => c
                    .iter()
                    .map(|l| match l {
                        PropFormula::Var(VarKey::Unary(k)) => (true, k),
                        PropFormula::NegVar(VarKey::Unary(k)) => (false, k),
                        other => panic!("not a literal: {other:?}"),
                    })
                    .collect(),
                other => panic!("not a conjunction: {other:?}"),
            };
            if lits.iter().all(|(pos, _)| !pos) {
                let i = lits[0].1.args()[0] * 2 + lits[0].1.args()[1];
                assert_eq!(lits, vec![(false, &p(i, 0)), (false, &p(i, 1))]);
                empty_rows += 1;
            } else {
                assert_eq!(lits.len(), 2);
                let (UnaryKey::FunGraph { args: a, value: v, .. }, UnaryKey::FunGraph { args: b, value: w, .. }) = (lits[0].1, lits[1].1) else {
                    panic!()
                };
                if a == b {
                    assert_ne!(v, w);
                    two_values += 1;
                } else {
                    assert_eq!(v, w);
                    collisions += 1;
                    distinct.insert((a.clone(), b.clone(), *v));
                }
            }
        }
        // Independent counts: n² empty rows, n²·n(n-1) ordered value pairs, and
        // the witness tuples (x,y,x',y',z) with x≠x' plus those with y≠y'.
        let n = 2u32;
        let tuples5 = (0..n.pow(5)).map(|t| (0..5).map(|k| t / n.pow(k) % n).collect::<Vec<_>>());
        let coll: usize = tuples5.map(|t| (t[0] != t[2]) as usize + (t[1] != t[3]) as usize).sum();
        assert_eq!(empty_rows, (n * n) as usize);
        assert_eq!(two_values, (n * n * n * (n - 1)) as usize);
        assert_eq!(collisions, coll);
        assert_eq!((empty_rows, two_values, collisions, distinct.len()), (4, 8, 32, 24));
    }

    #[test]
    fn direct_cnf_of_wphp_is_unsat() {
        let phi = sentence("WPHP");
        let f = simplify_constants(&unary_translation(&phi, 2).unwrap());
        let cnf = export_cnf(&f, &phi.language, 2, CnfMode::Direct).unwrap();
        assert_eq!(cnf.num_vars, 8);
        assert_eq!(cnf.clauses.len(), 44);
        assert_eq!(cnf.brute_force(8).unwrap(), None);
        let text = cnf.to_dimacs();
        assert!(text.starts_with("c refutation convention"));
        assert_eq!(Cnf::parse_dimacs(&text).unwrap().clauses, cnf.clauses);
        // Export simplifies first, so the raw translation gives the same clauses.
        let raw = unary_translation(&phi, 2).unwrap();
        assert_eq!(export_cnf(&raw, &phi.language, 2, CnfMode::Direct).unwrap(), cnf);
        let nested = PropFormula::And(vec![PropFormula::Or(vec![PropFormula::Var(rel(0, vec![0])), PropFormula::Var(rel(0, vec![1]))]), PropFormula::Var(rel(0, vec![2]))]);
        let l = parse_principle("principle R { language { R/1 rel } exists x . (R(x)) }").unwrap().language;
        assert!(export_cnf(&nested, &l, 3, CnfMode::Direct).is_err());
    }

    #[test]
    fn constant_cnf_conventions() {
        let l = Language::empty();
        let one = export_cnf(&PropFormula::Const(true), &l, 2, CnfMode::Direct).unwrap();
        assert_eq!(one.clauses, vec![Vec::<i64>::new()]);
        assert!(one.to_dimacs().ends_with("p cnf 0 1\n0\n"));
        assert!(export_cnf(&PropFormula::Const(false), &l, 2, CnfMode::Tseitin).unwrap().clauses.is_empty());
    }

    #[test]
    fn tseitin_is_equisatisfiable() {
        let l = parse_principle("principle R { language { R/1 rel } exists x . (R(x)) }").unwrap().language;
        let v = |i| PropFormula::Var(rel(0, vec![i]));
        let nv = |i| PropFormula::NegVar(rel(0, vec![i]));
        // (x0 ∧ (x1 ∨ ¬x2)) ∨ ¬x0 ∨ (x2 ∧ ¬x1): a tautology, so ¬F is UNSAT.
        let taut = PropFormula::Or(vec![
            PropFormula::And(vec![v(0), PropFormula::Or(vec![v(1), nv(2)])]),
            nv(0),
            PropFormula::And(vec![v(2), nv(1)]),
        ]);
        assert!(is_tautology(&taut, 10).unwrap());
        let cnf = export_cnf(&taut, &l, 3, CnfMode::Tseitin).unwrap();
        // Gates of ¬F: one ∧ root with an ∨, ∧ and ∨ below.
        assert_eq!(cnf.num_vars, 3 + 4);
        assert_eq!(cnf.clauses.len(), 14);
        assert_eq!(cnf.brute_force(10).unwrap(), None);
        let sat = PropFormula::Or(vec![PropFormula::And(vec![v(0), v(1)]), nv(2)]);
        let cnf = export_cnf(&sat, &l, 3, CnfMode::Tseitin).unwrap();
        let model = cnf.brute_force(10).unwrap().expect("¬F is satisfiable");
        assert!(!sat.eval(&|k: &VarKey| model[k.id(&l, 3).unwrap() as usize - 1]));
    }

    #[test]
    fn substitution() {
        let phi = sentence("PHP");
        let f = binary_translation(&phi, 2).unwrap();
        assert_eq!(substitute(&f, &BTreeMap::new()), f);
        let ones: BTreeMap<VarKey, PropFormula> = f.vars().into_iter().map(|k| (k, PropFormula::Const(true))).collect();
        assert_eq!(simplify_constants(&substitute(&f, &ones)), PropFormula::Const(true));
        let (a, b) = (rel(0, vec![0]), rel(0, vec![1]));
        let g = PropFormula::And(vec![PropFormula::Var(a.clone()), PropFormula::NegVar(b.clone())]);
        let swap = BTreeMap::from([(a.clone(), PropFormula::Var(b.clone())), (b.clone(), PropFormula::Var(a.clone()))]);
        assert_eq!(substitute(&g, &swap), PropFormula::And(vec![PropFormula::Var(b), PropFormula::NegVar(a)]));
    }

    #[test]
    fn binary_translations_are_tautologies() {
        for name in ["PHP", "WPHP", "HOP", "ITER"] {
            let f = binary_translation(&sentence(name), 2).unwrap();
            assert!(is_tautology(&f, 16).unwrap(), "{name}");
        }
        // PAR fails on even universes.
        assert!(!is_tautology(&binary_translation(&sentence("PAR"), 2).unwrap(), 16).unwrap());
    }

    #[test]
    fn render_round_trip() {
        let phi = sentence("PHP");
        for f in [binary_translation(&phi, 2).unwrap(), unary_translation(&phi, 2).unwrap()] {
            assert_eq!(PropFormula::parse(&phi.language, &f.render(&phi.language)).unwrap(), f);
        }
        assert!(PropFormula::parse(&phi.language, "(and 1").is_err());
        assert!(PropFormula::parse(&phi.language, "(xor 1)").is_err());
    }

    #[test]
    fn streamed_metrics_match() {
        for name in ["PHP", "WPHP"] {
            let phi = sentence(name);
            for n in 1..4 {
                for c in [Coding::Unary, Coding::Binary] {
                    assert_eq!(translation_metrics(&phi, n, c).unwrap(), metrics(&translation(&phi, n, c).unwrap()));
                }
            }
        }
    }

    #[test]
    fn size_bound_holds_for_a_fixed_depth() {
        let phi = sentence("PHP");
        for c in [Coding::Unary, Coding::Binary] {
            let ms: Vec<(u32, Metrics)> = (2..=16).map(|n| (n, translation_metrics(&phi, n, c).unwrap())).collect();
            let depth = ms[0].1.depth;
            assert!(ms.iter().all(|(_, m)| m.depth == depth), "{c:?}");
            // Least d with size ≤ 2^(len(n)^d) everywhere.
            let fits = |d: u32| ms.iter().all(|(n, m)| (m.size as f64).log2() <= (value_bits(*n) as f64).powi(d as i32));
            let d = (1..8).find(|&d| fits(d)).expect("some small d");
            // Measured once and recorded.
            let golden_depth = if c == Coding::Unary { 2 } else { 9 };
            assert_eq!((depth, d), (golden_depth, 4), "{c:?}");
        }
    }

    fn arb_formula() -> impl Strategy<Value = PropFormula> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(PropFormula::Const),
            (0u32..5).prop_map(|i| PropFormula::Var(rel(0, vec![i]))),
            (0u32..5).prop_map(|i| PropFormula::NegVar(rel(0, vec![i]))),
        ];
        leaf.prop_recursive(4, 40, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(PropFormula::And),
                prop::collection::vec(inner, 0..4).prop_map(PropFormula::Or),
            ]
        })
    }

    proptest! {
        #[test]
        fn simplification_preserves_meaning(f in arb_formula()) {
            let s = simplify_constants(&f);
            prop_assert!(equivalent(&f, &s, 20).unwrap());
            fn has_const(g: &PropFormula) -> bool {
                match g {
                    PropFormula::Const(_) => true,
                    PropFormula::And(c) | PropFormula::Or(c) => c.iter().any(has_const),
                    _ => false,
                }
            }
            prop_assert!(matches!(s, PropFormula::Const(_)) || !has_const(&s));
            prop_assert_eq!(simplify_constants(&s), s);
        }

        #[test]
        fn negation_is_complement(f in arb_formula(), mask in 0u32..32) {
            let assign = |k: &VarKey| match k { VarKey::Relevant(r) => mask >> r.args()[0] & 1 == 1, _ => false };
            prop_assert_eq!(f.negate().eval(&assign), !f.eval(&assign));
            prop_assert_eq!(f.negate().negate(), f);
        }

        #[test]
        fn dnf_is_equivalent_and_flat(f in arb_formula()) {
            let d = to_dnf(&f, 1 << 12).unwrap();
            prop_assert!(equivalent(&f, &d, 16).unwrap());
            for t in disjuncts(&d) {
                let flat = match t {
                    PropFormula::And(c) => c.iter().all(PropFormula::is_literal),
                    other => other.is_literal() || matches!(other, PropFormula::Const(_)),
                };
                prop_assert!(flat, "{:?}", t);
            }
        }
    }

    #[test]
    fn binary_direct_cnf_after_dnf() {
        let phi = sentence("PHP");
        let f = binary_translation(&phi, 2).unwrap();
        assert!(export_cnf(&f, &phi.language, 2, CnfMode::Direct).is_err());
        let d = to_dnf(&f, 1 << 16).unwrap();
        assert!(equivalent(&f, &d, 16).unwrap());
        let cnf = export_cnf(&d, &phi.language, 2, CnfMode::Direct).unwrap();
        assert_eq!(cnf.brute_force(16).unwrap(), None);
        assert!(matches!(to_dnf(&f, 3), Err(Error::Budget(3))));
    }
}
