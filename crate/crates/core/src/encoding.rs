//! Unary, binary and partial-oracle codings of structures.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partial::PartialStructure;
use crate::syntax::{Language, SymbolKind};
use crate::util::{bit_len, tuples};

/// Bits per function value on [n].
pub fn value_bits(n: u32) -> u32 {
    bit_len(n as u64)
}

/// An element of the binary code. Keys are plain data: a key may name a
/// symbol, tuple or bit that is not relevant for a given (L, n), which is
/// how trees ask irrelevant questions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RelevantKey {
    Rel { sym: usize, args: Vec<u32> },
    FunBit { sym: usize, args: Vec<u32>, bit: u32 },
}

impl RelevantKey {
    pub fn sym(&self) -> usize {
        match self {
            RelevantKey::Rel { sym, .. } | RelevantKey::FunBit { sym, .. } => *sym,
        }
    }

    pub fn args(&self) -> &[u32] {
        match self {
            RelevantKey::Rel { args, .. } | RelevantKey::FunBit { args, .. } => args,
        }
    }

    fn bit(&self) -> u32 {
        match self {
            RelevantKey::Rel { .. } => 0,
            RelevantKey::FunBit { bit, .. } => *bit,
        }
    }

    pub fn is_relevant(&self, lang: &Language, n: u32) -> bool {
        let Some(s) = lang.symbols.get(self.sym()) else { return false };
        let shape = match self {
            RelevantKey::Rel { .. } => s.kind == SymbolKind::Relation,
            RelevantKey::FunBit { bit, .. } => s.kind == SymbolKind::Function && *bit < value_bits(n),
        };
        shape && self.args().len() == s.arity && self.args().iter().all(|&a| a < n)
    }

    /// Text form: `R(0,1)` or `f(0,1)#2`.
    pub fn render(&self, lang: &Language) -> String {
        let name = lang.symbols.get(self.sym()).map_or_else(|| format!("#{}", self.sym()), |s| s.name.clone());
        let args: Vec<String> = self.args().iter().map(u32::to_string).collect();
        match self {
            RelevantKey::Rel { .. } => format!("{name}({})", args.join(",")),
            RelevantKey::FunBit { bit, .. } => format!("{name}({})#{bit}", args.join(",")),
        }
    }

    pub fn parse(lang: &Language, text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::Syntax { line: 1, col: 1, msg: format!("bad key `{text}`") };
        let open = text.find('(').ok_or_else(bad)?;
        let close = text.rfind(')').ok_or_else(bad)?;
        let name = &text[..open];
        let sym = lang.index_of(name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        let inner = text[open + 1..close].trim();
        let args = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|a| a.trim().parse::<u32>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?
        };
        let rest = &text[close + 1..];
        match (lang.symbol(sym).kind, rest.strip_prefix('#')) {
            (SymbolKind::Function, Some(b)) => Ok(RelevantKey::FunBit { sym, args, bit: b.parse().map_err(|_| bad())? }),
            (SymbolKind::Relation, None) if rest.is_empty() => Ok(RelevantKey::Rel { sym, args }),
            _ => Err(bad()),
        }
    }
}

impl Ord for RelevantKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.sym(), self.args(), self.bit()).cmp(&(other.sym(), other.args(), other.bit()))
    }
}

impl PartialOrd for RelevantKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All relevant keys for (L, n) in canonical order.
pub fn relevant_elements(lang: &Language, n: u32) -> Vec<RelevantKey> {
    let len = value_bits(n);
    let mut out = Vec::new();
    for (sym, s) in lang.symbols.iter().enumerate() {
        for args in tuples(n, s.arity) {
            match s.kind {
                SymbolKind::Relation => out.push(RelevantKey::Rel { sym, args }),
                SymbolKind::Function => {
                    out.extend((0..len).map(|bit| RelevantKey::FunBit { sym, args: args.clone(), bit }))
                }
            }
        }
    }
    out
}

/// Keys contributed by one symbol: arity n^ar, times the bit count for functions.
fn keys_per_cell(lang: &Language, sym: usize, n: u32) -> u64 {
    match lang.symbol(sym).kind {
        SymbolKind::Relation => 1,
        SymbolKind::Function => value_bits(n) as u64,
    }
}

/// 1-based position of a relevant key in canonical order.
pub fn key_id(lang: &Language, n: u32, key: &RelevantKey) -> Option<u64> {
    if !key.is_relevant(lang, n) {
        return None;
    }
    let mut base = 0u64;
    for s in 0..key.sym() {
        base += (n as u64).pow(lang.symbol(s).arity as u32) * keys_per_cell(lang, s, n);
    }
    let row = key.args().iter().fold(0u64, |acc, &a| acc * n as u64 + a as u64);
    Some(base + row * keys_per_cell(lang, key.sym(), n) + key.bit() as u64 + 1)
}

/// Inverse of [`key_id`].
pub fn key_of_id(lang: &Language, n: u32, id: u64) -> Option<RelevantKey> {
    let mut rest = id.checked_sub(1)?;
    for (sym, s) in lang.symbols.iter().enumerate() {
        let per = keys_per_cell(lang, sym, n);
        let block = (n as u64).pow(s.arity as u32) * per;
        if rest < block {
            let (mut row, bit) = (rest / per, (rest % per) as u32);
            let mut args = vec![0u32; s.arity];
            for slot in args.iter_mut().rev() {
                *slot = (row % n as u64) as u32;
                row /= n as u64;
            }
            return Some(match s.kind {
                SymbolKind::Relation => RelevantKey::Rel { sym, args },
                SymbolKind::Function => RelevantKey::FunBit { sym, args, bit },
            });
        }
        rest -= block;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum UnaryKey {
    Rel { sym: usize, args: Vec<u32> },
    FunGraph { sym: usize, args: Vec<u32>, value: u32 },
}

impl UnaryKey {
    pub fn render(&self, lang: &Language) -> String {
        match self {
            UnaryKey::Rel { sym, args } => RelevantKey::Rel { sym: *sym, args: args.clone() }.render(lang),
            UnaryKey::FunGraph { sym, args, value } => {
                let a: Vec<String> = args.iter().map(u32::to_string).collect();
                format!("{}({})={value}", lang.symbol(*sym).name, a.join(","))
            }
        }
    }

    pub fn in_range(&self, lang: &Language, n: u32) -> bool {
        let (sym, args, kind) = match self {
            UnaryKey::Rel { sym, args } => (*sym, args, SymbolKind::Relation),
            UnaryKey::FunGraph { sym, args, value } => {
                if *value >= n {
                    return false;
                }
                (*sym, args, SymbolKind::Function)
            }
        };
        lang.symbols.get(sym).is_some_and(|s| s.kind == kind && s.arity == args.len())
            && args.iter().all(|&a| a < n)
    }
}

impl UnaryKey {
    pub fn sym(&self) -> usize {
        match self {
            UnaryKey::Rel { sym, .. } | UnaryKey::FunGraph { sym, .. } => *sym,
        }
    }

    pub fn args(&self) -> &[u32] {
        match self {
            UnaryKey::Rel { args, .. } | UnaryKey::FunGraph { args, .. } => args,
        }
    }

    /// Text form: `R(0,1)` or `f(0,1)=2`.
    pub fn parse(lang: &Language, text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::Syntax { line: 1, col: 1, msg: format!("bad key `{text}`") };
        let close = text.rfind(')').ok_or_else(bad)?;
        match text[close + 1..].strip_prefix('=') {
            None if close + 1 == text.len() => match RelevantKey::parse(lang, text)? {
                RelevantKey::Rel { sym, args } => Ok(UnaryKey::Rel { sym, args }),
                RelevantKey::FunBit { .. } => Err(bad()),
            },
            Some(v) => {
                let value = v.parse().map_err(|_| bad())?;
                // Borrow the argument parser by asking for bit 0.
                match RelevantKey::parse(lang, &format!("{}#0", &text[..=close]))? {
                    RelevantKey::FunBit { sym, args, .. } => Ok(UnaryKey::FunGraph { sym, args, value }),
                    RelevantKey::Rel { .. } => Err(bad()),
                }
            }
            None => Err(bad()),
        }
    }
}

fn unary_per_cell(lang: &Language, sym: usize, n: u32) -> u64 {
    match lang.symbol(sym).kind {
        SymbolKind::Relation => 1,
        SymbolKind::Function => n as u64,
    }
}

/// All unary keys for (L, n) in canonical order (symbol, arguments, value).
pub fn unary_elements(lang: &Language, n: u32) -> Vec<UnaryKey> {
    let mut out = Vec::new();
    for (sym, s) in lang.symbols.iter().enumerate() {
        for args in tuples(n, s.arity) {
            match s.kind {
                SymbolKind::Relation => out.push(UnaryKey::Rel { sym, args }),
                SymbolKind::Function => {
                    out.extend((0..n).map(|value| UnaryKey::FunGraph { sym, args: args.clone(), value }))
                }
            }
        }
    }
    out
}

/// 1-based position of a unary key in canonical order.
pub fn unary_key_id(lang: &Language, n: u32, key: &UnaryKey) -> Option<u64> {
    if !key.in_range(lang, n) {
        return None;
    }
    let mut base = 0u64;
    for s in 0..key.sym() {
        base += (n as u64).pow(lang.symbol(s).arity as u32) * unary_per_cell(lang, s, n);
    }
    let row = key.args().iter().fold(0u64, |acc, &a| acc * n as u64 + a as u64);
    let value = match key {
        UnaryKey::Rel { .. } => 0,
        UnaryKey::FunGraph { value, .. } => *value as u64,
    };
    Some(base + row * unary_per_cell(lang, key.sym(), n) + value + 1)
}

/// Inverse of [`unary_key_id`].
pub fn unary_key_of_id(lang: &Language, n: u32, id: u64) -> Option<UnaryKey> {
    let mut rest = id.checked_sub(1)?;
    for (sym, s) in lang.symbols.iter().enumerate() {
        let per = unary_per_cell(lang, sym, n);
        let block = (n as u64).pow(s.arity as u32) * per;
        if rest < block {
            let (mut row, value) = (rest / per, (rest % per) as u32);
            let mut args = vec![0u32; s.arity];
            for slot in args.iter_mut().rev() {
                *slot = (row % n as u64) as u32;
                row /= n as u64;
            }
            return Some(match s.kind {
                SymbolKind::Relation => UnaryKey::Rel { sym, args },
                SymbolKind::Function => UnaryKey::FunGraph { sym, args, value },
            });
        }
        rest -= block;
    }
    None
}

/// A total oracle, stored as the set of relevant keys it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullOracle {
    language: Language,
    n: u32,
    members: BTreeSet<RelevantKey>,
}

impl FullOracle {
    pub fn new(language: &Language, n: u32, members: impl IntoIterator<Item = RelevantKey>) -> Result<Self> {
        let members: BTreeSet<_> = members.into_iter().collect();
        if let Some(k) = members.iter().find(|k| !k.is_relevant(language, n)) {
            return Err(Error::InvalidOracle(format!("{} is not relevant on [{n}]", k.render(language))));
        }
        Ok(FullOracle { language: language.clone(), n, members })
    }

    pub fn empty(language: &Language, n: u32) -> Self {
        FullOracle { language: language.clone(), n, members: BTreeSet::new() }
    }

    pub fn random(language: &Language, n: u32, rng: &mut impl Rng) -> Self {
        let members = relevant_elements(language, n).into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        FullOracle { language: language.clone(), n, members }
    }

    /// The exact binary code of a total structure.
    pub fn of_structure(a: &PartialStructure) -> Result<Self> {
        if !a.is_total() {
            return Err(Error::Contract("structure is not total".into()));
        }
        let mut members = BTreeSet::new();
        for (sym, idx, v) in a.defined_cells() {
            let args = a.args_of(sym, idx);
            push_ones(&mut members, a.language(), a.n(), sym, args, v as u64);
        }
        Ok(FullOracle { language: a.language().clone(), n: a.n(), members })
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Membership; irrelevant keys are never members.
    pub fn contains(&self, key: &RelevantKey) -> bool {
        self.members.contains(key)
    }

    pub fn members(&self) -> impl Iterator<Item = &RelevantKey> {
        self.members.iter()
    }
}

/// Adds the keys of one cell's code that are set in `raw`.
fn push_ones(out: &mut BTreeSet<RelevantKey>, lang: &Language, n: u32, sym: usize, args: Vec<u32>, raw: u64) {
    match lang.symbol(sym).kind {
        SymbolKind::Relation => {
            if raw != 0 {
                out.insert(RelevantKey::Rel { sym, args });
            }
        }
        SymbolKind::Function => {
            for bit in 0..value_bits(n) {
                if (raw >> bit) & 1 == 1 {
                    out.insert(RelevantKey::FunBit { sym, args: args.clone(), bit });
                }
            }
        }
    }
}

/// B(L, n, α): the total structure coded by α, clamping values to n − 1.
pub fn decode_binary(alpha: &FullOracle) -> PartialStructure {
    let (lang, n) = (&alpha.language, alpha.n);
    let mut a = PartialStructure::undefined(lang, n).expect("oracle universe fits");
    for (sym, s) in lang.symbols.iter().enumerate() {
        for idx in 0..a.cell_count(sym) {
            let args = a.args_of(sym, idx);
            let v = match s.kind {
                SymbolKind::Relation => alpha.contains(&RelevantKey::Rel { sym, args }) as u32,
                SymbolKind::Function => {
                    let raw = (0..value_bits(n))
                        .filter(|&bit| alpha.contains(&RelevantKey::FunBit { sym, args: args.clone(), bit }))
                        .fold(0u64, |acc, bit| acc | 1 << bit);
                    raw.min(n as u64 - 1) as u32
                }
            };
            a.set_unchecked(sym, idx, Some(v));
        }
    }
    a
}

/// Why a set of unary keys is not the code of a structure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NotAStructure {
    #[error("no value for {symbol}{args:?}")]
    Missing { symbol: String, args: Vec<u32> },
    #[error("several values for {symbol}{args:?}")]
    Duplicate { symbol: String, args: Vec<u32> },
    #[error("key out of range: {0}")]
    OutOfRange(String),
}

pub fn encode_unary(a: &PartialStructure) -> Result<BTreeSet<UnaryKey>> {
    if !a.is_total() {
        return Err(Error::Contract("structure is not total".into()));
    }
    let mut out = BTreeSet::new();
    for (sym, idx, v) in a.defined_cells() {
        let args = a.args_of(sym, idx);
        match a.language().symbol(sym).kind {
            SymbolKind::Relation if v == 1 => {
                out.insert(UnaryKey::Rel { sym, args });
            }
            SymbolKind::Relation => {}
            SymbolKind::Function => {
                out.insert(UnaryKey::FunGraph { sym, args, value: v });
            }
        }
    }
    Ok(out)
}

pub fn decode_unary(
    lang: &Language,
    n: u32,
    keys: &BTreeSet<UnaryKey>,
) -> std::result::Result<PartialStructure, NotAStructure> {
    let mut a = PartialStructure::undefined(lang, n).map_err(|e| NotAStructure::OutOfRange(e.to_string()))?;
    for (sym, s) in lang.symbols.iter().enumerate() {
        if s.kind == SymbolKind::Relation {
            for idx in 0..a.cell_count(sym) {
                a.set_unchecked(sym, idx, Some(0));
            }
        }
    }
    for k in keys {
        if !k.in_range(lang, n) {
            return Err(NotAStructure::OutOfRange(format!("{k:?}")));
        }
        match k {
            UnaryKey::Rel { sym, args } => {
                let idx = a.index(args);
                a.set_unchecked(*sym, idx, Some(1));
            }
            UnaryKey::FunGraph { sym, args, value } => {
                let idx = a.index(args);
                if a.get_idx(*sym, idx).is_some() {
                    return Err(NotAStructure::Duplicate { symbol: lang.symbol(*sym).name.clone(), args: args.clone() });
                }
                a.set_unchecked(*sym, idx, Some(*value));
            }
        }
    }
    for (sym, s) in lang.symbols.iter().enumerate() {
        if let Some(idx) = (0..a.cell_count(sym)).find(|&i| a.get_idx(sym, i).is_none()) {
            return Err(NotAStructure::Missing { symbol: s.name.clone(), args: a.args_of(sym, idx) });
        }
    }
    Ok(a)
}

pub fn unary_from_binary(alpha: &FullOracle) -> BTreeSet<UnaryKey> {
    encode_unary(&decode_binary(alpha)).expect("decoded structures are total")
}

/// The canonical binary code of the structure a unary code describes.
pub fn binary_from_unary(
    lang: &Language,
    n: u32,
    keys: &BTreeSet<UnaryKey>,
) -> std::result::Result<FullOracle, NotAStructure> {
    let a = decode_unary(lang, n, keys)?;
    Ok(FullOracle::of_structure(&a).expect("decoded structures are total"))
}

/// A partial oracle, stored per cell: the raw bit pattern of a function cell
/// (all bits present or none) or 0/1 for a relation cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOracle {
    language: Language,
    n: u32,
    cells: BTreeMap<(usize, Vec<u32>), u64>,
}

impl PartialOracle {
    pub fn empty(language: &Language, n: u32) -> Self {
        PartialOracle { language: language.clone(), n, cells: BTreeMap::new() }
    }

    /// Builds an oracle from p1 (keys answered 1) and p0 (keys answered 0).
    pub fn from_keys(language: &Language, n: u32, p1: &BTreeSet<RelevantKey>, p0: &BTreeSet<RelevantKey>) -> Result<Self> {
        if let Some(k) = p1.intersection(p0).next() {
            return Err(Error::InvalidOracle(format!("{} answered both ways", k.render(language))));
        }
        let mut per_cell: BTreeMap<(usize, Vec<u32>), (u64, u32)> = BTreeMap::new();
        for (k, one) in p1.iter().map(|k| (k, true)).chain(p0.iter().map(|k| (k, false))) {
            if !k.is_relevant(language, n) {
                return Err(Error::InvalidOracle(format!("{} is not relevant on [{n}]", k.render(language))));
            }
            let e = per_cell.entry((k.sym(), k.args().to_vec())).or_default();
            e.0 |= (one as u64) << k.bit();
            e.1 += 1;
        }
        let mut cells = BTreeMap::new();
        for ((sym, args), (raw, count)) in per_cell {
            if count as u64 != keys_per_cell(language, sym, n) {
                let key = RelevantKey::FunBit { sym, args, bit: 0 };
                return Err(Error::InvalidOracle(format!("partial bit block at {}", key.render(language))));
            }
            cells.insert((sym, args), raw);
        }
        Ok(PartialOracle { language: language.clone(), n, cells })
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// ‖p‖: the number of defined cells of B(p).
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, &[u32], u64)> + '_ {
        self.cells.iter().map(|((s, a), &v)| (*s, a.as_slice(), v))
    }

    pub fn has_cell(&self, sym: usize, args: &[u32]) -> bool {
        self.cells.contains_key(&(sym, args.to_vec()))
    }

    /// The decoded value of a defined cell.
    pub fn value(&self, sym: usize, args: &[u32]) -> Option<u32> {
        self.cells.get(&(sym, args.to_vec())).map(|&raw| raw.min(self.n as u64 - 1) as u32)
    }

    /// The stored bit pattern of a defined cell.
    pub fn raw(&self, sym: usize, args: &[u32]) -> Option<u64> {
        self.cells.get(&(sym, args.to_vec())).copied()
    }

    /// Defines a cell by its bit pattern; function cells may code values
    /// that decode by clamping.
    pub fn define_raw(&mut self, sym: usize, args: &[u32], raw: u64) -> Result<()> {
        let s = self.language.symbols.get(sym).ok_or_else(|| Error::UnknownSymbol(format!("#{sym}")))?;
        let limit = if s.is_function() { 1u64 << value_bits(self.n) } else { 2 };
        if s.arity != args.len() || raw >= limit || args.iter().any(|&a| a >= self.n) {
            return Err(Error::OutOfRange(format!("cell {}{args:?} := raw {raw}", s.name)));
        }
        match self.cells.get(&(sym, args.to_vec())) {
            Some(&old) if old != raw => Err(Error::Contract(format!("cell {}{args:?} already coded as {old}", s.name))),
            _ => {
                self.cells.insert((sym, args.to_vec()), raw);
                Ok(())
            }
        }
    }

    /// Answer to a key: `Some(bit)` if in p1 ∪ p0, `None` otherwise.
    pub fn get(&self, key: &RelevantKey) -> Option<bool> {
        if !key.is_relevant(&self.language, self.n) {
            return None;
        }
        self.cells.get(&(key.sym(), key.args().to_vec())).map(|raw| (raw >> key.bit()) & 1 == 1)
    }

    /// Defines a cell with the exact code of `value`; an existing cell must agree.
    pub fn define(&mut self, sym: usize, args: &[u32], value: u32) -> Result<()> {
        let s = self.language.symbols.get(sym).ok_or_else(|| Error::UnknownSymbol(format!("#{sym}")))?;
        if s.is_function() && value >= self.n {
            return Err(Error::OutOfRange(format!("cell {}{args:?} := {value}", s.name)));
        }
        self.define_raw(sym, args, value as u64)
    }

    pub fn remove(&mut self, sym: usize, args: &[u32]) {
        self.cells.remove(&(sym, args.to_vec()));
    }

    pub fn p1(&self) -> BTreeSet<RelevantKey> {
        self.keys().into_iter().filter(|(_, b)| *b).map(|(k, _)| k).collect()
    }

    pub fn p0(&self) -> BTreeSet<RelevantKey> {
        self.keys().into_iter().filter(|(_, b)| !*b).map(|(k, _)| k).collect()
    }

    /// Every answered key with its bit, canonical order.
    pub fn keys(&self) -> Vec<(RelevantKey, bool)> {
        let mut out = Vec::new();
        for ((sym, args), &raw) in &self.cells {
            match self.language.symbol(*sym).kind {
                SymbolKind::Relation => out.push((RelevantKey::Rel { sym: *sym, args: args.clone() }, raw == 1)),
                SymbolKind::Function => {
                    for bit in 0..value_bits(self.n) {
                        out.push((RelevantKey::FunBit { sym: *sym, args: args.clone(), bit }, (raw >> bit) & 1 == 1));
                    }
                }
            }
        }
        out
    }

    fn check_same(&self, other: &PartialOracle) -> Result<()> {
        if self.n != other.n || !self.language.same_symbols(&other.language) {
            return Err(Error::LanguageMismatch("oracles over different (L, n)".into()));
        }
        Ok(())
    }

    /// Whether `self` extends `other`: p0 and p1 both grow.
    pub fn extends(&self, other: &PartialOracle) -> Result<bool> {
        self.check_same(other)?;
        Ok(other.cells.iter().all(|(k, v)| self.cells.get(k) == Some(v)))
    }

    /// Whether `self` is a b-extension of `other`.
    pub fn is_b_extension_of(&self, other: &PartialOracle, b: usize) -> Result<bool> {
        Ok(self.extends(other)? && self.size() <= other.size() + b)
    }

    pub fn consistent_with(&self, alpha: &FullOracle) -> bool {
        self.keys().iter().all(|(k, b)| alpha.contains(k) == *b)
    }

    /// A full oracle agreeing with `self`, other keys drawn from `rng`.
    pub fn random_completion(&self, rng: &mut impl Rng) -> FullOracle {
        let members = relevant_elements(&self.language, self.n)
            .into_iter()
            .filter(|k| self.get(k).unwrap_or_else(|| rng.gen_bool(0.5)))
            .collect();
        FullOracle { language: self.language.clone(), n: self.n, members }
    }

    /// Text dump: one key per line, `+` for p1 and `-` for p0.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (k, b) in self.keys() {
            s.push(if b { '+' } else { '-' });
            s.push_str(&k.render(&self.language));
            s.push('\n');
        }
        s
    }

    pub fn parse_dump(language: &Language, n: u32, text: &str) -> Result<Self> {
        let (mut p1, mut p0) = (BTreeSet::new(), BTreeSet::new());
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (sign, rest) = line.split_at(1);
            let key = RelevantKey::parse(language, rest)?;
            match sign {
                "+" => p1.insert(key),
                "-" => p0.insert(key),
                _ => return Err(Error::Syntax { line: 1, col: 1, msg: format!("bad dump line `{line}`") }),
            };
        }
        Self::from_keys(language, n, &p1, &p0)
    }
}

impl fmt::Display for PartialOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// The exact code of a partial structure's defined cells.
pub fn oracle_of_partial(a: &PartialStructure) -> PartialOracle {
    let mut p = PartialOracle::empty(a.language(), a.n());
    for (sym, idx, v) in a.defined_cells() {
        p.cells.insert((sym, a.args_of(sym, idx)), v as u64);
    }
    p
}

/// B(p).
pub fn partial_of_oracle(p: &PartialOracle) -> PartialStructure {
    let mut a = PartialStructure::undefined(&p.language, p.n).expect("oracle universe fits");
    for ((sym, args), &raw) in &p.cells {
        let idx = a.index(args);
        let v = match p.language.symbol(*sym).kind {
            SymbolKind::Relation => raw as u32,
            SymbolKind::Function => raw.min(p.n as u64 - 1) as u32,
        };
        a.set_unchecked(*sym, idx, Some(v));
    }
    a
}

/// q extends p.
pub fn extend_oracle(p: &PartialOracle, q: &PartialOracle) -> Result<bool> {
    q.extends(p)
}

/// q is a b-extension of p.
pub fn b_extension(p: &PartialOracle, q: &PartialOracle, b: usize) -> Result<bool> {
    q.is_b_extension_of(p, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::random_total;
    use crate::syntax::Symbol;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lang(symbols: Vec<Symbol>) -> Language {
        Language::new(symbols, vec![]).unwrap()
    }

    fn f1() -> Language {
        lang(vec![Symbol::fun("f", 1)])
    }

    fn mixed() -> Language {
        lang(vec![Symbol::fun("f", 1), Symbol::rel("R", 2), Symbol::fun("c", 0), Symbol::fun("g", 2)])
    }

    fn fb(args: Vec<u32>, bit: u32) -> RelevantKey {
        RelevantKey::FunBit { sym: 0, args, bit }
    }

    #[test]
    fn relevant_counts() {
        assert_eq!(relevant_elements(&f1(), 2).len(), 4);
        assert_eq!(relevant_elements(&lang(vec![Symbol::rel("R", 1)]), 3).len(), 3);
        assert_eq!(relevant_elements(&lang(vec![Symbol::fun("f", 2)]), 2).len(), 8);
        let keys = relevant_elements(&mixed(), 5);
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(relevant_elements(&f1(), 1), vec![fb(vec![0], 0)]);
    }

    #[test]
    fn key_ids_are_canonical() {
        let l = mixed();
        for n in 1..5 {
            for (i, k) in relevant_elements(&l, n).iter().enumerate() {
                assert_eq!(key_id(&l, n, k), Some(i as u64 + 1));
                assert_eq!(key_of_id(&l, n, i as u64 + 1).as_ref(), Some(k));
            }
        }
        assert_eq!(key_id(&f1(), 2, &fb(vec![0], 2)), None);
        assert_eq!(key_id(&f1(), 2, &fb(vec![2], 0)), None);
    }

    #[test]
    fn unary_ids_are_canonical() {
        let l = mixed();
        for n in 1..5 {
            let keys = unary_elements(&l, n);
            assert!(keys.iter().all(|k| k.in_range(&l, n)));
            for (i, k) in keys.iter().enumerate() {
                assert_eq!(unary_key_id(&l, n, k), Some(i as u64 + 1));
                assert_eq!(unary_key_of_id(&l, n, i as u64 + 1).as_ref(), Some(k));
                assert_eq!(&UnaryKey::parse(&l, &k.render(&l)).unwrap(), k);
            }
            assert_eq!(unary_key_of_id(&l, n, keys.len() as u64 + 1), None);
        }
        assert_eq!(unary_elements(&lang(vec![Symbol::fun("f", 2)]), 2).len(), 8);
    }

    #[test]
    fn key_text() {
        let l = mixed();
        for k in relevant_elements(&l, 3) {
            assert_eq!(RelevantKey::parse(&l, &k.render(&l)).unwrap(), k);
        }
        assert_eq!(fb(vec![0, 1], 2).render(&lang(vec![Symbol::fun("f", 2)])), "f(0,1)#2");
        assert!(RelevantKey::parse(&l, "R(0,1)#1").is_err());
        assert!(RelevantKey::parse(&l, "h(0)").is_err());
    }

    #[test]
    fn decode_examples() {
        let a = decode_binary(&FullOracle::new(&f1(), 2, [fb(vec![0], 0)]).unwrap());
        assert_eq!(a.get(0, &[0]), Some(1));
        assert_eq!(a.get(0, &[1]), Some(0));
        let b = decode_binary(&FullOracle::new(&f1(), 2, [fb(vec![1], 0), fb(vec![1], 1)]).unwrap());
        assert_eq!(b.get(0, &[1]), Some(1));
        let e = decode_binary(&FullOracle::empty(&mixed(), 3));
        assert!(e.is_total());
        assert!(e.defined_cells().all(|(_, _, v)| v == 0));
    }

    #[test]
    fn unary_examples() {
        let mut id = PartialStructure::undefined(&f1(), 2).unwrap();
        id.set(0, &[0], Some(0)).unwrap();
        id.set(0, &[1], Some(1)).unwrap();
        let keys = encode_unary(&id).unwrap();
        let want: BTreeSet<_> = [0, 1].map(|v| UnaryKey::FunGraph { sym: 0, args: vec![v], value: v }).into();
        assert_eq!(keys, want);
        let bad: BTreeSet<_> = [0, 1].map(|v| UnaryKey::FunGraph { sym: 0, args: vec![0], value: v }).into();
        assert!(matches!(decode_unary(&f1(), 2, &bad), Err(NotAStructure::Duplicate { .. })));
        assert!(matches!(binary_from_unary(&f1(), 2, &bad), Err(NotAStructure::Duplicate { .. })));
        let missing: BTreeSet<_> = [UnaryKey::FunGraph { sym: 0, args: vec![0], value: 0 }].into();
        assert_eq!(
            decode_unary(&f1(), 2, &missing),
            Err(NotAStructure::Missing { symbol: "f".into(), args: vec![1] })
        );
        let zero = unary_from_binary(&FullOracle::empty(&f1(), 3));
        assert!(zero.iter().all(|k| matches!(k, UnaryKey::FunGraph { value: 0, .. })));
        assert_eq!(unary_from_binary(&FullOracle::of_structure(&id).unwrap()), keys);
    }

    #[test]
    fn partial_oracle_examples() {
        let mut a = PartialStructure::undefined(&f1(), 2).unwrap();
        a.set(0, &[0], Some(1)).unwrap();
        let p = oracle_of_partial(&a);
        assert_eq!(p.p1(), [fb(vec![0], 0)].into());
        assert_eq!(p.p0(), [fb(vec![0], 1)].into());
        assert_eq!(p.size(), 1);
        assert_eq!(p.dump(), "+f(0)#0\n-f(0)#1\n");
        assert_eq!(PartialOracle::parse_dump(&f1(), 2, &p.dump()).unwrap(), p);
        let e = oracle_of_partial(&PartialStructure::undefined(&f1(), 2).unwrap());
        assert!(e.p0().is_empty() && e.p1().is_empty() && e.size() == 0);
        assert!(PartialOracle::from_keys(&f1(), 2, &[fb(vec![0], 0)].into(), &BTreeSet::new()).is_err());
    }

    #[test]
    fn extension_examples() {
        let l = f1();
        let p = PartialOracle::empty(&l, 4);
        assert!(extend_oracle(&p, &p).unwrap() && b_extension(&p, &p, 0).unwrap());
        let mut q = p.clone();
        q.define(0, &[1], 3).unwrap();
        assert!(b_extension(&p, &q, 1).unwrap() && !b_extension(&p, &q, 0).unwrap());
        let mut r = p.clone();
        r.define(0, &[2], 0).unwrap();
        assert!(!extend_oracle(&q, &r).unwrap() && !extend_oracle(&r, &q).unwrap());
        assert!(extend_oracle(&p, &PartialOracle::empty(&l, 5)).is_err());
        assert!(q.define(0, &[1], 2).is_err());
    }

    #[test]
    fn exhaustive_round_trips_n2() {
        let l = lang(vec![Symbol::fun("f", 1), Symbol::rel("R", 1)]);
        let keys = relevant_elements(&l, 2);
        for mask in 0u32..1 << keys.len() {
            let alpha = FullOracle::new(&l, 2, keys.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, k)| k.clone())).unwrap();
            let a = decode_binary(&alpha);
            let u = unary_from_binary(&alpha);
            assert_eq!(decode_unary(&l, 2, &u).unwrap(), a);
            let beta = binary_from_unary(&l, 2, &u).unwrap();
            assert_eq!(decode_binary(&beta), a);
            assert_eq!(unary_from_binary(&beta), u);
        }
    }

    proptest! {
        #[test]
        fn unary_round_trip(n in 1u32..=6, seed: u64) {
            let l = mixed();
            let a = random_total(&l, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let keys = encode_unary(&a).unwrap();
            prop_assert_eq!(decode_unary(&l, n, &keys).unwrap(), a.clone());
            let beta = binary_from_unary(&l, n, &keys).unwrap();
            prop_assert_eq!(decode_binary(&beta), a);
        }

        #[test]
        fn binary_round_trip(n in 1u32..=8, seed: u64) {
            let l = mixed();
            let alpha = FullOracle::random(&l, n, &mut ChaCha8Rng::seed_from_u64(seed));
            let u = unary_from_binary(&alpha);
            let beta = binary_from_unary(&l, n, &u).unwrap();
            prop_assert_eq!(decode_binary(&beta), decode_binary(&alpha));
            prop_assert_eq!(unary_from_binary(&beta), u);
        }

        #[test]
        fn partial_round_trip(n in 1u32..=6, seed: u64, density in 0.0f64..1.0) {
            let l = mixed();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let total = random_total(&l, n, &mut rng).unwrap();
            let mut a = PartialStructure::undefined(&l, n).unwrap();
            for (s, i, v) in total.defined_cells() {
                if rng.gen_bool(density) {
                    a.set_idx(s, i, Some(v)).unwrap();
                }
            }
            let p = oracle_of_partial(&a);
            prop_assert_eq!(partial_of_oracle(&p), a.clone());
            prop_assert_eq!(p.size(), a.size());
            prop_assert_eq!(oracle_of_partial(&partial_of_oracle(&p)), p.clone());
            prop_assert!(a.active_points().len() <= p.size() * l.r_l());
            let alpha = p.random_completion(&mut rng);
            prop_assert!(p.consistent_with(&alpha));
            prop_assert!(decode_binary(&alpha).extends(&a));
            prop_assert!(PartialOracle::empty(&l, n).extends(&PartialOracle::empty(&l, n)).unwrap());
        }
    }
}
