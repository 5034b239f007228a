//! Partial finite structures over [n], 3-valued evaluation, substructures and
//! embeddings.

mod embed;
mod eval;

use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::syntax::{Language, SymbolKind};

pub use embed::{find_embedding, find_embedding_hinted, is_embedding};
pub use eval::{
    eval3, eval_basic, falsifies, find_lax_witness, find_witness, find_witness_in, literal_value, verifies,
    verifies_through_cell, witness_value, Witness,
};

/// The values 0 < 1/2 < 1 of the 3-valued semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthValue {
    False,
    Half,
    True,
}

impl TruthValue {
    pub fn not(self) -> Self {
        match self {
            TruthValue::False => TruthValue::True,
            TruthValue::Half => TruthValue::Half,
            TruthValue::True => TruthValue::False,
        }
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::False => "0",
            TruthValue::Half => "1/2",
            TruthValue::True => "1",
        })
    }
}

/// Anything that interprets a language over some set of points: finite
/// partial structures and computable infinite models alike.
pub trait PointSource {
    fn language(&self) -> &Language;
    fn contains_point(&self, p: u64) -> bool;
    fn fun_at(&self, sym: usize, args: &[u64]) -> Option<u64>;
    fn rel_at(&self, sym: usize, args: &[u64]) -> Option<bool>;
}

/// Dense tables, `None` standing for the undefined value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialStructure {
    language: Language,
    n: u32,
    tables: Vec<Vec<Option<u32>>>,
}

pub fn s_l(lang: &Language, n: u64) -> u64 {
    lang.s_l(n)
}

impl PartialStructure {
    /// The completely undefined structure on [n].
    pub fn undefined(language: &Language, n: u32) -> Result<Self> {
        let mut tables = Vec::with_capacity(language.len());
        for s in &language.symbols {
            let cells = (n as u64).checked_pow(s.arity as u32).filter(|&c| c <= 1 << 28).ok_or_else(
                || Error::OutOfRange(format!("{} cells for `{}` on [{n}]", "too many", s.name)),
            )?;
            tables.push(vec![None; cells as usize]);
        }
        Ok(PartialStructure { language: language.clone(), n, tables })
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn table(&self, sym: usize) -> &[Option<u32>] {
        &self.tables[sym]
    }

    pub fn cell_count(&self, sym: usize) -> usize {
        self.tables[sym].len()
    }

    /// Row-major index of a tuple.
    pub fn index(&self, args: &[u32]) -> usize {
        args.iter().fold(0usize, |acc, &a| acc * self.n as usize + a as usize)
    }

    pub fn args_of(&self, sym: usize, mut idx: usize) -> Vec<u32> {
        let ar = self.language.symbol(sym).arity;
        let mut out = vec![0u32; ar];
        for slot in out.iter_mut().rev() {
            *slot = (idx % self.n as usize) as u32;
            idx /= self.n as usize;
        }
        out
    }

    fn check_args(&self, sym: usize, args: &[u32]) -> Result<()> {
        let s = self.language.symbols.get(sym).ok_or_else(|| Error::UnknownSymbol(format!("#{sym}")))?;
        if s.arity != args.len() {
            return Err(Error::ArityMismatch { symbol: s.name.clone(), expected: s.arity, got: args.len() });
        }
        if let Some(a) = args.iter().find(|&&a| a >= self.n) {
            return Err(Error::OutOfRange(format!("point {a} not in [{}]", self.n)));
        }
        Ok(())
    }

    pub fn get(&self, sym: usize, args: &[u32]) -> Option<u32> {
        self.tables[sym][self.index(args)]
    }

    pub fn get_idx(&self, sym: usize, idx: usize) -> Option<u32> {
        self.tables[sym][idx]
    }

    pub fn rel(&self, sym: usize, args: &[u32]) -> Option<bool> {
        self.get(sym, args).map(|v| v == 1)
    }

    /// Sets a cell; relation values are 0/1, function values points of [n].
    pub fn set(&mut self, sym: usize, args: &[u32], value: Option<u32>) -> Result<()> {
        self.check_args(sym, args)?;
        let idx = self.index(args);
        self.set_idx(sym, idx, value)
    }

    pub fn set_idx(&mut self, sym: usize, idx: usize, value: Option<u32>) -> Result<()> {
        if let Some(v) = value {
            let limit = if self.language.symbol(sym).is_function() { self.n } else { 2 };
            if v >= limit {
                return Err(Error::OutOfRange(format!(
                    "value {v} for `{}`",
                    self.language.symbol(sym).name
                )));
            }
        }
        self.tables[sym][idx] = value;
        Ok(())
    }

    pub(crate) fn set_unchecked(&mut self, sym: usize, idx: usize, value: Option<u32>) {
        self.tables[sym][idx] = value;
    }

    /// Number of defined cells.
    pub fn size(&self) -> usize {
        self.tables.iter().map(|t| t.iter().filter(|v| v.is_some()).count()).sum()
    }

    pub fn is_total(&self) -> bool {
        self.tables.iter().all(|t| t.iter().all(Option::is_some))
    }

    /// Whether `self` extends `other`: same universe and language, and every
    /// cell defined in `other` has the same value here.
    pub fn extends(&self, other: &PartialStructure) -> bool {
        self.n == other.n
            && self.language.same_symbols(&other.language)
            && self.tables.iter().zip(&other.tables).all(|(mine, theirs)| {
                mine.iter().zip(theirs).all(|(m, t)| t.is_none() || m == t)
            })
    }

    /// Defined cells as (symbol, index, value).
    pub fn defined_cells(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.tables
            .iter()
            .enumerate()
            .flat_map(|(s, t)| t.iter().enumerate().filter_map(move |(i, v)| v.map(|v| (s, i, v))))
    }

    /// Points occurring as an argument or function value of a defined cell.
    pub fn active_points(&self) -> Vec<u32> {
        let mut seen = vec![false; self.n as usize];
        for (s, i, v) in self.defined_cells() {
            for a in self.args_of(s, i) {
                seen[a as usize] = true;
            }
            if self.language.symbol(s).is_function() {
                seen[v as usize] = true;
            }
        }
        (0..self.n).filter(|&a| seen[a as usize]).collect()
    }

    pub fn to_json_value(&self) -> Value {
        let mut fun = Map::new();
        let mut rel = Map::new();
        for (s, sym) in self.language.symbols.iter().enumerate() {
            let arr: Vec<Value> = self.tables[s].iter().map(|v| v.map_or(Value::Null, |x| json!(x))).collect();
            match sym.kind {
                SymbolKind::Function => fun.insert(sym.name.clone(), Value::Array(arr)),
                SymbolKind::Relation => rel.insert(sym.name.clone(), Value::Array(arr)),
            };
        }
        json!({ "n": self.n, "fun": fun, "rel": rel })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    /// Reads the JSON structure format; symbols missing from the object are
    /// left undefined.
    pub fn from_json(language: &Language, text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Json("missing numeric field `n`".into()))?;
        let mut a = PartialStructure::undefined(language, n as u32)?;
        for (section, kind) in [("fun", SymbolKind::Function), ("rel", SymbolKind::Relation)] {
            let Some(obj) = v.get(section) else { continue };
            let obj = obj.as_object().ok_or_else(|| Error::Json(format!("`{section}` must be an object")))?;
            for (name, arr) in obj {
                let s = language.index_of(name).ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                if language.symbol(s).kind != kind {
                    return Err(Error::KindMismatch {
                        symbol: name.clone(),
                        used: kind.word(),
                        declared: language.symbol(s).kind.word(),
                    });
                }
                let arr = arr.as_array().ok_or_else(|| Error::Json(format!("table `{name}` must be an array")))?;
                if arr.len() != a.cell_count(s) {
                    return Err(Error::Json(format!(
                        "table `{name}` has {} entries, expected {}",
                        arr.len(),
                        a.cell_count(s)
                    )));
                }
                for (i, x) in arr.iter().enumerate() {
                    let val = match x {
                        Value::Null => None,
                        other => Some(
                            other
                                .as_u64()
                                .ok_or_else(|| Error::Json(format!("bad entry in `{name}`")))?
                                as u32,
                        ),
                    };
                    a.set_idx(s, i, val)?;
                }
            }
        }
        Ok(a)
    }
}

impl PointSource for PartialStructure {
    fn language(&self) -> &Language {
        &self.language
    }

    fn contains_point(&self, p: u64) -> bool {
        p < self.n as u64
    }

    fn fun_at(&self, sym: usize, args: &[u64]) -> Option<u64> {
        let a: Vec<u32> = args.iter().map(|&x| x as u32).collect();
        self.get(sym, &a).map(u64::from)
    }

    fn rel_at(&self, sym: usize, args: &[u64]) -> Option<bool> {
        let a: Vec<u32> = args.iter().map(|&x| x as u32).collect();
        self.rel(sym, &a)
    }
}

/// The partial substructure induced on `subset`, renumbered 0..k in the given
/// order. Function values leaving the subset become undefined.
pub fn induced_substructure<S: PointSource + ?Sized>(src: &S, subset: &[u64]) -> Result<PartialStructure> {
    let mut pos: HashMap<u64, u32> = HashMap::with_capacity(subset.len());
    for (i, &p) in subset.iter().enumerate() {
        if !src.contains_point(p) {
            return Err(Error::OutOfRange(format!("point {p} not in the structure")));
        }
        if pos.insert(p, i as u32).is_some() {
            return Err(Error::Duplicate(format!("point {p}")));
        }
    }
    let lang = src.language().clone();
    let mut out = PartialStructure::undefined(&lang, subset.len() as u32)?;
    let mut args = Vec::new();
    for (s, sym) in lang.symbols.iter().enumerate() {
        for idx in 0..out.cell_count(s) {
            let local = out.args_of(s, idx);
            args.clear();
            args.extend(local.iter().map(|&a| subset[a as usize]));
            let v = if sym.is_function() {
                src.fun_at(s, &args).and_then(|v| pos.get(&v).copied())
            } else {
                src.rel_at(s, &args).map(u32::from)
            };
            out.set_unchecked(s, idx, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Symbol;

    fn lang_f() -> Language {
        Language::new(vec![Symbol::fun("f", 1)], vec![]).unwrap()
    }

    #[test]
    fn row_major_indexing() {
        let lang = Language::new(vec![Symbol::fun("g", 2)], vec![]).unwrap();
        let a = PartialStructure::undefined(&lang, 3).unwrap();
        assert_eq!(a.index(&[1, 2]), 5);
        assert_eq!(a.args_of(0, 5), vec![1, 2]);
    }

    #[test]
    fn size_and_totality() {
        let mut a = PartialStructure::undefined(&lang_f(), 3).unwrap();
        assert_eq!(a.size(), 0);
        a.set(0, &[0], Some(2)).unwrap();
        assert_eq!(a.size(), 1);
        assert!(!a.is_total());
        assert!(a.set(0, &[0], Some(3)).is_err());
        assert!(a.set(0, &[3], Some(0)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let lang = Language::new(vec![Symbol::fun("f", 1), Symbol::rel("R", 2)], vec![]).unwrap();
        let mut a = PartialStructure::undefined(&lang, 2).unwrap();
        a.set(0, &[1], Some(0)).unwrap();
        a.set(1, &[0, 1], Some(1)).unwrap();
        let b = PartialStructure::from_json(&lang, &a.to_json()).unwrap();
        assert_eq!(a, b);
        assert!(PartialStructure::from_json(&lang, r#"{"n":2,"fun":{"f":[0]}}"#).is_err());
    }

    #[test]
    fn induced_identity_and_empty() {
        let mut a = PartialStructure::undefined(&lang_f(), 3).unwrap();
        for i in 0..3 {
            a.set(0, &[i], Some((i + 1) % 3)).unwrap();
        }
        assert_eq!(induced_substructure(&a, &[0, 1, 2]).unwrap(), a);
        let e = induced_substructure(&a, &[]).unwrap();
        assert_eq!((e.n(), e.size()), (0, 0));
        assert!(induced_substructure(&a, &[0, 0]).is_err());
        assert!(induced_substructure(&a, &[5]).is_err());
        let part = induced_substructure(&a, &[0, 1]).unwrap();
        assert_eq!(part.get(0, &[0]), Some(1));
        assert_eq!(part.get(0, &[1]), None);
    }

    #[test]
    fn active_points() {
        let mut a = PartialStructure::undefined(&lang_f(), 5).unwrap();
        a.set(0, &[3], Some(1)).unwrap();
        assert_eq!(a.active_points(), vec![1, 3]);
    }
}
