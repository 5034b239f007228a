//! Exact determinacy by complete search over partial structures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::partial::{verifies, verifies_through_cell, PartialStructure};
use crate::syntax::BasicSentence;

pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Visits every non-verifying partial structure.
    Exhaustive,
    /// Also prunes branches that cannot beat the incumbent size.
    BranchAndBound,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub method: Method,
    pub node_cap: u64,
}

impl Default for SearchOptions {
    /// Branch-and-bound; the cap can be overridden by `FINPRIN_NODE_CAP`.
    fn default() -> Self {
        let node_cap = std::env::var("FINPRIN_NODE_CAP")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_NODE_CAP);
        SearchOptions { method: Method::BranchAndBound, node_cap }
    }
}

impl SearchOptions {
    pub fn with_method(method: Method) -> Self {
        SearchOptions { method, ..SearchOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct MaxNonverifying {
    pub size: usize,
    pub witness: PartialStructure,
    pub nodes: u64,
}

struct Dfs<'a> {
    phi: &'a BasicSentence,
    cells: Vec<(usize, usize, Vec<u32>, u32)>,
    method: Method,
    cap: u64,
    nodes: u64,
    best: Option<(usize, PartialStructure)>,
    allow_undefined: bool,
    stop_at_first: bool,
}

impl Dfs<'_> {
    fn run(&mut self, a: &mut PartialStructure, k: usize, size: usize) -> Result<bool> {
        if k == self.cells.len() {
            if self.best.as_ref().is_none_or(|(b, _)| size > *b) {
                self.best = Some((size, a.clone()));
            }
            return Ok(self.stop_at_first);
        }
        if self.method == Method::BranchAndBound {
            if let Some((b, _)) = &self.best {
                if size + (self.cells.len() - k) <= *b {
                    return Ok(false);
                }
            }
        }
        let (sym, idx, ref args, limit) = self.cells[k];
        let args = args.clone();
        for v in 0..limit {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::CapExceeded(self.nodes));
            }
            a.set_unchecked(sym, idx, Some(v));
            if !verifies_through_cell(a, self.phi, sym, &args) && self.run(a, k + 1, size + 1)? {
                a.set_unchecked(sym, idx, None);
                return Ok(true);
            }
        }
        a.set_unchecked(sym, idx, None);
        if self.allow_undefined {
            self.nodes += 1;
            return self.run(a, k + 1, size);
        }
        Ok(false)
    }
}

fn dfs<'a>(phi: &'a BasicSentence, n: u32, cap: u64, method: Method, allow_undefined: bool, stop_at_first: bool) -> Result<Dfs<'a>> {
    let a = PartialStructure::undefined(&phi.language, n)?;
    let mut cells = Vec::new();
    for (s, sym) in phi.language.symbols.iter().enumerate() {
        let limit = if sym.is_function() { n } else { 2 };
        for idx in 0..a.cell_count(s) {
            cells.push((s, idx, a.args_of(s, idx), limit));
        }
    }
    Ok(Dfs { phi, cells, method, cap, nodes: 0, best: None, allow_undefined, stop_at_first })
}

/// A partial structure on [n] of maximum size that does not verify `phi`, or
/// `None` if even the completely undefined structure verifies it.
pub fn max_nonverifying(phi: &BasicSentence, n: u32, opts: SearchOptions) -> Result<Option<MaxNonverifying>> {
    if n == 0 {
        return Err(Error::Contract("n must be at least 1".into()));
    }
    let mut a = PartialStructure::undefined(&phi.language, n)?;
    if verifies(&a, phi) {
        return Ok(None);
    }
    let mut d = dfs(phi, n, opts.node_cap, opts.method, true, false)?;
    d.run(&mut a, 0, 0)?;
    let (size, witness) = d.best.take().expect("the undefined structure is a candidate");
    Ok(Some(MaxNonverifying { size, witness, nodes: d.nodes }))
}

/// d(n) = 1 + the maximum size of a non-verifying structure; 0 in the
/// degenerate case where every structure verifies `phi`.
pub fn determinacy(phi: &BasicSentence, n: u32, opts: SearchOptions) -> Result<u64> {
    Ok(max_nonverifying(phi, n, opts)?.map_or(0, |m| m.size as u64 + 1))
}

/// A total structure on [n] falsifying `phi`, if there is one.
pub fn find_countermodel(phi: &BasicSentence, n: u32, cap: u64) -> Result<Option<PartialStructure>> {
    let mut a = PartialStructure::undefined(&phi.language, n)?;
    if verifies(&a, phi) {
        return Ok(None);
    }
    let mut d = dfs(phi, n, cap, Method::Exhaustive, false, true)?;
    d.run(&mut a, 0, 0)?;
    Ok(d.best.map(|(_, w)| w))
}

/// Whether `phi` holds in every total structure on [n].
pub fn valid_on(phi: &BasicSentence, n: u32, cap: u64) -> Result<bool> {
    Ok(find_countermodel(phi, n, cap)?.is_none())
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterminacyRow {
    pub n: u32,
    pub d: u64,
    pub s_l: u64,
    /// Size of the maximum non-verifying structure found.
    pub witness_size: Option<usize>,
    #[serde(skip)]
    pub witness: Option<PartialStructure>,
    /// The empty structure already verifies the sentence (d is reported as 0).
    pub degenerate: bool,
    pub valid_on_n: bool,
    pub nodes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterminacyReport {
    pub principle: String,
    pub method: Method,
    pub rows: Vec<DeterminacyRow>,
}

pub fn determinacy_row(phi: &BasicSentence, n: u32, opts: SearchOptions) -> Result<DeterminacyRow> {
    let s_l = phi.language.s_l(n as u64);
    Ok(match max_nonverifying(phi, n, opts)? {
        None => DeterminacyRow {
            n,
            d: 0,
            s_l,
            witness_size: None,
            witness: None,
            degenerate: true,
            valid_on_n: true,
            nodes: 0,
        },
        Some(m) => DeterminacyRow {
            n,
            d: m.size as u64 + 1,
            s_l,
            witness_size: Some(m.size),
            valid_on_n: (m.size as u64) < s_l,
            witness: Some(m.witness),
            degenerate: false,
            nodes: m.nodes,
        },
    })
}

pub fn determinacy_report(phi: &BasicSentence, ns: &[u32], opts: SearchOptions) -> Result<DeterminacyReport> {
    let rows = ns.iter().map(|&n| determinacy_row(phi, n, opts)).collect::<Result<Vec<_>>>()?;
    Ok(DeterminacyReport { principle: phi.name.clone(), method: opts.method, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeaknessRow {
    pub n: u32,
    pub d: u64,
    pub s_l: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeaknessReport {
    pub principle: String,
    pub rows: Vec<WeaknessRow>,
    /// Least-squares slope of log(s_L/d) against log n; descriptive only.
    pub fitted_exponent: Option<f64>,
}

pub fn weakness_report(phi: &BasicSentence, ns: &[u32], opts: SearchOptions) -> Result<WeaknessReport> {
    let mut rows = Vec::new();
    for &n in ns {
        let r = determinacy_row(phi, n, opts)?;
        let ratio = if r.d == 0 { f64::INFINITY } else { r.s_l as f64 / r.d as f64 };
        rows.push(WeaknessRow { n, d: r.d, s_l: r.s_l, ratio });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.ratio.is_finite() && r.n > 1)
        .map(|r| ((r.n as f64).ln(), r.ratio.ln()))
        .collect();
    let fitted_exponent = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        num / den
    });
    Ok(WeaknessReport { principle: phi.name.clone(), rows, fitted_exponent })
}
