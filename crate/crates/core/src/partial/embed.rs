use super::PartialStructure;
use crate::error::{Error, Result};

/// One defined cell of the source: `sym(args) = value` (value is a point for
/// functions, 0/1 for relations).
struct Cell {
    sym: usize,
    args: Vec<u32>,
    value: u32,
    is_fun: bool,
}

impl Cell {
    fn points(&self) -> impl Iterator<Item = u32> + '_ {
        self.args.iter().copied().chain(self.is_fun.then_some(self.value))
    }

    /// None while some point is unassigned.
    fn check(&self, target: &PartialStructure, map: &[Option<u32>]) -> Option<bool> {
        let mut img = Vec::with_capacity(self.args.len());
        for &a in &self.args {
            img.push(map[a as usize]?);
        }
        let got = target.get(self.sym, &img);
        if self.is_fun {
            let want = map[self.value as usize]?;
            Some(got == Some(want))
        } else {
            Some(got == Some(self.value))
        }
    }
}

type Domain = Vec<u64>;

fn dom_clear(d: &mut Domain, x: u32) {
    d[(x / 64) as usize] &= !(1u64 << (x % 64));
}

fn dom_count(d: &Domain) -> u32 {
    d.iter().map(|w| w.count_ones()).sum()
}

fn dom_iter(d: &Domain) -> impl Iterator<Item = u32> + '_ {
    d.iter().enumerate().flat_map(|(i, &w)| {
        (0..64u32).filter(move |b| w >> b & 1 == 1).map(move |b| i as u32 * 64 + b)
    })
}

struct Search<'a> {
    target: &'a PartialStructure,
    cells: Vec<Cell>,
    /// cells mentioning each source point
    by_point: Vec<Vec<usize>>,
    constrained: Vec<u32>,
    hint: Option<&'a [u32]>,
}

impl Search<'_> {
    fn consistent(&self, p: u32, map: &[Option<u32>]) -> bool {
        self.by_point[p as usize]
            .iter()
            .all(|&c| self.cells[c].check(self.target, map) != Some(false))
    }

    /// Removes from the domains of points that are the last unassigned point of
    /// a cell every value violating that cell. False on a wipe-out.
    fn forward(&self, p: u32, map: &mut [Option<u32>], doms: &mut [Domain]) -> bool {
        for &c in &self.by_point[p as usize] {
            let cell = &self.cells[c];
            let mut free: Option<u32> = None;
            let mut count = 0;
            for q in cell.points() {
                if map[q as usize].is_none() && free != Some(q) {
                    free = Some(q);
                    count += 1;
                }
            }
            if count != 1 {
                continue;
            }
            let q = free.unwrap();
            let cands: Vec<u32> = dom_iter(&doms[q as usize]).collect();
            for x in cands {
                map[q as usize] = Some(x);
                if cell.check(self.target, map) == Some(false) {
                    dom_clear(&mut doms[q as usize], x);
                }
            }
            map[q as usize] = None;
            if dom_count(&doms[q as usize]) == 0 {
                return false;
            }
        }
        true
    }

    fn solve(&self, map: &mut Vec<Option<u32>>, used: &mut Vec<bool>, doms: &mut Vec<Domain>, assigned: usize) -> bool {
        if assigned == self.constrained.len() {
            return true;
        }
        // minimum remaining values among unused images
        let mut best: Option<(u32, u32)> = None;
        for &p in &self.constrained {
            if map[p as usize].is_some() {
                continue;
            }
            let live = dom_iter(&doms[p as usize]).filter(|&x| !used[x as usize]).count() as u32;
            if best.is_none_or(|(b, _)| live < b) {
                best = Some((live, p));
            }
        }
        let (live, p) = best.unwrap();
        if live == 0 {
            return false;
        }
        let mut cands: Vec<u32> = dom_iter(&doms[p as usize]).filter(|&x| !used[x as usize]).collect();
        if let Some(h) = self.hint {
            if let Some(i) = cands.iter().position(|&x| x == h[p as usize]) {
                cands[..=i].rotate_right(1);
            }
        }
        for x in cands {
            map[p as usize] = Some(x);
            if self.consistent(p, map) {
                let mut doms2 = doms.clone();
                used[x as usize] = true;
                if self.forward(p, map, &mut doms2) && self.solve(map, used, &mut doms2, assigned + 1) {
                    return true;
                }
                used[x as usize] = false;
            }
            map[p as usize] = None;
        }
        false
    }
}

/// An injective map of B0's universe into A's under which every defined cell of
/// B0 is defined in A with the corresponding value. Complete search: `None`
/// means no embedding exists.
pub fn find_embedding(b0: &PartialStructure, a: &PartialStructure) -> Result<Option<Vec<u32>>> {
    search_embedding(b0, a, None)
}

/// As [`find_embedding`], but tries `hint[p]` first for each point p. The
/// search stays complete; a good hint only avoids backtracking.
pub fn find_embedding_hinted(b0: &PartialStructure, a: &PartialStructure, hint: &[u32]) -> Result<Option<Vec<u32>>> {
    if hint.len() != b0.n() as usize {
        return Err(Error::Contract("hint length differs from the universe".into()));
    }
    search_embedding(b0, a, Some(hint))
}

fn search_embedding(b0: &PartialStructure, a: &PartialStructure, hint: Option<&[u32]>) -> Result<Option<Vec<u32>>> {
    if !b0.language().same_symbols(a.language()) {
        return Err(Error::LanguageMismatch("embedding between different signatures".into()));
    }
    if b0.n() > a.n() {
        return Ok(None);
    }
    let n0 = b0.n() as usize;
    let lang = b0.language();
    let cells: Vec<Cell> = b0
        .defined_cells()
        .map(|(sym, idx, value)| Cell { sym, args: b0.args_of(sym, idx), value, is_fun: lang.symbol(sym).is_function() })
        .collect();
    let mut by_point = vec![Vec::new(); n0];
    for (i, c) in cells.iter().enumerate() {
        let mut ps: Vec<u32> = c.points().collect();
        ps.sort_unstable();
        ps.dedup();
        for p in ps {
            by_point[p as usize].push(i);
        }
    }
    // Most constrained points first; this only fixes tie-breaking for MRV.
    let mut constrained: Vec<u32> = (0..n0 as u32).filter(|&p| !by_point[p as usize].is_empty()).collect();
    constrained.sort_by_key(|&p| std::cmp::Reverse(by_point[p as usize].len()));

    let words = (a.n() as usize).div_ceil(64).max(1);
    let mut full = vec![0u64; words];
    for x in 0..a.n() {
        full[(x / 64) as usize] |= 1 << (x % 64);
    }
    let mut doms = vec![full; n0];
    // unary constraints: cells whose points are all the same point
    for c in &cells {
        let mut ps = c.points();
        let first = ps.next();
        if let Some(p) = first {
            if ps.all(|q| q == p) {
                let mut map = vec![None; n0];
                let cands: Vec<u32> = dom_iter(&doms[p as usize]).collect();
                for x in cands {
                    map[p as usize] = Some(x);
                    if c.check(a, &map) == Some(false) {
                        dom_clear(&mut doms[p as usize], x);
                    }
                }
            }
        } else if c.check(a, &[]) == Some(false) {
            // nullary relation or constant-free cell with no points
            return Ok(None);
        }
    }
    let search = Search { target: a, cells, by_point, constrained, hint };
    let mut map = vec![None; n0];
    let mut used = vec![false; a.n() as usize];
    if !search.solve(&mut map, &mut used, &mut doms, 0) {
        return Ok(None);
    }
    // unconstrained points take any unused images
    let mut free = (0..a.n()).filter(|&x| !used[x as usize]);
    let out = map
        .into_iter()
        .map(|m| m.unwrap_or_else(|| free.next().expect("enough unused points")))
        .collect();
    Ok(Some(out))
}

/// Checks that `map` is an injective embedding of B0 into A.
pub fn is_embedding(b0: &PartialStructure, a: &PartialStructure, map: &[u32]) -> bool {
    if map.len() != b0.n() as usize || map.iter().any(|&x| x >= a.n()) {
        return false;
    }
    let mut seen = vec![false; a.n() as usize];
    for &x in map {
        if std::mem::replace(&mut seen[x as usize], true) {
            return false;
        }
    }
    let lang = b0.language();
    b0.defined_cells().all(|(sym, idx, v)| {
        let img: Vec<u32> = b0.args_of(sym, idx).iter().map(|&p| map[p as usize]).collect();
        let want = if lang.symbol(sym).is_function() { map[v as usize] } else { v };
        a.get(sym, &img) == Some(want)
    })
}
