//! The density extension procedures, run over genuine finite parameters.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::catalog::{overflow_set, ComputableModel};
use crate::dtrees::{build_c, run_partial, Status, TreeFamily};
use crate::encoding::{oracle_of_partial, partial_of_oracle, PartialOracle, RelevantKey};
use crate::error::{Error, Result};
use crate::partial::{find_embedding_hinted, find_witness, induced_substructure, verifies, PartialStructure};
use crate::syntax::{BasicSentence, Literal};
use crate::util::tuples;

/// A principle, a model falsifying it, and an injective map e: [n] → B that
/// embeds B(p) for the oracle p currently being extended.
#[derive(Debug, Clone)]
pub struct DensityContext {
    pub phi: BasicSentence,
    pub model: ComputableModel,
    pub n: u32,
    e: Vec<u64>,
}

impl DensityContext {
    /// Starts from the model's canonical slice on n points.
    pub fn new(phi: &BasicSentence, model: &ComputableModel, n: u32) -> Result<Self> {
        if !phi.language.same_symbols(model.language()) {
            return Err(Error::LanguageMismatch(format!("model {} does not interpret {}", model.name, phi.name)));
        }
        if n == 0 {
            return Err(Error::Contract("n must be at least 1".into()));
        }
        let e = model.canonical_slice(n as usize);
        Ok(DensityContext { phi: phi.clone(), model: model.clone(), n, e })
    }

    pub fn r_l(&self) -> usize {
        self.phi.language.r_l()
    }

    pub fn embedding(&self) -> &[u64] {
        &self.e
    }

    /// Whether e embeds B(p) into the model.
    pub fn embeds(&self, p: &PartialOracle) -> bool {
        p.cells().all(|(s, args, _)| {
            let img: Vec<u64> = args.iter().map(|&a| self.e[a as usize]).collect();
            let v = p.value(s, args).expect("cell is defined");
            if self.phi.language.symbol(s).is_function() {
                self.model.fun(s, &img) == self.e[v as usize]
            } else {
                self.model.rel(s, &img) == (v == 1)
            }
        })
    }

    /// Re-checks embeddability by search: B(p) restricted to its active
    /// points must embed into the model's substructure induced on their
    /// images. The search is complete; e only orders the candidates.
    pub fn fragment_embeds(&self, p: &PartialOracle) -> Result<bool> {
        let b = partial_of_oracle(p);
        let active = b.active_points();
        let pos: HashMap<u32, u32> = active.iter().enumerate().map(|(i, &a)| (a, i as u32)).collect();
        let mut src = PartialStructure::undefined(&self.phi.language, active.len() as u32)?;
        for (s, idx, v) in b.defined_cells() {
            let args: Vec<u32> = b.args_of(s, idx).iter().map(|a| pos[a]).collect();
            let v = if self.phi.language.symbol(s).is_function() { pos[&v] } else { v };
            src.set(s, &args, Some(v))?;
        }
        let images: Vec<u64> = active.iter().map(|&a| self.e[a as usize]).collect();
        let tgt = induced_substructure(&self.model, &images)?;
        let hint: Vec<u32> = (0..active.len() as u32).collect();
        Ok(find_embedding_hinted(&src, &tgt, &hint)?.is_some())
    }

    fn check_oracle(&self, p: &PartialOracle) -> Result<()> {
        if p.n() != self.n || !p.language().same_symbols(&self.phi.language) {
            return Err(Error::LanguageMismatch("oracle does not match the context".into()));
        }
        Ok(())
    }

    /// The partial structure on [n] that e makes isomorphic to the
    /// substructure of the model induced on e's image.
    fn pulled_back(&self) -> PartialStructure {
        let inv: HashMap<u64, u32> = self.e.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let mut b = PartialStructure::undefined(&self.phi.language, self.n).expect("universe fits");
        for (s, sym) in self.phi.language.symbols.iter().enumerate() {
            for (idx, args) in tuples(self.n, sym.arity).enumerate() {
                let img: Vec<u64> = args.iter().map(|&a| self.e[a as usize]).collect();
                let v = if sym.is_function() {
                    inv.get(&self.model.fun(s, &img)).copied()
                } else {
                    Some(self.model.rel(s, &img) as u32)
                };
                b.set_unchecked(s, idx, v);
            }
        }
        b
    }
}

/// A 1-extension of p defining S(ā), re-targeting e on one fresh point if the
/// model's value is not yet in e's image.
pub fn extend_define(ctx: &mut DensityContext, p: &PartialOracle, sym: usize, args: &[u32]) -> Result<PartialOracle> {
    ctx.check_oracle(p)?;
    let s = ctx.phi.language.symbols.get(sym).ok_or_else(|| Error::UnknownSymbol(format!("#{sym}")))?;
    if s.arity != args.len() || args.iter().any(|&a| a >= ctx.n) {
        return Err(Error::OutOfRange(format!("cell {}{args:?} on [{}]", s.name, ctx.n)));
    }
    if p.has_cell(sym, args) {
        return Ok(p.clone());
    }
    if ctx.n as usize <= p.size() * ctx.r_l() {
        return Err(Error::Hypothesis(format!("n = {} is not > ‖p‖·r_L = {}", ctx.n, p.size() * ctx.r_l())));
    }
    let img: Vec<u64> = args.iter().map(|&a| ctx.e[a as usize]).collect();
    let mut q = p.clone();
    if !s.is_function() {
        q.define(sym, args, ctx.model.rel(sym, &img) as u32)?;
        return Ok(q);
    }
    let v = ctx.model.fun(sym, &img);
    let target = match ctx.e.iter().position(|&x| x == v) {
        Some(b) => b as u32,
        None => {
            let active: BTreeSet<u32> = partial_of_oracle(p).active_points().into_iter().chain(args.iter().copied()).collect();
            let a = (0..ctx.n).find(|a| !active.contains(a)).ok_or_else(|| {
                Error::Hypothesis(format!("no inactive point of [{}] outside the arguments to map onto {v}", ctx.n))
            })?;
            ctx.e[a as usize] = v;
            a
        }
    };
    q.define(sym, args, target)?;
    Ok(q)
}

/// Extends p until every tree of the family completes, so C(F, m, q) is total.
pub fn complete_trees_small(ctx: &mut DensityContext, p: &PartialOracle, f: &TreeFamily, b0: usize) -> Result<PartialOracle> {
    ctx.check_oracle(p)?;
    check_heights(f, b0)?;
    let budget = b0 * f.pairs().len();
    let need = ctx.r_l() * (p.size() + budget);
    if ctx.n as usize <= need {
        return Err(Error::Hypothesis(format!("n = {} is not > r_L·(‖p‖ + b0·|L̃|·m^(r−1)) = {need}", ctx.n)));
    }
    let mut q = p.clone();
    for (s, args) in f.pairs() {
        loop {
            let (seq, out) = run_partial(f.trees[s].as_ref(), &args, &q)?;
            if out.is_some() {
                break;
            }
            let key = seq.queries.last().expect("blocked runs end with a query");
            q = extend_define(ctx, &q, key.sym(), key.args())?;
        }
    }
    if q.size() > p.size() + budget {
        return Err(Error::Internal(format!("small-m extension grew by {} > {budget}", q.size() - p.size())));
    }
    Ok(q)
}

fn check_heights(f: &TreeFamily, b0: usize) -> Result<()> {
    if let Some(t) = f.trees.iter().find(|t| t.height() > b0) {
        return Err(Error::Hypothesis(format!("tree of height {} exceeds b0 = {b0}", t.height())));
    }
    Ok(())
}

/// One record of the core extension's audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub event: &'static str,
    /// |X| at the start of the step.
    pub x: usize,
    pub y: Option<usize>,
    pub x_next: Option<usize>,
    pub overflow: Option<usize>,
    pub chosen: Vec<u32>,
    /// ‖q*‖ for the re-embedded oracle.
    pub size_q_star: usize,
    /// Size of C(F, m, q*).
    pub c_size: usize,
    /// The right-hand side of the shrink inequality |X′| > |X| − bound.
    pub shrink_bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CoreOutcome {
    pub q: PartialOracle,
    pub unpruned_size: usize,
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
}

impl CoreOutcome {
    pub fn trace_jsonl(&self) -> String {
        self.trace.iter().map(|t| serde_json::to_string(t).expect("trace serializes") + "\n").collect()
    }
}

/// Checks the hypotheses of the core extension, naming the violated clause.
pub fn core_preconditions(ctx: &DensityContext, p: &PartialOracle, f: &TreeFamily, b0: usize, phi_t: &BasicSentence, d_t: u64) -> Result<()> {
    check_heights(f, b0)?;
    if !phi_t.language.same_symbols(&f.target) {
        return Err(Error::LanguageMismatch("family and principle use different languages".into()));
    }
    let g = ctx.model.g(ctx.n as usize) as u128;
    let r = ctx.r_l() as u128;
    let b = b0 as u128;
    let need = (2 * b * b * r + 1) * g + r * p.size() as u128;
    if (ctx.n as u128) < need {
        return Err(Error::Hypothesis(format!("(ii) n = {} < (2·b0²·r_L + 1)·g(n) + r_L·‖p‖ = {need}", ctx.n)));
    }
    let s_t = phi_t.language.s_l(f.m as u64) as u128;
    if d_t == 0 || s_t < 2 * b * d_t as u128 {
        return Err(Error::Hypothesis(format!("(iii) s_L̃(m) = {s_t} < 2·b0·d̃(m) = {}", 2 * b * d_t as u128)));
    }
    Ok(())
}

/// A b0·|φ̃|-extension q of p with C(F, m, q) verifying φ̃. `d_t` is the
/// determinacy of φ̃ at m.
pub fn core_extend(
    ctx: &mut DensityContext,
    p: &PartialOracle,
    f: &TreeFamily,
    b0: usize,
    phi_t: &BasicSentence,
    d_t: u64,
) -> Result<CoreOutcome> {
    ctx.check_oracle(p)?;
    core_preconditions(ctx, p, f, b0, phi_t, d_t)?;
    let mut trace = Vec::new();
    if verifies(&build_c(f, p)?, phi_t) {
        return Ok(CoreOutcome { q: p.clone(), unpruned_size: p.size(), iterations: 0, trace });
    }
    let n = ctx.n as usize;
    let g = ctx.model.g(n) as f64;
    let r_l = ctx.r_l();
    let s_t = phi_t.language.s_l(f.m as u64) as f64;
    let w_n: BTreeSet<u32> = partial_of_oracle(p).active_points().into_iter().collect();
    let r_n: Vec<u32> = (0..ctx.n).filter(|a| !w_n.contains(a)).collect();
    let mut x: Vec<(usize, Vec<u32>)> = f.pairs();
    let mut q = p.clone();

    for iteration in 0..=b0 {
        // Re-embed the image of e into a large slice B*.
        let (slice, images) = ctx
            .model
            .embed_into_large(&ctx.e)?
            .ok_or_else(|| Error::Hypothesis(format!("model {} has no large slice for the current image", ctx.model.name)))?;
        ctx.e = images;
        let b_star = ctx.pulled_back();
        let q_star = oracle_of_partial(&b_star);
        if !q_star.extends(&q)? {
            return Err(Error::Internal("re-embedded oracle does not extend q".into()));
        }
        let overflow: Vec<u64> = overflow_set(&ctx.model, &slice).into_iter().collect();
        if overflow.len() > ctx.model.g(n) {
            return Err(Error::Hypothesis(format!("slice overflow {} exceeds g(n) = {}", overflow.len(), ctx.model.g(n))));
        }
        let c = build_c(f, &q_star)?;
        let mut step = TraceStep {
            iteration,
            event: "verified",
            x: x.len(),
            y: None,
            x_next: None,
            overflow: Some(overflow.len()),
            chosen: Vec::new(),
            size_q_star: q_star.size(),
            c_size: c.size(),
            shrink_bound: None,
        };
        if verifies(&c, phi_t) {
            trace.push(step);
            let pruned = prune_to_witness(&q_star, p, f, phi_t)?;
            if pruned.size() > p.size() + b0 * phi_t.size() {
                return Err(Error::Internal(format!("pruned extension has size {} > ‖p‖ + b0·|φ̃|", pruned.size())));
            }
            return Ok(CoreOutcome { q: pruned, unpruned_size: q_star.size(), iterations: iteration, trace });
        }
        if c.size() as u64 >= d_t {
            return Err(Error::Internal(format!("C has size {} ≥ d̃(m) = {d_t} but does not verify", c.size())));
        }

        // Y: pairs whose maximal q*-answer sequence is still blocked.
        let mut y = Vec::new();
        for (s, args) in &x {
            let (seq, _) = run_partial(f.trees[*s].as_ref(), args, &q_star)?;
            if seq.status == Status::Blocked {
                y.push((s, args, seq.queries));
            }
        }
        if y.len() as f64 <= x.len() as f64 - d_t as f64 {
            return Err(Error::Internal(format!("|Y| = {} ≤ |X| − d̃(m)", y.len())));
        }

        let touched: Vec<BTreeSet<u32>> = y.iter().map(|(_, _, qs)| touches(&b_star, qs)).collect();
        let mut count: HashMap<u32, usize> = HashMap::new();
        for t in &touched {
            for &a in t {
                *count.entry(a).or_default() += 1;
            }
        }
        if overflow.len() > r_n.len() {
            return Err(Error::Internal("not enough inactive points to rewire".into()));
        }
        let mut ranked = r_n.clone();
        ranked.sort_by_key(|a| (count.get(a).copied().unwrap_or(0), *a));
        let mut chosen: Vec<u32> = ranked[..overflow.len()].to_vec();
        chosen.sort_unstable();
        let chosen_set: BTreeSet<u32> = chosen.iter().copied().collect();
        let x_next: Vec<(usize, Vec<u32>)> = y
            .iter()
            .zip(&touched)
            .filter(|(_, t)| t.is_disjoint(&chosen_set))
            .map(|((s, args, _), _)| (**s, (*args).clone()))
            .collect();
        let denom = n as f64 - (p.size() * r_l) as f64 - g;
        let bound = d_t as f64 + b0 as f64 * g * s_t * r_l as f64 / denom;
        if x_next.len() as f64 <= x.len() as f64 - bound {
            return Err(Error::Internal(format!("shrink bound violated: |X′| = {} ≤ {} − {bound:.3}", x_next.len(), x.len())));
        }
        step.event = "iterate";
        step.y = Some(y.len());
        step.x_next = Some(x_next.len());
        step.chosen = chosen.clone();
        step.shrink_bound = Some(bound);
        trace.push(step);

        // Rewire e: the chosen points go onto the overflow set V.
        for (&a, &v) in chosen.iter().zip(&overflow) {
            ctx.e[a as usize] = v;
        }
        q = oracle_of_partial(&ctx.pulled_back());
        if !q.extends(p)? {
            return Err(Error::Internal("rewired oracle does not extend p".into()));
        }
        x = x_next;
    }
    Err(Error::Internal(format!("no verifying extension after {} iterations", b0 + 1)))
}

/// Points touched by a run's queries: their arguments, and the preimage of a
/// function value when B* defines it.
fn touches(b_star: &PartialStructure, queries: &[RelevantKey]) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for k in queries {
        if !k.is_relevant(b_star.language(), b_star.n()) {
            continue;
        }
        out.extend(k.args().iter().copied());
        if let RelevantKey::FunBit { sym, args, .. } = k {
            if let Some(v) = b_star.get(*sym, args) {
                out.insert(v);
            }
        }
    }
    out
}

/// Shrinks q to p plus the cells read by the runs behind one witnessing
/// disjunct of C(F, m, q), keeping whole bit blocks.
pub fn prune_to_witness(q: &PartialOracle, p: &PartialOracle, f: &TreeFamily, phi_t: &BasicSentence) -> Result<PartialOracle> {
    if !q.extends(p)? {
        return Err(Error::Contract("q does not extend p".into()));
    }
    let c = build_c(f, q)?;
    let w = find_witness(&c, phi_t).ok_or_else(|| Error::Contract("C(F, m, q) does not verify the principle".into()))?;
    let mut cells: BTreeSet<(usize, Vec<u32>)> = BTreeSet::new();
    for lit in &phi_t.matrix[w.disjunct] {
        let at = |vs: &[usize]| -> Vec<u32> { vs.iter().map(|&v| w.tuple[v]).collect() };
        match lit {
            Literal::Rel { sym, args, .. } | Literal::Fun { sym, args, .. } => {
                cells.insert((*sym, at(args)));
            }
            _ => {}
        }
    }
    let mut out = p.clone();
    for (s, args) in cells {
        let (seq, out_v) = run_partial(f.trees[s].as_ref(), &args, q)?;
        if out_v.is_none() {
            return Err(Error::Internal("witness cell without a complete run".into()));
        }
        for k in seq.queries.iter().filter(|k| k.is_relevant(q.language(), q.n())) {
            if let Some(raw) = q.raw(k.sym(), k.args()) {
                out.define_raw(k.sym(), k.args(), raw)?;
            }
        }
    }
    if !verifies(&build_c(f, &out)?, phi_t) {
        return Err(Error::Internal("pruned oracle no longer verifies".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;
    use crate::dtrees::{constant_tree, DecisionTree, ProgramTree, TreeFamily};
    use std::sync::Arc;

    fn ctx(name: &str, n: u32) -> DensityContext {
        let e = builtin(name).unwrap();
        DensityContext::new(&e.sentence, e.model.as_ref().unwrap(), n).unwrap()
    }

    fn wphp() -> BasicSentence {
        builtin("WPHP").unwrap().sentence
    }

    #[test]
    fn first_extension() {
        let mut c = ctx("PHP", 8);
        let p = PartialOracle::empty(&c.phi.language, 8);
        let q = extend_define(&mut c, &p, 0, &[0]).unwrap();
        assert_eq!(q.size(), 1);
        assert!(q.is_b_extension_of(&p, 1).unwrap() && c.embeds(&q));
        assert_eq!(extend_define(&mut c, &q, 0, &[0]).unwrap(), q);
        assert!(!verifies(&partial_of_oracle(&q), &c.phi));
    }

    #[test]
    fn relation_bits_are_copied() {
        let mut c = ctx("HOP", 8);
        let mut p = PartialOracle::empty(&c.phi.language, 8);
        p = extend_define(&mut c, &p, 0, &[0]).unwrap();
        p = extend_define(&mut c, &p, 1, &[1, 2]).unwrap();
        let q = extend_define(&mut c, &p, 1, &[3, 4]).unwrap();
        let e = c.embedding();
        assert_eq!(q.value(1, &[3, 4]), Some(c.model.rel(1, &[e[3], e[4]]) as u32));
        assert!(c.embeds(&q));
    }

    #[test]
    fn small_n_is_rejected() {
        let mut c = ctx("PHP", 4);
        let mut p = PartialOracle::empty(&c.phi.language, 4);
        p = extend_define(&mut c, &p, 0, &[0]).unwrap();
        p = extend_define(&mut c, &p, 0, &[1]).unwrap();
        assert!(matches!(extend_define(&mut c, &p, 0, &[2]), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn fresh_points_are_rewired() {
        // f(n−1) = n lies outside the slice [n].
        let mut c = ctx("PHP", 6);
        let p = PartialOracle::empty(&c.phi.language, 6);
        let q = extend_define(&mut c, &p, 0, &[5]).unwrap();
        assert!(c.embeds(&q));
        assert_eq!(c.embedding()[q.value(0, &[5]).unwrap() as usize], 6);
    }

    #[test]
    fn small_family_completion() {
        let mut c = ctx("HOP", 64);
        let p = PartialOracle::empty(&c.phi.language, 64);
        let trees: Vec<Arc<dyn DecisionTree>> = vec![Arc::new(constant_tree(2, 1))];
        let consts = TreeFamily::new(&wphp().language, 2, 4, trees).unwrap();
        assert_eq!(complete_trees_small(&mut c, &p, &consts, 4).unwrap(), p);
        for seed in 0..5 {
            let fam = TreeFamily::random(&wphp().language, 2, 4, &c.phi.language, 64, seed).unwrap();
            let q = complete_trees_small(&mut c, &p, &fam, 4).unwrap();
            assert!(build_c(&fam, &q).unwrap().is_total());
            assert!(q.is_b_extension_of(&p, 4 * 4).unwrap());
            assert!(c.embeds(&q) && !verifies(&partial_of_oracle(&q), &c.phi));
        }
        let mut tiny = ctx("HOP", 16);
        let fam = TreeFamily::random(&wphp().language, 2, 4, &tiny.phi.language, 16, 1).unwrap();
        let p = PartialOracle::empty(&tiny.phi.language, 16);
        assert!(matches!(complete_trees_small(&mut tiny, &p, &fam, 4), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn core_extension_on_hop() {
        let phi_t = wphp();
        for seed in 0..10 {
            let mut c = ctx("HOP", 256);
            let p = PartialOracle::empty(&c.phi.language, 256);
            let fam = TreeFamily::random(&phi_t.language, 16, 4, &c.phi.language, 256, seed).unwrap();
            let out = core_extend(&mut c, &p, &fam, 4, &phi_t, 17).unwrap();
            assert!(verifies(&build_c(&fam, &out.q).unwrap(), &phi_t));
            assert!(out.q.is_b_extension_of(&p, 4 * phi_t.size()).unwrap());
            assert!(c.embeds(&out.q) && c.fragment_embeds(&out.q).unwrap());
            assert!(!verifies(&partial_of_oracle(&out.q), &c.phi));
            assert!(out.trace_jsonl().lines().count() == out.trace.len());
        }
    }

    #[test]
    fn core_extension_from_nonempty_p() {
        let phi_t = wphp();
        let mut c = ctx("HOP", 256);
        let mut p = PartialOracle::empty(&c.phi.language, 256);
        for a in 0..5 {
            p = extend_define(&mut c, &p, 0, &[a * 7]).unwrap();
            p = extend_define(&mut c, &p, 1, &[a, a + 1]).unwrap();
        }
        let fam = TreeFamily::random(&phi_t.language, 16, 4, &c.phi.language, 256, 99).unwrap();
        let out = core_extend(&mut c, &p, &fam, 4, &phi_t, 17).unwrap();
        assert!(out.q.is_b_extension_of(&p, 4 * phi_t.size()).unwrap());
        assert!(c.embeds(&out.q) && verifies(&build_c(&fam, &out.q).unwrap(), &phi_t));
    }

    #[test]
    fn overflow_queries_force_a_rewire() {
        // Every tree first reads f(n−1), whose value n lies outside the slice.
        let phi_t = wphp();
        let mut c = ctx("HOP", 256);
        let p = PartialOracle::empty(&c.phi.language, 256);
        let tree = ProgramTree::new(2, 4, move |input, pr| {
            let mut v = 0;
            for bit in 0..4 {
                v |= (pr.ask(RelevantKey::FunBit { sym: 0, args: vec![255], bit })? as u64) << bit;
            }
            Some((v + 3 * input[0] as u64 + input[1] as u64) % 16)
        });
        let fam = TreeFamily::new(&phi_t.language, 16, 4, vec![Arc::new(tree)]).unwrap();
        let out = core_extend(&mut c, &p, &fam, 4, &phi_t, 17).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.trace[0].event, "iterate");
        assert_eq!(out.trace[0].y, Some(256));
        assert!(out.q.size() <= 4 * phi_t.size() && c.embeds(&out.q));
        assert!(verifies(&build_c(&fam, &out.q).unwrap(), &phi_t));
    }

    #[test]
    fn core_hypotheses() {
        let phi_t = wphp();
        let mut c = ctx("HOP", 256);
        let p = PartialOracle::empty(&c.phi.language, 256);
        let fam = TreeFamily::random(&phi_t.language, 4, 4, &c.phi.language, 256, 0).unwrap();
        let err = core_extend(&mut c, &p, &fam, 4, &phi_t, 5).unwrap_err();
        assert!(matches!(&err, Error::Hypothesis(m) if m.starts_with("(iii)")));
        let mut small = ctx("HOP", 64);
        let fam = TreeFamily::random(&phi_t.language, 16, 4, &small.phi.language, 64, 0).unwrap();
        let p = PartialOracle::empty(&small.phi.language, 64);
        let err = core_extend(&mut small, &p, &fam, 4, &phi_t, 17).unwrap_err();
        assert!(matches!(&err, Error::Hypothesis(m) if m.starts_with("(ii)")));
    }

    #[test]
    fn early_exit_keeps_p() {
        let phi_t = wphp();
        let mut c = ctx("HOP", 256);
        let p = PartialOracle::empty(&c.phi.language, 256);
        let trees: Vec<Arc<dyn DecisionTree>> = vec![Arc::new(constant_tree(2, 0))];
        let fam = TreeFamily::new(&phi_t.language, 16, 4, trees).unwrap();
        let out = core_extend(&mut c, &p, &fam, 4, &phi_t, 17).unwrap();
        assert_eq!(out.q, p);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn pruning_shrinks_inflated_oracles() {
        let phi_t = wphp();
        let c = ctx("HOP", 32);
        let p = PartialOracle::empty(&c.phi.language, 32);
        let inflated = oracle_of_partial(&c.pulled_back());
        let fam = TreeFamily::random(&phi_t.language, 16, 4, &c.phi.language, 32, 3).unwrap();
        if verifies(&build_c(&fam, &inflated).unwrap(), &phi_t) {
            let q = prune_to_witness(&inflated, &p, &fam, &phi_t).unwrap();
            assert!(q.size() < inflated.size());
            assert!(q.size() <= 4 * phi_t.size());
            assert!(inflated.extends(&q).unwrap() && q.extends(&p).unwrap());
        }
        assert_eq!(prune_to_witness(&p, &p, &TreeFamily::new(&phi_t.language, 16, 4, vec![Arc::new(constant_tree(2, 0))]).unwrap(), &phi_t).unwrap(), p);
    }
}
