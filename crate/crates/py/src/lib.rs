//! Python bindings. Structures cross the boundary as JSON text, formulas as
//! s-expressions and DIMACS as plain text.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use finprin::adversary::{default_determinacy, Session as CoreSession, SolverClaim};
use finprin::catalog::{self, check_largeness};
use finprin::density::{core_extend, DensityContext};
use finprin::determinacy::{determinacy_row, Method, SearchOptions};
use finprin::dtrees::{build_c, TreeFamily};
use finprin::encoding::{PartialOracle, RelevantKey};
use finprin::partial::{eval_basic, find_witness, verifies, PartialStructure, TruthValue};
use finprin::reduce::{
    apply_interpretation, builtin_interpretation, builtin_names, check_validity, pullback_solution, CheckMode,
    Interpretation as CoreInterpretation,
};
use finprin::syntax::{parse_principle, BasicSentence};
use finprin::translate::{export_cnf, metrics, simplify_constants, to_dnf, translation, CnfMode, Coding};
use finprin::Error;

create_exception!(finprin, FinprinError, PyException);
create_exception!(finprin, HypothesisError, FinprinError);
create_exception!(finprin, CapExceededError, FinprinError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Hypothesis(_) => HypothesisError::new_err(e.to_string()),
        Error::CapExceeded(_) => CapExceededError::new_err(e.to_string()),
        _ => FinprinError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for finprin::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn truth(v: TruthValue) -> f64 {
    match v {
        TruthValue::False => 0.0,
        TruthValue::Half => 0.5,
        TruthValue::True => 1.0,
    }
}

/// A basic sentence.
#[pyclass(module = "finprin", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Principle {
    inner: BasicSentence,
}

#[pymethods]
impl Principle {
    /// A catalog principle by name.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Principle { inner: catalog::builtin(name).py()?.sentence })
    }

    /// Parses the principle DSL.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Principle { inner: parse_principle(text).py()? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn r_l(&self) -> usize {
        self.inner.language.r_l()
    }

    fn s_l(&self, n: u64) -> u64 {
        self.inner.language.s_l(n)
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// d(n). `exhaustive` drops the size bound of the search.
    #[pyo3(signature = (n, exhaustive = false))]
    fn determinacy(&self, n: u32, exhaustive: bool) -> PyResult<u64> {
        let method = if exhaustive { Method::Exhaustive } else { Method::BranchAndBound };
        Ok(determinacy_row(&self.inner, n, SearchOptions::with_method(method)).py()?.d)
    }

    /// Propositional translation on [n]: coding is "unary" or "binary".
    #[pyo3(signature = (n, coding = "binary", simplify = false))]
    fn translate(&self, n: u32, coding: &str, simplify: bool) -> PyResult<String> {
        let f = self.formula(n, coding, simplify)?;
        Ok(f.render(&self.inner.language))
    }

    /// (depth, size) of the translation.
    #[pyo3(signature = (n, coding = "binary", simplify = false))]
    fn metrics(&self, n: u32, coding: &str, simplify: bool) -> PyResult<(usize, usize)> {
        let m = metrics(&self.formula(n, coding, simplify)?);
        Ok((m.depth, m.size))
    }

    /// DIMACS of the negated translation. Direct mode expands to DNF first.
    #[pyo3(signature = (n, coding = "binary", mode = "tseitin"))]
    fn cnf(&self, n: u32, coding: &str, mode: &str) -> PyResult<String> {
        let mode: CnfMode = mode.parse().py()?;
        let mut f = self.formula(n, coding, true)?;
        if mode == CnfMode::Direct {
            f = to_dnf(&f, 1 << 20).py()?;
        }
        Ok(export_cnf(&f, &self.inner.language, n, mode).py()?.to_dimacs())
    }

    fn __repr__(&self) -> String {
        format!("Principle({:?})", self.inner.name)
    }
}

impl Principle {
    fn formula(&self, n: u32, coding: &str, simplify: bool) -> PyResult<finprin::translate::PropFormula> {
        let coding = match coding {
            "unary" => Coding::Unary,
            "binary" => Coding::Binary,
            other => return Err(FinprinError::new_err(format!("unknown coding `{other}`"))),
        };
        let f = translation(&self.inner, n, coding).py()?;
        Ok(if simplify { simplify_constants(&f) } else { f })
    }
}

/// A partial structure over a principle's language.
#[pyclass(module = "finprin", frozen)]
struct Structure {
    inner: PartialStructure,
}

#[pymethods]
impl Structure {
    #[staticmethod]
    fn from_json(principle: &Principle, text: &str) -> PyResult<Self> {
        Ok(Structure { inner: PartialStructure::from_json(&principle.inner.language, text).py()? })
    }

    /// A uniformly random total structure on [n].
    #[staticmethod]
    #[pyo3(signature = (principle, n, seed = 0))]
    fn random_total(principle: &Principle, n: u32, seed: u64) -> PyResult<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Ok(Structure { inner: catalog::random_total(&principle.inner.language, n, &mut rng).py()? })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    #[getter]
    fn is_total(&self) -> bool {
        self.inner.is_total()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Three-valued truth of the principle: 0, 0.5 or 1.
    fn eval(&self, principle: &Principle) -> f64 {
        truth(eval_basic(&self.inner, &principle.inner))
    }

    fn verifies(&self, principle: &Principle) -> bool {
        verifies(&self.inner, &principle.inner)
    }

    /// (disjunct, tuple) of a verifying witness, or None.
    fn find_witness(&self, principle: &Principle) -> Option<(usize, Vec<u32>)> {
        find_witness(&self.inner, &principle.inner).map(|w| (w.disjunct, w.tuple))
    }
}

/// An adversary session answering oracle queries from a model.
#[pyclass(module = "finprin", unsendable)]
struct Session {
    inner: CoreSession,
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (principle, n, budget = None))]
    fn new(principle: &str, n: u32, budget: Option<usize>) -> PyResult<Self> {
        Ok(Session { inner: CoreSession::for_principle(principle, n, budget).py()? })
    }

    #[getter]
    fn budget(&self) -> usize {
        self.inner.budget()
    }

    #[getter]
    fn answered(&self) -> usize {
        self.inner.answered()
    }

    /// Answers a key such as `f(3)#0` or `R(0,1)`.
    fn query(&mut self, key: &str) -> PyResult<bool> {
        let k = RelevantKey::parse(&self.inner.phi().language, key).py()?;
        self.inner.answer_query(&k).py()
    }

    /// Index of a literal of the claimed disjunct that fails.
    fn claim(&mut self, disjunct: usize, tuple: Vec<u32>) -> PyResult<usize> {
        Ok(self.inner.refute_claim(&SolverClaim { disjunct, tuple }).py()?.literal)
    }

    /// Registers a random tree family computing instances of `target` on [m].
    #[pyo3(signature = (target, m, b0, seed = 0))]
    fn register_random_family(&mut self, target: &Principle, m: u32, b0: usize, seed: u64) -> PyResult<String> {
        let lang = self.inner.phi().language.clone();
        let fam = TreeFamily::random(&target.inner.language, m, b0, &lang, self.inner.n(), seed).py()?;
        let d_t = default_determinacy(&target.inner, m).py()?;
        let r = self.inner.register_tree_family(fam, &target.inner, b0, d_t).py()?;
        serde_json::to_string(&r).map_err(|e| FinprinError::new_err(e.to_string()))
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.inner.check_invariants().py()
    }

    /// The partial structure B(p) answered so far.
    fn structure(&self) -> Structure {
        Structure { inner: finprin::encoding::partial_of_oracle(self.inner.oracle()) }
    }
}

/// An interpretation of one principle's target language in another's.
#[pyclass(module = "finprin", frozen)]
struct Interpretation {
    inner: CoreInterpretation,
}

#[pymethods]
impl Interpretation {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Interpretation { inner: builtin_interpretation(name).py()? })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Interpretation { inner: CoreInterpretation::parse(text).py()? })
    }

    #[getter]
    fn source(&self) -> Principle {
        Principle { inner: self.inner.source.clone() }
    }

    #[getter]
    fn target(&self) -> Principle {
        Principle { inner: self.inner.target.clone() }
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    /// Violations found by an exhaustive check on [n]; empty when valid.
    fn check(&self, n: u32) -> PyResult<Vec<String>> {
        Ok(check_validity(&self.inner, n, CheckMode::Exhaustive).py()?.violations)
    }

    fn apply(&self, b: &Structure) -> PyResult<Structure> {
        Ok(Structure { inner: apply_interpretation(&self.inner, &b.inner).py()? })
    }

    /// A source witness on B from a target witness on I(B).
    fn pullback(&self, b: &Structure, disjunct: usize, tuple: Vec<u32>) -> PyResult<(usize, Vec<u32>)> {
        let w = finprin::partial::Witness { disjunct, tuple };
        let p = pullback_solution(&self.inner, &b.inner, &w).py()?;
        Ok((p.disjunct, p.tuple))
    }
}

#[pyfunction]
fn principles() -> Vec<&'static str> {
    catalog::names()
}

#[pyfunction]
fn interpretations() -> Vec<&'static str> {
    builtin_names()
}

/// (overflow set, g(n)) for the canonical slice of a catalog model.
#[pyfunction]
fn largeness(name: &str, n: usize) -> PyResult<(Vec<u64>, usize)> {
    let e = catalog::builtin(name).py()?;
    let model = e.model.ok_or_else(|| FinprinError::new_err(format!("no registered model for {name}")))?;
    let r = check_largeness(&model, n, 0, 0).py()?;
    Ok((r.overflow, r.g))
}

/// One core-extension run on a random tree family; returns the JSON summary.
#[pyfunction]
#[pyo3(signature = (principle = "HOP", target = "WPHP", n = 256, m = 16, b0 = 4, seed = 0))]
fn core_lemma(principle: &str, target: &str, n: u32, m: u32, b0: usize, seed: u64) -> PyResult<String> {
    let e = catalog::builtin(principle).py()?;
    let model = e.model.ok_or_else(|| FinprinError::new_err(format!("no registered model for {principle}")))?;
    let phi_t = catalog::builtin(target).py()?.sentence;
    let mut ctx = DensityContext::new(&e.sentence, &model, n).py()?;
    let fam = TreeFamily::random(&phi_t.language, m, b0, &e.sentence.language, n, seed).py()?;
    let d_t = default_determinacy(&phi_t, m).py()?;
    let p = PartialOracle::empty(&e.sentence.language, n);
    let out = core_extend(&mut ctx, &p, &fam, b0, &phi_t, d_t).py()?;
    let c = build_c(&fam, &out.q).py()?;
    let summary = serde_json::json!({
        "q_size": out.q.size(),
        "iterations": out.iterations,
        "c_verifies": verifies(&c, &phi_t),
        "fragment_embeds": ctx.fragment_embeds(&out.q).py()?,
    });
    Ok(summary.to_string())
}

#[pymodule]
#[pyo3(name = "finprin")]
fn finprin_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FinprinError", m.py().get_type::<FinprinError>())?;
    m.add("HypothesisError", m.py().get_type::<HypothesisError>())?;
    m.add("CapExceededError", m.py().get_type::<CapExceededError>())?;
    m.add_class::<Principle>()?;
    m.add_class::<Structure>()?;
    m.add_class::<Session>()?;
    m.add_class::<Interpretation>()?;
    m.add_function(wrap_pyfunction!(principles, m)?)?;
    m.add_function(wrap_pyfunction!(interpretations, m)?)?;
    m.add_function(wrap_pyfunction!(largeness, m)?)?;
    m.add_function(wrap_pyfunction!(core_lemma, m)?)?;
    Ok(())
}
