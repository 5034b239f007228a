//! Signatures, basic sentences, first-order formulas, the principle DSL and
//! Herbrandization.

mod herbrand;
pub(crate) mod lexer;
pub(crate) mod parser;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use herbrand::herbrandize;
pub use parser::{parse_formula, parse_principle, parse_term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Function,
    Relation,
}

impl SymbolKind {
    pub fn word(self) -> &'static str {
        match self {
            SymbolKind::Function => "function",
            SymbolKind::Relation => "relation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
}

impl Symbol {
    pub fn fun(name: &str, arity: usize) -> Self {
        Symbol { name: name.into(), kind: SymbolKind::Function, arity }
    }

    pub fn rel(name: &str, arity: usize) -> Self {
        Symbol { name: name.into(), kind: SymbolKind::Relation, arity }
    }

    pub fn is_function(&self) -> bool {
        self.kind == SymbolKind::Function
    }
}

/// Symbols interpreted outside the stored tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Builtin {
    /// Natural order on the universe.
    #[serde(rename = "<")]
    Less,
    /// Numeral constants `0`, `1`, ... naming universe points.
    #[serde(rename = "numerals")]
    Numerals,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Language {
    pub symbols: Vec<Symbol>,
    pub builtins: Vec<Builtin>,
}

impl Language {
    pub fn new(symbols: Vec<Symbol>, mut builtins: Vec<Builtin>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &symbols {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Duplicate(s.name.clone()));
            }
        }
        builtins.sort();
        builtins.dedup();
        Ok(Language { symbols, builtins })
    }

    pub fn empty() -> Self {
        Language::default()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn symbol(&self, idx: usize) -> &Symbol {
        &self.symbols[idx]
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn has_less(&self) -> bool {
        self.builtins.contains(&Builtin::Less)
    }

    pub fn has_numerals(&self) -> bool {
        self.builtins.contains(&Builtin::Numerals)
    }

    /// s_L(n): the number of cells of a total structure on [n]. Saturates.
    pub fn s_l(&self, n: u64) -> u64 {
        self.symbols
            .iter()
            .map(|s| n.saturating_pow(s.arity as u32))
            .fold(0u64, |a, b| a.saturating_add(b))
    }

    /// r_L = 1 + maximal arity (1 for the empty language).
    pub fn r_l(&self) -> usize {
        1 + self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// Same symbols (names, kinds, arities, order); builtins may differ.
    pub fn same_symbols(&self, other: &Language) -> bool {
        self.symbols == other.symbols
    }

    pub fn extend(&self, extra: Vec<Symbol>) -> Result<Language> {
        let mut symbols = self.symbols.clone();
        symbols.extend(extra);
        Language::new(symbols, self.builtins.clone())
    }

    /// DSL rendering of the signature block body.
    pub fn render_decls(&self) -> String {
        let mut parts: Vec<String> = self
            .symbols
            .iter()
            .map(|s| {
                let kind = if s.is_function() { "fun" } else { "rel" };
                format!("{}/{} {}", s.name, s.arity, kind)
            })
            .collect();
        for b in &self.builtins {
            parts.push(match b {
                Builtin::Less => "builtin <".into(),
                Builtin::Numerals => "builtin 0".into(),
            });
        }
        parts.join(", ")
    }
}

/// Index into a sentence's `exist_vars`.
pub type Var = usize;

/// A flat literal: every argument is a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Literal {
    Rel { sym: usize, args: Vec<Var>, positive: bool },
    Fun { sym: usize, args: Vec<Var>, value: Var },
    Eq { left: Var, right: Var, positive: bool },
    /// Builtin natural order, positive only.
    Less { left: Var, right: Var },
    /// Builtin numeral `k = v`.
    Numeral { value: u64, var: Var },
}

impl Literal {
    pub fn vars(&self) -> Vec<Var> {
        match self {
            Literal::Rel { args, .. } => args.clone(),
            Literal::Fun { args, value, .. } => {
                let mut v = args.clone();
                v.push(*value);
                v
            }
            Literal::Eq { left, right, .. } | Literal::Less { left, right } => vec![*left, *right],
            Literal::Numeral { var, .. } => vec![*var],
        }
    }

    /// The stored symbol this literal reads, if any.
    pub fn symbol(&self) -> Option<usize> {
        match self {
            Literal::Rel { sym, .. } | Literal::Fun { sym, .. } => Some(*sym),
            _ => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(
            self,
            Literal::Rel { positive: false, .. } | Literal::Eq { positive: false, .. }
        )
    }

    pub fn render(&self, lang: &Language, vars: &[String]) -> String {
        let v = |i: &Var| vars[*i].as_str();
        let list = |a: &[Var]| a.iter().map(v).collect::<Vec<_>>().join(",");
        match self {
            Literal::Rel { sym, args, positive } => {
                let bang = if *positive { "" } else { "!" };
                format!("{bang}{}({})", lang.symbol(*sym).name, list(args))
            }
            Literal::Fun { sym, args, value } => {
                format!("{}({})={}", lang.symbol(*sym).name, list(args), v(value))
            }
            Literal::Eq { left, right, positive } => {
                let op = if *positive { "=" } else { "!=" };
                format!("{}{op}{}", v(left), v(right))
            }
            Literal::Less { left, right } => format!("{}<{}", v(left), v(right)),
            Literal::Numeral { value, var } => format!("{value}={}", v(var)),
        }
    }
}

/// An existential sentence in disjunctive normal form over flat literals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicSentence {
    pub name: String,
    pub language: Language,
    pub exist_vars: Vec<String>,
    pub matrix: Vec<Vec<Literal>>,
}

impl BasicSentence {
    /// Checks the shape invariants: nonempty matrix, variables in range,
    /// symbols with the right kind and arity, builtins declared.
    pub fn validate(&self) -> Result<()> {
        if self.exist_vars.is_empty() {
            return Err(Error::Contract("a basic sentence needs at least one variable".into()));
        }
        if self.matrix.is_empty() || self.matrix.iter().any(|c| c.is_empty()) {
            return Err(Error::Contract("matrix and every disjunct must be nonempty".into()));
        }
        let k = self.exist_vars.len();
        for lit in self.matrix.iter().flatten() {
            if let Some(bad) = lit.vars().into_iter().find(|&v| v >= k) {
                return Err(Error::UnknownVariable(format!("#{bad}")));
            }
            match lit {
                Literal::Rel { sym, args, .. } | Literal::Fun { sym, args, .. } => {
                    let s = self
                        .language
                        .symbols
                        .get(*sym)
                        .ok_or_else(|| Error::UnknownSymbol(format!("#{sym}")))?;
                    let want = if matches!(lit, Literal::Rel { .. }) {
                        SymbolKind::Relation
                    } else {
                        SymbolKind::Function
                    };
                    if s.kind != want {
                        return Err(Error::KindMismatch {
                            symbol: s.name.clone(),
                            used: want.word(),
                            declared: s.kind.word(),
                        });
                    }
                    if s.arity != args.len() {
                        return Err(Error::ArityMismatch {
                            symbol: s.name.clone(),
                            expected: s.arity,
                            got: args.len(),
                        });
                    }
                }
                Literal::Less { .. } if !self.language.has_less() => {
                    return Err(Error::UnknownSymbol("<".into()))
                }
                Literal::Numeral { .. } if !self.language.has_numerals() => {
                    return Err(Error::UnknownSymbol("numeral".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.exist_vars.len()
    }

    /// The sentence as a first-order formula tree.
    pub fn to_sentence(&self) -> FirstOrderSentence {
        let var = |i: &Var| Term::Var(self.exist_vars[*i].clone());
        let lit = |l: &Literal| -> Formula {
            match l {
                Literal::Rel { sym, args, positive } => {
                    let a = Formula::Rel(*sym, args.iter().map(var).collect());
                    if *positive {
                        a
                    } else {
                        Formula::Not(Box::new(a))
                    }
                }
                Literal::Fun { sym, args, value } => {
                    Formula::Eq(Term::App(*sym, args.iter().map(var).collect()), var(value))
                }
                Literal::Eq { left, right, positive } => {
                    let a = Formula::Eq(var(left), var(right));
                    if *positive {
                        a
                    } else {
                        Formula::Not(Box::new(a))
                    }
                }
                Literal::Less { left, right } => Formula::Less(var(left), var(right)),
                Literal::Numeral { value, var: v } => Formula::Eq(Term::Num(*value), var(v)),
            }
        };
        let disj: Vec<Formula> = self
            .matrix
            .iter()
            .map(|c| Formula::and(c.iter().map(lit).collect()))
            .collect();
        let mut f = Formula::or(disj);
        for v in self.exist_vars.iter().rev() {
            f = Formula::Exists(v.clone(), Box::new(f));
        }
        FirstOrderSentence { language: self.language.clone(), formula: f }
    }

    /// Node count of the formula tree with binary connectives.
    pub fn size(&self) -> usize {
        formula_size(&self.to_sentence().formula)
    }

    /// Canonical DSL text; reparses to an equal value.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "principle {} {{", self.name);
        let decls = self.language.render_decls();
        if decls.is_empty() {
            let _ = writeln!(out, "  language {{ }}");
        } else {
            let _ = writeln!(out, "  language {{ {decls} }}");
        }
        let disjuncts: Vec<String> = self
            .matrix
            .iter()
            .map(|c| {
                let lits: Vec<String> =
                    c.iter().map(|l| l.render(&self.language, &self.exist_vars)).collect();
                if lits.len() == 1 {
                    lits[0].clone()
                } else {
                    format!("({})", lits.join(" & "))
                }
            })
            .collect();
        let _ = writeln!(out, "  exists {} . {}", self.exist_vars.join(" "), disjuncts.join(" | "));
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sentence serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: BasicSentence = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

pub fn render_principle(s: &BasicSentence) -> String {
    s.render()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    App(usize, Vec<Term>),
    /// Builtin numeral.
    Num(u64),
    /// A universe point substituted for a variable.
    Param(u32),
}

impl Term {
    pub fn render(&self, lang: &Language) -> String {
        match self {
            Term::Var(v) => v.clone(),
            Term::Num(k) => k.to_string(),
            Term::Param(a) => format!("@{a}"),
            Term::App(s, args) => format!(
                "{}({})",
                lang.symbol(*s).name,
                args.iter().map(|t| t.render(lang)).collect::<Vec<_>>().join(",")
            ),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn substitute(&self, var: &str, by: &Term) -> Term {
        match self {
            Term::Var(v) if v == var => by.clone(),
            Term::App(s, args) => Term::App(*s, args.iter().map(|t| t.substitute(var, by)).collect()),
            other => other.clone(),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::App(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Rel(usize, Vec<Term>),
    Less(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    /// Conjunction; a single conjunct is returned as is.
    pub fn and(mut items: Vec<Formula>) -> Formula {
        if items.len() == 1 {
            items.pop().unwrap()
        } else if items.is_empty() {
            Formula::True
        } else {
            Formula::And(items)
        }
    }

    pub fn or(mut items: Vec<Formula>) -> Formula {
        if items.len() == 1 {
            items.pop().unwrap()
        } else if items.is_empty() {
            Formula::False
        } else {
            Formula::Or(items)
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.free_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_into(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let push_term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) | Formula::Less(a, b) => {
                push_term(a, bound, out);
                push_term(b, bound, out);
            }
            Formula::Rel(_, args) => args.iter().for_each(|t| push_term(t, bound, out)),
            Formula::Not(f) => f.free_into(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.free_into(bound, out)),
            Formula::Forall(v, f) | Formula::Exists(v, f) => {
                bound.push(v.clone());
                f.free_into(bound, out);
                bound.pop();
            }
        }
    }

    /// Replaces free occurrences of `var`.
    pub fn substitute(&self, var: &str, by: &Term) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Eq(a, b) => Formula::Eq(a.substitute(var, by), b.substitute(var, by)),
            Formula::Less(a, b) => Formula::Less(a.substitute(var, by), b.substitute(var, by)),
            Formula::Rel(s, args) => {
                Formula::Rel(*s, args.iter().map(|t| t.substitute(var, by)).collect())
            }
            Formula::Not(f) => Formula::not(f.substitute(var, by)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(var, by)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(var, by)).collect()),
            Formula::Forall(v, f) | Formula::Exists(v, f) if v == var => self.clone(),
            Formula::Forall(v, f) => Formula::Forall(v.clone(), Box::new(f.substitute(var, by))),
            Formula::Exists(v, f) => Formula::Exists(v.clone(), Box::new(f.substitute(var, by))),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => false,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            _ => true,
        }
    }

    pub fn render(&self, lang: &Language) -> String {
        match self {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Eq(a, b) => format!("{}={}", a.render(lang), b.render(lang)),
            Formula::Less(a, b) => format!("{}<{}", a.render(lang), b.render(lang)),
            Formula::Rel(s, args) => Term::App(*s, args.clone()).render(lang),
            Formula::Not(f) => match f.as_ref() {
                Formula::Eq(a, b) => format!("{}!={}", a.render(lang), b.render(lang)),
                inner @ (Formula::Rel(..) | Formula::Not(_) | Formula::True | Formula::False) => {
                    format!("!{}", inner.render(lang))
                }
                inner => format!("!({})", inner.render(lang)),
            },
            Formula::And(fs) | Formula::Or(fs) => {
                let op = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                fs.iter()
                    .map(|f| match f {
                        Formula::And(_) | Formula::Or(_) | Formula::Forall(..) | Formula::Exists(..) => {
                            format!("({})", f.render(lang))
                        }
                        _ => f.render(lang),
                    })
                    .collect::<Vec<_>>()
                    .join(op)
            }
            Formula::Forall(v, f) => format!("forall {v} . {}", f.render(lang)),
            Formula::Exists(v, f) => format!("exists {v} . {}", f.render(lang)),
        }
    }
}

/// A closed formula together with its language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstOrderSentence {
    pub language: Language,
    pub formula: Formula,
}

impl FirstOrderSentence {
    pub fn new(language: Language, formula: Formula) -> Result<Self> {
        if let Some(v) = formula.free_vars().into_iter().next() {
            return Err(Error::Contract(format!("free variable `{v}` in sentence")));
        }
        Ok(FirstOrderSentence { language, formula })
    }

    pub fn parse(language: Language, text: &str) -> Result<Self> {
        let f = parse_formula(&language, text, &[])?;
        FirstOrderSentence::new(language, f)
    }
}

/// Number of nodes: atoms plus every ∧, ∨, ¬, ∃, ∀, counting an n-ary
/// connective as n−1 binary ones.
pub fn formula_size(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False | Formula::Eq(..) | Formula::Rel(..) | Formula::Less(..) => 1,
        Formula::Not(g) => 1 + formula_size(g),
        Formula::And(fs) | Formula::Or(fs) => {
            fs.len().saturating_sub(1) + fs.iter().map(formula_size).sum::<usize>()
        }
        Formula::Forall(_, g) | Formula::Exists(_, g) => 1 + formula_size(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn php_text() -> &'static str {
        "principle PHP {\n  language { f/1 fun, c/0 fun }\n  exists x y u . (f(x)=u & f(y)=u & x!=y) | (f(x)=u & c()=u)\n}\n"
    }

    #[test]
    fn php_parses_with_expected_shape() {
        let s = parse_principle(php_text()).unwrap();
        assert_eq!(s.language.symbols, vec![Symbol::fun("f", 1), Symbol::fun("c", 0)]);
        assert_eq!(s.exist_vars.len(), 3);
        assert_eq!(s.matrix.len(), 2);
        assert!(s.matrix.iter().all(|c| c.len() <= 3));
    }

    #[test]
    fn render_is_canonical_and_reparses() {
        let s = parse_principle(php_text()).unwrap();
        assert_eq!(s.render(), php_text());
        assert_eq!(parse_principle(&s.render()).unwrap(), s);
    }

    #[test]
    fn identity_sentence_over_empty_language() {
        let s = parse_principle("principle Id { language { } exists x . x=x }").unwrap();
        assert_eq!(s.matrix, vec![vec![Literal::Eq { left: 0, right: 0, positive: true }]]);
        assert!(s.render().contains("exists x . x=x"));
    }

    #[test]
    fn single_function_literal() {
        let s = parse_principle("principle F { language { f/2 fun } exists x . f(x,x)=x }").unwrap();
        assert_eq!(s.matrix, vec![vec![Literal::Fun { sym: 0, args: vec![0, 0], value: 0 }]]);
    }

    #[test]
    fn sizes() {
        let lit = parse_formula(&Language::empty(), "x=y", &["x".into(), "y".into()]).unwrap();
        assert_eq!(formula_size(&lit), 1);
        let lang = Language::new(vec![Symbol::rel("A", 0), Symbol::rel("B", 0)], vec![]).unwrap();
        let f = parse_formula(&lang, "exists x . A() & B()", &[]).unwrap();
        assert_eq!(formula_size(&f), 4);
        // three quantifiers, two conjunctions of three and two atoms, one negation, one disjunction
        assert_eq!(parse_principle(php_text()).unwrap().size(), 13);
    }

    #[test]
    fn s_l_and_r_l() {
        let wphp = Language::new(vec![Symbol::fun("f", 2)], vec![]).unwrap();
        assert_eq!(wphp.s_l(3), 9);
        assert_eq!(wphp.r_l(), 3);
        let hop = Language::new(vec![Symbol::fun("f", 1), Symbol::rel("prec", 2)], vec![]).unwrap();
        assert_eq!(hop.s_l(2), 6);
        assert_eq!(Language::empty().r_l(), 1);
    }

    #[test]
    fn json_roundtrip() {
        let s = parse_principle(php_text()).unwrap();
        assert_eq!(BasicSentence::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn duplicate_symbols_rejected() {
        assert!(matches!(
            Language::new(vec![Symbol::fun("f", 1), Symbol::rel("f", 1)], vec![]),
            Err(Error::Duplicate(_))
        ));
    }
}
