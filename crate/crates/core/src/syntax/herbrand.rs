use std::collections::{BTreeSet, HashMap};

use super::{BasicSentence, FirstOrderSentence, Formula, Literal, Symbol, Term, Var};

/// Polarity-tagged atom of a quantifier-free matrix in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Atom {
    Eq(Term, Term),
    Rel(usize, Vec<Term>),
    Less(Term, Term),
}

type Conj = Vec<(bool, Atom)>;

struct Names {
    used: BTreeSet<String>,
}

impl Names {
    fn fresh(&mut self, preferred: &[&str], base: &str) -> String {
        for p in preferred {
            if self.used.insert((*p).to_string()) {
                return (*p).to_string();
            }
        }
        (1..)
            .map(|i| format!("{base}{i}"))
            .find(|c| self.used.insert(c.clone()))
            .unwrap()
    }
}

fn collect_names(f: &Formula, out: &mut BTreeSet<String>) {
    let mut vs = Vec::new();
    let mut terms = |ts: &[&Term], out: &mut BTreeSet<String>| {
        for t in ts {
            t.collect_vars(&mut vs);
        }
        out.extend(vs.drain(..));
    };
    match f {
        Formula::Eq(a, b) | Formula::Less(a, b) => terms(&[a, b], out),
        Formula::Rel(_, args) => terms(&args.iter().collect::<Vec<_>>(), out),
        Formula::Not(g) => collect_names(g, out),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| collect_names(g, out)),
        Formula::Forall(v, g) | Formula::Exists(v, g) => {
            out.insert(v.clone());
            collect_names(g, out);
        }
        Formula::True | Formula::False => {}
    }
}

fn nnf(f: &Formula, neg: bool) -> Formula {
    match f {
        Formula::True => if neg { Formula::False } else { Formula::True },
        Formula::False => if neg { Formula::True } else { Formula::False },
        Formula::Not(g) => nnf(g, !neg),
        Formula::And(fs) | Formula::Or(fs) => {
            let items = fs.iter().map(|g| nnf(g, neg)).collect();
            if matches!(f, Formula::And(_)) != neg {
                Formula::And(items)
            } else {
                Formula::Or(items)
            }
        }
        Formula::Forall(v, g) | Formula::Exists(v, g) => {
            let body = Box::new(nnf(g, neg));
            if matches!(f, Formula::Forall(..)) != neg {
                Formula::Forall(v.clone(), body)
            } else {
                Formula::Exists(v.clone(), body)
            }
        }
        atom => {
            if neg {
                Formula::not(atom.clone())
            } else {
                atom.clone()
            }
        }
    }
}

/// Renames bound variables so that every quantifier binds a distinct name.
fn rename_apart(f: &Formula, seen: &mut BTreeSet<String>, names: &mut Names) -> Formula {
    match f {
        Formula::Not(g) => Formula::not(rename_apart(g, seen, names)),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| rename_apart(g, seen, names)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| rename_apart(g, seen, names)).collect()),
        Formula::Forall(v, g) | Formula::Exists(v, g) => {
            let (v2, body) = if seen.insert(v.clone()) {
                (v.clone(), (**g).clone())
            } else {
                let w = names.fresh(&[], v);
                seen.insert(w.clone());
                (w.clone(), g.substitute(v, &Term::Var(w)))
            };
            let body = Box::new(rename_apart(&body, seen, names));
            if matches!(f, Formula::Forall(..)) {
                Formula::Forall(v2, body)
            } else {
                Formula::Exists(v2, body)
            }
        }
        other => other.clone(),
    }
}

fn prenex(f: Formula, prefix: &mut Vec<(bool, String)>) -> Formula {
    match f {
        Formula::Forall(v, g) => {
            prefix.push((true, v));
            prenex(*g, prefix)
        }
        Formula::Exists(v, g) => {
            prefix.push((false, v));
            prenex(*g, prefix)
        }
        Formula::And(fs) => Formula::And(fs.into_iter().map(|g| prenex(g, prefix)).collect()),
        Formula::Or(fs) => Formula::Or(fs.into_iter().map(|g| prenex(g, prefix)).collect()),
        other => other,
    }
}

fn dnf(f: &Formula) -> Vec<Conj> {
    match f {
        Formula::True => vec![vec![]],
        Formula::False => vec![],
        Formula::Eq(a, b) => vec![vec![(true, Atom::Eq(a.clone(), b.clone()))]],
        Formula::Rel(s, args) => vec![vec![(true, Atom::Rel(*s, args.clone()))]],
        Formula::Less(a, b) => vec![vec![(true, Atom::Less(a.clone(), b.clone()))]],
        Formula::Not(g) => match g.as_ref() {
            Formula::Eq(a, b) => vec![vec![(false, Atom::Eq(a.clone(), b.clone()))]],
            Formula::Rel(s, args) => vec![vec![(false, Atom::Rel(*s, args.clone()))]],
            // not a<b on a linear order: b<a or a=b
            Formula::Less(a, b) => vec![
                vec![(true, Atom::Less(b.clone(), a.clone()))],
                vec![(true, Atom::Eq(a.clone(), b.clone()))],
            ],
            _ => unreachable!("matrix is in negation normal form"),
        },
        Formula::Or(fs) => fs.iter().flat_map(dnf).collect(),
        Formula::And(fs) => {
            let mut acc: Vec<Conj> = vec![vec![]];
            for g in fs {
                let parts = dnf(g);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for p in &parts {
                        let mut c = a.clone();
                        c.extend(p.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Formula::Forall(..) | Formula::Exists(..) => unreachable!("matrix is quantifier free"),
    }
}

/// Introduces variables for compound terms. Definitions are shared across
/// disjuncts; each disjunct receives exactly the definitions it depends on.
struct Flattener {
    var_index: HashMap<String, Var>,
    vars: Vec<String>,
    names: Names,
    memo: HashMap<Term, Var>,
    /// definition literal and the definitions it depends on
    defs: Vec<(Literal, Vec<usize>)>,
    def_of_var: HashMap<Var, usize>,
}

impl Flattener {
    fn var(&mut self, name: &str) -> Var {
        if let Some(&i) = self.var_index.get(name) {
            return i;
        }
        self.vars.push(name.to_string());
        self.var_index.insert(name.to_string(), self.vars.len() - 1);
        self.vars.len() - 1
    }

    fn fresh_var(&mut self) -> Var {
        let name = self.names.fresh(&["y", "z", "u", "v", "w"], "y");
        self.var(&name)
    }

    fn term(&mut self, t: &Term, needs: &mut Vec<usize>) -> Var {
        match t {
            Term::Var(v) => self.var(v),
            Term::Param(_) => unreachable!("sentences carry no parameters"),
            _ => {
                if let Some(&v) = self.memo.get(t) {
                    needs.push(self.def_of_var[&v]);
                    return v;
                }
                let mut deps = Vec::new();
                let lit = match t {
                    Term::Num(k) => {
                        let w = self.fresh_var();
                        (Literal::Numeral { value: *k, var: w }, w)
                    }
                    Term::App(s, args) => {
                        let a: Vec<Var> = args.iter().map(|x| self.term(x, &mut deps)).collect();
                        let w = self.fresh_var();
                        (Literal::Fun { sym: *s, args: a, value: w }, w)
                    }
                    _ => unreachable!(),
                };
                self.defs.push((lit.0, deps));
                let id = self.defs.len() - 1;
                self.def_of_var.insert(lit.1, id);
                self.memo.insert(t.clone(), lit.1);
                needs.push(id);
                lit.1
            }
        }
    }

    fn atom(&mut self, positive: bool, atom: &Atom, needs: &mut Vec<usize>) -> Literal {
        match atom {
            Atom::Rel(s, args) => {
                let a = args.iter().map(|t| self.term(t, needs)).collect();
                Literal::Rel { sym: *s, args: a, positive }
            }
            Atom::Less(a, b) => {
                let (l, r) = (self.term(a, needs), self.term(b, needs));
                Literal::Less { left: l, right: r }
            }
            Atom::Eq(a, b) if positive => match (a, b) {
                (Term::App(s, args), other) | (other, Term::App(s, args)) => {
                    let value = self.term(other, needs);
                    let a = args.iter().map(|t| self.term(t, needs)).collect();
                    Literal::Fun { sym: *s, args: a, value }
                }
                (Term::Num(k), other) | (other, Term::Num(k)) => {
                    let var = self.term(other, needs);
                    Literal::Numeral { value: *k, var }
                }
                (l, r) => {
                    let (l, r) = (self.term(l, needs), self.term(r, needs));
                    Literal::Eq { left: l, right: r, positive: true }
                }
            },
            Atom::Eq(a, b) => {
                let (l, r) = (self.term(a, needs), self.term(b, needs));
                Literal::Eq { left: l, right: r, positive: false }
            }
        }
    }

    fn close(&self, needs: Vec<usize>) -> Vec<usize> {
        let mut all = BTreeSet::new();
        let mut stack = needs;
        while let Some(d) = stack.pop() {
            if all.insert(d) {
                stack.extend(self.defs[d].1.iter().copied());
            }
        }
        all.into_iter().collect()
    }
}

/// Herbrandizes a first-order sentence into an equivalid basic sentence:
/// negation normal form, prenexing, replacing each universal variable by a
/// fresh function of the preceding existential ones, disjunctive normal form
/// and flattening of nested terms through fresh existential variables.
pub fn herbrandize(s: &FirstOrderSentence) -> BasicSentence {
    let mut used = BTreeSet::new();
    collect_names(&s.formula, &mut used);
    let mut names = Names { used };

    let f = nnf(&s.formula, false);
    let f = rename_apart(&f, &mut BTreeSet::new(), &mut names);
    let mut prefix = Vec::new();
    let mut matrix = prenex(f, &mut prefix);

    let mut language = s.language.clone();
    let mut existentials: Vec<String> = Vec::new();
    let mut h = 0usize;
    for (universal, v) in prefix {
        if universal {
            let name = loop {
                let cand = format!("h{h}");
                h += 1;
                if language.index_of(&cand).is_none() {
                    break cand;
                }
            };
            language.symbols.push(Symbol::fun(&name, existentials.len()));
            let sym = language.symbols.len() - 1;
            let t = Term::App(sym, existentials.iter().map(|e| Term::Var(e.clone())).collect());
            matrix = matrix.substitute(&v, &t);
        } else {
            existentials.push(v);
        }
    }

    let mut fl = Flattener {
        var_index: HashMap::new(),
        vars: Vec::new(),
        names,
        memo: HashMap::new(),
        defs: Vec::new(),
        def_of_var: HashMap::new(),
    };
    for e in &existentials {
        fl.var(e);
    }

    let mut out: Vec<Vec<Literal>> = Vec::new();
    for conj in dnf(&matrix) {
        let mut needs = Vec::new();
        let mut lits = Vec::new();
        let mut contradictory = false;
        for (pos, atom) in &conj {
            if let Atom::Eq(a, b) = atom {
                if a == b {
                    if *pos {
                        continue;
                    }
                    contradictory = true;
                    break;
                }
            }
            lits.push(fl.atom(*pos, atom, &mut needs));
        }
        if contradictory {
            continue;
        }
        let mut full: Vec<Literal> = fl.close(needs).into_iter().map(|d| fl.defs[d].0.clone()).collect();
        for l in lits {
            if !full.contains(&l) {
                full.push(l);
            }
        }
        if full.is_empty() {
            // a true disjunct
            let x = if fl.vars.is_empty() { fl.fresh_var() } else { 0 };
            full.push(Literal::Eq { left: x, right: x, positive: true });
        }
        if !out.contains(&full) {
            out.push(full);
        }
    }
    if fl.vars.is_empty() {
        fl.fresh_var();
    }
    if out.is_empty() {
        out.push(vec![Literal::Eq { left: 0, right: 0, positive: false }]);
    }
    BasicSentence { name: "herbrandized".into(), language, exist_vars: fl.vars, matrix: out }
}
