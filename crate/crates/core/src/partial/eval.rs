use super::{PartialStructure, TruthValue};
use crate::error::{Error, Result};
use crate::syntax::{BasicSentence, Formula, Literal, Term};

/// A claimed witness: a disjunct index and values for all existential variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    pub disjunct: usize,
    pub tuple: Vec<u32>,
}

fn term(a: &PartialStructure, t: &Term, env: &[(String, u32)]) -> Result<Option<u32>> {
    match t {
        Term::Var(v) => env
            .iter()
            .rev()
            .find(|(name, _)| name == v)
            .map(|(_, x)| Some(*x))
            .ok_or_else(|| Error::Contract(format!("free variable `{v}`"))),
        Term::Param(p) => {
            if *p < a.n() {
                Ok(Some(*p))
            } else {
                Err(Error::OutOfRange(format!("parameter {p} not in [{}]", a.n())))
            }
        }
        Term::Num(k) => Ok((*k < a.n() as u64).then_some(*k as u32)),
        Term::App(s, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for x in args {
                match term(a, x, env)? {
                    Some(v) => vals.push(v),
                    None => return Ok(None),
                }
            }
            Ok(a.get(*s, &vals))
        }
    }
}

fn ev(a: &PartialStructure, f: &Formula, env: &mut Vec<(String, u32)>) -> Result<TruthValue> {
    use TruthValue::*;
    Ok(match f {
        Formula::True => True,
        Formula::False => False,
        Formula::Eq(x, y) => match (term(a, x, env)?, term(a, y, env)?) {
            (Some(u), Some(v)) => TruthValue::from_bool(u == v),
            _ => Half,
        },
        Formula::Less(x, y) => match (term(a, x, env)?, term(a, y, env)?) {
            (Some(u), Some(v)) => TruthValue::from_bool(u < v),
            _ => Half,
        },
        Formula::Rel(s, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for x in args {
                match term(a, x, env)? {
                    Some(v) => vals.push(v),
                    None => return Ok(Half),
                }
            }
            a.rel(*s, &vals).map_or(Half, TruthValue::from_bool)
        }
        Formula::Not(g) => ev(a, g, env)?.not(),
        Formula::And(fs) => {
            let mut acc = True;
            for g in fs {
                acc = acc.min(ev(a, g, env)?);
                if acc == False {
                    break;
                }
            }
            acc
        }
        Formula::Or(fs) => {
            let mut acc = False;
            for g in fs {
                acc = acc.max(ev(a, g, env)?);
                if acc == True {
                    break;
                }
            }
            acc
        }
        Formula::Forall(v, g) | Formula::Exists(v, g) => {
            let universal = matches!(f, Formula::Forall(..));
            let (mut acc, stop) = if universal { (True, False) } else { (False, True) };
            for x in 0..a.n() {
                env.push((v.clone(), x));
                let r = ev(a, g, env);
                env.pop();
                let r = r?;
                acc = if universal { acc.min(r) } else { acc.max(r) };
                if acc == stop {
                    break;
                }
            }
            acc
        }
    })
}

/// 3-valued truth value of a closed formula (parameters allowed).
pub fn eval3(a: &PartialStructure, f: &Formula) -> Result<TruthValue> {
    ev(a, f, &mut Vec::new())
}

/// Truth value of one literal under a full assignment.
pub fn literal_value(a: &PartialStructure, lit: &Literal, tuple: &[u32]) -> TruthValue {
    let v = |i: &usize| tuple[*i];
    match lit {
        Literal::Rel { sym, args, positive } => {
            let xs: Vec<u32> = args.iter().map(v).collect();
            match a.rel(*sym, &xs) {
                None => TruthValue::Half,
                Some(b) => TruthValue::from_bool(b == *positive),
            }
        }
        Literal::Fun { sym, args, value } => {
            let xs: Vec<u32> = args.iter().map(v).collect();
            match a.get(*sym, &xs) {
                None => TruthValue::Half,
                Some(b) => TruthValue::from_bool(b == v(value)),
            }
        }
        Literal::Eq { left, right, positive } => TruthValue::from_bool((v(left) == v(right)) == *positive),
        Literal::Less { left, right } => TruthValue::from_bool(v(left) < v(right)),
        Literal::Numeral { value, var } => TruthValue::from_bool(v(var) as u64 == *value),
    }
}

/// Value of a claimed disjunct on a tuple: the minimum over its literals.
pub fn witness_value(a: &PartialStructure, phi: &BasicSentence, w: &Witness) -> TruthValue {
    phi.matrix[w.disjunct]
        .iter()
        .map(|l| literal_value(a, l, &w.tuple))
        .min()
        .unwrap_or(TruthValue::True)
}

/// Backtracking join over the literals of one disjunct. In lax mode literals
/// only need to be "not false" (value at least 1/2).
struct Matcher<'a> {
    a: &'a PartialStructure,
    lits: &'a [Literal],
    lax: bool,
    domain: Option<&'a [u32]>,
}

enum Step {
    Fail,
    Progress,
    Idle,
}

impl Matcher<'_> {
    fn holds(&self, lit: &Literal, asg: &[Option<u32>]) -> bool {
        let v = |i: &usize| asg[*i].unwrap();
        match lit {
            Literal::Rel { sym, args, positive } => {
                let xs: Vec<u32> = args.iter().map(v).collect();
                match self.a.get(*sym, &xs) {
                    None => self.lax,
                    Some(b) => (b == 1) == *positive,
                }
            }
            Literal::Fun { sym, args, value } => {
                let xs: Vec<u32> = args.iter().map(v).collect();
                match self.a.get(*sym, &xs) {
                    None => self.lax,
                    Some(b) => b == v(value),
                }
            }
            Literal::Eq { left, right, positive } => (v(left) == v(right)) == *positive,
            Literal::Less { left, right } => v(left) < v(right),
            Literal::Numeral { value, var } => v(var) as u64 == *value,
        }
    }

    fn propagate(&self, lit: &Literal, asg: &mut [Option<u32>]) -> Step {
        let bound = |i: &usize| asg[*i].is_some();
        match lit {
            Literal::Fun { sym, args, value } if args.iter().all(bound) && !bound(value) => {
                let xs: Vec<u32> = args.iter().map(|i| asg[*i].unwrap()).collect();
                match self.a.get(*sym, &xs) {
                    Some(b) => {
                        asg[*value] = Some(b);
                        Step::Progress
                    }
                    None if self.lax => Step::Idle,
                    None => Step::Fail,
                }
            }
            Literal::Eq { left, right, positive: true } if bound(left) != bound(right) => {
                if bound(left) {
                    asg[*right] = asg[*left];
                } else {
                    asg[*left] = asg[*right];
                }
                Step::Progress
            }
            Literal::Numeral { value, var } if !bound(var) => {
                if *value < self.a.n() as u64 {
                    asg[*var] = Some(*value as u32);
                    Step::Progress
                } else {
                    Step::Fail
                }
            }
            _ => Step::Idle,
        }
    }

    fn solve(&self, asg: &mut Vec<Option<u32>>, pending: &mut Vec<usize>) -> bool {
        loop {
            let mut progress = false;
            let mut i = 0;
            while i < pending.len() {
                let lit = &self.lits[pending[i]];
                if lit.vars().iter().all(|x| asg[*x].is_some()) {
                    if !self.holds(lit, asg) {
                        return false;
                    }
                    pending.swap_remove(i);
                    progress = true;
                    continue;
                }
                match self.propagate(lit, asg) {
                    Step::Fail => return false,
                    Step::Progress => progress = true,
                    Step::Idle => {}
                }
                i += 1;
            }
            if !progress {
                break;
            }
        }
        if pending.is_empty() {
            return true;
        }
        // Branch on an unbound variable of the most constrained pending literal.
        let branch = pending
            .iter()
            .map(|&l| {
                let unbound: Vec<usize> =
                    self.lits[l].vars().into_iter().filter(|x| asg[*x].is_none()).collect();
                (unbound.len(), unbound[0])
            })
            .min()
            .map(|(_, x)| x)
            .unwrap();
        let full: Vec<u32>;
        let candidates = match self.domain {
            Some(d) => d,
            None => {
                full = (0..self.a.n()).collect();
                &full
            }
        };
        for &c in candidates {
            let mut asg2 = asg.clone();
            asg2[branch] = Some(c);
            let mut pend2 = pending.clone();
            if self.solve(&mut asg2, &mut pend2) {
                *asg = asg2;
                return true;
            }
        }
        false
    }
}

fn search(
    a: &PartialStructure,
    phi: &BasicSentence,
    lax: bool,
    domain: Option<&[u32]>,
    seed: impl Fn(usize, &mut Vec<Option<u32>>) -> Vec<Vec<Option<u32>>>,
) -> Option<Witness> {
    if a.n() == 0 {
        return None;
    }
    for (d, lits) in phi.matrix.iter().enumerate() {
        let m = Matcher { a, lits, lax, domain };
        let mut base = vec![None; phi.num_vars()];
        for mut asg in seed(d, &mut base) {
            let mut pending: Vec<usize> = (0..lits.len()).collect();
            if m.solve(&mut asg, &mut pending) {
                let tuple = asg.into_iter().map(|x| x.unwrap_or(0)).collect();
                return Some(Witness { disjunct: d, tuple });
            }
        }
    }
    None
}

fn unseeded(_: usize, base: &mut Vec<Option<u32>>) -> Vec<Vec<Option<u32>>> {
    vec![base.clone()]
}

/// A verifying witness, if the structure verifies the sentence.
pub fn find_witness(a: &PartialStructure, phi: &BasicSentence) -> Option<Witness> {
    search(a, phi, false, None, unseeded)
}

/// A verifying witness whose branching variables range over `domain`
/// (values forced by function literals may leave it).
pub fn find_witness_in(a: &PartialStructure, phi: &BasicSentence, domain: &[u32]) -> Option<Witness> {
    search(a, phi, false, Some(domain), unseeded)
}

/// A tuple on which no literal of some disjunct is false: a candidate
/// witness given what the structure leaves undefined.
pub fn find_lax_witness(a: &PartialStructure, phi: &BasicSentence) -> Option<Witness> {
    search(a, phi, true, None, unseeded)
}

pub fn verifies(a: &PartialStructure, phi: &BasicSentence) -> bool {
    find_witness(a, phi).is_some()
}

/// 3-valued value of a basic sentence: 1 if verified, 1/2 if some tuple has
/// no false literal, else 0.
pub fn eval_basic(a: &PartialStructure, phi: &BasicSentence) -> TruthValue {
    if verifies(a, phi) {
        TruthValue::True
    } else if search(a, phi, true, None, unseeded).is_some() {
        TruthValue::Half
    } else {
        TruthValue::False
    }
}

pub fn falsifies(a: &PartialStructure, phi: &BasicSentence) -> bool {
    eval_basic(a, phi) == TruthValue::False
}

/// Whether the sentence is verified by a witness reading the (defined) cell
/// `sym(args)`. If the structure did not verify the sentence before this cell
/// was defined, this decides whether it verifies it now.
pub fn verifies_through_cell(a: &PartialStructure, phi: &BasicSentence, sym: usize, args: &[u32]) -> bool {
    let Some(val) = a.get(sym, args) else { return false };
    search(a, phi, false, None, |d, base| {
        let mut seeds = Vec::new();
        for lit in &phi.matrix[d] {
            let (lsym, largs, value) = match lit {
                Literal::Rel { sym, args, positive } => {
                    if (val == 1) != *positive {
                        continue;
                    }
                    (*sym, args, None)
                }
                Literal::Fun { sym, args, value } => (*sym, args, Some(*value)),
                _ => continue,
            };
            if lsym != sym {
                continue;
            }
            let mut asg = base.clone();
            let mut ok = true;
            let pairs = largs.iter().zip(args.iter().copied()).chain(value.as_ref().map(|v| (v, val)));
            for (&x, want) in pairs {
                match asg[x] {
                    Some(have) if have != want => {
                        ok = false;
                        break;
                    }
                    _ => asg[x] = Some(want),
                }
            }
            if ok {
                seeds.push(asg);
            }
        }
        seeds
    })
    .is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_principle, FirstOrderSentence, Language, Symbol};

    fn php() -> BasicSentence {
        parse_principle(
            "principle PHP { language { f/1 fun, c/0 fun } exists x y u . (f(x)=u & f(y)=u & x!=y) | (f(x)=u & c()=u) }",
        )
        .unwrap()
    }

    #[test]
    fn abort_rule() {
        let lang = Language::new(vec![Symbol::fun("f", 1)], vec![]).unwrap();
        let a = PartialStructure::undefined(&lang, 2).unwrap();
        let s = FirstOrderSentence::parse(lang, "f(0)=0");
        // numerals are not declared, so write the sentence with a parameter
        assert!(s.is_err());
        let f = Formula::Eq(Term::App(0, vec![Term::Param(0)]), Term::Param(0));
        assert_eq!(eval3(&a, &f).unwrap(), TruthValue::Half);
    }

    #[test]
    fn free_variable_is_a_contract_violation() {
        let lang = Language::new(vec![Symbol::fun("f", 1)], vec![]).unwrap();
        let a = PartialStructure::undefined(&lang, 2).unwrap();
        let f = Formula::Eq(Term::Var("x".into()), Term::Param(0));
        assert!(matches!(eval3(&a, &f), Err(Error::Contract(_))));
    }

    #[test]
    fn identity_structure_verifies_php() {
        let s = php();
        let mut a = PartialStructure::undefined(&s.language, 3).unwrap();
        for i in 0..3 {
            a.set(0, &[i], Some(i)).unwrap();
        }
        a.set(1, &[], Some(2)).unwrap();
        let w = find_witness(&a, &s).unwrap();
        assert_eq!(w.disjunct, 1);
        assert_eq!(w.tuple[0], 2);
        assert_eq!(eval3(&a, &s.to_sentence().formula).unwrap(), TruthValue::True);
    }

    #[test]
    fn empty_structure_never_verifies() {
        let s = php();
        let a = PartialStructure::undefined(&s.language, 3).unwrap();
        assert!(!verifies(&a, &s));
        assert_eq!(eval_basic(&a, &s), TruthValue::Half);
    }

    #[test]
    fn incremental_check_matches_full_check() {
        let s = php();
        let mut a = PartialStructure::undefined(&s.language, 3).unwrap();
        a.set(0, &[0], Some(1)).unwrap();
        assert!(!verifies_through_cell(&a, &s, 0, &[0]));
        a.set(0, &[2], Some(1)).unwrap();
        assert!(verifies_through_cell(&a, &s, 0, &[2]));
        assert!(verifies(&a, &s));
    }
}
