use super::lexer::{lex, Spanned, Tok};
use super::{BasicSentence, Builtin, Formula, Language, Literal, Symbol, SymbolKind, Term, Var};
use crate::error::{Error, Result};

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let s = &self.toks[self.pos];
        Err(Error::Syntax { line: s.line, col: s.col, msg: msg.into() })
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            let found = self.peek().describe();
            self.error(format!("expected {}, found {found}", want.describe()))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    pub(crate) fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => {
                let found = other.describe();
                self.error(format!("expected `{kw}`, found {found}"))
            }
        }
    }

    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    /// `language { decl, ... }` (an empty block is accepted).
    pub(crate) fn language_block(&mut self) -> Result<Language> {
        self.keyword("language")?;
        self.expect(Tok::LBrace)?;
        let mut symbols = Vec::new();
        let mut builtins = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                if self.at_keyword("builtin") && *self.peek_at(1) != Tok::Slash {
                    self.bump();
                    match self.bump() {
                        Tok::Less => builtins.push(Builtin::Less),
                        Tok::Nat(0) => builtins.push(Builtin::Numerals),
                        other => {
                            self.pos -= 1;
                            return self.error(format!(
                                "expected `<` or `0` after builtin, found {}",
                                other.describe()
                            ));
                        }
                    }
                } else {
                    let name = self.ident()?;
                    self.expect(Tok::Slash)?;
                    let arity = match self.bump() {
                        Tok::Nat(k) => k as usize,
                        other => {
                            self.pos -= 1;
                            return self.error(format!("expected arity, found {}", other.describe()));
                        }
                    };
                    let kind = match self.ident()?.as_str() {
                        "fun" => SymbolKind::Function,
                        "rel" => SymbolKind::Relation,
                        other => {
                            self.pos -= 1;
                            return self.error(format!("expected `fun` or `rel`, found `{other}`"));
                        }
                    };
                    symbols.push(Symbol { name, kind, arity });
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Language::new(symbols, builtins)
    }

    fn symbol(&self, lang: &Language, name: &str, kind: SymbolKind, arity: usize) -> Result<usize> {
        let idx = lang.index_of(name).ok_or_else(|| Error::UnknownSymbol(name.into()))?;
        let s = lang.symbol(idx);
        if s.kind != kind {
            return Err(Error::KindMismatch { symbol: name.into(), used: kind.word(), declared: s.kind.word() });
        }
        if s.arity != arity {
            return Err(Error::ArityMismatch { symbol: name.into(), expected: s.arity, got: arity });
        }
        Ok(idx)
    }

    // ---- basic literals -------------------------------------------------

    fn flat_var(&mut self, vars: &[String]) -> Result<Var> {
        let name = self.ident()?;
        if *self.peek() == Tok::LParen {
            return Err(Error::NonBasicLiteral(format!("nested term `{name}(...)`")));
        }
        vars.iter().position(|v| *v == name).ok_or(Error::UnknownVariable(name))
    }

    fn flat_args(&mut self, vars: &[String]) -> Result<Vec<Var>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.flat_var(vars)?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn literal(&mut self, lang: &Language, vars: &[String]) -> Result<Literal> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                let name = self.ident()?;
                if *self.peek() != Tok::LParen {
                    return self.error("expected `(` after negated relation symbol");
                }
                let args = self.flat_args(vars)?;
                if let Some(i) = lang.index_of(&name) {
                    if lang.symbol(i).is_function() {
                        return Err(Error::NonBasicLiteral(format!(
                            "negated function term `!{name}(...)`"
                        )));
                    }
                }
                let sym = self.symbol(lang, &name, SymbolKind::Relation, args.len())?;
                Ok(Literal::Rel { sym, args, positive: false })
            }
            Tok::Nat(k) => {
                self.bump();
                self.expect(Tok::Eq)?;
                let var = self.flat_var(vars)?;
                if !lang.has_numerals() {
                    return Err(Error::UnknownSymbol(k.to_string()));
                }
                Ok(Literal::Numeral { value: k, var })
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    self.bump();
                    let args = self.flat_args(vars)?;
                    match self.peek() {
                        Tok::Eq => {
                            self.bump();
                            let value = self.flat_var(vars)?;
                            let sym = self.symbol(lang, &name, SymbolKind::Function, args.len())?;
                            Ok(Literal::Fun { sym, args, value })
                        }
                        Tok::Neq => Err(Error::NonBasicLiteral(format!(
                            "negated function literal on `{name}`"
                        ))),
                        _ => {
                            let sym = self.symbol(lang, &name, SymbolKind::Relation, args.len())?;
                            Ok(Literal::Rel { sym, args, positive: true })
                        }
                    }
                } else {
                    let left = self.flat_var(vars)?;
                    let op = self.bump();
                    let right = self.flat_var(vars)?;
                    match op {
                        Tok::Eq => Ok(Literal::Eq { left, right, positive: true }),
                        Tok::Neq => Ok(Literal::Eq { left, right, positive: false }),
                        Tok::Less => {
                            if !lang.has_less() {
                                return Err(Error::UnknownSymbol("<".into()));
                            }
                            Ok(Literal::Less { left, right })
                        }
                        other => {
                            self.pos -= 2;
                            self.error(format!("expected `=`, `!=` or `<`, found {}", other.describe()))
                        }
                    }
                }
            }
            other => self.error(format!("expected literal, found {}", other.describe())),
        }
    }

    fn conj(&mut self, lang: &Language, vars: &[String]) -> Result<Vec<Literal>> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let mut lits = vec![self.literal(lang, vars)?];
            while *self.peek() == Tok::Amp {
                self.bump();
                lits.push(self.literal(lang, vars)?);
            }
            self.expect(Tok::RParen)?;
            Ok(lits)
        } else {
            Ok(vec![self.literal(lang, vars)?])
        }
    }

    pub(crate) fn principle(&mut self) -> Result<BasicSentence> {
        self.keyword("principle")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let language = self.language_block()?;
        self.keyword("exists")?;
        let mut vars = Vec::new();
        while let Tok::Ident(v) = self.peek().clone() {
            if vars.contains(&v) {
                return Err(Error::Duplicate(v));
            }
            vars.push(v);
            self.bump();
        }
        if vars.is_empty() {
            return self.error("expected at least one variable after `exists`");
        }
        self.expect(Tok::Dot)?;
        let mut matrix = vec![self.conj(&language, &vars)?];
        while *self.peek() == Tok::Bar {
            self.bump();
            matrix.push(self.conj(&language, &vars)?);
        }
        self.expect(Tok::RBrace)?;
        let s = BasicSentence { name, language, exist_vars: vars, matrix };
        s.validate()?;
        Ok(s)
    }

    // ---- general formulas -------------------------------------------------

    pub(crate) fn term(&mut self, lang: &Language, scope: &[String]) -> Result<Term> {
        match self.peek().clone() {
            Tok::Nat(k) => {
                self.bump();
                if !lang.has_numerals() {
                    return Err(Error::UnknownSymbol(k.to_string()));
                }
                Ok(Term::Num(k))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.term(lang, scope)?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    let sym = self.symbol(lang, &name, SymbolKind::Function, args.len())?;
                    Ok(Term::App(sym, args))
                } else if scope.contains(&name) {
                    Ok(Term::Var(name))
                } else {
                    Err(Error::UnknownVariable(name))
                }
            }
            other => self.error(format!("expected term, found {}", other.describe())),
        }
    }

    fn atom(&mut self, lang: &Language, scope: &mut Vec<String>) -> Result<Formula> {
        // A relation atom is `R(...)` not followed by a comparison.
        if let (Tok::Ident(name), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            if let Some(i) = lang.index_of(&name) {
                if !lang.symbol(i).is_function() {
                    self.bump();
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.term(lang, scope)?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    let sym = self.symbol(lang, &name, SymbolKind::Relation, args.len())?;
                    return Ok(Formula::Rel(sym, args));
                }
            }
        }
        let left = self.term(lang, scope)?;
        let op = self.bump();
        let right = self.term(lang, scope)?;
        match op {
            Tok::Eq => Ok(Formula::Eq(left, right)),
            Tok::Neq => Ok(Formula::not(Formula::Eq(left, right))),
            Tok::Less => {
                if !lang.has_less() {
                    return Err(Error::UnknownSymbol("<".into()));
                }
                Ok(Formula::Less(left, right))
            }
            other => self.error(format!("expected comparison, found {}", other.describe())),
        }
    }

    fn unary(&mut self, lang: &Language, scope: &mut Vec<String>) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary(lang, scope)?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.disj(lang, scope)?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(w) if (w == "forall" || w == "exists") && matches!(self.peek_at(1), Tok::Ident(_)) => {
                self.bump();
                let mut vs = Vec::new();
                while let Tok::Ident(v) = self.peek().clone() {
                    vs.push(v);
                    self.bump();
                }
                self.expect(Tok::Dot)?;
                let depth = scope.len();
                scope.extend(vs.iter().cloned());
                let mut body = self.disj(lang, scope)?;
                scope.truncate(depth);
                for v in vs.into_iter().rev() {
                    body = if w == "forall" {
                        Formula::Forall(v, Box::new(body))
                    } else {
                        Formula::Exists(v, Box::new(body))
                    };
                }
                Ok(body)
            }
            Tok::Ident(w) if w == "true" && *self.peek_at(1) != Tok::LParen => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(w) if w == "false" && *self.peek_at(1) != Tok::LParen => {
                self.bump();
                Ok(Formula::False)
            }
            _ => self.atom(lang, scope),
        }
    }

    fn conj_formula(&mut self, lang: &Language, scope: &mut Vec<String>) -> Result<Formula> {
        let mut items = vec![self.unary(lang, scope)?];
        while *self.peek() == Tok::Amp {
            self.bump();
            items.push(self.unary(lang, scope)?);
        }
        Ok(Formula::and(items))
    }

    pub(crate) fn disj(&mut self, lang: &Language, scope: &mut Vec<String>) -> Result<Formula> {
        let mut items = vec![self.conj_formula(lang, scope)?];
        while *self.peek() == Tok::Bar {
            self.bump();
            items.push(self.conj_formula(lang, scope)?);
        }
        Ok(Formula::or(items))
    }
}

/// Parses the principle DSL.
pub fn parse_principle(text: &str) -> Result<BasicSentence> {
    let mut p = Parser::new(text)?;
    let s = p.principle()?;
    if !p.at_eof() {
        return p.error("trailing input after principle");
    }
    Ok(s)
}

/// Parses a formula whose free variables must be among `free`.
pub fn parse_formula(lang: &Language, text: &str, free: &[String]) -> Result<Formula> {
    let mut p = Parser::new(text)?;
    let mut scope = free.to_vec();
    let f = p.disj(lang, &mut scope)?;
    if !p.at_eof() {
        return p.error("trailing input after formula");
    }
    Ok(f)
}

pub fn parse_term(lang: &Language, text: &str, vars: &[String]) -> Result<Term> {
    let mut p = Parser::new(text)?;
    let t = p.term(lang, vars)?;
    if !p.at_eof() {
        return p.error("trailing input after term");
    }
    Ok(t)
}
