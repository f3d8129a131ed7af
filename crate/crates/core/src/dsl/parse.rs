use std::collections::HashMap;

use super::ast::*;
use crate::error::{Error, Result, Span};
use crate::model::BayesNet;
use crate::prim::Prim;
use crate::sexpr::{read_all, Atom, SExpr};
use crate::value::{List, Value};

/// Racket forms that are deliberately not part of the language.
const UNSUPPORTED_FORMS: &[&str] = &[
    "lambda", "λ", "letrec", "letrec*", "let-values", "let*-values", "define-values", "define-syntax",
    "define-syntax-rule", "while", "do", "case", "match", "for/fold", "for/list", "for/vector", "for/sum",
    "for/and", "for/or", "for*", "for*/list", "call/cc", "call-with-current-continuation", "delay",
    "force", "quasiquote", "unquote", "set-car!", "set-cdr!", "struct", "define-struct", "module",
    "require", "provide", "apply", "case-lambda", "parameterize", "with-handlers", "dynamic-wind",
];

const SPECIAL_FORMS: &[&str] = &[
    "define", "let", "let*", "if", "when", "unless", "cond", "and", "or", "begin", "for", "for/unroll",
    "set!", "static", "lift", "cache", "quote",
];

struct Signature {
    id: usize,
    arity: usize,
}

struct Region {
    start: Slot,
    assigns: Vec<Slot>,
}

struct Resolver<'a> {
    funcs: &'a HashMap<String, Signature>,
    net: Option<&'a BayesNet>,
    scopes: Vec<(String, Slot)>,
    next_slot: usize,
    regions: Vec<Region>,
}

fn arity_err(span: Span, form: &str, expected: &str, got: usize) -> Error {
    Error::Arity {
        span,
        form: form.to_string(),
        expected: expected.to_string(),
        got,
    }
}

fn quote_datum(e: &SExpr) -> Result<Value> {
    Ok(match e {
        SExpr::Atom(a, span) => match a {
            Atom::Bool(b) => Value::Bool(*b),
            Atom::Int(i) => Value::Int(*i),
            Atom::Float(x) => Value::Float(*x),
            Atom::Str(s) => Value::Str(s.as_str().into()),
            Atom::Sym(s) => Value::Sym(s.as_str().into()),
            Atom::Keyword(k) => return Err(Error::syntax(*span, format!("keyword `#:{k}` cannot be quoted"))),
        },
        SExpr::List(items, _) => Value::List(List::new(items.iter().map(quote_datum).collect::<Result<_>>()?)),
    })
}

impl<'a> Resolver<'a> {
    fn new(funcs: &'a HashMap<String, Signature>, net: Option<&'a BayesNet>) -> Self {
        Resolver {
            funcs,
            net,
            scopes: Vec::new(),
            next_slot: 0,
            regions: Vec::new(),
        }
    }

    fn bind(&mut self, name: &str) -> Slot {
        let s = self.next_slot;
        self.next_slot += 1;
        self.scopes.push((name.to_string(), s));
        s
    }

    fn local(&self, name: &str) -> Option<Slot> {
        self.scopes.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    fn region<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<(T, Vec<Slot>)> {
        self.regions.push(Region {
            start: self.next_slot,
            assigns: Vec::new(),
        });
        let r = f(self);
        let region = self.regions.pop().unwrap();
        Ok((r?, region.assigns))
    }

    fn note_assign(&mut self, slot: Slot) {
        for r in &mut self.regions {
            if slot < r.start && !r.assigns.contains(&slot) {
                r.assigns.push(slot);
            }
        }
    }

    fn symbol(&self, name: &str, span: Span) -> Result<Expr> {
        if let Some(s) = self.local(name) {
            return Ok(Expr::Local(s, span));
        }
        if let Some(sig) = self.funcs.get(name) {
            return Ok(Expr::FuncRef(sig.id, span));
        }
        if let Some(inp) = Input::ALL.iter().find(|i| i.name() == name) {
            return Ok(Expr::Input(*inp, span));
        }
        if let Some(id) = self.net.and_then(|n| n.lookup(name)) {
            return Ok(Expr::NodeRef(id, span));
        }
        if let Some(p) = Prim::from_name(name) {
            return Ok(Expr::PrimRef(p, span));
        }
        if SPECIAL_FORMS.contains(&name) || UNSUPPORTED_FORMS.contains(&name) {
            return Err(Error::syntax(span, format!("`{name}` is a special form and cannot be used as a value")));
        }
        Err(Error::Unbound {
            span,
            name: name.to_string(),
        })
    }

    fn body(&mut self, items: &[SExpr], span: Span) -> Result<Expr> {
        match items.len() {
            0 => Err(Error::syntax(span, "empty body")),
            1 => self.expr(&items[0]),
            _ => Ok(Expr::Begin(items.iter().map(|e| self.expr(e)).collect::<Result<_>>()?, span)),
        }
    }

    fn expr(&mut self, e: &SExpr) -> Result<Expr> {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.expr_inner(e))
    }

    fn expr_inner(&mut self, e: &SExpr) -> Result<Expr> {
        let span = e.span();
        let items = match e {
            SExpr::Atom(a, _) => {
                return match a {
                    Atom::Sym(s) => self.symbol(s, span),
                    Atom::Keyword(k) => Err(Error::syntax(span, format!("unexpected keyword `#:{k}`"))),
                    _ => Ok(Expr::Const(quote_datum(e)?, span)),
                }
            }
            SExpr::List(items, _) => items,
        };
        let Some(head) = items.first() else {
            return Err(Error::syntax(span, "empty application `()`"));
        };
        let args = &items[1..];
        if let Some(name) = head.as_sym() {
            if self.local(name).is_none() {
                if let Some(r) = self.special(name, args, span)? {
                    return Ok(r);
                }
            }
        }
        let resolved_args = |r: &mut Self| args.iter().map(|a| r.expr(a)).collect::<Result<Vec<_>>>();
        match self.expr(head)? {
            Expr::FuncRef(id, _) => {
                let name = head.as_sym().unwrap();
                let sig = &self.funcs[name];
                if sig.arity != args.len() {
                    return Err(arity_err(span, name, &format!("{} argument(s)", sig.arity), args.len()));
                }
                Ok(Expr::CallFunc(id, resolved_args(self)?, span))
            }
            Expr::PrimRef(p, _) => {
                let (lo, hi) = p.arity();
                if args.len() < lo || hi.is_some_and(|h| args.len() > h) {
                    let expected = match hi {
                        Some(h) if h == lo => format!("{lo} argument(s)"),
                        Some(h) => format!("{lo} to {h} arguments"),
                        None => format!("at least {lo} argument(s)"),
                    };
                    return Err(arity_err(span, p.name(), &expected, args.len()));
                }
                Ok(Expr::CallPrim(p, resolved_args(self)?, span))
            }
            callee => Ok(Expr::Apply(Box::new(callee), resolved_args(self)?, span)),
        }
    }

    fn special(&mut self, name: &str, args: &[SExpr], span: Span) -> Result<Option<Expr>> {
        let want = |n: usize, form: &str| -> Result<()> {
            if args.len() != n {
                Err(arity_err(span, form, &format!("{n} subform(s)"), args.len()))
            } else {
                Ok(())
            }
        };
        let r = match name {
            "quote" => {
                want(1, name)?;
                Expr::Const(quote_datum(&args[0])?, span)
            }
            "if" => {
                want(3, name)?;
                let c = self.expr(&args[0])?;
                let ((t, f), assigns) = self.region(|r| Ok((r.expr(&args[1])?, r.expr(&args[2])?)))?;
                Expr::If {
                    cond: Box::new(c),
                    then_e: Box::new(t),
                    else_e: Box::new(f),
                    assigns,
                    span,
                }
            }
            "when" | "unless" => {
                if args.len() < 2 {
                    return Err(arity_err(span, name, "a test and a body", args.len()));
                }
                let c = self.expr(&args[0])?;
                let (b, assigns) = self.region(|r| r.body(&args[1..], span))?;
                let void = Expr::Const(Value::Void, span);
                let (t, f) = if name == "when" { (b, void) } else { (void, b) };
                Expr::If {
                    cond: Box::new(c),
                    then_e: Box::new(t),
                    else_e: Box::new(f),
                    assigns,
                    span,
                }
            }
            "cond" => self.cond(args, span)?,
            "and" => self.and_or(args, span, true)?,
            "or" => self.and_or(args, span, false)?,
            "begin" => {
                if args.is_empty() {
                    Expr::Const(Value::Void, span)
                } else {
                    self.body(args, span)?
                }
            }
            "let" | "let*" => {
                if let Some(SExpr::Atom(Atom::Sym(_), s)) = args.first() {
                    return Err(Error::UnknownForm {
                        span: *s,
                        form: "named let".into(),
                    });
                }
                if args.len() < 2 {
                    return Err(arity_err(span, name, "bindings and a body", args.len()));
                }
                let binds_src = args[0]
                    .as_list()
                    .ok_or_else(|| Error::syntax(args[0].span(), format!("`{name}` expects a list of bindings")))?;
                let mark = self.scopes.len();
                let mut binds = Vec::new();
                let mut pending = Vec::new();
                for b in binds_src {
                    let (var, init) = match b.as_list() {
                        Some([SExpr::Atom(Atom::Sym(v), _), init]) => (v.clone(), init),
                        _ => return Err(Error::syntax(b.span(), "binding must have the form [name expr]")),
                    };
                    let value = self.expr(init)?;
                    if name == "let*" {
                        let slot = self.bind(&var);
                        binds.push((slot, value));
                    } else {
                        pending.push((var, value));
                    }
                }
                for (var, value) in pending {
                    let slot = self.bind(&var);
                    binds.push((slot, value));
                }
                let body = self.body(&args[1..], span);
                self.scopes.truncate(mark);
                Expr::Let {
                    binds,
                    body: Box::new(body?),
                    span,
                }
            }
            "for" | "for/unroll" => {
                if args.len() < 2 {
                    return Err(arity_err(span, name, "clauses and a body", args.len()));
                }
                let clauses_src = args[0]
                    .as_list()
                    .ok_or_else(|| Error::syntax(args[0].span(), format!("`{name}` expects a list of clauses")))?;
                if clauses_src.is_empty() {
                    return Err(Error::syntax(args[0].span(), format!("`{name}` needs at least one clause")));
                }
                let mut inits = Vec::new();
                for c in clauses_src {
                    match c.as_list() {
                        Some([SExpr::Atom(Atom::Sym(v), _), it]) => inits.push((v.clone(), self.expr(it)?)),
                        _ => return Err(Error::syntax(c.span(), "clause must have the form [name sequence]")),
                    }
                }
                let mark = self.scopes.len();
                let ((clauses, body), assigns) = self.region(|r| {
                    let clauses: Vec<(Slot, Expr)> = inits.into_iter().map(|(v, it)| (r.bind(&v), it)).collect();
                    let body = r.body(&args[1..], span)?;
                    Ok((clauses, body))
                })?;
                self.scopes.truncate(mark);
                Expr::For {
                    clauses,
                    body: Box::new(body),
                    unroll: name == "for/unroll",
                    assigns,
                    span,
                }
            }
            "set!" => {
                want(2, name)?;
                let var = args[0]
                    .as_sym()
                    .ok_or_else(|| Error::syntax(args[0].span(), "`set!` expects a variable name"))?;
                let slot = match self.local(var) {
                    Some(s) => s,
                    None => {
                        return Err(match self.symbol(var, args[0].span()) {
                            Err(e) => e,
                            Ok(_) => Error::syntax(args[0].span(), format!("cannot assign to `{var}`: only local variables are mutable")),
                        })
                    }
                };
                self.note_assign(slot);
                Expr::Set(slot, Box::new(self.expr(&args[1])?), span)
            }
            "static" => {
                want(1, name)?;
                Expr::Static(Box::new(self.expr(&args[0])?), span)
            }
            "lift" => {
                want(1, name)?;
                Expr::Lift(Box::new(self.expr(&args[0])?), span)
            }
            "cache" => {
                want(1, name)?;
                Expr::Cache(Box::new(self.expr(&args[0])?), span)
            }
            "define" => return Err(Error::syntax(span, "`define` is only allowed at top level")),
            other if UNSUPPORTED_FORMS.contains(&other) => {
                return Err(Error::UnknownForm {
                    span,
                    form: other.to_string(),
                })
            }
            _ => return Ok(None),
        };
        Ok(Some(r))
    }

    fn cond(&mut self, clauses: &[SExpr], span: Span) -> Result<Expr> {
        let Some((first, rest)) = clauses.split_first() else {
            return Ok(Expr::Const(Value::Void, span));
        };
        let parts = first
            .as_list()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| Error::syntax(first.span(), "cond clause must be a non-empty list"))?;
        if parts[0].as_sym() == Some("else") {
            if !rest.is_empty() {
                return Err(Error::syntax(first.span(), "`else` must be the last cond clause"));
            }
            return self.body(&parts[1..], first.span());
        }
        let test = self.expr(&parts[0])?;
        if parts.len() == 1 {
            // A test-only clause yields the test's value when true.
            let mark = self.scopes.len();
            let slot = self.bind(" cond");
            let ((t, f), assigns) = self.region(|r| Ok((Expr::Local(slot, span), r.cond(rest, span)?)))?;
            self.scopes.truncate(mark);
            return Ok(Expr::Let {
                binds: vec![(slot, test)],
                body: Box::new(Expr::If {
                    cond: Box::new(Expr::Local(slot, span)),
                    then_e: Box::new(t),
                    else_e: Box::new(f),
                    assigns,
                    span,
                }),
                span,
            });
        }
        let ((t, f), assigns) = self.region(|r| Ok((r.body(&parts[1..], first.span())?, r.cond(rest, span)?)))?;
        Ok(Expr::If {
            cond: Box::new(test),
            then_e: Box::new(t),
            else_e: Box::new(f),
            assigns,
            span,
        })
    }

    fn and_or(&mut self, args: &[SExpr], span: Span, is_and: bool) -> Result<Expr> {
        match args {
            [] => Ok(Expr::Const(Value::Bool(is_and), span)),
            [one] => self.expr(one),
            [first, rest @ ..] => {
                let test = self.expr(first)?;
                if is_and {
                    let (t, assigns) = self.region(|r| r.and_or(rest, span, true))?;
                    Ok(Expr::If {
                        cond: Box::new(test),
                        then_e: Box::new(t),
                        else_e: Box::new(Expr::Const(Value::Bool(false), span)),
                        assigns,
                        span,
                    })
                } else {
                    let mark = self.scopes.len();
                    let slot = self.bind(" or");
                    let (f, assigns) = self.region(|r| r.and_or(rest, span, false))?;
                    self.scopes.truncate(mark);
                    Ok(Expr::Let {
                        binds: vec![(slot, test)],
                        body: Box::new(Expr::If {
                            cond: Box::new(Expr::Local(slot, span)),
                            then_e: Box::new(Expr::Local(slot, span)),
                            else_e: Box::new(f),
                            assigns,
                            span,
                        }),
                        span,
                    })
                }
            }
        }
    }
}

struct DefineHeader<'s> {
    name: String,
    params: Vec<String>,
    no_inline: Vec<String>,
    body: &'s [SExpr],
    span: Span,
}

fn define_header(items: &[SExpr], span: Span) -> Result<DefineHeader<'_>> {
    let sig = items
        .get(1)
        .and_then(SExpr::as_list)
        .ok_or_else(|| Error::syntax(span, "expected (define (name params ...) body ...)"))?;
    let names: Vec<String> = sig
        .iter()
        .map(|s| {
            s.as_sym()
                .map(str::to_string)
                .ok_or_else(|| Error::syntax(s.span(), format!("expected an identifier, found `{s}`")))
        })
        .collect::<Result<_>>()?;
    let Some((name, params)) = names.split_first() else {
        return Err(Error::syntax(span, "definition needs a name"));
    };
    let mut rest = &items[2..];
    let mut no_inline = Vec::new();
    while let Some(SExpr::Atom(Atom::Keyword(k), kspan)) = rest.first() {
        if k != "no-inline-when-symbolic" {
            return Err(Error::syntax(*kspan, format!("unknown definition attribute `#:{k}`")));
        }
        let list = rest
            .get(1)
            .and_then(SExpr::as_list)
            .ok_or_else(|| Error::syntax(*kspan, "`#:no-inline-when-symbolic` expects a list of parameters"))?;
        for p in list {
            let p_name = p
                .as_sym()
                .ok_or_else(|| Error::syntax(p.span(), "expected a parameter name"))?;
            if !params.iter().any(|x| x == p_name) {
                return Err(Error::syntax(p.span(), format!("`{p_name}` is not a parameter of `{name}`")));
            }
            no_inline.push(p_name.to_string());
        }
        rest = &rest[2..];
    }
    if rest.is_empty() {
        return Err(Error::syntax(span, format!("definition of `{name}` has an empty body")));
    }
    Ok(DefineHeader {
        name: name.clone(),
        params: params.to_vec(),
        no_inline,
        body: rest,
        span,
    })
}

/// Parses and resolves a program. Node names of `net`, when given, are
/// visible as variables bound to node handles.
pub fn parse_program(text: &str, net: Option<&BayesNet>) -> Result<Program> {
    let forms = read_all(text)?;
    let mut headers = Vec::new();
    let mut main_forms = Vec::new();
    for f in &forms {
        match f {
            SExpr::List(items, span) if items.first().and_then(SExpr::as_sym) == Some("define") => {
                if items.get(1).and_then(SExpr::as_sym).is_some() {
                    return Err(Error::syntax(
                        *span,
                        "only procedure definitions `(define (name params ...) body ...)` are supported",
                    ));
                }
                headers.push(define_header(items, *span)?);
            }
            other => main_forms.push(other.clone()),
        }
    }
    let mut sigs = HashMap::new();
    for (id, h) in headers.iter().enumerate() {
        if SPECIAL_FORMS.contains(&h.name.as_str()) {
            return Err(Error::syntax(h.span, format!("cannot redefine special form `{}`", h.name)));
        }
        if sigs
            .insert(
                h.name.clone(),
                Signature {
                    id,
                    arity: h.params.len(),
                },
            )
            .is_some()
        {
            return Err(Error::syntax(h.span, format!("`{}` is defined twice", h.name)));
        }
    }
    let mut funcs = Vec::new();
    for h in &headers {
        let mut r = Resolver::new(&sigs, net);
        for p in &h.params {
            if h.params.iter().filter(|q| *q == p).count() > 1 {
                return Err(Error::syntax(h.span, format!("duplicate parameter `{p}` in `{}`", h.name)));
            }
            r.bind(p);
        }
        let body = r.body(h.body, h.span)?;
        funcs.push(FuncDef {
            name: h.name.clone(),
            params: h.params.clone(),
            no_inline: h
                .no_inline
                .iter()
                .map(|n| h.params.iter().position(|p| p == n).unwrap())
                .collect(),
            frame_size: r.next_slot,
            body,
            span: h.span,
        });
    }
    let mut r = Resolver::new(&sigs, net);
    let span = main_forms.first().map(SExpr::span).unwrap_or_default();
    let main = if main_forms.is_empty() {
        Expr::Const(Value::Void, span)
    } else {
        r.body(&main_forms, span)?
    };
    let main_frame = r.next_slot;
    drop(r);
    Ok(Program {
        funcs,
        func_index: sigs.into_iter().map(|(k, v)| (k, v.id)).collect(),
        main,
        main_frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_node() {
        let p = parse_program("(+ 2 3)", None).unwrap();
        match p.main {
            Expr::CallPrim(Prim::Add, args, _) => {
                assert_eq!(args.len(), 2);
                assert!(matches!(args[0], Expr::Const(Value::Int(2), _)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn index_definition() {
        let src = "(define (index cpt parents)
                     (if (null? parents)
                         cpt
                         (if (value (car parents))
                             (index (first cpt) (cdr parents))
                             (index (second cpt) (cdr parents)))))";
        let p = parse_program(src, None).unwrap();
        let f = p.func("index").unwrap();
        assert_eq!(f.params.len(), 2);
        assert!(matches!(f.body, Expr::If { .. }));
    }

    #[test]
    fn unbalanced() {
        assert!(matches!(parse_program("(static", None), Err(Error::Syntax { .. })));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_program("(lambda (x) x)", None), Err(Error::UnknownForm { .. })));
        assert!(matches!(parse_program("(if 1 2)", None), Err(Error::Arity { .. })));
        assert!(matches!(parse_program("(static 1 2)", None), Err(Error::Arity { .. })));
        assert!(matches!(parse_program("(car 1 2)", None), Err(Error::Arity { .. })));
        assert!(matches!(parse_program("(foo 1)", None), Err(Error::Unbound { .. })));
        assert!(matches!(parse_program("(define (f x) x) (f)", None), Err(Error::Arity { .. })));
        assert!(matches!(parse_program("(let loop ([i 0]) i)", None), Err(Error::UnknownForm { .. })));
    }

    #[test]
    fn no_inline_metadata() {
        let p = parse_program("(define (f x y) #:no-inline-when-symbolic (y) (f x y)) (f 1 2)", None).unwrap();
        assert_eq!(p.func("f").unwrap().no_inline, vec![1]);
        assert!(parse_program("(define (f x) #:no-inline-when-symbolic (z) x)", None).is_err());
    }

    #[test]
    fn assigned_outer_locals_are_recorded() {
        let p = parse_program(
            "(let ([acc 0] [k 1]) (for ([i 10]) (let ([tmp i]) (set! tmp 2) (set! acc (+ acc i)))) acc)",
            None,
        )
        .unwrap();
        let mut found = None;
        p.main.walk(&mut |e| {
            if let Expr::For { assigns, .. } = e {
                found = Some(assigns.clone());
            }
        });
        assert_eq!(found, Some(vec![0]));
    }

    #[test]
    fn annotation_count() {
        let p = parse_program(
            "(define (g) (cache (static 1))) (define (unused) (lift 1)) (for/unroll ([i 3]) (g))",
            None,
        )
        .unwrap();
        let c = p.annotations();
        assert_eq!((c.static_, c.cache, c.unroll, c.lift), (1, 1, 1, 0));
    }
}
