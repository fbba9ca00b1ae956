use std::collections::HashSet;

use super::ast::{ChannelBody, EffectBody, Expr, Item, Program, Span, StateBody, VectorLit};
use super::error::DslError;
use super::lexer::{tokenize, Tok, Token};

const DECLARATIONS: [&str; 6] = ["system", "state", "channel", "effect", "instrument", "run"];
const RESERVED: [&str; 13] =
    ["system", "state", "channel", "effect", "instrument", "run", "maxmix", "pure", "file", "id", "kraus", "total", "proj"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        let t = self.peek();
        DslError::Syntax { span: t.span, message: format!("expected {wanted}, found {}", t.tok.describe()) }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, DslError> {
        if self.peek().tok == tok {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.next().span))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn keyword(&mut self, options: &[&str]) -> Result<(String, Span), DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if options.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.next().span))
            }
            Tok::Ident(s) => Err(DslError::UnknownKeyword { span: self.peek().span, word: s.clone() }),
            _ => Err(self.unexpected(&format!("one of {}", options.join(", ")))),
        }
    }

    fn number(&mut self) -> Result<(f64, String, Span), DslError> {
        match &self.peek().tok {
            Tok::Number(s) => {
                let s = s.clone();
                let span = self.next().span;
                Ok((s.parse().expect("lexer validated"), s, span))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, DslError> {
        let (_, text, span) = self.number()?;
        text.parse::<usize>().map_err(|_| DslError::Syntax { span, message: format!("{what} must be a nonnegative integer") })
    }

    fn string(&mut self) -> Result<String, DslError> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected("a quoted path")),
        }
    }

    fn system_list(&mut self) -> Result<Vec<String>, DslError> {
        let mut out = vec![self.ident()?.0];
        while self.peek().tok == Tok::Comma {
            self.next();
            out.push(self.ident()?.0);
        }
        Ok(out)
    }

    fn vector(&mut self) -> Result<VectorLit, DslError> {
        self.expect(Tok::LBrack)?;
        let mut out = Vec::new();
        loop {
            let (re, _, _) = self.number()?;
            self.expect(Tok::Comma)?;
            let (im, _, _) = self.number()?;
            out.push((re, im));
            match self.peek().tok {
                Tok::Semi => {
                    self.next();
                }
                Tok::RBrack => {
                    self.next();
                    return Ok(out);
                }
                _ => return Err(self.unexpected("`;` or `]`")),
            }
        }
    }

    fn file_path(&mut self) -> Result<String, DslError> {
        self.keyword(&["file"])?;
        self.string()
    }

    fn item(&mut self) -> Result<Item, DslError> {
        let (kw, span) = self.keyword(&DECLARATIONS)?;
        let item = match kw.as_str() {
            "system" => {
                let (name, _) = self.ident()?;
                let dim = self.count("a system dimension")?;
                if dim == 0 {
                    return Err(DslError::Syntax { span, message: "system dimension must be positive".into() });
                }
                Item::System { name, dim, span }
            }
            "state" => {
                let (name, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let systems = self.system_list()?;
                self.expect(Tok::Eq)?;
                let (body, _) = self.keyword(&["maxmix", "pure", "file"])?;
                let body = match body.as_str() {
                    "maxmix" => StateBody::MaxMix,
                    "pure" => StateBody::Pure(self.vector()?),
                    _ => StateBody::File(self.string()?),
                };
                Item::State { name, systems, body, span }
            }
            "channel" => {
                let (name, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let inputs = self.system_list()?;
                self.expect(Tok::Arrow)?;
                let outputs = self.system_list()?;
                self.expect(Tok::Eq)?;
                let (body, _) = self.keyword(&["id", "kraus"])?;
                let body = match body.as_str() {
                    "id" => ChannelBody::Identity,
                    _ => ChannelBody::KrausFile(self.file_path()?),
                };
                Item::Channel { name, inputs, outputs, body, span }
            }
            "effect" => {
                let (name, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let systems = self.system_list()?;
                self.expect(Tok::Eq)?;
                let (body, _) = self.keyword(&["total", "proj", "file"])?;
                let body = match body.as_str() {
                    "total" => EffectBody::Total,
                    "proj" => EffectBody::Proj(self.vector()?),
                    _ => EffectBody::File(self.string()?),
                };
                Item::Effect { name, systems, body, span }
            }
            "instrument" => {
                let (name, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let inputs = self.system_list()?;
                self.expect(Tok::Arrow)?;
                let outputs = self.system_list()?;
                self.expect(Tok::Eq)?;
                let path = self.file_path()?;
                Item::Instrument { name, inputs, outputs, path, span }
            }
            _ => {
                let (name, _) = self.ident()?;
                self.expect(Tok::Eq)?;
                let expr = self.expr()?;
                Item::Run { name, expr, span }
            }
        };
        Ok(item)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut left = self.par()?;
        while self.peek().tok == Tok::Semi {
            let span = self.next().span;
            let right = self.par()?;
            left = Expr::Seq { left: Box::new(left), right: Box::new(right), span };
        }
        Ok(left)
    }

    fn par(&mut self) -> Result<Expr, DslError> {
        let mut top = self.primary()?;
        while self.peek().tok == Tok::Bar2 {
            let span = self.next().span;
            let bottom = self.primary()?;
            top = Expr::Par { top: Box::new(top), bottom: Box::new(bottom), span };
        }
        Ok(top)
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        if self.peek().tok == Tok::LParen {
            self.next();
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let (name, span) = self.ident()?;
        let outcome = if self.peek().tok == Tok::LBrack {
            self.next();
            let k = self.count("an outcome index")?;
            self.expect(Tok::RBrack)?;
            Some(k)
        } else {
            None
        };
        Ok(Expr::Ref { name, outcome, span })
    }
}

/// Parses a `.qc` program. Identifiers share one namespace.
pub fn parse(source: &str) -> Result<Program, DslError> {
    let mut p = Parser { toks: tokenize(source)?, pos: 0 };
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    while p.peek().tok != Tok::Eof {
        let name_span = p.toks.get(p.pos + 1).map(|t| t.span).unwrap_or_default();
        let item = p.item()?;
        if !seen.insert(item.name().to_string()) {
            return Err(DslError::DuplicateIdentifier { span: name_span, name: item.name().to_string() });
        }
        items.push(item);
    }
    Ok(Program { items })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(name: &str) -> Expr {
        Expr::Ref { name: name.into(), outcome: None, span: Span::default() }
    }

    #[test]
    fn minimal_program() {
        let p = parse("system A 2\nstate r : A = maxmix\nrun p = r").unwrap();
        assert_eq!(p.items.len(), 3);
        assert!(matches!(p.items[0], Item::System { dim: 2, .. }));
        assert_eq!(p.runs().count(), 1);
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse("run x = a ; b || c ; d").unwrap().without_spans();
        let Item::Run { expr, .. } = &p.items[0] else { panic!() };
        let bc = Expr::Par { top: Box::new(r("b")), bottom: Box::new(r("c")), span: Span::default() };
        let ab = Expr::Seq { left: Box::new(r("a")), right: Box::new(bc), span: Span::default() };
        let expected = Expr::Seq { left: Box::new(ab), right: Box::new(r("d")), span: Span::default() };
        assert_eq!(expr, &expected);
    }

    #[test]
    fn outcomes_and_vectors() {
        let p = parse("effect e : A = proj [1,0; 0,-1]\nrun q = M[1] ; e").unwrap();
        let Item::Effect { body: EffectBody::Proj(v), .. } = &p.items[0] else { panic!() };
        assert_eq!(v, &vec![(1.0, 0.0), (0.0, -1.0)]);
        assert_eq!(p.find("q").unwrap().span(), Span::new(2, 1));
    }

    #[test]
    fn missing_equals_reports_position() {
        let err = parse("system A 2\nstate r : A maxmix").unwrap_err();
        assert_eq!(err.category(), "syntax");
        assert_eq!(err.span(), Some(Span::new(2, 13)));
    }

    #[test]
    fn duplicate_and_unknown_keyword() {
        let err = parse("system A 2\nsystem A 3").unwrap_err();
        assert_eq!(err, DslError::DuplicateIdentifier { span: Span::new(2, 8), name: "A".into() });
        let err = parse("sytem A 2").unwrap_err();
        assert_eq!(err.category(), "unknown-keyword");
        let err = parse("system A 2\nstate r : A = mixed").unwrap_err();
        assert_eq!(err.category(), "unknown-keyword");
    }

    #[test]
    fn pretty_print_round_trip() {
        let src = "system A 2\nsystem B 3\nstate r : A, B = pure [0.5,0; 0,-0.25]\n\
                   channel T : A -> A = kraus file \"dir/t \\\"q\\\".json\"\neffect e : A = total\n\
                   instrument M : A -> A = file \"m.json\"\nrun x = (a ; b) || (c || d) ; (e ; f)\nrun y = M[1] ; e";
        let p = parse(src).unwrap();
        let printed = p.to_string();
        assert_eq!(parse(&printed).unwrap().without_spans(), p.without_spans());
    }
}
