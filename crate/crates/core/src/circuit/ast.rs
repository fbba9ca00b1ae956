use std::fmt;

/// 1-based source position of a token.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Column vector literal `[re,im; re,im; ...]`.
pub type VectorLit = Vec<(f64, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub enum StateBody {
    MaxMix,
    Pure(VectorLit),
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelBody {
    Identity,
    KrausFile(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum EffectBody {
    Total,
    Proj(VectorLit),
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    System { name: String, dim: usize, span: Span },
    State { name: String, systems: Vec<String>, body: StateBody, span: Span },
    Channel { name: String, inputs: Vec<String>, outputs: Vec<String>, body: ChannelBody, span: Span },
    Effect { name: String, systems: Vec<String>, body: EffectBody, span: Span },
    Instrument { name: String, inputs: Vec<String>, outputs: Vec<String>, path: String, span: Span },
    Run { name: String, expr: Expr, span: Span },
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::System { name, .. }
            | Item::State { name, .. }
            | Item::Channel { name, .. }
            | Item::Effect { name, .. }
            | Item::Instrument { name, .. }
            | Item::Run { name, .. } => name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Item::System { span, .. }
            | Item::State { span, .. }
            | Item::Channel { span, .. }
            | Item::Effect { span, .. }
            | Item::Instrument { span, .. }
            | Item::Run { span, .. } => *span,
        }
    }

    fn erase_spans(&mut self) {
        match self {
            Item::System { span, .. }
            | Item::State { span, .. }
            | Item::Channel { span, .. }
            | Item::Effect { span, .. }
            | Item::Instrument { span, .. } => *span = Span::default(),
            Item::Run { span, expr, .. } => {
                *span = Span::default();
                expr.erase_spans();
            }
        }
    }
}

/// Diagram expression. `Seq` applies `left` first.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Ref { name: String, outcome: Option<usize>, span: Span },
    Seq { left: Box<Expr>, right: Box<Expr>, span: Span },
    Par { top: Box<Expr>, bottom: Box<Expr>, span: Span },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Ref { span, .. } | Expr::Seq { span, .. } | Expr::Par { span, .. } => *span,
        }
    }

    fn erase_spans(&mut self) {
        match self {
            Expr::Ref { span, .. } => *span = Span::default(),
            Expr::Seq { left: a, right: b, span } | Expr::Par { top: a, bottom: b, span } => {
                *span = Span::default();
                a.erase_spans();
                b.erase_spans();
            }
        }
    }

    /// Names of all boxes referenced by the expression, in order.
    pub fn references(&self) -> Vec<(&str, Option<usize>)> {
        match self {
            Expr::Ref { name, outcome, .. } => vec![(name.as_str(), *outcome)],
            Expr::Seq { left: a, right: b, .. } | Expr::Par { top: a, bottom: b, .. } => {
                let mut out = a.references();
                out.extend(b.references());
                out
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    /// Copy with every span reset, for structural comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        p.items.iter_mut().for_each(Item::erase_spans);
        p
    }

    pub fn runs(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.items.iter().filter_map(|i| match i {
            Item::Run { name, expr, .. } => Some((name.as_str(), expr)),
            _ => None,
        })
    }

    pub fn find(&self, name: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.name() == name)
    }
}

fn write_vector(f: &mut fmt::Formatter<'_>, v: &VectorLit) -> fmt::Result {
    let entries: Vec<String> = v.iter().map(|(re, im)| format!("{re:?},{im:?}")).collect();
    write!(f, "[{}]", entries.join("; "))
}

fn write_string(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Ref { name, outcome: Some(k), .. } => write!(f, "{name}[{k}]"),
            Expr::Ref { name, outcome: None, .. } => write!(f, "{name}"),
            Expr::Seq { left, right, .. } => {
                write!(f, "{left} ; ")?;
                match **right {
                    Expr::Seq { .. } => write!(f, "({right})"),
                    _ => write!(f, "{right}"),
                }
            }
            Expr::Par { top, bottom, .. } => {
                match **top {
                    Expr::Seq { .. } => write!(f, "({top})")?,
                    _ => write!(f, "{top}")?,
                }
                write!(f, " || ")?;
                match **bottom {
                    Expr::Ref { .. } => write!(f, "{bottom}"),
                    _ => write!(f, "({bottom})"),
                }
            }
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::System { name, dim, .. } => write!(f, "system {name} {dim}"),
            Item::State { name, systems, body, .. } => {
                write!(f, "state {name} : {} = ", systems.join(", "))?;
                match body {
                    StateBody::MaxMix => write!(f, "maxmix"),
                    StateBody::Pure(v) => {
                        write!(f, "pure ")?;
                        write_vector(f, v)
                    }
                    StateBody::File(p) => {
                        write!(f, "file ")?;
                        write_string(f, p)
                    }
                }
            }
            Item::Channel { name, inputs, outputs, body, .. } => {
                write!(f, "channel {name} : {} -> {} = ", inputs.join(", "), outputs.join(", "))?;
                match body {
                    ChannelBody::Identity => write!(f, "id"),
                    ChannelBody::KrausFile(p) => {
                        write!(f, "kraus file ")?;
                        write_string(f, p)
                    }
                }
            }
            Item::Effect { name, systems, body, .. } => {
                write!(f, "effect {name} : {} = ", systems.join(", "))?;
                match body {
                    EffectBody::Total => write!(f, "total"),
                    EffectBody::Proj(v) => {
                        write!(f, "proj ")?;
                        write_vector(f, v)
                    }
                    EffectBody::File(p) => {
                        write!(f, "file ")?;
                        write_string(f, p)
                    }
                }
            }
            Item::Instrument { name, inputs, outputs, path, .. } => {
                write!(f, "instrument {name} : {} -> {} = file ", inputs.join(", "), outputs.join(", "))?;
                write_string(f, path)
            }
            Item::Run { name, expr, .. } => write!(f, "run {name} = {expr}"),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        Ok(())
    }
}
