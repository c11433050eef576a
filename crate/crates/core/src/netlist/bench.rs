//! ISCAS'89 `.bench` reader and writer.
//!
//! Besides the usual `INPUT`/`OUTPUT`/`x = KIND(...)` statements the reader
//! understands `#!` annotation comments written by [`serialize_bench`]:
//!
//! ```text
//! #! init <q-net> <0|1>
//! #! tracer <q-net>
//! #! dummy <from-net> <to-net>
//! ```
//!
//! Other tools see them as plain comments.

use std::fmt::Write as _;

use super::{Driver, GateKind, NetId, Netlist, NetlistBuilder, NetlistError, Sidecar, DEFAULT_KEY_PREFIX};

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub key_prefix: String,
    pub name: String,
    pub sidecar: Option<Sidecar>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            key_prefix: DEFAULT_KEY_PREFIX.to_string(),
            name: "circuit".to_string(),
            sidecar: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WriteOptions {
    /// Emit MUX2 as `MUX(s,d0,d1)` instead of expanding it to NOT/AND/OR.
    pub keep_mux: bool,
}

#[derive(Debug)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

#[derive(Debug)]
enum Stmt<'a> {
    Input(Tok<'a>),
    Output(Tok<'a>),
    Assign {
        lhs: Tok<'a>,
        func: Tok<'a>,
        args: Vec<Tok<'a>>,
    },
    Init(Tok<'a>, bool),
    Tracer(Tok<'a>),
    Dummy(Tok<'a>, Tok<'a>),
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn is_ident_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#')
}

struct Lexer<'a> {
    line: &'a str,
    pos: usize,
    lineno: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.line[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn col(&self) -> usize {
        self.line[..self.pos].chars().count() + 1
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.line.len()
    }

    fn ident(&mut self, what: &str) -> Result<Tok<'a>, NetlistError> {
        self.skip_ws();
        let col = self.col();
        let start = self.pos;
        while let Some(c) = self.line[self.pos..].chars().next() {
            if is_ident_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(syntax(self.lineno, col, format!("expected {what}")));
        }
        Ok(Tok {
            text: &self.line[start..self.pos],
            col,
        })
    }

    fn expect(&mut self, ch: char) -> Result<(), NetlistError> {
        self.skip_ws();
        if self.line[self.pos..].starts_with(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.lineno, self.col(), format!("expected '{ch}'")))
        }
    }

    fn peek(&mut self, ch: char) -> bool {
        self.skip_ws();
        self.line[self.pos..].starts_with(ch)
    }
}

fn parse_line(raw: &str, lineno: usize) -> Result<Option<Stmt<'_>>, NetlistError> {
    let trimmed = raw.trim_start();
    if let Some(rest) = trimmed.strip_prefix("#!") {
        let offset = raw.len() - rest.len();
        let mut lx = Lexer {
            line: raw,
            pos: offset,
            lineno,
        };
        let what = lx.ident("annotation")?;
        let stmt = match what.text {
            "init" => {
                let net = lx.ident("net name")?;
                let bit = lx.ident("bit")?;
                let v = match bit.text {
                    "0" => false,
                    "1" => true,
                    _ => return Err(syntax(lineno, bit.col, "init value must be 0 or 1")),
                };
                Stmt::Init(net, v)
            }
            "tracer" => Stmt::Tracer(lx.ident("net name")?),
            "dummy" => {
                let a = lx.ident("net name")?;
                let b = lx.ident("net name")?;
                Stmt::Dummy(a, b)
            }
            other => {
                return Err(syntax(lineno, what.col, format!("unknown annotation '{other}'")));
            }
        };
        if !lx.at_end() {
            return Err(syntax(lineno, lx.col(), "trailing text"));
        }
        return Ok(Some(stmt));
    }
    let code = raw.split('#').next().unwrap_or("");
    let mut lx = Lexer {
        line: code,
        pos: 0,
        lineno,
    };
    if lx.at_end() {
        return Ok(None);
    }
    let first = lx.ident("statement")?;
    if lx.peek('(') {
        let kw = first.text.to_ascii_uppercase();
        lx.expect('(')?;
        let net = lx.ident("net name")?;
        lx.expect(')')?;
        if !lx.at_end() {
            return Err(syntax(lineno, lx.col(), "trailing text"));
        }
        return match kw.as_str() {
            "INPUT" => Ok(Some(Stmt::Input(net))),
            "OUTPUT" => Ok(Some(Stmt::Output(net))),
            _ => Err(syntax(lineno, first.col, format!("unknown declaration '{}'", first.text))),
        };
    }
    lx.expect('=')?;
    let func = lx.ident("gate type")?;
    lx.expect('(')?;
    let mut args = Vec::new();
    if !lx.peek(')') {
        loop {
            args.push(lx.ident("net name")?);
            if lx.peek(',') {
                lx.expect(',')?;
            } else {
                break;
            }
        }
    }
    lx.expect(')')?;
    if !lx.at_end() {
        return Err(syntax(lineno, lx.col(), "trailing text"));
    }
    Ok(Some(Stmt::Assign {
        lhs: first,
        func,
        args,
    }))
}

pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    parse_bench_with(text, &BenchOptions::default())
}

pub fn parse_bench_with(text: &str, opts: &BenchOptions) -> Result<Netlist, NetlistError> {
    let mut stmts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(s) = parse_line(raw, i + 1)? {
            stmts.push((i + 1, s));
        }
    }
    let key_prefix = opts
        .sidecar
        .as_ref()
        .and_then(|s| s.key_prefix.clone())
        .unwrap_or_else(|| opts.key_prefix.clone());

    let mut b = NetlistBuilder::new(opts.name.clone());
    // Pass 1: number nets in definition order.
    for (_, s) in &stmts {
        match s {
            Stmt::Input(t) => {
                b.net(t.text);
            }
            Stmt::Assign { lhs, .. } => {
                b.net(lhs.text);
            }
            _ => {}
        }
    }
    let resolve = |b: &NetlistBuilder, t: &Tok, line: usize| {
        b.lookup(t.text).ok_or_else(|| NetlistError::Undefined {
            net: t.text.to_string(),
            line,
            col: t.col,
        })
    };
    // Pass 2: definitions and references.
    let mut inits = Vec::new();
    for (line, s) in &stmts {
        let line = *line;
        match s {
            Stmt::Input(t) => {
                let id = resolve(&b, t, line)?;
                b.input_at(id, t.text.starts_with(&key_prefix), line);
            }
            Stmt::Output(t) => {
                let id = resolve(&b, t, line)?;
                b.output(id);
            }
            Stmt::Assign { lhs, func, args } => {
                let out = resolve(&b, lhs, line)?;
                let ins = args
                    .iter()
                    .map(|a| resolve(&b, a, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if func.text.eq_ignore_ascii_case("DFF") {
                    if ins.len() != 1 {
                        return Err(syntax(line, func.col, "DFF takes exactly one input"));
                    }
                    b.dff_at(out, ins[0], line);
                } else {
                    let kind = GateKind::from_bench_name(func.text).ok_or_else(|| {
                        syntax(line, func.col, format!("unknown gate type '{}'", func.text))
                    })?;
                    b.gate_at(kind, out, &ins, line);
                }
            }
            Stmt::Init(t, v) => inits.push((resolve(&b, t, line)?, *v, line, t.col)),
            Stmt::Tracer(t) => {
                let id = resolve(&b, t, line)?;
                b.annotations_mut().tracers.push(id);
            }
            Stmt::Dummy(x, y) => {
                let from = resolve(&b, x, line)?;
                let to = resolve(&b, y, line)?;
                b.annotations_mut().dummy_edges.push((from, to));
            }
        }
    }
    for (q, v, line, col) in inits {
        if !b.set_init(q, v) {
            return Err(syntax(line, col, format!("'{}' is not a flip-flop output", b.name_of(q))));
        }
    }
    if let Some(sc) = &opts.sidecar {
        for (name, &v) in &sc.ff_init {
            let q = b
                .lookup(name)
                .ok_or_else(|| NetlistError::Sidecar(format!("unknown net '{name}'")))?;
            if !b.set_init(q, v != 0) {
                return Err(NetlistError::Sidecar(format!("'{name}' is not a flip-flop output")));
            }
        }
    }
    b.build()
}

pub fn serialize_bench(n: &Netlist, opts: WriteOptions) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", n.name());
    let _ = writeln!(
        s,
        "# {} inputs, {} key inputs, {} outputs, {} flip-flops, {} gates",
        n.num_inputs(),
        n.num_keys(),
        n.num_outputs(),
        n.num_ffs(),
        n.gates().len()
    );
    let mut outputs_written = false;
    let mut taken: std::collections::HashSet<String> = n.net_names().iter().cloned().collect();
    let mut fresh = |base: String| {
        let mut cand = base.clone();
        let mut i = 0;
        while taken.contains(&cand) {
            cand = format!("{base}_{i}");
            i += 1;
        }
        taken.insert(cand.clone());
        cand
    };
    for id in 0..n.num_nets() {
        let id = NetId(id as u32);
        let name = n.net_name(id);
        let drv = n.driver(id);
        if !matches!(drv, Driver::Input(_) | Driver::Key(_)) && !outputs_written {
            for &o in n.outputs() {
                let _ = writeln!(s, "OUTPUT({})", n.net_name(o));
            }
            outputs_written = true;
        }
        match drv {
            Driver::Input(_) | Driver::Key(_) => {
                let _ = writeln!(s, "INPUT({name})");
            }
            Driver::FlipFlop(i) => {
                let f = n.flipflops()[i];
                let _ = writeln!(s, "{name} = DFF({})", n.net_name(f.d));
            }
            Driver::Gate(g) => {
                let gate = &n.gates()[g];
                let args: Vec<&str> = gate.inputs.iter().map(|&x| n.net_name(x)).collect();
                if gate.kind == GateKind::Mux2 && !opts.keep_mux {
                    let ns = fresh(format!("{name}_mux_ns"));
                    let a = fresh(format!("{name}_mux_a"));
                    let bb = fresh(format!("{name}_mux_b"));
                    let _ = writeln!(s, "{ns} = NOT({})", args[0]);
                    let _ = writeln!(s, "{a} = AND({ns}, {})", args[1]);
                    let _ = writeln!(s, "{bb} = AND({}, {})", args[0], args[2]);
                    let _ = writeln!(s, "{name} = OR({a}, {bb})");
                } else {
                    let _ = writeln!(s, "{name} = {}({})", gate.kind.bench_name(), args.join(", "));
                }
            }
        }
    }
    if !outputs_written {
        for &o in n.outputs() {
            let _ = writeln!(s, "OUTPUT({})", n.net_name(o));
        }
    }
    let ann = n.annotations();
    let has_init = n.flipflops().iter().any(|f| f.init);
    if has_init || !ann.tracers.is_empty() || !ann.dummy_edges.is_empty() {
        s.push('\n');
    }
    for f in n.flipflops().iter().filter(|f| f.init) {
        let _ = writeln!(s, "#! init {} 1", n.net_name(f.q));
    }
    for &t in &ann.tracers {
        let _ = writeln!(s, "#! tracer {}", n.net_name(t));
    }
    for &(a, b) in &ann.dummy_edges {
        let _ = writeln!(s, "#! dummy {} {}", n.net_name(a), n.net_name(b));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_not() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        assert_eq!(n.num_inputs(), 1);
        assert_eq!(n.num_outputs(), 1);
        assert_eq!(n.gates().len(), 1);
        let again = parse_bench(&serialize_bench(&n, WriteOptions::default())).unwrap();
        assert_eq!(n, again);
    }

    #[test]
    fn arity_error_reports_line() {
        let err = parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a)\n").unwrap_err();
        assert!(matches!(err, NetlistError::Arity { line: 3, .. }), "{err}");
    }

    #[test]
    fn undefined_net_has_column() {
        let err = parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, zz)\n").unwrap_err();
        assert_eq!(
            err,
            NetlistError::Undefined {
                net: "zz".into(),
                line: 3,
                col: 12
            }
        );
    }

    #[test]
    fn multi_driver() {
        let err = parse_bench("INPUT(a)\ny = NOT(a)\ny = BUF(a)\n").unwrap_err();
        assert!(matches!(err, NetlistError::MultiDriver { line: 3, .. }));
    }

    #[test]
    fn syntax_error_column() {
        let err = parse_bench("INPUT(a\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 1, col: 8, .. }), "{err}");
    }

    #[test]
    fn key_prefix_detection() {
        let n = parse_bench("INPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\ny = XOR(a, keyinput0, keyinput1)\n")
            .unwrap();
        assert_eq!(n.num_keys(), 2);
        assert_eq!(n.num_inputs(), 1);
    }

    #[test]
    fn mux_expansion_and_keep() {
        let src = "INPUT(s)\nINPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = MUX(s, a, b)\n";
        let n = parse_bench(src).unwrap();
        let kept = serialize_bench(&n, WriteOptions { keep_mux: true });
        assert_eq!(parse_bench(&kept).unwrap(), n);
        let expanded = serialize_bench(&n, WriteOptions::default());
        assert!(!expanded.contains("MUX("));
        let m = parse_bench(&expanded).unwrap();
        assert_eq!(m.gates().len(), 4);
    }

    #[test]
    fn annotations_round_trip() {
        let src = "INPUT(x)\nOUTPUT(q)\nq = DFF(d)\nt = DFF(q)\nd = XOR(x, t)\n#! init t 1\n#! tracer t\n#! dummy t d\n";
        let n = parse_bench(src).unwrap();
        assert!(n.flipflops()[1].init);
        assert_eq!(n.annotations().tracers.len(), 1);
        let again = parse_bench(&serialize_bench(&n, WriteOptions::default())).unwrap();
        assert_eq!(n, again);
    }
}
