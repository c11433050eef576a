//! Obfuscation schemes and the benchmark sweep.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{run_attack, AttackConfig, AttackReport, PhaseTimes, Termination, UmcMode};
use crate::deepfault::{
    apply_df, insert_dummy_connections, DepthBound, DfError, DfOptions, HideMode, ProtectedPattern, TracerConfig,
    TracerKind,
};
use crate::explore::{Explorer, KeyMode};
use crate::fsm::{parse_kiss, random_fsm, Fsm, FsmError};
use crate::netlist::{parse_bench, Netlist, NetlistError};
use crate::reach::{reachable_bfs_with, ReachError};
use crate::sim::Oracle;
use crate::ssd::{apply_ssd_fsm, apply_ssd_with, fsm_ssd_result, FsmSsdOptions, SsdError, SsdOptions, SsdResult};
use crate::Bits;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("bad scheme {0:?} (expected none, ssd:K, df:W[:kind], dfssd:K:W[:kind])")]
    Scheme(String),
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("no transition to trigger on")]
    NoTrigger,
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Ssd(#[from] SsdError),
    #[error(transparent)]
    Df(#[from] DfError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Attack(#[from] crate::attack::AttackError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

/// A circuit as read: gate level, or a state table.
#[derive(Clone, Debug)]
pub enum Circuit {
    Netlist(Netlist),
    Fsm(Fsm),
}

impl Circuit {
    /// `.kiss`/`.kiss2` files are state tables, anything else is `.bench`.
    pub fn parse(name: &str, text: &str) -> Result<Circuit, HarnessError> {
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(".kiss") || lower.ends_with(".kiss2") {
            Ok(Circuit::Fsm(parse_kiss(text)?))
        } else {
            Ok(Circuit::Netlist(parse_bench(text)?))
        }
    }

    pub fn load(path: &Path) -> Result<Circuit, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Circuit::parse(&path.to_string_lossy(), &text)
    }

    pub fn netlist(&self) -> Result<Netlist, HarnessError> {
        match self {
            Circuit::Netlist(n) => Ok(n.clone()),
            Circuit::Fsm(f) => Ok(f.to_netlist()?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Scheme {
    None,
    Ssd { k: usize },
    Df { w: usize, tracer: TracerKind },
    Dfssd { k: usize, w: usize, tracer: TracerKind },
}

impl FromStr for Scheme {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Scheme, HarnessError> {
        let bad = || HarnessError::Scheme(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok()).ok_or_else(bad);
        let kind = |i: usize| match parts.get(i).copied() {
            None | Some("clock") => Ok(TracerKind::Clock),
            Some("transition") => Ok(TracerKind::Transition),
            Some("lfsr") => Ok(TracerKind::Lfsr),
            _ => Err(bad()),
        };
        let scheme = match parts[0].to_ascii_lowercase().as_str() {
            "none" if parts.len() == 1 => Scheme::None,
            "ssd" if parts.len() == 2 => Scheme::Ssd { k: num(1)? },
            "df" if (2..=3).contains(&parts.len()) => Scheme::Df {
                w: num(1)?,
                tracer: kind(2)?,
            },
            "dfssd" if (3..=4).contains(&parts.len()) => Scheme::Dfssd {
                k: num(1)?,
                w: num(2)?,
                tracer: kind(3)?,
            },
            _ => return Err(bad()),
        };
        Ok(scheme)
    }
}

fn kind_suffix(t: TracerKind) -> &'static str {
    match t {
        TracerKind::Clock => "",
        TracerKind::Transition => "t",
        TracerKind::Lfsr => "l",
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scheme::None => write!(f, "none"),
            Scheme::Ssd { k } => write!(f, "SSD{k}"),
            Scheme::Df { w, tracer } => write!(f, "DF{w}{}", kind_suffix(tracer)),
            Scheme::Dfssd { k, w, tracer } => write!(f, "SSD{k}+DF{w}{}", kind_suffix(tracer)),
        }
    }
}

/// A locked circuit together with everything needed to check it.
#[derive(Clone, Debug)]
pub struct Locked {
    pub netlist: Netlist,
    pub key: Bits,
    pub original: Netlist,
    pub ssd: Option<SsdResult>,
    pub pattern: Option<ProtectedPattern>,
    pub bound: Option<DepthBound>,
    pub tracer: Option<TracerConfig>,
}

#[derive(Serialize)]
struct LockedSummary<'a> {
    schema: u32,
    key: &'a Bits,
    ssd_pairs: Vec<(Bits, Bits)>,
    ssd_key_width: usize,
    pattern: Option<&'a ProtectedPattern>,
    bound: Option<&'a DepthBound>,
    tracer: Option<&'a TracerConfig>,
}

impl Locked {
    /// Plan and bound as JSON.
    pub fn summary_json(&self) -> String {
        let s = LockedSummary {
            schema: 1,
            key: &self.key,
            ssd_pairs: self
                .ssd
                .as_ref()
                .map(|r| r.plan.pairs.iter().map(|p| (p.original.clone(), p.duplicate.clone())).collect())
                .unwrap_or_default(),
            ssd_key_width: self.ssd.as_ref().map_or(0, |r| r.plan.key_width),
            pattern: self.pattern.as_ref(),
            bound: self.bound.as_ref(),
            tracer: self.tracer.as_ref(),
        };
        serde_json::to_string_pretty(&s).expect("plain data")
    }
}

/// Lexicographically first reachable transition between two different states.
pub fn auto_trigger(n: &Netlist, key: &Bits) -> Result<(Bits, Bits), HarnessError> {
    let w = n.num_ffs();
    let reach = reachable_bfs_with(n, KeyMode::Fixed(key.clone()), None)?;
    let mut ex = Explorer::new(n, KeyMode::Fixed(key.clone())).map_err(ReachError::from)?;
    let mut best: Option<(String, String, Bits, Bits)> = None;
    for s in reach.set.to_vec() {
        for t in ex.successors(s) {
            if t == s {
                continue;
            }
            let (a, b) = (Bits::from_u64(s, w), Bits::from_u64(t, w));
            let cand = (a.to_string(), b.to_string(), a, b);
            if best.as_ref().is_none_or(|x| (&cand.0, &cand.1) < (&x.0, &x.1)) {
                best = Some(cand);
            }
        }
    }
    best.map(|(_, _, a, b)| (a, b)).ok_or(HarnessError::NoTrigger)
}

fn tracer_config(n: &Netlist, key: &Bits, w: usize, kind: TracerKind) -> Result<TracerConfig, HarnessError> {
    Ok(match kind {
        TracerKind::Clock => TracerConfig::clock(w),
        TracerKind::Lfsr => TracerConfig::lfsr(w),
        TracerKind::Transition => {
            let (a, b) = auto_trigger(n, key)?;
            TracerConfig::transition(w, a, b)
        }
    })
}

/// Deep-fault step of an obfuscation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfSpec {
    pub width: usize,
    pub tracer: TracerKind,
    /// Auto-selected when absent.
    pub pattern: Option<Bits>,
    /// Transition tracer trigger; auto-selected when absent.
    pub trigger: Option<(Bits, Bits)>,
    pub hide: Option<HideMode>,
}

impl DfSpec {
    pub fn new(width: usize, tracer: TracerKind) -> Self {
        DfSpec {
            width,
            tracer,
            pattern: None,
            trigger: None,
            hide: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObfuscateOptions {
    /// Duplicated states; 0 skips SSD.
    pub ssd: usize,
    pub ssd_strict: bool,
    pub df: Option<DfSpec>,
    /// Apply DF before SSD.
    pub df_first: bool,
}

impl Scheme {
    pub fn options(&self) -> ObfuscateOptions {
        match *self {
            Scheme::None => ObfuscateOptions::default(),
            Scheme::Ssd { k } => ObfuscateOptions {
                ssd: k,
                ..Default::default()
            },
            Scheme::Df { w, tracer } => ObfuscateOptions {
                df: Some(DfSpec::new(w, tracer)),
                ..Default::default()
            },
            Scheme::Dfssd { k, w, tracer } => ObfuscateOptions {
                ssd: k,
                df: Some(DfSpec::new(w, tracer)),
                ..Default::default()
            },
        }
    }
}

fn ssd_step(c: &Circuit, base: Locked, k: usize, strict: bool) -> Result<Locked, HarnessError> {
    let r = match c {
        Circuit::Fsm(f) if !strict && base.netlist.num_keys() == 0 => {
            let (locked, plan) = apply_ssd_fsm(f, k, &FsmSsdOptions::default())?;
            fsm_ssd_result(f, &locked, &plan)?
        }
        _ => apply_ssd_with(
            &base.netlist,
            k,
            &SsdOptions {
                strict,
                base_key: Some(base.key.clone()),
            },
        )?,
    };
    Ok(Locked {
        netlist: r.netlist.clone(),
        key: r.correct_key(),
        ssd: Some(r),
        ..base
    })
}

fn df_step(base: Locked, spec: &DfSpec) -> Result<Locked, HarnessError> {
    let cfg = match (spec.tracer, &spec.trigger) {
        (TracerKind::Transition, Some((a, b))) => TracerConfig::transition(spec.width, a.clone(), b.clone()),
        (kind, _) => tracer_config(&base.netlist, &base.key, spec.width, kind)?,
    };
    let opts = DfOptions {
        pattern: spec.pattern.clone(),
        base_key: Some(base.key.clone()),
        ..Default::default()
    };
    let r = apply_df(&base.netlist, &cfg, &opts)?;
    let netlist = match spec.hide {
        Some(mode) => insert_dummy_connections(&r.netlist, mode, &r.key)?,
        None => r.netlist,
    };
    Ok(Locked {
        netlist,
        key: r.key,
        pattern: Some(r.pattern),
        bound: Some(r.bound),
        tracer: Some(r.config),
        ..base
    })
}

/// Apply a scheme. SSD comes first in the combined scheme.
pub fn obfuscate(c: &Circuit, scheme: &Scheme) -> Result<Locked, HarnessError> {
    obfuscate_with(c, &scheme.options())
}

pub fn obfuscate_with(c: &Circuit, opts: &ObfuscateOptions) -> Result<Locked, HarnessError> {
    let original = c.netlist()?;
    let mut cur = Locked {
        netlist: original.clone(),
        key: Bits::zeros(original.num_keys()),
        original,
        ssd: None,
        pattern: None,
        bound: None,
        tracer: None,
    };
    if opts.df_first {
        if let Some(df) = &opts.df {
            cur = df_step(cur, df)?;
        }
        if opts.ssd > 0 {
            cur = ssd_step(c, cur, opts.ssd, opts.ssd_strict)?;
        }
    } else {
        if opts.ssd > 0 {
            cur = ssd_step(c, cur, opts.ssd, opts.ssd_strict)?;
        }
        if let Some(df) = &opts.df {
            cur = df_step(cur, df)?;
        }
    }
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomFsmSpec {
    pub states: usize,
    pub width: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub seed: u64,
}

impl RandomFsmSpec {
    pub fn build(&self) -> Fsm {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        random_fsm(&mut rng, self.states, self.width, self.inputs, self.outputs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitSpec {
    Path(String),
    Random { name: String, random_fsm: RandomFsmSpec },
}

impl CircuitSpec {
    pub fn name(&self) -> String {
        match self {
            CircuitSpec::Path(p) => Path::new(p)
                .file_stem()
                .map_or_else(|| p.clone(), |s| s.to_string_lossy().into_owned()),
            CircuitSpec::Random { name, .. } => name.clone(),
        }
    }

    pub fn load(&self, base: &Path) -> Result<Circuit, HarnessError> {
        match self {
            CircuitSpec::Path(p) => Circuit::load(&base.join(p)),
            CircuitSpec::Random { random_fsm, .. } => Ok(Circuit::Fsm(random_fsm.build())),
        }
    }
}

fn one() -> usize {
    1
}

fn eight() -> usize {
    8
}

fn max_b() -> usize {
    1024
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub circuits: Vec<CircuitSpec>,
    #[serde(default)]
    pub schemes: Vec<String>,
    /// Per cell, seconds.
    #[serde(default)]
    pub time_budget_s: Option<f64>,
    #[serde(default = "one")]
    pub initial_boundary: usize,
    #[serde(default = "eight")]
    pub boundary_step: usize,
    #[serde(default = "max_b")]
    pub max_boundary: usize,
    /// Relative circuit paths resolve against this.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Manifest, HarnessError> {
        let mut m: Manifest = serde_json::from_str(text).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        m.base_dir = base_dir.to_path_buf();
        for s in &m.schemes {
            s.parse::<Scheme>()?;
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Manifest, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Manifest::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn attack_config(&self) -> AttackConfig {
        AttackConfig {
            initial_boundary: self.initial_boundary,
            boundary_step: self.boundary_step,
            max_boundary: self.max_boundary,
            time_budget: self.time_budget_s.map(Duration::from_secs_f64),
            umc_mode: UmcMode::Auto,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub circuit: String,
    pub scheme: String,
    pub iterations: usize,
    pub last_dis_len: usize,
    pub time_s: f64,
    /// `UC`, `CE`, `UMC`, `TO`, `INC` or `ERROR`.
    pub termination: String,
    /// The attack outcome admits the key the obfuscator emitted.
    pub key_recovered: bool,
    pub bound: Option<u64>,
    pub final_boundary: usize,
    pub timing: Option<PhaseTimes>,
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<AttackReport>,
}

pub fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::UC => "UC",
        Termination::CE => "CE",
        Termination::UMC => "UMC",
        Termination::Timeout => "TO",
        Termination::Inconclusive => "INC",
    }
}

/// Obfuscate, then attack with the emitted key behind the oracle.
pub fn run_cell(c: &Circuit, scheme: &Scheme, cfg: &AttackConfig) -> Result<(Locked, AttackReport), HarnessError> {
    let locked = obfuscate(c, scheme)?;
    let mut oracle = Oracle::new(locked.netlist.clone(), locked.key.clone())?;
    let report = run_attack(&locked.netlist, &mut oracle, cfg)?;
    Ok((locked, report))
}

fn error_row(circuit: &str, scheme: &str, msg: String) -> BenchRow {
    BenchRow {
        circuit: circuit.to_string(),
        scheme: scheme.to_string(),
        iterations: 0,
        last_dis_len: 0,
        time_s: 0.0,
        termination: "ERROR".into(),
        key_recovered: false,
        bound: None,
        final_boundary: 0,
        timing: None,
        error: Some(msg),
        report: None,
    }
}

fn bench_cell(m: &Manifest, spec: &CircuitSpec, scheme_text: &str) -> BenchRow {
    let name = spec.name();
    let scheme: Scheme = match scheme_text.parse() {
        Ok(s) => s,
        Err(e) => return error_row(&name, scheme_text, e.to_string()),
    };
    let label = scheme.to_string();
    let cfg = m.attack_config();
    let outcome = std::panic::catch_unwind(|| -> Result<(Locked, AttackReport), HarnessError> {
        let c = spec.load(&m.base_dir)?;
        run_cell(&c, &scheme, &cfg)
    });
    match outcome {
        Ok(Ok((locked, r))) => BenchRow {
            circuit: name,
            scheme: label,
            iterations: r.iterations(),
            last_dis_len: r.last_dis_len(),
            time_s: r.timing.total.as_secs_f64(),
            termination: termination_label(r.termination).into(),
            key_recovered: r.accepts(&locked.key),
            bound: locked.bound.and_then(|b| b.bound),
            final_boundary: r.final_boundary,
            timing: Some(r.timing.clone()),
            error: None,
            report: Some(r),
        },
        Ok(Err(e)) => error_row(&name, &label, e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            error_row(&name, &label, format!("panic: {msg}"))
        }
    }
}

/// All circuit x scheme cells, in parallel; rows come back in manifest order.
pub fn run_bench(m: &Manifest) -> Vec<BenchRow> {
    let cells: Vec<(&CircuitSpec, &String)> = m
        .circuits
        .iter()
        .flat_map(|c| m.schemes.iter().map(move |s| (c, s)))
        .collect();
    cells.par_iter().map(|(c, s)| bench_cell(m, c, s)).collect()
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["circuit", "scheme", "iterations", "last_dis_len", "time_s", "termination"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.circuit.clone(),
            r.scheme.clone(),
            r.iterations.to_string(),
            r.last_dis_len.to_string(),
            format!("{:.6}", r.time_s),
            r.termination.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Circuits down, schemes across; cells read `D/S time Term`.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut circuits: Vec<&str> = Vec::new();
    let mut schemes: Vec<&str> = Vec::new();
    for r in rows {
        if !circuits.contains(&r.circuit.as_str()) {
            circuits.push(&r.circuit);
        }
        if !schemes.contains(&r.scheme.as_str()) {
            schemes.push(&r.scheme);
        }
    }
    let cell = |c: &str, s: &str| -> String {
        rows.iter()
            .find(|r| r.circuit == c && r.scheme == s)
            .map_or_else(String::new, |r| match r.termination.as_str() {
                "ERROR" => "ERROR".into(),
                "TO" => "TO".into(),
                t => format!("{}/{} {:.2}s {t}", r.iterations, r.last_dis_len, r.time_s),
            })
    };
    let mut table: Vec<Vec<String>> = vec![std::iter::once("circuit".to_string())
        .chain(schemes.iter().map(|s| s.to_string()))
        .collect()];
    for c in &circuits {
        table.push(
            std::iter::once(c.to_string())
                .chain(schemes.iter().map(|s| cell(c, s)))
                .collect(),
        );
    }
    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|j| table.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row.iter().zip(&widths).map(|(x, &w)| format!("{x:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
