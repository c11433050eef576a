use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use dfssd_core::attack::{run_attack, AttackConfig, Termination, UmcMode};
use dfssd_core::bits::parse_frames;
use dfssd_core::deepfault::{HideMode, TracerKind};
use dfssd_core::equiv::{check_equivalence, EquivResult, DEFAULT_PRODUCT_LIMIT};
use dfssd_core::explore::KeyMode;
use dfssd_core::harness::{
    obfuscate_with, render_table, rows_to_csv, run_bench, termination_label, Circuit, DfSpec, Manifest,
    ObfuscateOptions,
};
use dfssd_core::netlist::{serialize_bench, WriteOptions};
use dfssd_core::reach::{certify_unreachable_with, find_urs_min_hd, reachable_bfs_with, UrsSearch};
use dfssd_core::sim::simulate;
use dfssd_core::{Bits, Netlist};

const BUDGET_ENV: &str = "DFSSD_TIME_BUDGET";

#[derive(Parser)]
#[command(name = "dfssd", version, about = "Sequential logic locking (SSD, deep faults) and the unrolling SAT attack")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tracer {
    Clock,
    Transition,
    Lfsr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hide {
    Covert,
    Nonoccur,
}

#[derive(Clone, Copy, ValueEnum)]
enum Umc {
    Auto,
    Explicit,
    Induction,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a .bench or .kiss file and print its interface.
    Parse {
        file: PathBuf,
        /// Write the circuit back out as .bench.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Simulate from reset.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        key: Option<String>,
        /// One input frame per line.
        #[arg(long, conflicts_with = "random")]
        stim: Option<PathBuf>,
        /// Random frames instead of a stimulus file.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reachable states, minimum-distance unreachable state, certificates.
    Reach {
        file: PathBuf,
        /// Fix the key; key inputs are free otherwise.
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        /// Search the closest unreachable state.
        #[arg(long)]
        urs: bool,
        /// Certify that this state is unreachable.
        #[arg(long)]
        certify: Option<String>,
    },
    /// Lock a circuit; writes OUT.bench, OUT.key and OUT.json.
    Obfuscate {
        file: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        ssd: usize,
        #[arg(long)]
        ssd_strict: bool,
        #[arg(long)]
        df: Option<usize>,
        #[arg(long, value_enum, default_value = "clock")]
        tracer: Tracer,
        /// State bits then tracer bits (MSB first).
        #[arg(long)]
        pattern: Option<String>,
        /// FROM:TO state codes for the transition tracer.
        #[arg(long)]
        trigger: Option<String>,
        #[arg(long, value_enum)]
        hide: Option<Hide>,
        /// Apply DF before SSD.
        #[arg(long)]
        df_first: bool,
    },
    /// Run the sequential SAT attack against a simulated chip.
    Attack {
        locked: PathBuf,
        /// Key loaded into the simulated chip.
        #[arg(long)]
        oracle_key: String,
        #[arg(long, default_value_t = 1)]
        b0: usize,
        #[arg(long, default_value_t = 8)]
        step: usize,
        /// Seconds.
        #[arg(long, env = BUDGET_ENV)]
        budget: Option<f64>,
        /// Conflicts per SAT call.
        #[arg(long)]
        conflicts: Option<u64>,
        #[arg(long, value_enum, default_value = "auto")]
        umc: Umc,
        #[arg(long, default_value_t = 1024)]
        max_boundary: usize,
        /// Report JSON path (stdout when absent).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-iteration CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sequential equivalence of two netlists under given keys.
    Verify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        key_a: Option<String>,
        #[arg(long)]
        key_b: Option<String>,
        #[arg(long, default_value_t = DEFAULT_PRODUCT_LIMIT)]
        limit: usize,
    },
    /// Obfuscate and attack every cell of a manifest.
    Bench {
        manifest: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-cell seconds, overriding the manifest.
        #[arg(long, env = BUDGET_ENV)]
        budget: Option<f64>,
    },
}

struct Fail {
    code: u8,
    msg: String,
}

fn input<E: std::fmt::Display>(e: E) -> Fail {
    Fail {
        code: 2,
        msg: e.to_string(),
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail {
        code: 1,
        msg: msg.into(),
    }
}

type Res = Result<u8, Fail>;

fn load(path: &Path) -> Result<Circuit, Fail> {
    Circuit::load(path).map_err(input)
}

fn load_netlist(path: &Path) -> Result<Netlist, Fail> {
    load(path)?.netlist().map_err(input)
}

fn bits(s: &str) -> Result<Bits, Fail> {
    s.parse::<Bits>().map_err(|e| usage(format!("{s:?}: {e}")))
}

fn key_for(n: &Netlist, key: Option<&str>) -> Result<Bits, Fail> {
    let k = match key {
        Some(s) => bits(s)?,
        None => Bits::zeros(n.num_keys()),
    };
    if k.width() != n.num_keys() {
        return Err(usage(format!("key has {} bits, netlist has {} key inputs", k.width(), n.num_keys())));
    }
    Ok(k)
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data")
}

fn cmd_parse(file: &Path, emit: Option<&Path>) -> Res {
    let c = load(file)?;
    let n = c.netlist().map_err(input)?;
    let kind = match c {
        Circuit::Fsm(ref f) => json!({"kind": "fsm", "states": f.num_states()}),
        Circuit::Netlist(_) => json!({"kind": "netlist"}),
    };
    println!(
        "{}",
        pretty(&json!({
            "name": n.name(),
            "source": kind,
            "inputs": n.num_inputs(),
            "outputs": n.num_outputs(),
            "keys": n.num_keys(),
            "flipflops": n.num_ffs(),
            "gates": n.gates().len(),
            "tracers": n.tracer_ffs().len(),
            "dummy_edges": n.annotations().dummy_edges.len(),
        }))
    );
    if let Some(p) = emit {
        write(p, &serialize_bench(&n, WriteOptions::default()))?;
    }
    Ok(0)
}

fn cmd_simulate(file: &Path, key: Option<&str>, stim: Option<&Path>, random: Option<usize>, seed: u64) -> Res {
    let n = load_netlist(file)?;
    let key = key_for(&n, key)?;
    let seq = match (stim, random) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            parse_frames(&text).map_err(input)?
        }
        (None, Some(len)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..len)
                .map(|_| (0..n.num_inputs()).map(|_| rng.gen::<bool>()).collect())
                .collect()
        }
        (None, None) => return Err(usage("give --stim FILE or --random N")),
    };
    let out = simulate(&n, &key, &seq).map_err(input)?;
    for (t, (x, y)) in seq.iter().zip(&out).enumerate() {
        println!("{t} {x} {y}");
    }
    Ok(0)
}

fn cmd_reach(file: &Path, key: Option<&str>, depth: Option<usize>, urs: bool, certify: Option<&str>) -> Res {
    let n = load_netlist(file)?;
    let mode = match key {
        Some(k) => KeyMode::Fixed(key_for(&n, Some(k))?),
        None => KeyMode::Free,
    };
    let r = reachable_bfs_with(&n, mode.clone(), depth).map_err(input)?;
    let mut report = json!({
        "flipflops": n.num_ffs(),
        "reachable": r.set.len(),
        "complete": r.complete,
        "max_depth": r.max_depth(),
    });
    if r.set.len() <= 64 {
        report["states"] = json!(r.set.to_bits().iter().map(|b| b.to_string()).collect::<Vec<_>>());
    }
    if urs {
        report["urs"] = match find_urs_min_hd(&n, depth).map_err(input)? {
            UrsSearch::Found(w) => json!(w),
            UrsSearch::NoUrs => json!("none"),
            UrsSearch::NotWithinLimit => json!("not within limit"),
        };
    }
    if let Some(s) = certify {
        let s = bits(s)?;
        report["certificate"] = json!(certify_unreachable_with(&n, &s, &mode, 32).map_err(input)?);
    }
    println!("{}", pretty(&report));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_obfuscate(
    file: &Path,
    out: &Path,
    ssd: usize,
    ssd_strict: bool,
    df: Option<usize>,
    tracer: Tracer,
    pattern: Option<&str>,
    trigger: Option<&str>,
    hide: Option<Hide>,
    df_first: bool,
) -> Res {
    let c = load(file)?;
    if ssd == 0 && df.is_none() {
        eprintln!("warning: no transform requested; the output is functionally the input");
    } else if ssd == 0 && ssd_strict {
        eprintln!("warning: --ssd-strict without --ssd has no effect");
    }
    let df = match df {
        Some(w) => {
            let trigger = match trigger {
                Some(t) => {
                    let (a, b) = t.split_once(':').ok_or_else(|| usage("--trigger expects FROM:TO"))?;
                    Some((bits(a)?, bits(b)?))
                }
                None => None,
            };
            Some(DfSpec {
                width: w,
                tracer: match tracer {
                    Tracer::Clock => TracerKind::Clock,
                    Tracer::Transition => TracerKind::Transition,
                    Tracer::Lfsr => TracerKind::Lfsr,
                },
                pattern: pattern.map(bits).transpose()?,
                trigger,
                hide: hide.map(|h| match h {
                    Hide::Covert => HideMode::Covert,
                    Hide::Nonoccur => HideMode::NonOccurring,
                }),
            })
        }
        None if pattern.is_some() || trigger.is_some() || hide.is_some() => {
            return Err(usage("--pattern, --trigger and --hide need --df"))
        }
        None => None,
    };
    let opts = ObfuscateOptions {
        ssd,
        ssd_strict,
        df,
        df_first,
    };
    let locked = obfuscate_with(&c, &opts).map_err(input)?;
    let base = out.to_string_lossy().trim_end_matches(".bench").to_string();
    write(
        Path::new(&format!("{base}.bench")),
        &serialize_bench(&locked.netlist, WriteOptions::default()),
    )?;
    write(Path::new(&format!("{base}.key")), &format!("{}\n", locked.key))?;
    write(Path::new(&format!("{base}.json")), &locked.summary_json())?;
    println!("key {}", locked.key);
    if let Some(b) = &locked.bound {
        match b.bound {
            Some(v) => println!("bound {v}"),
            None => println!("bound unbounded"),
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_attack(
    locked: &Path,
    oracle_key: &str,
    b0: usize,
    step: usize,
    budget: Option<f64>,
    conflicts: Option<u64>,
    umc: Umc,
    max_boundary: usize,
    json_out: Option<&Path>,
    csv_out: Option<&Path>,
) -> Res {
    if b0 == 0 || step == 0 {
        return Err(usage("--b0 and --step must be at least 1"));
    }
    let n = load_netlist(locked)?;
    let key = key_for(&n, Some(oracle_key))?;
    // The attack only sees the oracle through the black-box interface.
    let mut oracle = dfssd_core::sim::Oracle::new(n.clone(), key).map_err(input)?;
    let cfg = AttackConfig {
        initial_boundary: b0,
        boundary_step: step,
        time_budget: budget.map(Duration::from_secs_f64),
        conflict_budget: conflicts,
        umc_mode: match umc {
            Umc::Auto => UmcMode::Auto,
            Umc::Explicit => UmcMode::Explicit,
            Umc::Induction => UmcMode::Induction,
            Umc::Off => UmcMode::Off,
        },
        max_boundary,
        ..Default::default()
    };
    let r = run_attack(&n, &mut oracle, &cfg).map_err(input)?;
    let text = pretty(&r);
    match json_out {
        Some(p) => write(p, &text)?,
        None => println!("{text}"),
    }
    if let Some(p) = csv_out {
        write(p, &r.iteration_csv())?;
    }
    eprintln!(
        "{} after {} DIS (last length {}), boundary {}",
        termination_label(r.termination),
        r.iterations(),
        r.last_dis_len(),
        r.final_boundary
    );
    Ok(match r.termination {
        Termination::Timeout | Termination::Inconclusive => 3,
        _ => 0,
    })
}

fn cmd_verify(a: &Path, b: &Path, key_a: Option<&str>, key_b: Option<&str>, limit: usize) -> Res {
    let na = load_netlist(a)?;
    let nb = load_netlist(b)?;
    let ka = key_for(&na, key_a)?;
    let kb = key_for(&nb, key_b)?;
    match check_equivalence(&na, &ka, &nb, &kb, limit).map_err(input)? {
        EquivResult::Equivalent { product_states } => {
            println!("equivalent ({product_states} product states)");
            Ok(0)
        }
        EquivResult::Different { inputs } => {
            let seq: Vec<String> = inputs.iter().map(|b| b.to_string()).collect();
            println!("different: {}", seq.join(" "));
            Ok(4)
        }
        EquivResult::Unknown { product_states } => {
            println!("unknown ({product_states} product states explored)");
            Ok(3)
        }
    }
}

fn cmd_bench(manifest: &Path, csv: Option<&Path>, json_out: Option<&Path>, budget: Option<f64>) -> Res {
    let mut m = Manifest::load(manifest).map_err(input)?;
    if budget.is_some() {
        m.time_budget_s = budget;
    }
    let rows = run_bench(&m);
    print!("{}", render_table(&rows));
    if let Some(p) = csv {
        write(p, &rows_to_csv(&rows))?;
    }
    if let Some(p) = json_out {
        write(p, &pretty(&json!({"schema": 1, "rows": rows})))?;
    }
    for r in rows.iter().filter_map(|r| r.error.as_ref().map(|e| (r, e))) {
        eprintln!("{} {}: {}", r.0.circuit, r.0.scheme, r.1);
    }
    Ok(0)
}

fn run(cli: Cli) -> Res {
    match cli.cmd {
        Cmd::Parse { file, emit } => cmd_parse(&file, emit.as_deref()),
        Cmd::Simulate {
            file,
            key,
            stim,
            random,
            seed,
        } => cmd_simulate(&file, key.as_deref(), stim.as_deref(), random, seed),
        Cmd::Reach {
            file,
            key,
            depth,
            urs,
            certify,
        } => cmd_reach(&file, key.as_deref(), depth, urs, certify.as_deref()),
        Cmd::Obfuscate {
            file,
            out,
            ssd,
            ssd_strict,
            df,
            tracer,
            pattern,
            trigger,
            hide,
            df_first,
        } => cmd_obfuscate(
            &file,
            &out,
            ssd,
            ssd_strict,
            df,
            tracer,
            pattern.as_deref(),
            trigger.as_deref(),
            hide,
            df_first,
        ),
        Cmd::Attack {
            locked,
            oracle_key,
            b0,
            step,
            budget,
            conflicts,
            umc,
            max_boundary,
            json,
            csv,
        } => cmd_attack(
            &locked,
            &oracle_key,
            b0,
            step,
            budget,
            conflicts,
            umc,
            max_boundary,
            json.as_deref(),
            csv.as_deref(),
        ),
        Cmd::Verify {
            a,
            b,
            key_a,
            key_b,
            limit,
        } => cmd_verify(&a, &b, key_a.as_deref(), key_b.as_deref(), limit),
        Cmd::Bench {
            manifest,
            csv,
            json,
            budget,
        } => cmd_bench(&manifest, csv.as_deref(), json.as_deref(), budget),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
