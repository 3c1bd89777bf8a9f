use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use pulseforge::algebra::Projector;
use pulseforge::avgham::verify;
use pulseforge::groups::{standard_dictionary, GeneratorWord};
use pulseforge::search::{assemble, recover_clean_zeeman, run_search, RecoveryOptions, SearchParams};
use pulseforge::sequences::{load, SequenceFile, NAMES};
use pulseforge::sim::{default_tau, ramsey, spectrum_of, Basis, SimConfig};
use pulseforge::PulseSequence;
use pulseforge::{CouplingDistribution, EnsembleModel};
use pulseforge_milp::{solve_mip, LinearProgram, Pricing, SolverOptions};

use crate::config::*;
use crate::io::{create, emit_json, load_sequence, read_columns, write_columns, Echo};

pub enum Outcome {
    Done,
    /// The computation ran but found nothing (infeasible search or program).
    NoSolution,
}

pub fn execute(mut cfg: RunConfig) -> Result<Outcome> {
    if let Some(t) = cfg.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("cannot set up the thread pool")?;
    }
    match cfg.command.clone() {
        Command::Search(a) => search(&cfg, &a),
        Command::Verify(a) => verify_cmd(&cfg, &a),
        Command::Simulate(a) => simulate(&mut cfg, a),
        Command::Spectrum(a) => spectrum_cmd(&cfg, &a),
        Command::Sequences(SequencesCommand::List) => list(&cfg),
        Command::Sequences(SequencesCommand::Export { name, out }) => export(&name, out.as_deref()),
        Command::Dictionary(a) => dictionary(&cfg, &a),
        Command::Solve(a) => solve(&cfg, &a),
        Command::Recover(a) => recover(&cfg, &a),
        Command::Run { .. } => bail!("nested run commands are not supported"),
    }
}

fn out_file(p: &Option<std::path::PathBuf>) -> Result<Option<std::fs::File>> {
    p.as_deref().map(create).transpose()
}

fn sequence_json(seq: &PulseSequence) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(SequenceFile::from_sequence(seq)?)?)
}

fn search(cfg: &RunConfig, a: &SearchArgs) -> Result<Outcome> {
    let out = out_file(&a.out)?;
    let dump = a.dump_problem.as_deref().map(create).transpose()?;
    let model = EnsembleModel::unit_pair(a.model.dim())?;
    let dict = standard_dictionary(&model)?;
    let c_z = Projector::new(model.d, model.n)?.project(&model.build_zeeman()?)?.coeffs;
    let params = SearchParams {
        target: a.target,
        alpha: a.alpha,
        beta_min: a.beta_min,
        weight_cap: a.weight_cap,
        node_limit: a.node_limit,
        paired_start: !a.no_paired_start,
    };
    let sp = assemble(&dict, &c_z, &params)?;
    if let Some(mut f) = dump {
        use std::io::Write;
        writeln!(f, "{}", sp.lp.to_json()?)?;
    }
    let res = run_search(&sp, &dict, &model)?;
    let found = res.sequence.is_some();
    let frames: Vec<_> = dict
        .entries
        .iter()
        .zip(&res.weights)
        .enumerate()
        .filter(|(_, (_, &w))| w > 0)
        .map(|(k, (e, &w))| json!({ "class": k, "word": e.word.to_string(), "weight": w }))
        .collect();
    let result = json!({
        "status": res.status,
        "objective": found.then_some(res.objective),
        "nodes_explored": res.nodes_explored,
        "classes": dict.len(),
        "total_weight": res.total_weight(),
        "nonzero": res.nonzero(),
        "frames": frames,
        "report": res.report.as_ref().map(|r| r.summary(model.d, model.n)).transpose()?,
        "sequence": res.sequence.as_ref().map(sequence_json).transpose()?,
    });
    emit_json(&Echo { config: cfg, result }, out)?;
    Ok(if found { Outcome::Done } else { Outcome::NoSolution })
}

fn verify_cmd(cfg: &RunConfig, a: &VerifyArgs) -> Result<Outcome> {
    let out = out_file(&a.out)?;
    let seq = load_sequence(&a.sequence)?;
    let mut model = EnsembleModel::new(seq.d, a.spins)?.with_gamma_bz(a.field);
    for i in 0..a.spins {
        for j in i + 1..a.spins {
            model.set_coupling(i, j, a.coupling);
        }
    }
    let r = verify(&seq, &model, a.tau)?;
    let s = r.summary(model.d, model.n)?;
    eprintln!("{}: beta {:.5}, clean {}", s.label, s.beta, s.clean);
    emit_json(&Echo { config: cfg, result: s }, out)?;
    Ok(Outcome::Done)
}

fn simulate(cfg: &mut RunConfig, mut a: SimulateArgs) -> Result<Outcome> {
    let out = create(&a.out)?;
    let seq = if a.sequence == "free" { None } else { Some(load_sequence(&a.sequence)?) };
    let d = match (&seq, a.basis) {
        (Some(s), _) => s.d,
        (None, Some(b)) => b.dim(),
        (None, None) => 2,
    };
    let basis = a.basis.unwrap_or(if d == 2 { Basis::Qubit } else { Basis::Sq });
    let mut model = EnsembleModel::new(d, a.spins)?.with_gamma_bz(a.field);
    if let Some(j) = a.fixed_coupling {
        for i in 0..a.spins {
            for k in i + 1..a.spins {
                model.set_coupling(i, k, j);
            }
        }
    }
    let tau = match a.tau {
        Some(t) => t,
        None => default_tau(seq.as_ref(), &model)?,
    };
    let sc = SimConfig {
        model,
        sequence: seq,
        basis,
        tau,
        cycles: a.cycles,
        samples: a.samples,
        seed: a.seed,
        coupling: if a.fixed_coupling.is_some() { None } else { Some(CouplingDistribution::new(a.gamma)?) },
    };
    a.basis = Some(basis);
    a.tau = Some(tau);
    cfg.command = Command::Simulate(a);
    let trace = ramsey(&sc)?;
    write_columns(out, ["time", "signal"], &trace.times, &trace.signal)?;
    let result = json!({
        "label": trace.label,
        "rows": trace.times.len(),
        "cycle_time": trace.cycle_time,
        "omega0": trace.omega0,
        "samples": trace.samples,
    });
    emit_json(&Echo { config: cfg, result }, None)?;
    Ok(Outcome::Done)
}

fn spectrum_cmd(cfg: &RunConfig, a: &SpectrumArgs) -> Result<Outcome> {
    let out = create(&a.out)?;
    let (t, s) = read_columns(&a.input)?;
    if t.len() < 2 {
        bail!("{}: need at least two rows", a.input.display());
    }
    let dt = t[1] - t[0];
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
        bail!("{}: times are not uniformly spaced", a.input.display());
    }
    let sp = spectrum_of(&s, dt, a.omega0)?;
    write_columns(out, ["freq", "magnitude"], &sp.freqs, &sp.magnitudes)?;
    let p = sp.peak();
    let result = json!({ "bins": sp.freqs.len(), "bin_width": sp.bin_width(), "peak_freq": sp.freqs[p], "peak_magnitude": sp.magnitudes[p] });
    emit_json(&Echo { config: cfg, result }, None)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct ListEntry {
    name: &'static str,
    d: usize,
    frames: usize,
    total_weight: u32,
    expected_beta: f64,
    expected_clean: bool,
    source: &'static str,
    reconstructed: bool,
}

fn list(cfg: &RunConfig) -> Result<Outcome> {
    let entries = NAMES
        .iter()
        .map(|n| {
            let s = load::<f64>(n)?;
            Ok(ListEntry {
                name: s.name,
                d: s.seq.d,
                frames: s.seq.frames.len(),
                total_weight: s.seq.total_weight(),
                expected_beta: s.expected_beta,
                expected_clean: s.expected_clean,
                source: s.source,
                reconstructed: s.reconstructed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit_json(&Echo { config: cfg, result: entries }, None)?;
    Ok(Outcome::Done)
}

/// Writes the bare sequence file so `verify` can read it back.
fn export(name: &str, out: Option<&std::path::Path>) -> Result<Outcome> {
    let file = out.map(create).transpose()?;
    let s = load::<f64>(name)?;
    emit_json(&SequenceFile::from_sequence(&s.seq)?, file)?;
    Ok(Outcome::Done)
}

fn dictionary(cfg: &RunConfig, a: &DictionaryArgs) -> Result<Outcome> {
    let out = out_file(&a.out)?;
    let dict = standard_dictionary(&EnsembleModel::unit_pair(a.model.dim())?)?;
    let entries: Vec<_> = dict
        .entries
        .iter()
        .map(|e| {
            json!({
                "word": e.word.to_string(),
                "class_size": e.class_size,
                "transformed_hz_coeffs": e.zeeman,
                "transformed_hdd_coeffs": e.dipolar,
            })
        })
        .collect();
    let result =
        json!({ "d": dict.d, "n": dict.n, "raw_size": dict.raw_size, "classes": dict.len(), "entries": entries });
    emit_json(&Echo { config: cfg, result }, out)?;
    Ok(Outcome::Done)
}

fn solve(cfg: &RunConfig, a: &SolveArgs) -> Result<Outcome> {
    let out = out_file(&a.out)?;
    let text = std::fs::read_to_string(&a.problem).with_context(|| format!("cannot read {}", a.problem.display()))?;
    let p = LinearProgram::from_json(&text).with_context(|| format!("{}: invalid program", a.problem.display()))?;
    let opts = SolverOptions {
        node_limit: a.node_limit,
        pricing: match a.pricing {
            PricingRule::Dantzig => Pricing::Dantzig,
            PricingRule::Bland => Pricing::Bland,
        },
        ..SolverOptions::default()
    };
    let sol = solve_mip(&p, &opts)?;
    let found = sol.has_point();
    let result = json!({
        "status": sol.status,
        "objective": found.then_some(sol.objective),
        "nodes_explored": sol.nodes_explored,
        "x": sol.x,
    });
    emit_json(&Echo { config: cfg, result }, out)?;
    Ok(if found { Outcome::Done } else { Outcome::NoSolution })
}

fn recover(cfg: &RunConfig, a: &RecoverArgs) -> Result<Outcome> {
    let out = out_file(&a.out)?;
    let seq = load_sequence(&a.sequence)?;
    let preferred = a
        .rotation
        .as_deref()
        .map(|s| s.parse::<GeneratorWord>().with_context(|| format!("bad rotation {s:?}")))
        .transpose()?;
    let r = recover_clean_zeeman(&seq, &RecoveryOptions { pair_states: None, preferred_rotation: preferred })?;
    let result = json!({
        "kept_frames": r.kept_frames,
        "pair_states": r.pair_states,
        "rotation": r.rotation.to_string(),
        "valid_rotations": r.valid_rotations.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "report": r.report.summary(seq.d, 2)?,
        "sequence": sequence_json(&r.sequence)?,
    });
    emit_json(&Echo { config: cfg, result }, out)?;
    Ok(Outcome::Done)
}
