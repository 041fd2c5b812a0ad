use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ergdvo::decoherence::{best_of_shots, fit_linewidth_temperature, fit_mims_with, DecaySeries, LinewidthSeries, MimsOptions};
use ergdvo::fitter::{optimize, synth_data, FitReport, TransitionSet};
use ergdvo::ion::Sublattice;
use ergdvo::spectrum::{field_sweep, find_avoided_crossing, one_magnon_pair, BranchKey, CrossingOutcome, Simulator, SweepConfig};
use ergdvo::SCHEMA_VERSION;
use serde::Serialize;

use crate::{
    setup, CrossingArgs, EchoArgs, Failure, FitArgs, LinewidthArgs, Outcome, SpectrumArgs, SweepFlags, Switch, SynthArgs,
    EXIT_CONFIG, EXIT_CONVERGENCE,
};

fn apply_flags(sweep: &mut SweepConfig, flags: &SweepFlags) -> Result<(), Failure> {
    if let Some(b) = flags.bmin {
        sweep.b_min = b;
    }
    if let Some(b) = flags.bmax {
        sweep.b_max = b;
    }
    if let Some(n) = flags.steps {
        sweep.steps = n;
    }
    if let Some(m) = flags.magnons {
        sweep.with_magnons = m == Switch::On;
    }
    if let Some(s) = flags.sublattice {
        sweep.sublattices = s.sublattices();
    }
    if let Some(p) = flags.polarization {
        sweep.polarization = p;
    }
    sweep
        .validate()
        .map_err(|e| Failure { code: EXIT_CONFIG, error: anyhow::Error::new(e).context("sweep options") })
}

fn data_path(flag: &Option<PathBuf>, configured: &Option<String>, base: &Path, what: &str) -> Result<PathBuf, Failure> {
    match (flag, configured) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(p)) => Ok(base.join(p)),
        (None, None) => Err(Failure {
            code: EXIT_CONFIG,
            error: anyhow::anyhow!("no {what} data given (use --data or the config file)"),
        }),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, command: &str, body: T) -> Result<(), Failure> {
    let mut w = create(path)?;
    let doc = Envelope { schema_version: SCHEMA_VERSION, command, body };
    serde_json::to_writer_pretty(&mut w, &doc).context("writing JSON")?;
    writeln!(w).context("writing JSON")?;
    w.flush().context("writing JSON")?;
    Ok(())
}

pub fn spectrum(args: SpectrumArgs) -> Outcome {
    let (mut cfg, _) = setup(&args.common)?;
    apply_flags(&mut cfg.sweep, &args.sweep)?;
    let sim = Simulator::new(&cfg.params, cfg.model)?;
    let out = field_sweep(&sim, &cfg.sweep)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let map_path = args.common.out.join("spectrum.csv");
    out.map.export_csv(create(&map_path)?)?;
    let plot_path = args.common.out.join("spectrum_plot.csv");
    out.map.write_plot_data(create(&plot_path)?, cfg.sweep.polarization)?;
    println!(
        "{} branches over {} fields, reference {} GHz",
        out.map.branches.len(),
        out.map.fields.len(),
        out.reference_ghz
    );
    println!("wrote {} and {}", map_path.display(), plot_path.display());
    Ok(())
}

#[derive(Serialize)]
struct FitOutput<'a> {
    stages: &'a [FitReport],
    params: &'a ergdvo::ion::ModelParams,
}

pub fn fit(args: FitArgs) -> Outcome {
    let (cfg, base) = setup(&args.common)?;
    let path = data_path(&args.data, &cfg.fit.data, &base, "transition")?;
    let set = TransitionSet::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut stages = vec![cfg.fit.stage1.clone()];
    if cfg.fit.two_stage && !args.single_stage {
        stages.push(cfg.fit.stage2.clone());
    }
    let mut params = cfg.params.clone();
    let mut reports = Vec::new();
    for mut settings in stages {
        if settings.reference_ghz.is_none() {
            settings.reference_ghz = set.reference_ghz;
        }
        let report = optimize(&params, cfg.model, &set.data, &settings)?;
        print!("{}", report.summary());
        params = report.params.clone();
        reports.push(report);
    }
    let report_path = args.common.out.join("fit_report.json");
    write_json(&report_path, "fit", FitOutput { stages: &reports, params: &params })?;
    println!("wrote {}", report_path.display());
    if reports.last().is_some_and(|r| !r.converged) {
        return Err(Failure { code: EXIT_CONVERGENCE, error: anyhow::anyhow!("fit did not converge") });
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> Outcome {
    let (mut cfg, _) = setup(&args.common)?;
    apply_flags(&mut cfg.sweep, &args.sweep)?;
    let set = synth_data(&cfg.params, cfg.model, &cfg.sweep, args.noise, args.common.seed)?;
    let path = args.common.out.join("transitions.csv");
    set.write_csv(create(&path)?)?;
    let excluded = set.data.iter().filter(|d| d.exclude).count();
    println!("{} transitions ({excluded} flagged exclude), wrote {}", set.data.len(), path.display());
    Ok(())
}

pub fn echo_fit(args: EchoArgs) -> Outcome {
    let (cfg, base) = setup(&args.common)?;
    let path = data_path(&args.data, &cfg.echo.data, &base, "echo")?;
    let series = DecaySeries::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let best = best_of_shots(&series)?;
    let options = MimsOptions { fixed_stretch: args.fixed_stretch.or(cfg.echo.fixed_stretch) };
    let fit = fit_mims_with(&best, options)?;
    println!("T_M   = {:.2} ± {:.2} us", fit.t_m_us, fit.t_m_sigma());
    println!("x     = {:.3} ± {:.3}", fit.stretch, fit.stretch_sigma());
    println!("A0    = {:.4} ± {:.4}", fit.amplitude0, fit.amplitude_sigma());
    println!("Gamma_h = {:.4} kHz", fit.homogeneous_linewidth_khz());
    let out = args.common.out.join("echo_fit.json");
    #[derive(Serialize)]
    struct Body<'a> {
        fit: &'a ergdvo::decoherence::MimsFit,
        #[serde(rename = "gamma_h_kHz")]
        gamma_h_khz: f64,
    }
    write_json(&out, "echo-fit", Body { fit: &fit, gamma_h_khz: fit.homogeneous_linewidth_khz() })?;
    Ok(())
}

pub fn linewidth_fit(args: LinewidthArgs) -> Outcome {
    let (cfg, base) = setup(&args.common)?;
    let path = data_path(&args.data, &cfg.linewidth.data, &base, "linewidth")?;
    let series = LinewidthSeries::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let weighting = args.weighting.map(Into::into).unwrap_or(cfg.linewidth.weighting);
    let fit = fit_linewidth_temperature(&series, weighting)?;
    let p = fit.params;
    let [s0, sd, sdelta] = fit.sigmas();
    println!("Gamma_0       {:>10.3} ± {:.3} kHz", p.gamma0_khz, s0);
    println!("Gamma_Delta   {:>10.2} ± {:.2} MHz", p.gamma_delta_mhz, sd);
    println!("Delta         {:>10.2} ± {:.2} GHz", p.delta_ghz, sdelta);
    println!("Gamma_Delta/Gamma_0 {:>6.0} ± {:.0}", p.activation_ratio(), fit.activation_ratio_sigma());
    let out = args.common.out.join("linewidth_fit.json");
    write_json(&out, "linewidth-fit", &fit)?;
    Ok(())
}

pub fn crossing(args: CrossingArgs) -> Outcome {
    let (mut cfg, _) = setup(&args.common)?;
    cfg.sweep.with_magnons = true;
    cfg.sweep.sublattices = vec![Sublattice::One];
    apply_flags(&mut cfg.sweep, &args.sweep)?;
    let sim = Simulator::new(&cfg.params, cfg.model)?;
    let (a, b) = match args.branches {
        Some(v) if v.len() == 2 => (v[0].clone(), v[1].clone()),
        Some(v) => {
            return Err(Failure {
                code: EXIT_CONFIG,
                error: anyhow::anyhow!("--branches takes exactly two labels, got {}", v.len()),
            })
        }
        None => one_magnon_pair(&sim),
    };
    let out = field_sweep(&sim, &cfg.sweep)?;
    #[derive(Serialize)]
    struct Body {
        sublattice: Sublattice,
        branches: [String; 2],
        found: bool,
        #[serde(rename = "b_star_T")]
        b_star: f64,
        #[serde(rename = "gap_GHz")]
        gap: f64,
    }
    let mut bodies = Vec::new();
    for s in cfg.sweep.sublattices.clone() {
        let outcome = find_avoided_crossing(&out.map, &BranchKey::new(s, a.clone()), &BranchKey::new(s, b.clone()))?;
        let body = match outcome {
            CrossingOutcome::Crossing(c) => {
                println!("sublattice {}: {a} / {b} crossing at B* = {:.4} T, gap = {:.3} GHz", s.label(), c.b_star, c.gap_ghz);
                Body { sublattice: s, branches: [a.clone(), b.clone()], found: true, b_star: c.b_star, gap: c.gap_ghz }
            }
            CrossingOutcome::NoCrossing { min_separation, at_field } => {
                println!(
                    "sublattice {}: {a} / {b} have no interior minimum; closest {:.3} GHz at {:.4} T",
                    s.label(),
                    min_separation,
                    at_field
                );
                Body { sublattice: s, branches: [a.clone(), b.clone()], found: false, b_star: at_field, gap: min_separation }
            }
        };
        bodies.push(body);
    }
    let path = args.common.out.join("crossing.json");
    #[derive(Serialize)]
    struct All {
        crossings: Vec<Body>,
    }
    write_json(&path, "crossing", All { crossings: bodies })?;
    Ok(())
}
