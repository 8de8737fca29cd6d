use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use siv_dicke::lindblad::{CrossCheck, EvolveOptions, SteadyOptions, TrajectoryRecord};
use siv_dicke::scenario::Scenario;
use siv_dicke::siv_model::{self, Adiabaticity, DriveParams};
use siv_dicke::spin_algebra::build_operators;
use siv_dicke::squeezing::report;
use siv_dicke::sweep::{run_sweep, Grid, SweepPoint};
use siv_dicke::waveguide::{self, reference};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, DiagnosticsSummary, EffectiveEcho, Manifest, RunEcho};
use crate::CliError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    command: String,
    started: Instant,
    runs: Vec<RunEcho>,
    outputs: Vec<String>,
}

impl Ctx {
    pub fn new(command: &str, cfg: RunConfig, out: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out)?;
        Ok(Ctx {
            cfg,
            out: out.to_path_buf(),
            command: command.to_string(),
            started: Instant::now(),
            runs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        let path = self.file("manifest.json");
        let manifest = Manifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION"),
            config: self.cfg.echo(),
            runs: std::mem::take(&mut self.runs),
            outputs: self.outputs.clone(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        output::write_json(&path, &manifest)
    }

    fn echo_run(&mut self, label: String, s: &Scenario, rec: Option<&TrajectoryRecord>, file: Option<&str>) -> Result<(), CliError> {
        let spec = s.model_spec()?;
        self.runs.push(RunEcho {
            label,
            n_spins: s.n_spins,
            basis: if spec.basis().is_full() { "full" } else { "dicke" }.to_string(),
            master_equation: format!("{:?}", spec.form()),
            initial_two_m: s.initial_two_m(),
            effective: EffectiveEcho::from(spec.eff()),
            diagnostics: rec.map(DiagnosticsSummary::from),
            output: file.map(str::to_string),
        });
        Ok(())
    }
}

fn check_adiabatic(cfg: &RunConfig, d: &DriveParams) -> Result<(), CliError> {
    match d.adiabaticity() {
        Adiabaticity::Violated { worst_ratio } if !cfg.allow_nonadiabatic => Err(ConfigError::field(
            "allow_nonadiabatic",
            format!(
                "Ω/|Δ| = {worst_ratio:.3} exceeds {}; adiabatic elimination does not apply (set allow_nonadiabatic=true to override)",
                siv_model::ADIABATIC_MAX_RATIO
            ),
        )
        .into()),
        Adiabaticity::Violated { worst_ratio } => {
            warn!("Ω/|Δ| = {worst_ratio:.3} is outside the adiabatic regime");
            Ok(())
        }
        Adiabaticity::Marginal { worst_ratio } => {
            warn!("Ω/|Δ| = {worst_ratio:.3} is marginal for adiabatic elimination");
            Ok(())
        }
        Adiabaticity::Valid => Ok(()),
    }
}

/// `r` from the drive amplitudes, when any drive key is set.
fn drive_r(cfg: &RunConfig) -> Result<Option<f64>, CliError> {
    if !cfg.drive_is_set() {
        return Ok(None);
    }
    let d = cfg.drive_params()?;
    check_adiabatic(cfg, &d)?;
    let e = siv_model::effective_params(&d, 1.0, None)?;
    info!("r = {} from the drive configuration", e.r);
    Ok(Some(e.r))
}

fn base_scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let s = cfg.scenario(drive_r(cfg)?)?;
    s.validate()?;
    Ok(s)
}

fn steady_options(cfg: &RunConfig, sweeping: bool) -> SteadyOptions {
    // Cross-checking every sweep point doubles the cost and, for weak
    // dephasing, runs into the evolution cap; sweeps skip it unless asked.
    let cross_check = if cfg.is_set("cross_check") { cfg.cross_check } else { !sweeping };
    SteadyOptions {
        strategy: cfg.strategy,
        cross_check,
        gamma_t_cap: cfg.gamma_t_cap,
        ..SteadyOptions::default()
    }
}

fn trajectory(ctx: &mut Ctx, s: &Scenario, label: String, name: &str) -> Result<TrajectoryRecord, CliError> {
    let opts = EvolveOptions {
        diagnostics: ctx.cfg.diagnostics,
        ..EvolveOptions::default()
    };
    let rec = s.evolve(&opts)?;
    let path = ctx.file(name);
    output::write_trajectory(&path, &rec)?;
    output::validate_trajectory(&path, rec.len())?;
    ctx.echo_run(label, s, Some(&rec), Some(name))?;
    Ok(rec)
}

fn summarize(label: &str, rec: &TrajectoryRecord) {
    let last = rec.squeezing.last();
    println!(
        "{label}: Γt = {:.3}, 1/xi_R'^2 = {}, 1/xi_S^2 = {}",
        rec.gamma_t().last().copied().unwrap_or(0.0),
        last.and_then(|s| s.inv_xi_r2).map_or_else(|| "undefined".into(), |x| format!("{x:.6}")),
        last.map_or_else(|| "undefined".into(), |s| format!("{:.6}", s.inv_xi_s2))
    );
}

pub fn evolve(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = base_scenario(&ctx.cfg)?;
    let rec = trajectory(ctx, &s, "evolve".into(), "trajectory.csv")?;
    summarize("evolve", &rec);
    Ok(())
}

#[derive(Serialize)]
struct CrossCheckEcho {
    status: &'static str,
    trace_distance: Option<f64>,
    residual: Option<f64>,
}

#[derive(Serialize)]
struct SteadySummary {
    inv_xi_r2: Option<f64>,
    inv_xi_s2: f64,
    solver_used: &'static str,
    residual: f64,
    purity: f64,
    kernel_dim: Option<usize>,
    gamma_t: Option<f64>,
    cross_check: Option<CrossCheckEcho>,
    rho_dump: Option<String>,
}

pub fn steady(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = base_scenario(&ctx.cfg)?;
    let ss = s.steady(&steady_options(&ctx.cfg, false))?;
    let ops = build_operators(ss.rho.basis(), 1.0, 0.0)?;
    let rep = report(&ss.rho, &ops)?;
    let rho_dump = if ctx.cfg.dump_rho {
        let path = ctx.file("rho.csv");
        output::write_density(&path, &ss.rho)?;
        Some("rho.csv".to_string())
    } else {
        None
    };
    let summary = SteadySummary {
        inv_xi_r2: rep.inv_xi_r2,
        inv_xi_s2: rep.inv_xi_s2,
        solver_used: ss.solver.as_str(),
        residual: ss.residual,
        purity: ss.rho.purity(),
        kernel_dim: ss.kernel_dim,
        gamma_t: ss.gamma_t,
        cross_check: ss.cross_check.as_ref().map(|c| match c {
            CrossCheck::Agreed { trace_distance } => CrossCheckEcho {
                status: "agreed",
                trace_distance: Some(*trace_distance),
                residual: None,
            },
            CrossCheck::NotConverged { residual } => CrossCheckEcho {
                status: "not_converged",
                trace_distance: None,
                residual: Some(*residual),
            },
        }),
        rho_dump,
    };
    let path = ctx.file("steady.json");
    output::write_json(&path, &summary)?;
    ctx.echo_run("steady".into(), &s, None, Some("steady.json"))?;
    println!(
        "steady ({}): 1/xi_R'^2 = {}, residual {:.3e}, purity {:.6}",
        summary.solver_used,
        summary.inv_xi_r2.map_or_else(|| "undefined".into(), |x| format!("{x:.6}")),
        summary.residual,
        summary.purity
    );
    Ok(())
}

fn sweep_points(ctx: &Ctx, base: &Scenario) -> Result<Vec<SweepPoint>, CliError> {
    let cfg = &ctx.cfg;
    let values = Grid::new(cfg.start, cfg.stop, cfg.count)?.values();
    let mut pts = run_sweep(base, cfg.axis, &values, cfg.execution(), &steady_options(cfg, true));
    pts.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
    Ok(pts)
}

fn write_points(ctx: &mut Ctx, name: &str, pts: &[SweepPoint]) -> Result<(), CliError> {
    let path = ctx.file(name);
    output::write_sweep(&path, pts)?;
    output::validate_sweep(&path, pts.len())?;
    let failed = pts.iter().filter(|p| p.outcome.is_err()).count();
    if failed > 0 {
        warn!("{failed} of {} sweep points failed; see the status column", pts.len());
    }
    println!("{name}: {} points, {failed} failed", pts.len());
    Ok(())
}

pub fn sweep(ctx: &mut Ctx) -> Result<(), CliError> {
    let base = base_scenario(&ctx.cfg)?;
    let pts = sweep_points(ctx, &base)?;
    ctx.echo_run(format!("sweep over {}", ctx.cfg.axis.as_str()), &base, None, Some("sweep.csv"))?;
    write_points(ctx, "sweep.csv", &pts)
}

#[derive(Serialize)]
struct KernelSummary {
    n_emitters: usize,
    gamma_collective: f64,
    wavelength: f64,
    waveguide_wavelength_m: f64,
    max_imag: f64,
    dicke_reducible: bool,
}

pub fn kernel(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let arr = cfg.emitter_array(cfg.n_spins)?;
    let k = waveguide::dipole_kernel(&arr, cfg.gamma_collective)?;
    cfg.waveguide.validate()?;
    let summary = KernelSummary {
        n_emitters: k.len(),
        gamma_collective: k.gamma_collective(),
        wavelength: arr.wavelength(),
        waveguide_wavelength_m: cfg.waveguide.wavelength(cfg.omega_a_ghz * TWO_PI * 1e9),
        max_imag: k.max_imag(),
        dicke_reducible: k.is_dicke_reducible(),
    };
    let m = k.matrix();
    let mut rows = Vec::new();
    for j in 0..k.len() {
        for l in 0..k.len() {
            rows.push(vec![j.to_string(), l.to_string(), output::num(m[(j, l)].re), output::num(m[(j, l)].im)]);
        }
    }
    let path = ctx.file("kernel.csv");
    output::write_table(&path, &["j", "m", "re", "im"], &rows)?;
    let path = ctx.file("kernel.json");
    output::write_json(&path, &summary)?;
    println!("kernel: {} emitters, dicke_reducible = {}", summary.n_emitters, summary.dicke_reducible);
    Ok(())
}

#[derive(Serialize)]
struct SivSummary {
    splitting_ghz: f64,
    zeeman_ghz: f64,
    /// Relative to `E_1`.
    energies_ghz: [f64; 4],
}

pub fn siv(ctx: &mut Ctx) -> Result<(), CliError> {
    let p = ctx.cfg.siv_params()?;
    let es = siv_model::eigensystem(&p);
    let ghz = TWO_PI * 1e9;
    let e1 = es.energies[0];
    let energies = es.energies.map(|e| (e - e1) / ghz);
    let overlaps = es.orbital_overlaps();
    let mut rows = Vec::new();
    println!("level  E/2π (GHz)   |e+↑|²   |e-↑|²   |e+↓|²   |e-↓|²");
    for k in 0..4 {
        let o = overlaps[k];
        println!(
            "{:>5}  {:>11.6}  {:>7.5}  {:>7.5}  {:>7.5}  {:>7.5}",
            k + 1,
            energies[k],
            o[0],
            o[1],
            o[2],
            o[3]
        );
        let mut row = vec![(k + 1).to_string(), output::num(energies[k])];
        row.extend(o.iter().map(|x| output::num(*x)));
        rows.push(row);
    }
    let summary = SivSummary {
        splitting_ghz: siv_model::ground_splitting(&p) / ghz,
        zeeman_ghz: p.zeeman() / ghz,
        energies_ghz: energies,
    };
    println!("splitting Δ/2π = {:.6} GHz", summary.splitting_ghz);
    let path = ctx.file("levels.csv");
    output::write_table(
        &path,
        &["level", "energy_ghz", "e_plus_up", "e_minus_up", "e_plus_down", "e_minus_down"],
        &rows,
    )?;
    let path = ctx.file("siv.json");
    output::write_json(&path, &summary)
}

#[derive(Serialize)]
struct Comparison {
    quantity: &'static str,
    computed: f64,
    quoted: f64,
    ratio: f64,
    within_one_decade: bool,
    order_of_magnitude_only: bool,
}

impl Comparison {
    fn new(quantity: &'static str, computed: f64, quoted: f64) -> Self {
        let ratio = computed / quoted;
        Comparison {
            quantity,
            computed,
            quoted,
            ratio,
            within_one_decade: (0.1..=10.0).contains(&ratio),
            order_of_magnitude_only: true,
        }
    }
}

#[derive(Serialize)]
struct CoupleReport {
    omega_a: f64,
    wavevector: f64,
    wavelength_m: f64,
    coupling_g: f64,
    density_of_states: f64,
    emission_rate: f64,
    ratio_1: f64,
    ratio_2: f64,
    adiabaticity: &'static str,
    alpha: Option<f64>,
    u: f64,
    v: f64,
    r: f64,
    gamma_collective: f64,
    t2: Option<f64>,
    gamma_dephase: f64,
    comparisons: Vec<Comparison>,
}

pub fn couple(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let wp = cfg.waveguide;
    wp.validate()?;
    let d = cfg.drive_params()?;
    check_adiabatic(cfg, &d)?;
    let k = wp.wavevector(d.omega_a);
    let g = waveguide::coupling_strength(k, &wp);
    let dos = waveguide::density_of_states(d.omega_a, &wp);
    let gamma = waveguide::emission_rate(g, dos);
    let e = siv_model::effective_params(&d, gamma, cfg.t2)?;
    let rep = CoupleReport {
        omega_a: d.omega_a,
        wavevector: k,
        wavelength_m: wp.wavelength(d.omega_a),
        coupling_g: g,
        density_of_states: dos,
        emission_rate: gamma,
        ratio_1: d.ratio_1(),
        ratio_2: d.ratio_2(),
        adiabaticity: match d.adiabaticity() {
            Adiabaticity::Valid => "valid",
            Adiabaticity::Marginal { .. } => "marginal",
            Adiabaticity::Violated { .. } => "violated",
        },
        alpha: e.alpha,
        u: e.u,
        v: e.v,
        r: e.r,
        gamma_collective: e.gamma_collective,
        t2: cfg.t2,
        gamma_dephase: e.gamma_dephase,
        comparisons: vec![
            Comparison::new("coupling g (rad/s)", g, reference::QUOTED_COUPLING),
            Comparison::new("collective rate Γ (rad/s)", e.gamma_collective, reference::QUOTED_COLLECTIVE_RATE),
            Comparison::new("phonon wavelength (m)", wp.wavelength(d.omega_a), reference::QUOTED_WAVELENGTH),
        ],
    };
    println!("g/2π = {:.4e} Hz, D = {:.4e} s, γ = {:.4e} s⁻¹", g / TWO_PI, dos, gamma);
    println!(
        "α = {:.6}, u = {:.6}, v = {:.6}, r = {:.6}, Γ/2π = {:.4e} Hz, Γ_D = {:.4e} s⁻¹",
        e.alpha.unwrap_or(f64::NAN),
        e.u,
        e.v,
        e.r,
        e.gamma_collective / TWO_PI,
        e.gamma_dephase
    );
    for c in &rep.comparisons {
        println!(
            "{}: computed/quoted = {:.3} (order of magnitude only{})",
            c.quantity,
            c.ratio,
            if c.within_one_decade { "" } else { "; more than a decade apart" }
        );
    }
    let path = ctx.file("couple.json");
    output::write_json(&path, &rep)
}

pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    /// Key defaults applied before the config file and overrides.
    pub fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Preset::Fig3 => &[("n_spins", "4"), ("r", "0.2")],
            Preset::Fig4 => &[("r", "0.2"), ("n_values", "2,4,6,8")],
            Preset::Fig5 => &[("n_spins", "4"), ("r", "0.2")],
            Preset::Fig6 => &[
                ("axis", "r"),
                ("start", "0"),
                ("stop", "3"),
                ("count", "61"),
                ("n_values", "2,4,6,8"),
            ],
            Preset::Fig7 => &[("n_spins", "4"), ("r", "0.2")],
            Preset::Fig8 => &[("n_spins", "4"), ("axis", "r"), ("start", "0"), ("stop", "2"), ("count", "41")],
        }
    }
}

fn dephasing_list(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    cfg.gamma_dephase_ratios.clone().ok_or_else(|| {
        ConfigError::field(
            "gamma_dephase_ratios",
            "required for this preset (comma-separated Γ_D/Γ values)",
        )
        .into()
    })
}

pub fn preset(ctx: &mut Ctx, p: &Preset) -> Result<(), CliError> {
    let base = base_scenario(&ctx.cfg)?;
    let n_values = ctx.cfg.n_values.clone().unwrap_or_else(|| vec![base.n_spins]);
    match p {
        Preset::Fig3 => {
            let rec = trajectory(ctx, &base, "fig3".into(), "fig3.csv")?;
            let worst = rec
                .squeezing
                .iter()
                .filter_map(|s| s.inv_xi_r2.map(|x| s.inv_xi_s2 - x))
                .fold(f64::INFINITY, f64::min);
            if worst < -1e-9 {
                warn!("1/xi_S^2 falls below 1/xi_R'^2 by {:.3e}", -worst);
            }
            summarize("fig3", &rec);
        }
        Preset::Fig4 => {
            for n in n_values {
                let s = Scenario { n_spins: n, ..base.clone() };
                let name = format!("fig4_n{n}.csv");
                let rec = trajectory(ctx, &s, format!("N={n}"), &name)?;
                summarize(&format!("fig4 N={n}"), &rec);
            }
        }
        Preset::Fig5 => {
            let n = base.n_spins as i64;
            for two_m in (-n..=n).step_by(2) {
                let s = Scenario {
                    initial_two_m: Some(two_m),
                    ..base.clone()
                };
                let name = format!("fig5_2m{two_m}.csv");
                let rec = trajectory(ctx, &s, format!("2m={two_m}"), &name)?;
                summarize(&format!("fig5 2m={two_m}"), &rec);
            }
        }
        Preset::Fig6 => {
            let mut all = Vec::new();
            for n in n_values {
                let s = Scenario { n_spins: n, ..base.clone() };
                all.extend(sweep_points(ctx, &s)?);
                ctx.echo_run(format!("N={n}"), &s, None, Some("fig6.csv"))?;
            }
            write_points(ctx, "fig6.csv", &all)?;
        }
        Preset::Fig7 => {
            for gd in dephasing_list(&ctx.cfg)? {
                let s = Scenario {
                    gamma_dephase_ratio: gd,
                    ..base.clone()
                };
                let name = format!("fig7_gd{gd}.csv");
                let rec = trajectory(ctx, &s, format!("Γ_D/Γ={gd}"), &name)?;
                summarize(&format!("fig7 Γ_D/Γ={gd}"), &rec);
            }
        }
        Preset::Fig8 => {
            let mut all = Vec::new();
            for gd in dephasing_list(&ctx.cfg)? {
                let s = Scenario {
                    gamma_dephase_ratio: gd,
                    ..base.clone()
                };
                s.validate()?;
                all.extend(sweep_points(ctx, &s)?);
                ctx.echo_run(format!("Γ_D/Γ={gd}"), &s, None, Some("fig8.csv"))?;
            }
            write_points(ctx, "fig8.csv", &all)?;
        }
    }
    Ok(())
}
