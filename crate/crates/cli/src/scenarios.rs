//! One runner per scenario; each returns its CSV tables and the
//! scenario-specific manifest entries.

use duffing_core::fock::ladder;
use duffing_core::liouville::{
    balance_rates, balance_steady, emission_spectrum, populations, steady_state, LadderTable, LevelBasis,
    SpectrumMode, StationaryDistribution,
};
use duffing_core::model::{classical_attractors, pair_residual, rwa_hamiltonian, squeeze_params};
use duffing_core::observables::{a_matrix_element, bose_ratio, effective_occupation, extract_ntilde, well_levels};
use duffing_core::perturb::{expand_attractor, level_spacings, MAX_ORDER};
use duffing_core::{Branch, DephasingModel, ModelParams, RenormalizedFrame, SteadyForm};
use serde_json::{json, Map, Value};

use crate::config::{Scenario, ScenarioConfig, Sweep, SweepVar};
use crate::error::CliError;
use crate::output::{Cell, Table};

type Result<T> = std::result::Result<T, CliError>;

#[derive(Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Map<String, Value>,
    pub residuals: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Outcome {
    /// Keeps the largest value seen for `key`.
    fn residual(&mut self, key: &str, value: f64) {
        let prev = self.residuals.get(key).and_then(Value::as_f64).unwrap_or(0.0);
        self.residuals.insert(key.into(), json!(prev.max(value)));
    }

    fn count(&mut self, key: &str, n: usize) {
        let prev = self.residuals.get(key).and_then(Value::as_u64).unwrap_or(0);
        self.residuals.insert(key.into(), json!(prev + n as u64));
    }

    fn frame(&mut self, frame: &RenormalizedFrame) {
        self.residual("alpha_residual", frame.solution.alpha_residual);
        self.residual("pair_residual", frame.solution.pair_residual);
    }
}

/// Steady-state occupation spread over the lowest levels; `levels + 6`
/// states of the reference subspace qualify a state as a well level.
const WELL_WINDOW_PAD: usize = 6;

pub fn run(cfg: &ScenarioConfig) -> Result<Outcome> {
    match cfg.scenario {
        Scenario::Attractors => attractors(cfg),
        Scenario::Levels => no_sweep(cfg).and_then(|_| levels(cfg)),
        Scenario::Displacement => no_sweep(cfg).and_then(|_| displacement(cfg)),
        Scenario::Distribution => no_sweep(cfg).and_then(|_| distribution(cfg)),
        Scenario::BoseRatio => bose(cfg),
        Scenario::Neff => no_sweep(cfg).and_then(|_| neff(cfg)),
        Scenario::Spectrum => spectrum(cfg),
        Scenario::Dephasing => dephasing(cfg),
    }
}

fn no_sweep(cfg: &ScenarioConfig) -> Result<()> {
    match cfg.sweep {
        Some(_) => Err(CliError::Config(format!("scenario {} does not take a sweep", cfg.scenario.name()))),
        None => Ok(()),
    }
}

fn params(cfg: &ScenarioConfig, lambda: f64, point: Option<(SweepVar, f64)>) -> Result<ModelParams> {
    let (mut beta, mut kappa, mut nbar, mut eta) = (cfg.beta, cfg.kappa, cfg.nbar, cfg.eta_ph);
    match point {
        Some((SweepVar::Beta, x)) => beta = x,
        Some((SweepVar::Kappa, x)) => kappa = x,
        Some((SweepVar::Nbar, x)) => nbar = x,
        Some((SweepVar::EtaPh, x)) => eta = x,
        None => {}
    }
    Ok(ModelParams::scaled(lambda, beta)?.with_kappa(kappa)?.with_nbar(nbar)?.with_eta_ph(eta)?)
}

fn sweep_points(sweep: Option<Sweep>) -> Vec<Option<(SweepVar, f64)>> {
    match sweep {
        Some(s) => s.values().into_iter().map(|x| Some((s.var, x))).collect(),
        None => vec![None],
    }
}

fn attractors(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut cols = vec![];
    if let Some(s) = cfg.sweep {
        cols.push(s.var.name());
    }
    cols.extend([
        "branch",
        "alpha_re",
        "alpha_im",
        "alpha_abs",
        "u_re",
        "u_im",
        "v_re",
        "v_im",
        "squeeze_r",
        "alpha_residual",
        "pair_residual",
    ]);
    let mut exact = Table::new("attractors", &cols).comment("displacement condition with the exact steady form");
    let mut reordered =
        Table::new("reordered", &cols).comment("displacement condition with the normal-ordered high-amplitude form");
    for point in sweep_points(cfg.sweep) {
        let p = params(cfg, cfg.lambda, point)?;
        for (form, table) in [(SteadyForm::Exact, &mut exact), (SteadyForm::Reordered, &mut reordered)] {
            for sol in classical_attractors(&p, form)? {
                let pair = if sol.branch == Branch::Saddle { None } else { squeeze_params(&p, sol.alpha, form).ok() };
                let pres = pair.map(|q| pair_residual(&p, sol.alpha, &q, form));
                out.residual("alpha_residual", sol.alpha_residual);
                if let Some(r) = pres {
                    out.residual("pair_residual", r);
                }
                let mut row: Vec<Cell> = vec![];
                if let Some((_, x)) = point {
                    row.push(x.into());
                }
                row.extend([
                    sol.branch.name().into(),
                    sol.alpha.re.into(),
                    sol.alpha.im.into(),
                    sol.alpha.norm().into(),
                    pair.map(|q| q.u.re).into(),
                    pair.map(|q| q.u.im).into(),
                    pair.map(|q| q.v.re).into(),
                    pair.map(|q| q.v.im).into(),
                    pair.map(|q| q.u.norm().asinh()).into(),
                    sol.alpha_residual.into(),
                    pres.into(),
                ]);
                table.push(row);
            }
        }
    }
    out.tables = vec![exact, reordered];
    Ok(out)
}

fn single_branch(cfg: &ScenarioConfig) -> Result<Branch> {
    match cfg.branch.branches().as_slice() {
        [b] => Ok(*b),
        _ => Err(CliError::Config(format!("scenario {} runs on one branch (las or has)", cfg.scenario.name()))),
    }
}

fn even_orders(max: usize) -> Vec<usize> {
    (0..=max).filter(|o| o % 2 == 0).collect()
}

/// Exact well levels of the lab-frame Hamiltonian, matched by overlap with
/// the displaced-squeezed number states.
fn exact_levels(frame: &RenormalizedFrame, dim: usize, count: usize) -> Result<duffing_core::observables::WellLevels> {
    let h = rwa_hamiltonian(&frame.params, dim)?;
    let u = frame.unitary(dim)?;
    Ok(well_levels(h.matrix(), Some(&u), count, count + 20)?)
}

fn levels(cfg: &ScenarioConfig) -> Result<Outcome> {
    let branch = single_branch(cfg)?;
    let p = params(cfg, cfg.lambda_for(branch), None)?;
    let frame = RenormalizedFrame::new(&p, branch)?;
    let orders = even_orders(cfg.order);
    let sp = level_spacings(&p, branch, cfg.n_max, &orders)?;
    let ex = exact_levels(&frame, cfg.dim, cfg.n_max + 2)?;

    let mut cols = vec!["n".to_string(), "dE_exact".to_string()];
    cols.extend(orders.iter().map(|o| format!("dE_order{o}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("spacings", &cols).comment(format!("{} level spacings |E_(n+1) - E_n| in units of delta_omega", branch.name()));
    for n in 0..=cfg.n_max {
        let mut row: Vec<Cell> = vec![n.into(), (ex.energies[n + 1] - ex.energies[n]).abs().into()];
        row.extend(sp.spacings.iter().map(|s| Cell::from(s[n])));
        t.push(row);
    }
    let mut out = Outcome::default();
    out.frame(&frame);
    out.residual("min_level_weight", 1.0 - ex.weights.iter().copied().fold(1.0, f64::min));
    out.tables.push(t);
    Ok(out)
}

fn displacement(cfg: &ScenarioConfig) -> Result<Outcome> {
    let branch = single_branch(cfg)?;
    let p = params(cfg, cfg.lambda_for(branch), None)?;
    let frame = RenormalizedFrame::new(&p, branch)?;
    let count = cfg.n_max + 1;
    let (res, _) = expand_attractor(&p, branch, count, MAX_ORDER)?;
    let a_frame = ladder(res.xi[0][0].len())?;
    let ex = exact_levels(&frame, cfg.dim, count)?;
    let a_lab = ladder(cfg.dim)?;

    let mut cols = vec!["n".to_string(), "a_re_exact".into(), "a_im_exact".into(), "a_abs_exact".into()];
    for o in 0..=cfg.order {
        cols.extend([format!("a_re_order{o}"), format!("a_im_order{o}"), format!("a_abs_order{o}")]);
    }
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("displacement", &cols).comment(format!("{} orbital displacement <N|a|N>", branch.name()));
    for n in 0..count {
        let s = &ex.states[n];
        let exact = s.dotc(&(a_lab.matrix() * s));
        let mut row: Vec<Cell> = vec![n.into(), exact.re.into(), exact.im.into(), exact.norm().into()];
        for o in 0..=cfg.order {
            let z = a_matrix_element(&res, n, n, o, a_frame.matrix(), frame.alpha(), &frame.pair)?;
            row.extend([z.re.into(), z.im.into(), z.norm().into()]);
        }
        t.push(row);
    }
    let mut out = Outcome::default();
    out.frame(&frame);
    out.tables.push(t);
    Ok(out)
}

/// Full-Liouvillian populations of the lowest frame well levels.
fn full_distribution(frame: &RenormalizedFrame, dim: usize, count: usize, out: &mut Outcome) -> Result<StationaryDistribution> {
    let l = frame.liouvillian(dim, DephasingModel::Exact)?;
    out.warnings.extend(l.warnings.iter().cloned());
    let st = steady_state(&l)?;
    out.residual("steady_state_residual", st.residual);
    let h = frame.hamiltonian(dim)?;
    let w = well_levels(h.matrix(), None, count, count + WELL_WINDOW_PAD)?;
    Ok(populations(&st.rho, &w.states, LevelBasis::Perturbed))
}

/// Balance-equation populations with rates expanded to `order`.
fn balance_distribution(frame: &RenormalizedFrame, count: usize, order: usize, out: &mut Outcome) -> Result<StationaryDistribution> {
    let (res, _) = expand_attractor(&frame.params, frame.branch, count, MAX_ORDER)?;
    let a = ladder(res.xi[0][0].len())?;
    let table = LadderTable::from_perturbation(&res, a.matrix(), count, order)?;
    let rates = balance_rates(&table, &frame.coeffs.bath);
    out.count(&format!("clipped_rates_order{order}"), rates.clipped);
    Ok(balance_steady(&rates.w)?)
}

fn distribution_orders(cfg: &ScenarioConfig) -> Vec<usize> {
    let mut orders = vec![0];
    if cfg.order > 0 {
        orders.push(cfg.order);
    }
    orders
}

fn distribution(cfg: &ScenarioConfig) -> Result<Outcome> {
    let branch = single_branch(cfg)?;
    let p = params(cfg, cfg.lambda_for(branch), None)?;
    let frame = RenormalizedFrame::new(&p, branch)?;
    let count = cfg.n_max + 1;
    let mut out = Outcome::default();
    out.frame(&frame);
    let full = full_distribution(&frame, cfg.dim, count, &mut out)?;
    let orders = distribution_orders(cfg);
    let approx: Vec<StationaryDistribution> =
        orders.iter().map(|&o| balance_distribution(&frame, count, o, &mut out)).collect::<Result<_>>()?;

    let mut cols = vec!["n".to_string(), "p_exact".into()];
    cols.extend(orders.iter().map(|o| format!("p_order{o}")));
    cols.extend(orders.iter().map(|o| format!("relerr_order{o}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("distribution", &cols).comment(format!("{} stationary populations; relerr = (p_order - p_exact)/p_exact", branch.name()));
    for n in 0..count {
        let mut row: Vec<Cell> = vec![n.into(), full.p[n].into()];
        row.extend(approx.iter().map(|d| Cell::from(d.p[n])));
        row.extend(approx.iter().map(|d| Cell::from((d.p[n] - full.p[n]) / full.p[n])));
        t.push(row);
    }
    out.tables.push(t);
    Ok(out)
}

fn bose(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let sweep = cfg.sweep.ok_or_else(|| CliError::Config("bose-ratio needs a sweep".into()))?;
    for branch in cfg.branch.branches() {
        let mut t = Table::new(
            branch.name(),
            &[sweep.var.name(), "ratio_harmonic", "ratio_exact", "log_ratio_harmonic", "log_ratio_exact", "rel_dev"],
        )
        .comment(format!("{} ratio p_2/p_1 of the two lowest levels and ln(p_1/p_2)", branch.name()));
        let mut worst: f64 = 0.0;
        for point in sweep_points(Some(sweep)) {
            let p = params(cfg, cfg.lambda_for(branch), point)?;
            let frame = RenormalizedFrame::new(&p, branch)?;
            out.frame(&frame);
            let full = full_distribution(&frame, cfg.dim_for(branch), 3, &mut out)?;
            let r = bose_ratio(&frame.pair, p.nbar);
            let ex = full.p[1] / full.p[0];
            let dev = (ex - r) / r;
            worst = worst.max(dev.abs());
            t.push(vec![point.map(|x| x.1).into(), r.into(), ex.into(), (-r.ln()).into(), (-ex.ln()).into(), dev.into()]);
        }
        out.results.insert(format!("{}_max_rel_dev", branch.name()), json!(worst));
        out.tables.push(t);
    }
    Ok(out)
}

fn neff(cfg: &ScenarioConfig) -> Result<Outcome> {
    let branch = single_branch(cfg)?;
    let p = params(cfg, cfg.lambda_for(branch), None)?;
    let frame = RenormalizedFrame::new(&p, branch)?;
    let count = cfg.n_max + 1;
    let mut out = Outcome::default();
    out.frame(&frame);
    let full = effective_occupation(&full_distribution(&frame, cfg.dim, count, &mut out)?);
    let orders = distribution_orders(cfg);
    let approx: Vec<Vec<Option<f64>>> = orders
        .iter()
        .map(|&o| balance_distribution(&frame, count, o, &mut out).map(|d| effective_occupation(&d)))
        .collect::<Result<_>>()?;

    let mut cols = vec!["n".to_string(), "neff_exact".into()];
    cols.extend(orders.iter().map(|o| format!("neff_order{o}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("neff", &cols)
        .comment(format!("{} N_eff(n) = p_(n+1)/(p_n - p_(n+1))", branch.name()))
        .comment("undefined=nan (p_n <= p_(n+1))");
    for n in 0..count - 1 {
        let mut row: Vec<Cell> = vec![n.into(), full[n].into()];
        row.extend(approx.iter().map(|a| Cell::from(a[n])));
        t.push(row);
    }
    out.results.insert("nbar_effective".into(), json!(frame.coeffs.bath.nbar_eff));
    out.tables.push(t);
    Ok(out)
}

/// Peak search: coarse grid of this half width around the perturbative
/// spacing, then a fine grid around the coarse maximum.
const SPECTRUM_HALF_WIDTH: f64 = 0.6;
const SPECTRUM_COARSE_STEP: f64 = 0.01;
const SPECTRUM_FINE_STEP: f64 = 5e-4;

fn spectrum(cfg: &ScenarioConfig) -> Result<Outcome> {
    let branch = single_branch(cfg)?;
    let orders = even_orders(cfg.order);
    // kappa is always a column; another swept variable gets its own
    let extra = cfg.sweep.filter(|s| s.var != SweepVar::Kappa);
    let mut cols = vec![];
    if let Some(s) = extra {
        cols.push(s.var.name().to_string());
    }
    cols.extend(["kappa".to_string(), "omega_peak".into(), "abs_omega_peak".into()]);
    cols.extend(orders.iter().map(|o| format!("dE1_order{o}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut peaks = Table::new("peaks", &cols).comment(format!(
        "{} emission-spectrum peak of the frame ladder operator vs perturbative spacing dE1",
        branch.name()
    ));
    let mut spectra = Table::new("spectra", &["kappa", "omega", "S"]).comment("coarse-grid emission spectra");
    let mut out = Outcome::default();
    out.results.insert(
        "grid".into(),
        json!({"half_width": SPECTRUM_HALF_WIDTH, "coarse_step": SPECTRUM_COARSE_STEP, "fine_step": SPECTRUM_FINE_STEP}),
    );
    let mut worst: f64 = 0.0;
    for point in sweep_points(cfg.sweep) {
        let p = params(cfg, cfg.lambda_for(branch), point)?;
        if p.kappa <= 0.0 {
            return Err(CliError::Config("spectrum needs kappa > 0".into()));
        }
        let frame = RenormalizedFrame::new(&p, branch)?;
        out.frame(&frame);
        let sp = level_spacings(&p, branch, 0, &orders)?;
        let de1: Vec<f64> = sp.spacings.iter().map(|s| s[0]).collect();
        let top = *de1.last().expect("at least order 0");
        let l = frame.liouvillian(cfg.dim, DephasingModel::Exact)?;
        out.warnings.extend(l.warnings.iter().cloned());
        let st = steady_state(&l)?;
        out.residual("steady_state_residual", st.residual);
        let a = frame.ladder(cfg.dim)?;
        // the frame ladder oscillates at -dE1 for a quasienergy maximum
        let center = if branch == Branch::Has { -top } else { top };
        let n_coarse = (2.0 * SPECTRUM_HALF_WIDTH / SPECTRUM_COARSE_STEP).round() as usize;
        let coarse: Vec<f64> =
            (0..=n_coarse).map(|k| center - SPECTRUM_HALF_WIDTH + SPECTRUM_COARSE_STEP * k as f64).collect();
        let sc = emission_spectrum(&l, &st.rho, &a, &coarse, SpectrumMode::Resolvent)?;
        let (wc, _) = sc.peak();
        let n_fine = (4.0 * SPECTRUM_COARSE_STEP / SPECTRUM_FINE_STEP).round() as usize;
        let fine: Vec<f64> =
            (0..=n_fine).map(|k| wc - 2.0 * SPECTRUM_COARSE_STEP + SPECTRUM_FINE_STEP * k as f64).collect();
        let (wp, _) = emission_spectrum(&l, &st.rho, &a, &fine, SpectrumMode::Resolvent)?.peak();
        worst = worst.max((wp.abs() - top).abs() / p.kappa);

        let mut row: Vec<Cell> = vec![];
        if let (Some(_), Some((_, x))) = (extra, point) {
            row.push(x.into());
        }
        row.extend([p.kappa.into(), wp.into(), wp.abs().into()]);
        row.extend(de1.iter().map(|&x| Cell::from(x)));
        peaks.push(row);
        for (w, s) in sc.omega.iter().zip(&sc.s) {
            spectra.push(vec![p.kappa.into(), (*w).into(), (*s).into()]);
        }
    }
    out.results.insert("max_peak_deviation_over_kappa".into(), json!(worst));
    out.tables = vec![peaks, spectra];
    Ok(out)
}

/// Default dephasing sweep: up to this fraction of kappa per branch.
fn default_eta_max(branch: Branch) -> f64 {
    if branch == Branch::Las {
        0.25
    } else {
        0.05
    }
}

fn dephasing(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    for branch in cfg.branch.branches() {
        let sweep = cfg.sweep.unwrap_or(Sweep {
            var: SweepVar::EtaPh,
            start: 0.0,
            stop: default_eta_max(branch) * cfg.kappa,
            points: 6,
        });
        let mut t = Table::new(branch.name(), &[sweep.var.name(), "Ntilde_extracted", "Ntilde_predicted"])
            .comment(format!("{} two-level occupation p_2/(p_1 - p_2) under dephasing", branch.name()));
        let (mut xs, mut ys) = (vec![], vec![]);
        let mut predicted_slope = f64::NAN;
        for point in sweep_points(Some(sweep)) {
            let p = params(cfg, cfg.lambda_for(branch), point)?;
            let frame = RenormalizedFrame::new(&p, branch)?;
            out.frame(&frame);
            let nt = extract_ntilde(&full_distribution(&frame, cfg.dim_for(branch), 3, &mut out)?)?;
            if p.kappa > 0.0 {
                predicted_slope = frame.coeffs.dephasing_shift.norm_sqr() / p.kappa;
            }
            let x = point.map_or(0.0, |x| x.1);
            xs.push(x);
            ys.push(nt);
            t.push(vec![x.into(), nt.into(), frame.coeffs.ntilde.into()]);
        }
        let fit = linear_fit(&xs, &ys);
        out.results.insert(
            branch.name().to_string(),
            json!({
                "sweep": sweep.to_string(),
                "slope": fit.1,
                "intercept": fit.0,
                "r_squared": fit.2,
                "predicted_slope": if sweep.var == SweepVar::EtaPh { json!(predicted_slope) } else { Value::Null },
            }),
        );
        out.tables.push(t);
    }
    Ok(out)
}

/// Least-squares line `y = a + b x`, returning `(a, b, R^2)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|yi| (yi - my).powi(2)).sum();
    (a, b, 1.0 - ss_res / ss_tot)
}
