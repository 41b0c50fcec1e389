//! The experiments behind each subcommand.

use std::path::Path;
use std::sync::Arc;

use hardylab::hardy::{make_atom, validate_atom, BallSpec, ConeQuadrature, SquareFunction};
use hardylab::io::{load_operator, AtomDump};
use hardylab::multiplier::{
    log_grid, make_partition, spectral_j_range, theorem1_experiment, theorem2_experiment, verify_lemma3, verify_prop1,
    AtomSpec, Multiplier, Theorem2Options,
};
use hardylab::space::Space;
use hardylab::spectral::{check_davies_gaffney, check_gaussian_bounds, FittedBound, Operator, SpectralDecomposition};
use hardylab::table::{Cell, Table};
use hardylab::wave::{propagation_speed, random_function_on_ball, verify_lemma_dd1};
use hardylab::Error;

use crate::config::ExperimentConfig;
use crate::svg::PlotSpec;
use crate::{CliError, Experiment, Outcome};

struct Model {
    space: Arc<Space>,
    op: Operator,
    decomp: SpectralDecomposition,
}

fn build(config: &ExperimentConfig, base: &Path) -> Result<Model, CliError> {
    let (space, op) = match (&config.model, &config.operator_file) {
        (Some(spec), _) => hardylab::io::build_model(spec)?,
        (None, Some(path)) => load_operator(&base.join(path))?,
        (None, None) => return Err(CliError::Config("no model".into())),
    };
    let decomp = op.decompose()?;
    Ok(Model { space, op, decomp })
}

pub(crate) fn execute(exp: Experiment, config: &ExperimentConfig, base: &Path) -> Result<Outcome, CliError> {
    let model = build(config, base)?;
    let mut out = Outcome::default();
    match exp {
        Experiment::SpaceReport => space_report(&model, config, &mut out)?,
        Experiment::HeatCheck => heat_check(&model, config, &mut out)?,
        Experiment::DgCheck => dg_check(&model, config, &mut out)?,
        Experiment::AtomBench => atom_bench(&model, config, &mut out)?,
        Experiment::MultiplierVerify => multiplier_verify(&model, config, &mut out)?,
        Experiment::MoleculeCheck => molecule_check(&model, config, &mut out)?,
        Experiment::WaveCheck => wave_check(&model, config, &mut out)?,
        Experiment::Prop1Check | Experiment::Lemma3Check => kernel_check(exp, &model, config, &mut out)?,
    }
    Ok(out)
}

/// File-name-safe multiplier label.
fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_string()
}

fn multipliers(config: &ExperimentConfig) -> Result<Vec<Multiplier>, CliError> {
    config
        .multipliers
        .iter()
        .map(|s| s.build().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

/// Atoms spread evenly over the point indices, one seed per atom.
pub fn atom_specs(n: usize, radii: &[f64], per_radius: usize, seed: u64) -> Vec<AtomSpec> {
    let mut specs = Vec::new();
    for (i, &radius) in radii.iter().enumerate() {
        for k in 0..per_radius {
            let center = (k * n / per_radius.max(1) + i) % n;
            specs.push(AtomSpec { center, radius, seed: seed.wrapping_add(specs.len() as u64) });
        }
    }
    specs
}

fn time_grid(config: &ExperimentConfig, lo: f64, hi: f64) -> Vec<f64> {
    match config.times {
        Some(t) => log_grid(t.min, t.max, t.per_octave),
        None => log_grid(lo, hi, 4),
    }
}

fn quadrature(model: &Model, config: &ExperimentConfig) -> Result<ConeQuadrature, CliError> {
    Ok(ConeQuadrature::for_spectrum(&model.space, &model.decomp, config.quadrature.steps_per_octave)?
        .with_open_cone(config.quadrature.open_cone))
}

fn space_report(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let space = &model.space;
    let q_grid = config
        .q_grid
        .clone()
        .unwrap_or_else(|| (1..=16).map(|k| k as f64 * 0.25).collect());
    let fit = space.fit_growth_exponent(&q_grid)?;
    let mut t = Table::new("doubling_profile", &["q", "c0", "witness_x", "witness_t", "witness_s"]);
    for p in &fit.profiles {
        let w = p
            .samples
            .iter()
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
            .copied();
        let (x, tt, s) = w.map(|w| (w.x as i64, w.t, w.s)).unwrap_or((-1, f64::NAN, f64::NAN));
        t.push(vec![p.q.into(), p.c0.into(), x.into(), tt.into(), s.into()]);
    }
    out.table(t, Some(PlotSpec::new("q", &["c0"]).log_y()));

    let mut s = Table::new("space_summary", &["quantity", "value"]);
    s.push(vec!["points".into(), space.n().into()]);
    s.push(vec!["diameter".into(), space.diameter().into()]);
    s.push(vec!["total_mass".into(), space.total_mass().into()]);
    s.push(vec!["growth_q".into(), fit.q.into()]);
    s.push(vec!["growth_c0".into(), fit.c0.into()]);
    if let Ok(lv) = space.check_lower_volume(0, (1.0, space.diameter())) {
        s.push(vec!["lower_volume_c".into(), lv.c.into()]);
        s.push(vec!["lower_volume_kappa".into(), lv.kappa.into()]);
    }
    let sub = space.check_submultiplicative(1.0).is_ok();
    s.push(vec!["omega1_submultiplicative".into(), (if sub { "ok" } else { "fail" }).into()]);
    out.gate(sub, || "omega_1 submultiplicativity failed".into());
    out.table(s, None);
    Ok(())
}

fn curve_table(name: &str, fits: &[(i64, &FittedBound)]) -> Table {
    let mut t = Table::new(name, &["k", "c", "C"]);
    for (k, f) in fits {
        for &(c, v) in &f.curve {
            t.push(vec![(*k).into(), c.into(), v.into()]);
        }
    }
    t
}

fn witness_text(f: &FittedBound) -> String {
    match &f.worst_witness {
        hardylab::spectral::BoundWitness::Points { x, y, t } => format!("x={x} y={y} t={t:.6e}"),
        hardylab::spectral::BoundWitness::Sets { pair, t } => format!("pair={pair} t={t:.6e}"),
    }
}

fn heat_check(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let (lmin, lmax) = (model.decomp.lambda_min(), model.decomp.lambda_max());
    let times = time_grid(config, 1.0 / lmax, 1.0 / lmin);
    let mut fits = Vec::new();
    for k in 0..=config.derivative {
        fits.push((k as i64, check_gaussian_bounds(&model.space, &model.decomp, &times, k)?));
    }
    let mut t = Table::new("heat_check", &["k", "C", "c", "margin", "probes", "skipped", "witness"]);
    for (k, f) in &fits {
        t.push(vec![
            (*k).into(),
            f.c_const.into(),
            f.c_scale.into(),
            f.margin.into(),
            f.probes.into(),
            f.skipped.into(),
            witness_text(f).into(),
        ]);
    }
    out.table(t, None);
    let refs: Vec<(i64, &FittedBound)> = fits.iter().map(|(k, f)| (*k, f)).collect();
    out.table(curve_table("heat_curve", &refs), Some(PlotSpec::new("c", &["C"]).log_x().log_y()));
    Ok(())
}

fn dg_check(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let space = &model.space;
    let n = space.n();
    let dg = config.dg.clone().unwrap_or_else(|| crate::config::DgConfig {
        radius: space.diameter() / 8.0,
        pairs: (1..=4).map(|k| (0, k * n / 8)).collect(),
    });
    let mut balls = Vec::new();
    for &(a, b) in &dg.pairs {
        if a >= n || b >= n {
            return Err(CliError::Config(format!("ball centre out of range in pair ({a}, {b})")));
        }
        balls.push((space.ball(a, dg.radius)?, space.ball(b, dg.radius)?));
    }
    let (lmin, lmax) = (model.decomp.lambda_min(), model.decomp.lambda_max());
    let times = time_grid(config, 1.0 / lmax, 1.0 / lmin);
    let fit = check_davies_gaffney(space, &model.decomp, &balls, &times)?;
    let mut t = Table::new("dg_check", &["C", "c", "margin", "probes", "skipped", "witness"]);
    t.push(vec![
        fit.c_const.into(),
        fit.c_scale.into(),
        fit.margin.into(),
        fit.probes.into(),
        fit.skipped.into(),
        witness_text(&fit).into(),
    ]);
    out.table(t, None);
    out.table(curve_table("dg_curve", &[(0, &fit)]), Some(PlotSpec::new("c", &["C"]).log_x().log_y()));
    Ok(())
}

fn atom_bench(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let specs = atom_specs(model.space.n(), &config.atoms.radii, config.atoms.per_radius, config.seed);
    let quad = quadrature(model, config)?;
    let sq = SquareFunction::new(&model.space, &model.decomp, &quad)?;
    let mut atoms_t = Table::new(
        "atoms",
        &["atom_id", "center", "r", "M", "h1", "l2", "worst_condition", "worst_margin", "status"],
    );
    let mut val_t = Table::new("atom_validation", &["atom_id", "condition", "margin", "witness"]);
    let mut dumps = Vec::new();
    for (id, spec) in specs.iter().enumerate() {
        let ball = BallSpec { center: spec.center, radius: spec.radius };
        match make_atom(&model.op, &model.decomp, ball, config.atoms.order, spec.seed) {
            Ok(atom) => {
                let report = validate_atom(&model.space, &model.decomp, &atom);
                let worst = report.worst().cloned();
                for m in &report.margins {
                    val_t.push(vec![id.into(), m.condition.clone().into(), m.margin.into(), m.witness.into()]);
                }
                atoms_t.push(vec![
                    id.into(),
                    spec.center.into(),
                    spec.radius.into(),
                    config.atoms.order.into(),
                    sq.h1_norm(&atom.a)?.into(),
                    model.decomp.norm(&atom.a).into(),
                    worst.as_ref().map(|w| w.condition.clone()).unwrap_or_default().into(),
                    worst.map(|w| w.margin).unwrap_or(f64::NAN).into(),
                    (if report.passed { "ok" } else { "fail" }).into(),
                ]);
                out.gate(report.passed, || format!("atom {id} failed validation"));
                dumps.push(AtomDump::from(&atom));
            }
            Err(Error::AtomInfeasible(msg)) => {
                atoms_t.push(vec![
                    id.into(),
                    spec.center.into(),
                    spec.radius.into(),
                    config.atoms.order.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    "".into(),
                    f64::NAN.into(),
                    format!("infeasible: {msg}").into(),
                ]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.table(atoms_t, Some(PlotSpec::new("r", &["h1"])));
    out.table(val_t, None);
    let json = serde_json::to_string(&dumps).map_err(|e| CliError::Io(e.to_string()))?;
    out.json.push(("atoms.json".into(), json + "\n"));
    Ok(())
}

/// Time samples per octave for the sup over `t` in the lemma3 kernel;
/// 4 samples understate the weighted norm by about a tenth on small cycles.
const THETA_SUBSTEPS: usize = 16;

const MULTIPLIER_COLUMNS: [&str; 10] = [
    "atom_id",
    "r",
    "M",
    "h1_in",
    "h1_out",
    "nearfield",
    "farfield",
    "best_epsilon",
    "hormander_const",
    "status",
];

fn infeasible_rows(t: &mut Table, specs: &[AtomSpec], skipped: &[(usize, String)], order: usize, extra: usize) {
    for (id, msg) in skipped {
        let mut row: Vec<Cell> = vec![
            (*id).into(),
            specs[*id].radius.into(),
            order.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            "".into(),
            f64::NAN.into(),
            format!("infeasible: {msg}").into(),
        ];
        row.extend((0..extra).map(|_| Cell::Float(f64::NAN)));
        t.push(row);
    }
}

fn sort_rows(t: &mut Table) {
    t.rows.sort_by_key(|r| match r[0] {
        Cell::Int(v) => v,
        _ => i64::MAX,
    });
}

fn multiplier_verify(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let (alpha, _) = config.theorem1_exponents(Experiment::MultiplierVerify)?;
    let specs = atom_specs(model.space.n(), &config.atoms.radii, config.atoms.per_radius, config.seed);
    let quad = quadrature(model, config)?;
    let partition = make_partition(1.0)?;
    for m in multipliers(config)? {
        let rep = theorem1_experiment(&model.op, &model.decomp, &m, alpha, &specs, &quad, &partition)?;
        let name = slug(m.name());
        let mut t = Table::new(format!("multiplier_verify_{name}"), &MULTIPLIER_COLUMNS);
        for r in &rep.rows {
            t.push(vec![
                r.atom_id.into(),
                r.r.into(),
                r.order.into(),
                r.h1_in.into(),
                r.h1_out.into(),
                r.nearfield.into(),
                r.farfield.into(),
                "".into(),
                rep.hormander.value.into(),
                "ok".into(),
            ]);
        }
        infeasible_rows(&mut t, &specs, &rep.skipped, 1, 0);
        sort_rows(&mut t);
        out.table(t, Some(PlotSpec::new("r", &["h1_in", "h1_out"])));
        let mut pr = Table::new(format!("multiplier_per_radius_{name}"), &["r", "max_h1_out"]);
        for &(r, v) in &rep.per_radius_max {
            pr.push(vec![r.into(), v.into()]);
        }
        out.table(pr, Some(PlotSpec::new("r", &["max_h1_out"])));
    }
    Ok(())
}

fn molecule_check(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let (alpha, q, order) = config.theorem2_exponents(Experiment::MoleculeCheck)?;
    let specs = atom_specs(model.space.n(), &config.atoms.radii, config.atoms.per_radius, config.seed);
    let quad = quadrature(model, config)?;
    let partition = make_partition(1.0)?;
    let options = Theorem2Options { epsilon: config.epsilon.unwrap_or(0.1), q, ..Theorem2Options::default() };
    let mut columns = MULTIPLIER_COLUMNS.to_vec();
    columns.extend(["multiple", "g_margin", "split_error", "tail_ratio"]);
    for m in multipliers(config)? {
        let rep = theorem2_experiment(&model.op, &model.decomp, &m, order, alpha, &specs, &partition, &quad, &options)?;
        let name = slug(m.name());
        let mut t = Table::new(format!("molecule_check_{name}"), &columns);
        for r in &rep.rows {
            let ok = r.molecule_passed && r.best_epsilon >= options.epsilon && r.g_margin >= -hardylab::hardy::MARGIN_TOL;
            out.gate(ok, || format!("{}: atom {} is not a molecule of the requested decay", m.name(), r.atom_id));
            t.push(vec![
                r.atom_id.into(),
                r.r.into(),
                r.order.into(),
                r.h1_in.into(),
                r.h1_out.into(),
                r.nearfield.into(),
                r.farfield.into(),
                r.best_epsilon.into(),
                rep.piece_reference.into(),
                (if ok { "ok" } else { "fail" }).into(),
                r.multiple.into(),
                r.g_margin.into(),
                r.split_error.into(),
                r.tail_ratio.into(),
            ]);
        }
        infeasible_rows(&mut t, &specs, &rep.skipped, 2 * order, 4);
        sort_rows(&mut t);
        out.table(t, Some(PlotSpec::new("r", &["best_epsilon"])));
        let mut pieces = Table::new(format!("molecule_pieces_{name}"), &["j", "piece_norm", "reference"]);
        for &(j, v) in &rep.piece_norms {
            pieces.push(vec![j.into(), v.into(), rep.piece_reference.into()]);
        }
        out.table(pieces, Some(PlotSpec::new("j", &["piece_norm", "reference"])));
    }
    Ok(())
}

fn wave_check(model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let space = &model.space;
    let wave = &config.wave;
    let f = wave.function.build();
    let n = space.n();
    let mut sources = Vec::new();
    for (i, &r) in wave.radii.iter().enumerate() {
        for k in 0..wave.sources_per_radius {
            let ball = BallSpec { center: (k * n / wave.sources_per_radius.max(1) + i) % n, radius: r };
            let g = random_function_on_ball(space, ball, config.seed.wrapping_add(sources.len() as u64));
            if model.decomp.norm(&g) == 0.0 {
                return Err(CliError::Config(format!("source ball of radius {r} holds a single point")));
            }
            sources.push((g, ball));
        }
    }
    let beta = config.beta.unwrap_or(1.0);
    let gamma = config.gamma.unwrap_or(0.6);
    let rep = verify_lemma_dd1(space, &model.decomp, &f, &sources, wave.j_range, beta, gamma)?;
    let mut t = Table::new("lemma44", &["g_id", "r", "j", "lhs", "budget", "ratio"]);
    for r in &rep.rows {
        t.push(vec![r.g_id.into(), r.r.into(), r.j.into(), r.lhs.into(), r.budget.into(), r.ratio.into()]);
    }
    out.table(t, None);
    let mut pj = Table::new("lemma44_per_j", &["j", "max_ratio"]);
    for &(j, v) in &rep.per_j_max {
        pj.push(vec![j.into(), v.into()]);
    }
    out.table(pj, Some(PlotSpec::new("j", &["max_ratio"]).log_y()));

    let s_grid = wave
        .s_grid
        .clone()
        .unwrap_or_else(|| (0..=8).map(|k| k as f64 * space.diameter() / 32.0).collect());
    let (g, ball) = &sources[0];
    let speed = propagation_speed(space, &model.decomp, g, *ball, &s_grid, wave.eps)?;
    let mut st = Table::new("speed", &["s", "radius", "mass_outside"]);
    for r in &speed.rows {
        st.push(vec![r.s.into(), r.radius.into(), r.mass_outside.into()]);
    }
    out.table(st, Some(PlotSpec::new("s", &["radius"])));
    let monotone = speed.rows.windows(2).all(|w| w[1].radius >= w[0].radius);

    let mut sum = Table::new("wave_summary", &["quantity", "value"]);
    sum.push(vec!["f_sobolev_norm".into(), rep.f_norm.into()]);
    sum.push(vec!["max_ratio".into(), rep.max_ratio.into()]);
    sum.push(vec!["j_spread".into(), rep.spread.into()]);
    sum.push(vec!["sigma".into(), speed.sigma.into()]);
    sum.push(vec!["front_speed".into(), speed.front_speed.into()]);
    out.table(sum, None);
    out.gate(rep.max_ratio.is_finite(), || "weighted tail ratio is not finite".into());
    out.gate(rep.spread <= 8.0, || format!("ratio varies by {:.3e} across j, above the factor 8", rep.spread));
    out.gate(monotone, || "propagation radius decreases in s".into());
    Ok(())
}

fn kernel_check(exp: Experiment, model: &Model, config: &ExperimentConfig, out: &mut Outcome) -> Result<(), CliError> {
    let (alpha, q) = config.theorem1_exponents(exp)?;
    let beta = config.kernel_beta(alpha, q)?;
    let n_order = config.phi_order;
    let (lmin, lmax) = (model.decomp.lambda_min(), model.decomp.lambda_max());
    for m in multipliers(config)? {
        let name = slug(m.name());
        if exp == Experiment::Prop1Check {
            let times = time_grid(config, 0.25 / lmax.sqrt(), 4.0 / lmin.sqrt());
            let rep = verify_prop1(&model.space, &model.decomp, &m, beta, &times, n_order)?;
            let mut t = Table::new(format!("prop1_{name}"), &["t", "row_form", "column_form"]);
            for &(tt, r, c) in &rep.per_t {
                t.push(vec![tt.into(), r.into(), c.into()]);
            }
            out.table(t, Some(PlotSpec::new("t", &["row_form", "column_form"]).log_x()));
        } else {
            let j_range = config.j_range.unwrap_or_else(|| spectral_j_range(&model.decomp));
            let rep = verify_lemma3(&model.space, &model.decomp, &m, beta, j_range, n_order, THETA_SUBSTEPS)?;
            let mut t = Table::new(format!("lemma3_{name}"), &["j", "column_integral"]);
            for &(j, v) in &rep.per_j {
                t.push(vec![j.into(), v.into()]);
            }
            out.table(t, Some(PlotSpec::new("j", &["column_integral"])));
        }
    }
    Ok(())
}
