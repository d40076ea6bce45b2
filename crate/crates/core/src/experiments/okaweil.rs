use serde_json::json;

use super::{sub_seed, Configuration, ExperimentReport, ReportBuilder, DEFAULT_MARGIN, NEAR_BOUNDARY_SHARE};
use crate::dilation::{sample_hull, HullStrategy};
use crate::domain::MatrixPolyQ;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::mattuple::MatrixTuple;
use crate::ncalg::{count_words_up_to, Caps};
use crate::realization::Colligation;
use crate::zariski::{in_zariski, interpolate, stabilization_degree};

fn config_inputs(cfg: &Configuration) -> serde_json::Value {
    json!({
        "shape": cfg.shape,
        "d": cfg.q.d(),
        "s": cfg.q.s(),
        "r": cfg.q.r(),
        "m": cfg.col.m(),
        "mode": cfg.col.mode(),
        "level": cfg.lambda.level(),
    })
}

fn require_in_domain(q: &MatrixPolyQ, lambda: &MatrixTuple) -> Result<f64> {
    let m = q.contains(lambda, 0.0)?;
    if !m.member {
        return Err(Error::OutsideDomain { norm: m.norm });
    }
    Ok(m.norm)
}

/// Hull samples of `lambda` that lie in `D_Q`, plus the discard count.
fn hull_in_domain(q: &MatrixPolyQ, lambda: &MatrixTuple, count: usize, seed: u64) -> Result<(Vec<MatrixTuple>, usize)> {
    let mut kept = Vec::new();
    let mut discarded = 0;
    for s in sample_hull(lambda, count, seed, HullStrategy::Mix)? {
        if q.contains(&s.tuple, 0.0)?.member {
            kept.push(s.tuple);
        } else {
            discarded += 1;
        }
    }
    Ok((kept, discarded))
}

fn flag_discards(b: &mut ReportBuilder, kept: usize, discarded: usize) {
    let total = kept + discarded;
    if kept == 0 {
        b.flag("no in-domain hull samples".into());
    }
    if total > 0 && discarded as f64 > NEAR_BOUNDARY_SHARE * total as f64 {
        b.flag(format!("near-boundary base point: {discarded} of {total} hull samples outside D_Q"));
    }
}

/// Smallest `N` (up to `cap`) with pointwise tail bound at or below `target`.
fn terms_for(col: &Colligation, q: &MatrixPolyQ, z: &MatrixTuple, target: f64, cap: usize) -> Result<usize> {
    let mut n = 0;
    while n < cap && col.neumann_tail_bound(q, z, n)? > target {
        n = (n * 2).max(1);
    }
    // bisect back down between n / 2 and n
    let (mut lo, mut hi) = (n / 2, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if col.neumann_tail_bound(q, z, mid)? <= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi.min(cap))
}

/// Exact representation on a hull: a single polynomial interpolating
/// `f(lambda)` at degree `D*` must reproduce `f(y)` at every certified hull
/// sample `y`.
///
/// The non-hull control point is reported but does not enter the verdict:
/// agreement there is only unlikely, not impossible.
pub fn okaweil_exact(cfg: &Configuration, hull_count: usize, tol: f64, seed: u64) -> Result<ExperimentReport> {
    let (col, q, lambda) = (&cfg.col, &cfg.q, &cfg.lambda);
    let base_norm = require_in_domain(q, lambda)?;
    let stab = stabilization_degree(lambda, None)?;
    let target = col.eval_closed(q, lambda)?;
    let interp = interpolate(&target, lambda, stab.degree)?;
    let interp_next = interpolate(&target, lambda, stab.degree + 1)?;

    let mut inputs = config_inputs(cfg);
    inputs["seed"] = json!(seed);
    inputs["hull_count"] = json!(hull_count);
    inputs["tol"] = json!(tol);
    let mut b = ReportBuilder::new("okaweil_exact", inputs);
    b.check_le("interpolation_residual", interp.residual, tol);
    b.check_le("interpolation_stability", (interp.residual - interp_next.residual).abs(), 1e-10);

    let (samples, discarded) = hull_in_domain(q, lambda, hull_count, seed)?;
    flag_discards(&mut b, samples.len(), discarded);
    let mut sup_p: f64 = 0.0;
    let mut neumann_excess: f64 = 0.0;
    for (i, y) in samples.iter().enumerate() {
        let f = col.eval_closed(q, y)?;
        let p = interp.poly.eval(y)?;
        let defect = linalg::spectral_norm(&(&f - &p))?;
        let norm = linalg::spectral_norm(&f)?;
        sup_p = sup_p.max(linalg::spectral_norm(&p)?);
        b.record(format!("y{i}"), y.level(), defect, norm, defect <= tol * (1.0 + norm));

        let n = terms_for(col, q, y, 1e-12, 4000)?;
        let bound = col.neumann_tail_bound(q, y, n)?;
        let err = linalg::spectral_norm(&(col.eval_neumann(q, y, n, 1.0)? - &f))?;
        neumann_excess = neumann_excess.max(err - bound);
    }
    b.check_le("neumann_cross_check", neumann_excess, 1e-11);

    // Negative control: a random in-domain point of the same level, almost
    // surely outside the Zariski closure of lambda.
    let mut rng = linalg::rng_from_seed(sub_seed(seed, 1));
    let z = q.sample_point(lambda.level(), DEFAULT_MARGIN, &mut rng)?;
    let fz = col.eval_closed(q, &z)?;
    let control_defect = linalg::spectral_norm(&(&fz - interp.poly.eval(&z)?))?;
    b.control("non_hull_point", control_defect, 1e-3, false);
    let zariski = in_zariski(lambda, &z, stab.degree, 1e-8)?;

    b.details(json!({
        "stabilization_degree": stab.degree,
        "ranks": stab.ranks,
        "interpolant": interp.poly.to_string(),
        "interpolant_terms": interp.poly.num_terms(),
        "residual": interp.residual,
        "base_q_norm": base_norm,
        "hull_kept": samples.len(),
        "hull_discarded": discarded,
        "interpolant_sup_estimate": sup_p,
        "control_in_zariski": zariski.member,
        "control_zariski_defect": zariski.max_defect,
        "note": "compact sets are finite certified samples of the dilation hull of lambda",
    }));
    Ok(b.finish())
}

/// Knobs for [`uniform_convergence_table`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// Errors at or below this count as converged.
    pub floor: f64,
    /// Required error at the last `N`.
    pub target: f64,
    /// Largest word count for which `p_N` is synthesized symbolically; above
    /// it the same partial sum is evaluated numerically.
    pub synth_word_limit: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { floor: 1e-12, target: 1e-8, synth_word_limit: 4096 }
    }
}

/// `ceil(log(1e-8) / log(0.95))`, the default last `N`.
pub fn default_final_terms() -> usize {
    (1e-8f64.ln() / 0.95f64.ln()).ceil() as usize
}

/// Sup over hull samples of `|f(y) - p_N(y)|` for each `N` in `n_list`.
pub fn uniform_convergence_table(
    cfg: &Configuration,
    hull_count: usize,
    n_list: &[usize],
    seed: u64,
    opts: ConvergenceOptions,
) -> Result<ExperimentReport> {
    let (col, q, lambda) = (&cfg.col, &cfg.q, &cfg.lambda);
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("N list must be nonempty and strictly increasing".into()));
    }
    require_in_domain(q, lambda)?;
    let mut inputs = config_inputs(cfg);
    inputs["seed"] = json!(seed);
    inputs["hull_count"] = json!(hull_count);
    inputs["n_list"] = json!(n_list);
    inputs["floor"] = json!(opts.floor);
    inputs["target"] = json!(opts.target);
    let mut b = ReportBuilder::new("uniform_convergence", inputs);

    let (samples, discarded) = hull_in_domain(q, lambda, hull_count, seed)?;
    flag_discards(&mut b, samples.len(), discarded);
    let fs: Vec<CMat> = samples.iter().map(|y| col.eval_closed(q, y)).collect::<Result<_>>()?;
    let mut rho_max: f64 = 0.0;
    for y in &samples {
        rho_max = rho_max.max(col.series_ratio(q, y)?);
    }

    let last = *n_list.last().expect("nonempty");
    let words_for = |n: usize| count_words_up_to(q.d(), (n + 1) * q.degree());
    let mut table = Vec::new();
    let mut errors = Vec::new();
    for &n in n_list {
        let symbolic = words_for(n) <= opts.synth_word_limit as u128;
        let poly = if symbolic {
            let caps = Caps { max_degree: usize::MAX, max_words: opts.synth_word_limit };
            Some(col.synthesize(q, n, 1.0, caps)?)
        } else {
            None
        };
        let mut err: f64 = 0.0;
        for (i, (y, f)) in samples.iter().zip(&fs).enumerate() {
            let p = match &poly {
                Some(p) => p.eval(y)?,
                None => col.eval_neumann(q, y, n, 1.0)?,
            };
            let e = linalg::spectral_norm(&(f - p))?;
            err = err.max(e);
            let pass = n != last || e <= opts.target;
            b.record(format!("N{n}/y{i}"), y.level(), e, linalg::spectral_norm(f)?, pass);
        }
        errors.push(err);
        table.push(json!({
            "N": n,
            "error": err,
            "route": if symbolic { "synthesize" } else { "neumann" },
        }));
    }

    let mut worst_increase: f64 = 0.0;
    for w in errors.windows(2) {
        if w[1] > opts.floor && w[1] > w[0] {
            worst_increase = worst_increase.max(w[1] / w[0].max(f64::MIN_POSITIVE));
        }
    }
    b.check("monotone", worst_increase == 0.0, worst_increase, 1.0);
    b.check_le("final_error", *errors.last().expect("nonempty"), opts.target);

    // Geometric fit over the entries above the floor.
    let above: Vec<(usize, f64)> =
        n_list.iter().copied().zip(errors.iter().copied()).filter(|(_, e)| *e > opts.floor).collect();
    let ratio = match (above.first(), above.last()) {
        (Some(&(n0, e0)), Some(&(n1, e1))) if n1 > n0 => (e1 / e0).powf(1.0 / (n1 - n0) as f64),
        _ => 0.0,
    };
    b.details(json!({
        "table": table,
        "ratio_estimate": ratio,
        "max_series_ratio": rho_max,
        "hull_kept": samples.len(),
        "hull_discarded": discarded,
    }));
    Ok(b.finish())
}

/// Scaled approximants `r f_{N0, r}`: certified and sampled norm bounds and
/// approximation of `f` as `r -> 1`.
pub fn scaled_norm_experiment(
    col: &Colligation,
    q: &MatrixPolyQ,
    r_list: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if r_list.is_empty() || r_list.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidArgument("every r must lie in (0, 1)".into()));
    }
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let inputs = json!({
        "d": q.d(), "s": q.s(), "r": q.r(), "m": col.m(), "mode": col.mode(),
        "r_list": r_list, "sample_count": sample_count, "seed": seed,
    });
    let mut b = ReportBuilder::new("scaled_norm", inputs);
    let mut rng = linalg::rng_from_seed(seed);
    let points: Vec<MatrixTuple> = (0..sample_count)
        .map(|i| q.sample_point(1 + i % 4, 0.0, &mut rng))
        .collect::<Result<_>>()?;
    let mut fixed_rng = linalg::rng_from_seed(sub_seed(seed, 2));
    let fixed: Vec<(MatrixTuple, CMat)> = (0..20)
        .map(|i| {
            let z = q.sample_point(1 + i % 3, DEFAULT_MARGIN, &mut fixed_rng)?;
            let f = col.eval_closed(q, &z)?;
            Ok((z, f))
        })
        .collect::<Result<_>>()?;

    let mut sorted: Vec<f64> = r_list.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    let mut n0s = Vec::new();
    let mut approx = Vec::new();
    for &r in &sorted {
        let n0 = col.find_n0(r)?;
        let t = col.certified_tail_bound(r, n0)?;
        b.check_le(&format!("certified_r={r}"), r * (1.0 + t), 1.0);
        let rc = num_complex::Complex64::new(r, 0.0);
        let mut sup: f64 = 0.0;
        for (i, z) in points.iter().enumerate() {
            let v = col.eval_neumann(q, z, n0, r)? * rc;
            let norm = linalg::spectral_norm(&v)?;
            sup = sup.max(norm);
            b.record(format!("r={r}/z{i}"), z.level(), (norm - 1.0).max(0.0), norm, norm <= 1.0 + 1e-9);
        }
        b.check_le(&format!("sup_norm_r={r}"), sup, 1.0 + 1e-9);
        let mut err: f64 = 0.0;
        for (z, f) in &fixed {
            let v = col.eval_neumann(q, z, n0, r)? * rc;
            err = err.max(linalg::spectral_norm(&(f - v))?);
        }
        n0s.push(n0);
        approx.push(err);
        rows.push(json!({"r": r, "n0": n0, "tail_bound": t, "sup_norm": sup, "approx_error": err}));
    }
    let n0_monotone = n0s.windows(2).all(|w| w[0] <= w[1]);
    b.check("n0_nondecreasing", n0_monotone, n0s.last().copied().unwrap_or(0) as f64, f64::INFINITY);
    let approx_monotone = approx.windows(2).all(|w| w[1] <= w[0]);
    b.check("approx_error_decreasing", approx_monotone, *approx.last().expect("nonempty"), approx[0]);
    b.details(json!({ "grid": rows }));
    Ok(b.finish())
}
