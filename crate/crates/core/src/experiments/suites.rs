use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use super::{random_configuration, ExperimentReport, ReportBuilder, DEFAULT_MARGIN};
use crate::dilation::{
    compress_witness, corrupt_witness, sample_hull_with, verify_dilation_structural, verify_dilation_words,
    Corruption, DilationWitness, HullCaps, HullStrategy, CORRUPTION_EPS,
};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::mattuple::{random_tuple_with, MatrixTuple};
use crate::ncalg::{parse_poly, Caps};
use crate::zariski::{in_zariski, in_zariski_with, interpolate, stabilization_degree, IdealBasis};

/// Partial-sum errors below this are roundoff and excluded from the envelope fit.
const ENVELOPE_FLOOR: f64 = 1e-11;
const ENVELOPE_SLACK: f64 = 1e-6;
const SYMBOLIC_TOL: f64 = 1e-10;

/// Closed form against Neumann partial sums, and symbolic synthesis
/// against numeric partial sums.
///
/// The envelope ratio at a point is `max_N (err(N) / C0)^(1/(N+1))` with
/// `C0 = |C| |B| |Q(z)| / (1 - rho)`; the tail bound says it is at most
/// `rho = |Q^(z) A^|`.
pub fn realization_consistency(seed: u64, points: usize, synth_cases: usize) -> Result<ExperimentReport> {
    let inputs = json!({"seed": seed, "points": points, "synth_cases": synth_cases,
        "floor": ENVELOPE_FLOOR, "slack": ENVELOPE_SLACK, "symbolic_tol": SYMBOLIC_TOL});
    let mut b = ReportBuilder::new("realization_consistency", inputs);
    let mut rng = linalg::rng_from_seed(seed);

    let mut worst_excess: f64 = 0.0;
    let mut worst_step: f64 = 0.0;
    let mut worst_schur: f64 = 0.0;
    for i in 0..points {
        let cfg = random_configuration(rng.random_range(1..=4), DEFAULT_MARGIN, &mut rng)?;
        let (col, q, z) = (&cfg.col, &cfg.q, &cfg.lambda);
        let f = col.eval_closed(q, z)?;
        worst_schur = worst_schur.max(linalg::spectral_norm(&f)?);
        let rho = col.series_ratio(q, z)?;
        let c0 = col.c().norm() * col.b().norm() * linalg::spectral_norm(&q.eval(z)?)? / (1.0 - rho);
        let max_terms = if rho > 0.0 { ((ENVELOPE_FLOOR / c0.max(1e-300)).ln() / rho.ln()).ceil().max(1.0) as usize } else { 1 };
        let sums = col.neumann_sequence(q, z, max_terms.min(5000), 1.0)?;
        let errs: Vec<f64> = sums.iter().map(|p| linalg::spectral_norm_unchecked(&(p - &f))).collect();
        let mut envelope: f64 = 0.0;
        for (n, e) in errs.iter().enumerate() {
            if *e > ENVELOPE_FLOOR {
                envelope = envelope.max((e / c0).powf(1.0 / (n + 1) as f64));
            }
        }
        for w in errs.windows(2) {
            if w[0] > ENVELOPE_FLOOR && w[1] > ENVELOPE_FLOOR {
                worst_step = worst_step.max(w[1] / w[0]);
            }
        }
        let excess = (envelope - rho * (1.0 + ENVELOPE_SLACK)).max(0.0);
        worst_excess = worst_excess.max(excess);
        b.record(format!("neumann/{i}"), z.level(), excess, rho, excess == 0.0);
    }
    b.check_le("geometric_envelope", worst_excess, 0.0);
    b.check_le("schur_bound", worst_schur, 1.0 + 1e-9);

    let mut worst_sym: f64 = 0.0;
    for j in 0..synth_cases {
        let cfg = random_configuration(1, DEFAULT_MARGIN, &mut rng)?;
        let n_terms = j % 5;
        let r = if j % 2 == 0 { 1.0 } else { 0.7 };
        let caps = Caps { max_degree: 16, ..Caps::default() };
        let poly = cfg.col.synthesize(&cfg.q, n_terms, r, caps)?;
        for i in 0..20 {
            let z = cfg.q.sample_point(1 + i % 4, 0.0, &mut rng)?;
            let defect = linalg::spectral_norm(&(poly.eval(&z)? - cfg.col.eval_neumann(&cfg.q, &z, n_terms, r)?))?;
            worst_sym = worst_sym.max(defect);
            b.record(format!("synth/{j}/{i}"), z.level(), defect, 0.0, defect <= SYMBOLIC_TOL);
        }
    }
    b.check_le("symbolic_numeric", worst_sym, SYMBOLIC_TOL);
    b.details(json!({"max_step_ratio": worst_step}));
    Ok(b.finish())
}

/// Base point families for the dilation and ideal suites.
#[derive(Debug, Clone, Copy)]
enum BaseKind {
    Generic,
    UpperTriangular,
    Commuting,
    Jordan,
}

const BASE_KINDS: [BaseKind; 4] = [BaseKind::Generic, BaseKind::UpperTriangular, BaseKind::Commuting, BaseKind::Jordan];

fn base_point<R: Rng + ?Sized>(kind: BaseKind, rng: &mut R) -> Result<MatrixTuple> {
    let n = rng.random_range(2..=3);
    let d = rng.random_range(1..=2);
    match kind {
        BaseKind::Generic => random_tuple_with(rng.random_range(1..=3), d, 0.9, rng),
        BaseKind::UpperTriangular => {
            let x = random_tuple_with(n, d, 0.9, rng)?;
            x.map(|m| m.upper_triangle())
        }
        BaseKind::Commuting => {
            let s = linalg::random_invertible(n, 3.0, rng);
            let inv = s.clone().try_inverse().expect("well conditioned");
            let mats = (0..d)
                .map(|_| {
                    let diag = nalgebra::DVector::from_fn(n, |_, _| linalg::complex_gaussian(rng) * 0.5);
                    &s * CMat::from_diagonal(&diag) * &inv
                })
                .collect();
            MatrixTuple::new(mats)
        }
        BaseKind::Jordan => {
            let mut j = CMat::zeros(n, n);
            for i in 0..n - 1 {
                j[(i, i + 1)] = Complex64::new(0.8, 0.0);
            }
            MatrixTuple::new(vec![j])
        }
    }
}

const DILATION_TOL: f64 = 1e-9;
const HULL_ZARISKI_TOL: f64 = 1e-8;

/// Structural and word-based witness verification on valid and corrupted
/// witnesses, hull membership in the Zariski closure of the base, and
/// witness composition and direct-sum inclusions.
pub fn dilation_suite(seed: u64, witnesses: usize) -> Result<ExperimentReport> {
    let inputs = json!({"seed": seed, "witnesses": witnesses, "tol": DILATION_TOL,
        "zariski_tol": HULL_ZARISKI_TOL, "word_degrees": [5, 6]});
    let mut b = ReportBuilder::new("dilation", inputs);
    let mut rng = linalg::rng_from_seed(seed);
    let caps = HullCaps::default();
    let cycle = [HullStrategy::Unitary, HullStrategy::Summand, HullStrategy::Krylov, HullStrategy::Quotient];

    let (mut disagreements, mut unstable, mut corrupted_rejected, mut corrupted) = (0usize, 0usize, 0usize, 0usize);
    // Smallest defect over corruptions that must leave the witness set.
    let mut weakest_corruption = f64::INFINITY;
    let (mut worst_valid, mut worst_zariski): (f64, f64) = (0.0, 0.0);
    let mut base = base_point(BASE_KINDS[0], &mut rng)?;
    let mut basis = IdealBasis::new(&base, stabilization_degree(&base, None)?.degree, None)?;
    for i in 0..witnesses {
        if i % 4 == 0 {
            base = base_point(BASE_KINDS[(i / 4) % 4], &mut rng)?;
            basis = IdealBasis::new(&base, stabilization_degree(&base, None)?.degree, None)?;
        }
        let sample = sample_hull_with(&base, 1, cycle[(i / 2) % 4], caps, &mut rng)?.remove(0);
        let mut must_fail = false;
        let (y, w) = if i % 2 == 1 {
            let kind = if (i / 2) % 2 == 0 { Corruption::OffIsometry } else { Corruption::OffSemiInvariance };
            let eps = CORRUPTION_EPS[(i / 4) % 3];
            let v = &sample.witness.v;
            // Off-semi-invariance below eps^2 ~ tol stays within tolerance. A
            // square V is unitary and a scalar base leaves every subspace
            // invariant, so both remain witnesses.
            let nontrivial = v.nrows() > v.ncols() && base.level() > 1;
            must_fail = kind == Corruption::OffIsometry || (eps >= 1e-3 && nontrivial);
            corrupted += 1;
            corrupt_witness(&base, &sample.witness, kind, eps, &mut rng)?
        } else {
            (sample.tuple, sample.witness)
        };
        let structural = verify_dilation_structural(&y, &base, &w, DILATION_TOL)?;
        let w5 = verify_dilation_words(&y, &base, &w, 5, DILATION_TOL)?;
        let w6 = verify_dilation_words(&y, &base, &w, 6, DILATION_TOL)?;
        let stable = w5.ok == w6.ok;
        let agree = structural.ok == w6.ok;
        if !stable {
            unstable += 1;
        } else if !agree {
            disagreements += 1;
        }
        if i % 2 == 1 && !structural.ok && !w6.ok {
            corrupted_rejected += 1;
        }
        if must_fail {
            weakest_corruption = weakest_corruption.min(structural.defect().min(w6.defect));
        }
        if i % 2 == 0 {
            worst_valid = worst_valid.max(structural.defect());
            worst_zariski = worst_zariski.max(in_zariski_with(&basis, &y, HULL_ZARISKI_TOL)?.max_defect);
        }
        b.record(format!("w{i}"), y.level(), structural.defect(), w6.defect, !stable || agree);
    }
    b.check("structural_word_agreement", disagreements == 0, disagreements as f64, 0.0);
    b.check_le("hull_structural", worst_valid, DILATION_TOL);
    b.check_le("hull_in_zariski", worst_zariski, HULL_ZARISKI_TOL);
    b.control("corrupted_rejected", weakest_corruption, DILATION_TOL, true);

    // Chains x -> y -> z compose to a witness for z from x.
    let mut worst_chain: f64 = 0.0;
    for t in 0..10 {
        let x = base_point(BASE_KINDS[t % 4], &mut rng)?;
        let first = sample_hull_with(&x, 1, cycle[t % 4], caps, &mut rng)?.remove(0);
        let small = HullCaps { max_k: 2, max_dim: 64 };
        let second = sample_hull_with(&first.tuple, 1, cycle[(t + 1) % 4], small, &mut rng)?.remove(0);
        let w = first.witness.compose(&second.witness)?;
        let v = verify_dilation_structural(&second.tuple, &x, &w, DILATION_TOL)?;
        let direct = compress_witness(&x, &w)?;
        let drift = direct.mats().iter().zip(second.tuple.mats()).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
        worst_chain = worst_chain.max(v.defect()).max(drift);
    }
    b.check_le("transitivity", worst_chain, DILATION_TOL);

    // Both summands of a direct sum lie in its hull.
    let mut worst_sum: f64 = 0.0;
    for _ in 0..10 {
        let x = base_point(BaseKind::Generic, &mut rng)?;
        let extra = random_tuple_with(rng.random_range(1..=3), x.d(), 0.9, &mut rng)?;
        let s = x.direct_sum(&extra)?;
        let wx = DilationWitness::block_inclusion(s.level(), 0, x.level())?;
        let wb = DilationWitness::block_inclusion(s.level(), x.level(), extra.level())?;
        worst_sum = worst_sum
            .max(verify_dilation_structural(&x, &s, &wx, DILATION_TOL)?.defect())
            .max(verify_dilation_structural(&extra, &s, &wb, DILATION_TOL)?.defect());
    }
    b.check_le("direct_sum_inclusion", worst_sum, DILATION_TOL);
    b.details(json!({
        "unstable_word_verdicts": unstable,
        "corrupted": corrupted,
        "corrupted_rejected": corrupted_rejected,
    }));
    Ok(b.finish())
}

/// Ideal kernels, commutator membership, Jordan stabilization degrees and
/// interpolation of realization values.
pub fn zariski_suite(seed: u64, trials: usize) -> Result<ExperimentReport> {
    let inputs = json!({"seed": seed, "trials": trials});
    let mut b = ReportBuilder::new("zariski", inputs);
    let mut rng = linalg::rng_from_seed(seed);

    let mut kernel_ratio: f64 = 0.0;
    let mut ranks_ok = true;
    for t in 0..trials {
        let base = base_point(BASE_KINDS[t % 4], &mut rng)?;
        let stab = stabilization_degree(&base, None)?;
        let r = &stab.ranks;
        ranks_ok &= r.windows(2).all(|w| w[0] <= w[1]) && r[stab.degree] == r[stab.degree + 1];
        let basis = IdealBasis::new(&base, stab.degree + 1, None)?;
        let worst = basis
            .polys()
            .iter()
            .map(|p| p.eval(&base).map(|m| linalg::spectral_norm_unchecked(&m)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let limit = 10.0 * basis.rank_tol();
        kernel_ratio = kernel_ratio.max(worst / limit);
        b.record(format!("kernel/{t}"), base.level(), worst, limit, worst <= limit);
    }
    b.check_le("kernel_vanishes", kernel_ratio, 1.0);
    b.check("rank_monotone", ranks_ok, 0.0, 0.0);

    let comm = parse_poly("x1*x2 - x2*x1", 2)?;
    let mut worst_comm: f64 = 0.0;
    for t in 0..trials.min(10) {
        let mut base = base_point(BaseKind::Commuting, &mut rng)?;
        if base.d() == 1 {
            base = MatrixTuple::new(vec![base.coord(0).clone(), base.coord(0) * base.coord(0)])?;
        }
        let basis = IdealBasis::new(&base, stabilization_degree(&base, None)?.degree.max(2), None)?;
        let res = basis.span_residual(&comm).unwrap_or(f64::INFINITY);
        let lifted = in_zariski_with(&basis, &base.direct_sum(&base)?, 1e-8)?;
        worst_comm = worst_comm.max(res);
        b.record(format!("commutator/{t}"), base.level(), res, lifted.max_defect, res <= 1e-8 && lifted.member);
    }
    b.check_le("commutator_in_ideal", worst_comm, 1e-8);

    for n in 2..=4 {
        let mut j = CMat::zeros(n, n);
        for i in 0..n - 1 {
            j[(i, i + 1)] = Complex64::new(1.0, 0.0);
        }
        let stab = stabilization_degree(&MatrixTuple::new(vec![j])?, None)?;
        b.check(&format!("jordan_{n}"), stab.degree == n - 1, stab.degree as f64, (n - 1) as f64);
    }

    let mut worst_res: f64 = 0.0;
    let mut worst_stab: f64 = 0.0;
    for t in 0..trials {
        let cfg = random_configuration(rng.random_range(1..=3), DEFAULT_MARGIN, &mut rng)?;
        let target = cfg.col.eval_closed(&cfg.q, &cfg.lambda)?;
        let d_star = stabilization_degree(&cfg.lambda, None)?.degree;
        let at = interpolate(&target, &cfg.lambda, d_star)?;
        let next = interpolate(&target, &cfg.lambda, d_star + 1)?;
        worst_res = worst_res.max(at.residual);
        worst_stab = worst_stab.max((at.residual - next.residual).abs());
        b.record(format!("interpolate/{t}"), cfg.lambda.level(), at.residual, linalg::spectral_norm(&target)?, at.residual <= 1e-8);
    }
    b.check_le("interpolation_residual", worst_res, 1e-8);
    b.check_le("interpolation_stability", worst_stab, 1e-10);

    // x1 lies in the ideal of [[0]] and does not vanish at [[1]].
    let zero = MatrixTuple::scalars(&[Complex64::new(0.0, 0.0)])?;
    let one = MatrixTuple::scalars(&[Complex64::new(1.0, 0.0)])?;
    let v = in_zariski(&zero, &one, 1, 1e-8)?;
    b.control("point_outside_closure", v.max_defect, 1e-8, true);
    Ok(b.finish())
}
