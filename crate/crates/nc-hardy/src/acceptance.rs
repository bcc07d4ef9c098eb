//! The acceptance suite. Each criterion runs at its stated tolerances and
//! reports one line; the `acceptance` test target and `nc-hardy selftest`
//! both drive [`run_all`].

use std::fmt::Display;
use std::time::Instant;

use nc_hardy_core::haar::{self, Executor, FreeFactor, McPlan, SeededStream};
use nc_hardy_core::hardy::{self, Engine, SpaceKind, UpsilonStatus};
use nc_hardy_core::linalg::{self, c, CMatrix, Complex64, ONE, ZERO};
use nc_hardy_core::perm::Permutation;
use nc_hardy_core::weingarten::{BigInt, BigRational, BoundaryKind, WeingartenTable};
use nc_hardy_core::words::{self, series_eval, word_eval, MatrixTuple, NcSeries, Word};
use rand::Rng;
use serde::Serialize;

pub struct Settings<'a> {
    pub table: &'a WeingartenTable,
    pub exec: &'a dyn Executor,
    pub seed: u64,
    pub mc_samples: usize,
    pub freeness_samples: usize,
}

impl<'a> Settings<'a> {
    pub fn standard(table: &'a WeingartenTable, exec: &'a dyn Executor, seed: u64) -> Self {
        Settings { table, exec, seed, mc_samples: 100_000, freeness_samples: 10_000 }
    }

    fn plan(&self, criterion: u64, samples: usize) -> McPlan {
        McPlan::new(samples, SeededStream::with_stream(self.seed, criterion))
    }

    fn rng(&self, criterion: u64) -> impl Rng {
        SeededStream::with_stream(self.seed, 1000 + criterion).rng()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Findings that do not depend on the seed.
    pub exact: Vec<String>,
    /// Findings from sampling.
    pub sampled: Vec<String>,
    pub budget_seconds: f64,
    #[serde(skip)]
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2}: {} ({:.2} s, budget {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.budget_seconds
        )
    }
}

#[derive(Default)]
struct Tally {
    ok: bool,
    exact: Vec<String>,
    sampled: Vec<String>,
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

impl Tally {
    fn exact(&mut self, ok: bool, msg: impl Display) {
        self.ok &= ok;
        self.exact.push(format!("{msg} [{}]", tag(ok)));
    }

    fn sampled(&mut self, ok: bool, msg: impl Display) {
        self.ok &= ok;
        self.sampled.push(format!("{msg} [{}]", tag(ok)));
    }
}

type Body = fn(&Settings<'_>, &mut Tally) -> nc_hardy_core::Result<()>;

fn run(id: u8, title: &'static str, budget_seconds: f64, s: &Settings<'_>, body: Body) -> Outcome {
    let start = Instant::now();
    let mut tally = Tally { ok: true, ..Tally::default() };
    if let Err(e) = body(s, &mut tally) {
        tally.exact(false, format!("error: {e}"));
    }
    let seconds = start.elapsed().as_secs_f64();
    if seconds > budget_seconds {
        tally.ok = false;
    }
    Outcome { id, title, passed: tally.ok, exact: tally.exact, sampled: tally.sampled, budget_seconds, seconds }
}

pub const CRITERIA: [(u8, &str, f64); 10] = [
    (1, "Weingarten values and Gram residual", 10.0),
    (2, "boundary norm of X1X2 + X2X1 on the polydisc", 60.0),
    (3, "exact vanishing for unequal word lengths", 10.0),
    (4, "asymptotic orthogonality of X1X2 and X2X1", 10.0),
    (5, "ball boundary normalization", 300.0),
    (6, "coefficient recovery", 60.0),
    (7, "orthonormal monomials", 1.0),
    (8, "nc-function axioms", 10.0),
    (9, "Upsilon bound, kernel positivity, reproducing property", 60.0),
    (10, "freeness diagnostic", 300.0),
];

pub fn run_criterion(id: u8, s: &Settings<'_>) -> Outcome {
    let bodies: [Body; 10] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10];
    let (_, title, budget) = CRITERIA[id as usize - 1];
    run(id, title, budget, s, bodies[id as usize - 1])
}

pub fn run_all(s: &Settings<'_>) -> Vec<Outcome> {
    (1..=10).map(|id| run_criterion(id, s)).collect()
}

fn word(letters: &[usize]) -> Word {
    Word::new(letters).expect("valid letters")
}

fn remark_poly() -> NcSeries {
    NcSeries::from_terms(2, [(word(&[1, 2]), ONE), (word(&[2, 1]), ONE)]).expect("valid series")
}

fn c1(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let id = Permutation::identity(2);
    let swap = Permutation::from_cycles(2, &[&[1, 2]])?;
    let mut worst = 0.0_f64;
    for n in 2..=8usize {
        let nf = n as f64;
        let a = s.table.weingarten(2, n, &id)?;
        let b = s.table.weingarten(2, n, &swap)?;
        worst = worst.max((a - 1.0 / (nf * nf - 1.0)).abs());
        worst = worst.max((b + 1.0 / (nf * (nf * nf - 1.0))).abs());
    }
    t.exact(worst <= 1e-10, format!("Wg(N, id) and Wg(N, (1 2)) against 1/(N²-1), -1/(N(N²-1)) for N = 2..8: max error {worst:.2e}"));
    let mut worst = (0.0_f64, 0, 0);
    for n in 1..=5usize {
        for dim in n..=12usize {
            let r = s.table.gram_residual(n, dim)?;
            if r >= worst.0 {
                worst = (r, n, dim);
            }
        }
    }
    t.exact(
        worst.0 <= 1e-10,
        format!("Gram residual over n <= 5, n <= N <= 12: max {:.2e} at n = {}, N = {}", worst.0, worst.1, worst.2),
    );
    Ok(())
}

fn c2(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let f = remark_poly();
    let kind = BoundaryKind::Polydisc(2);
    for n in [1usize, 2, 4, 8] {
        let v = s.table.sesquilinear_moment_exact(&f, &f, 1.0, kind, n)?;
        let want = 2.0 * (1.0 + 1.0 / (n * n) as f64);
        t.exact((v - c(want, 0.0)).norm() <= 1e-10, format!("N = {n}: {:.12} vs 2(1 + 1/N²) = {want:.12}", v.re));
    }
    for r in [0.5, 0.9] {
        for n in [2usize, 4] {
            let v = s.table.sesquilinear_moment_exact(&f, &f, r, kind, n)?;
            let want = r.powi(4) * 2.0 * (1.0 + 1.0 / (n * n) as f64);
            t.exact((v - c(want, 0.0)).norm() <= 1e-10, format!("r = {r}, N = {n}: {:.12} vs r⁴·2(1 + 1/N²)", v.re));
        }
    }
    let est = haar::mc_pairing(&f, &f, 1.0, kind, 4, &s.plan(2, s.mc_samples), s.exec)?;
    t.sampled(
        est.agrees_with(c(2.125, 0.0), 3.0),
        format!(
            "Monte Carlo at N = 4: {:.5} ± {:.5} ({} samples), {:.2} SE from 2.125",
            est.mean.re,
            est.std_error,
            est.samples,
            est.deviation(c(2.125, 0.0))
        ),
    );
    Ok(())
}

fn c3(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let words = Word::all_up_to(2, 3);
    for kind in [BoundaryKind::Polydisc(2), BoundaryKind::BallColumn(2), BoundaryKind::BallRow(2)] {
        let mut pairs = 0;
        let mut nonzero = 0;
        for n in [2usize, 4] {
            for w in &words {
                for v in words.iter().filter(|v| v.len() != w.len()) {
                    pairs += 1;
                    if s.table.pairing_moment_exact(w, v, kind, n)? != 0.0 {
                        nonzero += 1;
                    }
                }
            }
        }
        t.exact(nonzero == 0, format!("{kind:?}: {pairs} pairs with |w| != |v| at N = 2, 4, {nonzero} nonzero"));
    }
    Ok(())
}

fn c4(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let (w, v) = (word(&[1, 2]), word(&[2, 1]));
    let grid = [2usize, 4, 8, 16];
    let mut scaled = Vec::new();
    for &n in &grid {
        let value = s.table.pairing_moment_exact(&w, &v, BoundaryKind::Polydisc(2), n)?;
        let want = 1.0 / n as f64;
        t.exact((value - want).abs() <= 1e-14 * want, format!("N = {n}: {value:.15} vs 1/N"));
        scaled.push(value / (n as f64).sqrt());
    }
    for (k, pair) in scaled.windows(2).enumerate() {
        let order = (pair[1] / pair[0]).ln() / (grid[k + 1] as f64 / grid[k] as f64).ln();
        t.exact(
            (order + 1.5).abs() <= 0.15 && pair[1] < pair[0],
            format!("N = {} -> {}: N^(-1/2)·value decays with order {order:.4} (expected -1.5)", grid[k], grid[k + 1]),
        );
    }
    Ok(())
}

fn c5(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let grid = [2usize, 4, 8];
    for m in [2usize, 3] {
        let kind = BoundaryKind::BallColumn(m);
        let x1 = word(&[1]);
        for &n in &grid {
            let exact = s.table.pairing_moment_rational(&x1, &x1, kind, n)? / BigInt::from(n);
            let want = BigRational::new(BigInt::from(1), BigInt::from(m));
            t.exact(exact == want, format!("m = {m}, N = {n}: (1/N)∫Tr(X1*X1) = {exact} exactly"));
        }
        let target = 1.0 / (m * m) as f64;
        for w in Word::all_of_length(m, 2) {
            let mut gaps = Vec::new();
            for &n in &grid {
                gaps.push((s.table.pairing_moment_exact(&w, &w, kind, n)? / n as f64 - target).abs() / target);
            }
            let monotone = gaps.windows(2).all(|p| p[1] < p[0]);
            let last = *gaps.last().expect("grid is nonempty");
            t.exact(
                monotone && last <= 0.15,
                format!("m = {m}, w = {w}: relative gaps to 1/m² over N = 2, 4, 8: {gaps:.4?}"),
            );
        }
        let probe: Vec<Word> = vec![x1.clone(), word(&[1, 1]), word(&[1, 2])];
        for &n in &grid {
            let plan = s.plan(5, s.mc_samples).derive((m * 100 + n) as u64);
            let ests = haar::estimate_many(kind, n, &plan, s.exec, probe.len(), &|x, out| {
                for (slot, w) in out.iter_mut().zip(&probe) {
                    let xw = word_eval(x, w).expect("alphabet fits");
                    *slot = linalg::trace(&(xw.adjoint() * &xw)) / n as f64;
                }
            })?;
            for (w, est) in probe.iter().zip(&ests) {
                let exact = s.table.pairing_moment_exact(w, w, kind, n)? / n as f64;
                t.sampled(
                    est.agrees_with(c(exact, 0.0), 3.0),
                    format!(
                        "m = {m}, N = {n}, w = {w}: MC {:.5} ± {:.5} vs exact {exact:.5} ({:.2} SE)",
                        est.mean.re,
                        est.std_error,
                        est.deviation(c(exact, 0.0))
                    ),
                );
            }
        }
    }
    Ok(())
}

fn c6(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let f = NcSeries::from_terms(
        2,
        [(word(&[1, 2]), ONE), (word(&[2, 1]), c(2.0, 0.0)), (word(&[1]), c(-0.5, 0.0))],
    )?;
    let engine = Engine::Exact(s.table);
    let grid = [2usize, 4, 8, 16];
    for r in [1.0, 0.5] {
        for (w, &fw) in f.terms() {
            let table = hardy::coeff_recover(&f, w, r, SpaceKind::Polydisc(2), &grid, &engine)?;
            let err = |n: usize| {
                let row = table.rows.iter().find(|row| row.level == n).expect("on grid");
                (row.value.value() - fw).norm()
            };
            let (e2, e16) = (err(2), err(16));
            t.exact(
                e16 <= e2 / 32.0,
                format!("r = {r}, w = {w}: error {e2:.3e} at N = 2, {e16:.3e} at N = 16"),
            );
        }
        let mut zeros = 0;
        let mut checked = 0;
        for w in Word::all_up_to(2, 3).into_iter().filter(|w| w.is_empty() || w.len() == 3) {
            let table = hardy::coeff_recover(&f, &w, r, SpaceKind::Polydisc(2), &grid, &engine)?;
            checked += table.rows.len();
            zeros += table.rows.iter().filter(|row| row.value.value() == ZERO && row.value.is_exact()).count();
        }
        t.exact(zeros == checked, format!("r = {r}: {zeros} of {checked} mismatched-length recoveries are exactly 0"));
    }
    Ok(())
}

fn c7(_: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    for m in 1..=3usize {
        let words = Word::all_up_to(m, 3);
        let mut poly_off = 0;
        let mut ball_worst = 0.0_f64;
        for u in &words {
            for v in &words {
                let fu = NcSeries::monomial(m, u.clone(), ONE)?;
                let fv = NcSeries::monomial(m, v.clone(), ONE)?;
                let want = if u == v { ONE } else { ZERO };
                if hardy::inner_product(&fu, &fv, SpaceKind::Polydisc(m))? != want {
                    poly_off += 1;
                }
                let su = fu.scaled(c((m as f64).sqrt().powi(u.len() as i32), 0.0));
                let sv = fv.scaled(c((m as f64).sqrt().powi(v.len() as i32), 0.0));
                let ip = hardy::inner_product(&su, &sv, SpaceKind::Ball(m))?;
                ball_worst = ball_worst.max((ip - want).norm());
            }
        }
        let k = words.len();
        t.exact(poly_off == 0, format!("m = {m}: polydisc Gram of {k} monomials, {poly_off} entries differ from identity"));
        // m^{|w|/2} is irrational for odd |w|, so allow its rounding
        t.exact(
            ball_worst <= 4.0 * f64::EPSILON,
            format!("m = {m}: ball Gram of rescaled monomials, max deviation {ball_worst:.1e}"),
        );
    }
    Ok(())
}

fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| random_complex(rng))
}

fn random_tuple<R: Rng>(rng: &mut R, m: usize, n: usize) -> MatrixTuple {
    MatrixTuple::new((0..m).map(|_| random_matrix(rng, n)).collect()).expect("square blocks")
}

fn random_series<R: Rng>(rng: &mut R, m: usize, degree: usize) -> NcSeries {
    let mut f = NcSeries::zero(m);
    for _ in 0..rng.random_range(1..=8) {
        let len = rng.random_range(0..=degree);
        let letters: Vec<usize> = (0..len).map(|_| rng.random_range(1..=m)).collect();
        f.add_term(word(&letters), random_complex(rng)).expect("letters in range");
    }
    f
}

/// Rescales `x` so that `λ_max(p Σ X_i^* X_i) = theta`.
fn with_theta(x: &MatrixTuple, p: f64, theta: f64) -> MatrixTuple {
    let current = words::spectral_theta(x, p);
    x.scaled((theta / current).sqrt())
}

fn c8(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let mut rng = s.rng(8);
    let (mut worst_sum, mut worst_sim, mut worst_cond) = (0.0_f64, 0.0_f64, 0.0_f64);
    let trials = 200;
    for _ in 0..trials {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=4);
        let f = random_series(&mut rng, m, 3);
        let x = random_tuple(&mut rng, m, n);
        let y = random_tuple(&mut rng, m, k);
        let lhs = series_eval(&f, &words::direct_sum(&x, &y)?, 1.0)?;
        let rhs = linalg::block_diag(&series_eval(&f, &x, 1.0)?, &series_eval(&f, &y, 1.0)?);
        worst_sum = worst_sum.max(linalg::relative_residual(&lhs, &rhs));

        let tm = loop {
            let tm = random_matrix(&mut rng, n);
            if linalg::condition_number(&tm) <= 1e3 {
                break tm;
            }
        };
        let (sx, cond) = words::similarity(&x, &tm)?;
        worst_cond = worst_cond.max(cond);
        let t_inv = tm.clone().try_inverse().expect("well conditioned");
        let lhs = series_eval(&f, &sx, 1.0)?;
        let rhs = &tm * series_eval(&f, &x, 1.0)? * t_inv;
        worst_sim = worst_sim.max(linalg::relative_residual(&lhs, &rhs));
    }
    t.exact(worst_sum <= 1e-9, format!("{trials} direct-sum trials: max relative residual {worst_sum:.2e}"));
    t.exact(
        worst_sim <= 1e-9,
        format!("{trials} similarity trials (condition <= {worst_cond:.0}): max relative residual {worst_sim:.2e}"),
    );
    Ok(())
}

fn c9(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let mut rng = s.rng(9);
    let mut dominated = 0;
    let mut fast = 0;
    for _ in 0..50 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=4);
        let p = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let theta = rng.random_range(0.05..=0.8);
        let x = with_theta(&random_tuple(&mut rng, m, n), p, theta);
        let v = hardy::upsilon_membership(&x, p, 12, hardy::DEFAULT_DIVERGENCE_THRESHOLD)?;
        if let UpsilonStatus::ConvergedWithBound(b) = v.status {
            fast += 1;
            if v.partial_sum_norms.iter().all(|&s| s <= b) && (b - 1.0 / (1.0 - v.theta)).abs() <= 1e-12 * b {
                dominated += 1;
            }
        }
    }
    t.exact(
        fast == 50 && dominated == 50,
        format!("50 tuples with θ <= 0.8: {fast} on the fast path, {dominated} with 1/(1-θ) above all partial sums to degree 12"),
    );

    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let p = [1.0, 2.0][rng.random_range(0..2)];
        let f = random_series(&mut rng, 2, 3);
        let y = with_theta(&random_tuple(&mut rng, 2, 2), p, rng.random_range(0.05..0.95));
        let e1 = [random_complex(&mut rng), random_complex(&mut rng)];
        let e2 = [random_complex(&mut rng), random_complex(&mut rng)];
        worst = worst.max(hardy::reproduce_check(&f, &y, &e1, &e2, p)?.residual);
    }
    t.exact(worst <= 1e-10, format!("50 reproducing-property instances: max residual {worst:.2e}"));

    let mut min_margin = f64::INFINITY;
    let mut tail_ok = true;
    for _ in 0..10 {
        let p = [1.0, 2.0][rng.random_range(0..2)];
        let pts: Vec<MatrixTuple> = (0..3)
            .map(|_| with_theta(&random_tuple(&mut rng, 2, 2), p, rng.random_range(0.05..=0.8)))
            .collect();
        let (gram, tail) = hardy::kernel_block_gram(&pts, p, 12)?;
        let tail = tail.expect("all points on the fast path");
        let lowest = linalg::hermitian_min_eigenvalue(&gram);
        min_margin = min_margin.min(lowest + 2.0 * tail);
        let truncated = hardy::kernel_eval(&pts[0], &pts[1], p, 12)?;
        let long = hardy::kernel_eval(&pts[0], &pts[1], p, 80)?;
        let gap = linalg::operator_norm(&(long.value - &truncated.value));
        tail_ok &= gap <= truncated.tail_bound.expect("fast path") + 1e-12;
    }
    t.exact(
        min_margin >= 0.0,
        format!("10 kernel block Grams of 3 points at degree 12: min(λ_min + 2·tail) = {min_margin:.3e}"),
    );
    t.exact(tail_ok, "kernel tail bound dominates the degree 13..80 remainder");
    Ok(())
}

fn c10(s: &Settings<'_>, t: &mut Tally) -> nc_hardy_core::Result<()> {
    let factors = [
        FreeFactor::monomial(1, 1),
        FreeFactor::monomial(2, 1),
        FreeFactor::monomial(1, 1),
        FreeFactor::monomial(2, 1),
    ];
    let report = haar::freeness_diagnostic(
        &factors,
        &[4, 8, 16, 32],
        s.freeness_samples,
        SeededStream::with_stream(s.seed, 10),
        s.exec,
    )?;
    for row in &report.rows {
        t.sampled(
            true,
            format!(
                "N = {}: |mean| {:.3e}, SE {:.3e}, bound |mean| + 3 SE = {:.3e}",
                row.level,
                row.estimate.mean.norm(),
                row.estimate.std_error,
                row.upper_bound
            ),
        );
    }
    t.sampled(
        report.bound_monotone,
        format!(
            "confidence bound decreases along N = 4, 8, 16, 32 (|mean| decreased on {} of 3 steps, log-log slope {:.2})",
            report.decreasing_pairs, report.log_slope
        ),
    );
    let last = &report.rows.last().expect("grid is nonempty").estimate;
    t.sampled(
        last.agrees_with(ZERO, 3.0),
        format!("N = 32: {:.2} SE from 0 ({} samples)", last.deviation(ZERO), last.samples),
    );
    Ok(())
}
