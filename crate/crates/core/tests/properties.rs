use nc_hardy_core::hardy::{self, Engine, SpaceKind};
use nc_hardy_core::linalg::{self, c, CMatrix, Complex64};
use nc_hardy_core::perm::{self, Permutation};
use nc_hardy_core::weingarten::{self, BoundaryKind, WeingartenTable};
use nc_hardy_core::words::{self, l2p_norm, series_eval, word_eval, MatrixTuple, NcSeries, Word};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
}

fn word(m: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=m, 0..=max_len).prop_map(|l| Word::new(&l).unwrap())
}

fn series(m: usize, degree: usize) -> impl Strategy<Value = NcSeries> {
    prop::collection::vec((word(m, degree), complex()), 0..8)
        .prop_map(move |terms| NcSeries::from_terms(m, terms).unwrap())
}

fn matrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| CMatrix::from_vec(n, n, v) * c(scale, 0.0))
}

fn tuple(m: usize, n: usize) -> impl Strategy<Value = MatrixTuple> {
    prop::collection::vec(matrix(n, 1.0), m).prop_map(|mats| MatrixTuple::new(mats).unwrap())
}

fn series_and_tuples() -> impl Strategy<Value = (NcSeries, MatrixTuple, MatrixTuple)> {
    (1..=3usize, 1..=4usize, 1..=4usize)
        .prop_flat_map(|(m, n, k)| (series(m, 3), tuple(m, n), tuple(m, k)))
}

fn series_tuple_conjugator() -> impl Strategy<Value = (NcSeries, MatrixTuple, CMatrix)> {
    (1..=3usize, 1..=4usize).prop_flat_map(|(m, n)| (series(m, 3), tuple(m, n), matrix(n, 1.0)))
}

/// Words whose letter multiplicities fit the exact engine at N = 2.
fn recoverable_word(m: usize, ball: bool) -> impl Strategy<Value = Word> {
    word(m, 3).prop_filter("multiplicity above the smallest level", move |w| {
        let counts = w.letter_counts(m);
        if ball {
            w.len() <= 2 * m
        } else {
            counts.iter().all(|&k| k <= 2)
        }
    })
}

fn recovery_case() -> impl Strategy<Value = (NcSeries, Word, bool)> {
    (1..=3usize, any::<bool>()).prop_flat_map(|(m, ball)| {
        let terms = prop::collection::vec((recoverable_word(m, ball), complex()), 0..6);
        (
            terms.prop_map(move |t| NcSeries::from_terms(m, t).unwrap()),
            recoverable_word(m, ball),
            Just(ball),
        )
    })
}

fn fast_path_points() -> impl Strategy<Value = (Vec<MatrixTuple>, f64)> {
    (1..=2usize, 1..=3usize, 2..=4usize, 0.5..2.0f64).prop_flat_map(|(m, n, k, p)| {
        // θ ≤ p Σ ‖X_i‖_F² ≤ 2 p m n² scale² = 0.81
        let scale = 0.9 / (n as f64 * (2.0 * m as f64 * p).sqrt());
        let point = prop::collection::vec(matrix(n, scale), m).prop_map(|mats| MatrixTuple::new(mats).unwrap());
        (prop::collection::vec(point, k), Just(p))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direct_sum_commutes_with_evaluation((f, x, y) in series_and_tuples()) {
        let xy = words::direct_sum(&x, &y).unwrap();
        let lhs = series_eval(&f, &xy, 1.0).unwrap();
        let rhs = linalg::block_diag(&series_eval(&f, &x, 1.0).unwrap(), &series_eval(&f, &y, 1.0).unwrap());
        prop_assert!(linalg::relative_residual(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn similarity_commutes_with_evaluation((f, x, t) in series_tuple_conjugator()) {
        prop_assume!(linalg::condition_number(&t) <= 1e3);
        let (sx, _) = words::similarity(&x, &t).unwrap();
        let t_inv = t.clone().try_inverse().unwrap();
        let lhs = series_eval(&f, &sx, 1.0).unwrap();
        let rhs = &t * series_eval(&f, &x, 1.0).unwrap() * t_inv;
        prop_assert!(linalg::relative_residual(&lhs, &rhs) <= 1e-9);
    }

    #[test]
    fn word_eval_is_multiplicative(
        (x, u, v) in (1..=3usize, 1..=4usize).prop_flat_map(|(m, n)| (tuple(m, n), word(m, 4), word(m, 4)))
    ) {
        let lhs = word_eval(&x, &u.concat(&v)).unwrap();
        let rhs = word_eval(&x, &u).unwrap() * word_eval(&x, &v).unwrap();
        prop_assert!(linalg::relative_residual(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn l2_norm_at_unit_weight_is_coefficient_sum(f in (1..=3usize).prop_flat_map(|m| series(m, 4))) {
        let direct: f64 = f.terms().map(|(_, z)| z.norm_sqr()).sum();
        prop_assert!((l2p_norm(&f, 1.0).unwrap().powi(2) - direct).abs() <= 1e-14 * direct.max(1.0));
    }

    #[test]
    fn parseval(f in (1..=3usize).prop_flat_map(|m| series(m, 4))) {
        let m = f.alphabet();
        for kind in [SpaceKind::Polydisc(m), SpaceKind::Ball(m)] {
            let ip = hardy::inner_product(&f, &f, kind).unwrap();
            let norm = l2p_norm(&f, kind.p()).unwrap();
            prop_assert!(ip.im == 0.0);
            prop_assert!((ip.re - norm * norm).abs() <= 1e-13 * ip.re.max(1.0));
        }
    }

    #[test]
    fn radial_pairing_at_one_is_inner_product(
        (f, g) in (1..=3usize).prop_flat_map(|m| (series(m, 3), series(m, 3)))
    ) {
        let m = f.alphabet();
        for kind in [SpaceKind::Polydisc(m), SpaceKind::Ball(m)] {
            let at_one = hardy::radial_pairing(&f, &g, kind, &[1.0]).unwrap()[0].1;
            let ip = hardy::inner_product(&f, &g, kind).unwrap();
            prop_assert!((at_one - ip).norm() <= 1e-13);
        }
    }

    #[test]
    fn weingarten_is_a_class_function(
        (n, images, conj) in (1..=5usize).prop_flat_map(|n| {
            let idx: Vec<usize> = (0..n).collect();
            (Just(n), Just(idx.clone()).prop_shuffle(), Just(idx).prop_shuffle())
        }),
        dim in 5..=9usize,
    ) {
        let sigma = Permutation::from_images(&images).unwrap();
        let pi = Permutation::from_images(&conj).unwrap();
        let conjugated = pi.compose(&sigma).compose(&pi.inverse());
        let a = weingarten::weingarten(n, dim, &sigma).unwrap();
        let b = weingarten::weingarten(n, dim, &conjugated).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn unbalanced_letters_integrate_to_exact_zero(
        (w, v) in (word(2, 3), word(2, 3)),
        level in 1..=4usize,
        kind in 0..3usize,
    ) {
        prop_assume!(w.letter_counts(2) != v.letter_counts(2));
        let kind = [BoundaryKind::Polydisc(2), BoundaryKind::BallColumn(2), BoundaryKind::BallRow(2)][kind];
        prop_assert_eq!(weingarten::pairing_moment_exact(&w, &v, kind, level).unwrap(), 0.0);
    }

    #[test]
    fn polydisc_pairing_telescopes(w in word(3, 5), level in 1..=6usize) {
        let counts = w.letter_counts(3);
        prop_assume!(counts.iter().all(|&k| k <= level));
        let value = weingarten::pairing_moment_exact(&w, &w, BoundaryKind::Polydisc(3), level).unwrap();
        prop_assert_eq!(value, level as f64);
    }

    #[test]
    fn recovery_error_decays_like_inverse_square((f, w, ball) in recovery_case()) {
        let m = f.alphabet();
        let kind = if ball { SpaceKind::Ball(m) } else { SpaceKind::Polydisc(m) };
        let table = hardy::coeff_recover(&f, &w, 1.0, kind, &[2, 16], &Engine::exact()).unwrap();
        let err = |level: usize| {
            let row = table.rows.iter().find(|row| row.level == level).unwrap();
            (row.value.value() - f.coeff(&w)).norm()
        };
        let (coarse, fine) = (err(2), err(16));
        // rounding in the f64 conversion of each exact moment
        prop_assert!(fine <= coarse / 32.0 + 1e-13, "N=2 error {coarse}, N=16 error {fine}");
    }

    #[test]
    fn kernel_block_gram_is_positive((points, p) in fast_path_points(), degree in 0..=8usize) {
        let (g, tail) = hardy::kernel_block_gram(&points, p, degree).unwrap();
        let tail = tail.expect("points are in the fast-path regime");
        let rounding = 1e-12 * linalg::frobenius_norm(&g).max(1.0);
        prop_assert!(linalg::hermitian_min_eigenvalue(&g) >= -2.0 * tail - rounding);
    }

    #[test]
    fn upsilon_partial_sums_are_monotone(
        (x, p) in ((1..=3usize, 1..=3usize).prop_flat_map(|(m, n)| {
            prop::collection::vec(matrix(n, 0.7), m).prop_map(|mats| MatrixTuple::new(mats).unwrap())
        }), 0.25..2.0f64)
    ) {
        let v = hardy::upsilon_membership(&x, p, 24, 100.0).unwrap();
        for pair in v.partial_sum_norms.windows(2) {
            prop_assert!(pair[1] >= pair[0] * (1.0 - 1e-12));
        }
        if let hardy::UpsilonStatus::ConvergedWithBound(b) = v.status {
            for &s in &v.partial_sum_norms {
                prop_assert!(s <= b * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn orthonormality_up_to_length_four() {
    for m in 1..=3 {
        let words = Word::all_up_to(m, 4);
        let monos: Vec<NcSeries> =
            words.iter().map(|w| NcSeries::monomial(m, w.clone(), linalg::ONE).unwrap()).collect();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                let want = if i == j { linalg::ONE } else { linalg::ZERO };
                assert_eq!(hardy::inner_product(a, b, SpaceKind::Polydisc(m)).unwrap(), want);
                let sa = a.scaled(c((m as f64).powf(words[i].len() as f64 / 2.0), 0.0));
                let sb = b.scaled(c((m as f64).powf(words[j].len() as f64 / 2.0), 0.0));
                let ip = hardy::inner_product(&sa, &sb, SpaceKind::Ball(m)).unwrap();
                assert!((ip - want).norm() <= 1e-14, "{} {} {ip}", words[i], words[j]);
            }
        }
    }
}

#[test]
fn gram_residual_small_for_all_orders() {
    let table = WeingartenTable::new(6);
    for n in 1..=6 {
        for dim in n..=12 {
            assert!(table.gram_residual(n, dim).unwrap() <= 1e-10, "n={n} N={dim}");
        }
    }
}

#[test]
fn weingarten_decay_order() {
    // |Wg(N, σ)| N^{2n - #σ} settles as N grows
    for n in 1..=4 {
        for sigma in perm::all(n) {
            let k = sigma.cycle_count() as i32;
            let scaled: Vec<f64> = [8usize, 16, 32, 64]
                .iter()
                .map(|&d| weingarten::weingarten(n, d, &sigma).unwrap().abs() * (d as f64).powi(2 * n as i32 - k))
                .collect();
            let (a, b) = (scaled[2], scaled[3]);
            assert!((a - b).abs() <= 0.05 * b, "n={n} {sigma:?} {scaled:?}");
        }
    }
}
