use gmdgrid_ots::lp::{lp_solve, LinearProgram, LpStatus};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Minimum over all basic feasible points: every choice of `n` tight
/// constraints among rows and column bounds, solved as a square system.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_cols();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.col_lower[j]));
        planes.push((e, lp.col_upper[j]));
    }
    for r in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coeffs {
            a[j] += v;
        }
        for b in [r.lower, r.upper] {
            if b.is_finite() {
                planes.push((a.clone(), b));
            }
        }
    }
    let feasible = |x: &DVector<f64>| {
        let ok_cols = (0..n).all(|j| x[j] >= lp.col_lower[j] - 1e-9 && x[j] <= lp.col_upper[j] + 1e-9);
        ok_cols && lp.activity(x.as_slice()).iter().zip(&lp.rows).all(|(a, r)| *a >= r.lower - 1e-9 && *a <= r.upper + 1e-9)
    };
    let mut best: Option<f64> = None;
    let m = planes.len();
    let mut pick = (0..n).collect::<Vec<usize>>();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| planes[pick[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| planes[pick[i]].1);
        if let Some(x) = a.lu().solve(&b) {
            if x.iter().all(|v| v.is_finite()) && feasible(&x) {
                let obj = lp.objective(x.as_slice());
                best = Some(best.map_or(obj, |o: f64| o.min(obj)));
            }
        }
        // next n-combination of m
        let mut k = n;
        while k > 0 && pick[k - 1] == m - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        pick[k - 1] += 1;
        for i in k..n {
            pick[i] = pick[i - 1] + 1;
        }
    }
    best
}

fn random_lp(rng: &mut StdRng) -> LinearProgram {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(0..=5);
    let mut lp = LinearProgram::default();
    for _ in 0..n {
        let lo = rng.gen_range(-5.0..0.0);
        lp.add_col(rng.gen_range(-3.0..3.0), lo, lo + rng.gen_range(0.5..8.0));
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, rng.gen_range(-2.0..2.0)));
            }
        }
        let c = rng.gen_range(-3.0..3.0);
        let (lo, hi) = match rng.gen_range(0..3) {
            0 => (f64::NEG_INFINITY, c),
            1 => (c, f64::INFINITY),
            _ => (c - rng.gen_range(0.0..2.0), c),
        };
        lp.add_row(coeffs, lo, hi);
    }
    lp.offset = rng.gen_range(-1.0..1.0);
    lp
}

#[test]
fn random_programs_match_vertex_enumeration() {
    let mut rng = StdRng::seed_from_u64(17);
    let (mut optimal, mut infeasible) = (0, 0);
    for trial in 0..300 {
        let lp = random_lp(&mut rng);
        let sol = lp_solve(&lp).unwrap();
        match vertex_oracle(&lp) {
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal, "trial {trial}");
                assert!((sol.objective - best).abs() < 1e-7 * best.abs().max(1.0), "trial {trial}: {} vs {best}", sol.objective);
                assert!(lp.residual(&sol.primal) <= 1e-7);
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, LpStatus::Infeasible, "trial {trial}");
                infeasible += 1;
            }
        }
    }
    assert!(optimal > 100 && infeasible > 5, "{optimal} / {infeasible}");
}
