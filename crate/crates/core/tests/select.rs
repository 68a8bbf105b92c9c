use approx::assert_abs_diff_eq;
use laad::data;
use laad::reserve::{build_design, link_ratios, ReserveOptions};
use laad::select::*;
use laad::solver::coordinate_descent;
use laad::{CdOptions, Dataset, PenaltySpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn problem(seed: u64, n: usize, p: usize, signal: f64, noise: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DVector::from_fn(p, |j, _| if j < 3 { signal * (j + 1) as f64 } else { 0.0 });
    let e = DVector::from_fn(n, |_, _| noise * rng.sample::<f64, _>(StandardNormal));
    let y = &x * beta + e;
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(x, y, names).unwrap()
}

#[test]
fn unpenalized_edf_is_column_count() {
    let d = problem(1, 30, 6, 1.0, 1.0);
    let edf = empirical_edf(&d, &PenaltySpec::none(), &[1.0; 6], None, &CdOptions::default()).unwrap();
    assert_abs_diff_eq!(edf, 6.0, epsilon = 1e-6);
}

#[test]
fn huge_strength_has_no_edf() {
    let d = problem(2, 30, 6, 1.0, 1.0);
    let edf = empirical_edf(&d, &PenaltySpec::lasso(1e6).unwrap(), &[1.0; 6], None, &CdOptions::default()).unwrap();
    assert_abs_diff_eq!(edf, 0.0, epsilon = 1e-9);
}

#[test]
fn lasso_edf_counts_nonzeros() {
    let opts = CdOptions::default();
    for seed in 0..20 {
        let d = problem(100 + seed, 50, 10, 1.0, 1.0);
        let spec = PenaltySpec::lasso(1.0 + 0.1 * seed as f64).unwrap();
        let fit = coordinate_descent(&d, &spec, &[1.0; 10], &opts).unwrap();
        let edf = empirical_edf(&d, &spec, &[1.0; 10], None, &opts).unwrap();
        assert!(
            (edf - fit.nonzero_count() as f64).abs() <= 1.0,
            "seed {seed}: edf {edf}, nonzero {}",
            fit.nonzero_count()
        );
    }
}

#[test]
fn edf_decreases_along_the_grid() {
    let d = problem(7, 40, 8, 0.5, 1.0);
    let spec = PenaltySpec::lasso(1.0).unwrap();
    let w = [1.0; 8];
    let opts = CdOptions::default();
    let grid = default_grid(&d, &spec, &w, &opts, 12, 1e-3).unwrap();
    let edfs: Vec<f64> = grid
        .iter()
        .map(|&r| empirical_edf(&d, &spec.with_strength(r), &w, None, &opts).unwrap())
        .collect();
    // Grid is descending in strength, so edf should rise along it.
    for pair in edfs.windows(2) {
        assert!(pair[1] >= pair[0] - 0.5, "{edfs:?}");
    }
}

#[test]
fn edf_rejects_bad_eps() {
    let d = problem(3, 20, 3, 1.0, 1.0);
    assert!(empirical_edf(&d, &PenaltySpec::none(), &[1.0; 3], Some(0.0), &CdOptions::default()).is_err());
}

#[test]
fn reserving_laad_edf() {
    let tri = data::triangles().unwrap();
    let design = build_design(&link_ratios(&tri).unwrap(), 2).unwrap();
    let opts = ReserveOptions::default();
    let spec = PenaltySpec::laad(1.005261f64.ln()).unwrap();
    let edf = empirical_edf(&design.dataset, &spec, &design.weights, None, &opts.cd).unwrap();
    assert!((edf - 12.105).abs() <= 2.0, "edf {edf}");
}

#[test]
fn grid_shape() {
    let d = problem(4, 40, 5, 1.0, 1.0);
    let w = [1.0; 5];
    let opts = CdOptions::default();
    let lasso = PenaltySpec::lasso(1.0).unwrap();
    let grid = default_grid(&d, &lasso, &w, &opts, GRID_POINTS, GRID_RATIO).unwrap();
    assert_eq!(grid.len(), GRID_POINTS);
    assert!(grid.windows(2).all(|p| p[1] < p[0]));
    assert_abs_diff_eq!(grid[GRID_POINTS - 1] / grid[0], GRID_RATIO, epsilon = 1e-12);

    // The top of the grid zeroes every coefficient, and only just.
    let top = max_strength(&d, &lasso, &w, &opts).unwrap();
    let at = coordinate_descent(&d, &lasso.with_strength(top * 1.0001), &w, &opts).unwrap();
    assert_eq!(at.nonzero_count(), 0);
    let below = coordinate_descent(&d, &lasso.with_strength(top * 0.99), &w, &opts).unwrap();
    assert!(below.nonzero_count() > 0);

    assert!(default_grid(&d, &PenaltySpec::ridge(1.0).unwrap(), &w, &opts, 10, 0.1).is_err());
    assert!(default_grid(&d, &lasso, &w, &opts, 1, 0.1).is_err());
}

#[test]
fn laad_grid_starts_in_the_convergent_regime() {
    let d = problem(5, 40, 5, 20.0, 1.0);
    let w = [1.0; 5];
    let opts = CdOptions::default();
    let laad = PenaltySpec::laad(1.0).unwrap();
    assert!(max_strength(&d, &laad, &w, &opts).unwrap() > 1.0);
    let grid = default_grid(&d, &laad, &w, &opts, 10, 0.01).unwrap();
    assert_eq!(grid[0], 1.0);
}

#[test]
fn folds_are_reproducible() {
    assert_eq!(fold_assignment(50, 5, 9).unwrap(), fold_assignment(50, 5, 9).unwrap());
    assert!(fold_assignment(4, 5, 0).is_err());
}

#[test]
fn pure_noise_prefers_heavy_penalties() {
    let opts = CdOptions::default();
    let spec = PenaltySpec::laad(1.0).unwrap();
    let w = [1.0; 5];
    for seed in 0..20 {
        let d = problem(1000 + seed, 60, 5, 0.0, 1.0);
        let grid = default_grid(&d, &spec, &w, &opts, 20, 1e-3).unwrap();
        let cv = kfold_cv(&d, &spec, &w, &grid, 5, seed, &opts).unwrap();
        let mut sorted = grid.clone();
        sorted.sort_by(f64::total_cmp);
        let median = 0.5 * (sorted[9] + sorted[10]);
        assert!(cv.r_selected >= median, "seed {seed}: {} < {median}", cv.r_selected);
    }
}

#[test]
fn noiseless_data_prefers_the_lightest_penalty() {
    let d = problem(8, 40, 5, 1.0, 0.0);
    let w = [1.0; 5];
    let spec = PenaltySpec::lasso(1.0).unwrap();
    let opts = CdOptions { tol: 1e-12, ..CdOptions::default() };
    let grid = default_grid(&d, &spec, &w, &opts, 15, 1e-4).unwrap();
    let cv = kfold_cv(&d, &spec, &w, &grid, 5, 1, &opts).unwrap();
    assert_eq!(cv.r_min, *grid.last().unwrap());
}

#[test]
fn cv_result_invariants() {
    let d = problem(9, 50, 6, 1.0, 1.0);
    let w = [1.0; 6];
    let spec = PenaltySpec::scad(1.0, 3.7).unwrap();
    let opts = CdOptions::default();
    let grid = default_grid(&d, &spec, &w, &opts, 10, 1e-2).unwrap();
    // Unsorted input is accepted and reported descending.
    let mut shuffled = grid.clone();
    shuffled.reverse();
    let cv = kfold_cv(&d, &spec, &w, &shuffled, 4, 3, &opts).unwrap();
    assert_eq!(cv.grid, grid);
    assert!(cv.r_1se >= cv.r_min);
    assert_abs_diff_eq!(cv.r_selected, (cv.r_min * cv.r_1se).sqrt(), epsilon = 1e-15);
    assert_eq!(cv, kfold_cv(&d, &spec, &w, &grid, 4, 3, &opts).unwrap());

    assert!(kfold_cv(&d, &spec, &w, &[], 4, 3, &opts).is_err());
    assert!(kfold_cv(&d, &spec, &w, &[1.0, -1.0], 4, 3, &opts).is_err());
    assert!(kfold_cv(&d, &spec, &w, &grid, 1, 3, &opts).is_err());
    assert!(kfold_cv(&d, &spec, &w, &grid, 51, 3, &opts).is_err());
}
