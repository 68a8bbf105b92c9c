use approx::assert_abs_diff_eq;
use laad::data;
use laad::reserve::*;
use laad::select::{default_grid, kfold_cv, GRID_POINTS, GRID_RATIO};
use laad::Error;
use nalgebra::DVector;

fn setup() -> (Vec<LossTriangle>, ReserveDesign) {
    let tri = data::triangles().unwrap();
    let lr = link_ratios(&tri).unwrap();
    let design = build_design(&lr, 2).unwrap();
    (tri, design)
}

fn r_laad() -> f64 {
    1.005261f64.ln()
}

fn factors(fit: &ReserveFit, line: usize) -> Vec<f64> {
    (2..=10).map(|lag| fit.factors.factor(line, lag).unwrap()).collect()
}

fn assert_all_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "got {got:?}, want {want:?}");
    }
}

#[test]
fn bundled_data_shapes() {
    let (tri, design) = setup();
    assert_eq!(tri.len(), 2);
    assert_eq!(tri[0].line_id(), "GL");
    assert_eq!(tri[1].line_id(), "OC");
    for t in &tri {
        assert_eq!((t.origin_count(), t.dev_count()), (10, 10));
        assert_eq!(t.cells().count(), 55);
    }
    assert_eq!(design.dataset.n(), 90);
    assert_eq!(design.dataset.p(), 18);
    let diag = data::next_diagonal().unwrap();
    assert_eq!(diag.cells.len(), 18);
}

#[test]
fn link_ratio_arithmetic() {
    let (tri, _) = setup();
    let lr = link_ratios(&tri).unwrap();
    assert_eq!(lr.observations.len(), 90);
    let find = |line: usize, ay: usize, lag: usize| {
        lr.observations
            .iter()
            .find(|o| o.line == line && o.accident_year == ay && o.lag == lag)
            .unwrap()
            .value
    };
    assert_abs_diff_eq!(find(0, 1, 2), (146413.0f64 / 87133.0).ln(), epsilon = 1e-15);
    assert_abs_diff_eq!(find(0, 1, 2), 0.51902, epsilon = 5e-5);
    assert!(find(1, 1, 5) < 0.0);
    assert_abs_diff_eq!(find(1, 1, 5), (296073.0f64 / 313632.0).ln(), epsilon = 1e-15);
    // Ordered by line, lag, accident year.
    let keys: Vec<_> = lr.observations.iter().map(|o| (o.line, o.lag, o.accident_year)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn constant_rows_give_zero_ratios() {
    let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![100.0; 4 - i]).collect();
    // from_rows wants rectangular input for a full triangle, so build cells.
    let mut cells = std::collections::BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            cells.insert((i + 1, j + 1), *v);
        }
    }
    let t = LossTriangle::new("A", 4, 4, cells).unwrap();
    let lr = link_ratios(&[t]).unwrap();
    assert_eq!(lr.observations.len(), 6);
    assert!(lr.observations.iter().all(|o| o.value == 0.0));
}

#[test]
fn reconstruction_is_exact() {
    let (tri, _) = setup();
    let lr = link_ratios(&tri).unwrap();
    let first: Vec<Vec<f64>> = tri
        .iter()
        .map(|t| (1..=10).map(|i| t.get(i, 1).unwrap()).collect())
        .collect();
    let back = lr.reconstruct(&first).unwrap();
    for (a, b) in tri.iter().zip(&back) {
        for ((i, j), v) in a.cells() {
            let w = b.get(i, j).unwrap();
            assert!((v - w).abs() <= 1e-9 * v, "({i},{j}) {v} vs {w}");
        }
    }
}

#[test]
fn design_structure() {
    let (_, design) = setup();
    let x = design.dataset.design();
    // Baseline line rows carry exactly one indicator, the η of their lag.
    for (row, obs) in design.rows.iter().enumerate() {
        let ones: Vec<usize> = (0..18).filter(|&j| x[(row, j)] == 1.0).collect();
        let eta = design.column(CoefKind::Eta, obs.lag, None).unwrap();
        if obs.line == 1 {
            assert_eq!(ones, vec![eta]);
        } else {
            let kappa = design.column(CoefKind::Kappa, obs.lag, Some(0)).unwrap();
            assert_eq!(ones, vec![eta, kappa]);
        }
    }
    let exempt = design.exempt_columns();
    assert_eq!(exempt.len(), 2);
    assert!(exempt.contains(&design.column(CoefKind::Eta, 2, None).unwrap()));
    let eta_only = build_design_with(&link_ratios(&data::triangles().unwrap()).unwrap(), 2, Exemption::Eta2).unwrap();
    assert_eq!(eta_only.exempt_columns(), vec![0]);
}

#[test]
fn single_line_design_has_only_eta() {
    let (tri, _) = setup();
    let lr = link_ratios(&tri[..1]).unwrap();
    let design = build_design(&lr, 1).unwrap();
    assert_eq!(design.dataset.p(), 9);
    assert!(design.coef_map.iter().all(|c| c.kind == CoefKind::Eta));
    assert!(build_design(&lr, 2).is_err());
}

#[test]
fn cross_classified_matches_published_fit() {
    let (tri, _) = setup();
    let gl = fit_cross_classified(&tri[0]).unwrap();
    assert_abs_diff_eq!(gl.gamma, 11.382, epsilon = 0.0005);
    assert_abs_diff_eq!(gl.delta[0], 0.789, epsilon = 0.0005);
    assert_abs_diff_eq!(gl.delta[8], 1.936, epsilon = 0.0005);
    assert_abs_diff_eq!(gl.alpha[0], 0.168, epsilon = 0.0005);
    assert_abs_diff_eq!(gl.alpha[2], 0.505, epsilon = 0.0005);
    let oc = fit_cross_classified(&tri[1]).unwrap();
    assert_abs_diff_eq!(oc.gamma, 12.173, epsilon = 0.0005);
    assert_abs_diff_eq!(oc.delta[8], 0.432, epsilon = 0.0005);
    assert_abs_diff_eq!(oc.alpha[8], 0.852, epsilon = 0.0005);

    let one = LossTriangle::from_rows("x", &[vec![42.0]]).unwrap();
    let fit = fit_cross_classified(&one).unwrap();
    assert_abs_diff_eq!(fit.gamma, 42f64.ln(), epsilon = 1e-12);
    assert!(fit.alpha.is_empty() && fit.delta.is_empty());
}

#[test]
fn unconstrained_factors_are_geometric_means() {
    let (tri, design) = setup();
    let fit = fit_reserving(&design, ReserveModel::Unconstrained, None).unwrap();
    for (line, t) in tri.iter().enumerate() {
        for lag in 2..=10 {
            let ratios: Vec<f64> = (1..=11 - lag)
                .map(|i| t.get(i, lag).unwrap() / t.get(i, lag - 1).unwrap())
                .collect();
            let geo = ratios.iter().product::<f64>().powf(1.0 / ratios.len() as f64);
            assert_abs_diff_eq!(fit.factors.factor(line, lag).unwrap(), geo, epsilon = 1e-12);
        }
    }
    assert_all_close(
        &factors(&fit, 0),
        &[2.2022, 1.5681, 1.3108, 1.1723, 1.1569, 1.0465, 1.0512, 1.0106, 1.0147],
        5e-5,
    );
    assert_all_close(
        &factors(&fit, 1),
        &[1.2975, 1.1052, 1.0792, 1.0352, 1.0298, 0.9959, 1.0024, 0.9929, 0.9589],
        5e-5,
    );
}

#[test]
fn best_subset_zero_pattern() {
    let (_, design) = setup();
    let fit = fit_reserving(&design, ReserveModel::Best, None).unwrap();
    for lag in 2..=10 {
        assert_eq!(fit.factors.zeta(0, lag).unwrap() == 0.0, lag >= 7, "GL lag {lag}");
        assert_eq!(fit.factors.zeta(1, lag).unwrap() == 0.0, lag >= 4, "OC lag {lag}");
    }
    assert_abs_diff_eq!(fit.factors.factor(0, 2).unwrap(), 2.3527, epsilon = 5e-5);
    assert_abs_diff_eq!(fit.factors.factor(1, 2).unwrap(), 1.3861, epsilon = 5e-5);
    assert_eq!(fit.factors.factor(0, 9).unwrap(), 1.0);
}

#[test]
fn laad_fixed_strength_factors() {
    let (_, design) = setup();
    let fit = fit_reserving(&design, ReserveModel::Laad, Some(Strength::Fixed(r_laad()))).unwrap();
    assert!(fit.converged);
    assert!(!fit.strength_warning);
    assert_abs_diff_eq!(fit.factors.factor(0, 2).unwrap(), 2.3006, epsilon = 0.02);
    // Lags 3..10 agree with the published table to about 1e-4.
    assert_all_close(
        &factors(&fit, 0)[1..],
        &[1.5433, 1.2875, 1.1493, 1.1321, 1.0209, 1.0215, 1.0, 1.0],
        2e-4,
    );
    assert_all_close(
        &factors(&fit, 1)[1..],
        &[1.0965, 1.0706, 1.0262, 1.0200, 1.0, 1.0, 1.0, 1.0],
        2e-4,
    );
    assert_eq!(fit.factors.factor(1, 7).unwrap(), 1.0);
}

#[test]
fn penalized_models_at_zero_strength_are_unconstrained() {
    let (_, design) = setup();
    let ols = fit_reserving(&design, ReserveModel::Unconstrained, None).unwrap();
    for model in [ReserveModel::Lasso, ReserveModel::Scad, ReserveModel::Mcp, ReserveModel::Laad] {
        let fit = fit_reserving(&design, model, Some(Strength::Fixed(0.0))).unwrap();
        for line in 0..2 {
            assert_all_close(&factors(&fit, line), &factors(&ols, line), 1e-6);
        }
    }
}

#[test]
fn penalized_model_without_strength_is_an_error() {
    let (_, design) = setup();
    assert!(matches!(
        fit_reserving(&design, ReserveModel::Lasso, None),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn unconstrained_predictions_and_metrics() {
    let (tri, design) = setup();
    let fit = fit_reserving(&design, ReserveModel::Unconstrained, None).unwrap();
    let pred = predict_next_diagonal(&tri, &fit.factors).unwrap();
    assert_eq!(pred.rows.len(), 18);
    let gl = pred.total("GL").unwrap();
    assert!((gl / 915_495.0 - 1.0).abs() < 0.001, "GL total {gl}");
    let oc = pred.total("OC").unwrap();
    assert!((oc / 272_051.0 - 1.0).abs() < 0.001, "OC total {oc}");
    let metrics = validate(&pred, &data::next_diagonal().unwrap()).unwrap();
    assert!((metrics[0].rmse / 43_381.92 - 1.0).abs() < 0.001);
    assert!((metrics[0].mae / 27_803.04 - 1.0).abs() < 0.001);
    let actual = actual_totals(&tri, &data::next_diagonal().unwrap());
    assert!((actual[0].1 - 875_659.0).abs() < 5.0);
    assert!((actual[1].1 - 294_690.0).abs() < 5.0);
}

#[test]
fn prediction_identities() {
    let (tri, design) = setup();
    let mut fit = fit_reserving(&design, ReserveModel::Unconstrained, None).unwrap();
    fit.factors.sigma2_hat = 0.0;
    for row in fit.factors.zeta.iter_mut() {
        row.iter_mut().for_each(|z| *z = 0.0);
    }
    let flat = predict_next_diagonal(&tri, &fit.factors).unwrap();
    assert!(flat.rows.iter().all(|r| r.incremental == 0.0));

    let base = fit_reserving(&design, ReserveModel::Laad, Some(Strength::Fixed(r_laad()))).unwrap();
    let low = predict_next_diagonal(&tri, &base.factors).unwrap();
    let mut wider = base.factors.clone();
    wider.sigma2_hat *= 2.0;
    let high = predict_next_diagonal(&tri, &wider).unwrap();
    for (a, b) in low.rows.iter().zip(&high.rows) {
        assert!(b.incremental > a.incremental);
    }

    let perfect = NextDiagonal {
        cells: low
            .rows
            .iter()
            .map(|r| ((r.line.clone(), r.accident_year), r.latest + r.incremental))
            .collect(),
    };
    for m in validate(&low, &perfect).unwrap() {
        assert!(m.rmse < 1e-9 && m.mae < 1e-9);
    }

    let mut short = base.factors.clone();
    short.zeta[0].pop();
    assert!(matches!(
        predict_next_diagonal(&tri, &short),
        Err(Error::InvalidState(_))
    ));
}

#[test]
fn validate_rejects_missing_actuals() {
    let (tri, design) = setup();
    let fit = fit_reserving(&design, ReserveModel::Unconstrained, None).unwrap();
    let pred = predict_next_diagonal(&tri, &fit.factors).unwrap();
    let mut diag = data::next_diagonal().unwrap();
    diag.cells.remove(&("GL".to_string(), 5));
    assert!(validate(&pred, &diag).is_err());
}

#[test]
fn csv_round_trip_is_byte_identical() {
    let mut out = Vec::new();
    write_triangles(&mut out, &data::triangles().unwrap()).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.trim_end(), data::TRIANGLES_CSV.trim_end());
}

#[test]
fn csv_errors_carry_line_numbers() {
    let bad = "line,accident_year,dev_lag,cumulative_loss\nA,1,1,10\nA,1,x,12\n";
    let err = read_triangles(bad.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");

    let dup = "line,accident_year,dev_lag,cumulative_loss\nA,1,1,10\nA,1,1,11\n";
    let err = read_triangles(dup.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 3") && err.contains("duplicate"), "{err}");

    let header = "line,ay,lag,loss\nA,1,1,10\n";
    assert!(read_triangles(header.as_bytes()).unwrap_err().to_string().contains("line 1"));

    let negative = "line,accident_year,dev_lag,cumulative_loss\nA,1,1,10\nA,1,2,-3\nA,2,1,4\n";
    assert!(matches!(read_triangles(negative.as_bytes()), Err(Error::Data(_))));

    let missing = "line,accident_year,dev_lag,cumulative_loss\nA,1,1,10\nA,1,2,12\n";
    assert!(read_triangles(missing.as_bytes()).is_err());
}

#[test]
fn trapezoids_are_supported() {
    // Four accident years, three lags: the oldest two rows are complete.
    let rows = [
        (1, vec![10.0, 15.0, 16.0]),
        (2, vec![11.0, 16.0, 17.0]),
        (3, vec![12.0, 18.0]),
        (4, vec![13.0]),
    ];
    let mut cells = std::collections::BTreeMap::new();
    for (i, row) in &rows {
        for (j, v) in row.iter().enumerate() {
            cells.insert((*i, j + 1), *v);
        }
    }
    let t = LossTriangle::new("T", 4, 3, cells.clone()).unwrap();
    assert_eq!(t.last_lag(1), 3);
    assert_eq!(t.last_lag(3), 2);
    let lr = link_ratios(std::slice::from_ref(&t)).unwrap();
    assert_eq!(lr.observations.len(), 5);

    let fit = fit_reserving(&build_design(&lr, 1).unwrap(), ReserveModel::Unconstrained, None).unwrap();
    let pred = predict_next_diagonal(&[t], &fit.factors).unwrap();
    // Rows already at the last lag have nothing to predict.
    assert_eq!(
        pred.rows.iter().map(|r| r.accident_year).collect::<Vec<_>>(),
        vec![3, 4]
    );

    cells.insert((1, 4), 20.0);
    assert!(LossTriangle::new("T", 4, 3, cells).is_err());
}

#[test]
fn design_rejects_mismatched_lines() {
    let (tri, _) = setup();
    let lr = link_ratios(&tri).unwrap();
    assert!(build_design(&lr, 3).is_err());
    assert!(build_design(&lr, 0).is_err());
}

#[test]
fn cv_on_reserving_data_picks_a_comparable_strength() {
    let (_, design) = setup();
    let opts = ReserveOptions::default();
    let template = opts.penalty(ReserveModel::Laad, 1.0).unwrap().unwrap();
    let grid = default_grid(&design.dataset, &template, &design.weights, &opts.cd, GRID_POINTS, GRID_RATIO).unwrap();
    let cv = kfold_cv(&design.dataset, &template, &design.weights, &grid, 5, 2012, &opts.cd).unwrap();
    let target = r_laad();
    assert!(
        cv.r_selected > target / 5.0 && cv.r_selected < target * 5.0,
        "r_selected {}",
        cv.r_selected
    );
    assert!(cv.r_1se >= cv.r_min);

    let fit = fit_reserving(&design, ReserveModel::Laad, Some(Strength::Cv { k: 5, seed: 2012 })).unwrap();
    assert_eq!(fit.strength, Some(cv.r_selected));
    assert_eq!(fit.cv.unwrap().r_selected, cv.r_selected);
}

#[test]
fn with_response_keeps_structure() {
    let (_, design) = setup();
    let shifted = design
        .with_response(design.dataset.response() + DVector::repeat(90, 0.1))
        .unwrap();
    assert_eq!(shifted.weights, design.weights);
    let a = fit_reserving(&design, ReserveModel::Unconstrained, None).unwrap();
    let b = fit_reserving(&shifted, ReserveModel::Unconstrained, None).unwrap();
    for lag in 2..=10 {
        assert_abs_diff_eq!(
            b.factors.zeta(1, lag).unwrap(),
            a.factors.zeta(1, lag).unwrap() + 0.1,
            epsilon = 1e-12
        );
    }
}
