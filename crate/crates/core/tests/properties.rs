use girs_core::constants::units::{PS, THZ};
use girs_core::graphene::kubo_conductivity;
use girs_core::optimize::{coordinate_search, grid_search, refine};
use girs_core::sweep::{run_preset, run_sweep};
use girs_core::{
    DesignObjective, DesignParameter, Execution, GrapheneParams, ParameterBox, ParameterRange,
    PhysicalConstants, Preset, Scenario, SweepParameter,
};
use proptest::prelude::*;
use std::f64::consts::PI;

const C: PhysicalConstants = PhysicalConstants::CODATA_2018;

fn drude(g: &GrapheneParams, f: f64) -> girs_core::Complex64 {
    let pre = C.electron_charge * C.electron_charge * g.fermi_level
        / (PI * C.reduced_planck * C.reduced_planck);
    let omega = 2.0 * PI * f;
    pre * girs_core::Complex64::i() / (omega + girs_core::Complex64::i() / g.relaxation_time)
}

proptest! {
    #[test]
    fn degenerate_limit_is_drude(ef in 0.6f64..3.0, t in 4.0f64..300.0, tau in 0.5f64..10.0, f in 0.1f64..3.0) {
        let g = GrapheneParams {
            fermi_level: C.ev_to_joule(ef),
            relaxation_time: tau * PS,
            temperature: t,
            ..Scenario::default().graphene
        };
        prop_assume!(g.fermi_level / (C.boltzmann * t) > 20.0);
        let s = kubo_conductivity(&C, &g, f * THZ).unwrap().value();
        let d = drude(&g, f * THZ);
        prop_assert!((s - d).norm() / d.norm() < 1e-8);
    }

    #[test]
    fn doubling_the_period_quarters_the_surface_admittance(w in 10.0f64..25.0, f in 0.1f64..3.0) {
        let mut a = Scenario::default();
        a.set(SweepParameter::PatchWidth, w);
        a.set(SweepParameter::Frequency, f);
        let mut b = a.clone();
        b.geometry.period *= 2.0;
        let ya = a.evaluate().unwrap().reflection.surface_admittance;
        let yb = b.evaluate().unwrap().reflection.surface_admittance;
        prop_assert!((ya / yb - 4.0).norm() < 1e-12);
    }
}

#[test]
fn conductivity_magnitude_trends() {
    let (axes, base) = girs_core::sweep::preset("fig8", 200).unwrap();
    let table = run_sweep(&axes, &base, Execution::Serial).unwrap();
    let mag: Vec<f64> = table
        .rows
        .iter()
        .map(|r| {
            r.outcome
                .as_ref()
                .unwrap()
                .reflection
                .conductivity
                .value()
                .norm()
        })
        .collect();
    for family in mag.chunks(200) {
        assert!(family.windows(2).all(|w| w[1] < w[0]));
    }
    for k in 0..200 {
        assert!(mag[k] < mag[200 + k] && mag[200 + k] < mag[400 + k]);
    }
}

#[test]
fn golden_section_matches_dense_scan() {
    let peak = 0.372_115_3;
    let score = |x: f64| 1.0 - (x - peak).powi(2) * 3.0;
    let tol = 1e-6;
    let r = coordinate_search(&[0.9], &[(0.0, 1.0)], &[tol], |x| Some(score(x[0])));
    let n = 1_000_000;
    let scan = (0..=n)
        .map(|i| i as f64 / n as f64)
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .unwrap();
    assert!((r.point[0] - scan).abs() <= 1.0 / n as f64 + tol);
    assert!((r.point[0] - peak).abs() <= tol);
    assert!(!r.degraded);
}

fn fig3_box() -> ParameterBox {
    let (_, baseline) = girs_core::sweep::preset("fig3", 200).unwrap();
    ParameterBox {
        ranges: vec![
            ParameterRange {
                parameter: DesignParameter::Frequency,
                min: 1.0,
                max: 3.0,
                steps: 3,
            },
            ParameterRange {
                parameter: DesignParameter::FermiLevel,
                min: 0.05,
                max: 2.5,
                steps: 200,
            },
        ],
        baseline,
    }
}

#[test]
fn grid_search_agrees_with_sweep_argmax() {
    let bx = fig3_box();
    let table = run_preset(Preset::Fig3, &bx.baseline, 200, Execution::Parallel).unwrap();
    let (best_row, best_ra) = table
        .rows
        .iter()
        .filter_map(|r| {
            r.outcome
                .as_ref()
                .ok()
                .map(|p| (r, p.reflection.reflection_amplitude))
        })
        .fold(None, |acc: Option<(_, f64)>, (r, ra)| match acc {
            Some((_, b)) if ra <= b => acc,
            _ => Some((r, ra)),
        })
        .unwrap();
    let g = grid_search(&bx, &DesignObjective::MaximizeRa, Execution::Parallel).unwrap();
    assert_eq!(g.point, best_row.coordinates);
    assert_eq!(g.score, best_ra);
    assert_eq!(g.evaluations, 600);

    let r = refine(&g.point, &bx, &DesignObjective::MaximizeRa, &[1e-6, 1e-6]).unwrap();
    assert!(r.score >= g.score);
}

#[test]
fn sweep_axes_match_box_grid() {
    let bx = fig3_box();
    let axes = Preset::Fig3.axes(200);
    for (a, r) in axes.iter().zip(&bx.ranges) {
        assert_eq!(a.values, r.grid());
    }
}
