use super::*;
use crate::geometry::{BoxRegion, DeltaCover};
use crate::oracle::{brute_force_invariant, rasterize, OracleOptions};
use crate::scenario::{toy_shift, toy_shrink, toy_threshold, toy_two_basins, ActionSet, ScenarioSystem};

fn hyper(delta0: f64, delta_min: f64, k: usize, n: u64) -> Hyper {
    Hyper { epsilon: 0.01, beta: 0.1, delta0, gamma: 0.5, delta_min, k, n }
}

/// Covered part of a 1-D domain as sorted disjoint intervals.
fn intervals(c: &DeltaCover) -> Vec<(f64, f64)> {
    let (lo, hi) = (c.domain().lower()[0], c.domain().upper()[0]);
    let r = c.radius();
    let mut iv: Vec<(f64, f64)> = c.active_centers().map(|x| ((x[0] - r).max(lo), (x[0] + r).min(hi))).collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1e-9 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn covers(iv: &[(f64, f64)], a: f64, b: f64) -> bool {
    iv.iter().any(|(x, y)| *x <= a + 1e-9 && *y >= b - 1e-9)
}

fn covered_len(iv: &[(f64, f64)], a: f64, b: f64) -> f64 {
    iv.iter().map(|(x, y)| (y.min(b) - x.max(a)).max(0.0)).sum()
}

fn touches(iv: &[(f64, f64)], a: f64, b: f64) -> bool {
    iv.iter().any(|(x, y)| *x < b - 1e-9 && *y > a + 1e-9)
}

fn spe(sys: &ScenarioSystem, h: &Hyper, seed: u64) -> QuantOutcome {
    quantify_spe(sys, sys.state_box(), sys.actions(), h, &SpeOptions::default(), seed).unwrap()
}

#[test]
fn spe_threshold_recovers_upper_part() {
    let sys = toy_threshold();
    for seed in 0..5 {
        let out = spe(&sys, &hyper(2.0, 0.25, 5, 200_000), seed);
        assert!(out.report.converged);
        assert_eq!(out.report.final_delta, 0.25);
        let w = 2.0 * out.report.final_delta;
        let iv = intervals(&out.cover);
        assert!(covers(&iv, 1.0 + w, 10.0), "{iv:?}");
        assert!(!touches(&iv, 0.0, 1.0 - w), "{iv:?}");
    }
}

#[test]
fn spe_two_basins_finds_both() {
    let sys = toy_two_basins();
    for seed in 0..5 {
        let out = spe(&sys, &hyper(2.0, 0.25, 5, 200_000), seed);
        assert!(out.report.converged);
        let w = 2.0 * out.report.final_delta;
        let iv = intervals(&out.cover);
        assert!(covers(&iv, -10.0, -1.0 - w) && covers(&iv, 1.0 + w, 10.0), "{iv:?}");
        assert!(!touches(&iv, -1.0 + w, 1.0 - w), "{iv:?}");
    }
}

#[test]
fn spe_shift_prunes_everything() {
    let sys = toy_shift();
    let out = spe(&sys, &hyper(0.5, 0.5, 8, 100_000), 1);
    assert_eq!(out.report.cell_count, 0);
    assert_eq!(out.report.cost, 0.0);
}

#[test]
fn spe_is_reproducible_per_worker_count() {
    let sys = toy_two_basins();
    let h = hyper(2.0, 0.5, 5, 100_000);
    let run = |workers| {
        let o = SpeOptions { workers, ..Default::default() };
        quantify_spe(&sys, sys.state_box(), sys.actions(), &h, &o, 9).unwrap()
    };
    let (a, b) = (run(1), run(1));
    assert_eq!(a.report, b.report);
    assert_eq!(a.cover.centers(), b.cover.centers());
    let (c, d) = (run(3), run(3));
    assert_eq!(c.report, d.report);
    assert!(c.report.converged);
}

#[test]
fn spe_warns_about_coarse_start() {
    let sys = toy_threshold();
    let o = SpeOptions { min_feature_volume: Some(0.1), ..Default::default() };
    let out = quantify_spe(&sys, sys.state_box(), sys.actions(), &hyper(2.0, 1.0, 3, 10_000), &o, 0).unwrap();
    assert!(out.report.warnings.iter().any(|w| w.contains("too coarse")));
    let o = SpeOptions { min_feature_volume: Some(5.0), ..Default::default() };
    let out = quantify_spe(&sys, sys.state_box(), sys.actions(), &hyper(2.0, 1.0, 3, 10_000), &o, 0).unwrap();
    assert!(out.report.warnings.is_empty());
}

#[test]
fn spe_budget_is_respected() {
    let sys = toy_two_basins();
    let out = spe(&sys, &hyper(2.0, 0.01, 5, 300), 0);
    assert!(!out.report.converged);
    assert_eq!(out.report.n_fresh_samples, 300);
}

#[test]
fn vanilla_returns_full_box_when_proposed() {
    let sys = toy_shrink(0.1);
    let dom = sys.state_box().clone();
    let out = quantify_vanilla_with(&sys, &dom, sys.actions(), &hyper(0.25, 0.25, 5, 10), 0, |d, _| d.clone()).unwrap();
    assert!(out.report.converged);
    assert_eq!(out.cover.volume(), 2.0);
}

#[test]
fn vanilla_fails_on_shift() {
    let sys = toy_shift();
    for seed in 0..3 {
        let out = quantify_vanilla(&sys, sys.state_box(), sys.actions(), &hyper(0.1, 0.1, 5, 50), seed).unwrap();
        assert!(!out.report.converged);
        assert_eq!(out.report.cell_count, 0);
    }
}

#[test]
fn delta_pruning_over_prunes_threshold() {
    let sys = toy_threshold();
    let h = hyper(0.3, 0.3, 5, 17 * 5 * 4);
    // Fine oracle: cells at 1.05, 1.15 belong to the invariant set.
    let grid = DeltaCover::build(sys.state_box(), 0.05).unwrap();
    let oracle = brute_force_invariant(&sys, &grid, &[vec![0.0]], &[sys.zero_disturbance()], &OracleOptions::default()).unwrap();
    let fine = |x: f64| grid.nearest(&[x]).unwrap().0;
    assert!(oracle.mask[fine(1.05)] && oracle.mask[fine(1.15)] && !oracle.mask[fine(0.95)]);
    for seed in 0..5 {
        let out = quantify_delta_pruning(&sys, sys.state_box(), sys.actions(), &h, seed).unwrap();
        assert!(out.cover.centers().iter().any(|c| (c[0] - 0.9).abs() < 1e-9));
        let got = rasterize(&out.cover, &grid);
        let lost = (0..grid.len()).filter(|&i| oracle.mask[i] && !got[i]).count();
        assert!(lost >= 1, "seed {seed}");
        assert!(!got[fine(1.05)]);
    }
}

#[test]
fn delta_pruning_keeps_shrink_and_clears_shift() {
    let sys = toy_shrink(0.1);
    let out = quantify_delta_pruning(&sys, sys.state_box(), sys.actions(), &hyper(0.25, 0.25, 5, 400), 0).unwrap();
    assert_eq!(out.report.n_pruned, 0);
    let sys = toy_shift();
    let cells = DeltaCover::build(sys.state_box(), 0.25).unwrap().len() as u64;
    let out = quantify_delta_pruning(&sys, sys.state_box(), sys.actions(), &hyper(0.25, 0.25, 5, cells * 5), 0).unwrap();
    assert_eq!(out.report.cell_count, 0);
}

#[test]
fn adaptive_stays_in_seeded_basin() {
    let sys = toy_two_basins();
    let o = AdaptiveOptions { forced_seed: Some(vec![5.0]), ..Default::default() };
    for seed in 0..5 {
        let out = quantify_adaptive(&sys, sys.state_box(), sys.actions(), &hyper(1.0, 0.25, 5, 200_000), &o, seed).unwrap();
        assert!(out.report.converged);
        assert!(out.cover.active_centers().all(|c| c[0] >= 1.0));
        // Exploration only adds visited states, so small gaps between cells remain.
        let iv = intervals(&out.cover);
        assert!(covered_len(&iv, 1.0, 10.0) >= 0.95 * 9.0, "{iv:?}");
    }
}

#[test]
fn adaptive_grows_over_shrink() {
    let mut spec = toy_shrink(0.5).spec().clone();
    spec.actions = ActionSet::Box(BoxRegion::new(vec![-0.5], vec![0.5]).unwrap());
    let sys = ScenarioSystem::new(spec).unwrap();
    let small = quantify_adaptive(&sys, sys.state_box(), sys.actions(), &hyper(0.5, 0.125, 5, 5), &AdaptiveOptions::default(), 4).unwrap();
    let big = quantify_adaptive(&sys, sys.state_box(), sys.actions(), &hyper(0.5, 0.125, 5, 200_000), &AdaptiveOptions::default(), 4).unwrap();
    assert!(big.report.converged);
    assert!(big.report.volume >= 0.9 * 2.0, "{}", big.report.volume);
    assert!(small.report.volume <= big.report.volume);
}

#[test]
fn adaptive_flags_shift() {
    let sys = toy_shift();
    let out = quantify_adaptive(&sys, sys.state_box(), sys.actions(), &hyper(0.5, 0.5, 5, 2_000), &AdaptiveOptions::default(), 0).unwrap();
    assert!(!out.report.converged);
    assert_eq!(out.report.cell_count, 0);
    assert!(out.report.restarts > 0);
}
